"""Printed invariants of the worker/controller example, in model syntax."""

CI_CTRL = "ctrl@lc0 and ctrl.x >= 0 or ctrl@lc1 and 4 >= ctrl.x >= 0 or ctrl@lc2 and ctrl.x >= 0"
CI_W1 = "w1@l1 and w1.y >= 0 or w1@l2 and w1.y >= 4"
II_1 = "(w1@l1 or ctrl@lc2) and (w1@l2 or ctrl@lc0 or ctrl@lc1)"

CI_CTRL_H1 = """
   ctrl@lc0 and ctrl.x = h0 and h0 < ctrl.h_a and h0 < ctrl.h_c
or ctrl@lc1 and ctrl.x <= h0 - 4 and ctrl.x <= 4 and h0 < ctrl.h_a and h0 < ctrl.h_c
or ctrl@lc1 and ctrl.x <= 4 and ctrl.x = ctrl.h_c and ctrl.h_c <= ctrl.h_a and ctrl.h_a <= h0 - 8
or ctrl@lc2 and ctrl.x <= h0 - 8 and ctrl.h_a = ctrl.x and h0 < ctrl.h_c
or ctrl@lc2 and ctrl.x = ctrl.h_a and ctrl.h_c = ctrl.h_a + 4 and ctrl.h_a + 4 <= h0 - 8
"""

CI_W1_H1 = """
   w1@l1 and w1.y = h0 and h0 < w1.h_d and h0 < w1.h_b
or w1@l1 and w1.y = w1.h_d and w1.h_d <= w1.h_b and w1.h_b <= h0 - 4
or w1@l2 and w1.h_b + 4 <= w1.y and w1.y = h0 and h0 < w1.h_d
or w1@l2 and w1.y = w1.h_d and w1.h_d <= h0 - 4 and w1.h_b <= w1.h_d - 4
"""

PHI_1 = """
   w1@l1 and ctrl@lc0 and ctrl.x = w1.y
or w1@l1 and ctrl@lc1 and (w1.y = ctrl.x or ctrl.x + 4 <= w1.y)
or w1@l2 and ctrl@lc2 and (w1.y = ctrl.x + 4 or ctrl.x + 8 <= w1.y)
"""

II_2 = ("(w1@l1 or ctrl@lc1 or ctrl@lc2) and (w2@l1 or ctrl@lc1 or ctrl@lc2) and (ctrl@lc2 or w1@l1 or w2@l1)"
        " and (ctrl@lc0 or ctrl@lc1 or w1@l2 or w2@l2)")

CI_CTRL_H2 = """
   ctrl@lc0 and ctrl.x = h0 and h0 < ctrl.h_a and h0 < ctrl.h_c
or ctrl@lc1 and ctrl.x <= h0 - 8 and ctrl.x <= 4 and h0 < ctrl.h_a and h0 < ctrl.h_c
or ctrl@lc1 and ctrl.x <= 4 and ctrl.x = ctrl.h_c and ctrl.h_c <= ctrl.h_a and ctrl.h_a <= h0 - 12
or ctrl@lc2 and ctrl.x <= h0 - 12 and ctrl.h_a = ctrl.x and h0 < ctrl.h_c
or ctrl@lc2 and ctrl.x = ctrl.h_a and ctrl.h_c = ctrl.h_a + 4 and ctrl.h_a + 4 <= h0 - 12
"""

# the third disjunct as printed bounds y from below only; the first-visit
# state of l2 always has y = h0 (compare the one-worker version)
CI_W_H2_PRINTED = """
   w1@l1 and w1.y = h0 and h0 < w1.h_d and h0 < w1.h_b
or w1@l1 and w1.y = w1.h_d and w1.h_d <= w1.h_b and w1.h_b <= h0 - 8
or w1@l2 and w1.y >= w1.h_b + 8 and w1.h_b + 8 <= h0 and h0 < w1.h_d
or w1@l2 and w1.y = w1.h_d and w1.h_d <= h0 - 8 and w1.h_b <= w1.h_d - 8
"""
CI_W_H2 = CI_W_H2_PRINTED.replace("w1.y >= w1.h_b + 8 and w1.h_b + 8 <= h0", "w1.h_b + 8 <= w1.y and w1.y = h0")
