"""Difference bound matrices.

A zone over clocks x1..xn is stored as an (n+1)x(n+1) matrix ``m`` where
``m[i][j]`` bounds ``xi - xj`` and index 0 is the constant zero clock.
Bounds are packed into single integers: ``2*c + 1`` encodes ``<= c`` and
``2*c`` encodes ``< c``, so integer order coincides with bound tightness.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

INF = np.int64(1 << 62)
LE_ZERO = 1
LT_ZERO = 0
MAX_CONST = 1 << 40


class DBMOverflowError(ArithmeticError):
    pass


def bound(c: int, strict: bool = False) -> int:
    c = int(c)
    if abs(c) > MAX_CONST:
        raise DBMOverflowError(f"constant {c} out of range")
    return 2 * c + (0 if strict else 1)


def bound_value(b: int) -> int:
    return int(b) >> 1


def bound_strict(b: int) -> bool:
    return not (int(b) & 1)


def add(a: int, b: int) -> int:
    a, b = int(a), int(b)
    if a >= INF or b >= INF:
        return int(INF)
    return a + b - ((a | b) & 1)


def negate(b: int) -> int:
    """Bound for the complement: not (x <= c) is (-x < -c)."""
    c = bound_value(b)
    return bound(-c, strict=not bound_strict(b))


def _vadd(a, b):
    s = a + b - ((a | b) & 1)
    return np.where((a >= INF) | (b >= INF), INF, s)


def _close(m: np.ndarray) -> bool:
    """Floyd-Warshall in place. Returns False if the zone is empty."""
    n = m.shape[0]
    for k in range(n):
        np.minimum(m, _vadd(m[:, k:k + 1], m[k:k + 1, :]), out=m)
        if m[k, k] < LE_ZERO:
            return False
    if (np.diag(m) < LE_ZERO).any():
        return False
    if (m[m < INF] < -4 * MAX_CONST).any():
        raise DBMOverflowError("bound underflow during closure")
    return True


class DBM:
    """An immutable canonical zone.

    Constructors and operations always return closed matrices; an empty
    zone is flagged and keeps a fixed representation.
    """

    __slots__ = ("m", "empty", "_key")

    def __init__(self, m: np.ndarray, empty: bool = False):
        self.m = m
        self.empty = empty
        self.m.setflags(write=False)
        self._key = None

    @property
    def dim(self) -> int:
        return self.m.shape[0]

    # construction -------------------------------------------------------

    @classmethod
    def universal(cls, dim: int) -> "DBM":
        m = np.full((dim, dim), INF, dtype=np.int64)
        m[0, :] = LE_ZERO
        np.fill_diagonal(m, LE_ZERO)
        return cls(m)

    @classmethod
    def zero(cls, dim: int) -> "DBM":
        return cls(np.full((dim, dim), LE_ZERO, dtype=np.int64))

    @classmethod
    def empty_zone(cls, dim: int) -> "DBM":
        m = np.full((dim, dim), LE_ZERO, dtype=np.int64)
        m[0, 0] = bound(-1)
        return cls(m, empty=True)

    @classmethod
    def from_matrix(cls, m) -> "DBM":
        """Canonicalize an arbitrary (possibly non-closed) matrix."""
        m = np.array(m, dtype=np.int64, copy=True)
        if not _close(m):
            return cls.empty_zone(m.shape[0])
        return cls(m)

    @classmethod
    def from_constraints(cls, dim: int, atoms: Iterable[tuple]) -> "DBM":
        """Zone of a conjunction of ``(i, j, b)`` meaning ``xi - xj`` bounded by b."""
        m = np.array(cls.universal(dim).m)
        for i, j, b in atoms:
            if b < m[i, j]:
                m[i, j] = b
        return cls.from_matrix(m)

    # queries --------------------------------------------------------------

    def is_empty(self) -> bool:
        return self.empty

    def includes(self, other: "DBM") -> bool:
        """True when ``other`` is a subset of ``self``."""
        if other.empty:
            return True
        if self.empty:
            return False
        return bool((other.m <= self.m).all())

    def satisfies(self, i: int, j: int, b: int) -> bool:
        """Is ``xi - xj`` bounded by b somewhere in the zone."""
        if self.empty:
            return False
        return add(b, self.m[j, i]) >= LE_ZERO

    def key(self):
        if self._key is None:
            self._key = (self.empty, self.m.tobytes())
        return self._key

    def __eq__(self, other):
        return isinstance(other, DBM) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def contains_point(self, values: Sequence[float]) -> bool:
        """Membership of a valuation given as (x1, ..., xn)."""
        if self.empty:
            return False
        v = [0.0] + list(values)
        n = self.dim
        for i in range(n):
            for j in range(n):
                b = int(self.m[i, j])
                if b >= INF:
                    continue
                d = v[i] - v[j]
                c = bound_value(b)
                if d > c or (bound_strict(b) and d >= c):
                    return False
        return True

    # operations ---------------------------------------------------------

    def constrain(self, i: int, j: int, b: int) -> "DBM":
        """Intersect with ``xi - xj`` bounded by b, incrementally."""
        if self.empty:
            return self
        b = int(b)
        if add(b, self.m[j, i]) < LE_ZERO:
            return DBM.empty_zone(self.dim)
        if b >= self.m[i, j]:
            return self
        left = _vadd(self.m[:, i], np.int64(b))
        cand = _vadd(left[:, None], self.m[j, :][None, :])
        m = np.minimum(self.m, cand)
        return DBM(m)

    def constrain_all(self, atoms: Iterable[tuple]) -> "DBM":
        z = self
        for i, j, b in atoms:
            z = z.constrain(i, j, b)
            if z.empty:
                break
        return z

    def intersect(self, other: "DBM") -> "DBM":
        if self.empty or other.empty:
            return DBM.empty_zone(self.dim)
        m = np.minimum(self.m, other.m)
        return DBM.from_matrix(m)

    def up(self) -> "DBM":
        if self.empty:
            return self
        m = np.array(self.m)
        m[1:, 0] = INF
        return DBM(m)

    def down(self) -> "DBM":
        if self.empty:
            return self
        m = np.array(self.m)
        low = m[1:, 1:].min(axis=0)
        m[0, 1:] = np.minimum(LE_ZERO, low)
        return DBM.from_matrix(m)

    def reset(self, clocks: Iterable[int]) -> "DBM":
        if self.empty:
            return self
        m = np.array(self.m)
        for x in clocks:
            m[x, :] = m[0, :]
            m[:, x] = m[:, 0]
            m[x, x] = LE_ZERO
        return DBM(m)

    def free(self, clocks: Iterable[int]) -> "DBM":
        """Forget everything about ``clocks`` except non-negativity."""
        if self.empty:
            return self
        m = np.array(self.m)
        for x in clocks:
            m[x, :] = INF
            m[:, x] = m[:, 0]
            m[x, x] = LE_ZERO
            m[0, x] = LE_ZERO
        return DBM(m)

    def inverse_reset(self, clocks: Iterable[int]) -> "DBM":
        """Valuations whose image under resetting ``clocks`` lies in the zone."""
        clocks = list(clocks)
        z = self.constrain_all((x, 0, LE_ZERO) for x in clocks)
        return z.free(clocks)

    def extrapolate(self, maxc: Sequence[Optional[int]], diffcap: int) -> "DBM":
        """Widen bounds beyond the per-clock caps.

        ``maxc[i]`` is the largest constant clock i is compared with, or
        None when it is never compared; ``diffcap`` caps clock differences.
        """
        if self.empty:
            return self
        n = self.dim
        m = np.array(self.m)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                b = int(m[i, j])
                if i == 0:
                    c = maxc[j]
                    if c is None:
                        m[i, j] = LE_ZERO
                    elif b < bound(-c, strict=True):
                        m[i, j] = bound(-c, strict=True)
                    continue
                if j == 0:
                    c = maxc[i]
                    if c is None or (b < INF and b > bound(c)):
                        m[i, j] = INF
                    continue
                if b < INF and b > bound(diffcap):
                    m[i, j] = INF
                elif b < bound(-diffcap, strict=True):
                    m[i, j] = bound(-diffcap, strict=True)
        return DBM.from_matrix(m)

    def project_out(self, clocks: Iterable[int]) -> "DBM":
        """Drop rows and columns of ``clocks`` (exact existential projection)."""
        drop = set(clocks)
        keep = [i for i in range(self.dim) if i not in drop]
        if self.empty:
            return DBM.empty_zone(len(keep))
        return DBM(np.array(self.m[np.ix_(keep, keep)]))

    def embed(self, index_map: Sequence[int], dim: int) -> "DBM":
        """Place this zone into a larger clock space; ``index_map[i]`` is the new index of clock i."""
        if self.empty:
            return DBM.empty_zone(dim)
        m = np.array(DBM.universal(dim).m)
        idx = np.array(index_map)
        m[np.ix_(idx, idx)] = self.m
        return DBM.from_matrix(m)

    # conversion ---------------------------------------------------------

    def constraints(self) -> list:
        """A minimal list of ``(i, j, b)`` atoms whose conjunction is the zone.

        Clocks tied by zero-weight cycles are grouped and linked by an
        equality chain; between groups redundant edges are dropped.
        """
        if self.empty:
            return [(0, 0, bound(-1))]
        n = self.dim
        m = self.m.tolist()
        inf = int(INF)
        rep = list(range(n))
        for i in range(n):
            if rep[i] != i:
                continue
            for j in range(i + 1, n):
                if rep[j] == j and m[i][j] < inf and m[j][i] < inf and add(m[i][j], m[j][i]) == LE_ZERO:
                    rep[j] = i
        out = []
        groups: dict[int, list[int]] = {}
        for i in range(n):
            groups.setdefault(rep[i], []).append(i)
        for members in groups.values():
            for a, b in zip(members, members[1:]):
                out.append((a, b, m[a][b]))
                out.append((b, a, m[b][a]))
        reps = sorted(groups)
        for i in reps:
            for j in reps:
                if i == j or m[i][j] >= inf:
                    continue
                if i == 0 and m[i][j] == LE_ZERO:
                    continue
                redundant = False
                for k in reps:
                    if k == i or k == j:
                        continue
                    if m[i][k] < inf and m[k][j] < inf and add(m[i][k], m[k][j]) <= m[i][j]:
                        redundant = True
                        break
                if not redundant:
                    out.append((i, j, m[i][j]))
        out = [(i, j, b) for i, j, b in out if not (i == 0 and b == LE_ZERO)]
        return out

    def dump(self, names: Sequence[str]) -> str:
        """One line per finite non-trivial bound, sorted."""
        if self.empty:
            return "false"
        lines = []
        n = self.dim
        for i in range(n):
            for j in range(n):
                b = int(self.m[i, j])
                if i == j or b >= INF or (i == 0 and b == LE_ZERO):
                    continue
                op = "<" if bound_strict(b) else "<="
                lines.append(f"{names[i]} - {names[j]} {op} {bound_value(b)}")
        return "\n".join(sorted(lines))

    def __repr__(self):
        names = ["0"] + [f"x{i}" for i in range(1, self.dim)]
        return f"DBM({self.dump(names)!r})"
