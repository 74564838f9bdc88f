from pathlib import Path

import pytest

from tinv.model import (ModelError, bundled_model_path, compose, load_model, parse_model, print_model,
                        resolve_model)

BUNDLED = sorted(p.stem for p in (Path(bundled_model_path("x")).parent).glob("*.tinv"))

TINY = """
component A
  clock x
  location s initial
  location t tpc x <= 2
  edge s -> t on go guard x >= 1 reset x
  edge t -> s on back
end
component B
  location u initial
  location v
  edge u -> v on go
  edge v -> u on tau
end
system
  instance a A
  instance b B
  interaction g = a.go | b.go
  property p: a@t implies a.x <= 2
end
"""


def test_bundled_models_are_complete():
    expected = {f"worker_controller_{n}" for n in (1, 2, 5)} | {f"tgc_{n}" for n in (1, 3, 10)} \
        | {f"fischer_{n}" for n in (2, 3, 5)} | {f"temp_controller_{n}" for n in (1, 2, 5)} \
        | {"gear_simplified", "pacemaker_simplified"}
    assert expected <= set(BUNDLED)


@pytest.mark.parametrize("name", BUNDLED)
def test_print_parse_round_trip(name):
    m = resolve_model(name)
    text = print_model(m)
    again = parse_model(text, m.name)
    assert print_model(again) == text
    assert again.instances == m.instances and again.interactions == m.interactions


def test_tiny_model_structure():
    m = parse_model(TINY)
    a = m.component_of("a")
    assert a.clocks == ("x",) and a.initial == "s"
    assert a.tpc_of("t")[0].ct == 2
    assert a.actions == ("go", "back")
    assert m.location_domains() == {"a": ("s", "t"), "b": ("u", "v")}
    assert [n for n, _ in m.properties] == ["p"]


def test_default_init_zeroes_clocks():
    a = parse_model(TINY).component_of("a")
    assert [(d.lhs, d.op, d.ct) for d in a.init_constraint] == [("x", "=", 0)]


def test_product_edges():
    p = compose(parse_model(TINY))
    assert p.initial == ("s", "u")
    assert p.clocks == ("a.x",)
    acts = sorted(e.action for e in p.edges)
    # g fires once; back is not in any interaction; tau moves b alone in both locations of a
    assert acts.count("g") == 1 and acts.count("tau") == 2
    g = next(e for e in p.edges if e.action == "g")
    assert g.source == ("s", "u") and g.target == ("t", "v") and g.resets == frozenset({"a.x"})
    assert p.tpc_of(("t", "u"))[0].lhs == "a.x"


def test_load_from_file(tmp_path):
    f = tmp_path / "tiny.tinv"
    f.write_text(TINY)
    m = load_model(f)
    assert m.name == "tiny"
    assert resolve_model(str(f)).instances == m.instances


def _bad(text, fragment, line=None):
    with pytest.raises(ModelError) as e:
        parse_model(text)
    assert fragment in str(e.value)
    if line is not None:
        assert e.value.line == line


def test_errors_carry_line_numbers():
    _bad(TINY.replace("edge s -> t on go", "edge s -> w on go"), "unknown location 'w'", 6)
    _bad(TINY.replace("reset x", "reset y"), "unknown clock 'y'", 6)
    _bad(TINY.replace("tpc x <= 2", "tpc x >= 2"), "upper bounds", 5)
    _bad(TINY.replace("interaction g = a.go | b.go", "interaction g = a.go | b.stop"), "unknown action", 18)
    _bad(TINY.replace("interaction g = a.go | b.go", "interaction g = a.go | a.back"), "appears twice")
    _bad(TINY.replace("a.x <= 2", "a.z <= 2"), "unknown clock 'a.z'", 19)
    _bad(TINY.replace("a@t", "a@q"), "unknown location 'q'")
    _bad(TINY.replace("instance b B", "instance gamma B"), "reserved")
    _bad(TINY.replace("system", "sistem"), "unexpected 'sistem'")
    _bad(TINY.replace("  edge t -> s on back\n", "  edge t -> s\n"), "malformed edge")
    _bad(TINY.replace("  location v\n", "  location v\n  location v\n"), "duplicate location")
    _bad("component A\n  location s initial\nend\n", "missing system block")
    _bad(TINY.replace("a.x <= 2", "a.x <= "), "unexpected end")


def test_history_clocks_in_properties_can_be_refused():
    text = TINY.replace("a.x <= 2", "a.h_go <= h0")
    parse_model(text)
    with pytest.raises(ModelError):
        parse_model(text, allow_history=False)


def test_comments_and_blank_lines():
    m = parse_model("# heading\n" + TINY.replace("  clock x\n", "  clock x  # the clock\n\n"))
    assert m.component_of("a").clocks == ("x",)
