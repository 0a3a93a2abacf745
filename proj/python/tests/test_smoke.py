import json
import os
import subprocess

import pytest

import defilab


def test_structures_and_formulas():
    l3 = defilab.linear_order(3)
    assert l3.size == 3
    f = defilab.parse_formula(l3, "exists y. x < y")
    assert f.quantifier_rank == 1
    assert f.free_variables == ["x"]
    assert defilab.sat(l3, f, {"x": 0})
    assert not defilab.sat(l3, f, {"x": 2})
    assert defilab.solution_set(l3, f) == [0, 1]
    text = defilab.print_structure(l3)
    assert defilab.load_structure(text).size == 3


def test_subset_solutions():
    l2 = defilab.linear_order(2)
    psi = defilab.parse_formula(l2, "exists x. A(x) & forall y. (A(y) -> y = x)", ["A"])
    assert defilab.subset_solutions(l2, psi) == [[0], [1]]


def test_field_automorphisms_and_degrees():
    gf4 = defilab.finite_field(2, 2)
    assert defilab.orbits(gf4) == [[0], [1], [2, 3]]
    assert len(defilab.automorphisms(gf4)) == 2
    assert not defilab.is_rigid(gf4)
    degrees = [r["degree"] for r in defilab.classify_elements(gf4)]
    assert degrees == [1, 1, 2, 2]
    assert defilab.element_partition(gf4, 5) == [[0], [1], [2, 3]]


def test_subsets_rank_offset():
    reports = defilab.classify_subsets(defilab.linear_order(2), rank=1)
    flags = [(r["subset"], r["explicit"], r["implicit"], r["degree"]) for r in reports]
    assert flags == [([], True, True, 1), ([0], True, False, 2), ([1], True, False, 2), ([0, 1], True, True, 1)]


def test_all_parameters_collapse():
    for r in defilab.classify_subsets(defilab.directed_cycle(4), params="all"):
        assert r["explicit"] and r["implicit"] and r["degree"] == 1


def test_alg_to_imp_and_pin():
    l2 = defilab.linear_order(2)
    psi = defilab.parse_formula(l2, "exists x. A(x) & forall y. (A(y) -> y = x)", ["A"])
    sentence, added = defilab.alg_to_imp(l2, psi, [0])
    assert added == [0]
    assert "A(@0)" in str(sentence)
    l3 = defilab.linear_order(3)
    pins = defilab.pin_elements(l3, defilab.parse_formula(l3, "x = x"), defilab.parse_formula(l3, "x < y"))
    assert [a for a, _ in pins] == [0, 1, 2]
    for a, f in pins:
        assert defilab.solution_set(l3, f) == [a]


def test_hierarchy_and_codes():
    assert defilab.hf_encode("{{},{{}}}") == 3
    assert defilab.hf_decode(3) == "{{},{{}}}"
    stages = defilab.hierarchy(0, op="imp", steps=3)
    assert [len(s) for s in stages] == [1, 2, 4, 16]
    assert stages[-1] == list(range(16))


def test_errors():
    l2 = defilab.linear_order(2)
    with pytest.raises(defilab.ParseError):
        defilab.parse_formula(l2, "x <")
    with pytest.raises(defilab.Error):
        defilab.load_source("nosuch:1")
    with pytest.raises(defilab.CapExceeded):
        defilab.classify_subsets(defilab.linear_order(30))


def test_run_cli_json():
    code, out, err = defilab.run_cli(["elements", "gf:2,2", "--format", "json"])
    assert code == 0
    report = json.loads(out)
    assert report["schema_version"] == 1
    assert [e["degree"] for e in report["elements"]] == [1, 1, 2, 2]


@pytest.mark.skipif("DEFILAB_CLI" not in os.environ, reason="CLI binary path not provided")
def test_cli_binary_matches_module():
    args = ["subsets", "linord:2", "--rank", "1", "--format", "json"]
    proc = subprocess.run([os.environ["DEFILAB_CLI"], *args], capture_output=True, text=True, check=True)
    assert proc.stdout == defilab.run_cli(args)[1]
