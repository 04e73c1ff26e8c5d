import math
from pathlib import Path

import pytest

import loop2rec

CORPUS = Path(__file__).resolve().parents[2] / "corpus"


def corpus(name):
    return (CORPUS / name).read_text()


def test_transform_sqrt_matches_expected():
    out = loop2rec.transform(corpus("sqrt.mj"))
    assert out == loop2rec.format(corpus("sqrt_expected.mj"))
    assert "while" not in out


def test_run_reports_prints_and_status():
    r = loop2rec.run(corpus("foreach_array.mj"))
    assert r["status"] == "Ok"
    assert r["prints"] == ["sqrt(4) = 2.000000000000002", "sqrt(9) = 3"]
    assert r["error"] is None


def test_budget_and_runtime_errors():
    assert loop2rec.run(corpus("infinite.mj"), budget=1000)["status"] == "StepBudgetExceeded"
    r = loop2rec.run("void main() { int z = 0; int q = 1 / z; }")
    assert r["status"] == "RuntimeError"
    assert r["error"] == "DivisionByZero"


def test_diff_is_equivalent_across_corpus():
    for path in sorted(CORPUS.glob("*.mj")):
        if path.name == "mutates_collection.mj":
            continue
        report = loop2rec.diff(path.read_text(), budget=100_000)
        assert report["verdict"] == "Equivalent", path.name


def test_bindings_and_iterations():
    report = loop2rec.diff(corpus("nested.mj"))
    for loop in report["loops"]:
        assert loop["iterations"] == loop["entries"]


def test_analyze():
    loops = loop2rec.analyze(corpus("two_live.mj"))["loops"]
    assert len(loops) == 1
    assert [v["name"] for v in loops[0]["liveAfter"]] == ["lo", "hi"]


def test_errors_raise():
    with pytest.raises(loop2rec.ParseError):
        loop2rec.transform("void main() { int x = ; }")
    with pytest.raises(loop2rec.SemanticError):
        loop2rec.transform("void main() { x = 1; }")
    with pytest.raises(loop2rec.UnsupportedConstruct):
        loop2rec.transform(corpus("mutates_collection.mj"))
    assert loop2rec.check("void main() { x = 1; }")


def test_fuzz_small_campaign():
    s = loop2rec.fuzz(50, seed=3)
    assert s["total"] == 50
    assert s["equivalent"] == 50
    assert s["mismatches"] == []
    assert loop2rec.fuzz(0)["total"] == 0


def test_generated_programs_are_deterministic():
    assert loop2rec.generate(5) == loop2rec.generate(5)
    assert loop2rec.check(loop2rec.generate(5)) == []


def test_sqrt_value():
    src = corpus("sqrt.mj").split("void main()")[0]
    r = loop2rec.run(src + "void main() { double r = sqrt(16.0); print(r); }")
    assert math.isclose(float(r["prints"][0]), 4.0, abs_tol=1e-6)
