import json

import pytest

from varschouten import reference as ref
from varschouten.cli import main
from varschouten.dsl import parse_expression


@pytest.fixture
def example_files(tmp_path):
    paths = []
    for name, src in zip("FGH", (ref.F_SOURCE, ref.G_SOURCE, ref.H_SOURCE)):
        p = tmp_path / f"{name}.fun"
        p.write_text(src + "\n")
        paths.append(str(p))
    return paths


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out.strip(), err


def test_bracket_old(capsys, example_files):
    F, G, _ = example_files
    code, out, _ = run(capsys, "bracket", "--mode", "old", F, G)
    assert code == 0
    assert out.startswith("int ") and out.endswith(" dx")
    assert parse_expression(out[4:-3]) == parse_expression(ref.BRACKET_FG)


def test_bracket_geometric(capsys, example_files):
    _, G, H = example_files
    code, out, _ = run(capsys, "bracket", "--mode", "geometric", G, H)
    assert code == 0 and len(out.splitlines()) == 2 and "[-d/dy1]" in out


def test_bracket_multibase(capsys, example_files):
    F, G, _ = example_files
    code, out, _ = run(capsys, "bracket", "--mode", "multibase", F, G)
    assert code == 0 and out.endswith(" dy") and "q_xy" not in out


def test_jacobi_geometric(capsys, example_files):
    code, out, _ = run(capsys, "jacobi", "--mode", "geometric", "--assert", *example_files)
    assert code == 0 and out == "0 (empty composite)"


def test_jacobi_old_assert(capsys, example_files):
    code, out, _ = run(capsys, "jacobi", "--assert", *example_files)
    assert code == 0 and out != "int 0 dx"


def test_jacobi_diagonal(capsys, example_files):
    code, out, _ = run(capsys, "jacobi", "--mode", "multibase", "--diagonal", "--assert", *example_files)
    assert code == 0 and out.endswith(" dx")


def test_exact(capsys):
    code, out, _ = run(capsys, "exact", "int q_x dx")
    assert code == 0 and out == "trivial; primitive: q"


def test_exact_assert_fails(capsys):
    code, out, err = run(capsys, "exact", "--assert", "q_x^2")
    assert code == 1 and out.startswith("nontrivial") and "assertion failed" in err
    code, _, _ = run(capsys, "exact", "q_x^2")
    assert code == 0


def test_primitive(capsys):
    code, out, _ = run(capsys, "primitive", "q_xx*exp(q_x)")
    assert code == 0 and out == "exp(q_x)"
    code, _, err = run(capsys, "primitive", "q_x^2")
    assert code == 1 and "not exact" in err


def test_euler(capsys):
    code, out, _ = run(capsys, "euler", "--field", "qd", "qd_xx*cos(q)")
    assert code == 0
    assert parse_expression(out) == parse_expression(ref.EULER_H_QD)


def test_laplacian(capsys, example_files):
    code, out, _ = run(capsys, "laplacian", example_files[0])
    assert code == 0 and out == "int 2*q_xx dx"


def test_zimes(capsys, example_files):
    F, _, H = example_files
    code, out, _ = run(capsys, "zimes", F, H)
    assert code == 0 and "cohomologically equal: no" in out
    code, _, err = run(capsys, "zimes", "--assert", F, H)
    assert code == 1 and "identity fails" in err


def test_delta2_and_commutator(capsys):
    assert run(capsys, "delta2", "--assert", "int qd*qd_x*q*q_x dx")[0] == 0
    assert run(capsys, "commutator", "--assert", "q", "q_x")[0] == 0


def test_structured_output(capsys, example_files):
    F, G, _ = example_files
    code, out, _ = run(capsys, "bracket", "--output", "structured", F, G)
    doc = json.loads(out)
    assert code == 0
    assert doc["provenance"]["operation"] == "bracket"
    assert len(doc["provenance"]["inputs"]) == 2
    assert doc["value"]["kind"] == "functional"


def test_latex_output(capsys):
    code, out, _ = run(capsys, "euler", "--output", "latex", "qd*q*q_xx")
    assert code == 0 and "q^\\dagger" in out


def test_bare_density_uses_base(capsys):
    code, out, _ = run(capsys, "laplacian", "--base", "y", "qd*q*q_yy")
    assert code == 0 and out == "int 2*q_yy dy"


def test_parse_error_exit(capsys):
    code, _, err = run(capsys, "exact", "int exp(qd) dx")
    assert code == 2 and "parse error" in err
    code, _, err = run(capsys, "exact", "q +")
    assert code == 2 and "1:4" in err


def test_usage_error_exit(capsys):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "bracket", "q")[0] == 2


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "exact", str(tmp_path / "nope.fun"))
    assert code == 2 and "cannot read" in err


def test_suite_verb(capsys):
    code, out, _ = run(capsys, "paper-suite")
    lines = out.splitlines()
    assert code == 0
    assert sum(l.startswith("PASS") for l in lines) == 10
    assert lines[-1] == "10 passed, 0 failed"
