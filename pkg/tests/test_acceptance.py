"""The ten acceptance criteria, each timed against its runtime bound.

Every test prints one PASS/FAIL line; the lines are also collected into an
"acceptance criteria" section of the pytest terminal summary.
"""

import random
import time

from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ACCEPTANCE_LINES
from varschouten import reference as ref
from varschouten.brackets import bv_laplacian, check_zimes, jacobiator, schouten_old
from varschouten.calculus import euler, total_derivative, variational_derivatives
from varschouten.cohomology import find_primitive, is_exact
from varschouten.dsl import parse_expression, parse_functional, render_expression
from varschouten.expr import JetVariable, MultiIndex, partial, restrict_diagonal
from varschouten.geometric import (
    canonicalize_composite,
    distinct_signatures,
    evaluate_terminal,
    geometric_bracket,
    jacobi_expansion,
    jacobiator_geometric,
    lift,
)
from varschouten.samples import random_density, random_functional
from strategies import densities, functionals, jet_variables, mixed_expressions

Q = JetVariable(False, 1, MultiIndex())
QD = JetVariable(True, 1, MultiIndex())
PROPERTY_CASES = 100


def congruent(a, b, base="x"):
    """``a ≅ b``: the difference has vanishing Euler operators and a primitive."""
    d = a - b
    if not is_exact(d, base).is_trivial:
        return False
    return total_derivative(find_primitive(d, base), base) == d


def criterion(number, name, bound, check):
    start = time.perf_counter()
    try:
        detail, ok = check(), True
    except AssertionError as exc:
        detail, ok = f"failed: {exc}", False
    elapsed = time.perf_counter() - start
    in_time = elapsed < bound
    status = "PASS" if ok and in_time else "FAIL"
    line = f"{status} [{number:>2}] {name}: {elapsed:.2f}s (bound {bound:g}s); {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line
    assert in_time, line


def test_01_golden_brackets():
    F, G, H = ref.functionals()

    def check():
        for label, a, b, src in [("[F,G]", F, G, ref.BRACKET_FG), ("[G,H]", G, H, ref.BRACKET_GH),
                                 ("[F,H]", F, H, ref.BRACKET_FH)]:
            start = time.perf_counter()
            value = schouten_old(a, b).density
            elapsed = time.perf_counter() - start
            assert value == parse_expression(src), f"{label} differs"
            assert elapsed < 1.0, f"{label} took {elapsed:.2f}s"
        return "3 of 3 exact, each under 1s"

    criterion(1, "golden brackets", 3.0, check)


def test_02_euler_table():
    f, h = parse_expression("qd*q*q_xx"), parse_expression("qd_xx*cos(q)")

    def check():
        assert euler(f, False) == parse_expression("2*qd*q_xx + 2*qd_x*q_x + qd_xx*q")
        assert euler(h, True) == parse_expression("-q_xx*sin(q) - q_x^2*cos(q)")
        assert euler(f, True) == parse_expression("q*q_xx")
        assert euler(h, False) == parse_expression("-qd_xx*sin(q)")
        return "4 of 4 exact"

    criterion(2, "counterexample Euler table", 1.0, check)


def test_03_laplacian_shortcut():
    F, _, H = ref.functionals()
    zero = parse_expression("0")

    def check():
        assert congruent(bv_laplacian(F).density, zero), "Laplacian of F"
        assert congruent(bv_laplacian(H).density, zero), "Laplacian of H"
        rng = random.Random(31)
        for n in range(50):
            K = random_functional(rng, rng.randint(1, 2))
            assert congruent(bv_laplacian(K).density, partial(partial(K.density, QD), Q)), f"case {n}"
        return "F, H and 50 random functionals"

    criterion(3, "naive Laplacian shortcut", 5.0, check)


def test_04_laplacian_not_a_derivation():
    F, _, H = ref.functionals()

    def check():
        r = check_zimes(F, H)
        assert not r.rhs_density, "rhs is nonzero"
        assert congruent(r.lhs_density, parse_expression("-2*(q_xx^2*cos(q) - q_x^2*q_xx*sin(q))"))
        assert not variational_derivatives(r.lhs_density).vanishes()
        assert r.cohomologically_equal is False
        return "rhs = 0, lhs matches, verdict not equal"

    criterion(4, "Laplacian fails the derivation rule on (F,H)", 2.0, check)


def test_05_single_base_residual():
    def check():
        d = jacobiator(*ref.functionals(), mode="single").density
        eul = variational_derivatives(d)
        assert not eul[(False, 1)] and not eul[(True, 1)], "Euler operators do not vanish"
        target = -total_derivative(ref.residual_primitive(), "x")
        assert congruent(d, target)
        eta = find_primitive(d, "x")
        assert total_derivative(eta, "x") == d
        return f"{len(d)} terms; exact match with the reference form: {d == target}"

    criterion(5, "single-base Jacobi residual", 30.0, check)


def test_06_multibase_residual():
    def check():
        single = jacobiator(*ref.functionals()).density
        multi = jacobiator(*ref.multibase_functionals(), mode="multibase").density
        diag = restrict_diagonal(multi, "x")
        assert congruent(diag, single), "diagonal differs from single-base residual"
        assert congruent(diag, -total_derivative(ref.residual_primitive(), "x"))
        expected = ref.multibase_residual()
        stretch = multi == expected
        diff = "" if stretch else f", {len(multi - expected)} differing terms"
        return f"{len(multi)} mixed terms; stretch exact match: {stretch}{diff}"

    criterion(6, "multi-base Jacobi residual", 60.0, check)


def test_07_geometric_jacobi():
    def check():
        F, G, H = ref.functionals()
        assert not jacobiator_geometric(F, G, H), "Jacobiator is not empty"
        lhs, first, second = jacobi_expansion(F, G, H)
        rhs = first + second
        assert len(lhs) == 8, f"lhs has {len(lhs)} terms"
        assert distinct_signatures(rhs) == 14, f"rhs has {distinct_signatures(rhs)} terms"
        assert len(canonicalize_composite(rhs)) == 8
        return "empty; lhs 8, rhs 14 before and 8 after cancellation"

    criterion(7, "geometric Jacobi identity", 5.0, check)


def test_08_terminal_evaluation():
    def check():
        F, G, H = ref.functionals()
        pairs = [(F, G), (G, H), (F, H)]
        rng = random.Random(8)
        pairs += [(random_functional(rng, 1), random_functional(rng, 1)) for _ in range(50)]
        for n, (a, b) in enumerate(pairs):
            got = evaluate_terminal(geometric_bracket(lift(a), lift(b)), "x")
            assert got == schouten_old(a, b).density, f"pair {n}"
        return f"{len(pairs)} of {len(pairs)} exact"

    criterion(8, "terminal evaluation matches the old bracket", 10.0, check)


def test_09_properties():
    counts = {}

    def prop(name, *strategies_, n=PROPERTY_CASES):
        def wrap(fn):
            counts[name] = 0

            @settings(max_examples=n, database=None, derandomize=True)
            @given(st.tuples(*strategies_))
            def run(args):
                counts[name] += 1
                fn(*args)

            return run
        return wrap

    @prop("Euler kills total derivatives", mixed_expressions(), st.sampled_from(["x", "y"]))
    def euler_d(e, label):
        assert variational_derivatives(total_derivative(e, label)).vanishes()

    @prop("graded commutativity", st.integers(0, 2), st.integers(0, 2), st.data())
    def commutativity(da, db, data):
        a = data.draw(densities(da, labels=("x", "y")))
        b = data.draw(densities(db, labels=("x", "y")))
        assert a * b == (b * a).scale(-1 if da * db % 2 else 1)

    @prop("associativity", mixed_expressions(), mixed_expressions(), mixed_expressions())
    def associativity(a, b, c):
        assert (a * b) * c == a * (b * c)

    @prop("left/right sign lemma", st.integers(1, 3), st.data())
    def sign_lemma(degree, data):
        F = data.draw(densities(degree))
        v = data.draw(jet_variables(True, 2))
        assert partial(F, v, "left") == partial(F, v, "right").scale(-1 if (degree - 1) % 2 else 1)

    @prop("primitive round trip", densities())
    def round_trip(e):
        d = total_derivative(e, "x")
        assert total_derivative(find_primitive(d, "x"), "x") == d

    @prop("shifted antisymmetry", st.integers(0, 2), st.integers(0, 2), st.data())
    def antisymmetry(a, b, data):
        F, G = data.draw(functionals(a, max_terms=2)), data.draw(functionals(b, max_terms=2))
        eps = -1 if ((a - 1) * (b - 1)) & 1 else 1
        total = schouten_old(F, G).density + schouten_old(G, F).density.scale(eps)
        assert variational_derivatives(total).vanishes()

    @prop("geometric Jacobiator empty", functionals(1, max_terms=2), functionals(1, max_terms=2),
          functionals(1, max_terms=2), n=25)
    def geometric(F, G, H):
        assert not jacobiator_geometric(F, G, H)

    runs = [euler_d, commutativity, associativity, sign_lemma, round_trip, antisymmetry, geometric]

    def check():
        for run in runs:
            run()
        need = {name: (25 if name.startswith("geometric") else PROPERTY_CASES) for name in counts}
        short = [name for name, c in counts.items() if c < need[name]]
        assert not short, f"too few cases: {short}"
        return ", ".join(f"{name} x{c}" for name, c in counts.items())

    criterion(9, "property suites", 120.0, check)


def test_10_dsl_round_trip():
    def check():
        rng = random.Random(10)
        for n in range(200):
            e = random_density(rng, rng.randint(0, 2), terms=4)
            assert parse_expression(render_expression(e)) == e, f"case {n}"
        F, G, H = (parse_functional(s) for s in (ref.F_SOURCE, ref.G_SOURCE, ref.H_SOURCE))
        assert F.density == parse_expression("qd*q*q_xx") and F.base == "x"
        assert G.density == parse_expression("qd_x*exp(q_x)")
        assert H.density == parse_expression("qd_xx*cos(q)")
        return "200 random expressions; example functionals parse"

    criterion(10, "DSL round trip", 5.0, check)
