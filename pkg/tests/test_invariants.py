from fractions import Fraction

import pytest

from curvlab.errors import DomainError, PreconditionError
from curvlab.invariants import (
    FormalMonomial,
    FormalPolynomial,
    dimension_row,
    enumerate_admissible,
    enumerate_admissible_bruteforce,
    exchange_check,
    exchange_triples,
    finite_action,
    format_dimension_table,
    in_span,
    infinitesimal_action,
    invariant_subspace,
    is_invariant,
    is_invariant_all_planes,
    polynomial_rank,
    printed_dimension_formula,
    q_count,
    q_polynomial,
    reflect,
    relabel,
    restrict_polynomial,
)

F = Fraction


def mono(dim, l=(), g=(), out=(1, 1)):
    return FormalMonomial(dim, tuple(l), tuple(g), out)


def poly(dim, terms):
    return FormalPolynomial(dim, {m: F(c) for m, c in terms})


class TestMonomials:
    def test_canonical_form(self):
        a = mono(3, l=[(2, 1), (1, 1)], g=[((3, 2), (2, 1))], out=(3, 1))
        assert a.l_factors == ((1, 1), (1, 2))
        assert a.g_factors == (((2, 3), (1, 2)),)
        assert a.output == (1, 3)

    def test_g_pairs_not_interchangeable(self):
        assert mono(4, g=[((1, 2), (3, 4))]) != mono(4, g=[((3, 4), (1, 2))])

    def test_canonicalization_idempotent(self):
        a = mono(4, l=[(3, 1)], g=[((4, 2), (1, 3))], out=(4, 2))
        assert FormalMonomial(a.dim, a.l_factors, a.g_factors, a.output) == a

    def test_degrees(self):
        a = mono(3, l=[(1, 1)], g=[], out=(2, 3))
        assert [a.degree(w) for w in (1, 2, 3)] == [2, 1, 1]
        assert not a.is_admissible()

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            mono(2, l=[(1, 3)])

    def test_text(self):
        assert str(mono(2, l=[(1, 1)], out=(2, 2))) == "L11*e2.e2"


class TestEnumeration:
    def test_dim1(self):
        assert enumerate_admissible(1) == [mono(1, out=(1, 1))]

    def test_dim2(self):
        got = set(enumerate_admissible(2))
        assert got == {mono(2, l=[(1, 1)], out=(2, 2)), mono(2, l=[(2, 2)], out=(1, 1)),
                       mono(2, l=[(1, 2)], out=(1, 2))}

    @pytest.mark.parametrize("dim", [1, 2, 3, 4])
    def test_matches_bruteforce(self, dim):
        assert enumerate_admissible(dim) == enumerate_admissible_bruteforce(dim)

    @pytest.mark.parametrize("dim", [1, 2, 3, 4, 5])
    def test_degree_bookkeeping(self, dim):
        for a in enumerate_admissible(dim):
            assert sum(a.degree(w) for w in range(1, dim + 1)) == 2 * dim
            assert a.ord_l + a.ord_g == dim - 1
            assert a.is_admissible()

    def test_deterministic_order(self):
        items = enumerate_admissible(4)
        assert items == sorted(items)

    def test_filter_by_order(self):
        assert all(a.ord_l == 1 for a in enumerate_admissible(4, k=1))


class TestActions:
    def test_rotation_example(self):
        p = poly(2, [(mono(2, l=[(1, 1)], out=(2, 2)), 1)])
        expected = poly(2, [(mono(2, l=[(1, 2)], out=(2, 2)), 2), (mono(2, l=[(1, 1)], out=(1, 2)), -2)])
        assert infinitesimal_action(1, 2, (1, 1), p) == expected

    def test_determinant_invariant(self):
        # det L = L11 L22 - L12 L12, carried by an output factor the (1,2) rotation does not touch
        det = poly(3, [(mono(3, l=[(1, 1), (2, 2)], out=(3, 3)), 1), (mono(3, l=[(1, 2), (1, 2)], out=(3, 3)), -1)])
        assert infinitesimal_action(1, 2, (1, 1, 1), det).is_zero()
        assert not infinitesimal_action(1, 3, (1, 1, 1), det).is_zero()

    def test_zero(self):
        assert infinitesimal_action(1, 2, (1, 1), FormalPolynomial.zero(2)).is_zero()

    def test_same_index(self):
        with pytest.raises(DomainError):
            infinitesimal_action(1, 1, (1, 1), FormalPolynomial.zero(2))

    def test_boost_sign(self):
        p = poly(2, [(mono(2, l=[(1, 1)], out=(2, 2)), 1)])
        got = infinitesimal_action(1, 2, (-1, 1), p)
        expected = poly(2, [(mono(2, l=[(1, 2)], out=(2, 2)), 2), (mono(2, l=[(1, 1)], out=(1, 2)), 2)])
        assert got == expected

    @pytest.mark.parametrize("signs", [(1, 1, 1), (-1, 1, 1), (-1, -1, 1)])
    @pytest.mark.parametrize("theta", [0.3, 1.0])
    def test_finite_angle_consistency(self, signs, theta):
        for basis_vec in invariant_subspace(3, signs):
            for a, b in [(1, 2), (1, 3), (2, 3)]:
                moved = finite_action(a, b, signs, theta, basis_vec)
                keys = set(moved) | set(basis_vec.terms)
                for m in keys:
                    assert moved.get(m, 0.0) == pytest.approx(float(basis_vec.coefficient(m)), abs=1e-12)


class TestKernel:
    @pytest.mark.parametrize("dim, expected", [(1, 1), (2, 1), (3, 2), (4, 2), (5, 3)])
    def test_dimensions(self, dim, expected):
        assert len(invariant_subspace(dim)) == expected == q_count(dim)

    @pytest.mark.parametrize("dim", [1, 2, 3, 4])
    @pytest.mark.parametrize("kind", ["riemannian", "negative", "lorentzian"])
    def test_orbit_method_matches_full(self, dim, kind):
        signs = {"riemannian": (1,) * dim, "negative": (-1,) * dim, "lorentzian": (-1,) + (1,) * (dim - 1)}[kind]
        fast = invariant_subspace(dim, signs)
        full = invariant_subspace(dim, signs, method="full")
        assert len(fast) == len(full)
        assert all(in_span(p, full) for p in fast)

    @pytest.mark.parametrize("signs", [(1, 1, 1), (-1, 1, 1), (1, -1, 1, 1)])
    def test_basis_invariant_under_all_planes_and_reflections(self, signs):
        for p in invariant_subspace(len(signs), signs):
            assert is_invariant_all_planes(p, signs)
            for a in range(1, len(signs) + 1):
                assert reflect(a, p) == p

    def test_unknown_method(self):
        with pytest.raises(DomainError):
            invariant_subspace(2, method="guess")

    def test_printed_formula(self):
        assert [printed_dimension_formula(m) for m in range(1, 7)] == [1, 2, 2, 3, 3, 4]


class TestQ:
    def test_dim2(self):
        expected = poly(2, [(mono(2, l=[(1, 1)], out=(2, 2)), 1), (mono(2, l=[(2, 2)], out=(1, 1)), 1),
                            (mono(2, l=[(1, 2)], out=(1, 2)), -2)])
        assert q_polynomial(2, 1) == expected

    def test_dim1(self):
        assert q_polynomial(1, 0) == poly(1, [(mono(1), 1)])
        assert q_polynomial(1, 0, (-1,)) == poly(1, [(mono(1), -1)])

    @pytest.mark.parametrize("dim, k", [(2, 0), (3, 1), (3, 3), (2, -1)])
    def test_parity_and_range(self, dim, k):
        with pytest.raises(DomainError):
            q_polynomial(dim, k)

    @pytest.mark.parametrize("signs", [(1, 1, 1, 1), (-1, -1, -1, -1), (-1, 1, 1, 1), (-1, -1, 1, 1)])
    def test_q_invariant_and_independent(self, signs):
        qs = [q_polynomial(4, k, signs) for k in (1, 3)]
        assert all(is_invariant(q, signs) for q in qs)
        assert polynomial_rank(qs) == 2
        basis = invariant_subspace(4, signs)
        assert all(in_span(q, basis) for q in qs)

    def test_relabel_invariance(self):
        q = q_polynomial(3, 2)
        assert relabel(q, {1: 2, 2: 3, 3: 1}) == q


class TestExchange:
    def test_q1_dim2(self):
        report = exchange_check(q_polynomial(2, 1), 1, 2)
        assert report.ok and report.triples_checked > 0

    def test_zero(self):
        assert exchange_check(FormalPolynomial.zero(3), 1, 2).ok

    def test_not_invariant(self):
        with pytest.raises(PreconditionError):
            exchange_check(poly(2, [(mono(2, l=[(1, 1)], out=(2, 2)), 1)]), 1, 2)

    def test_triples_structure(self):
        for c, a, b in exchange_triples(3, 1, 2):
            assert c.degree(1) == 3 and c.degree(2) == 1 and c.touches_itself(1)
            assert a.is_admissible() and b.is_admissible()

    @pytest.mark.parametrize("dim", [2, 3])
    def test_kernel_basis(self, dim):
        for p in invariant_subspace(dim):
            for a in range(1, dim + 1):
                for b in range(1, dim + 1):
                    if a != b:
                        assert exchange_check(p, a, b).ok


class TestRestriction:
    def test_q_restricts_to_zero(self):
        assert restrict_polynomial(q_polynomial(2, 1)).is_zero()

    def test_zero(self):
        assert restrict_polynomial(FormalPolynomial.zero(3)).is_zero()

    def test_diagnostic_polynomial_unchanged(self):
        p = poly(3, [(mono(3, l=[(1, 1)], out=(2, 2)), 3)])
        r = restrict_polynomial(p)
        assert r.dim == 2 and r.coefficient(mono(2, l=[(1, 1)], out=(2, 2))) == 3

    def test_dim1_rejected(self):
        with pytest.raises(DomainError):
            restrict_polynomial(FormalPolynomial.zero(1))


def test_polynomial_arithmetic():
    a = poly(2, [(mono(2, l=[(1, 1)], out=(2, 2)), 1)])
    b = poly(2, [(mono(2, l=[(2, 2)], out=(1, 1)), F(1, 2))])
    assert (a + b - b) == a
    assert (a - a).is_zero()
    assert a.scale(3).coefficient(mono(2, l=[(1, 1)], out=(2, 2))) == 3
    assert (a + b).component(1) == a + b
    assert (a + b).component(0).is_zero()
    assert "L11*e2.e2" in (a + b).to_text()


def test_dimension_table_flags_even_cases():
    rows = [dimension_row(m) for m in (1, 2, 3)]
    assert [r.matches_q_count for r in rows] == [True, True, True]
    assert [r.printed_formula_flag for r in rows] == ["", "DISCREPANCY", ""]
    text = format_dimension_table(rows)
    assert text.splitlines()[2].endswith("DISCREPANCY")
