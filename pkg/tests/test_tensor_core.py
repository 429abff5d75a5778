import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvlab.errors import DomainError
from curvlab.tensor_core import (
    AlgebraicCurvature,
    SecondFundamentalForm,
    Signature,
    SymTwoTensor,
    change_frame,
    constant_curvature,
    cyclic_sum,
    generalized_delta,
    permutation_sign,
    project_curvature,
    random_curvature,
    random_frame_rotation,
    symmetry_residual,
)


class TestSignature:
    def test_counts(self):
        sig = Signature((-1, 1, 1, -1))
        assert (sig.p, sig.q, sig.dim) == (2, 2, 4)

    def test_from_pq_orders_timelike_first(self):
        assert Signature.from_pq(1, 2).signs == (-1, 1, 1)

    @pytest.mark.parametrize("bad", [(), (0, 1), (2,), (1, -2)])
    def test_rejects_invalid(self, bad):
        with pytest.raises(DomainError):
            Signature(bad)

    def test_drop_first(self):
        assert Signature((-1, 1, 1)).drop_first().signs == (1, 1)


class TestGeneralizedDelta:
    @pytest.mark.parametrize(
        "signs, upper, lower, expected",
        [
            ((1, 1), (1, 2), (1, 2), 1),
            ((1, 1), (1, 2), (2, 1), -1),
            ((1, 1), (1, 1), (1, 1), 0),
            ((-1, 1), (1, 2), (1, 2), -1),
            ((1, 1, 1), (1, 2), (1, 3), 0),
            ((-1, -1, 1), (1, 2, 3), (2, 3, 1), 1),
            ((1,), (), (), 1),
        ],
    )
    def test_examples(self, signs, upper, lower, expected):
        assert generalized_delta(signs, upper, lower) == expected

    @pytest.mark.parametrize("upper, lower", [((0,), (0,)), ((3,), (3,)), ((1, 2), (1,))])
    def test_out_of_range(self, upper, lower):
        with pytest.raises(DomainError):
            generalized_delta((1, 1), upper, lower)

    @settings(max_examples=200, deadline=None)
    @given(st.data())
    def test_transpose_symmetry_and_transposition_sign(self, data):
        m = data.draw(st.integers(1, 5))
        signs = data.draw(st.lists(st.sampled_from((-1, 1)), min_size=m, max_size=m))
        n = data.draw(st.integers(0, m))
        idx = st.lists(st.integers(1, m), min_size=n, max_size=n)
        upper, lower = data.draw(idx), data.draw(idx)
        d = generalized_delta(signs, upper, lower)
        assert d == generalized_delta(signs, lower, upper)
        if n >= 2:
            swapped = list(upper)
            swapped[0], swapped[1] = swapped[1], swapped[0]
            assert generalized_delta(signs, swapped, lower) == -d

    def test_matches_determinant_definition(self):
        signs = (-1, 1, 1, -1)
        eta = np.diag(signs).astype(float)
        for upper in itertools.permutations(range(1, 5), 3):
            for lower in itertools.product(range(1, 5), repeat=3):
                det = np.linalg.det(eta[np.ix_([u - 1 for u in upper], [v - 1 for v in lower])])
                assert generalized_delta(signs, upper, lower) == round(det)


@pytest.mark.parametrize("perm, sign", [((0, 1, 2), 1), ((1, 0, 2), -1), ((1, 2, 0), 1), ((3, 1, 2, 0), -1)])
def test_permutation_sign(perm, sign):
    assert permutation_sign(perm) == sign


class TestRandomCurvature:
    def test_dim2_single_component(self):
        r = random_curvature(2, 3)
        c = r[1, 2, 1, 2]
        expected = np.zeros((2, 2, 2, 2))
        expected[0, 1, 0, 1] = expected[1, 0, 1, 0] = c
        expected[0, 1, 1, 0] = expected[1, 0, 0, 1] = -c
        assert np.array_equal(r.components, expected)
        assert symmetry_residual(r.components) == 0.0

    @pytest.mark.parametrize("seed", [0, 1, 17])
    def test_dim3_bianchi(self, seed):
        r = random_curvature(3, seed)
        assert abs(r[1, 2, 3, 1] + r[2, 3, 1, 1] + r[3, 1, 2, 1]) <= 1e-13
        assert np.abs(cyclic_sum(r.components)).max() <= 1e-13

    def test_projection_idempotent(self):
        r = random_curvature(4, 7).components
        assert np.abs(project_curvature(r) - r).max() <= 1e-13

    def test_deterministic(self):
        assert random_curvature(5, 11) == random_curvature(5, 11)
        assert random_curvature(5, 11) != random_curvature(5, 12)

    def test_rejects_zero_dim(self):
        with pytest.raises(DomainError):
            random_curvature(0, 1)

    @pytest.mark.parametrize("dim", [1, 2, 3, 4, 5, 6])
    def test_stored_symmetries_exact(self, dim):
        r = random_curvature(dim, dim).components
        assert np.array_equal(r, -r.transpose(1, 0, 2, 3))
        assert np.array_equal(r, -r.transpose(0, 1, 3, 2))
        assert np.array_equal(r, r.transpose(2, 3, 0, 1))


class TestAlgebraicCurvature:
    def test_rejects_bad_shape(self):
        with pytest.raises(DomainError):
            AlgebraicCurvature(np.zeros((2, 2, 2)))

    def test_rejects_broken_symmetry(self):
        r = random_curvature(3, 0).components.copy()
        r[0, 1, 0, 1] += 0.5
        with pytest.raises(DomainError):
            AlgebraicCurvature(r)

    def test_rejects_broken_bianchi(self):
        r = np.zeros((4,) * 4)
        for a, b, c, d in [(0, 1, 2, 3), (1, 0, 3, 2), (2, 3, 0, 1), (3, 2, 1, 0)]:
            r[a, b, c, d] = 1.0
        for a, b, c, d in [(1, 0, 2, 3), (0, 1, 3, 2), (3, 2, 0, 1), (2, 3, 1, 0)]:
            r[a, b, c, d] = -1.0
        with pytest.raises(DomainError):
            AlgebraicCurvature(r)

    def test_immutable(self):
        r = random_curvature(3, 0)
        with pytest.raises(ValueError):
            r.components[0, 1, 0, 1] = 1.0


class TestConstantCurvature:
    def test_unit_sphere_calibration(self):
        r = constant_curvature(2, 1.0)
        assert r[1, 2, 2, 1] == 1.0
        assert r[1, 2, 1, 2] == -1.0
        assert r[2, 1, 1, 2] == 1.0

    def test_flat(self):
        assert not np.any(constant_curvature(4, 0.0).components)

    @pytest.mark.parametrize("signs", [(1, 1, 1), (-1, 1, 1), (-1, -1, 1)])
    def test_space_form_components(self, signs):
        r = constant_curvature(3, 2.0, signs)
        for i, j in itertools.permutations(range(1, 4), 2):
            assert r[i, j, j, i] == 2.0 * signs[i - 1] * signs[j - 1]

    def test_linear_in_kappa(self):
        assert np.array_equal(constant_curvature(2, 3.0).components, 2 * constant_curvature(2, 1.5).components)

    def test_dim3_identity_vanishes(self):
        r = constant_curvature(3, 2.0).components
        tau = np.einsum("ijji->", r)
        rho2 = np.einsum("aija,bijb->", r, r)
        norm2 = np.einsum("ijkl,ijkl->", r, r)
        assert abs(tau * tau - 4 * rho2 + norm2) <= 1e-12

    def test_rejects_dim1(self):
        with pytest.raises(DomainError):
            constant_curvature(1, 1.0)


class TestTwoTensors:
    def test_symmetrized(self):
        t = SymTwoTensor(np.array([[1.0, 2.0], [0.0, 3.0]]))
        assert t[1, 2] == t[2, 1] == 1.0

    def test_second_fundamental_form_indexing(self):
        sff = SecondFundamentalForm(np.diag([1.0, 2.0]))
        assert sff.boundary_dim == 2
        assert sff[2, 2] == 1.0 and sff[3, 3] == 2.0

    def test_rejects_non_square(self):
        with pytest.raises(DomainError):
            SymTwoTensor(np.zeros((2, 3)))


@pytest.mark.parametrize("signs", [(1, 1, 1, 1), (-1, 1, 1, 1), (-1, -1, 1, 1, 1)])
def test_random_frame_rotation_preserves_metric(signs):
    rng = np.random.default_rng(5)
    eta = np.diag(signs).astype(float)
    for _ in range(20):
        o = random_frame_rotation(signs, rng, scale=0.7)
        assert np.abs(o.T @ eta @ o - eta).max() <= 1e-12


def test_change_frame_preserves_symmetries():
    rng = np.random.default_rng(0)
    r = random_curvature(4, 2)
    o = random_frame_rotation((1, 1, 1, 1), rng)
    rotated = AlgebraicCurvature(change_frame(r.components, o), rtol=1e-10)
    back = change_frame(rotated.components, o.T)
    assert np.abs(back - r.components).max() <= 1e-12
