"""Signatures, the generalized Kronecker delta and algebraic curvature tensors.

Indices in the public API are 1-based, as in the usual index notation; the
component arrays themselves are ordinary 0-based numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .errors import DomainError

SYMMETRY_RTOL = 1e-13


@dataclass(frozen=True)
class Signature:
    """Ordered list of frame signs xi_i = g(e_i, e_i) = +-1."""

    signs: tuple[int, ...]

    def __post_init__(self):
        signs = tuple(int(s) for s in self.signs)
        if not signs:
            raise DomainError("a signature needs at least one direction")
        if any(s not in (-1, 1) for s in signs):
            raise DomainError(f"signature entries must be +-1, got {signs}")
        object.__setattr__(self, "signs", signs)

    @classmethod
    def euclidean(cls, m: int) -> "Signature":
        return cls((1,) * m)

    @classmethod
    def from_pq(cls, p: int, q: int) -> "Signature":
        """``p`` timelike directions first, then ``q`` spacelike ones."""
        return cls((-1,) * p + (1,) * q)

    @property
    def dim(self) -> int:
        return len(self.signs)

    @property
    def p(self) -> int:
        return sum(1 for s in self.signs if s < 0)

    @property
    def q(self) -> int:
        return sum(1 for s in self.signs if s > 0)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.signs, dtype=float)

    def drop_first(self) -> "Signature":
        """Signature of the directions 2..m (the boundary directions)."""
        return Signature(self.signs[1:])

    def __len__(self):
        return len(self.signs)

    def __iter__(self):
        return iter(self.signs)


def as_signature(signs) -> Signature:
    if isinstance(signs, Signature):
        return signs
    return Signature(tuple(signs))


def permutation_sign(perm: Sequence[int]) -> int:
    """Sign of a permutation given as a sequence of distinct integers."""
    perm = list(perm)
    sign = 1
    seen = [False] * len(perm)
    order = sorted(range(len(perm)), key=perm.__getitem__)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        k = start
        while not seen[k]:
            seen[k] = True
            k = order[k]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def generalized_delta(signs, upper: Sequence[int], lower: Sequence[int]) -> int:
    """det(g(e^{i_mu}, e^{j_nu})) for orthonormal coframe indices (1-based).

    Returns 0 unless ``lower`` is a rearrangement of ``upper`` with no repeated
    index; otherwise the sign of the rearrangement times the product of the
    frame signs of the indices involved.
    """
    signs = as_signature(signs)
    m = signs.dim
    if len(upper) != len(lower):
        raise DomainError("upper and lower index lists must have equal length")
    for idx in (*upper, *lower):
        if not 1 <= idx <= m:
            raise DomainError(f"index {idx} out of range 1..{m}")
    if len(set(upper)) != len(upper) or sorted(upper) != sorted(lower):
        return 0
    position = {v: k for k, v in enumerate(upper)}
    sign = permutation_sign([position[v] for v in lower])
    for idx in upper:
        sign *= signs.signs[idx - 1]
    return sign


def _antisym_pairs(t: np.ndarray) -> np.ndarray:
    t = (t - np.swapaxes(t, -4, -3)) / 2
    t = (t - np.swapaxes(t, -2, -1)) / 2
    return t


def _pair_exchange(t: np.ndarray) -> np.ndarray:
    return (t + np.moveaxis(t, (-4, -3, -2, -1), (-2, -1, -4, -3))) / 2


def cyclic_sum(t: np.ndarray) -> np.ndarray:
    """B_{ijkl} = T_{ijkl} + T_{jkil} + T_{kijl} over the last four axes."""
    return (
        t
        + np.einsum("...jkil->...ijkl", t)
        + np.einsum("...kijl->...ijkl", t)
    )


def project_curvature(t: np.ndarray) -> np.ndarray:
    """Orthogonal projection of a rank-4 array onto algebraic curvature tensors.

    Antisymmetrize both index pairs, symmetrize under pair exchange, then
    remove a third of the cyclic sum (which is a 4-form at that stage).
    """
    t = _pair_exchange(_antisym_pairs(np.asarray(t, dtype=float)))
    return t - cyclic_sum(t) / 3


def symmetry_residual(components: np.ndarray) -> float:
    """Largest violation of the curvature symmetries, relative to the largest component."""
    r = np.asarray(components, dtype=float)
    scale = max(np.abs(r).max(initial=0.0), np.finfo(float).tiny)
    res = max(
        np.abs(r + np.swapaxes(r, 0, 1)).max(initial=0.0),
        np.abs(r + np.swapaxes(r, 2, 3)).max(initial=0.0),
        np.abs(r - np.transpose(r, (2, 3, 0, 1))).max(initial=0.0),
        np.abs(cyclic_sum(r)).max(initial=0.0),
    )
    return res / scale


@dataclass(frozen=True)
class AlgebraicCurvature:
    """Rank-4 curvature components R_{ijkl} in an orthonormal frame.

    The pair symmetries are imposed exactly on construction. The first Bianchi
    identity is checked against ``rtol`` times the largest component.
    """

    components: np.ndarray
    rtol: float = field(default=SYMMETRY_RTOL, compare=False, repr=False)

    def __post_init__(self):
        r = np.array(self.components, dtype=float)
        if r.ndim != 4 or len(set(r.shape)) != 1 or r.shape[0] < 1:
            raise DomainError(f"curvature components must have shape (m,m,m,m), got {r.shape}")
        canon = _pair_exchange(_antisym_pairs(r))
        scale = max(np.abs(canon).max(initial=0.0), np.finfo(float).tiny)
        if np.abs(canon - r).max(initial=0.0) > self.rtol * scale:
            raise DomainError("components violate R_ijkl = -R_jikl = R_klij")
        if np.abs(cyclic_sum(canon)).max(initial=0.0) > self.rtol * scale:
            raise DomainError("components violate the first Bianchi identity")
        canon.setflags(write=False)
        object.__setattr__(self, "components", canon)

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def __getitem__(self, idx):
        """1-based component access, ``R[1, 2, 2, 1]``."""
        return self.components[tuple(i - 1 for i in idx)]

    def __eq__(self, other):
        if not isinstance(other, AlgebraicCurvature):
            return NotImplemented
        return np.array_equal(self.components, other.components)

    def __hash__(self):
        return hash(self.components.tobytes())

    def scalar_curvature(self, signs=None) -> float:
        xi = np.ones(self.dim) if signs is None else as_signature(signs).array
        return float(np.einsum("ijji,i,j->", self.components, xi, xi))

    def rotated(self, frame_change: np.ndarray) -> "AlgebraicCurvature":
        """Components in the frame e'_i = sum_a O[a, i] e_a."""
        return AlgebraicCurvature(change_frame(self.components, frame_change), rtol=1e-10)


def change_frame(components: np.ndarray, o: np.ndarray) -> np.ndarray:
    """R'_{ijkl} = O_ai O_bj O_ck O_dl R_abcd (batched over leading axes)."""
    return np.einsum("...abcd,...ai,...bj,...ck,...dl->...ijkl", components, o, o, o, o, optimize=True)


def random_curvature(dim: int, seed: int) -> AlgebraicCurvature:
    """Deterministic random algebraic curvature tensor."""
    if dim < 1:
        raise DomainError("dim must be at least 1")
    rng = np.random.default_rng(seed)
    raw = rng.uniform(-1.0, 1.0, size=(dim,) * 4)
    return AlgebraicCurvature(project_curvature(raw))


def constant_curvature(dim: int, kappa: float, signs=None) -> AlgebraicCurvature:
    """Space form curvature R_{ijkl} = kappa (g_jk g_il - g_ik g_jl), so R_{ijji} = kappa xi_i xi_j."""
    if dim < 2:
        raise DomainError("constant curvature needs dim >= 2")
    sig = Signature.euclidean(dim) if signs is None else as_signature(signs)
    if sig.dim != dim:
        raise DomainError("signature length does not match dim")
    g = np.diag(sig.array)
    r = kappa * (np.einsum("jk,il->ijkl", g, g) - np.einsum("ik,jl->ijkl", g, g))
    return AlgebraicCurvature(r)


@dataclass(frozen=True)
class SymTwoTensor:
    """Symmetric 2-tensor components in an orthonormal frame."""

    components: np.ndarray

    def __post_init__(self):
        c = np.array(self.components, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise DomainError(f"expected a square matrix, got shape {c.shape}")
        c = (c + c.T) / 2
        c.setflags(write=False)
        object.__setattr__(self, "components", c)

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def __getitem__(self, idx):
        i, j = idx
        return self.components[i - 1, j - 1]

    def __eq__(self, other):
        if not isinstance(other, SymTwoTensor):
            return NotImplemented
        return np.array_equal(self.components, other.components)

    def __hash__(self):
        return hash(self.components.tobytes())


class SecondFundamentalForm(SymTwoTensor):
    """L_ab on the boundary; tangential indices run over 2..m.

    ``L[a, b]`` uses the ambient numbering, so ``L[2, 2]`` is the first entry.
    """

    @property
    def boundary_dim(self) -> int:
        return self.components.shape[0]

    def __getitem__(self, idx):
        a, b = idx
        return self.components[a - 2, b - 2]


def random_frame_rotation(signs, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random element of the identity component of O(p, q).

    Returns O with O^T diag(xi) O = diag(xi); columns are the new frame vectors
    in terms of the old ones.
    """
    xi = as_signature(signs).array
    m = len(xi)
    a = rng.normal(scale=scale, size=(m, m))
    a = (a - a.T) / 2
    # eta * A antisymmetric <=> A in the Lie algebra of O(p, q)
    gen = np.diag(xi) @ a
    return expm(gen)


def all_permutations(n: int):
    """Permutations of range(n) with their signs, cached by the caller as needed."""
    return [(perm, permutation_sign(perm)) for perm in permutations(range(n))]
