"""Pointwise curvature functionals contracted against the generalized delta.

Four families are provided, all evaluated in an orthonormal frame:

* ``euler_form``              E_{m,n}       (the Pfaffian / Euler form)
* ``interior_el_tensor``      calE_{m,n,ij} (its Euler-Lagrange tensor)
* ``boundary_transgression``  F_{m,n-1,nu} and their sum over nu
* ``boundary_el_tensor``      calF_{m,n-1,nu,ab} and their sum over nu

The fast evaluators expand the delta only over ordered tuples of distinct
indices together with their rearrangements, which are the only non-zero
entries; the resulting term tables are cached per (dimension, signs, shape).
The ``*_bruteforce`` functions instead build the full delta array by calling
:func:`generalized_delta` on every index tuple and contract densely. They are
kept as independent oracles for the fast path.

All functions accept either a single tensor (AlgebraicCurvature, or arrays of
shape (m,m,m,m)) or batches with leading axes.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import permutations, product

import numpy as np

from .errors import DomainError
from .tensor_core import AlgebraicCurvature, SymTwoTensor, as_signature, permutation_sign

_MAX_BLOCK = 2_000_000


def sphere_volume(k: int) -> float:
    """Volume of the unit round sphere S^k, 2 pi^{(k+1)/2} / Gamma((k+1)/2)."""
    if k < 0:
        raise DomainError("sphere dimension must be non-negative")
    return 2.0 * math.pi ** ((k + 1) / 2) / _gamma_half(k + 1)


def _gamma_half(twice: int) -> float:
    """Gamma(twice / 2) for a positive integer ``twice``."""
    if twice % 2 == 0:
        return float(math.factorial(twice // 2 - 1))
    j = (twice - 1) // 2
    return math.factorial(2 * j) * math.sqrt(math.pi) / (4**j * math.factorial(j))


# --------------------------------------------------------------------------
# Term tables
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _term_table(m: int, n_r: int, n_l: int, signs: tuple[int, ...], free: bool):
    """Non-zero terms of a product of curvature and L factors against the delta.

    Slot layout: optional free pair first, then R factors on consecutive slot
    pairs (p, p+1) as R[u_p, u_{p+1}, l_{p+1}, l_p], then L factors on single
    slots as L[u_p, l_p]. Returns (R flat indices (T, n_r), L flat indices
    (T, n_l), coefficients (T,) or (T, m*m)).
    """
    k = (1 if free else 0) + 2 * n_r + n_l
    off = 1 if free else 0
    terms: dict[tuple, np.ndarray | float] = {}
    if k > m:
        empty_r = np.zeros((0, n_r), dtype=np.intp)
        empty_l = np.zeros((0, n_l), dtype=np.intp)
        return empty_r, empty_l, np.zeros((0, m * m) if free else 0)
    perms = [(p, permutation_sign(p)) for p in permutations(range(k))]
    for upper in permutations(range(m), k):
        weight = 1
        for u in upper:
            weight *= signs[u]
        for sigma, sgn in perms:
            lower = [upper[s] for s in sigma]
            r_idx = []
            for f in range(n_r):
                p = off + 2 * f
                i1, i2, j1, j2 = upper[p], upper[p + 1], lower[p], lower[p + 1]
                r_idx.append(((i1 * m + i2) * m + j2) * m + j1)
            l_idx = []
            for f in range(n_l):
                p = off + 2 * n_r + f
                l_idx.append(upper[p] * m + lower[p])
            key = (tuple(sorted(r_idx)), tuple(sorted(l_idx)))
            coeff = sgn * weight
            if free:
                vec = terms.get(key)
                if vec is None:
                    vec = terms[key] = np.zeros(m * m)
                vec[upper[0] * m + lower[0]] += coeff
            else:
                terms[key] = terms.get(key, 0) + coeff
    keys = [key for key, c in terms.items() if np.any(c != 0)]
    r_arr = np.array([key[0] for key in keys], dtype=np.intp).reshape(len(keys), n_r)
    l_arr = np.array([key[1] for key in keys], dtype=np.intp).reshape(len(keys), n_l)
    if free:
        coeffs = np.array([terms[key] for key in keys]).reshape(len(keys), m * m)
    else:
        coeffs = np.array([terms[key] for key in keys], dtype=float)
    return r_arr, l_arr, coeffs


def _contract(r_flat, l_flat, table):
    """Evaluate a cached term table on flattened batches (N, m^4) and (N, m'^2)."""
    r_idx, l_idx, coeffs = table
    n = r_flat.shape[0] if r_flat is not None else l_flat.shape[0]
    t = len(coeffs)
    out_shape = (n,) + coeffs.shape[1:]
    if t == 0:
        return np.zeros(out_shape)
    out = np.empty(out_shape)
    block = max(1, _MAX_BLOCK // max(t, 1))
    for s in range(0, n, block):
        prod_ = np.ones((min(block, n - s), t))
        if r_idx.shape[1]:
            prod_ *= np.prod(r_flat[s : s + block][:, r_idx], axis=2)
        if l_idx.shape[1]:
            prod_ *= np.prod(l_flat[s : s + block][:, l_idx], axis=2)
        out[s : s + block] = prod_ @ coeffs
    return out


def _curvature_array(r):
    if isinstance(r, AlgebraicCurvature):
        return r.components, True
    arr = np.asarray(r, dtype=float)
    if arr.ndim < 4 or len(set(arr.shape[-4:])) != 1:
        raise DomainError(f"curvature must have trailing shape (m,m,m,m), got {arr.shape}")
    return arr, arr.ndim == 4


def _matrix_array(l):
    if isinstance(l, SymTwoTensor):
        return l.components
    return np.asarray(l, dtype=float)


def _check_order(n: int):
    if n < 0:
        raise DomainError("n must be non-negative")


def _check_nu(n: int, nu):
    if n < 1:
        raise DomainError("boundary formulas need n >= 1")
    if nu is not None and not 0 <= 2 * nu <= n - 1:
        raise DomainError(f"nu={nu} violates 0 <= 2 nu <= n-1 = {n - 1}")


def _nus(n: int, nu):
    return [nu] if nu is not None else list(range((n - 1) // 2 + 1))


def _boundary_norm(n: int, nu: int) -> float:
    k = n - 1 - 2 * nu
    return (8 * math.pi) ** nu * math.factorial(nu) * sphere_volume(k) * math.factorial(k)


# --------------------------------------------------------------------------
# Fast evaluators
# --------------------------------------------------------------------------


def euler_form(r, signs, n: int):
    """E_{m,n}: product of n/2 curvature factors against the delta, over (8 pi)^{n/2} (n/2)!.

    Zero for odd n and for n > m; one for n = 0.
    """
    _check_order(n)
    arr, single = _curvature_array(r)
    sig = as_signature(signs)
    m = arr.shape[-1]
    if sig.dim != m:
        raise DomainError("signature length does not match curvature dimension")
    batch = arr.shape[:-4]
    if n % 2 or n > m:
        out = np.zeros(batch)
    elif n == 0:
        out = np.ones(batch)
    else:
        half = n // 2
        table = _term_table(m, half, 0, sig.signs, False)
        flat = arr.reshape(-1, m**4)
        out = _contract(flat, None, table).reshape(batch)
        out /= (8 * math.pi) ** half * math.factorial(half)
    return float(out) if single else out


def interior_el_tensor(r, signs, n: int):
    """calE_{m,n,ij}: as ``euler_form`` but against the delta with one extra free index pair."""
    _check_order(n)
    arr, single = _curvature_array(r)
    sig = as_signature(signs)
    m = arr.shape[-1]
    if sig.dim != m:
        raise DomainError("signature length does not match curvature dimension")
    batch = arr.shape[:-4]
    if n % 2:
        out = np.zeros(batch + (m, m))
    else:
        half = n // 2
        table = _term_table(m, half, 0, sig.signs, True)
        flat = arr.reshape(-1, m**4)
        out = _contract(flat, np.zeros((flat.shape[0], 0)), table).reshape(batch + (m, m))
        out /= (8 * math.pi) ** half * math.factorial(half)
        out = (out + np.swapaxes(out, -1, -2)) / 2
    return SymTwoTensor(out) if single else out


def _boundary(r_tan, l, signs_tan, n, nu, free):
    _check_nu(n, nu)
    arr, single = _curvature_array(r_tan)
    lmat = _matrix_array(l)
    sig = as_signature(signs_tan)
    d = arr.shape[-1]
    if sig.dim != d or lmat.shape[-1] != d:
        raise DomainError("tangential curvature, L and boundary signature dimensions disagree")
    batch = np.broadcast_shapes(arr.shape[:-4], lmat.shape[:-2])
    arr = np.broadcast_to(arr, batch + arr.shape[-4:]).reshape(-1, d**4)
    lflat = np.broadcast_to(lmat, batch + lmat.shape[-2:]).reshape(-1, d * d)
    shape = batch + ((d, d) if free else ())
    total = np.zeros(shape)
    for v in _nus(n, nu):
        n_l = n - 1 - 2 * v
        table = _term_table(d, v, n_l, sig.signs, free)
        val = _contract(arr, lflat, table).reshape(shape)
        total += val / _boundary_norm(n, v)
    if free:
        total = (total + np.swapaxes(total, -1, -2)) / 2
    single = single and lmat.ndim == 2
    if single:
        return SymTwoTensor(total) if free else float(total)
    return total


def boundary_transgression(r_tan, l, signs_tan, n: int, nu: int | None = None):
    """F_{m,n-1,nu} on the boundary, or the sum over 0 <= 2 nu <= n-1 when ``nu`` is None.

    ``r_tan`` holds ambient curvature components with tangential indices only
    (dimension m-1), ``l`` the second fundamental form and ``signs_tan`` the
    signs of the tangential frame.
    """
    return _boundary(r_tan, l, signs_tan, n, nu, False)


def boundary_el_tensor(r_tan, l, signs_tan, n: int, nu: int | None = None):
    """calF_{m,n-1,nu,ab} (or the sum over nu), a symmetric tangential 2-tensor."""
    return _boundary(r_tan, l, signs_tan, n, nu, True)


# --------------------------------------------------------------------------
# Brute-force oracles
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def dense_delta(signs: tuple[int, ...], k: int) -> np.ndarray:
    """Full array delta[u_1..u_k, l_1..l_k] from the determinant det(g(e^{u_mu}, e^{l_nu})).

    Every index tuple is evaluated; determinants of the (0, +-1) matrices
    are rounded to the exact integers they represent.
    """
    m = len(signs)
    if k == 0:
        return np.ones(())
    eta = np.diag(np.asarray(signs, dtype=float))
    lowers = np.array(list(product(range(m), repeat=k)), dtype=int).reshape(-1, k)
    out = np.zeros((m**k, m**k))
    for row, upper in enumerate(product(range(m), repeat=k)):
        # mats[t, mu, nu] = eta[upper[mu], lower_t[nu]]
        mats = eta[np.asarray(upper, dtype=int)][:, lowers].transpose(1, 0, 2)
        out[row] = np.rint(np.linalg.det(mats))
    out = out.reshape((m,) * (2 * k))
    out.setflags(write=False)
    return out


_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def _brute(r, l, sig, n_r, n_l, free):
    k = (1 if free else 0) + 2 * n_r + n_l
    up = _LETTERS[:k]
    lo = _LETTERS[k : 2 * k]
    off = 1 if free else 0
    operands, subs = [], []
    for f in range(n_r):
        p = off + 2 * f
        subs.append(up[p] + up[p + 1] + lo[p + 1] + lo[p])
        operands.append(r)
    for f in range(n_l):
        p = off + 2 * n_r + f
        subs.append(up[p] + lo[p])
        operands.append(l)
    subs.append(up + lo)
    operands.append(dense_delta(sig.signs, k))
    out = (up[0] + lo[0]) if free else ""
    return np.einsum(",".join(subs) + "->" + out, *operands)


def euler_form_bruteforce(r, signs, n: int) -> float:
    arr, _ = _curvature_array(r)
    sig = as_signature(signs)
    if n % 2:
        return 0.0
    half = n // 2
    val = _brute(arr, None, sig, half, 0, False)
    return float(val) / ((8 * math.pi) ** half * math.factorial(half))


def interior_el_tensor_bruteforce(r, signs, n: int) -> np.ndarray:
    arr, _ = _curvature_array(r)
    sig = as_signature(signs)
    m = arr.shape[-1]
    if n % 2:
        return np.zeros((m, m))
    half = n // 2
    return _brute(arr, None, sig, half, 0, True) / ((8 * math.pi) ** half * math.factorial(half))


def _boundary_bruteforce(r_tan, l, signs_tan, n, nu, free):
    _check_nu(n, nu)
    arr, _ = _curvature_array(r_tan)
    lmat = _matrix_array(l)
    sig = as_signature(signs_tan)
    total = 0.0
    for v in _nus(n, nu):
        total = total + _brute(arr, lmat, sig, v, n - 1 - 2 * v, free) / _boundary_norm(n, v)
    return total


def boundary_transgression_bruteforce(r_tan, l, signs_tan, n: int, nu: int | None = None) -> float:
    return float(_boundary_bruteforce(r_tan, l, signs_tan, n, nu, False))


def boundary_el_tensor_bruteforce(r_tan, l, signs_tan, n: int, nu: int | None = None) -> np.ndarray:
    return np.asarray(_boundary_bruteforce(r_tan, l, signs_tan, n, nu, True))
