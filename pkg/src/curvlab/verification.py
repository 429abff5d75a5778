"""Numerical verification harness.

Quadrature is a tensor product of Gauss-Legendre rules on the chart box;
nodes never touch the box faces, so coordinate singularities on the faces
(sphere poles, polar centres) are never sampled. Integrands are evaluated in
chunks of nodes; each chunk is summed with numpy's pairwise summation and
chunk totals are combined with ``math.fsum``, so results do not depend on
the chunk size beyond rounding of individual chunk sums.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import DomainError, PreconditionError
from .expr import evaluate_values
from .functionals import (
    boundary_el_tensor,
    boundary_transgression,
    euler_form,
    interior_el_tensor,
)
from .geometry import (
    Geometry,
    MetricChart,
    _h_expressions,
    evaluate_geometry,
    perturbed,
    product_with_circle,
    upper_triangle,
)
from .tensor_core import as_signature, random_curvature, random_frame_rotation, change_frame

CHUNK = 8192
DEFAULT_FD_STEP = 1e-3

Integrand = Callable[[Geometry], np.ndarray]


# --------------------------------------------------------------------------
# Quadrature
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor-product Gauss-Legendre rule.

    ``order`` is either one order used for every coordinate or a tuple with
    one order per coordinate.
    """

    order: int | tuple[int, ...] = 24
    chunk: int = CHUNK

    def __post_init__(self):
        orders = (self.order,) if isinstance(self.order, int) else tuple(self.order)
        if not orders or any(int(o) < 1 for o in orders):
            raise DomainError("quadrature orders must be positive")

    def orders(self, m: int) -> tuple[int, ...]:
        if isinstance(self.order, int):
            return (self.order,) * m
        if len(self.order) != m:
            raise DomainError(f"rule has {len(self.order)} orders, chart needs {m}")
        return tuple(self.order)

    def axes(self, domain: Sequence[tuple[float, float]]):
        """Per-coordinate (nodes, weights) mapped onto the domain intervals."""
        out = []
        for (lo, hi), order in zip(domain, self.orders(len(domain))):
            x, w = _leggauss(order)
            half = (hi - lo) / 2
            out.append((lo + half * (x + 1), half * w))
        return out

    def _chunks(self, axes, fixed_first: float | None = None) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        sizes = [len(a[0]) for a in axes]
        total = int(np.prod(sizes)) if sizes else 1
        for start in range(0, total, self.chunk):
            flat = np.arange(start, min(start + self.chunk, total))
            idx = np.unravel_index(flat, sizes) if sizes else ()
            cols = [axes[k][0][idx[k]] for k in range(len(axes))]
            weights = np.ones(len(flat))
            for k in range(len(axes)):
                weights = weights * axes[k][1][idx[k]]
            if fixed_first is not None:
                cols = [np.full(len(flat), fixed_first)] + cols
            yield np.stack(cols, axis=1), weights

    def interior(self, chart: MetricChart):
        """Chunks (points (N, m), coordinate weights (N,)) covering the chart box."""
        return self._chunks(self.axes(chart.domain))

    def boundary(self, chart: MetricChart, face: str):
        """Chunks on the given face of coordinate 1."""
        if face not in chart.boundary:
            raise DomainError(f"{chart.name} has no {face} boundary face")
        axes = self.axes(chart.domain)[1:]
        return self._chunks(axes, fixed_first=chart.face_coordinate(face))

    def interior_nodes(self, chart: MetricChart) -> np.ndarray:
        return np.concatenate([x for x, _ in self.interior(chart)])

    def boundary_nodes(self, chart: MetricChart) -> np.ndarray:
        if not chart.boundary:
            return np.zeros((0, chart.dim))
        return np.concatenate([x for face in chart.boundary for x, _ in self.boundary(chart, face)])


def integrate_interior(chart: MetricChart, integrand: Integrand, rule: QuadratureRule) -> float:
    """Sum of integrand * volume element * weights over the interior nodes."""
    parts = []
    for x, w in rule.interior(chart):
        geo = evaluate_geometry(chart, x)
        vals = np.asarray(integrand(geo), dtype=float)
        parts.append(float(np.sum(vals * geo.volume * w)))
    return math.fsum(parts)


def integrate_boundary(chart: MetricChart, integrand: Integrand, rule: QuadratureRule) -> float:
    """Sum over all boundary faces with the induced volume element; integrand sees adapted frames."""
    if not chart.boundary:
        raise DomainError(f"{chart.name} has no boundary face")
    parts = []
    for face in chart.boundary:
        for x, w in rule.boundary(chart, face):
            geo = evaluate_geometry(chart, x, face=face)
            vals = np.asarray(integrand(geo), dtype=float)
            parts.append(float(np.sum(vals * geo.boundary_volume * w)))
    return math.fsum(parts)


def ones(geo: Geometry) -> np.ndarray:
    return np.ones(len(geo.points))


def euler_density(n: int) -> Integrand:
    return lambda geo: euler_form(geo.riemann, geo.signs, n)


def tangential_curvature(geo: Geometry) -> np.ndarray:
    return geo.riemann[:, 1:, 1:, 1:, 1:]


def transgression_density(n: int, nu: int | None = None) -> Integrand:
    return lambda geo: boundary_transgression(
        tangential_curvature(geo), geo.second_fundamental_form, geo.signs.drop_first(), n, nu
    )


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------


@dataclass
class VerificationReport:
    """Outcome of one check; ``passed`` is ``error <= tol``.

    ``mode`` selects the error: ``"abs"`` and ``"rel"`` compare value with
    reference; ``"witness"`` uses max(0, reference - value), so with tol = 0
    it passes when the value reaches the reference threshold.
    """

    name: str
    value: float
    reference: float
    tol: float
    mode: str = "abs"
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("abs", "rel", "witness"):
            raise DomainError("mode must be 'abs', 'rel' or 'witness'")
        self.value = float(self.value)
        self.reference = float(self.reference)

    @property
    def abs_err(self) -> float:
        return abs(self.value - self.reference)

    @property
    def rel_err(self) -> float:
        scale = abs(self.reference)
        return self.abs_err / scale if scale > 0 else (0.0 if self.abs_err == 0 else math.inf)

    @property
    def error(self) -> float:
        if self.mode == "witness":
            return max(0.0, self.reference - self.value)
        return self.abs_err if self.mode == "abs" else self.rel_err

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tol)

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "test": self.name,
            "value": self.value,
            "reference": self.reference,
            "abs_err": self.abs_err,
            "rel_err": self.rel_err if math.isfinite(self.rel_err) else None,
            "tol": self.tol,
            "pass": self.passed,
            "seconds": round(self.seconds, 6) if timing else None,
        }

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.name}: value={self.value:.12g} reference={self.reference:.12g} "
            f"{self.mode}_err={self.error:.3g} tol={self.tol:g}"
        )


class _Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


# --------------------------------------------------------------------------
# Gauss-Bonnet
# --------------------------------------------------------------------------


def gauss_bonnet_closed(chart: MetricChart, rule: QuadratureRule, n: int | None = None, tol: float = 1e-6) -> VerificationReport:
    """Integral of E_{m,n} (n = m by default) against the Euler characteristic of the chart."""
    if chart.boundary:
        raise PreconditionError(f"{chart.name} has a boundary; use gauss_bonnet_boundary")
    if chart.euler_characteristic is None:
        raise PreconditionError(f"{chart.name} does not declare an Euler characteristic")
    n = chart.dim if n is None else n
    with _Timer() as timer:
        if n % 2:
            value = 0.0
        else:
            value = integrate_interior(chart, euler_density(n), rule)
    return VerificationReport(
        f"gauss-bonnet:{chart.name}", value, chart.euler_characteristic, tol, "abs", timer.seconds, {"n": n}
    )


def gauss_bonnet_boundary(chart: MetricChart, rule: QuadratureRule, tol: float = 1e-6) -> VerificationReport:
    """Interior integral of E_{m,m} plus boundary integral of F_{m,m-1} against chi."""
    if not chart.boundary:
        raise PreconditionError(f"{chart.name} has no boundary face")
    if chart.euler_characteristic is None:
        raise PreconditionError(f"{chart.name} does not declare an Euler characteristic")
    m = chart.dim
    with _Timer() as timer:
        interior = 0.0 if m % 2 else integrate_interior(chart, euler_density(m), rule)
        boundary = integrate_boundary(chart, transgression_density(m), rule)
    return VerificationReport(
        f"gauss-bonnet-boundary:{chart.name}",
        interior + boundary,
        chart.euler_characteristic,
        tol,
        "abs",
        timer.seconds,
        {"interior": interior, "boundary": boundary},
    )


# --------------------------------------------------------------------------
# Variational checks
# --------------------------------------------------------------------------


def _h_coordinate(chart: MetricChart, h_entries, x: np.ndarray) -> np.ndarray:
    exprs = _h_expressions(chart, h_entries)
    vals = evaluate_values(exprs, chart.coord_names, x)
    m = chart.dim
    h = np.empty((len(x), m, m))
    for (i, j), v in zip(upper_triangle(m), vals):
        h[:, i, j] = v
        h[:, j, i] = v
    return h


def _functional(chart: MetricChart, n: int, rule: QuadratureRule, boundary: bool) -> float:
    total = 0.0 if n % 2 else integrate_interior(chart, euler_density(n), rule)
    if boundary:
        total += integrate_boundary(chart, transgression_density(n), rule)
    return total


@dataclass(frozen=True)
class FiniteDifference:
    derivative: float
    single_step: float
    error_bound: float


def fd_derivative(f: Callable[[float], float], step: float) -> FiniteDifference:
    """Central differences at steps h and h/2 combined by one Richardson level."""
    d1 = (f(step) - f(-step)) / (2 * step)
    half = step / 2
    d2 = (f(half) - f(-half)) / (2 * half)
    rich = (4 * d2 - d1) / 3
    return FiniteDifference(rich, d2, abs(d2 - d1))


def _precheck(chart: MetricChart, h_entries, step: float, rule: QuadratureRule):
    nodes = rule.interior_nodes(chart)
    bnodes = rule.boundary_nodes(chart)
    for t in (step, -step, step / 2, -step / 2):
        perturbed(chart, h_entries, t, check_points=nodes)
        if len(bnodes):
            perturbed(chart, h_entries, t, check_points=bnodes)
            # the induced boundary metric must stay non-degenerate as well
            g = perturbed(chart, h_entries, t)
            for face in chart.boundary:
                for x, _ in rule.boundary(g, face):
                    evaluate_geometry(g, x, face=face)


def variational_check_interior(
    chart: MetricChart,
    h_entries,
    n: int,
    rule: QuadratureRule,
    fd_step: float = DEFAULT_FD_STEP,
    tol: float = 1e-4,
    mode: str = "rel",
    name: str | None = None,
) -> VerificationReport:
    """d/dt of the integral of E_{m,n}(g + t h) against (1/2) int h_ij calE_ij."""
    if chart.boundary:
        raise PreconditionError("interior variational check needs a closed chart")
    with _Timer() as timer:
        _precheck(chart, h_entries, fd_step, rule)
        fd = fd_derivative(lambda t: _functional(perturbed(chart, h_entries, t), n, rule, False), fd_step)
        rhs = 0.0
        if n % 2 == 0:
            rhs = 0.5 * integrate_interior(
                chart,
                lambda geo: np.einsum(
                    "nij,nij->n", geo.to_frame(_h_coordinate(chart, h_entries, geo.points)),
                    interior_el_tensor(geo.riemann, geo.signs, n),
                ),
                rule,
            )
    details = {
        "n": n,
        "fd_single_step": fd.single_step,
        "fd_error_bound": fd.error_bound,
        "fd_step": fd_step,
    }
    return VerificationReport(
        name or f"euler-lagrange-interior:{chart.name}:n={n}", fd.derivative, rhs, tol, mode, timer.seconds, details
    )


def variational_check_boundary(
    chart: MetricChart,
    h_entries,
    n: int,
    rule: QuadratureRule,
    fd_step: float = DEFAULT_FD_STEP,
    tol: float = 1e-3,
    mode: str = "rel",
    name: str | None = None,
) -> VerificationReport:
    """d/dt of (int E + int_boundary F)(g + t h) against (1/2) int h calE + (1/2) int_boundary h_ab calF_ab.

    The boundary pairing uses the tangential block of h in the boundary-adapted
    frame. ``details`` carries the interior and boundary parts of the right side.
    """
    if not chart.boundary:
        raise PreconditionError("boundary variational check needs a chart with boundary")
    with _Timer() as timer:
        _precheck(chart, h_entries, fd_step, rule)
        fd = fd_derivative(lambda t: _functional(perturbed(chart, h_entries, t), n, rule, True), fd_step)
        rhs_int = 0.0
        if n % 2 == 0:
            rhs_int = 0.5 * integrate_interior(
                chart,
                lambda geo: np.einsum(
                    "nij,nij->n", geo.to_frame(_h_coordinate(chart, h_entries, geo.points)),
                    interior_el_tensor(geo.riemann, geo.signs, n),
                ),
                rule,
            )

        def boundary_pairing(geo):
            h_frame = geo.to_frame(_h_coordinate(chart, h_entries, geo.points))[:, 1:, 1:]
            f = boundary_el_tensor(tangential_curvature(geo), geo.second_fundamental_form, geo.signs.drop_first(), n)
            return np.einsum("nab,nab->n", h_frame, f)

        rhs_bdy = 0.5 * integrate_boundary(chart, boundary_pairing, rule)
    details = {
        "n": n,
        "rhs_interior": rhs_int,
        "rhs_boundary": rhs_bdy,
        "fd_single_step": fd.single_step,
        "fd_error_bound": fd.error_bound,
        "fd_step": fd_step,
    }
    return VerificationReport(
        name or f"euler-lagrange-boundary:{chart.name}:n={n}",
        fd.derivative,
        rhs_int + rhs_bdy,
        tol,
        mode,
        timer.seconds,
        details,
    )


def total_variation_check(
    chart: MetricChart,
    h_entries,
    rule: QuadratureRule,
    fd_step: float = DEFAULT_FD_STEP,
    tol: float = 1e-6,
    name: str | None = None,
) -> VerificationReport:
    """d/dt of the full Gauss-Bonnet integral with n = m, which must vanish."""
    n = chart.dim
    with _Timer() as timer:
        _precheck(chart, h_entries, fd_step, rule)
        fd = fd_derivative(lambda t: _functional(perturbed(chart, h_entries, t), n, rule, bool(chart.boundary)), fd_step)
    return VerificationReport(
        name or f"euler-lagrange-total:{chart.name}:n={n}",
        fd.derivative,
        0.0,
        tol,
        "abs",
        timer.seconds,
        {"n": n, "fd_single_step": fd.single_step, "fd_error_bound": fd.error_bound, "fd_step": fd_step},
    )


# --------------------------------------------------------------------------
# Restriction to products with a circle
# --------------------------------------------------------------------------


def restriction_product_check(
    chart_n: MetricChart, sign: int, rule: QuadratureRule, tol: float = 1e-8
) -> VerificationReport:
    """Pointwise comparison of xi_theta calF_{m,m-2,nu,theta theta} on N x S^1 with F_{m-1,m-2,nu} on N.

    The value reported is the largest deviation over all boundary nodes and
    all nu; the per-nu maxima, and the largest intrinsic value per nu (to show
    the comparison is not between zeros), are in ``details``.
    """
    if not chart_n.boundary:
        raise PreconditionError("restriction check needs a chart with boundary")
    product = product_with_circle(chart_n, sign)
    m = product.dim
    n_prod = m - 1
    per_nu, scale = {}, {}
    with _Timer() as timer:
        for nu in range((n_prod - 1) // 2 + 1):
            worst = size = 0.0
            for face in chart_n.boundary:
                for y, _ in rule.boundary(chart_n, face):
                    geo_n = evaluate_geometry(chart_n, y, face=face)
                    intrinsic = boundary_transgression(
                        tangential_curvature(geo_n), geo_n.second_fundamental_form, geo_n.signs.drop_first(), n_prod, nu
                    )
                    x = np.concatenate([y, np.full((len(y), 1), 0.5)], axis=1)
                    geo_m = evaluate_geometry(product, x, face=face)
                    signs_tan = geo_m.signs.drop_first()
                    f = boundary_el_tensor(
                        tangential_curvature(geo_m), geo_m.second_fundamental_form, signs_tan, n_prod, nu
                    )
                    paired = signs_tan.signs[-1] * f[:, -1, -1]
                    worst = max(worst, float(np.max(np.abs(paired - intrinsic))))
                    size = max(size, float(np.max(np.abs(intrinsic))))
            per_nu[nu] = worst
            scale[nu] = size
    value = max(per_nu.values())
    return VerificationReport(
        f"restriction:{chart_n.name}:{'+' if sign > 0 else '-'}",
        value,
        0.0,
        tol,
        "abs",
        timer.seconds,
        {"per_nu": per_nu, "max_abs_intrinsic": scale},
    )


# --------------------------------------------------------------------------
# Universal curvature identities
# --------------------------------------------------------------------------


# Index patterns (einsum form) of the cubic identity in dimension 5. The
# second pattern is tau * |rho|^2; the printed text repeats the index i
# there, which does not define a contraction.
CUBIC_PATTERNS = (
    "ijji,kllk,abba",
    "ijji,akla,bklb",
    "abba,ijkl,ijkl",
    "aija,bklb,jlik",
    "aija,bjkb,cikc",
    "aija,jkln,lnik",
    "ijkl,klan,anij",
    "kaij,inkl,jlan",
)
CUBIC_COEFFS = (1, -12, 3, -24, 16, -24, -2, 8)
CUBIC_COEFFS_AS_PRINTED = (1, -12, 3, 24, 16, -24, 2, -8)

IDENTITIES = {
    1: ((1,), ("ijji",)),
    2: ((1, -4, 1), ("ijji,kllk", "aija,bijb", "ijkl,ijkl")),
    3: (CUBIC_COEFFS, CUBIC_PATTERNS),
    "3-as-printed": (CUBIC_COEFFS_AS_PRINTED, CUBIC_PATTERNS),
}

# Dimension in which each identity vanishes; it is non-zero one dimension up.
IDENTITY_DIM = {1: 1, 2: 3, 3: 5, "3-as-printed": 5}


def contract(pattern: str, r: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Full contraction of curvature factors, each repeated index summed with weight xi.

    ``r`` may carry leading batch axes.
    """
    operands = pattern.split(",")
    letters = sorted(set(pattern) - {","})
    batch = "Z" if r.ndim == 5 else ""
    spec = ",".join(batch + o for o in operands) + "," + ",".join(letters) + "->" + batch
    return np.einsum(spec, *([r] * len(operands)), *([xi] * len(letters)), optimize=True)


def identity_terms(which, r: np.ndarray, signs) -> np.ndarray:
    """Weighted terms c_k * T_k of an identity; shape (..., n_terms)."""
    coeffs, patterns = IDENTITIES[which]
    xi = as_signature(signs).array
    return np.stack([c * contract(p, r, xi) for c, p in zip(coeffs, patterns)], axis=-1)


def identity_residual(which, r: np.ndarray, signs) -> np.ndarray:
    """|sum of terms| / (1 + max |term|)."""
    t = identity_terms(which, r, signs)
    return np.abs(t.sum(axis=-1)) / (1 + np.abs(t).max(axis=-1))


def _samples(dim: int, n_samples: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**63 - 1, size=n_samples)
    return np.stack([random_curvature(dim, int(s)).components for s in seeds])


def identity_check(
    dim: int,
    n_samples: int,
    seed: int,
    signs=None,
    which=None,
    tol: float | None = None,
) -> VerificationReport:
    """Vanishing (dims 1, 3, 5) or non-vanishing (dims 2, 4, 6) of the universal curvature identities.

    For vanishing dimensions the value is the largest normalized residual
    over the samples; for the others it is the largest normalized value,
    which must reach the witness threshold 1e-2.
    """
    sig = as_signature((1,) * dim if signs is None else signs)
    if sig.dim != dim:
        raise DomainError("signature length does not match dimension")
    if which is None:
        which = {1: 1, 2: 1, 3: 2, 4: 2, 5: 3, 6: 3}.get(dim)
        if which is None:
            raise DomainError("identity checks cover dimensions 1 to 6")
    with _Timer() as timer:
        r = _samples(dim, n_samples, seed)
        res = identity_residual(which, r, sig)
    worst = float(res.max())
    label = "".join("+" if s > 0 else "-" for s in sig.signs)
    name = f"identity:{which}:dim={dim}:signs={label}"
    if IDENTITY_DIM[which] == dim:
        default_tol = 1e-11 if which in (3, "3-as-printed") else 1e-12
        return VerificationReport(name, worst, 0.0, default_tol if tol is None else tol, "abs", timer.seconds,
                                  {"samples": n_samples, "seed": seed, "kind": "vanishing"})
    threshold = 1e-2 if tol is None else tol
    return VerificationReport(name, worst, threshold, 0.0, "witness", timer.seconds,
                              {"samples": n_samples, "seed": seed, "kind": "witness"})


def rotated_identity_residuals(which, dim: int, signs, n_samples: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Residuals before and after a random frame rotation of each sample."""
    sig = as_signature(signs)
    rng = np.random.default_rng(seed + 1)
    r = _samples(dim, n_samples, seed)
    rot = np.stack([random_frame_rotation(sig, rng, 0.5) for _ in range(n_samples)])
    r2 = change_frame(r, rot)
    return identity_residual(which, r, sig), identity_residual(which, r2, sig)
