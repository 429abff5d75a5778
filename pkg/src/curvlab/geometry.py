"""Metric charts, Levi-Civita connection, curvature and boundary frames.

A :class:`MetricChart` is a coordinate box with metric components given as
expressions. Everything geometric is computed from exact first and second
derivatives of those expressions (see :mod:`curvlab.expr`), vectorized over
batches of points by :func:`evaluate_geometry`. The single-point functions
(``metric_at``, ``christoffel``, ...) are thin wrappers around it.

Curvature convention: ``R_{abcd} = g(R(d_a, d_b) d_c, d_d)`` with
``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]``, so the unit round sphere has
``R_{1221} = +1`` in an orthonormal frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import DegenerateMetricError, DomainError, NullDirectionError
from .expr import BinOp, Expression, Num, as_expression, evaluate_jets, evaluate_values
from .tensor_core import AlgebraicCurvature, SecondFundamentalForm, Signature, as_signature, change_frame

NULL_TOL = 1e-12
FACES = ("lower", "upper")


def upper_triangle(m: int) -> list[tuple[int, int]]:
    """0-based (i, j) pairs with i <= j in row-major order."""
    return [(i, j) for i in range(m) for j in range(i, m)]


@dataclass(frozen=True)
class MetricChart:
    """A single coordinate chart carrying a metric.

    ``metric`` holds the m(m+1)/2 upper-triangle entries in row-major order.
    ``boundary`` lists which faces of coordinate 1 belong to the boundary:
    ``"lower"`` (x1 increasing inward) and/or ``"upper"`` (x1 decreasing inward).
    """

    coord_names: tuple[str, ...]
    domain: tuple[tuple[float, float], ...]
    metric: tuple[Expression, ...]
    signature: Signature
    boundary: tuple[str, ...] = ()
    volume_weight: Expression | None = None
    name: str = "chart"
    euler_characteristic: int | None = field(default=None, compare=False)

    def __post_init__(self):
        m = len(self.coord_names)
        object.__setattr__(self, "coord_names", tuple(self.coord_names))
        object.__setattr__(self, "domain", tuple((float(a), float(b)) for a, b in self.domain))
        object.__setattr__(self, "metric", tuple(as_expression(e, self.coord_names) for e in self.metric))
        object.__setattr__(self, "signature", as_signature(self.signature))
        object.__setattr__(self, "boundary", tuple(self.boundary))
        if m < 1 or len(self.domain) != m:
            raise DomainError("coordinate names and domain intervals must have the same positive length")
        if len(set(self.coord_names)) != m:
            raise DomainError("coordinate names must be distinct")
        if len(self.metric) != m * (m + 1) // 2:
            raise DomainError(f"expected {m * (m + 1) // 2} metric entries, got {len(self.metric)}")
        if self.signature.dim != m:
            raise DomainError("signature length does not match the chart dimension")
        for lo, hi in self.domain:
            if not lo < hi:
                raise DomainError(f"empty domain interval [{lo}, {hi}]")
        for face in self.boundary:
            if face not in FACES:
                raise DomainError(f"unknown boundary face {face!r}")
        for e in self.metric:
            extra = e.identifiers() - set(self.coord_names)
            if extra:
                raise DomainError(f"metric entry references unknown identifiers {sorted(extra)}")

    @classmethod
    def from_entries(cls, coord_names, domain, entries: Mapping[tuple[int, int], object], signature, **kw):
        """Build a chart from a sparse {(i, j): expr} map with 1-based indices; omitted entries are 0."""
        m = len(coord_names)
        table = {}
        for (i, j), e in entries.items():
            a, b = sorted((i - 1, j - 1))
            table[a, b] = e
        exprs = [as_expression(table.get(ij, 0.0), coord_names) for ij in upper_triangle(m)]
        return cls(tuple(coord_names), tuple(domain), tuple(exprs), signature, **kw)

    @property
    def dim(self) -> int:
        return len(self.coord_names)

    def entry(self, i: int, j: int) -> Expression:
        """Metric entry g_ij, 1-based."""
        a, b = sorted((i - 1, j - 1))
        return self.metric[upper_triangle(self.dim).index((a, b))]

    def face_coordinate(self, face: str) -> float:
        lo, hi = self.domain[0]
        return lo if face == "lower" else hi

    def face_of(self, y) -> str:
        y0 = float(np.asarray(y, dtype=float)[0])
        for face in self.boundary:
            if abs(y0 - self.face_coordinate(face)) <= 1e-12 * max(1.0, abs(y0)):
                return face
        raise DomainError(f"point with x1={y0} is not on a boundary face of {self.name}")


@dataclass(frozen=True)
class PointFrame:
    """Orthonormal frame at a point; ``vectors[i]`` holds the chart components of e_{i+1}."""

    point: np.ndarray
    vectors: np.ndarray
    signs: Signature
    boundary_adapted: bool = False


@dataclass
class Geometry:
    """Geometric data at a batch of N points (all arrays have leading axis N)."""

    points: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    dg: np.ndarray
    christoffel: np.ndarray
    riemann_coord: np.ndarray
    frame: np.ndarray
    signs: Signature
    riemann: np.ndarray
    volume: np.ndarray
    face: str | None = None
    second_fundamental_form: np.ndarray | None = None
    boundary_volume: np.ndarray | None = None

    def to_frame(self, coord_tensor: np.ndarray) -> np.ndarray:
        """Frame components E_i^a E_j^b T_ab of a batch of coordinate 2-tensors."""
        return np.einsum("nia,njb,nab->nij", self.frame, self.frame, coord_tensor)


def _first_bad(mask: np.ndarray) -> int:
    return int(np.flatnonzero(mask)[0])


def metric_jets(chart: MetricChart, x: np.ndarray):
    """Metric, first and second coordinate derivatives at points ``x`` (N, m).

    Returns g (N,m,m), dg (N,m,m,m) with dg[n,i,j,k] = d_k g_ij and
    ddg (N,m,m,m,m) with ddg[n,i,j,k,l] = d_k d_l g_ij.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n, m = x.shape
    if m != chart.dim:
        raise DomainError(f"points have {m} coordinates, chart has {chart.dim}")
    jets = evaluate_jets(chart.metric, chart.coord_names, x)
    g = np.empty((n, m, m))
    dg = np.empty((n, m, m, m))
    ddg = np.empty((n, m, m, m, m))
    for (i, j), jet in zip(upper_triangle(m), jets):
        for a, b in {(i, j), (j, i)}:
            g[:, a, b] = jet.val
            dg[:, a, b] = jet.grad
            ddg[:, a, b] = jet.hess
    return g, dg, ddg


def _check_metric(chart: MetricChart, x: np.ndarray, g: np.ndarray) -> np.ndarray:
    scale = np.abs(g).max(axis=(1, 2))
    det = np.linalg.det(g)
    bad = ~(np.abs(det) > (1e-14 * scale) ** chart.dim) | ~np.isfinite(det)
    if np.any(bad):
        k = _first_bad(bad)
        raise DegenerateMetricError("singular metric", point=x[k])
    return det


def gram_schmidt(g: np.ndarray, vectors: np.ndarray, points: np.ndarray):
    """Signature-aware Gram-Schmidt of rows ``vectors`` (N, m, m) against ``g``.

    Returns the frame (N, m, m) and the sign array (N, m).
    """
    n, m, _ = vectors.shape
    frame = np.empty_like(vectors)
    signs = np.empty((n, m))
    for k in range(m):
        v = vectors[:, k].copy()
        for j in range(k):
            proj = np.einsum("na,nab,nb->n", v, g, frame[:, j])
            v -= (signs[:, j] * proj)[:, None] * frame[:, j]
        norm = np.einsum("na,nab,nb->n", v, g, v)
        # Relative test: a null vector is one whose squared length cancels against
        # the size of its terms; a merely short vector (near a pole) is fine.
        scale = np.einsum("na,nab,nb->n", np.abs(v), np.abs(g), np.abs(v))
        bad = ~(np.abs(norm) > NULL_TOL * scale)
        if np.any(bad):
            kk = _first_bad(bad)
            raise NullDirectionError(f"null direction while orthonormalizing vector {k + 1}", point=points[kk])
        signs[:, k] = np.sign(norm)
        frame[:, k] = v / np.sqrt(np.abs(norm))[:, None]
    return frame, signs


def _uniform_signs(chart: MetricChart, signs: np.ndarray, points: np.ndarray) -> Signature:
    first = signs[0]
    varying = np.any(signs != first, axis=1)
    if np.any(varying):
        raise DegenerateMetricError("frame signature varies across the chart", point=points[_first_bad(varying)])
    sig = Signature(tuple(int(s) for s in first))
    if sorted(sig.signs) != sorted(chart.signature.signs):
        raise DegenerateMetricError(
            f"metric has signature {sig.signs}, chart declares {chart.signature.signs}", point=points[0]
        )
    return sig


def boundary_normal(chart: MetricChart, ginv: np.ndarray, face: str, points: np.ndarray):
    """Inward unit normal (N, m) and its sign for the given face of coordinate 1."""
    g11 = ginv[:, 0, 0]
    bad = ~(np.abs(g11) > NULL_TOL * np.abs(ginv).max(axis=(1, 2)))
    if np.any(bad):
        raise NullDirectionError("boundary is degenerate (null normal)", point=points[_first_bad(bad)])
    direction = 1.0 if face == "lower" else -1.0
    sigma = np.sign(g11)
    normal = (direction * sigma / np.sqrt(np.abs(g11)))[:, None] * ginv[:, :, 0]
    return normal, sigma


def evaluate_geometry(chart: MetricChart, x, face: str | None = None) -> Geometry:
    """All geometric data at points ``x`` (N, m).

    With ``face`` given the frame is boundary-adapted (e_1 the inward unit
    normal, e_2..e_m tangent to the face) and the second fundamental form and
    induced volume element are filled in.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m = chart.dim
    g, dg, ddg = metric_jets(chart, x)
    det = _check_metric(chart, x, g)
    ginv = np.linalg.inv(g)
    # first-kind symbols G1[n,l,i,j] = Gamma_{lij} = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    g1 = 0.5 * (
        np.einsum("njli->nlij", dg) + np.einsum("nilj->nlij", dg) - np.einsum("nijl->nlij", dg)
    )
    gamma = np.einsum("nkl,nlij->nkij", ginv, g1)
    # dg1[n,a,l,i,j] = d_a Gamma_{lij}
    dg1 = 0.5 * (
        np.einsum("njlia->nalij", ddg) + np.einsum("nilja->nalij", ddg) - np.einsum("nijla->nalij", ddg)
    )
    riemann = (
        np.einsum("nadbc->nabcd", dg1)
        - np.einsum("nbdac->nabcd", dg1)
        - np.einsum("nead,nebc->nabcd", g1, gamma)
        + np.einsum("nebd,neac->nabcd", g1, gamma)
    )
    n = x.shape[0]
    normal = sigma = None
    if face is None:
        candidates = np.broadcast_to(np.eye(m), (n, m, m))
        frame, sign_arr = gram_schmidt(g, candidates, x)
    else:
        if face not in chart.boundary:
            raise DomainError(f"{chart.name} has no {face} boundary face")
        normal, sigma = boundary_normal(chart, ginv, face, x)
        tangential, tsigns = gram_schmidt(g, np.broadcast_to(np.eye(m)[1:], (n, m - 1, m)), x)
        frame = np.concatenate([normal[:, None, :], tangential], axis=1)
        sign_arr = np.concatenate([sigma[:, None], tsigns], axis=1)
    signs = _uniform_signs(chart, sign_arr, x)
    riemann_frame = change_frame(riemann, np.swapaxes(frame, 1, 2))
    if chart.volume_weight is not None:
        volume = evaluate_values([chart.volume_weight], chart.coord_names, x)[0]
    else:
        volume = np.sqrt(np.abs(det))
    geo = Geometry(
        points=x,
        g=g,
        ginv=ginv,
        dg=dg,
        christoffel=gamma,
        riemann_coord=riemann,
        frame=frame,
        signs=signs,
        riemann=riemann_frame,
        volume=volume,
    )
    if face is not None:
        tan = frame[:, 1:]
        geo.face = face
        geo.second_fundamental_form = np.einsum("nai,nbj,nlij,nl->nab", tan, tan, g1, normal)
        geo.boundary_volume = np.sqrt(np.abs(np.linalg.det(g[:, 1:, 1:])))
    return geo


# --------------------------------------------------------------------------
# Single-point operations
# --------------------------------------------------------------------------


def _point(chart: MetricChart, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    if x.shape[1] != chart.dim:
        raise DomainError(f"point has {x.shape[1]} coordinates, chart has {chart.dim}")
    return x


def metric_at(chart: MetricChart, x) -> np.ndarray:
    """Metric matrix g_ij at ``x``."""
    xx = _point(chart, x)
    g = metric_jets(chart, xx)[0]
    _check_metric(chart, xx, g)
    sig = np.sign(np.linalg.eigvalsh(g[0]))
    if sorted(sig) != sorted(chart.signature.signs):
        raise DegenerateMetricError(f"metric signature {tuple(sig)} differs from declared", point=xx[0])
    return g[0]


def christoffel(chart: MetricChart, x) -> np.ndarray:
    """Gamma^k_ij at ``x`` as an array indexed [k, i, j]."""
    return evaluate_geometry(chart, _point(chart, x)).christoffel[0]


def riemann_at(chart: MetricChart, x) -> np.ndarray:
    """Coordinate components R_abcd at ``x``."""
    return evaluate_geometry(chart, _point(chart, x)).riemann_coord[0]


def orthonormal_frame_at(chart: MetricChart, x, boundary_adapted: bool = False) -> PointFrame:
    xx = _point(chart, x)
    face = chart.face_of(xx[0]) if boundary_adapted else None
    geo = evaluate_geometry(chart, xx, face=face)
    return PointFrame(xx[0], geo.frame[0], geo.signs, boundary_adapted)


def curvature_in_frame(riemann_coord: np.ndarray, frame: PointFrame) -> AlgebraicCurvature:
    """R_ijkl = R_abcd e_i^a e_j^b e_k^c e_l^d."""
    r = np.asarray(riemann_coord, dtype=float)
    if r.shape != (frame.vectors.shape[0],) * 4:
        raise DomainError("curvature and frame dimensions differ")
    return AlgebraicCurvature(change_frame(r, frame.vectors.T), rtol=1e-10)


def second_fundamental_form(chart: MetricChart, y) -> SecondFundamentalForm:
    """L_ab = g(nabla_{e_a} e_b, e_1) at a boundary point, e_1 the inward unit normal."""
    yy = _point(chart, y)
    if not chart.boundary:
        raise DomainError(f"{chart.name} has no boundary face")
    geo = evaluate_geometry(chart, yy, face=chart.face_of(yy[0]))
    return SecondFundamentalForm(geo.second_fundamental_form[0])


# --------------------------------------------------------------------------
# Chart constructions
# --------------------------------------------------------------------------


def product_with_circle(chart: MetricChart, sign: int = 1, coord_name: str = "theta") -> MetricChart:
    """Chart for N x S^1 with metric g_N + sign * dtheta^2."""
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    name = coord_name
    while name in chart.coord_names:
        name += "_"
    m = chart.dim
    old = {ij: e for ij, e in zip(upper_triangle(m), chart.metric)}
    exprs = []
    for i, j in upper_triangle(m + 1):
        if j < m:
            exprs.append(old[i, j])
        elif i == j == m:
            exprs.append(Num(float(sign)))
        else:
            exprs.append(Num(0.0))
    return MetricChart(
        coord_names=chart.coord_names + (name,),
        domain=chart.domain + ((0.0, 2 * math.pi),),
        metric=tuple(exprs),
        signature=Signature(chart.signature.signs + (sign,)),
        boundary=chart.boundary,
        volume_weight=chart.volume_weight,
        name=f"{chart.name}x{'S1' if sign > 0 else 'S1-'}",
    )


def _h_expressions(chart: MetricChart, h_entries) -> list[Expression]:
    m = chart.dim
    if isinstance(h_entries, Mapping):
        table = {}
        for (i, j), e in h_entries.items():
            a, b = sorted((i - 1, j - 1))
            table[a, b] = e
        return [as_expression(table.get(ij, 0.0), chart.coord_names) for ij in upper_triangle(m)]
    h = list(h_entries)
    if len(h) != m * (m + 1) // 2:
        raise DomainError(f"expected {m * (m + 1) // 2} perturbation entries, got {len(h)}")
    return [as_expression(e, chart.coord_names) for e in h]


def perturbed(chart: MetricChart, h_entries, t: float, check_points=None) -> MetricChart:
    """Chart with metric g + t h.

    ``h_entries`` is either a list of m(m+1)/2 upper-triangle expressions or a
    sparse {(i, j): expr} map (1-based). When ``check_points`` is given the
    perturbed metric is verified to keep the declared signature there.
    """
    if t == 0.0:
        return chart
    hs = _h_expressions(chart, h_entries)
    exprs = tuple(
        e if (isinstance(h, Num) and h.value == 0.0) else BinOp("+", e, BinOp("*", Num(float(t)), h))
        for e, h in zip(chart.metric, hs)
    )
    new = replace(chart, metric=exprs, volume_weight=None)
    if check_points is not None:
        check_signature(new, check_points, t=t)
    return new


def check_signature(chart: MetricChart, points, t: float | None = None, chunk: int = 65536) -> None:
    """Raise DegenerateMetricError if the metric is singular or has the wrong signature at any point."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    want = sorted(chart.signature.signs)
    for start in range(0, len(points), chunk):
        x = points[start : start + chunk]
        g = evaluate_values(chart.metric, chart.coord_names, x)
        mat = np.empty((len(x), chart.dim, chart.dim))
        for (i, j), v in zip(upper_triangle(chart.dim), g):
            mat[:, i, j] = v
            mat[:, j, i] = v
        eig = np.linalg.eigvalsh(mat)
        scale = np.abs(eig).max(axis=1)
        bad = np.abs(eig).min(axis=1) <= 1e-12 * scale
        bad |= np.any(np.sort(np.sign(eig), axis=1) != np.array(want), axis=1)
        if np.any(bad):
            k = _first_bad(bad)
            raise DegenerateMetricError("perturbed metric is degenerate or changes signature", point=x[k], t=t)
