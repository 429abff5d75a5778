"""Curvature functionals of the Chern-Gauss-Bonnet theorem for pseudo-Riemannian
manifolds with boundary, with numerical and exact verification tools."""

from .catalog import ManifoldSpec, catalog_names, load_chart, load_spec
from .errors import (
    CurvlabError,
    DegenerateMetricError,
    DomainError,
    EvaluationError,
    ExpressionSyntaxError,
    NullDirectionError,
    PreconditionError,
    UnknownIdentifierError,
)
from .expr import Expression, parse_expression
from .functionals import (
    boundary_el_tensor,
    boundary_transgression,
    euler_form,
    interior_el_tensor,
)
from .geometry import (
    MetricChart,
    christoffel,
    curvature_in_frame,
    metric_at,
    orthonormal_frame_at,
    perturbed,
    product_with_circle,
    riemann_at,
    second_fundamental_form,
)
from .invariants import (
    FormalMonomial,
    FormalPolynomial,
    enumerate_admissible,
    exchange_check,
    invariant_subspace,
    q_polynomial,
)
from .tensor_core import (
    AlgebraicCurvature,
    SecondFundamentalForm,
    Signature,
    SymTwoTensor,
    constant_curvature,
    generalized_delta,
    random_curvature,
)
from .verification import (
    QuadratureRule,
    VerificationReport,
    gauss_bonnet_boundary,
    gauss_bonnet_closed,
    identity_check,
    integrate_boundary,
    integrate_interior,
    restriction_product_check,
    variational_check_boundary,
    variational_check_interior,
)

__version__ = "0.1.0"
