"""Exception hierarchy shared by all curvlab modules."""


class CurvlabError(Exception):
    """Base class for all errors raised by curvlab."""


class DomainError(CurvlabError, ValueError):
    """An argument lies outside the domain of an operation."""


class DegenerateMetricError(CurvlabError):
    """The metric is singular, or has the wrong signature, at some point."""

    def __init__(self, message, point=None, t=None):
        self.point = point
        self.t = t
        parts = [message]
        if point is not None:
            parts.append(f"at x={tuple(float(v) for v in point)}")
        if t is not None:
            parts.append(f"(t={t:g})")
        super().__init__(" ".join(parts))


class NullDirectionError(DegenerateMetricError):
    """Gram-Schmidt met a null vector while building an orthonormal frame."""


class EvaluationError(CurvlabError, ArithmeticError):
    """An expression could not be evaluated (division by zero, sqrt of a negative, ...)."""


class ExpressionSyntaxError(CurvlabError, ValueError):
    """A DSL expression failed to parse."""

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(expected))
        text = f"{message} at offset {offset}"
        if self.expected:
            text += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(text)


class UnknownIdentifierError(ExpressionSyntaxError):
    """An expression references a name that is neither a coordinate nor a parameter."""


class PreconditionError(CurvlabError):
    """An operation was called with inputs violating its stated precondition."""
