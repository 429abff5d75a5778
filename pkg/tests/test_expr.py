import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvlab.errors import EvaluationError, ExpressionSyntaxError, UnknownIdentifierError
from curvlab.expr import evaluate_jets, evaluate_values, parse_expression

NAMES = ("x1", "x2")


def jet_at(source, point, names=NAMES, params=None):
    expr = parse_expression(source, names, params)
    (jet,) = evaluate_jets([expr], names, np.array([point], dtype=float))
    return jet.val[0], jet.grad[0], jet.hess[0]


class TestParsing:
    @pytest.mark.parametrize(
        "source, value",
        [
            ("1 + 2 * 3", 7.0),
            ("2 ^ 3 * 2", 16.0),
            ("2 ^ (-1)", 0.5),
            ("-2 ^ 2", -4.0),
            ("(1 + 2) * 3", 9.0),
            ("8 / 4 / 2", 1.0),
            ("1 - 2 - 3", -4.0),
            ("2 * -3", -6.0),
            ("1.5e1 + .5", 15.5),
            ("pi", math.pi),
        ],
    )
    def test_precedence(self, source, value):
        assert evaluate_values([parse_expression(source)], (), np.zeros((1, 0)))[0, 0] == pytest.approx(value)

    @pytest.mark.parametrize(
        "source, offset",
        [("1 +", 3), ("sin(x1", 6), ("2 * * 3", 4), ("(1", 2), ("1 2", 2), ("x1 $ 2", 3)],
    )
    def test_syntax_error_offsets(self, source, offset):
        with pytest.raises(ExpressionSyntaxError) as info:
            parse_expression(source, NAMES)
        assert info.value.offset == offset
        assert str(offset) in str(info.value)

    def test_expected_tokens_reported(self):
        with pytest.raises(ExpressionSyntaxError) as info:
            parse_expression("1 +", NAMES)
        assert "number" in info.value.expected

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifierError) as info:
            parse_expression("x1 + y", NAMES)
        assert info.value.offset == 5

    @pytest.mark.parametrize("source, offset", [("x1^0.5", 3), ("x1^x2", 3), ("2^3^2", 3)])
    def test_exponents_are_integer_literals(self, source, offset):
        with pytest.raises(ExpressionSyntaxError) as info:
            parse_expression(source, NAMES)
        assert info.value.offset == offset

    def test_unknown_function(self):
        with pytest.raises(ExpressionSyntaxError):
            parse_expression("tan(x1)", NAMES)

    def test_parameters(self):
        value, grad, _ = jet_at("a*x1", (2.0, 0.0), params={"a": 3.0})
        assert value == 6.0 and grad[0] == 3.0

    @pytest.mark.parametrize("source", ["sin(x1)^2 + cos(x2)", "-x1 * (x2 - 1) / 3", "exp(-x1^2) - sqrt(1 + x2^2)",
                                        "2^-1", "-(x1)^2"])
    def test_round_trip_source(self, source):
        expr = parse_expression(source, NAMES)
        again = parse_expression(expr.to_source(), NAMES)
        x = np.array([[0.3, 0.7], [1.1, -0.4]])
        assert np.array_equal(evaluate_values([expr], NAMES, x), evaluate_values([again], NAMES, x))


class TestDerivatives:
    def test_critical_point(self):
        value, grad, _ = jet_at("sin(x1)^2", (math.pi / 2, 0.0))
        assert value == pytest.approx(1.0, abs=1e-15)
        assert abs(grad[0]) <= 1e-15

    def test_linear(self):
        _, grad, hess = jet_at("2*x1 + x2", (0.3, 0.4))
        assert grad[0] == 2.0 and grad[1] == 1.0
        assert not np.any(hess)

    def test_mixed_second_derivative(self):
        _, _, hess = jet_at("x1^2 * x2^3", (2.0, 1.0))
        assert hess[0, 1] == hess[1, 0] == pytest.approx(12.0)
        assert hess[0, 0] == pytest.approx(2.0) and hess[1, 1] == pytest.approx(24.0)

    def test_division_by_zero(self):
        expr = parse_expression("1/(1-x1)", NAMES)
        with pytest.raises(EvaluationError):
            evaluate_values([expr], NAMES, np.array([[1.0, 0.0]]))
        with pytest.raises(EvaluationError):
            evaluate_jets([expr], NAMES, np.array([[1.0, 0.0]]))

    def test_sqrt_negative(self):
        with pytest.raises(EvaluationError):
            evaluate_values([parse_expression("sqrt(x1)", NAMES)], NAMES, np.array([[-1.0, 0.0]]))


PRIMITIVES = [
    "sin(x1*x2)", "cos(x1 - x2)", "sinh(x1)*x2", "cosh(x2)^2", "exp(x1*x2/2)", "sqrt(2 + x1^2 + x2)",
    "x1/(2 + x2^2)", "(x1 - x2)^3", "x1^-2 + x2", "-x1*x2",
]


@settings(max_examples=60, deadline=None)
@given(
    source=st.sampled_from(PRIMITIVES),
    x1=st.floats(0.5, 1.5),
    x2=st.floats(-0.9, 0.9),
)
def test_jet_matches_central_differences(source, x1, x2):
    expr = parse_expression(source, NAMES)
    point = np.array([x1, x2])
    _, grad, hess = jet_at(source, point)

    def f(p):
        return evaluate_values([expr], NAMES, p[None, :])[0, 0]

    h = 1e-4
    eye = np.eye(2)
    for i in range(2):
        fd = (f(point + h * eye[i]) - f(point - h * eye[i])) / (2 * h)
        assert fd == pytest.approx(grad[i], rel=1e-6, abs=1e-6)
        for j in range(2):
            fd2 = (
                f(point + h * eye[i] + h * eye[j]) - f(point + h * eye[i] - h * eye[j])
                - f(point - h * eye[i] + h * eye[j]) + f(point - h * eye[i] - h * eye[j])
            ) / (4 * h * h)
            assert fd2 == pytest.approx(hess[i, j], rel=1e-5, abs=1e-5)
