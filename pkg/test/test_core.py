import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.core import (
    CapabilityError,
    FunctionObject,
    InvalidArgumentError,
    LinearOperator,
    ProblemSpec,
    SolverParams,
    StopReason,
    UnsupportedOperatorError,
    Verbosity,
    check_adjoint,
    check_tight,
    evaluate_objective,
    gradient_check,
    lipschitz_ratio,
    run_iterations,
    should_stop,
    squared_distance,
    zero_function,
)


def test_function_needs_a_capability():
    with pytest.raises(CapabilityError):
        FunctionObject(eval=lambda x: 0.0)


def test_function_rejects_non_positive_lipschitz():
    with pytest.raises(InvalidArgumentError):
        FunctionObject(eval=lambda x: 0.0, grad=lambda x: x, lipschitz=0.0)


def test_errors_are_value_errors():
    assert issubclass(InvalidArgumentError, ValueError)
    assert issubclass(UnsupportedOperatorError, ValueError)


def test_objective_is_sum_of_evaluators():
    problem = ProblemSpec((squared_distance([1.0, 1.0]), zero_function()), 2)
    assert evaluate_objective(problem, np.array([0.0, 0.0])) == pytest.approx(1.0)
    assert problem.K == 2


def test_objective_is_inf_outside_a_domain():
    wall = FunctionObject(eval=lambda x: math.inf, prox=lambda x, tau: x)
    problem = ProblemSpec((squared_distance([0.0]), wall), 1)
    assert evaluate_objective(problem, np.array([3.0])) == math.inf


def test_objective_checks_dimension():
    problem = ProblemSpec((zero_function(),), 3)
    with pytest.raises(InvalidArgumentError):
        evaluate_objective(problem, np.zeros(2))


def test_stopping_rule():
    assert should_stop(1.0, 1.0 + 1e-6, 1e-4)
    assert not should_stop(1.0, 2.0, 1e-4)
    # zero objective uses the floor, so an exact repeat still stops
    assert should_stop(0.0, 0.0, 1e-4)
    assert not should_stop(math.inf, math.inf, 1e-4)


def test_solver_params_defaults_and_alias():
    params = SolverParams()
    assert params.gamma == 1.0 and params.lambda_ == 1.0
    assert params.tol == 1e-4 and params.maxit == 200
    assert SolverParams(**{"lambda": 0.5}).lambda_ == 0.5
    assert params.replace(maxit=3).maxit == 3
    with pytest.raises(ValidationError):
        SolverParams(gamma=0.0)
    with pytest.raises(ValidationError):
        params.replace(maxit=0)


def test_run_iterations_runs_to_maxit():
    def halving():
        x = np.array([1.0])
        while True:
            x = x / 2
            yield x

    params = SolverParams(tol=0.6, maxit=50, verbosity=Verbosity.SILENT)
    # relative change of 2^-k is exactly 1, never below 0.6
    result = run_iterations(halving(), lambda x: float(x[0]), params, "halving")
    assert result.stop_reason is StopReason.MAX_ITERATIONS
    assert result.iterations == 50 == len(result.trace)


def test_run_iterations_returns_read_only_copy():
    def constant():
        while True:
            yield np.array([2.0, 3.0])

    params = SolverParams(maxit=10, verbosity=Verbosity.SILENT)
    result = run_iterations(constant(), lambda x: float(x.sum()), params, "constant")
    assert result.stop_reason is StopReason.TOLERANCE
    assert result.iterations == 2
    assert result.objective == 5.0
    with pytest.raises(ValueError):
        result.solution[0] = 1.0


def test_scaled_identity_is_tight():
    op = LinearOperator.scaled_identity(2.0)
    assert op.nu == 4.0
    assert check_adjoint(op).max_discrepancy < 1e-12
    assert check_tight(op) < 1e-12


def test_diagonal_tightness():
    assert LinearOperator.diagonal([3.0, -3.0]).tight
    assert not LinearOperator.diagonal([1.0, 0.0]).tight
    with pytest.raises(UnsupportedOperatorError):
        LinearOperator.diagonal([1.0, 2.0]).require_tight("test")


def test_adjoint_check_flags_a_wrong_adjoint():
    op = LinearOperator(forward=lambda x: 2 * x, adjoint=lambda y: y)
    assert check_adjoint(op, trials=10).max_discrepancy > 0.1


def test_gradient_and_lipschitz_diagnostics():
    f = squared_distance([1.0, -1.0, 0.5])
    rng = np.random.default_rng(0)
    assert gradient_check(f, rng.standard_normal(3), rng) < 1e-6
    assert lipschitz_ratio(f, 3) <= f.lipschitz + 1e-12


def test_objective_examples():
    from_l1 = ProblemSpec((FunctionObject(eval=lambda x: float(np.abs(x).sum()), prox=lambda x, t: x),), 2)
    assert evaluate_objective(from_l1, np.array([1.0, -2.0])) == 3.0
    square = FunctionObject(eval=lambda x: float(np.sum(x ** 2)), grad=lambda x: 2 * x)
    assert evaluate_objective(ProblemSpec((zero_function(), square), 2), np.array([3.0, 4.0])) == 25.0


def test_mask_operator_is_self_adjoint():
    mask = LinearOperator.diagonal([1.0, 0.0, 1.0, 1.0])
    assert check_adjoint(mask, trials=100).max_discrepancy <= 1e-12
    assert check_adjoint(LinearOperator.identity()).max_discrepancy == 0.0


def test_composed_prox_alone_is_not_enough():
    with pytest.raises(CapabilityError):
        FunctionObject(eval=lambda x: 0.0, prox_l=lambda z, tau: z)
