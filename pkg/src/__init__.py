"""Proximal splitting toolbox: operators, projections, solvers and a TV inpainting demo."""

from .core import FunctionObject, LinearOperator, ProblemSpec, SolveResult, SolverParams
from .proj import proj_b1, proj_b2
from .prox import prox_l1, prox_l12, prox_l1inf, prox_l2_sq, prox_linf, prox_nuclear, prox_tv
from .solvers import admm, douglas_rachford, forward_backward, solve_sum

__all__ = [
    'FunctionObject', 'LinearOperator', 'ProblemSpec', 'SolveResult', 'SolverParams',
    'proj_b1', 'proj_b2',
    'prox_l1', 'prox_l12', 'prox_l1inf', 'prox_l2_sq', 'prox_linf', 'prox_nuclear', 'prox_tv',
    'admm', 'douglas_rachford', 'forward_backward', 'solve_sum',
]
