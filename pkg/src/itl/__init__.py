"""Kernel models learned jointly over a continuum of hyperparameters.

One model ``h(x)(theta)`` covers quantile regression over quantile levels,
cost-sensitive classification over cost asymmetries and density level-set
estimation over level fractions.
"""
from .kernels import KernelSpec, gaussian
from .model import ItlModel, predict, predict_matrix
from .solver import SolverConfig
from .tasks import TaskSpec, fit

__all__ = ["KernelSpec", "gaussian", "ItlModel", "predict", "predict_matrix",
           "SolverConfig", "TaskSpec", "fit"]
