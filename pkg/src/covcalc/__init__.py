"""Numerical workbench for Gaussian processes with a covariance measure."""
from . import calculus, covmeasure, kernels, simulate, verify
from .covmeasure import DiscreteMeasure, Grid, build_measure
from .kernels import KernelSpec, parse_kernel
from .simulate import PathEnsemble

__version__ = "0.1.0"
