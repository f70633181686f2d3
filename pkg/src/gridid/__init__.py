"""Admittance matrix identification for distribution feeders from noisy measurements."""
from .network import NetworkModel, build_admittance, ieee33, load_network
from .powerflow import solve_powerflow
from .measurement import NoiseSpec, apply_noise, center, derive_currents, synthesize_dataset
from .estimation import EstimatorConfig, lasso_estimate, mle_estimate, ols_estimate
from .metrics import rrmse, sparsity_report

__version__ = "0.1.0"

__all__ = [
    "NetworkModel", "build_admittance", "ieee33", "load_network", "solve_powerflow",
    "NoiseSpec", "apply_noise", "center", "derive_currents", "synthesize_dataset",
    "EstimatorConfig", "lasso_estimate", "mle_estimate", "ols_estimate", "rrmse", "sparsity_report",
]
