"""Spin-chain and particle simulations, exact stationary laws and scaling reports."""

from .chain import C_from_rates, ParticleState, SpinChain, exchange_rate, flip_rate, mu_from_rates
from .exact import (ClosureReport, StationaryTable, closure_discrepancy, exact_stationary, generator,
                    marginal)
from .kernels import BACKEND
from .simulate import (GillespieResult, ParticleResult, ScalingReport, check_duality, gillespie_run,
                       magnetization_scaling, particle_run, total_variation)

__all__ = [
    "BACKEND", "C_from_rates", "ClosureReport", "GillespieResult", "ParticleResult", "ParticleState",
    "ScalingReport", "SpinChain", "StationaryTable", "check_duality", "closure_discrepancy",
    "exact_stationary", "exchange_rate", "flip_rate", "generator", "gillespie_run",
    "magnetization_scaling", "marginal", "mu_from_rates", "particle_run", "total_variation",
]
