"""Numerical tolerances shared by every module.

All acceptance runs read their thresholds from :data:`DEFAULT_TOLERANCES`,
so there is exactly one place to look when a number needs changing.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class Tolerances:
    # partitions / paths
    max_dyadic_level: int = 26
    sup_pvar_max_intervals: int = 2**12
    fbm_exact_max_points: int = 2**12
    partition_match_atol: float = 1e-12  # relative to the horizon T

    # pricing
    quadrature_nodes: int = 64
    quadrature_panel_nodes: int = 16
    quadrature_doubling_rtol: float = 1e-9
    near_expiry: float = 1e-8
    fd_rel_step: float = 1e-5
    fd_abs_step: float = 1e-5

    # hedging
    third_fd_rel_step: float = 1e-4
    gamma_floor: float = 1e-10
    delta_floor: float = 1e-12
    taylor_max_iter: int = 60
    qv_mismatch_rtol: float = 0.05

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()
