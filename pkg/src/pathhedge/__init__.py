"""Pathwise hedging laboratory: variation analytics, zero-rate Black-Scholes
pricing, discrete delta and gamma hedging ledgers, and convergence experiments."""

__version__ = "0.1.0"

from .asian import AsianInstrument, asian_analytic, asian_pde_residual, run_asian_hedge
from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import (EmbeddingError, LengthGuardError, NearExpiryDegeneracy, PartitionMismatch,
                     PathHedgeError, QuadratureError, QVMismatchWarning)
from .generators import brownian_path, exp_price_path, fbm_path, integral_path
from .hedging import (PnLLedger, TaylorDecomposition, riemann_sum_defect, run_hedge,
                      solve_delta_gamma_weights, solve_delta_weights, taylor_decomposition)
from .paths import Partition, PartitionSequence, Path, make_dyadic_sequence, make_uniform_sequence
from .pricing import (EuropeanInstrument, Greeks, Payoff, analytic_instrument, bs_quote, pde_residual,
                      vega_gamma_defect)
from .variation import VariationReport, oscillation, pth_variation, sup_p_variation, total_variation

__all__ = [name for name in dir() if not name.startswith("_")]
