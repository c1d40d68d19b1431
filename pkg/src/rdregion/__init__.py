"""Rate-distortion regions of the two-encoder CEO and Berger-Tung problems under log-loss."""
from .bt import BtSourceModel, BtTradeoff, solve_bt
from .ceo import CeoSourceModel, CeoTradeoff, EncoderKernels, solve
from .common import SolverOptions
from .oracle import GridSpec, grid_min_bt, grid_min_ceo
from .region import SweepGrid, equal_rate_slice, sweep_bt, sweep_ceo

__all__ = [
    "BtSourceModel", "BtTradeoff", "CeoSourceModel", "CeoTradeoff", "EncoderKernels",
    "GridSpec", "SolverOptions", "SweepGrid", "equal_rate_slice", "grid_min_bt",
    "grid_min_ceo", "solve", "solve_bt", "sweep_bt", "sweep_ceo",
]
