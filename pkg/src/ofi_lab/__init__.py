"""Limit-order-book and order-flow-imbalance simulation toolkit."""

from ._kernels import BACKEND
from .book_engine import BookEvent, BookState, apply_event, best_ask, best_bid, mid_price, simulate_book
from .flow_models import (
    IntensityPath,
    RateConfig,
    SubordinatorSpec,
    sample_cox_arrivals,
    sample_inhomogeneous_arrivals,
    sample_poisson_arrivals,
    sample_subordinator_path,
)
from .ofi import (
    ComponentLaw,
    JumpLaw,
    OfiPath,
    imbalance_reparameterize,
    mixture_moments,
    simulate_ofi_compound,
    simulate_ofi_two_sided,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BookEvent",
    "BookState",
    "ComponentLaw",
    "IntensityPath",
    "JumpLaw",
    "OfiPath",
    "RateConfig",
    "SubordinatorSpec",
    "apply_event",
    "best_ask",
    "best_bid",
    "imbalance_reparameterize",
    "mid_price",
    "mixture_moments",
    "sample_cox_arrivals",
    "sample_inhomogeneous_arrivals",
    "sample_poisson_arrivals",
    "sample_subordinator_path",
    "simulate_book",
    "simulate_ofi_compound",
    "simulate_ofi_two_sided",
]
