"""Neural-network sieve least-squares estimation and its simulation studies."""

__version__ = "0.1.0"

from .errors import (
    DegenerateSampleError,
    DomainError,
    InvalidInputError,
    UnsupportedDimensionError,
    UnsupportedSampleSizeError,
)
from .network import Dataset, Theta, empirical_norm, evaluate, grad, inner_product, predict, sigmoid
from .sieve import SieveSchedule, dims, is_feasible
from .trainer import FitResult, TrainConfig, fit
