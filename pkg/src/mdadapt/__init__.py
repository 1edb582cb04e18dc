"""Multi-domain adversarial adaptation for vector-based speaker
verification: adversarial embedding training, whitening/PLDA scoring,
detection metrics, and a reproducible experiment pipeline."""

__version__ = "0.1.0"

from .data import EmbeddingSet, LabeledVectorSet, Record  # noqa: F401
from .errors import (  # noqa: F401
    ConfigError,
    ContractError,
    DataError,
    MdadaptError,
    NormalizationError,
    ShapeError,
    TrainingDivergedError,
)
