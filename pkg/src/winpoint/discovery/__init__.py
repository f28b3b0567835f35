"""Point-configuration search: ES, snapping, symmetric and dtype-aware modes."""
from .dtype import DtypeConstraint, dtype_aware_search, is_representable, round_bf16
from ..rng import stream
from .es import ESConfig, ESRun, es_run, es_search
from .fitness import SENTINEL, FitnessBreakdown, fitness, fitness_batch, float_transforms
from .pipeline import (
    CACHE_ENV,
    DiscoverOptions,
    ReproducibilitySummary,
    best_known_kappa,
    discover,
    reproducibility_study,
)
from .results import DiscoveryResult, canonical_order
from .snapping import neighborhood_search, snap_and_verify
from .symmetric import positive_candidates, symmetric_search

__all__ = [
    "CACHE_ENV", "DiscoverOptions", "DiscoveryResult", "DtypeConstraint", "ESConfig", "ESRun",
    "FitnessBreakdown", "ReproducibilitySummary", "SENTINEL", "best_known_kappa", "canonical_order",
    "discover", "dtype_aware_search", "es_run", "es_search", "fitness", "fitness_batch",
    "float_transforms", "is_representable", "neighborhood_search", "positive_candidates",
    "reproducibility_study", "round_bf16", "snap_and_verify", "stream", "symmetric_search",
]
