"""Normalized random measures: partition laws, latent posteriors, samplers."""

__version__ = "0.1.0"

from .families import (
    BetaNrmFamily,
    DirichletFamily,
    GenGammaFamily,
    GgcFamily,
    GigFamily,
    NrmFamily,
    StableFamily,
    ThorinArcsine,
    ThorinAtoms,
    ThorinDensity,
    ThorinMeasure,
    ThorinPowerLaw,
    family_from_config,
    first_passage_thorin,
    gig_moment,
    make_rng,
    thorin_tilt,
)
from .partitions import (
    OccupancyVector,
    Partition,
    enumerate_occupancy_vectors,
    enumerate_partitions,
    occupancy,
)

__all__ = [
    "BetaNrmFamily",
    "DirichletFamily",
    "GenGammaFamily",
    "GgcFamily",
    "GigFamily",
    "NrmFamily",
    "OccupancyVector",
    "Partition",
    "StableFamily",
    "ThorinArcsine",
    "ThorinAtoms",
    "ThorinDensity",
    "ThorinMeasure",
    "ThorinPowerLaw",
    "enumerate_occupancy_vectors",
    "enumerate_partitions",
    "family_from_config",
    "first_passage_thorin",
    "gig_moment",
    "make_rng",
    "occupancy",
    "thorin_tilt",
]
