"""The 40-dimensional topological feature vector.

Per homology dimension (0 then 1), 20 features in a fixed order: ten
diagram statistics, four polynomial features in Adcock-Carlsson style, and
six landscape numbers from levels 1 and 2. Essential (infinite-death)
pairs are excluded throughout; an empty dimension contributes a zero
block. The order below is normative for the CSV header and the model
feature count.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .homology import PersistenceDiagram
from .landscape import PersistenceLandscape, landscape_norms

_BLOCK_NAMES = [
    "count",
    "mean_lifetime",
    "std_lifetime",
    "max_lifetime",
    "sum_lifetime",
    "lifetime_entropy",
    "mean_birth",
    "mean_death",
    "max_death",
    "mean_midpoint",
    "poly_birth_life",
    "poly_deathgap_life",
    "poly_birth2_life4",
    "poly_deathgap2_life4",
    "lambda1_l1",
    "lambda1_l2",
    "lambda1_sup",
    "lambda1_argmax",
    "lambda2_l1",
    "lambda2_sup",
]

FEATURE_NAMES = [f"h{dim}_{name}" for dim in (0, 1) for name in _BLOCK_NAMES]
N_FEATURES = len(FEATURE_NAMES)  # 40


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray  # 40 floats
    segment_ref: str
    label: str | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.shape != (N_FEATURES,):
            raise ValueError(f"expected {N_FEATURES} features, got {vals.shape}")


def _dimension_block(pairs: np.ndarray, landscape: PersistenceLandscape) -> list[float]:
    """The 20 features of one homology dimension; pairs is a (k, 2) array."""
    if pairs.shape[0] == 0:
        return [0.0] * 20
    births = pairs[:, 0]
    deaths = pairs[:, 1]
    lifetimes = deaths - births
    total_life = float(lifetimes.sum())
    if total_life > 0:
        p = lifetimes / total_life
        # 0 * ln 0 = 0 by continuity; lifetimes are positive here anyway
        entropy = float(-(p * np.log(p)).sum())
    else:
        entropy = 0.0
    d_max = float(deaths.max())

    stats = [
        float(len(pairs)),
        float(lifetimes.mean()),
        float(lifetimes.std()),
        float(lifetimes.max()),
        total_life,
        entropy,
        float(births.mean()),
        float(deaths.mean()),
        d_max,
        float(((births + deaths) / 2.0).mean()),
    ]
    poly = [
        float((births * lifetimes).sum()),
        float(((d_max - deaths) * lifetimes).sum()),
        float((births**2 * lifetimes**4).sum()),
        float(((d_max - deaths) ** 2 * lifetimes**4).sum()),
    ]
    l1_1, l2_1, sup_1, arg_1 = landscape_norms(landscape, 1)
    l1_2, _, sup_2, _ = landscape_norms(landscape, 2)
    lands = [l1_1, l2_1, sup_1, arg_1, l1_2, sup_2]
    return stats + poly + lands


def extract_features(
    diagram: PersistenceDiagram,
    landscapes: dict[int, PersistenceLandscape],
    segment_ref: str = "",
    label: str | None = None,
) -> FeatureVector:
    """Assemble the 40-vector from a diagram and its per-dimension landscapes.

    The landscapes must come from the same diagram (essential pairs
    dropped), or the landscape features will disagree with the stats.
    """
    values = []
    for dim in (0, 1):
        values.extend(
            _dimension_block(diagram.finite(dim), landscapes.get(dim, PersistenceLandscape([])))
        )
    return FeatureVector(
        values=np.array(values, dtype=np.float64), segment_ref=segment_ref, label=label
    )
