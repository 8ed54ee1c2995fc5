"""Deterministic surrogate mapping genomes to predicted trajectories.

Each genome gets three latent skills derived from hashed per-allele
weights over disjoint locus subsets. Skills control how faithfully the
surrogate reproduces ground-truth targets: lateral offset noise (accuracy),
per-step heading jitter (smoothness) and a longitudinal speed rescale
(speed). Every noise stream is seeded from (quality seed, genome, pair id)
so results never depend on evaluation order.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache
from random import Random
from typing import Sequence

from .errors import ConfigurationError, ContractError
from .genome import Genome
from .objectives import ObjectiveId, ObjectiveVector, assemble, rmse
from .trajectory import (
    Dataset,
    TrajectoryPoint,
    TrajectorySequence,
    V_MAX_MPS,
    V_MIN_MPS,
)

_TWO_PI = 2.0 * math.pi

# 1-based locus subsets feeding each skill. Locus 3 (Momentum) belongs to
# no subset: it is carried and logged but inert.
_SKILL_LOCI = {
    "acc": (1, 2, 4, 5),
    "smooth": (6, 7, 8),
    "speed": (9, 10, 11, 12, 13),
}
# One pairwise interaction per skill (product of the two locus weights).
_SKILL_INTERACTIONS = {
    "acc": (2, 5),
    "smooth": (6, 8),
    "speed": (9, 12),
}
_LOCUS_COUNTS = (4, 5, 4, 2, 7, 4, 6, 7, 4, 4, 4, 4, 5)


@dataclass(frozen=True)
class SurrogateConfig:
    quality_seed: int = 0
    lateral_noise_max_m: float = 0.8
    heading_jitter_max_rad: float = 0.03
    speed_span: float = 0.15

    def __post_init__(self):
        if self.lateral_noise_max_m <= 0 or self.heading_jitter_max_rad <= 0 or self.speed_span <= 0:
            raise ConfigurationError("surrogate noise scales must be positive")
        if self.speed_span > 0.2:
            raise ConfigurationError(f"speed_span must be <= 0.2, got {self.speed_span}")

    @property
    def noise_scales(self) -> tuple[float, float, float]:
        return (self.lateral_noise_max_m, self.heading_jitter_max_rad, self.speed_span)

    def to_dict(self) -> dict:
        return {
            "quality_seed": self.quality_seed,
            "lateral_noise_max_m": self.lateral_noise_max_m,
            "heading_jitter_max_rad": self.heading_jitter_max_rad,
            "speed_span": self.speed_span,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SurrogateConfig":
        return cls(**doc)


@dataclass(frozen=True)
class EvaluationResult:
    objectives: ObjectiveVector       # computed on the validation split
    test_objectives: ObjectiveVector  # computed on the test split
    predicted_test: tuple[TrajectorySequence, ...]
    skills: tuple[float, float, float]
    # Plain RMSE on both splits regardless of the objective subset; the
    # experiment summaries need these even when RMSE is not searched on.
    rmse_validation: float = 0.0
    rmse_test: float = 0.0


def _unit_weight(quality_seed: int, locus: int, allele: int, name: str) -> float:
    digest = hashlib.blake2b(
        f"{quality_seed}:{locus}:{allele}:{name}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big") / 2.0 ** 64


@lru_cache(maxsize=32)
def _weight_table(quality_seed: int) -> dict[str, tuple[tuple[float, ...], ...]]:
    """Per skill: weights[locus_0based][allele] for that skill's loci (zeros elsewhere)."""
    table: dict[str, tuple[tuple[float, ...], ...]] = {}
    for name, loci in _SKILL_LOCI.items():
        per_locus = []
        for locus_1b in range(1, len(_LOCUS_COUNTS) + 1):
            if locus_1b in loci:
                per_locus.append(tuple(
                    _unit_weight(quality_seed, locus_1b, a, name)
                    for a in range(_LOCUS_COUNTS[locus_1b - 1])
                ))
            else:
                per_locus.append(())
        table[name] = tuple(per_locus)
    return table


@lru_cache(maxsize=32)
def _skill_bounds(quality_seed: int) -> dict[str, tuple[float, float]]:
    """Achievable (min, max) of each skill's raw score, for normalization."""
    weights = _weight_table(quality_seed)
    bounds = {}
    for name, loci in _SKILL_LOCI.items():
        a, b = _SKILL_INTERACTIONS[name]
        lo = hi = 0.0
        for locus_1b in loci:
            w = weights[name][locus_1b - 1]
            lo += min(w)
            hi += max(w)
        # The interaction term is increasing in both factors, so the joint
        # extremes coincide with the per-locus extremes.
        lo += min(weights[name][a - 1]) * min(weights[name][b - 1])
        hi += max(weights[name][a - 1]) * max(weights[name][b - 1])
        bounds[name] = (lo, hi)
    return bounds


def skill_scores(genome: Genome, cfg: SurrogateConfig) -> tuple[float, float, float]:
    """Deterministic (accuracy, smoothness, speed) skills in [0, 1]."""
    weights = _weight_table(cfg.quality_seed)
    bounds = _skill_bounds(cfg.quality_seed)
    out = []
    for name in ("acc", "smooth", "speed"):
        raw = 0.0
        for locus_1b in _SKILL_LOCI[name]:
            raw += weights[name][locus_1b - 1][genome.indices[locus_1b - 1]]
        a, b = _SKILL_INTERACTIONS[name]
        raw += (weights[name][a - 1][genome.indices[a - 1]]
                * weights[name][b - 1][genome.indices[b - 1]])
        lo, hi = bounds[name]
        out.append((raw - lo) / (hi - lo) if hi > lo else 0.5)
    return tuple(out)


def predict_sequence(
    target: TrajectorySequence,
    skills: tuple[float, float, float],
    cfg: SurrogateConfig,
    rng: Random,
) -> TrajectorySequence:
    """Transform a ground-truth target into one model's prediction.

    Longitudinal steps are rescaled in displacement space and clamped to
    the speed band, so predictions always satisfy the velocity invariant;
    with skills (1, 1, 0.5) the transform is the identity.
    """
    s_acc, s_smooth, s_speed = skills
    amp_lat = cfg.lateral_noise_max_m * (1.0 - s_acc)
    amp_jit = cfg.heading_jitter_max_rad * (1.0 - s_smooth)
    scale = 1.0 + cfg.speed_span * (2.0 * s_speed - 1.0)

    pts = target.points
    n = len(pts)
    phase = rng.uniform(0.0, _TWO_PI)
    cycles = rng.uniform(0.5, 1.5)

    ys = [pts[0].y]
    steps = []
    for i in range(n - 1):
        dt = pts[i + 1].t - pts[i].t
        d = pts[i + 1].y - pts[i].y
        d_hat = min(V_MAX_MPS * dt, max(V_MIN_MPS * dt, scale * d))
        ys.append(ys[-1] + d_hat)
        steps.append(d_hat)

    out = []
    for i in range(n):
        # Smooth low-frequency lateral offset (accuracy) plus independent
        # per-step heading wiggle (smoothness).
        off = amp_lat * math.sin(_TWO_PI * cycles * i / (n - 1) + phase) if n > 1 else 0.0
        if i > 0:
            off += math.tan(amp_jit * rng.uniform(-1.0, 1.0)) * steps[i - 1]
        out.append(TrajectoryPoint(pts[i].x + off, ys[i], pts[i].t))
    return TrajectorySequence(tuple(out))


def _pair_seed(quality_seed: int, genome: Genome, role: str, index: int) -> int:
    key = f"{quality_seed}|{','.join(map(str, genome.indices))}|{role}|{index}"
    return int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "big")


def _predict_split(genome, skills, cfg, pairs, role) -> list[TrajectorySequence]:
    return [
        predict_sequence(target, skills, cfg, Random(_pair_seed(cfg.quality_seed, genome, role, i)))
        for i, (_, target) in enumerate(pairs)
    ]


def evaluate(
    genome: Genome,
    data: Dataset,
    ids: Sequence[ObjectiveId],
    cfg: SurrogateConfig,
) -> EvaluationResult:
    """Evaluate a genome on the validation split (search) and test split (analysis)."""
    if not data.validation or not data.test:
        raise ContractError("validation and test splits must be non-empty")
    skills = skill_scores(genome, cfg)

    predicted_val = _predict_split(genome, skills, cfg, data.validation, "val")
    predicted_test = _predict_split(genome, skills, cfg, data.test, "test")
    actual_val = [target for _, target in data.validation]
    actual_test = [target for _, target in data.test]

    return EvaluationResult(
        objectives=assemble(ids, predicted_val, actual_val),
        test_objectives=assemble(ids, predicted_test, actual_test),
        predicted_test=tuple(predicted_test),
        skills=skills,
        rmse_validation=rmse(predicted_val, actual_val),
        rmse_test=rmse(predicted_test, actual_test),
    )
