"""Seeded simulator of noisy exploration rounds and a Monte Carlo harness
that compares fused-map accuracy with exact binomial predictions."""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InfeasibleRounds, ParameterError
from .fuse import MeanMap, fuse_threshold, ml_count_threshold, ml_decision
from .grid import CellClass, GroundTruthMap, ObservationMap, classify_cells, coverage_counts
from .plan import (
    ConfidenceParams,
    achievable_confidence,
    binom_tail,
    choose_threshold,
    count_threshold,
    exact_confidence_counts,
    required_rounds,
    threshold_interval,
)
from .sensor import PatternKnowledge, QMode, SensorModel, false_positive_map, q_floor

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
PATTERNS = ("random", "lines", "empty")


def splitmix64(x: int) -> int:
    """SplitMix64 finaliser (Steele, Lea & Flood 2014)."""
    x = (x + _GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, *keys: int) -> int:
    h = splitmix64(master_seed & MASK64)
    for k in keys:
        h = splitmix64(h ^ (k & MASK64))
    return h


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class ScenarioConfig:
    width: int
    height: int
    sensor: SensorModel
    d: float
    pattern: str = "random"
    density: float = 0.2
    spacing: int = 3
    rounds: Optional[int] = None  # None: use the planned round count
    trials: int = 100
    master_seed: int = 0
    ml: bool = False
    q_prime: Optional[float] = None  # None: derive from the pattern
    workers: int = 1

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ParameterError(f"grid must be at least 1x1, got {self.height}x{self.width}")
        if self.pattern not in PATTERNS:
            raise ParameterError(f"pattern must be one of {PATTERNS}, got {self.pattern!r}")
        if not 0.0 <= self.density <= 1.0:
            raise ParameterError(f"density must lie in [0, 1], got {self.density}")
        if self.pattern == "lines" and self.spacing < 3:
            raise ParameterError(f"line spacing must be >= 3, got {self.spacing}")
        if self.rounds is not None and self.rounds < 1:
            raise ParameterError(f"rounds must be >= 1, got {self.rounds}")
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if self.workers < 1:
            raise ParameterError(f"workers must be >= 1, got {self.workers}")

    @property
    def p(self) -> float:
        return self.sensor.p

    def planning_q_prime(self) -> float:
        if self.q_prime is not None:
            return self.q_prime
        knowledge = PatternKnowledge.SEPARATED_LINES if self.pattern == "lines" else PatternKnowledge.NOTHING
        return q_floor(self.sensor.de, knowledge, self.sensor.qmode)

    def as_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "pattern": self.pattern,
            "density": self.density,
            "spacing": self.spacing,
            "p": self.p,
            "nh": len(self.sensor.nh),
            "qmode": self.sensor.qmode.value,
            "d": self.d,
            "rounds": "auto" if self.rounds is None else self.rounds,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "fusion": "ml" if self.ml else "threshold",
            "q_prime": self.q_prime,
        }


def generate_ground_truth(config: ScenarioConfig) -> GroundTruthMap:
    h, w = config.height, config.width
    cells = np.zeros((h, w), dtype=np.int8)
    if config.pattern == "lines":
        cells[:, 1::config.spacing] = 1
    elif config.pattern == "random":
        rng = make_rng(derive_seed(config.master_seed, 0, 0))
        cells = (rng.random((h, w)) < config.density).astype(np.int8)
    return GroundTruthMap(cells)


class ObservationSampler:
    """Draws observation rounds for a fixed truth and sensor.

    Each obstacle reads 1 with probability p; otherwise its detection lands at
    an off-centre offset drawn from the error distribution, marking that cell
    1 if it is an in-grid free cell. Scatters onto obstacles or off the grid
    are dropped.
    """

    def __init__(self, truth: GroundTruthMap, sensor: SensorModel):
        self.shape = truth.shape
        h, w = self.shape
        self.p = sensor.p
        rows, cols = np.nonzero(truth.cells == 1)
        self.obs_rows, self.obs_cols = rows, cols
        self.obs_flat = rows * w + cols
        offsets = list(sensor.de.off_center)
        masses = np.array([sensor.de.off_center[o] for o in offsets], dtype=float)
        self.offsets = np.array(offsets, dtype=np.int64).reshape(-1, 2)
        cdf = np.cumsum(masses / masses.sum())
        cdf[-1] = 1.0
        self.cdf = cdf
        self.free_flat = (truth.cells == 0).ravel()

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        h, w = self.shape
        out = np.zeros(h * w, dtype=np.int8)
        k = self.obs_flat.size
        if k == 0:
            return out.reshape(h, w)
        detect = rng.random(k) < self.p
        pick = np.searchsorted(self.cdf, rng.random(k), side="right")
        pick = np.minimum(pick, len(self.cdf) - 1)
        out[self.obs_flat[detect]] = 1
        miss = ~detect
        tr = self.obs_rows[miss] + self.offsets[pick[miss], 0]
        tc = self.obs_cols[miss] + self.offsets[pick[miss], 1]
        inside = (tr >= 0) & (tr < h) & (tc >= 0) & (tc < w)
        target = tr[inside] * w + tc[inside]
        target = target[self.free_flat[target]]
        out[target] = 1
        return out.reshape(h, w)


def simulate_observation(truth: GroundTruthMap, sensor: SensorModel, seed: int) -> ObservationMap:
    return ObservationMap(ObservationSampler(truth, sensor).sample(make_rng(seed)))


@dataclass(frozen=True)
class _Decision:
    rounds: int
    k_min: int
    c: Optional[float]
    nominal_d: float
    degraded: bool


def _decide(config: ScenarioConfig, params: ConfidenceParams) -> tuple[_Decision, int]:
    n_req = required_rounds(params)
    n = n_req if config.rounds is None else config.rounds
    if config.ml:
        k = ml_count_threshold(params.p, params.q_prime, n)
        return _Decision(n, k, None, params.d, n < n_req), n_req
    try:
        c = choose_threshold(*threshold_interval(params, n))
        return _Decision(n, count_threshold(c, n), c, params.d, False), n_req
    except InfeasibleRounds:
        d_prime, c = achievable_confidence(params.p, params.q_prime, n)
        return _Decision(n, count_threshold(c, n), c, d_prime, True), n_req


def _run_chunk(truth: GroundTruthMap, config: ScenarioConfig, decision: _Decision,
               q_prime: float, start: int, stop: int) -> np.ndarray:
    """Per-cell count of correct fused decisions over trials [start, stop)."""
    sampler = ObservationSampler(truth, config.sensor)
    correct = np.zeros(truth.shape, dtype=np.int64)
    n = decision.rounds
    for t in range(start, stop):
        counts = np.zeros(truth.shape, dtype=np.int64)
        for r in range(1, n + 1):
            counts += sampler.sample(make_rng(derive_seed(config.master_seed, t, r)))
        if config.ml:
            fused = ml_decision(counts, n, config.p, q_prime).astype(np.int8)
        else:
            fused = fuse_threshold(MeanMap(counts, n), decision.c).cells
        correct += fused == truth.cells
    return correct


@dataclass
class ClassRecord:
    cells: int
    trials_total: int
    correct: int
    predicted: float
    standard_error: float
    planning_prediction: float
    worst_cell_accuracy: float

    @property
    def empirical(self) -> float:
        return self.correct / self.trials_total if self.trials_total else 1.0

    @property
    def z(self) -> float:
        diff = self.empirical - self.predicted
        if self.standard_error == 0.0:
            return 0.0 if abs(diff) < 1e-12 else math.copysign(math.inf, diff)
        return diff / self.standard_error

    @property
    def within_3sigma(self) -> bool:
        return abs(self.empirical - self.predicted) <= 3.0 * self.standard_error + 1e-12

    def as_dict(self, nominal_d: float) -> dict:
        return {
            "cells": self.cells,
            "trials_total": self.trials_total,
            "correct": self.correct,
            "empirical_accuracy": self.empirical,
            "predicted_accuracy": self.predicted,
            "standard_error": self.standard_error,
            "z_score": self.z,
            "within_3sigma": self.within_3sigma,
            "planning_prediction": self.planning_prediction,
            "below_nominal": self.predicted < nominal_d,
            "nominal_shortfall": max(0.0, nominal_d - self.predicted),
            "worst_cell_accuracy": self.worst_cell_accuracy,
        }


@dataclass
class TrialStats:
    config: ScenarioConfig
    q_prime: float
    n_required: int
    rounds: int
    c: Optional[float]
    count_threshold: int
    nominal_d: float
    degraded: bool
    d_prime: float
    classes: dict[str, ClassRecord]
    worst_cell_accuracy: float
    truth_obstacles: int
    runtime_s: float = field(default=0.0, compare=False)

    @property
    def agreement(self) -> bool:
        return all(rec.within_3sigma for rec in self.classes.values())

    def as_dict(self) -> dict:
        return {
            "schema": "gridfuse.trialstats/1",
            "config": self.config.as_dict(),
            "seeds": {"master_seed": self.config.master_seed, "derivation": "splitmix64(master, trial, round)"},
            "q_prime": self.q_prime,
            "n_required": self.n_required,
            "rounds": self.rounds,
            "c": self.c,
            "count_threshold": self.count_threshold,
            "nominal_d": self.nominal_d,
            "target_d": self.config.d,
            "degraded": self.degraded,
            "achieved_d_prime": self.d_prime,
            "truth_obstacles": self.truth_obstacles,
            "worst_cell_accuracy": self.worst_cell_accuracy,
            "oracle_agreement": self.agreement,
            "classes": {k: rec.as_dict(self.nominal_d) for k, rec in self.classes.items()},
        }

    def to_json(self) -> str:
        # runtime is left out so equal configs give byte-identical documents
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


def cell_predictions(truth: GroundTruthMap, sensor: SensorModel, rounds: int, k_min: int) -> np.ndarray:
    """Exact probability that each cell is fused correctly under the simulator's model."""
    fp = false_positive_map(truth, sensor.de, QMode.PRODUCT)
    pred = np.empty(truth.shape)
    obstacles = truth.cells == 1
    pred[obstacles] = binom_tail(rounds, sensor.p, k_min, rounds)
    cache = {}
    for idx in zip(*np.nonzero(~obstacles)):
        f = float(fp[idx])
        if f not in cache:
            cache[f] = binom_tail(rounds, f, 0, k_min - 1)
        pred[idx] = cache[f]
    return pred


def _group_masks(truth: GroundTruthMap, sensor: SensorModel) -> dict[str, np.ndarray]:
    classes = classify_cells(truth, sensor.nh)
    cover = coverage_counts(truth, sensor.nh.offsets)
    in_m = classes == CellClass.FREE_IN_M
    return {
        "obstacle": classes == CellClass.OBSTACLE,
        "free_in_m": in_m,
        "free_in_m_cover1": in_m & (cover == 1),
        "free_in_m_cover2": in_m & (cover == 2),
        "free_in_m_cover3plus": in_m & (cover >= 3),
        "free_outside_m": classes == CellClass.FREE_OUTSIDE_M,
    }


def run_monte_carlo(config: ScenarioConfig, truth: GroundTruthMap | None = None) -> TrialStats:
    """Plan, simulate ``trials`` independent explorations, fuse, and score against truth."""
    started = time.perf_counter()
    q_prime = config.planning_q_prime()
    params = ConfidenceParams(config.p, q_prime, config.d)
    decision, n_req = _decide(config, params)
    if truth is None:
        truth = generate_ground_truth(config)

    if config.workers == 1 or config.trials < 2:
        correct = _run_chunk(truth, config, decision, q_prime, 1, config.trials + 1)
    else:
        bounds = np.linspace(1, config.trials + 1, min(config.workers, config.trials) + 1).astype(int)
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [
                pool.submit(_run_chunk, truth, config, decision, q_prime, int(a), int(b))
                for a, b in zip(bounds[:-1], bounds[1:])
            ]
            correct = sum(f.result() for f in futures)

    pred = cell_predictions(truth, config.sensor, decision.rounds, decision.k_min)
    plan_obs, plan_free = exact_confidence_counts(config.p, 1.0 - q_prime, decision.rounds, decision.k_min)
    trials = config.trials
    per_cell_acc = correct / trials
    records = {}
    for name, mask in _group_masks(truth, config.sensor).items():
        cells = int(mask.sum())
        if cells == 0:
            continue
        pc = pred[mask]
        total = cells * trials
        records[name] = ClassRecord(
            cells=cells,
            trials_total=total,
            correct=int(correct[mask].sum()),
            predicted=float(pc.mean()),
            standard_error=math.sqrt(float(np.sum(pc * (1.0 - pc))) * trials) / total,
            planning_prediction=plan_obs if name == "obstacle" else (1.0 if name == "free_outside_m" else plan_free),
            worst_cell_accuracy=float(per_cell_acc[mask].min()),
        )
    d_prime, _ = achievable_confidence(params.p, params.q_prime, decision.rounds)
    return TrialStats(
        config=config,
        q_prime=q_prime,
        n_required=n_req,
        rounds=decision.rounds,
        c=decision.c,
        count_threshold=decision.k_min,
        nominal_d=decision.nominal_d,
        degraded=decision.degraded,
        d_prime=d_prime,
        classes=records,
        worst_cell_accuracy=float(per_cell_acc.min()),
        truth_obstacles=int((truth.cells == 1).sum()),
        runtime_s=time.perf_counter() - started,
    )


def with_workers(config: ScenarioConfig, workers: int) -> ScenarioConfig:
    return replace(config, workers=workers)
