"""Acceptance-rejection sampling of Gaussian identifiable tensors.

A sample is one Gaussian tensor drawn in a perfect space, decided by a
single homotopy track: a real endpoint accepts the tensor (it has a
real rank-``r`` decomposition, whose condition numbers are recorded), a
genuinely complex endpoint rejects it, and numerical failures are kept
as data rather than retried, so observed failure rates stay visible.

Every seed index owns a counter-based RNG substream derived from
``(master_seed, seed_index)`` and consumes it in a fixed order (target
tensor, then start system, then deformation phase).  Outcomes are
therefore a pure function of ``(master_seed, seed_index)``: campaigns
are reproducible at any worker count, and extending a campaign only
appends outcomes.
"""

from __future__ import annotations

import enum
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from cpdcond.condition import condition_report
from cpdcond.homotopy import (
    TrackerConfig,
    TrackStatus,
    build_start,
    classify_real,
    to_cpd,
    track_block,
)
from cpdcond.rng import substream
from cpdcond.tensors import Shape, random_cpd, random_gaussian_tensor

_BLOCK = 256  # seed indices per tracker call; fixed so campaigns are block-structured


class OutcomeKind(enum.Enum):
    REAL = "real"
    COMPLEX = "complex"
    FAILED = "failed"


@dataclass(frozen=True)
class SampleOutcome:
    """Result of deciding one Gaussian draw.

    ``kappa``/``kappa_angular`` are present exactly for real outcomes
    (``inf`` sentinels are kept: a singular recovered decomposition is
    still a decision, just an ill-conditioned one).
    """

    seed_index: int
    kind: OutcomeKind
    kappa: float | None
    kappa_angular: float | None
    tensor_norm: float
    steps: int

    def __post_init__(self) -> None:
        if self.kind is OutcomeKind.REAL:
            if self.kappa is None or self.kappa_angular is None:
                raise ValueError("real outcomes carry both condition numbers")
            if not np.isfinite(self.tensor_norm) or self.tensor_norm <= 0:
                raise ValueError("real outcomes carry a finite positive tensor norm")
        elif self.kappa is not None or self.kappa_angular is not None:
            raise ValueError("condition numbers only accompany real outcomes")


@dataclass(frozen=True)
class CampaignConfig:
    shape: Shape
    r: int
    target_real_count: int
    master_seed: int
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    workers: int = 1

    def __post_init__(self) -> None:
        if self.r * self.shape.segre_dim != self.shape.ambient_dim:
            raise ValueError(
                f"rank {self.r} in {self.shape} is not a perfect space"
            )
        if self.target_real_count < 1:
            raise ValueError("target_real_count must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass(frozen=True)
class CampaignResult:
    outcomes: tuple[SampleOutcome, ...]
    counts: tuple[int, int, int]  # (real, complex, failed)
    real_fraction: float
    wall_time: float


def _decide(shape: Shape, seed_index: int, tensor_norm: float, result, realness_tol: float) -> SampleOutcome:
    if result.status is not TrackStatus.CONVERGED:
        return SampleOutcome(seed_index, OutcomeKind.FAILED, None, None, tensor_norm, result.steps_taken)
    if not classify_real(result.solution, realness_tol):
        return SampleOutcome(seed_index, OutcomeKind.COMPLEX, None, None, tensor_norm, result.steps_taken)
    try:
        cpd = to_cpd(result.solution, shape)
    except ValueError:
        # degenerate projection (zero factor); count with the failures
        return SampleOutcome(seed_index, OutcomeKind.FAILED, None, None, tensor_norm, result.steps_taken)
    report = condition_report(cpd)
    return SampleOutcome(
        seed_index,
        OutcomeKind.REAL,
        report.kappa,
        report.kappa_angular,
        tensor_norm,
        result.steps_taken,
    )


def _run_block(args) -> list[SampleOutcome]:
    shape, r, master_seed, lo, hi, tracker = args
    count = hi - lo
    pi = shape.ambient_dim
    f0 = np.empty((count, pi), dtype=np.complex128)
    x0 = np.empty((count, pi), dtype=np.complex128)
    f1 = np.empty((count, pi), dtype=np.complex128)
    gamma = np.empty(count, dtype=np.complex128)
    norms = np.empty(count)
    for k, idx in enumerate(range(lo, hi)):
        rng = substream(master_seed, idx)
        target = random_gaussian_tensor(shape, rng)
        start_tensor, start_x = build_start(shape, r, rng)
        f0[k] = start_tensor.values
        x0[k] = start_x.data
        f1[k] = target.values
        gamma[k] = np.exp(2j * np.pi * rng.uniform())
        norms[k] = np.linalg.norm(target.values)
    results = track_block(f0, x0, f1, gamma, (shape, r), tracker)
    return [
        _decide(shape, lo + k, float(norms[k]), results[k], tracker.realness_tol)
        for k in range(count)
    ]


def sample_one(
    shape: Shape,
    r: int,
    seed_index: int,
    master_seed: int,
    tracker_cfg: TrackerConfig | None = None,
) -> SampleOutcome:
    """Decide the single Gaussian draw owned by ``seed_index``."""
    tracker = tracker_cfg or TrackerConfig()
    if r * shape.segre_dim != shape.ambient_dim:
        raise ValueError(f"rank {r} in {shape} is not a perfect space")
    return _run_block((shape, r, master_seed, seed_index, seed_index + 1, tracker))[0]


def run_campaign(cfg: CampaignConfig) -> CampaignResult:
    """Sample seed indices 0, 1, 2, ... until enough real outcomes.

    The returned list is cut at the smallest index ``n`` such that
    ``0..n`` contains ``target_real_count`` real outcomes, so the result
    does not depend on scheduling or on ``workers``.
    """
    t0 = time.perf_counter()
    outcomes: list[SampleOutcome] = []
    reals = 0
    next_lo = 0

    def blocks(n):
        nonlocal next_lo
        spans = [(next_lo + i * _BLOCK, next_lo + (i + 1) * _BLOCK) for i in range(n)]
        next_lo += n * _BLOCK
        return [(cfg.shape, cfg.r, cfg.master_seed, lo, hi, cfg.tracker) for lo, hi in spans]

    if cfg.workers == 1:
        while reals < cfg.target_real_count:
            block = _run_block(blocks(1)[0])
            outcomes.extend(block)
            reals += sum(o.kind is OutcomeKind.REAL for o in block)
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            while reals < cfg.target_real_count:
                for block in pool.map(_run_block, blocks(cfg.workers)):
                    outcomes.extend(block)
                    reals += sum(o.kind is OutcomeKind.REAL for o in block)

    # trim to the stopping index
    seen = 0
    stop = len(outcomes) - 1
    for i, o in enumerate(outcomes):
        if o.kind is OutcomeKind.REAL:
            seen += 1
            if seen == cfg.target_real_count:
                stop = i
                break
    kept = tuple(outcomes[: stop + 1])
    n_real = sum(o.kind is OutcomeKind.REAL for o in kept)
    n_complex = sum(o.kind is OutcomeKind.COMPLEX for o in kept)
    n_failed = len(kept) - n_real - n_complex
    fraction = n_real / (n_real + n_complex) if n_real + n_complex else float("nan")
    return CampaignResult(
        outcomes=kept,
        counts=(n_real, n_complex, n_failed),
        real_fraction=fraction,
        wall_time=time.perf_counter() - t0,
    )


def sample_random_output(
    shape: Shape, r: int, count: int, rng: np.random.Generator
) -> list[tuple[float, float]]:
    """Condition numbers of decompositions with Gaussian rank-1 terms.

    This is the baseline distribution for *outputs* of a decomposition
    drawn directly, as opposed to decompositions recovered from Gaussian
    *tensors*; the two distributions differ sharply in their tails.
    """
    out = []
    for _ in range(count):
        report = condition_report(random_cpd(shape, r, rng))
        out.append((report.kappa, report.kappa_angular))
    return out


def write_outcomes_csv(path, outcomes, shape: Shape, r: int) -> None:
    """Delimited per-sample rows; floats use shortest round-trip form."""

    def fmt(v):
        return "" if v is None else repr(float(v))

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("shape,r,seed_index,kind,kappa,kappa_ang,tensor_norm,steps\n")
        for o in outcomes:
            fh.write(
                f"{shape},{r},{o.seed_index},{o.kind.value},"
                f"{fmt(o.kappa)},{fmt(o.kappa_angular)},{fmt(o.tensor_norm)},{o.steps}\n"
            )


def campaign_summary(cfg: CampaignConfig, result: CampaignResult) -> dict:
    real, cplx, failed = result.counts
    return {
        "shape": str(cfg.shape),
        "r": cfg.r,
        "master_seed": cfg.master_seed,
        "target_real_count": cfg.target_real_count,
        "total_samples": len(result.outcomes),
        "counts": {"real": real, "complex": cplx, "failed": failed},
        "real_fraction": result.real_fraction,
        "wall_time_s": result.wall_time,
    }
