"""Batch attack runner and the success-rate metric suite.

A batch report carries, besides the per-image outcomes, the counts behind the
three headline ratios: ``sr`` (fraction of images with a successful
continuous-domain adversarial), ``tsr`` (fraction whose adversarial survives
as an integer image) and ``gap``, their relative difference.  Attacks run
natively on the integer grid, so for them the two counts coincide and the gap
is zero by construction; the gap study exists to measure externally produced
continuous adversarials, where rounding can and does destroy successes.
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .attack import AttackConfig, AttackOutcome, degree_from_probs, run_attack
from .domain import IntegerImage, Perturbation, RealImage
from .errors import ConfigurationError
from .normalization import NormalizationScheme, denormalize
from .oracle import ClassifierOracle, top_j

__all__ = [
    "BatchReport",
    "assemble_report",
    "run_batch",
    "mse",
    "gap_study",
    "derive_seed",
]


def mse(d: IntegerImage, d_adv: IntegerImage) -> float:
    """Mean squared pixel difference on the unit scale (differences / 255)."""
    if d.shape != d_adv.shape:
        raise ValueError(f"shape mismatch: {d.shape} vs {d_adv.shape}")
    diff = (d.values.astype(np.float64) - d_adv.values.astype(np.float64)) / 255.0
    return float(np.mean(diff * diff))


def derive_seed(base_seed: int, image: IntegerImage) -> int:
    """Per-image seed from the base seed and the pixel content.

    Tied to content rather than list position, so batch aggregates do not
    depend on the order images are supplied in.
    """
    h = hashlib.sha256()
    h.update(int(base_seed).to_bytes(8, "little"))
    dims = np.array([image.shape.width, image.shape.height, image.shape.channels],
                    dtype="<u4")
    h.update(dims.tobytes())
    h.update(image.values.astype(np.uint8).tobytes())
    return int.from_bytes(h.digest()[:8], "little")


@dataclass(frozen=True)
class BatchReport:
    """Per-image outcomes plus the aggregate metrics.

    Averages (queries, seconds, mean squared error) cover successful images
    only and are ``None`` when nothing succeeded.
    """

    outcomes: tuple[AttackOutcome, ...]
    real_successes: tuple[bool, ...]
    integer_successes: tuple[bool, ...]
    mses: tuple[float | None, ...]
    n: int
    n_real: int
    n_integer: int
    sr: float
    tsr: float
    gap: float
    avg_queries: float | None
    atc: float | None
    avg_mse: float | None

    def __post_init__(self):
        if not 0.0 <= self.tsr <= self.sr <= 1.0:
            raise ValueError(f"metrics out of order: tsr={self.tsr}, sr={self.sr}")
        if not 0.0 <= self.gap <= 1.0:
            raise ValueError(f"gap must lie in [0, 1], got {self.gap}")


def assemble_report(outcomes, originals, real_successes=None,
                    integer_successes=None) -> BatchReport:
    """Build a report; success flags default to each outcome's own flag."""
    if real_successes is None:
        real_successes = [out.success for out in outcomes]
    if integer_successes is None:
        integer_successes = [out.success for out in outcomes]
    n = len(outcomes)
    if n == 0:
        raise ValueError("need at least one image")
    mses = tuple(
        mse(orig, out.adversarial) if out.adversarial is not None else None
        for orig, out in zip(originals, outcomes)
    )
    n_real = sum(real_successes)
    n_integer = sum(integer_successes)
    sr = n_real / n
    tsr = n_integer / n
    gap = (sr - tsr) / sr if sr > 0 else 0.0
    won = [i for i, ok in enumerate(integer_successes) if ok]
    avg_queries = float(np.mean([outcomes[i].queries_used for i in won])) if won else None
    atc = float(np.mean([outcomes[i].elapsed for i in won])) if won else None
    measured = [mses[i] for i in won if mses[i] is not None]
    avg_mse = float(np.mean(measured)) if measured else None
    return BatchReport(
        outcomes=tuple(outcomes),
        real_successes=tuple(bool(b) for b in real_successes),
        integer_successes=tuple(bool(b) for b in integer_successes),
        mses=mses,
        n=n,
        n_real=n_real,
        n_integer=n_integer,
        sr=sr,
        tsr=tsr,
        gap=gap,
        avg_queries=avg_queries,
        atc=atc,
        avg_mse=avg_mse,
    )


def _attack_one(oracle: ClassifierOracle, image: IntegerImage,
                config: AttackConfig) -> AttackOutcome:
    started = time.perf_counter()
    try:
        seed = derive_seed(config.seed, image)
        clean = oracle.predict(image)
        label = top_j(clean, 1)[0]
        target = config.target_class
        if config.mode == "targeted" and config.target_rank is not None:
            target = top_j(clean, config.target_rank)[0]
        per_image = replace(config, seed=seed, target_class=target, target_rank=None)
        return run_attack(oracle, image, per_image, original_label=label)
    except Exception as e:  # noqa: BLE001 - a bad image must not sink the batch
        return AttackOutcome(
            success=False,
            adversarial=None,
            final_perturbation=Perturbation.zeros(image.shape, config.epsilon),
            final_degree=1.0,
            iterations_used=0,
            queries_used=0,
            elapsed=time.perf_counter() - started,
            degree_trace=(),
            error=f"{type(e).__name__}: {e}",
        )


def run_batch(oracle: ClassifierOracle, images: list[IntegerImage],
              config: AttackConfig, workers: int = 1) -> BatchReport:
    """Attack every image and aggregate the metrics.

    Each image gets its own content-derived seed and one clean probe that
    supplies the original label (and, for rank-based targeting, the target
    class).  Failures of individual images are recorded as failed outcomes
    with a diagnostic, never raised.  ``workers`` bounds a thread pool; the
    per-image outcomes are independent of how they were scheduled.
    """
    if not images:
        raise ValueError("need at least one image")
    if workers < 1:
        raise ValueError(f"workers must be positive, got {workers}")
    if workers == 1:
        outcomes = [_attack_one(oracle, img, config) for img in images]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda img: _attack_one(oracle, img, config), images))
    return assemble_report(outcomes, images)


def _difference_perturbation(original: IntegerImage, modified: IntegerImage) -> Perturbation:
    diff = modified.values.astype(np.int32) - original.values.astype(np.int32)
    budget = max(1, int(np.abs(diff).max(initial=0)))
    return Perturbation(original.shape, budget, diff)


def gap_study(oracle: ClassifierOracle, originals: list[IntegerImage],
              real_advs: list[RealImage], scheme: NormalizationScheme,
              mode: str = "untargeted", labels: list[int] | None = None,
              target_class: int | None = None) -> BatchReport:
    """Measure how many continuous adversarials survive denormalization.

    Each continuous image is first classified directly through the oracle's
    real-domain entry point; those that satisfy the attack predicate count
    toward ``sr``.  Each of those survivors is then denormalized with
    ``scheme`` and re-classified as an integer image; the ones still
    satisfying the predicate count toward ``tsr``.  When ``labels`` is
    omitted, each original is probed once for its clean label.
    """
    if len(originals) != len(real_advs):
        raise ValueError(
            f"got {len(originals)} originals but {len(real_advs)} continuous adversarials"
        )
    if not originals:
        raise ValueError("need at least one image")
    if labels is not None and len(labels) != len(originals):
        raise ValueError(f"got {len(labels)} labels for {len(originals)} images")
    if mode == "targeted" and target_class is None:
        raise ConfigurationError("targeted gap study needs a target class")

    outcomes = []
    real_flags = []
    integer_flags = []
    for i, (original, adv_v) in enumerate(zip(originals, real_advs)):
        started = time.perf_counter()
        queries = 0
        if labels is None:
            label = top_j(oracle.predict(original), 1)[0]
            queries += 1
        else:
            label = labels[i]

        real_degree = degree_from_probs(oracle.predict_real(adv_v), mode, label, target_class)
        real_ok = real_degree == 0.0

        if real_ok:
            d_int = denormalize(adv_v, scheme)
            queries += 1
            degree = degree_from_probs(oracle.predict(d_int), mode, label, target_class)
            int_ok = degree == 0.0
            adversarial = d_int if int_ok else None
            delta = _difference_perturbation(original, d_int)
        else:
            int_ok = False
            degree = real_degree
            adversarial = None
            delta = Perturbation.zeros(original.shape, 1)

        real_flags.append(real_ok)
        integer_flags.append(int_ok)
        outcomes.append(AttackOutcome(
            success=int_ok,
            adversarial=adversarial,
            final_perturbation=delta,
            final_degree=degree,
            iterations_used=0,
            queries_used=queries,
            elapsed=time.perf_counter() - started,
            degree_trace=(degree,),
        ))
    return assemble_report(outcomes, originals, real_flags, integer_flags)
