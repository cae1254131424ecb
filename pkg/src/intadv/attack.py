"""Derivative-free search for adversarial perturbations on the integer grid.

The optimizer never leaves the discrete domain: it samples integer offset
fields inside a bounded search space, scores each candidate with a single
oracle query through a dissatisfaction degree in [0, 1] (exactly 0 once the
attack predicate holds), and learns where to look next by shrinking
per-coordinate bounds toward the best scored samples and away from the
majority side of the worst ones.  Because every queried image is an integer
image at max-offset distance at most ``epsilon`` from the original, a success
here is a success on the deployed classifier; there is no rounding step that
could undo it.

Reproducibility: one RNG stream per attack, seeded from the config.  Draws
are consumed in a fixed order -- the initial batch first, then per refined
sample: the positive-sample pick, the coordinate picks (distinct, without
replacement), one interval draw per refined coordinate in pick order, and
finally the replacement draws in the same coordinate order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .domain import (
    ImageShape,
    IntegerImage,
    Perturbation,
    SearchSpace,
    apply_perturbation,
    upscale_perturbation,
)
from .errors import ConfigurationError
from .oracle import ClassifierOracle, top_j

__all__ = [
    "MODES",
    "AttackConfig",
    "ScoredPerturbation",
    "AttackOutcome",
    "degree_from_probs",
    "dissatisfaction",
    "initial_sample",
    "partition",
    "refine_space",
    "sample_refined",
    "run_attack",
]

MODES = ("untargeted", "targeted", "top1")


@dataclass(frozen=True)
class AttackConfig:
    """Knobs of one attack run.

    ``epsilon`` bounds every per-coordinate offset (integer pixel units).
    ``sample_size`` new candidates are drawn per iteration, the best
    ``ranking_threshold`` candidates anchor the refinement, and
    ``coordinate_threshold`` coordinates are re-drawn per new candidate.
    ``resize`` runs the whole search over a reduced grid that is bilinearly
    enlarged only when an image is evaluated.
    """

    epsilon: int
    mode: str = "untargeted"
    target_class: int | None = None
    target_rank: int | None = None
    sample_size: int = 3
    ranking_threshold: int = 2
    coordinate_threshold: int = 2
    iteration_threshold: int = 30000
    timeout: float | None = None
    query_budget: int | None = None
    resize: ImageShape | None = None
    seed: int = 0
    cache_queries: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        for name in ("epsilon", "sample_size", "ranking_threshold",
                     "coordinate_threshold", "iteration_threshold"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be a positive integer")
        if self.mode == "targeted" and self.target_class is None and self.target_rank is None:
            raise ConfigurationError("targeted mode needs target_class or target_rank")
        if self.target_rank is not None and self.target_rank < 1:
            raise ConfigurationError("target_rank must be a positive integer")
        if self.timeout is not None and self.timeout < 0:
            raise ConfigurationError("timeout must be nonnegative")
        if self.query_budget is not None and self.query_budget < 1:
            raise ConfigurationError("query_budget must be a positive integer")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class ScoredPerturbation:
    delta: Perturbation
    degree: float

    def __post_init__(self):
        if not 0.0 <= self.degree <= 1.0:
            raise ValueError(f"degree must lie in [0, 1], got {self.degree}")


@dataclass(frozen=True)
class AttackOutcome:
    """Result of one attack: success holds exactly when the final degree is 0.

    ``final_perturbation`` is always full size (upscaled when the search ran
    on a reduced grid), so ``apply_perturbation(d, final_perturbation)``
    reproduces the queried image.  ``degree_trace`` holds the best degree
    after initialization and after each completed iteration; it never
    increases.
    """

    success: bool
    adversarial: IntegerImage | None
    final_perturbation: Perturbation
    final_degree: float
    iterations_used: int
    queries_used: int
    elapsed: float
    degree_trace: tuple[float, ...]
    error: str | None = None


def degree_from_probs(probs, mode: str, original_label: int | None = None,
                      target_class: int | None = None) -> float:
    """Dissatisfaction degree of an already-classified image.

    Untargeted: 0 once the top-1 class moved off ``original_label``, else one
    minus the runner-up probability.  Targeted: 0 once the top-1 class equals
    ``target_class``, else one minus that class's probability.  Top-1-only: 0
    once the top-1 class moved, else the top-1 probability itself (usable when
    the oracle exposes nothing but its top answer).  Always in [0, 1], and 0
    exactly when the attack predicate holds.
    """
    if mode not in MODES:
        raise ConfigurationError(f"unknown mode {mode!r}")
    label, top_prob = top_j(probs, 1)
    if mode == "untargeted":
        if original_label is None:
            raise ConfigurationError("untargeted mode needs the original label")
        if label != original_label:
            return 0.0
        return 1.0 - top_j(probs, 2)[1]
    if mode == "targeted":
        if target_class is None:
            raise ConfigurationError("targeted mode needs a target class")
        if not 0 <= target_class < probs.class_count:
            raise ValueError(f"target class {target_class} out of range")
        if label == target_class:
            return 0.0
        return 1.0 - float(probs.probs[target_class])
    if original_label is None:
        raise ConfigurationError("top1 mode needs the original label")
    if label != original_label:
        return 0.0
    return top_prob


def dissatisfaction(oracle: ClassifierOracle, d: IntegerImage, delta: Perturbation,
                    mode: str, original_label: int | None = None,
                    target_class: int | None = None) -> float:
    """Score a full-size perturbation with exactly one oracle query."""
    image = apply_perturbation(d, delta)
    return degree_from_probs(oracle.predict(image), mode, original_label, target_class)


def initial_sample(space: SearchSpace, n: int, rng: np.random.Generator) -> list[Perturbation]:
    """Draw ``n`` perturbations coordinatewise uniformly within the bounds."""
    if n < 1:
        raise ValueError(f"sample count must be positive, got {n}")
    draws = rng.integers(space.low, space.high.astype(np.int64) + 1,
                         size=(n, space.shape.coordinate_count))
    return [
        Perturbation._wrap(space.shape, space.budget, row.astype(np.int32))
        for row in draws
    ]


def partition(scored: list[ScoredPerturbation], k: int) -> tuple[list[ScoredPerturbation],
                                                                 list[ScoredPerturbation]]:
    """Split into the k smallest degrees and the rest.

    Ties break toward earlier list positions; the remainder keeps its original
    order.  The remainder must be nonempty.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if len(scored) <= k:
        raise ValueError(f"need more than k={k} scored perturbations, got {len(scored)}")
    degrees = np.array([sp.degree for sp in scored])
    order = np.argsort(degrees, kind="stable")
    chosen = set(int(i) for i in order[:k])
    best = [scored[int(i)] for i in order[:k]]
    rest = [sp for i, sp in enumerate(scored) if i not in chosen]
    return best, rest


def refine_space(space: SearchSpace, b_plus: Perturbation,
                 b_minus: list[Perturbation], u: int,
                 rng: np.random.Generator) -> tuple[SearchSpace, np.ndarray]:
    """Shrink the bounds toward ``b_plus`` at ``u`` random coordinates.

    At each picked coordinate the rejected samples are split into those above
    and those below ``b_plus``.  When the strict majority sits above, the high
    bound drops to a uniform draw between ``b_plus`` and the lowest of them;
    otherwise the low bound rises to a draw between the highest sample below
    and ``b_plus`` (bounds are left alone when no sample sits below).  Both
    draw intervals include their endpoints, so ``b_plus`` always stays
    feasible.  Returns the refined space and the picked coordinates.
    """
    n = space.shape.coordinate_count
    if not 1 <= u <= n:
        raise ValueError(f"u must lie in [1, {n}], got {u}")
    if b_plus.shape != space.shape:
        raise ValueError("b_plus shape does not match the space")
    if not space.contains(b_plus):
        raise ValueError("b_plus must lie inside the space bounds")
    if not b_minus:
        raise ValueError("need at least one rejected sample")
    for b in b_minus:
        if b.shape != space.shape:
            raise ValueError("rejected-sample shape does not match the space")
        if not space.contains(b):
            raise ValueError("rejected samples must lie inside the space bounds")

    picked = rng.choice(n, size=u, replace=False)
    low = space.low.copy()
    high = space.high.copy()
    minus_vals = np.stack([b.values for b in b_minus])

    for p in picked:
        p = int(p)
        anchor = int(b_plus.values[p])
        col = minus_vals[:, p]
        above = col[col > anchor]
        below = col[col < anchor]
        if above.size > below.size:
            high[p] = rng.integers(anchor, int(above.min()), endpoint=True)
        elif below.size > 0:
            low[p] = rng.integers(int(below.max()), anchor, endpoint=True)

    return SearchSpace(space.shape, space.budget, low, high), picked


def sample_refined(b_plus: Perturbation, refined: SearchSpace,
                   coords: np.ndarray, rng: np.random.Generator) -> Perturbation:
    """Copy ``b_plus``, re-drawing each listed coordinate within the refined bounds."""
    out = b_plus.values.copy()
    for p in coords:
        p = int(p)
        out[p] = rng.integers(int(refined.low[p]), int(refined.high[p]), endpoint=True)
    return Perturbation._wrap(refined.shape, refined.budget, out)


def _immediate_outcome(d: IntegerImage, epsilon: int, queries: int,
                       started: float) -> AttackOutcome:
    zero = Perturbation.zeros(d.shape, epsilon)
    return AttackOutcome(
        success=True,
        adversarial=d,
        final_perturbation=zero,
        final_degree=0.0,
        iterations_used=0,
        queries_used=queries,
        elapsed=time.perf_counter() - started,
        degree_trace=(0.0,),
    )


def run_attack(oracle: ClassifierOracle, d: IntegerImage, config: AttackConfig,
               original_label: int | None = None) -> AttackOutcome:
    """Search for an adversarial perturbation of ``d`` within the budget.

    ``original_label`` is the oracle's clean top-1 class for ``d``.  Pass it
    when already known (batch runners probe each image once anyway); then the
    attack spends queries only on candidate evaluations, exactly
    ``(sample_size + ranking_threshold) + sample_size * iterations``.  When
    omitted, one extra probe query establishes the label first.  A targeted
    attack whose target already matches the clean prediction returns
    immediately with the unmodified image.
    """
    started = time.perf_counter()
    oracle_shape = oracle.input_shape()
    if d.shape != oracle_shape:
        raise ValueError(f"oracle expects shape {oracle_shape}, got {d.shape}")
    if config.mode == "targeted" and config.target_class is None:
        raise ConfigurationError(
            "targeted run_attack needs a concrete target_class; resolve target_rank first"
        )

    working_shape = config.resize if config.resize is not None else d.shape
    if config.resize is not None:
        r = config.resize
        if r.channels != d.shape.channels:
            raise ConfigurationError("resized search shape must keep the channel count")
        if r.width > d.shape.width or r.height > d.shape.height:
            raise ConfigurationError("resized search shape must not exceed the image size")
    n_coords = working_shape.coordinate_count
    s = config.sample_size
    k = config.ranking_threshold
    if config.coordinate_threshold > n_coords:
        raise ConfigurationError(
            f"coordinate_threshold {config.coordinate_threshold} exceeds the "
            f"{n_coords} coordinates of the search shape"
        )
    if config.query_budget is not None and config.query_budget < s + k:
        raise ConfigurationError(
            f"query_budget {config.query_budget} cannot cover the initial {s + k} evaluations"
        )

    queries = 0
    if original_label is None:
        probs = oracle.predict(d)
        queries += 1
        original_label = top_j(probs, 1)[0]
    if config.mode == "targeted" and original_label == config.target_class:
        return _immediate_outcome(d, config.epsilon, queries, started)

    rng = np.random.default_rng(config.seed)
    full_space = SearchSpace.full(working_shape, config.epsilon)
    cache: dict[bytes, float] | None = {} if config.cache_queries else None

    def evaluate(delta: Perturbation) -> float:
        nonlocal queries
        if cache is not None:
            key = delta.values.tobytes()
            hit = cache.get(key)
            if hit is not None:
                return hit
        full = delta if config.resize is None else upscale_perturbation(delta, d.shape)
        degree = dissatisfaction(oracle, d, full, config.mode,
                                 original_label, config.target_class)
        queries += 1
        if cache is not None:
            cache[key] = degree
        return degree

    population = [
        ScoredPerturbation(delta, evaluate(delta))
        for delta in initial_sample(full_space, s + k, rng)
    ]
    population.sort(key=lambda sp: sp.degree)  # stable: ties keep draw order
    best = population[0]
    trace = [best.degree]
    iterations = 0

    for t in range(1, config.iteration_threshold + 1):
        if best.degree == 0.0:
            break
        if config.timeout is not None and time.perf_counter() - started >= config.timeout:
            break
        if config.query_budget is not None and queries + s > config.query_budget:
            break

        plus, minus = partition(population, k)
        minus_deltas = [sp.delta for sp in minus]
        fresh = []
        for _ in range(s):
            anchor = plus[int(rng.integers(0, k))].delta
            refined, coords = refine_space(full_space, anchor, minus_deltas,
                                           config.coordinate_threshold, rng)
            fresh.append(sample_refined(anchor, refined, coords, rng))
            # The next refinement starts again from the full space.

        pool = population + [ScoredPerturbation(delta, evaluate(delta)) for delta in fresh]
        pool.sort(key=lambda sp: sp.degree)  # stable: survivors keep their order
        population = pool[: s + k]
        best = population[0]
        iterations = t
        trace.append(best.degree)

    success = best.degree == 0.0
    full_best = (best.delta if config.resize is None
                 else upscale_perturbation(best.delta, d.shape))
    return AttackOutcome(
        success=success,
        adversarial=apply_perturbation(d, full_best) if success else None,
        final_perturbation=full_best,
        final_degree=best.degree,
        iterations_used=iterations,
        queries_used=queries,
        elapsed=time.perf_counter() - started,
        degree_trace=tuple(trace),
    )
