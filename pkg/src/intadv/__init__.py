"""Black-box adversarial attacks crafted directly in the integer pixel domain.

The package searches for adversarial images on the integer grid itself -- a
bounded derivative-free optimizer over per-pixel offsets -- so a found attack
never degrades when written back to pixels.  Alongside the optimizer it ships
the normalization round-trip machinery, success-rate metrics and the gap
study that quantifies how continuous-domain attacks lose successes to
rounding.
"""

from .attack import (
    MODES,
    AttackConfig,
    AttackOutcome,
    ScoredPerturbation,
    degree_from_probs,
    dissatisfaction,
    initial_sample,
    partition,
    refine_space,
    run_attack,
    sample_refined,
)
from .dataio import (
    IDX_IMAGE_MAGIC,
    load_idx_images,
    read_image,
    read_real_tensor,
    report_lines,
    write_image,
    write_real_tensor,
    write_report,
)
from .domain import (
    ImageShape,
    IntegerImage,
    Perturbation,
    RealImage,
    SearchSpace,
    apply_perturbation,
    distance_integer,
    distance_real,
    round_half_away_from_zero,
    upscale_perturbation,
)
from .errors import ConfigurationError, FormatError
from .evaluation import (
    BatchReport,
    assemble_report,
    derive_seed,
    gap_study,
    mse,
    run_batch,
)
from .network import (
    Conv2D,
    Dense,
    Flatten,
    MaxPool2D,
    NetworkDefinition,
    NetworkOracle,
    ReLU,
    Softmax,
    forward,
    forward_real,
    load_network,
    save_network,
)
from .normalization import (
    ROUNDINGS,
    VARIANTS,
    NormalizationScheme,
    denormalize,
    denormalize_real,
    discretization_error,
    normalize,
)
from .oracle import (
    ClassifierOracle,
    ProbabilityVector,
    QueryCounter,
    SumOracle,
    softmax,
    synthetic_sum_oracle,
    top_j,
)

__version__ = "0.1.0"
