"""Two-input/two-output nonsignaling boxes: locality, bounded-dimension
hidden-variable models, superlocality and Bell strength."""

from .box import (
    Box,
    LROTransform,
    LocalOp,
    apply_lro,
    correlators,
    deterministic_box,
    mix,
    noisy_pr,
    pr_box,
    sample_ns_box,
    validate,
    white_noise,
)
from .local import chsh_abs, chsh_signed, decompose_local, is_local_facets
from .quantum import TwoQubitState, born_box, canonical_measurements, pure_family, werner
from .superlocality import (
    LhvModel,
    dim4_decomposition_noisy_pr,
    entropic_cost,
    entropic_threshold,
    evaluate_lhv,
    noisy_pr_dim2_witness,
    search_lhv,
)
from .bell_strength import bell_strength, gammas, monoandry_check

__version__ = "0.1.0"
