"""Nearest-centroid few-shot classification on precomputed feature vectors.

Feature transforms (UN, L2N, CL2N), episodic and all-way evaluation, and an
error-correcting-output-code classifier, plus the file formats that feed them.
"""

from .classifier import (
    Prediction,
    SupportSet,
    class_centroids,
    classify,
    euclidean_distance,
    nearest_centroid,
    nearest_neighbor,
)
from .ecoc import (
    Codebook,
    EcocModel,
    decode,
    decode_cosine,
    extend_codebook,
    predict_code,
    random_codebook,
    soft_code,
    train_linear_ecoc,
)
from .episodic import (
    AccuracyReport,
    Episode,
    EpisodeSpec,
    confidence_interval_95,
    evaluate,
    sample_episode,
)
from .features import (
    FeatureRecord,
    FeatureSet,
    TransformKind,
    TransformState,
    apply_transform,
    compute_base_mean,
    fit_transform,
    l2_normalize,
)
from .multiway import MultiwayReport, MultiwaySplit, evaluate_multiway
from .synthetic import SyntheticSpec, gen_synthetic

__version__ = "0.1.0"
