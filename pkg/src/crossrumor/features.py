"""The 10-dimensional distance/agreement feature vector for one rumor.

For every retrieved evidence title: cosine distance to the rumor embedding,
and the four-class agreement distribution of (rumor, title). The features are
the mean and population variance of the distance plus the mean and population
variance of each class probability, in the fixed order below. Population
variance (divide by n) keeps single-evidence rumors well defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agreement import AgreementParams, predict_agreement
from .errors import DegenerateInputError
from .encoder import SentenceEncoder

FEATURE_NAMES = (
    "dist_mean",
    "dist_var",
    "agree_mean",
    "agree_var",
    "disagree_mean",
    "disagree_var",
    "discuss_mean",
    "discuss_var",
    "unrelated_mean",
    "unrelated_var",
)

# Rumors with no retrieved evidence get a fixed neutral vector: orthogonal
# mean distance, uniform agreement means, zero variances.
EMPTY_EVIDENCE_FEATURES = (1.0, 0.0, 0.25, 0.0, 0.25, 0.0, 0.25, 0.0, 0.25, 0.0)


@dataclass
class EvidenceItem:
    title: str
    engine: str  # google | baidu
    media_id: str


@dataclass
class EvidenceSet:
    rumor_text: str
    items: list[EvidenceItem]


@dataclass
class CcpFeatures:
    dist_mean: float
    dist_var: float
    agree_mean: float
    agree_var: float
    disagree_mean: float
    disagree_var: float
    discuss_mean: float
    discuss_var: float
    unrelated_mean: float
    unrelated_var: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES])

    @classmethod
    def from_array(cls, a) -> "CcpFeatures":
        a = np.asarray(a, dtype=np.float64)
        if a.shape != (len(FEATURE_NAMES),):
            raise ValueError(f"feature vector needs {len(FEATURE_NAMES)} entries, got {a.shape}")
        return cls(*(float(x) for x in a))


def cosine_distance(u, v) -> float:
    """1 - cos(u, v), in [0, 2]; zero-norm inputs are degenerate."""
    uv = np.asarray(u, dtype=np.float64).ravel()
    vv = np.asarray(v, dtype=np.float64).ravel()
    nu = float(np.linalg.norm(uv))
    nv = float(np.linalg.norm(vv))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateInputError("cosine_distance: zero-norm vector")
    return float(1.0 - (uv @ vv) / (nu * nv))


def mean_var(xs) -> tuple[float, float]:
    """Arithmetic mean and population variance (divide by n)."""
    a = np.asarray(xs, dtype=np.float64)
    if a.size == 0:
        raise ValueError("mean_var: empty sequence")
    mean = float(a.mean())
    return mean, float(np.mean((a - mean) ** 2))


def extract_features(
    evidence: EvidenceSet,
    encoder: SentenceEncoder,
    agreement: AgreementParams,
) -> CcpFeatures:
    """Compute the feature vector for one rumor and its evidence titles.

    Exact-duplicate titles are collapsed before the statistics so crawler
    duplicates cannot shrink the variance, and the survivors are processed in
    sorted order so any permutation of the evidence yields bit-identical
    output. A degenerate (zero-norm) embedding on either side contributes the
    neutral distance 1.0 instead of failing.
    """
    titles = sorted({item.title for item in evidence.items})
    if not titles:
        return CcpFeatures(*EMPTY_EVIDENCE_FEATURES)

    rumor_vec = encoder.encode(evidence.rumor_text)
    distances = []
    probs = np.empty((len(titles), 4))
    for i, title in enumerate(titles):
        title_vec = encoder.encode(title)
        try:
            distances.append(cosine_distance(rumor_vec, title_vec))
        except DegenerateInputError:
            distances.append(1.0)
        probs[i] = predict_agreement(rumor_vec, title_vec, agreement).as_array()

    values = list(mean_var(distances))
    for cls in range(4):
        values.extend(mean_var(probs[:, cls]))
    return CcpFeatures(*values)
