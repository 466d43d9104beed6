"""Cross-lingual cross-platform rumor verification.

Embeds a rumor and the titles of webpages retrieved for its multimedia
content into one bilingual vector space, summarizes their distances and
four-class agreement into 10 features, and classifies the rumor as real or
fake. Includes the evaluation protocols (fixed task split, leave-one-event-
out, and cross-lingual transfer) and a deterministic synthetic world for
desk-scale runs.
"""

from .agreement import (
    AgreementDistribution,
    AgreementParams,
    StancePair,
    macro_f1,
    predict_agreement,
    split_stance_data,
    train_agreement,
)
from .backend import ACTIVE as ACTIVE_BACKEND
from .corpus import Corpus, Event, EvidenceIndex, Post, build_evidence, load_corpus
from .encoder import (
    EncoderParams,
    ParallelPair,
    SentenceEncoder,
    encode_sentence,
    eval_pair_retrieval,
    train_embedding,
)
from .features import CcpFeatures, EvidenceItem, EvidenceSet, cosine_distance, extract_features, mean_var
from .metrics import f1_fake, pearson_correlation, permutation_test, random_baseline
from .rng import RngState
from .synthetic import SyntheticConfig, generate_synthetic_corpus
from .tokenizer import Vocabulary, build_vocabulary, tokenize
from .verifier import Verdict, VerifierParams, predict_verifier, train_verifier, transfer_predict

__version__ = "0.1.0"
