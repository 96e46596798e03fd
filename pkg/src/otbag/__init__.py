"""Online transfer bagging with dominance-filtered committees."""

from .core import Domain, FeatureVector, TaggedInstance, majority_vote, vote_margin
from .data import (
    Dataset,
    TransferTask,
    build_mixed_source,
    interleave_stream,
    load_dense_csv,
    load_svmlight,
    make_task,
    zscore_normalize,
)
from .ensemble import (
    AccuracyLedger,
    DualModel,
    JDSMVModel,
    OTBagModel,
    SDMVModel,
    SegmentIndexSets,
    predict_jdsmv,
    predict_otbag,
    predict_sdmv,
    prequential_eval,
    train_jdsmv,
    train_otbag,
    train_sdmv,
)
from .errors import OTBagError
from .harness import (
    ExperimentConfig,
    ResultTable,
    SyntheticSpec,
    emit_report,
    make_synthetic_task,
    run_baseline_target_only,
    run_experiment,
)
from .learners import LearnerKind, OnlineLogistic, Perceptron, new_learner
from .sampling import SeededRng, binomial_pmf, poisson1_draw, poisson1_pmf
from .serialize import load_model, save_model

__version__ = "0.1.0"
