"""Sequential diagnostic test selection by expected information gain.

The package keeps a Bernoulli belief over a diagnosis, simulates
hypothetical test outcomes through a pluggable generative simulator,
scores candidate tests by expected KL belief shift per unit cost, and
stops once no test can meaningfully move the belief. It ships a batch
experiment harness, an evaluation metrics suite, and a live session
service for human-in-the-loop use.
"""

from .belief import (
    Belief,
    CostModel,
    StoppingPolicy,
    entropy_bernoulli,
    entropy_eig,
    expected_kl,
    kl_bernoulli,
    stopping_threshold,
    utility,
)
from .data import (
    DatasetSchema,
    FeatureSpec,
    PatientRecord,
    load_dataset,
    load_dataset_dir,
    load_manifest,
    partition,
    render_vignette,
)
from .engine import (
    CandidateEvaluation,
    EpisodeResult,
    SessionState,
    TrajectoryStep,
    apply_result,
    check_stop,
    estimate_prior,
    evaluate_candidates,
    new_session,
    run_episode,
    select_next,
)
from .metrics import (
    bayesian_bootstrap,
    best_of_k_mae,
    compute_classification_metrics,
    energy_distance_1d,
    normalize_feature,
    wasserstein_1d,
)
from .surrogate import (
    EvidenceContext,
    OutcomeSample,
    RemoteSurrogate,
    ScriptedSurrogate,
    SurrogateConfig,
    SyntheticSurrogate,
    SyntheticWorld,
    WorldFeature,
    parse_strict_float,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
