"""Botnet inference from message evidence graphs via minimal graph clusterings."""

from .crp import ConcentrationParams, log_crp_clique, log_posterior
from .errors import (
    BotclustError,
    ConfigError,
    DataIntegrityError,
    DomainError,
    ParameterError,
    UnknownAddressError,
)
from .evidence import (
    ClusteringState,
    CliqueIndex,
    MessageRecord,
    adjacency,
    build_clique_index,
    global_clusters,
    is_minimal,
    singleton_state,
    state_from_partition,
)
from .gibbs import (
    CandidateAssignment,
    ChainConfig,
    ChainSample,
    apply_candidate,
    candidate_log_weight,
    enumerate_candidates,
    gibbs_sweep,
    map_clustering,
    run_chain,
)
from .predictor import PredictorModel, fit_predictor, posterior_predict, predict_campaign_dist

__version__ = "0.1.0"
