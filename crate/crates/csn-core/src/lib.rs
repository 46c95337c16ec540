//! Information filtering on coupled social networks.
//!
//! A coupled social network ties a directed social layer (who follows whom)
//! to a bipartite behavior layer (who collected which item) over one shared
//! user index. This crate computes social-influence similarities on the
//! social layer (random walk with restart, common in-link and out-link
//! overlap), preference similarity on the behavior layer (cosine), blends
//! them nonlinearly, and runs top-L user-based recommendation with a full
//! evaluation harness: train/test splits, precision/recall/F, sampled AUC,
//! exponent grid sweeps, structural analyses, and a synthetic generator for
//! controlled experiments.

pub mod analysis;
pub mod error;
pub mod evaluation;
pub mod network;
pub mod pairs;
pub mod recommender;
pub mod similarity;
pub mod synth;

pub use analysis::{
    extract_ego, influence_preference_curve, node_influence_scalars,
    recommended_degree_histogram, spearman, write_curve_csv, write_ego_csv, write_ego_graph,
    write_histogram_csv, CorrelationBin, CorrelationCurve, DegreeHistogram, EgoNetwork,
    NodeInfluenceConvention, LOW_DEGREE_THRESHOLD,
};
pub use error::{CsnError, Result};
pub use evaluation::{
    auc, draw_auc_samples, evaluate_point, grid_sweep, grid_sweep_with_bases, influence_for,
    per_user_metrics, precision_recall_f, test_items_by_user, AucSamples, EvaluationReport,
    GridResult, GridSpec, MetricKind, SweepConfig, UserMetrics, DEFAULT_AUC_SAMPLES,
};
pub use pairs::PairScores;
pub use recommender::{
    hybrid_similarity, recommend, score_user, top_l, HybridParams, RecommendationList,
    SimilarityMatrix,
};
pub use similarity::{
    cosine_preference, lin_influence, lout_influence, rwr_influence, InfluenceKind,
    InfluenceMatrix, PreferenceMatrix, TanimotoForm, DEFAULT_DAMPING, DEFAULT_WALK_MAX_ITERS,
    DEFAULT_WALK_TOL, WALK_STORE_THRESHOLD,
};
pub use synth::{generate, SynthConfig};
pub use network::{
    load_network, purify, split, stats, write_edge_list, CoupledNetwork, DatasetStats,
    LoadedNetwork, PurifyOutcome, PurifyThresholds, SplitPair,
};
