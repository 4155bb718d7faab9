//! Estimators over simulated fields: Hölder norms, moments, increment
//! scaling, coupled convergence reports and independent oracles.

mod convergence;
mod holder;
mod oracle;
mod pipelines;
mod scaling;
mod stats;

pub use convergence::{
    coupled_distance, window_distance, wz_convergence, ConvergenceReport, CoupledEnsemble, LagDiscrepancy, LagReport,
    LagRow, LevelEstimate,
};
pub use holder::{holder_norm, GridBox, HolderWindow, PairPolicy, WindowSampler, WindowSamples};
pub use oracle::{ewald_hnorm_sq, skeleton_mode_oracle, EwaldOracle, EwaldParams};
pub use pipelines::{lag_replica, support_replica, wz_replica, SupportReplica, SupportSetup, WzReplica};
pub use scaling::{
    translation_invariance_test, IncrementMode, IncrementScaling, ScalingFit, ShiftRow, TranslationReport,
    TranslationSampler, MIN_TRANSLATION_REPLICAS,
};
pub use stats::{
    jackknife_mean, ks_critical_1pct, ks_statistic, linear_fit, loglog_fit, lp_moment, median, LinearFit, MomentReport,
    MIN_REPLICAS,
};
