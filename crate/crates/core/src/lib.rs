//! Feature screening for classification data via Gini distance correlation.
//!
//! The crate ranks individual or grouped numeric predictors by how strongly
//! the class label changes their distribution. The screening statistic is the
//! Gini distance correlation: one minus the ratio of the class-weighted
//! within-class Gini mean difference to the pooled Gini mean difference.
//! Alongside it live three comparison statistics (ANOVA R², a mean-variance
//! index built on empirical CDFs, and distance correlation with the 0/1
//! metric on the label), the ranking/selection machinery, and seeded
//! generators for four benchmark simulation designs.
//!
//! All estimators are deterministic: parallel reductions happen in a fixed
//! order, so results are bit-identical across thread counts.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod gdc;
pub mod gmd;
pub mod screening;
pub mod simgen;

pub use baselines::{distance_correlation_categorical, mv_index, r2_anova, BaselineStat};
pub use dataset::{load_csv, load_groups, Dataset, GroupPartition, LoadedGroups};
pub use error::{Result, ScreenError};
pub use gdc::{gdc, gdc_categorical, gdc_swapped, gini_impurity, GdcStat};
pub use gmd::{gmd_pairwise, gmd_univariate_fast, within_class_gmd, GmdValue, WithinClassGmd};
pub use screening::{
    default_model_size, minimum_model_size, screen, summarize_replicates, Measure,
    MetricsSummary, RankedGroups, ScreeningConfig, ScreeningReport, SelectionRule,
};
pub use simgen::{
    gen_grouped, gen_gwas, gen_lda, gen_logistic, run_experiment, Covariance, Design, ErrorDist,
    ExperimentOutcome, GroupedCase, GwasData, ReplicateResult, SimulationSpec,
};
