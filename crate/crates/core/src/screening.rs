//! The screening engine: evaluate one statistic per group, rank the groups,
//! select by top-d or threshold, and summarize replicated runs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{distance_correlation_categorical, mv_index, r2_anova};
use crate::dataset::{Dataset, GroupPartition};
use crate::error::{Result, ScreenError};
use crate::gdc::{gdc_categorical, gdc_flat};

/// Which dependence statistic ranks the groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// Gini distance correlation (any group size).
    Gdc,
    /// Distance correlation with the 0/1 metric on the label (any group size).
    Dt,
    /// Mean-variance index over empirical CDFs (univariate groups only).
    Mv,
    /// ANOVA R² (univariate groups only).
    R2,
    /// Gini-impurity ratio treating the group's value tuples as categories.
    GdcCategorical,
}

impl Measure {
    pub fn as_str(&self) -> &'static str {
        match self {
            Measure::Gdc => "gdc",
            Measure::Dt => "dt",
            Measure::Mv => "mv",
            Measure::R2 => "r2",
            Measure::GdcCategorical => "gdc_categorical",
        }
    }

    pub fn requires_univariate(&self) -> bool {
        matches!(self, Measure::Mv | Measure::R2)
    }
}

impl std::str::FromStr for Measure {
    type Err = ScreenError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gdc" => Ok(Measure::Gdc),
            "dt" => Ok(Measure::Dt),
            "mv" => Ok(Measure::Mv),
            "r2" => Ok(Measure::R2),
            "gdc_categorical" | "gdc-categorical" => Ok(Measure::GdcCategorical),
            other => Err(ScreenError::InvalidConfig(format!(
                "unknown measure \"{other}\""
            ))),
        }
    }
}

/// How the ranked list is cut into a selected set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Keep the d groups with the largest statistics.
    TopD(usize),
    /// Keep every group with statistic ≥ c·n^(−kappa).
    Threshold { c: f64, kappa: f64 },
}

/// Measure plus selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreeningConfig {
    pub measure: Measure,
    pub rule: SelectionRule,
}

impl ScreeningConfig {
    pub fn validate(&self, partition: &GroupPartition) -> Result<()> {
        if self.measure.requires_univariate() && !partition.all_univariate() {
            return Err(ScreenError::InvalidConfig(format!(
                "{} requires univariate groups",
                self.measure.as_str().to_uppercase()
            )));
        }
        match self.rule {
            SelectionRule::TopD(d) => {
                if d == 0 {
                    return Err(ScreenError::InvalidConfig("top-d must be at least 1".into()));
                }
            }
            SelectionRule::Threshold { c, kappa } => {
                if c <= 0.0 || !c.is_finite() {
                    return Err(ScreenError::InvalidConfig(
                        "threshold constant c must be positive".into(),
                    ));
                }
                if !(0.0..0.5).contains(&kappa) {
                    return Err(ScreenError::InvalidConfig(
                        "kappa must lie in [0, 0.5)".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Per-group degeneracy notes accumulated while screening.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupFlag {
    pub group: usize,
    pub note: String,
}

/// The outcome of one screening pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreeningReport {
    pub measure: Measure,
    /// One statistic per group, indexed like the partition.
    pub stats: Vec<f64>,
    /// Group indices in descending statistic order, ties broken by ascending
    /// group index.
    pub ranking: Vec<usize>,
    /// Selected group indices, ascending.
    pub selected: Vec<usize>,
    pub warnings: Vec<GroupFlag>,
    /// The cut value c·n^(−kappa) when a threshold rule was used.
    pub threshold_value: Option<f64>,
}

/// Rank group indices by descending statistic, ties by ascending index.
pub(crate) fn rank_descending(stats: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..stats.len()).collect();
    order.sort_unstable_by(|&a, &b| stats[b].total_cmp(&stats[a]).then(a.cmp(&b)));
    order
}

/// Evaluate `measure` on every group of `partition`. Returns the per-group
/// statistics and any degeneracy flags, in group order.
pub(crate) fn evaluate_measure(
    dataset: &Dataset,
    partition: &GroupPartition,
    measure: Measure,
) -> Result<(Vec<f64>, Vec<GroupFlag>)> {
    let eval_group = |l: usize| -> Result<(f64, Option<GroupFlag>)> {
        let columns = partition.group(l);
        match measure {
            Measure::Gdc => {
                let flat = dataset.gather(columns);
                let stat = gdc_flat(
                    &flat,
                    columns.len(),
                    dataset.labels(),
                    dataset.class_counts(),
                )?;
                let flag = if stat.degenerate {
                    Some(GroupFlag {
                        group: l,
                        note: "constant group: correlation reported as 0".into(),
                    })
                } else if !stat.small_classes.is_empty() {
                    Some(GroupFlag {
                        group: l,
                        note: format!(
                            "classes {:?} have fewer than 2 rows; their dispersion counts as 0",
                            stat.small_classes
                        ),
                    })
                } else {
                    None
                };
                Ok((stat.correlation, flag))
            }
            Measure::Dt => {
                let flat = dataset.gather(columns);
                let stat = distance_correlation_categorical(
                    &flat,
                    columns.len(),
                    dataset.labels(),
                    dataset.k(),
                )?;
                let flag = stat.degenerate.then(|| GroupFlag {
                    group: l,
                    note: "degenerate distance correlation reported as 0".into(),
                });
                Ok((stat.value, flag))
            }
            Measure::Mv => {
                let col = dataset.column(columns[0]);
                let stat = mv_index(&col, dataset.labels(), dataset.k())?;
                Ok((stat.value, None))
            }
            Measure::R2 => {
                let col = dataset.column(columns[0]);
                let stat = r2_anova(&col, dataset.labels(), dataset.k())?;
                let flag = stat.degenerate.then(|| GroupFlag {
                    group: l,
                    note: "constant feature: R² reported as 0".into(),
                });
                Ok((stat.value, flag))
            }
            Measure::GdcCategorical => {
                let flat = dataset.gather(columns);
                let levels: Vec<Vec<u64>> = flat
                    .chunks(columns.len())
                    .map(|row| row.iter().map(|v| v.to_bits()).collect())
                    .collect();
                match gdc_categorical(&levels, dataset.labels()) {
                    Ok(v) => Ok((v, None)),
                    Err(ScreenError::InvalidValue(_)) => Ok((
                        0.0,
                        Some(GroupFlag {
                            group: l,
                            note: "constant categorical group: correlation reported as 0".into(),
                        }),
                    )),
                    Err(e) => Err(e),
                }
            }
        }
    };

    let r = partition.r();
    let results: Vec<Result<(f64, Option<GroupFlag>)>> = if r >= 32 {
        (0..r).into_par_iter().map(eval_group).collect()
    } else {
        (0..r).map(eval_group).collect()
    };

    let mut stats = Vec::with_capacity(r);
    let mut warnings = Vec::new();
    for res in results {
        let (value, flag) = res?;
        stats.push(value);
        if let Some(flag) = flag {
            warnings.push(flag);
        }
    }
    Ok((stats, warnings))
}

/// Screen `dataset` under `partition` and `config`: per-group statistics,
/// deterministic ranking, and the selected set.
pub fn screen(
    dataset: &Dataset,
    partition: &GroupPartition,
    config: &ScreeningConfig,
) -> Result<ScreeningReport> {
    config.validate(partition)?;
    let (stats, warnings) = evaluate_measure(dataset, partition, config.measure)?;
    let ranking = rank_descending(&stats);

    let (selected, threshold_value) = match config.rule {
        SelectionRule::TopD(d) => {
            let take = d.min(partition.r());
            let mut sel: Vec<usize> = ranking[..take].to_vec();
            sel.sort_unstable();
            (sel, None)
        }
        SelectionRule::Threshold { c, kappa } => {
            let cut = c * (dataset.n() as f64).powf(-kappa);
            let sel: Vec<usize> = (0..stats.len()).filter(|&l| stats[l] >= cut).collect();
            (sel, Some(cut))
        }
    };

    Ok(ScreeningReport {
        measure: config.measure,
        stats,
        ranking,
        selected,
        warnings,
        threshold_value,
    })
}

/// Groups with their statistics, sorted descending (ties by ascending group
/// index).
#[derive(Debug, Clone, PartialEq)]
pub struct RankedGroups {
    pub entries: Vec<(usize, f64)>,
    pub produced_by: Measure,
}

impl RankedGroups {
    pub fn from_stats(stats: &[f64], measure: Measure) -> Self {
        let entries = rank_descending(stats)
            .into_iter()
            .map(|l| (l, stats[l]))
            .collect();
        RankedGroups {
            entries,
            produced_by: measure,
        }
    }

    /// 1-based rank position of `group`, if screened.
    pub fn position(&self, group: usize) -> Option<usize> {
        self.entries
            .iter()
            .position(|&(l, _)| l == group)
            .map(|p| p + 1)
    }
}

/// d = ⌊n / ln n⌋, the customary reduced model size.
pub fn default_model_size(n: usize) -> usize {
    (n as f64 / (n as f64).ln()).floor() as usize
}

/// Smallest prefix of the ranked list containing every active group, i.e.
/// the maximum 1-based rank among the active groups.
pub fn minimum_model_size(ranked: &RankedGroups, active: &[usize]) -> Result<usize> {
    if active.is_empty() {
        return Err(ScreenError::InvalidValue("empty active set".into()));
    }
    let mut worst = 0usize;
    for &a in active {
        let pos = ranked.position(a).ok_or_else(|| {
            ScreenError::InvalidValue(format!("active group {a} missing from ranking"))
        })?;
        worst = worst.max(pos);
    }
    Ok(worst)
}

/// Replicate-level metrics: minimum model size distribution and inclusion
/// proportions at model size d.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub mms_values: Vec<usize>,
    pub mms_median: f64,
    /// Robust spread estimate (Q3 − Q1) / 1.34.
    pub rsd: f64,
    /// Inclusion proportion per active group, in active-set order.
    pub p_l: Vec<f64>,
    pub p_min: f64,
    pub p_max: f64,
    /// Proportion of replicates whose top-d contains every active group.
    pub p_all: f64,
    pub model_size_d: usize,
}

/// Linear-interpolation quantile of an ascending-sorted slice.
fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Summarize replicated rankings against a common active set at model size
/// `d`: per-replicate minimum model size, its median and robust spread, and
/// the top-d inclusion proportions.
pub fn summarize_replicates(
    per_replicate: &[(&RankedGroups, &[usize])],
    d: usize,
) -> Result<MetricsSummary> {
    if per_replicate.is_empty() {
        return Err(ScreenError::InvalidValue("no replicates".into()));
    }
    let active = per_replicate[0].1;
    if per_replicate.iter().any(|(_, a)| *a != active) {
        return Err(ScreenError::InvalidValue(
            "replicates disagree on the active set".into(),
        ));
    }

    let m = per_replicate.len();
    let mut mms_values = Vec::with_capacity(m);
    let mut include_counts = vec![0usize; active.len()];
    let mut all_count = 0usize;

    for (ranked, _) in per_replicate {
        let mms = minimum_model_size(ranked, active)?;
        mms_values.push(mms);
        let mut all_in = true;
        for (slot, &a) in active.iter().enumerate() {
            let pos = ranked.position(a).unwrap();
            if pos <= d {
                include_counts[slot] += 1;
            } else {
                all_in = false;
            }
        }
        if all_in {
            all_count += 1;
        }
    }

    let mut sorted: Vec<f64> = mms_values.iter().map(|&v| v as f64).collect();
    sorted.sort_unstable_by(f64::total_cmp);
    let mms_median = quantile_sorted(&sorted, 0.5);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let rsd = (q3 - q1) / 1.34;

    let p_l: Vec<f64> = include_counts
        .iter()
        .map(|&c| c as f64 / m as f64)
        .collect();
    let p_min = p_l.iter().copied().fold(f64::INFINITY, f64::min);
    let p_max = p_l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let p_all = all_count as f64 / m as f64;

    Ok(MetricsSummary {
        mms_values,
        mms_median,
        rsd,
        p_l,
        p_min,
        p_max,
        p_all,
        model_size_d: d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noise_dataset(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        Dataset::from_parts(features, p, labels).unwrap()
    }

    #[test]
    fn label_in_disguise_is_selected_first() {
        // Column 0 encodes the label exactly; columns 1 and 2 are noise.
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let n = 40;
        let mut features = Vec::with_capacity(n * 3);
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        for &y in &labels {
            features.push(y as f64 * 10.0);
            features.push(rng.sample(StandardNormal));
            features.push(rng.sample(StandardNormal));
        }
        let d = Dataset::from_parts(features, 3, labels).unwrap();
        let part = GroupPartition::singleton(3).unwrap();
        let config = ScreeningConfig {
            measure: Measure::Gdc,
            rule: SelectionRule::TopD(1),
        };
        let report = screen(&d, &part, &config).unwrap();
        assert_eq!(report.selected, vec![0]);
        assert_eq!(report.ranking[0], 0);
        assert_eq!(report.stats[0], 1.0);
    }

    #[test]
    fn threshold_above_correlation_bound_selects_nothing() {
        let d = noise_dataset(30, 5, 41);
        let part = GroupPartition::singleton(5).unwrap();
        let config = ScreeningConfig {
            measure: Measure::Gdc,
            rule: SelectionRule::Threshold { c: 10.0, kappa: 0.0 },
        };
        let report = screen(&d, &part, &config).unwrap();
        assert!(report.selected.is_empty());
        assert_eq!(report.threshold_value, Some(10.0));
    }

    #[test]
    fn bit_identical_stats_tie_break_by_group_index() {
        // Columns 1 and 2 are identical, so their statistics match bitwise.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 30;
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let mut features = Vec::with_capacity(n * 3);
        for _ in 0..n {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            features.extend_from_slice(&[a, b, b]);
        }
        let d = Dataset::from_parts(features, 3, labels).unwrap();
        let part = GroupPartition::singleton(3).unwrap();
        let config = ScreeningConfig {
            measure: Measure::Gdc,
            rule: SelectionRule::TopD(3),
        };
        let report = screen(&d, &part, &config).unwrap();
        assert_eq!(report.stats[1].to_bits(), report.stats[2].to_bits());
        let pos1 = report.ranking.iter().position(|&l| l == 1).unwrap();
        let pos2 = report.ranking.iter().position(|&l| l == 2).unwrap();
        assert!(pos1 < pos2);
    }

    #[test]
    fn mv_rejects_multivariate_groups() {
        let d = noise_dataset(20, 4, 43);
        let part = GroupPartition::new(vec![vec![0, 1], vec![2, 3]], None, 4).unwrap();
        let config = ScreeningConfig {
            measure: Measure::Mv,
            rule: SelectionRule::TopD(1),
        };
        let err = screen(&d, &part, &config).unwrap_err();
        assert!(err.is_usage(), "{err}");
        assert!(err.to_string().contains("univariate"));
    }

    #[test]
    fn top_d_cardinality_is_min_of_d_and_r() {
        let d = noise_dataset(20, 4, 44);
        let part = GroupPartition::singleton(4).unwrap();
        for request in [1usize, 3, 4, 9] {
            let config = ScreeningConfig {
                measure: Measure::Gdc,
                rule: SelectionRule::TopD(request),
            };
            let report = screen(&d, &part, &config).unwrap();
            assert_eq!(report.selected.len(), request.min(4));
        }
    }

    #[test]
    fn model_size_hand_values() {
        assert_eq!(default_model_size(60), 14);
        assert_eq!(default_model_size(200), 37);
        assert_eq!(default_model_size(203), 38);
    }

    #[test]
    fn minimum_model_size_hand_cases() {
        let stats = vec![0.1, 0.8, 0.7, 0.05, 0.9];
        let ranked = RankedGroups::from_stats(&stats, Measure::Gdc);
        // ranking: 4, 1, 2, 0, 3
        assert_eq!(minimum_model_size(&ranked, &[1, 2]).unwrap(), 3);
        assert_eq!(minimum_model_size(&ranked, &[4, 1]).unwrap(), 2);
        assert_eq!(minimum_model_size(&ranked, &[3]).unwrap(), 5);
        assert!(minimum_model_size(&ranked, &[]).is_err());
        assert!(minimum_model_size(&ranked, &[17]).is_err());
    }

    #[test]
    fn summary_of_perfect_replicates() {
        let stats_a = vec![0.9, 0.8, 0.1, 0.2];
        let stats_b = vec![0.7, 0.95, 0.3, 0.1];
        let ranked: Vec<RankedGroups> = [stats_a, stats_b]
            .iter()
            .map(|s| RankedGroups::from_stats(s, Measure::Gdc))
            .collect();
        let active = [0usize, 1];
        let per: Vec<(&RankedGroups, &[usize])> =
            ranked.iter().map(|r| (r, &active[..])).collect();
        let summary = summarize_replicates(&per, 2).unwrap();
        assert_eq!(summary.mms_values, vec![2, 2]);
        assert_eq!(summary.mms_median, 2.0);
        assert_eq!(summary.rsd, 0.0);
        assert_eq!(summary.p_all, 1.0);
        assert_eq!(summary.p_l, vec![1.0, 1.0]);
        assert_eq!(summary.p_min, 1.0);
    }

    #[test]
    fn summary_single_replicate_has_zero_rsd() {
        let ranked = RankedGroups::from_stats(&[0.5, 0.4, 0.6], Measure::Gdc);
        let active = [2usize];
        let per: Vec<(&RankedGroups, &[usize])> = vec![(&ranked, &active[..])];
        let summary = summarize_replicates(&per, 1).unwrap();
        assert_eq!(summary.mms_median, 1.0);
        assert_eq!(summary.rsd, 0.0);
    }

    #[test]
    fn summary_interpolates_quartiles() {
        // mms values [1,2,3,4]: Q1 = 1.75, Q3 = 3.25, median 2.5.
        let stats: Vec<Vec<f64>> = vec![
            vec![0.9, 0.1, 0.2, 0.3],
            vec![0.5, 0.9, 0.1, 0.2],
            vec![0.5, 0.6, 0.9, 0.2],
            vec![0.5, 0.6, 0.7, 0.9],
        ];
        let ranked: Vec<RankedGroups> = stats
            .iter()
            .map(|s| RankedGroups::from_stats(s, Measure::Gdc))
            .collect();
        let active = [0usize];
        let per: Vec<(&RankedGroups, &[usize])> =
            ranked.iter().map(|r| (r, &active[..])).collect();
        let summary = summarize_replicates(&per, 2).unwrap();
        assert_eq!(summary.mms_values, vec![1, 2, 3, 4]);
        assert!((summary.mms_median - 2.5).abs() < 1e-15);
        assert!((summary.rsd - 1.5 / 1.34).abs() < 1e-15);
        assert_eq!(summary.p_all, 0.5);
    }

    #[test]
    fn ranking_is_invariant_under_common_rescaling() {
        let d = noise_dataset(50, 8, 45);
        let part = GroupPartition::singleton(8).unwrap();
        let config = ScreeningConfig {
            measure: Measure::Gdc,
            rule: SelectionRule::TopD(3),
        };
        let base = screen(&d, &part, &config).unwrap();

        let scaled: Vec<f64> = (0..d.n())
            .flat_map(|i| d.row(i).iter().map(|v| v * 37.5).collect::<Vec<_>>())
            .collect();
        let d2 = Dataset::from_parts(scaled, 8, d.labels().to_vec()).unwrap();
        let rescaled = screen(&d2, &part, &config).unwrap();
        assert_eq!(base.ranking, rescaled.ranking);
        assert_eq!(base.selected, rescaled.selected);
    }

    #[test]
    fn screen_is_thread_count_independent() {
        let d = noise_dataset(40, 64, 46);
        let part = GroupPartition::singleton(64).unwrap();
        let config = ScreeningConfig {
            measure: Measure::Gdc,
            rule: SelectionRule::TopD(5),
        };
        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = pool1.install(|| screen(&d, &part, &config).unwrap());
        let b = pool4.install(|| screen(&d, &part, &config).unwrap());
        assert_eq!(a.ranking, b.ranking);
        for (x, y) in a.stats.iter().zip(&b.stats) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn threshold_monotonicity(
            seed in 0u64..500,
            c_low in 0.01f64..0.5,
            c_step in 0.01f64..2.0,
            kappa in 0.0f64..0.49,
        ) {
            let d = noise_dataset(24, 6, seed);
            let part = GroupPartition::singleton(6).unwrap();
            let screen_at = |c: f64, kappa: f64| {
                let config = ScreeningConfig {
                    measure: Measure::Gdc,
                    rule: SelectionRule::Threshold { c, kappa },
                };
                screen(&d, &part, &config).unwrap().selected
            };
            // Larger c never grows the selection.
            let lo = screen_at(c_low, kappa);
            let hi = screen_at(c_low + c_step, kappa);
            prop_assert!(hi.iter().all(|g| lo.contains(g)));
            // Larger kappa at fixed c (n > e) never grows it either.
            let k_hi = screen_at(c_low, (kappa + 0.005).min(0.4999));
            prop_assert!(k_hi.iter().all(|g| lo.contains(g)));
        }

        #[test]
        fn ranking_is_a_permutation_sorted_by_stat(
            seed in 0u64..500, p in 2usize..12,
        ) {
            let d = noise_dataset(20, p, seed);
            let part = GroupPartition::singleton(p).unwrap();
            let config = ScreeningConfig {
                measure: Measure::Gdc,
                rule: SelectionRule::TopD(1),
            };
            let report = screen(&d, &part, &config).unwrap();
            let mut seen = vec![false; p];
            for &l in &report.ranking {
                prop_assert!(!seen[l]);
                seen[l] = true;
            }
            for w in report.ranking.windows(2) {
                prop_assert!(report.stats[w[0]] >= report.stats[w[1]]);
            }
        }
    }
}
