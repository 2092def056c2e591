//! Comparison screening statistics: ANOVA R², the mean-variance index over
//! empirical CDFs, and distance correlation with the 0/1 metric on the
//! categorical variable.

use rayon::prelude::*;

use crate::error::{Result, ScreenError};
use crate::gmd::Kbn;

const PAR_MIN_ROWS: usize = 512;

/// Identifies which baseline produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMeasure {
    R2,
    Mv,
    Dt,
}

/// A baseline statistic with its degeneracy flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineStat {
    pub value: f64,
    pub measure: BaselineMeasure,
    pub degenerate: bool,
}

fn validate_labeled_input(feature_len: usize, labels: &[usize], num_classes: usize) -> Result<()> {
    if feature_len != labels.len() {
        return Err(ScreenError::LengthMismatch(feature_len, labels.len()));
    }
    if feature_len < 2 {
        return Err(ScreenError::TooFewRows(feature_len));
    }
    if num_classes < 2 {
        return Err(ScreenError::SingleClass);
    }
    if labels.iter().any(|&y| y >= num_classes) {
        return Err(ScreenError::InvalidValue(
            "label index out of range".into(),
        ));
    }
    Ok(())
}

fn class_counts(labels: &[usize], num_classes: usize) -> Vec<usize> {
    let mut counts = vec![0usize; num_classes];
    for &y in labels {
        counts[y] += 1;
    }
    counts
}

/// ANOVA R²: between-class sum of squares over total sum of squares.
/// A constant feature is degenerate and scores 0.
pub fn r2_anova(feature: &[f64], labels: &[usize], num_classes: usize) -> Result<BaselineStat> {
    validate_labeled_input(feature.len(), labels, num_classes)?;
    let n = feature.len();
    let counts = class_counts(labels, num_classes);

    let mut class_sums = vec![Kbn::new(); num_classes];
    let mut grand = Kbn::new();
    for (v, &y) in feature.iter().zip(labels) {
        class_sums[y].add(*v);
        grand.add(*v);
    }
    let grand_mean = grand.total() / n as f64;

    let mut total = Kbn::new();
    for v in feature {
        let d = v - grand_mean;
        total.add(d * d);
    }
    let total_ss = total.total();

    if total_ss == 0.0 {
        return Ok(BaselineStat {
            value: 0.0,
            measure: BaselineMeasure::R2,
            degenerate: true,
        });
    }

    let mut between = Kbn::new();
    for (sum, &nk) in class_sums.iter().zip(&counts) {
        if nk == 0 {
            continue;
        }
        let d = sum.total() / nk as f64 - grand_mean;
        between.add(nk as f64 * d * d);
    }

    Ok(BaselineStat {
        value: (between.total() / total_ss).clamp(0.0, 1.0),
        measure: BaselineMeasure::R2,
        degenerate: false,
    })
}

/// Mean-variance index: (1/n) Σⱼ Σₖ p̂ₖ (F̂ₖ(xⱼ) − F̂(xⱼ))², the weighted
/// Cramér–von Mises distance between per-class and pooled empirical CDFs
/// (≤ convention). One sort, O(n log n + nK).
pub fn mv_index(feature: &[f64], labels: &[usize], num_classes: usize) -> Result<BaselineStat> {
    validate_labeled_input(feature.len(), labels, num_classes)?;
    let n = feature.len();
    let counts = class_counts(labels, num_classes);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| feature[a].total_cmp(&feature[b]));

    let nf = n as f64;
    let mut cum = vec![0usize; num_classes];
    let mut acc = Kbn::new();
    let mut start = 0usize;
    while start < n {
        // Advance over ties so every element of a run sees the same CDFs.
        let v = feature[order[start]];
        let mut end = start;
        while end < n && feature[order[end]] == v {
            cum[labels[order[end]]] += 1;
            end += 1;
        }
        let pooled = end as f64 / nf;
        let mut term = 0.0;
        for k in 0..num_classes {
            if counts[k] == 0 {
                continue;
            }
            let p_hat = counts[k] as f64 / nf;
            let d = cum[k] as f64 / counts[k] as f64 - pooled;
            term += p_hat * d * d;
        }
        acc.add((end - start) as f64 * term);
        start = end;
    }

    Ok(BaselineStat {
        value: acc.total() / nf,
        measure: BaselineMeasure::Mv,
        degenerate: false,
    })
}

/// Sample distance correlation between a point group and a categorical
/// variable under the 0/1 metric (V-statistic, double centering). Returns 0
/// with the degenerate flag when either distance variance vanishes.
///
/// The distance matrices are never materialized: one pass computes row sums,
/// a second accumulates the centered products, so memory stays O(n).
pub fn distance_correlation_categorical(
    group: &[f64],
    dim: usize,
    labels: &[usize],
    num_classes: usize,
) -> Result<BaselineStat> {
    if dim == 0 || !group.len().is_multiple_of(dim) {
        return Err(ScreenError::DimensionMismatch {
            len: group.len(),
            dim,
        });
    }
    let n = group.len() / dim;
    validate_labeled_input(n, labels, num_classes)?;
    if n < 3 {
        return Err(ScreenError::TooFewRows(n));
    }
    let counts = class_counts(labels, num_classes);
    let nf = n as f64;

    let dist = |i: usize, j: usize| -> f64 {
        let a = &group[i * dim..(i + 1) * dim];
        let b = &group[j * dim..(j + 1) * dim];
        let mut s = 0.0;
        for (x, y) in a.iter().zip(b) {
            let d = x - y;
            s += d * d;
        }
        s.sqrt()
    };

    // Pass 1: row sums of the Euclidean distance matrix.
    let row_sum = |i: usize| -> f64 {
        let mut acc = Kbn::new();
        for j in 0..n {
            acc.add(dist(i, j));
        }
        acc.total()
    };
    let row_sums: Vec<f64> = if n >= PAR_MIN_ROWS {
        (0..n).into_par_iter().map(row_sum).collect()
    } else {
        (0..n).map(row_sum).collect()
    };
    let mut grand = Kbn::new();
    for s in &row_sums {
        grand.add(*s);
    }
    let a_grand = grand.total() / (nf * nf);
    let a_row: Vec<f64> = row_sums.iter().map(|s| s / nf).collect();

    // Label-side means have closed forms: row mean (n − n_k)/n for a row of
    // class k, grand mean Σₖ nₖ(n − nₖ)/n².
    let b_class: Vec<f64> = counts.iter().map(|&nk| (nf - nk as f64) / nf).collect();
    let mut b_grand = 0.0;
    for &nk in &counts {
        b_grand += nk as f64 * (nf - nk as f64);
    }
    let b_grand = b_grand / (nf * nf);

    // Pass 2: centered products.
    let centered = |i: usize| -> (f64, f64, f64) {
        let bi = b_class[labels[i]];
        let mut ab = Kbn::new();
        let mut aa = Kbn::new();
        let mut bb = Kbn::new();
        for j in 0..n {
            let a_c = dist(i, j) - a_row[i] - a_row[j] + a_grand;
            let raw_b = if labels[i] != labels[j] { 1.0 } else { 0.0 };
            let b_c = raw_b - bi - b_class[labels[j]] + b_grand;
            ab.add(a_c * b_c);
            aa.add(a_c * a_c);
            bb.add(b_c * b_c);
        }
        (ab.total(), aa.total(), bb.total())
    };
    let partials: Vec<(f64, f64, f64)> = if n >= PAR_MIN_ROWS {
        (0..n).into_par_iter().map(centered).collect()
    } else {
        (0..n).map(centered).collect()
    };
    let (mut ab, mut aa, mut bb) = (Kbn::new(), Kbn::new(), Kbn::new());
    for (x, y, z) in partials {
        ab.add(x);
        aa.add(y);
        bb.add(z);
    }

    let v2xy = (ab.total() / (nf * nf)).max(0.0);
    let v2xx = (aa.total() / (nf * nf)).max(0.0);
    let v2yy = (bb.total() / (nf * nf)).max(0.0);

    if v2xx == 0.0 || v2yy == 0.0 {
        return Ok(BaselineStat {
            value: 0.0,
            measure: BaselineMeasure::Dt,
            degenerate: true,
        });
    }

    let dcov = v2xy.sqrt();
    let denom = (v2xx.sqrt() * v2yy.sqrt()).sqrt();
    Ok(BaselineStat {
        value: (dcov / denom).min(1.0),
        measure: BaselineMeasure::Dt,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    /// O(n²K) direct double loop over sample points, the defining form of
    /// the MV index.
    fn mv_double_loop(feature: &[f64], labels: &[usize], num_classes: usize) -> f64 {
        let n = feature.len();
        let counts = class_counts(labels, num_classes);
        let mut total = 0.0;
        for j in 0..n {
            let x = feature[j];
            let pooled = feature.iter().filter(|&&v| v <= x).count() as f64 / n as f64;
            for (k, &count_k) in counts.iter().enumerate() {
                if count_k == 0 {
                    continue;
                }
                let fk = feature
                    .iter()
                    .zip(labels)
                    .filter(|(&v, &y)| y == k && v <= x)
                    .count() as f64
                    / count_k as f64;
                let p_hat = count_k as f64 / n as f64;
                total += p_hat * (fk - pooled) * (fk - pooled);
            }
        }
        total / n as f64
    }

    /// Direct double-centering oracle with materialized matrices.
    fn dcor_oracle(group: &[f64], dim: usize, labels: &[usize]) -> f64 {
        let n = labels.len();
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for c in 0..dim {
                    let d = group[i * dim + c] - group[j * dim + c];
                    s += d * d;
                }
                a[i * n + j] = s.sqrt();
                b[i * n + j] = if labels[i] != labels[j] { 1.0 } else { 0.0 };
            }
        }
        let center = |m: &mut Vec<f64>| {
            let row_means: Vec<f64> =
                (0..n).map(|i| (0..n).map(|j| m[i * n + j]).sum::<f64>() / n as f64).collect();
            let grand = row_means.iter().sum::<f64>() / n as f64;
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] += grand - row_means[i] - row_means[j];
                }
            }
        };
        center(&mut a);
        center(&mut b);
        let mut v2xy = 0.0;
        let mut v2xx = 0.0;
        let mut v2yy = 0.0;
        for idx in 0..n * n {
            v2xy += a[idx] * b[idx];
            v2xx += a[idx] * a[idx];
            v2yy += b[idx] * b[idx];
        }
        let n2 = (n * n) as f64;
        (v2xy / n2).max(0.0).sqrt() / ((v2xx / n2).sqrt() * (v2yy / n2).sqrt()).sqrt()
    }

    #[test]
    fn r2_hand_values() {
        let labels = [0usize, 0, 1, 1];
        let r = r2_anova(&[1.0, 1.0, 2.0, 2.0], &labels, 2).unwrap();
        assert_eq!(r.value, 1.0);

        let r = r2_anova(&[1.0, 2.0, 1.0, 2.0], &labels, 2).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(!r.degenerate);

        let r = r2_anova(&[1.0, 2.0, 3.0, 4.0], &labels, 2).unwrap();
        assert!((r.value - 0.8).abs() < 1e-15);
    }

    #[test]
    fn r2_constant_feature_is_degenerate_zero() {
        let r = r2_anova(&[5.0; 4], &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.degenerate);
    }

    #[test]
    fn mv_hand_value_two_points() {
        // (1/2)[ 1/2·(1 − 1/2)² + 1/2·(0 − 1/2)² + 0 ] = 0.125
        let got = mv_index(&[1.0, 2.0], &[0, 1], 2).unwrap().value;
        let oracle = mv_double_loop(&[1.0, 2.0], &[0, 1], 2);
        assert!((got - 0.125).abs() < 1e-15);
        assert!((oracle - 0.125).abs() < 1e-15);
    }

    #[test]
    fn mv_constant_feature_is_zero() {
        let got = mv_index(&[3.0; 6], &[0, 1, 0, 1, 0, 1], 2).unwrap().value;
        assert_eq!(got, 0.0);
    }

    #[test]
    fn mv_independent_feature_is_small_at_large_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let n = 10_000;
        let feature: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3usize)).collect();
        let got = mv_index(&feature, &labels, 3).unwrap().value;
        assert!(got < 0.01, "null MV {got}");
    }

    #[test]
    fn mv_fast_path_matches_double_loop_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..10 {
            let n = rng.random_range(5..200usize);
            // Coarse grid forces ties.
            let feature: Vec<f64> = (0..n)
                .map(|_| (rng.random_range(-4i32..5) as f64) * 0.5)
                .collect();
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3usize)).collect();
            let fast = mv_index(&feature, &labels, 3).unwrap().value;
            let slow = mv_double_loop(&feature, &labels, 3);
            assert!(
                (fast - slow).abs() < 1e-12,
                "fast {fast} vs direct {slow} at n={n}"
            );
        }
    }

    #[test]
    fn dcor_one_hot_encoding_is_one() {
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let group: Vec<f64> = labels
            .iter()
            .flat_map(|&y| if y == 0 { [1.0, 0.0] } else { [0.0, 1.0] })
            .collect();
        let got = distance_correlation_categorical(&group, 2, &labels, 2).unwrap();
        assert!((got.value - 1.0).abs() < 1e-12, "dcor {}", got.value);
        let oracle = dcor_oracle(&group, 2, &labels);
        assert!((oracle - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dcor_matches_materialized_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for _ in 0..10 {
            let n = 20;
            let dim = rng.random_range(1..4usize);
            let group: Vec<f64> = (0..n * dim).map(|_| rng.sample(StandardNormal)).collect();
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3usize)).collect();
            if labels.iter().all(|&y| y == labels[0]) {
                continue;
            }
            let got = distance_correlation_categorical(&group, dim, &labels, 3)
                .unwrap()
                .value;
            let want = dcor_oracle(&group, dim, &labels);
            assert!((got - want).abs() < 1e-10, "got {got} want {want}");
        }
    }

    #[test]
    fn dcor_independent_group_is_small_at_large_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let n = 2000;
        let group: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2usize)).collect();
        let got = distance_correlation_categorical(&group, 1, &labels, 2)
            .unwrap()
            .value;
        assert!(got < 0.05, "null dcor {got}");
    }

    #[test]
    fn dcor_constant_group_is_degenerate() {
        let labels: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let got = distance_correlation_categorical(&[2.0; 10], 1, &labels, 2).unwrap();
        assert_eq!(got.value, 0.0);
        assert!(got.degenerate);
    }

    fn ulps_apart(a: f64, b: f64) -> u64 {
        let (ia, ib) = (a.to_bits() as i64, b.to_bits() as i64);
        ia.abs_diff(ib)
    }

    #[test]
    fn all_three_statistics_are_row_permutation_invariant_within_8_ulps() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let n = 80;
        let feature: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3usize)).collect();

        let r2_base = r2_anova(&feature, &labels, 3).unwrap().value;
        let mv_base = mv_index(&feature, &labels, 3).unwrap().value;
        let dt_base = distance_correlation_categorical(&feature, 1, &labels, 3)
            .unwrap()
            .value;

        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..5 {
            order.shuffle(&mut rng);
            let pf: Vec<f64> = order.iter().map(|&i| feature[i]).collect();
            let pl: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
            assert!(ulps_apart(r2_anova(&pf, &pl, 3).unwrap().value, r2_base) <= 8);
            assert!(ulps_apart(mv_index(&pf, &pl, 3).unwrap().value, mv_base) <= 8);
            let dt = distance_correlation_categorical(&pf, 1, &pl, 3)
                .unwrap()
                .value;
            assert!(ulps_apart(dt, dt_base) <= 8);
        }
    }

    #[test]
    fn dcor_invariant_under_rotation_translation_relabel() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let n = 60;
        let group: Vec<f64> = (0..n * 2).map(|_| rng.sample(StandardNormal)).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3usize)).collect();
        let base = distance_correlation_categorical(&group, 2, &labels, 3)
            .unwrap()
            .value;

        let theta: f64 = 1.234;
        let (s, c) = theta.sin_cos();
        let moved: Vec<f64> = group
            .chunks(2)
            .flat_map(|r| [c * r[0] - s * r[1] + 5.0, s * r[0] + c * r[1] - 3.0])
            .collect();
        let rotated = distance_correlation_categorical(&moved, 2, &labels, 3)
            .unwrap()
            .value;
        assert!((rotated - base).abs() < 1e-10);

        let relabeled: Vec<usize> = labels.iter().map(|&y| (y + 2) % 3).collect();
        let relab = distance_correlation_categorical(&group, 2, &relabeled, 3)
            .unwrap()
            .value;
        assert!((relab - base).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn mv_fast_equals_direct(
            feature in proptest::collection::vec(-50.0f64..50.0, 4..120),
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let labels: Vec<usize> = (0..feature.len())
                .map(|_| rng.random_range(0..3usize))
                .collect();
            let fast = mv_index(&feature, &labels, 3).unwrap().value;
            let slow = mv_double_loop(&feature, &labels, 3);
            prop_assert!((fast - slow).abs() < 1e-12);
        }

        #[test]
        fn r2_affine_invariance(
            feature in proptest::collection::vec(-50.0f64..50.0, 4..80),
            a in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0],
            b in -100.0f64..100.0,
        ) {
            let labels: Vec<usize> = (0..feature.len()).map(|i| i % 2).collect();
            let base = r2_anova(&feature, &labels, 2).unwrap();
            let mapped: Vec<f64> = feature.iter().map(|v| a * v + b).collect();
            let got = r2_anova(&mapped, &labels, 2).unwrap();
            prop_assert!((got.value - base.value).abs() <= 1e-12);
        }

        #[test]
        fn baseline_ranges(
            feature in proptest::collection::vec(-100.0f64..100.0, 4..60),
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let labels: Vec<usize> = (0..feature.len())
                .map(|_| rng.random_range(0..2usize))
                .collect();
            if labels.iter().all(|&y| y == labels[0]) {
                return Ok(());
            }
            let r2 = r2_anova(&feature, &labels, 2).unwrap().value;
            prop_assert!((0.0..=1.0).contains(&r2));
            let mv = mv_index(&feature, &labels, 2).unwrap().value;
            prop_assert!(mv >= 0.0);
            if feature.len() >= 3 {
                let dt = distance_correlation_categorical(&feature, 1, &labels, 2)
                    .unwrap()
                    .value;
                prop_assert!((0.0..=1.0).contains(&dt));
            }
        }
    }
}
