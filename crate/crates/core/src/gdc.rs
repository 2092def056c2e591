//! Gini distance covariance and correlation between a numeric feature group
//! and a categorical variable.
//!
//! With Δ̂ the pooled GMD of the group and Δ̂ₖ the per-class GMDs,
//!
//! ```text
//! covariance  = Δ̂ − Σₖ p̂ₖ Δ̂ₖ          (between variation)
//! correlation = covariance / Δ̂          (between / total variation)
//! ```
//!
//! The population correlation lies in [0, 1] and is zero exactly when the
//! group and the label are independent. The sample estimate may dip slightly
//! below zero; it is reported raw, unclamped, because the screening ranking
//! needs to see those values. A group whose pooled GMD is zero carries no
//! class information and is flagged degenerate with correlation 0.

use std::collections::HashMap;
use std::hash::Hash;

use crate::dataset::Dataset;
use crate::error::{Result, ScreenError};
use crate::gmd::{gmd, within_class_gmd_flat};

/// Gini distance covariance/correlation of one feature group.
#[derive(Debug, Clone, PartialEq)]
pub struct GdcStat {
    pub covariance: f64,
    pub correlation: f64,
    /// Pooled GMD Δ̂ over all rows.
    pub total_gmd: f64,
    /// Class-probability-weighted within-class GMD Σₖ p̂ₖ Δ̂ₖ.
    pub within_gmd: f64,
    /// True when the pooled GMD is zero (constant group).
    pub degenerate: bool,
    /// Classes with fewer than two rows, counted as zero dispersion.
    pub small_classes: Vec<usize>,
}

pub(crate) fn gdc_flat(
    flat: &[f64],
    dim: usize,
    labels: &[usize],
    class_counts: &[usize],
) -> Result<GdcStat> {
    let total = gmd(flat, dim)?.value;
    let within = within_class_gmd_flat(flat, dim, labels, class_counts)?;
    let covariance = total - within.weighted_sum;
    let degenerate = total == 0.0;
    let correlation = if degenerate { 0.0 } else { covariance / total };
    Ok(GdcStat {
        covariance,
        correlation,
        total_gmd: total,
        within_gmd: within.weighted_sum,
        degenerate,
        small_classes: within.small_classes,
    })
}

/// Gini distance correlation between the `columns` of `dataset` and its
/// label.
pub fn gdc(dataset: &Dataset, columns: &[usize]) -> Result<GdcStat> {
    for &c in columns {
        if c >= dataset.p() {
            return Err(ScreenError::UnknownColumn(c.to_string()));
        }
    }
    if columns.is_empty() {
        return Err(ScreenError::EmptyGroup("gdc".into()));
    }
    let flat = dataset.gather(columns);
    gdc_flat(
        &flat,
        columns.len(),
        dataset.labels(),
        dataset.class_counts(),
    )
}

/// The same statistic with the roles swapped: a numeric response screened
/// against a categorical covariate. `categories` may use any usize codes;
/// observed codes are renumbered densely in increasing order.
pub fn gdc_swapped(numeric: &[f64], categories: &[usize]) -> Result<GdcStat> {
    if numeric.len() != categories.len() {
        return Err(ScreenError::LengthMismatch(
            numeric.len(),
            categories.len(),
        ));
    }
    if numeric.len() < 2 {
        return Err(ScreenError::TooFewRows(numeric.len()));
    }
    if numeric.iter().any(|v| !v.is_finite()) {
        return Err(ScreenError::InvalidValue(
            "non-finite value in numeric input".into(),
        ));
    }
    let max = categories.iter().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; max];
    for &c in categories {
        seen[c] = true;
    }
    let mut remap = vec![usize::MAX; max];
    let mut k = 0usize;
    for (code, s) in seen.iter().enumerate() {
        if *s {
            remap[code] = k;
            k += 1;
        }
    }
    if k < 2 {
        return Err(ScreenError::SingleClass);
    }
    let labels: Vec<usize> = categories.iter().map(|&c| remap[c]).collect();
    let mut counts = vec![0usize; k];
    for &y in &labels {
        counts[y] += 1;
    }
    gdc_flat(numeric, 1, &labels, &counts)
}

/// Gini impurity 1 − Σₖ p̂ₖ², the GMD of a categorical variable under the
/// 0/1 metric.
pub fn gini_impurity(labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(ScreenError::InvalidValue("empty label vector".into()));
    }
    let k = labels.iter().max().unwrap() + 1;
    let mut counts = vec![0usize; k];
    for &y in labels {
        counts[y] += 1;
    }
    let n = labels.len() as f64;
    let mut s = 0.0;
    for c in counts {
        let p = c as f64 / n;
        s += p * p;
    }
    Ok(1.0 - s)
}

fn impurity_of_codes(codes: &[usize], n_codes: usize) -> f64 {
    let mut counts = vec![0usize; n_codes];
    for &c in codes {
        counts[c] += 1;
    }
    let n = codes.len() as f64;
    let mut s = 0.0;
    for c in counts {
        let p = c as f64 / n;
        s += p * p;
    }
    1.0 - s
}

/// Gini distance correlation for a categorical covariate group:
/// (GI(X) − GI(X|Y)) / GI(X), where each distinct level tuple of the group
/// counts as one category and GI(X|Y) = Σₖ p̂ₖ · GI(X within class k).
///
/// Uses plug-in class proportions, which differ from the pair-based
/// U-statistic by O(1/nₖ).
pub fn gdc_categorical<T: Eq + Hash>(group: &[T], labels: &[usize]) -> Result<f64> {
    if group.len() != labels.len() {
        return Err(ScreenError::LengthMismatch(group.len(), labels.len()));
    }
    if group.len() < 2 {
        return Err(ScreenError::TooFewRows(group.len()));
    }
    let k = labels.iter().max().unwrap() + 1;
    if labels.iter().filter(|&&y| y == labels[0]).count() == labels.len() {
        return Err(ScreenError::SingleClass);
    }

    // Code distinct levels in first-appearance order.
    let mut code_of: HashMap<&T, usize> = HashMap::new();
    let mut codes = Vec::with_capacity(group.len());
    for level in group {
        let next = code_of.len();
        let code = *code_of.entry(level).or_insert(next);
        codes.push(code);
    }
    let n_codes = code_of.len();

    let gi_x = impurity_of_codes(&codes, n_codes);
    if gi_x == 0.0 {
        return Err(ScreenError::InvalidValue(
            "constant categorical group: Gini impurity is zero".into(),
        ));
    }

    let n = labels.len() as f64;
    let mut class_codes: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (code, &y) in codes.iter().zip(labels) {
        class_codes[y].push(*code);
    }
    let mut gi_cond = 0.0;
    for class in class_codes {
        if class.is_empty() {
            continue;
        }
        let p_hat = class.len() as f64 / n;
        gi_cond += p_hat * impurity_of_codes(&class, n_codes);
    }

    Ok((gi_x - gi_cond) / gi_x)
}
