//! Gini mean difference estimators.
//!
//! The Gini mean difference (GMD) of a sample is the average Euclidean
//! distance over all unordered pairs of points, the unbiased U-statistic
//! estimate of E‖X₁ − X₂‖. Every screening statistic in this crate reduces to
//! GMD evaluations, so the kernels here are built for reproducibility:
//!
//! * inputs are brought into a canonical order first (lexicographic for
//!   point sets, ascending for scalars), which makes results bit-identical
//!   under any permutation of the input;
//! * sums are accumulated with compensated (Kahan–Babuška–Neumaier)
//!   summation in a fixed i-major order, so parallel and serial execution
//!   agree bit for bit regardless of thread count.
//!
//! Univariate inputs take an O(m log m) path through the order-statistic
//! identity Σᵢ (2i − m − 1)·x₍ᵢ₎ instead of the O(m²) pair loop.

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Result, ScreenError};

/// Row count above which the pair loop fans out across threads.
const PAR_MIN_ROWS: usize = 512;

/// Compensated accumulator (Kahan–Babuška–Neumaier). Adding the same values
/// in the same order always produces the same bits, and the running error
/// stays near one ulp of the true sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Kbn {
    sum: f64,
    c: f64,
}

impl Kbn {
    pub(crate) fn new() -> Self {
        Kbn { sum: 0.0, c: 0.0 }
    }

    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn total(&self) -> f64 {
        self.sum + self.c
    }
}

/// Sum `values` in ascending value order. Used where a sum must not depend
/// on how its terms were indexed (e.g. on the class labelling).
pub(crate) fn sum_value_sorted(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let mut acc = Kbn::new();
    for v in values.iter() {
        acc.add(*v);
    }
    acc.total()
}

/// A nonnegative Gini mean difference, in the units of the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmdValue {
    pub value: f64,
}

fn validate_finite(data: &[f64]) -> Result<()> {
    if data.iter().any(|v| !v.is_finite()) {
        return Err(ScreenError::InvalidValue(
            "non-finite value in input".into(),
        ));
    }
    Ok(())
}

#[inline]
fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s.sqrt()
}

/// Average pairwise Euclidean distance of `m` points packed row-major into
/// `points` with `dim` coordinates each: (m choose 2)⁻¹ Σ_{i<j} ‖xᵢ − xⱼ‖₂.
pub fn gmd_pairwise(points: &[f64], dim: usize) -> Result<GmdValue> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(ScreenError::DimensionMismatch {
            len: points.len(),
            dim,
        });
    }
    let m = points.len() / dim;
    if m < 2 {
        return Err(ScreenError::InsufficientPoints(m));
    }
    validate_finite(points)?;

    // Canonical order: sort rows lexicographically so any permutation of the
    // input walks the pairs in the same sequence and lands on the same bits.
    let mut order: Vec<u32> = (0..m as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        let ra = &points[a as usize * dim..(a as usize + 1) * dim];
        let rb = &points[b as usize * dim..(b as usize + 1) * dim];
        ra.iter()
            .zip(rb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let row = |i: usize| -> &[f64] {
        let r = order[i] as usize;
        &points[r * dim..(r + 1) * dim]
    };

    let inner = |i: usize| -> f64 {
        let a = row(i);
        let mut acc = Kbn::new();
        for j in (i + 1)..m {
            acc.add(euclid(a, row(j)));
        }
        acc.total()
    };

    // i-major: one partial sum per outer index, combined in index order.
    let per_i: Vec<f64> = if m >= PAR_MIN_ROWS {
        (0..m - 1).into_par_iter().map(inner).collect()
    } else {
        (0..m - 1).map(inner).collect()
    };
    let mut acc = Kbn::new();
    for s in per_i {
        acc.add(s);
    }
    let pairs = (m * (m - 1) / 2) as f64;
    Ok(GmdValue {
        value: (acc.total() / pairs).max(0.0),
    })
}

/// O(m log m) univariate GMD: sorts and evaluates
/// 2/(m(m−1)) · Σᵢ (2i − m − 1)·x₍ᵢ₎ over the order statistics.
pub fn gmd_univariate_fast(values: &[f64]) -> Result<GmdValue> {
    let m = values.len();
    if m < 2 {
        return Err(ScreenError::InsufficientPoints(m));
    }
    validate_finite(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    if sorted[0] == sorted[m - 1] {
        return Ok(GmdValue { value: 0.0 });
    }
    let mf = m as f64;
    let mut acc = Kbn::new();
    for (i, x) in sorted.iter().enumerate() {
        let w = 2.0 * (i as f64 + 1.0) - mf - 1.0;
        acc.add(w * x);
    }
    let pairs = (m * (m - 1)) as f64;
    Ok(GmdValue {
        value: (2.0 * acc.total() / pairs).max(0.0),
    })
}

/// GMD of a packed point set, taking the fast path when `dim == 1`.
pub fn gmd(points: &[f64], dim: usize) -> Result<GmdValue> {
    if dim == 1 {
        gmd_univariate_fast(points)
    } else {
        gmd_pairwise(points, dim)
    }
}

/// Per-class GMDs of a column subset plus their class-probability-weighted
/// sum Σₖ (nₖ/n)·Δ̂ₖ.
#[derive(Debug, Clone)]
pub struct WithinClassGmd {
    pub per_class: Vec<GmdValue>,
    pub weighted_sum: f64,
    /// Classes with fewer than two rows: their GMD is undefined and counted
    /// as 0, which biases the correlation upward for such classes.
    pub small_classes: Vec<usize>,
}

/// Compute the within-class GMDs of `columns` for every class of `dataset`.
pub fn within_class_gmd(dataset: &Dataset, columns: &[usize]) -> Result<WithinClassGmd> {
    for &c in columns {
        if c >= dataset.p() {
            return Err(ScreenError::UnknownColumn(c.to_string()));
        }
    }
    let flat = dataset.gather(columns);
    within_class_gmd_flat(&flat, columns.len(), dataset.labels(), dataset.class_counts())
}

/// Same as [`within_class_gmd`] over an already-gathered n × dim buffer.
pub(crate) fn within_class_gmd_flat(
    flat: &[f64],
    dim: usize,
    labels: &[usize],
    class_counts: &[usize],
) -> Result<WithinClassGmd> {
    let n = labels.len();
    let k = class_counts.len();
    let mut per_class = Vec::with_capacity(k);
    let mut small_classes = Vec::new();
    let mut weighted = Vec::with_capacity(k);
    let mut class_buf: Vec<f64> = Vec::new();

    for (class, &nk) in class_counts.iter().enumerate() {
        if nk < 2 {
            small_classes.push(class);
            per_class.push(GmdValue { value: 0.0 });
            weighted.push(0.0);
            continue;
        }
        class_buf.clear();
        for (i, &y) in labels.iter().enumerate() {
            if y == class {
                class_buf.extend_from_slice(&flat[i * dim..(i + 1) * dim]);
            }
        }
        let g = gmd(&class_buf, dim)?;
        per_class.push(g);
        weighted.push(nk as f64 / n as f64 * g.value);
    }

    // Value-sorted reduction: the weighted sum must not depend on how the
    // classes happen to be numbered.
    let weighted_sum = sum_value_sorted(&mut weighted);
    Ok(WithinClassGmd {
        per_class,
        weighted_sum,
        small_classes,
    })
}
