//! Seeded generators for four benchmark simulation designs and the
//! replicate-level experiment driver.
//!
//! Reproducibility contract: every replicate draws from its own ChaCha8
//! stream derived from `(base_seed, replicate_index)`, so experiment output
//! is a pure function of the spec — bit-identical across runs and thread
//! counts on the same build — and distinct replicates never share draws.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::{Dataset, GroupPartition};
use crate::error::{Result, ScreenError};
use crate::gdc::gdc_swapped;
use crate::baselines::{distance_correlation_categorical, mv_index, r2_anova};
use crate::screening::{
    default_model_size, evaluate_measure, summarize_replicates, Measure, MetricsSummary,
    RankedGroups,
};

/// RNG recorded in report metadata.
pub const RNG_LABEL: &str = "chacha8";

/// Noise distribution for the additive error terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorDist {
    Normal,
    /// Student t with 2 degrees of freedom (heavy tails, finite mean).
    T2,
    /// Student t with 1 degree of freedom (Cauchy).
    T1,
}

/// Covariance structure of the latent Gaussian predictors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Covariance {
    Identity,
    /// First-order autoregressive: cov(Xᵢ, Xⱼ) = 0.5^|i−j|.
    Ar1,
}

/// Signal layout for the grouped design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupedCase {
    /// Both active groups carry the same signal strength (1.5).
    A,
    /// Group 0 carries strength 2, group 1 strength 1.
    B,
}

/// One of the four built-in data-generating processes.
#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    /// Gaussian location-shift classification: class k shifts coordinate k
    /// by 3. Active features: the first k columns.
    Lda {
        k: usize,
        class_probs: Vec<f64>,
        error: ErrorDist,
        p: usize,
    },
    /// Binary label from a logistic model with log-odds
    /// −3 + 2x₁ + 2x₂ + 2x₃ + 3·sin(x₄) + 4x₅². Active features: 0..5.
    Logistic { p: usize, cov: Covariance },
    /// Numeric response driven by five three-level markers cut from an
    /// AR(1) Gaussian at its quartiles. Active columns: 0, 1, 9, 19, 99.
    Gwas { p: usize, error: ErrorDist },
    /// Groups of three correlated-by-construction coordinates; groups 0 and
    /// 1 carry class-dependent mean shifts.
    Grouped {
        case: GroupedCase,
        class_probs: Vec<f64>,
        error: ErrorDist,
        r: usize,
    },
}

/// A full experiment: design, sample size, replicates, seed, measures.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub design: Design,
    pub n: usize,
    pub replicates: usize,
    pub base_seed: u64,
    pub measures: Vec<Measure>,
    /// Model size d for the inclusion proportions; ⌊n/ln n⌋ when absent.
    pub model_size: Option<usize>,
}

/// Screening outcome of one replicate: one ranked list per measure.
#[derive(Debug, Clone)]
pub struct ReplicateResult {
    pub replicate: usize,
    /// Parallel to the spec's measure list.
    pub ranked: Vec<RankedGroups>,
    pub active: Vec<usize>,
}

/// Everything `run_experiment` produces.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub summaries: Vec<(Measure, MetricsSummary)>,
    pub replicates: Vec<ReplicateResult>,
    pub model_size_d: usize,
    pub rng_label: &'static str,
}

/// The ChaCha8 stream private to one replicate of one experiment.
pub fn replicate_rng(base_seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(replicate as u64);
    rng
}

#[inline]
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn draw_error(rng: &mut ChaCha8Rng, dist: ErrorDist) -> f64 {
    match dist {
        ErrorDist::Normal => normal(rng),
        ErrorDist::T2 => {
            let z = normal(rng);
            let chi2 = loop {
                let a = normal(rng);
                let b = normal(rng);
                let s = a * a + b * b;
                if s > 0.0 {
                    break s;
                }
            };
            z / (chi2 / 2.0).sqrt()
        }
        ErrorDist::T1 => {
            let z = normal(rng);
            let chi2 = loop {
                let a = normal(rng);
                let s = a * a;
                if s > 0.0 {
                    break s;
                }
            };
            z / chi2.sqrt()
        }
    }
}

fn validate_probs(probs: &[f64], k: usize) -> Result<()> {
    if probs.len() != k {
        return Err(ScreenError::InvalidConfig(format!(
            "expected {k} class probabilities, got {}",
            probs.len()
        )));
    }
    if probs.iter().any(|&p| p <= 0.0 || !p.is_finite()) {
        return Err(ScreenError::InvalidConfig(
            "class probabilities must be positive".into(),
        ));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(ScreenError::InvalidConfig(format!(
            "class probabilities sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// Class sizes by largest-remainder apportionment of n·pₖ, then a seeded
/// shuffle of the label vector. Fixing the counts (rather than drawing each
/// label independently) keeps every class at its nominal share; with
/// independent draws a rare class goes nearly empty often enough that the
/// published selection rates for the unbalanced designs are unreachable.
fn stratified_labels(rng: &mut ChaCha8Rng, n: usize, probs: &[f64]) -> Vec<usize> {
    let k = probs.len();
    let mut counts: Vec<usize> = probs.iter().map(|p| (p * n as f64).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut remainders: Vec<(usize, f64)> = probs
        .iter()
        .enumerate()
        .map(|(c, p)| (c, p * n as f64 - counts[c] as f64))
        .collect();
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for i in 0..n - assigned {
        counts[remainders[i % k].0] += 1;
    }

    let mut labels = Vec::with_capacity(n);
    for (class, &count) in counts.iter().enumerate() {
        labels.extend(std::iter::repeat_n(class, count));
    }
    // Fisher–Yates with the replicate stream.
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    labels
}

fn lda_with_rng(
    k: usize,
    n: usize,
    class_probs: &[f64],
    error: ErrorDist,
    p: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Dataset, Vec<usize>)> {
    if k < 2 {
        return Err(ScreenError::InvalidConfig("need at least 2 classes".into()));
    }
    if p < k {
        return Err(ScreenError::InvalidConfig(format!(
            "need p >= K = {k}, got p = {p}"
        )));
    }
    if n < 2 {
        return Err(ScreenError::InvalidConfig("need n >= 2".into()));
    }
    validate_probs(class_probs, k)?;
    let labels = stratified_labels(rng, n, class_probs);

    let mut features = Vec::with_capacity(n * p);
    for &y in &labels {
        let base = features.len();
        for _ in 0..p {
            features.push(draw_error(rng, error));
        }
        features[base + y] += 3.0;
    }
    let dataset = Dataset::from_parts_compacting(features, p, labels)?;
    Ok((dataset, (0..k).collect()))
}

/// Location-shift classification sample: label multinomial over
/// `class_probs`, feature row = mean of its class plus iid noise. The class
/// k mean is 3 at coordinate k and 0 elsewhere.
pub fn gen_lda(
    k: usize,
    n: usize,
    class_probs: &[f64],
    error: ErrorDist,
    p: usize,
    seed: u64,
) -> Result<(Dataset, Vec<usize>)> {
    lda_with_rng(k, n, class_probs, error, p, &mut replicate_rng(seed, 0))
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fill one row of latent Gaussians, AR(1) with lag-1 correlation 0.5 or
/// independent.
fn fill_latent_row(rng: &mut ChaCha8Rng, cov: Covariance, row: &mut [f64]) {
    match cov {
        Covariance::Identity => {
            for v in row.iter_mut() {
                *v = normal(rng);
            }
        }
        Covariance::Ar1 => {
            let scale = (1.0 - 0.25f64).sqrt();
            let mut prev = normal(rng);
            row[0] = prev;
            for v in row.iter_mut().skip(1) {
                prev = 0.5 * prev + scale * normal(rng);
                *v = prev;
            }
        }
    }
}

fn logistic_with_rng(
    n: usize,
    p: usize,
    cov: Covariance,
    rng: &mut ChaCha8Rng,
) -> Result<(Dataset, Vec<usize>)> {
    if p < 5 {
        return Err(ScreenError::InvalidConfig("need p >= 5".into()));
    }
    if n < 2 {
        return Err(ScreenError::InvalidConfig("need n >= 2".into()));
    }
    let mut features = vec![0.0; n * p];
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let row = &mut features[i * p..(i + 1) * p];
        fill_latent_row(rng, cov, row);
        let logit = -3.0 + 2.0 * row[0] + 2.0 * row[1] + 2.0 * row[2]
            + 3.0 * row[3].sin()
            + 4.0 * row[4] * row[4];
        let u: f64 = rng.random();
        labels.push(usize::from(u < sigmoid(logit)));
    }
    let dataset = Dataset::from_parts_compacting(features, p, labels)?;
    Ok((dataset, vec![0, 1, 2, 3, 4]))
}

/// Binary logistic sample over Gaussian predictors; the log-odds are
/// −3 + 2x₁ + 2x₂ + 2x₃ + 3·sin(x₄) + 4x₅².
pub fn gen_logistic(
    n: usize,
    p: usize,
    cov: Covariance,
    seed: u64,
) -> Result<(Dataset, Vec<usize>)> {
    logistic_with_rng(n, p, cov, &mut replicate_rng(seed, 0))
}

/// Standard-normal first/third quartile.
const NORMAL_Q3: f64 = 0.674_489_750_196_081_7;

/// A genotype-style sample: numeric response plus a matrix of three-level
/// markers coded 1/0/−1.
#[derive(Debug, Clone)]
pub struct GwasData {
    pub response: Vec<f64>,
    /// Row-major n × p marker codes in {−1, 0, 1}.
    pub markers: Vec<i8>,
    pub n: usize,
    pub p: usize,
    pub active: Vec<usize>,
}

fn gwas_with_rng(n: usize, p: usize, error: ErrorDist, rng: &mut ChaCha8Rng) -> Result<GwasData> {
    if p < 100 {
        return Err(ScreenError::InvalidConfig("need p >= 100".into()));
    }
    if n < 2 {
        return Err(ScreenError::InvalidConfig("need n >= 2".into()));
    }

    // Coefficients are redrawn for every replicate: one shared sign flip
    // (−1 with probability 0.4) and per-coefficient magnitudes
    // 2·ln(n)/√n plus a folded normal. The shared sign matters: adjacent
    // markers are correlated, and independent signs would let their
    // marginal signals cancel.
    let base = 2.0 * (n as f64).ln() / (n as f64).sqrt();
    let u: f64 = rng.random();
    let sign = if u < 0.4 { -1.0 } else { 1.0 };
    let mut beta = [0.0; 5];
    for b in beta.iter_mut() {
        let z = normal(rng);
        *b = sign * (base + z.abs());
    }

    let mut markers = vec![0i8; n * p];
    let mut response = Vec::with_capacity(n);
    let mut latent = vec![0.0; p];
    for i in 0..n {
        fill_latent_row(rng, Covariance::Ar1, &mut latent);
        let row = &mut markers[i * p..(i + 1) * p];
        for (m, &x) in row.iter_mut().zip(&latent) {
            *m = if x < -NORMAL_Q3 {
                1
            } else if x < NORMAL_Q3 {
                0
            } else {
                -1
            };
        }
        let y = beta[0] * row[0] as f64
            + beta[1] * row[1] as f64
            + 2.0 * beta[2] * row[9] as f64
            + 2.0 * beta[3] * row[19] as f64
            - 2.0 * beta[4] * (row[99] as f64).abs()
            + draw_error(rng, error);
        response.push(y);
    }

    Ok(GwasData {
        response,
        markers,
        n,
        p,
        active: vec![0, 1, 9, 19, 99],
    })
}

/// Genotype-style design: latent AR(1) Gaussians cut at their quartiles
/// into three-level markers; the numeric response loads on markers 0, 1, 9,
/// 19 and on |marker 99|.
pub fn gen_gwas(n: usize, p: usize, error: ErrorDist, seed: u64) -> Result<GwasData> {
    gwas_with_rng(n, p, error, &mut replicate_rng(seed, 0))
}

fn grouped_with_rng(
    case: GroupedCase,
    class_probs: &[f64],
    error: ErrorDist,
    n: usize,
    r: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Dataset, GroupPartition, Vec<usize>)> {
    if r < 2 {
        return Err(ScreenError::InvalidConfig("need at least 2 groups".into()));
    }
    if n < 2 {
        return Err(ScreenError::InvalidConfig("need n >= 2".into()));
    }
    validate_probs(class_probs, 3)?;
    let p = 3 * r;
    let (s1, s2) = match case {
        GroupedCase::A => (1.5, 1.5),
        GroupedCase::B => (2.0, 1.0),
    };

    let labels = stratified_labels(rng, n, class_probs);
    let mut features = Vec::with_capacity(n * p);
    for &y in &labels {
        let base = features.len();
        for _ in 0..p {
            features.push(draw_error(rng, error));
        }
        // Group 0 occupies coordinates 0..3, group 1 coordinates 3..6; the
        // class-k mean direction is the unit vector e_k.
        features[base + y] += s1;
        features[base + 3 + y] += s2;
    }
    let dataset = Dataset::from_parts_compacting(features, p, labels)?;
    let partition = GroupPartition::consecutive(r, 3)?;
    Ok((dataset, partition, vec![0, 1]))
}

/// Grouped design over 3-wide groups: groups 0 and 1 carry class-dependent
/// mean shifts, everything else is noise. K = 3 classes.
pub fn gen_grouped(
    case: GroupedCase,
    class_probs: &[f64],
    error: ErrorDist,
    n: usize,
    r: usize,
    seed: u64,
) -> Result<(Dataset, GroupPartition, Vec<usize>)> {
    grouped_with_rng(case, class_probs, error, n, r, &mut replicate_rng(seed, 0))
}

/// Evaluate one measure on a genotype-style replicate, response against each
/// marker column with the roles swapped (numeric response, categorical
/// covariate). Constant columns score 0.
fn evaluate_gwas_measure(data: &GwasData, measure: Measure) -> Result<Vec<f64>> {
    let mut stats = Vec::with_capacity(data.p);
    let mut codes = vec![0usize; data.n];
    for j in 0..data.p {
        for (i, code) in codes.iter_mut().enumerate() {
            *code = (data.markers[i * data.p + j] + 1) as usize;
        }
        let constant = codes.iter().all(|&c| c == codes[0]);
        let value = if constant {
            0.0
        } else {
            match measure {
                Measure::Gdc => gdc_swapped(&data.response, &codes)?.correlation,
                Measure::R2 => r2_anova(&data.response, &codes, 3)?.value,
                Measure::Mv => mv_index(&data.response, &codes, 3)?.value,
                Measure::Dt => {
                    distance_correlation_categorical(&data.response, 1, &codes, 3)?.value
                }
                Measure::GdcCategorical => {
                    return Err(ScreenError::InvalidConfig(
                        "gdc_categorical needs a categorical response".into(),
                    ))
                }
            }
        };
        stats.push(value);
    }
    Ok(stats)
}

fn evaluate_replicate(spec: &SimulationSpec, m: usize) -> Result<ReplicateResult> {
    let mut rng = replicate_rng(spec.base_seed, m);
    match &spec.design {
        Design::Lda {
            k,
            class_probs,
            error,
            p,
        } => {
            let (dataset, active) = lda_with_rng(*k, spec.n, class_probs, *error, *p, &mut rng)?;
            let partition = GroupPartition::singleton(*p)?;
            let ranked = rank_dataset(&dataset, &partition, &spec.measures)?;
            Ok(ReplicateResult {
                replicate: m,
                ranked,
                active,
            })
        }
        Design::Logistic { p, cov } => {
            let (dataset, active) = logistic_with_rng(spec.n, *p, *cov, &mut rng)?;
            let partition = GroupPartition::singleton(*p)?;
            let ranked = rank_dataset(&dataset, &partition, &spec.measures)?;
            Ok(ReplicateResult {
                replicate: m,
                ranked,
                active,
            })
        }
        Design::Gwas { p, error } => {
            let data = gwas_with_rng(spec.n, *p, *error, &mut rng)?;
            let mut ranked = Vec::with_capacity(spec.measures.len());
            for &measure in &spec.measures {
                let stats = evaluate_gwas_measure(&data, measure)?;
                ranked.push(RankedGroups::from_stats(&stats, measure));
            }
            Ok(ReplicateResult {
                replicate: m,
                ranked,
                active: data.active,
            })
        }
        Design::Grouped {
            case,
            class_probs,
            error,
            r,
        } => {
            let (dataset, partition, active) =
                grouped_with_rng(*case, class_probs, *error, spec.n, *r, &mut rng)?;
            let ranked = rank_dataset(&dataset, &partition, &spec.measures)?;
            Ok(ReplicateResult {
                replicate: m,
                ranked,
                active,
            })
        }
    }
}

fn rank_dataset(
    dataset: &Dataset,
    partition: &GroupPartition,
    measures: &[Measure],
) -> Result<Vec<RankedGroups>> {
    let mut ranked = Vec::with_capacity(measures.len());
    for &measure in measures {
        if measure.requires_univariate() && !partition.all_univariate() {
            return Err(ScreenError::InvalidConfig(format!(
                "{} requires univariate groups",
                measure.as_str().to_uppercase()
            )));
        }
        let (stats, _) = evaluate_measure(dataset, partition, measure)?;
        ranked.push(RankedGroups::from_stats(&stats, measure));
    }
    Ok(ranked)
}

/// Run the full experiment: one RNG stream per replicate, screen with every
/// configured measure, summarize at model size d.
pub fn run_experiment(spec: &SimulationSpec) -> Result<ExperimentOutcome> {
    if spec.replicates == 0 {
        return Err(ScreenError::InvalidConfig("need at least 1 replicate".into()));
    }
    if spec.measures.is_empty() {
        return Err(ScreenError::InvalidConfig("no measures configured".into()));
    }
    if spec.n < 3 {
        return Err(ScreenError::InvalidConfig("need n >= 3".into()));
    }
    let d = spec.model_size.unwrap_or_else(|| default_model_size(spec.n));
    if d == 0 {
        return Err(ScreenError::InvalidConfig("model size d must be >= 1".into()));
    }

    let replicates: Vec<ReplicateResult> = (0..spec.replicates)
        .into_par_iter()
        .map(|m| evaluate_replicate(spec, m))
        .collect::<Result<Vec<_>>>()?;

    let mut summaries = Vec::with_capacity(spec.measures.len());
    for (mi, &measure) in spec.measures.iter().enumerate() {
        let per: Vec<(&RankedGroups, &[usize])> = replicates
            .iter()
            .map(|rep| (&rep.ranked[mi], rep.active.as_slice()))
            .collect();
        summaries.push((measure, summarize_replicates(&per, d)?));
    }

    Ok(ExperimentOutcome {
        summaries,
        replicates,
        model_size_d: d,
        rng_label: RNG_LABEL,
    })
}
