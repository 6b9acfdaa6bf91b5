//! The random series under study and their Monte Carlo estimation.
//!
//! A scenario is a list of matrix blocks `(dₙ, Aₙ)`. The series kinds are:
//!
//! * `Epsilon` — `Σ dₙ·tr(εₙ Aₙ)` with εₙ Haar-uniform on O(dₙ);
//! * `Gauss` — the same with i.i.d. `N(0,1)/√dₙ` matrices Gₙ;
//! * `TruncatedGauss` — Gaussian blocks zeroed by a [`TruncationPolicy`];
//! * `Commutative` — the scalar surrogate `Σ sₘ rₘ` over the repeated
//!   singular-value sequence with Rademacher signs.
//!
//! Trials are embarrassingly parallel: each trial owns substreams derived
//! from `(master seed, kind, trial, block)` and samples are written in
//! trial-index order, so output is bit-identical for any worker count.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrices::{s_sequence, BlockSpec};
use crate::sampling::{
    apply_truncation, gaussian_matrix, haar_orthogonal, rademacher_signs, truncation_fires,
    RngSubstream, TruncationPolicy,
};
use crate::stats::{wilson_interval, Z95};

/// FNV-1a 64-bit accumulator for content digests.
pub struct Fnv64(u64);

impl Fnv64 {
    pub fn new() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }

    pub fn write_u64(&mut self, v: u64) {
        for byte in v.to_le_bytes() {
            self.0 ^= u64::from(byte);
            self.0 = self.0.wrapping_mul(0x100_0000_01b3);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for Fnv64 {
    fn default() -> Self {
        Self::new()
    }
}

/// Stable hex digest of a block list.
pub fn blocks_digest(blocks: &[BlockSpec]) -> String {
    let mut h = Fnv64::new();
    h.write_u64(blocks.len() as u64);
    for b in blocks {
        b.digest_into(&mut h);
    }
    format!("{:016x}", h.finish())
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeriesKind {
    Epsilon,
    Gauss,
    TruncatedGauss(TruncationPolicy),
    Commutative,
}

impl SeriesKind {
    /// Label folded into the substream path so that different kinds draw
    /// independent streams from the same master seed.
    fn stream_label(&self) -> u64 {
        match self {
            SeriesKind::Epsilon => 1,
            SeriesKind::Gauss => 2,
            SeriesKind::TruncatedGauss(p) => match p.mode {
                crate::sampling::TruncationMode::Whole => 3,
                crate::sampling::TruncationMode::DiagOffdiag => 4,
            },
            SeriesKind::Commutative => 5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SeriesKind::Epsilon => "epsilon",
            SeriesKind::Gauss => "gauss",
            SeriesKind::TruncatedGauss(p) => match p.mode {
                crate::sampling::TruncationMode::Whole => "gauss-trunc",
                crate::sampling::TruncationMode::DiagOffdiag => "gauss-split-trunc",
            },
            SeriesKind::Commutative => "commutative",
        }
    }

    /// Parse a CLI kind string; truncated kinds take λ from the caller.
    pub fn parse(name: &str, lambda: f64) -> Result<Self> {
        match name {
            "epsilon" => Ok(SeriesKind::Epsilon),
            "gauss" => Ok(SeriesKind::Gauss),
            "gauss-trunc" => {
                if lambda <= 0.0 {
                    return Err(Error::invalid("gauss-trunc requires lambda > 0"));
                }
                Ok(SeriesKind::TruncatedGauss(TruncationPolicy::whole(lambda)))
            }
            "gauss-split-trunc" => {
                if lambda <= 0.0 {
                    return Err(Error::invalid("gauss-split-trunc requires lambda > 0"));
                }
                Ok(SeriesKind::TruncatedGauss(TruncationPolicy::diag_offdiag(
                    lambda,
                )))
            }
            "commutative" => Ok(SeriesKind::Commutative),
            other => Err(Error::invalid(format!(
                "unknown series kind {other:?} (expected epsilon, gauss, gauss-trunc, \
                 gauss-split-trunc, or commutative)"
            ))),
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            SeriesKind::TruncatedGauss(p) => Some(p.lambda),
            _ => None,
        }
    }
}

/// Reproducible Monte Carlo samples of one series kind.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub kind: SeriesKind,
    pub blocks_digest: String,
    pub master_seed: u64,
    pub samples: Vec<f64>,
    pub trials: usize,
    /// For truncated kinds: number of trials in which at least one block
    /// was zeroed.
    pub truncation_fired: Option<u64>,
}

/// Empirical tail probabilities with 95% Wilson intervals.
#[derive(Debug, Clone, Serialize)]
pub struct TailEstimate {
    pub thresholds: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
}

enum Prepared<'a> {
    Blocks(&'a [BlockSpec]),
    Scalars(Vec<f64>),
}

fn eval_prepared(
    prepared: &Prepared<'_>,
    kind: &SeriesKind,
    trial_stream: &RngSubstream,
) -> (f64, bool) {
    match (prepared, kind) {
        (Prepared::Scalars(s), SeriesKind::Commutative) => {
            let mut stream = trial_stream.child(0);
            let signs = rademacher_signs(s.len(), &mut stream);
            let value = s
                .iter()
                .zip(signs.values())
                .map(|(sm, rm)| sm * rm)
                .sum::<f64>();
            (value, false)
        }
        (Prepared::Blocks(blocks), kind) => {
            let mut total = 0.0;
            let mut fired = false;
            for (idx, block) in blocks.iter().enumerate() {
                let d = block.dim();
                let a = block.matrix().expect("validated block");
                let mut stream = trial_stream.child(idx as u64);
                let term = match kind {
                    SeriesKind::Epsilon => {
                        let eps = haar_orthogonal(d, &mut stream);
                        trace_product(&eps, &a)
                    }
                    SeriesKind::Gauss => {
                        let g = gaussian_matrix(d, &mut stream);
                        trace_product(&g, &a)
                    }
                    SeriesKind::TruncatedGauss(policy) => {
                        let g = gaussian_matrix(d, &mut stream);
                        if truncation_fires(&g, policy) {
                            fired = true;
                            0.0
                        } else {
                            trace_product(&apply_truncation(&g, policy), &a)
                        }
                    }
                    SeriesKind::Commutative => unreachable!("scalars prepared for commutative"),
                };
                total += d as f64 * term;
            }
            (total, fired)
        }
        (Prepared::Scalars(_), _) => unreachable!(),
    }
}

/// tr(M·A) = Σ_{i,j} M_ij A_ji.
fn trace_product(m: &crate::matrices::Matrix, a: &crate::matrices::Matrix) -> f64 {
    let d = m.dim();
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            total += m.get(i, j) * a.get(j, i);
        }
    }
    total
}

fn prepare<'a>(blocks: &'a [BlockSpec], kind: &SeriesKind) -> Result<Prepared<'a>> {
    match kind {
        SeriesKind::Commutative => {
            let s = s_sequence(blocks)?;
            Ok(Prepared::Scalars(s.as_slice().to_vec()))
        }
        _ => {
            if blocks.is_empty() {
                return Err(Error::invalid("matrix series kinds require ≥ 1 block"));
            }
            Ok(Prepared::Blocks(blocks))
        }
    }
}

/// One draw of the chosen series from a trial-level stream.
pub fn evaluate_sample(
    blocks: &[BlockSpec],
    kind: &SeriesKind,
    trial_stream: &RngSubstream,
) -> Result<f64> {
    let prepared = prepare(blocks, kind)?;
    Ok(eval_prepared(&prepared, kind, trial_stream).0)
}

/// Test-surface hook: the series value with every rotation pinned to the
/// identity, `Σ dₙ·tr(Aₙ)`. For diagonal nonnegative blocks this attains the
/// almost-sure supremum `‖s‖₁` of the `epsilon` kind.
pub fn identity_epsilon_value(blocks: &[BlockSpec]) -> Result<f64> {
    let mut total = 0.0;
    for block in blocks {
        total += block.dim() as f64 * block.matrix()?.trace();
    }
    Ok(total)
}

/// `trials` independent draws via per-trial substreams; the result is
/// identical for a fixed seed regardless of worker count and scheduling.
///
/// ```
/// use nc_tails::matrices::BlockSpec;
/// use nc_tails::series::{monte_carlo, SeriesKind};
///
/// let blocks = vec![BlockSpec::from_singular_values(2, vec![2.0, 1.0]).unwrap()];
/// let set = monte_carlo(&blocks, &SeriesKind::Epsilon, 500, 42).unwrap();
/// let replay = monte_carlo(&blocks, &SeriesKind::Epsilon, 500, 42).unwrap();
/// assert_eq!(set.samples, replay.samples);
/// ```
pub fn monte_carlo(
    blocks: &[BlockSpec],
    kind: &SeriesKind,
    trials: usize,
    master_seed: u64,
) -> Result<SampleSet> {
    if trials < 1 {
        return Err(Error::invalid("trials must be ≥ 1"));
    }
    let prepared = prepare(blocks, kind)?;
    let base = RngSubstream::new(master_seed).child(kind.stream_label());
    let drawn: Vec<(f64, bool)> = (0..trials)
        .into_par_iter()
        .map(|trial| eval_prepared(&prepared, kind, &base.child(trial as u64)))
        .collect();
    let samples: Vec<f64> = drawn.iter().map(|(v, _)| *v).collect();
    let fired = drawn.iter().filter(|(_, f)| *f).count() as u64;
    Ok(SampleSet {
        kind: kind.clone(),
        blocks_digest: blocks_digest(blocks),
        master_seed,
        samples,
        trials,
        truncation_fired: match kind {
            SeriesKind::TruncatedGauss(_) => Some(fired),
            _ => None,
        },
    })
}

impl SampleSet {
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.trials as f64
    }

    /// Population variance of the samples.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.samples
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / self.trials as f64
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Samples sorted ascending (allocates).
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.samples.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    /// CSV export: header `trial,value`, one row per trial in trial order.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::with_capacity(16 * self.trials + 16);
        out.push_str("trial,value\n");
        for (i, v) in self.samples.iter().enumerate() {
            writeln!(out, "{i},{v}").expect("string write");
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Metadata sidecar JSON: kind, seed, digest, trial count.
    pub fn write_metadata(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Meta<'a> {
            kind: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            lambda: Option<f64>,
            seed: u64,
            blocks_digest: &'a str,
            trials: usize,
            #[serde(skip_serializing_if = "Option::is_none")]
            truncation_fired: Option<u64>,
        }
        let meta = Meta {
            kind: self.kind.name(),
            lambda: self.kind.lambda(),
            seed: self.master_seed,
            blocks_digest: &self.blocks_digest,
            trials: self.trials,
            truncation_fired: self.truncation_fired,
        };
        let body = serde_json::to_string_pretty(&meta).expect("serializable metadata");
        fs::write(path, body + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Empirical `Pr(sample > threshold)` over a strictly increasing threshold
/// grid, with 95% Wilson intervals.
pub fn empirical_tail(set: &SampleSet, thresholds: &[f64]) -> Result<TailEstimate> {
    if set.samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("thresholds must be strictly increasing"));
    }
    let sorted = set.sorted();
    let n = sorted.len();
    let mut probabilities = Vec::with_capacity(thresholds.len());
    let mut ci_low = Vec::with_capacity(thresholds.len());
    let mut ci_high = Vec::with_capacity(thresholds.len());
    for &thr in thresholds {
        let above = n - sorted.partition_point(|v| *v <= thr);
        let p = above as f64 / n as f64;
        let (lo, hi) = wilson_interval(above as u64, n as u64, Z95);
        probabilities.push(p);
        ci_low.push(lo);
        ci_high.push(hi);
    }
    Ok(TailEstimate {
        thresholds: thresholds.to_vec(),
        probabilities,
        ci_low,
        ci_high,
    })
}

/// Empirical `(E |X|^p)^{1/p}` for each p in the grid.
pub fn empirical_moments(set: &SampleSet, p_list: &[f64]) -> Result<Vec<f64>> {
    if set.samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if p_list.iter().any(|p| !p.is_finite() || *p < 1.0) {
        return Err(Error::invalid("moment orders must be finite and ≥ 1"));
    }
    let n = set.trials as f64;
    Ok(p_list
        .iter()
        .map(|&p| {
            let mean: f64 = set.samples.iter().map(|v| v.abs().powf(p)).sum::<f64>() / n;
            mean.powf(1.0 / p)
        })
        .collect())
}

/// Order-statistic quantiles with lower interpolation.
pub fn empirical_quantile(set: &SampleSet, probs: &[f64]) -> Result<Vec<f64>> {
    if set.samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if probs.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(Error::invalid("quantile probabilities must lie in (0,1)"));
    }
    let sorted = set.sorted();
    Ok(probs.iter().map(|&p| quantile_sorted(&sorted, p)).collect())
}

/// Lower order statistic at probability `p` of an ascending-sorted slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((n as f64 * p).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}
