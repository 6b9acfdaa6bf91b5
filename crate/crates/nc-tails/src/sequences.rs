//! Scalar-sequence machinery: non-increasing rearrangement, `ℓ_p` and
//! Lorentz norms, and the (ℓ₁, ℓ₂) K-functional in both its exact form and
//! the head/tail split approximation.
//!
//! The K-functional of a sequence `a` at parameter `t ≥ 0` is
//!
//! ```text
//! K(a, t) = inf { ‖a′‖₁ + t·‖a″‖₂ : a′ + a″ = a }
//! ```
//!
//! The infimum is attained by coordinatewise soft-thresholding at a level μ
//! solving `‖min(|a|, μ)‖₂ = t·μ`, which this module finds exactly over the
//! sorted breakpoints of `|a|` (with a bisection fallback).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A finite sequence of real scalars. All entries are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSequence {
    values: Vec<f64>,
}

impl RealSequence {
    /// Rejects NaN and infinite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "sequence entry {pos} is not finite"
            )));
        }
        Ok(RealSequence { values })
    }

    pub fn empty() -> Self {
        RealSequence { values: Vec::new() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Parse a plain-text sequence file: one decimal number per line,
    /// `#`-prefixed comment lines and blank lines ignored.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut values = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let v: f64 = trimmed.parse().map_err(|_| Error::SequenceParse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("not a number: {trimmed:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::SequenceParse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: "entry is not finite".into(),
                });
            }
            values.push(v);
        }
        Ok(RealSequence { values })
    }
}

/// K-functional values over a grid of `t`, exact alongside the head/tail
/// split form. `k_exact[i] ≤ k_holmstedt[i]` holds pointwise since the split
/// is one feasible decomposition.
#[derive(Debug, Clone)]
pub struct KProfile {
    pub t_grid: Vec<f64>,
    pub k_exact: Vec<f64>,
    pub k_holmstedt: Vec<f64>,
}

impl KProfile {
    pub fn compute(seq: &RealSequence, t_grid: &[f64]) -> Result<KProfile> {
        let mut k_exact = Vec::with_capacity(t_grid.len());
        let mut k_holmstedt = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            k_exact.push(k12_exact(seq, t)?);
            k_holmstedt.push(k12_holmstedt(seq, t)?);
        }
        Ok(KProfile {
            t_grid: t_grid.to_vec(),
            k_exact,
            k_holmstedt,
        })
    }
}

/// Absolute values sorted in non-increasing order.
pub fn decreasing_rearrangement(seq: &RealSequence) -> RealSequence {
    let mut v: Vec<f64> = seq.values.iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    RealSequence { values: v }
}

/// `(Σ |a_n|^p)^{1/p}`, or `max |a_n|` for `p = ∞`. Empty input gives 0.
pub fn lp_norm(seq: &RealSequence, p: f64) -> Result<f64> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::invalid(format!("lp_norm requires p > 0, got {p}")));
    }
    if seq.is_empty() {
        return Ok(0.0);
    }
    if p.is_infinite() {
        return Ok(seq.values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    // Scale by the max to avoid overflow for large p.
    let max = seq.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = seq.values.iter().map(|v| (v.abs() / max).powf(p)).sum();
    Ok(max * sum.powf(1.0 / p))
}

/// Lorentz sequence norm `ℓ_{q,r}` of the rearranged sequence:
/// `sup_n n^{1/q} a*_n` for `r = ∞`, else `(Σ n^{r/q−1} (a*_n)^r)^{1/r}`.
pub fn lorentz_norm(seq: &RealSequence, q: f64, r: f64) -> Result<f64> {
    if q.is_nan() || q <= 0.0 || q.is_infinite() {
        return Err(Error::invalid(format!(
            "lorentz_norm requires finite q > 0, got {q}"
        )));
    }
    if r.is_nan() || r <= 0.0 {
        return Err(Error::invalid(format!(
            "lorentz_norm requires r > 0, got {r}"
        )));
    }
    let star = decreasing_rearrangement(seq);
    if r.is_infinite() {
        let sup = star
            .values
            .iter()
            .enumerate()
            .map(|(i, a)| ((i + 1) as f64).powf(1.0 / q) * a)
            .fold(0.0_f64, f64::max);
        return Ok(sup);
    }
    let sum: f64 = star
        .values
        .iter()
        .enumerate()
        .map(|(i, a)| ((i + 1) as f64).powf(r / q - 1.0) * a.powf(r))
        .sum();
    Ok(sum.powf(1.0 / r))
}

/// Exact K-functional `inf { ‖a′‖₁ + t‖a″‖₂ }` over splittings `a = a′ + a″`.
///
/// The optimal split keeps `a″_n = sign(a_n)·min(|a_n|, μ)` where μ ≥ 0
/// solves `‖min(|a|, μ)‖₂ = t·μ`. The root is found exactly on the sorted
/// breakpoints of `|a|`; bisection is the fallback for degenerate interval
/// arithmetic.
///
/// ```
/// use nc_tails::sequences::{k12_exact, RealSequence};
///
/// let ones = RealSequence::new(vec![1.0; 4]).unwrap();
/// // Small t: the all-ℓ₂ split wins, K = t·‖a‖₂.
/// assert!((k12_exact(&ones, 1.0).unwrap() - 2.0).abs() < 1e-12);
/// // Large t: the ℓ₁ split wins, K = ‖a‖₁.
/// assert!((k12_exact(&ones, 10.0).unwrap() - 4.0).abs() < 1e-12);
/// ```
pub fn k12_exact(seq: &RealSequence, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::invalid(format!("k12_exact requires t ≥ 0, got {t}")));
    }
    let mut m: Vec<f64> = seq
        .values
        .iter()
        .map(|v| v.abs())
        .filter(|v| *v > 0.0)
        .collect();
    if m.is_empty() || t == 0.0 {
        return Ok(0.0);
    }
    m.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let n = m.len();
    let l1: f64 = m.iter().sum();
    if t.is_infinite() || t * t >= n as f64 {
        // The all-ℓ₁ split already wins: steepest possible slope of the
        // threshold curve is √n.
        return Ok(l1);
    }

    // tail_sq[k] = Σ_{i ≥ k} m[i]²  (sum of squares of the entries ≤ μ when
    // k entries sit strictly above the threshold).
    let mut tail_sq = vec![0.0; n + 1];
    for k in (0..n).rev() {
        tail_sq[k] = tail_sq[k + 1] + m[k] * m[k];
    }

    // k = 0: every entry saturates, μ = ‖m‖₂ / t, valid when μ ≥ m[0].
    let mu0 = tail_sq[0].sqrt() / t;
    if mu0 >= m[0] {
        return Ok(t * tail_sq[0].sqrt());
    }

    // Interior: with k entries above μ, ‖min(m,μ)‖₂² = tail_sq[k] + k μ², so
    // the crossing satisfies μ² = tail_sq[k] / (t² − k).
    let t2 = t * t;
    let head_sum = |k: usize| -> f64 { m[..k].iter().sum() };
    for k in 1..n {
        if t2 <= k as f64 {
            break;
        }
        let mu = (tail_sq[k] / (t2 - k as f64)).sqrt();
        let lo = m[k];
        let hi = m[k - 1];
        let tol = 1e-12 * m[0].max(1.0);
        if mu >= lo - tol && mu <= hi + tol {
            let mu = mu.clamp(lo, hi);
            return Ok(head_sum(k) - k as f64 * mu + t2 * mu);
        }
    }

    // Bisection fallback on g(μ) = ‖min(m, μ)‖₂ − t·μ over (0, m[0]].
    let phi = |mu: f64| -> f64 { m.iter().map(|v| v.min(mu) * v.min(mu)).sum::<f64>().sqrt() };
    let (mut lo, mut hi) = (0.0_f64, m[0]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) - t * mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * m[0] {
            break;
        }
    }
    let mu = 0.5 * (lo + hi);
    let head: f64 = m.iter().filter(|v| **v > mu).map(|v| v - mu).sum();
    Ok(head + t * phi(mu))
}

/// Head/tail split form of the K-functional:
/// `Σ_{n ≤ ⌊t²⌋} a*_n + t·(Σ_{n > ⌊t²⌋} (a*_n)²)^{1/2}`.
pub fn k12_holmstedt(seq: &RealSequence, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::invalid(format!(
            "k12_holmstedt requires t ≥ 0, got {t}"
        )));
    }
    let star = decreasing_rearrangement(seq);
    let n = star.len();
    let head_len = if t.is_infinite() {
        n
    } else {
        ((t * t).floor() as usize).min(n)
    };
    let head: f64 = star.values[..head_len].iter().sum();
    let tail_sq: f64 = star.values[head_len..].iter().map(|v| v * v).sum();
    if t.is_infinite() {
        return Ok(head);
    }
    Ok(head + t * tail_sq.sqrt())
}
