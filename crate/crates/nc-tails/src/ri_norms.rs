//! Rearrangement-invariant norms of sample distributions: the Luxemburg
//! gauge for the Orlicz function `exp(t^p) − 1` and its Lorentz-weighted
//! refinement, plus empirical `L_p` norm profiles.

use crate::error::{Error, Result};

/// Weight convention for the Orlicz–Lorentz integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// `(log(e/t))^{−(r/p)−1} / t` — integrable for bounded inputs; this is
    /// the default.
    Integrable,
    /// `(log(1/t))^{(r/p)−1} / t` — retained for auditability; diverges for
    /// every bounded nonzero input and is reported with a divergence flag.
    AsPrinted,
}

#[derive(Debug, Clone, Copy)]
pub struct OrliczParams {
    pub p: f64,
    pub r: Option<f64>,
    pub weight_mode: WeightMode,
}

impl OrliczParams {
    pub fn integrable(p: f64, r: f64) -> Self {
        OrliczParams {
            p,
            r: Some(r),
            weight_mode: WeightMode::Integrable,
        }
    }

    pub fn as_printed(p: f64, r: f64) -> Self {
        OrliczParams {
            p,
            r: Some(r),
            weight_mode: WeightMode::AsPrinted,
        }
    }
}

/// Result of the Orlicz–Lorentz quadrature. `truncation_t` is the left end
/// of the unobserved deep-tail region; `divergent` marks a failed Cauchy
/// check in as-printed mode.
#[derive(Debug, Clone, Copy)]
pub struct OrliczLorentzResult {
    pub value: f64,
    pub truncation_t: f64,
    pub divergent: bool,
}

/// Luxemburg gauge `inf { λ : E exp(|x/λ|^p) ≤ 2 }` over the samples,
/// bisected to 1e-9 relative tolerance. All-zero input gives 0.
pub fn orlicz_exp_norm(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if p <= 0.0 || !p.is_finite() {
        return Err(Error::invalid(format!(
            "orlicz_exp_norm requires finite p > 0, got {p}"
        )));
    }
    let max = samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Ok(0.0);
    }
    let n = samples.len() as f64;
    // Mean of exp(|x/λ|^p) with overflow guard; monotone decreasing in λ.
    let gauge = |lambda: f64| -> f64 {
        let mut total = 0.0_f64;
        for x in samples {
            let u = (x.abs() / lambda).powf(p);
            if u > 700.0 {
                return f64::INFINITY;
            }
            total += u.exp();
        }
        total / n
    };

    let mut lo = max / 50.0;
    let mut hi = max * 50.0;
    // Grow the bracket by factors of 10, up to 6 times per side.
    let mut tries = 0;
    while gauge(lo) <= 2.0 && tries < 6 {
        lo /= 10.0;
        tries += 1;
    }
    let mut tries = 0;
    while gauge(hi) > 2.0 && tries < 6 {
        hi *= 10.0;
        tries += 1;
    }
    if gauge(hi) > 2.0 {
        return Err(Error::invalid(
            "orlicz_exp_norm bracket expansion failed to contain the gauge",
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gauge(mid) > 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-9 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Orlicz–Lorentz norm of a decreasing rearrangement supplied as a function
/// on (0, 1): `(∫ weight(t)·f*(t)^r dt)^{1/r}` under the substitution
/// `w = log(e/t)`.
///
/// The quadrature is composite midpoint on a geometric grid of 2048 nodes
/// over `w ∈ [1, 1 − ln t_floor]`. In integrable mode the flat tail beyond
/// the truncation point is completed analytically with `f*(t_floor)`; in
/// as-printed mode the doubling-window Cauchy check flags divergence.
pub fn orlicz_lorentz_norm_fn(
    f_star: impl Fn(f64) -> f64,
    params: &OrliczParams,
    t_floor: f64,
) -> Result<OrliczLorentzResult> {
    let p = params.p;
    let r = params
        .r
        .ok_or_else(|| Error::invalid("orlicz_lorentz_norm requires the secondary index r"))?;
    if p <= 0.0 || !p.is_finite() || r <= 0.0 || !r.is_finite() {
        return Err(Error::invalid(format!(
            "orlicz_lorentz_norm requires finite p, r > 0, got p={p}, r={r}"
        )));
    }
    if t_floor <= 0.0 || t_floor >= 1.0 || t_floor.is_nan() {
        return Err(Error::invalid("t_floor must lie in (0, 1)"));
    }

    const NODES: usize = 2048;
    let w_max = 1.0 - t_floor.ln();
    let ratio = w_max.powf(1.0 / NODES as f64);
    let exponent = r / p;

    let mut integral = 0.0_f64;
    // Doubling-window masses and widths over w ∈ [1,2], [2,4], … for the
    // Cauchy check (the last window may be width-truncated by w_max).
    let mut windows: Vec<(f64, f64)> = Vec::new();
    let mut w_lo = 1.0_f64;
    for i in 0..NODES {
        let w_hi = if i + 1 == NODES { w_max } else { w_lo * ratio };
        let wm = 0.5 * (w_lo + w_hi);
        let h = w_hi - w_lo;
        let t = (1.0 - wm).exp();
        let weight = match params.weight_mode {
            WeightMode::Integrable => wm.powf(-exponent - 1.0),
            WeightMode::AsPrinted => (wm - 1.0).powf(exponent - 1.0),
        };
        let contribution = f_star(t).powf(r) * weight * h;
        integral += contribution;
        let window = ((wm.log2()).floor().max(0.0)) as usize;
        if windows.len() <= window {
            windows.resize(window + 1, (0.0, 0.0));
        }
        windows[window].0 += contribution;
        windows[window].1 += h;
        w_lo = w_hi;
    }

    let mut divergent = false;
    let total = match params.weight_mode {
        WeightMode::Integrable => {
            // Flat completion of the unobserved tail:
            // ∫_{w_max}^∞ w^{−r/p−1} dw = (p/r)·w_max^{−r/p}.
            let tail = f_star(t_floor).powf(r) * (p / r) * w_max.powf(-exponent);
            integral + tail
        }
        WeightMode::AsPrinted => {
            // Mass density per unit w must decay strictly toward the tail;
            // anything slower signals a divergent integral. The printed
            // weight density falls off like w^{r/p−1}, always above the
            // 2^{r/p−1} > ½ per-window ratio.
            let densities: Vec<f64> = windows
                .iter()
                .filter(|(_, width)| *width > 0.0)
                .map(|(mass, width)| mass / width)
                .collect();
            if densities.len() >= 2 {
                let last = densities[densities.len() - 1];
                let prev = densities[densities.len() - 2];
                if last > 0.0 && last >= 0.5 * prev {
                    divergent = true;
                }
            }
            integral
        }
    };

    Ok(OrliczLorentzResult {
        value: total.powf(1.0 / r),
        truncation_t: t_floor,
        divergent,
    })
}

/// Orlicz–Lorentz norm of the empirical rearrangement of `|samples|`,
/// truncated at `t = 1/n` (deeper tail mass is unobserved).
pub fn orlicz_lorentz_norm(samples: &[f64], params: &OrliczParams) -> Result<OrliczLorentzResult> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mut sorted_desc: Vec<f64> = samples.iter().map(|v| v.abs()).collect();
    sorted_desc.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let n = sorted_desc.len();
    let f_star = |t: f64| -> f64 {
        let idx = ((t * n as f64).floor() as usize).min(n - 1);
        sorted_desc[idx]
    };
    orlicz_lorentz_norm_fn(f_star, params, 1.0 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PNormEntry {
    pub p: f64,
    pub norm: f64,
    /// Moments above p ≈ log₂(trials) are dominated by a handful of extreme
    /// samples and flagged unreliable.
    pub reliable: bool,
}

/// Empirical `L_p` norms over a grid, each with a reliability flag.
pub fn pnorm_profile(samples: &[f64], p_grid: &[f64]) -> Result<Vec<PNormEntry>> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if p_grid.iter().any(|p| !p.is_finite() || *p < 1.0) {
        return Err(Error::invalid("p_grid entries must be finite and ≥ 1"));
    }
    let n = samples.len() as f64;
    Ok(p_grid
        .iter()
        .map(|&p| {
            let mean: f64 = samples.iter().map(|v| v.abs().powf(p)).sum::<f64>() / n;
            PNormEntry {
                p,
                norm: mean.powf(1.0 / p),
                reliable: p <= n.log2() && n >= 100.0 * p,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::RngSubstream;

    #[test]
    fn orlicz_norm_of_constant_samples() {
        // exp((a/λ)^p) = 2 solves to λ = a / (ln 2)^{1/p}.
        for p in [0.5, 1.0, 2.0, 4.0] {
            let samples = vec![3.0; 500];
            let norm = orlicz_exp_norm(&samples, p).unwrap();
            let expected = 3.0 / 2.0_f64.ln().powf(1.0 / p);
            assert!(
                (norm - expected).abs() < 1e-6 * expected,
                "p={p}: {norm} vs {expected}"
            );
        }
    }

    #[test]
    fn orlicz_norm_is_homogeneous() {
        let mut stream = RngSubstream::new(31);
        let samples: Vec<f64> = (0..2000).map(|_| stream.next_gaussian()).collect();
        let scaled: Vec<f64> = samples.iter().map(|v| 3.5 * v).collect();
        let a = orlicz_exp_norm(&samples, 2.0).unwrap();
        let b = orlicz_exp_norm(&scaled, 2.0).unwrap();
        assert!((b - 3.5 * a).abs() < 1e-6 * b);
    }

    #[test]
    fn orlicz_norm_of_gaussian_samples() {
        // E exp((g/λ)²) = 2 at λ = σ·√(8/3).
        let mut stream = RngSubstream::new(32);
        let sigma = 2.0;
        let samples: Vec<f64> = (0..100_000)
            .map(|_| sigma * stream.next_gaussian())
            .collect();
        let norm = orlicz_exp_norm(&samples, 2.0).unwrap();
        let expected = sigma * (8.0_f64 / 3.0).sqrt();
        assert!(
            (norm - expected).abs() < 0.1 * expected,
            "{norm} vs {expected}"
        );
    }

    #[test]
    fn orlicz_norm_edge_cases() {
        assert!(orlicz_exp_norm(&[], 1.0).is_err());
        assert!(orlicz_exp_norm(&[1.0], 0.0).is_err());
        assert_eq!(orlicz_exp_norm(&[0.0; 10], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn orlicz_norm_is_monotone_under_domination() {
        let mut stream = RngSubstream::new(33);
        for _ in 0..50 {
            let xs: Vec<f64> = (0..200).map(|_| stream.next_gaussian()).collect();
            let ys: Vec<f64> = xs.iter().map(|v| v * (1.0 + stream.next_f64())).collect();
            let nx = orlicz_exp_norm(&xs, 1.5).unwrap();
            let ny = orlicz_exp_norm(&ys, 1.5).unwrap();
            assert!(nx <= ny * (1.0 + 1e-9), "{nx} > {ny}");
        }
    }

    #[test]
    fn orlicz_norm_triangle_inequality() {
        let mut stream = RngSubstream::new(34);
        for p in [1.0, 2.0] {
            for _ in 0..50 {
                let xs: Vec<f64> = (0..256).map(|_| stream.next_gaussian()).collect();
                let ys: Vec<f64> = (0..256).map(|_| stream.next_gaussian()).collect();
                let sum: Vec<f64> = xs.iter().zip(&ys).map(|(a, b)| a + b).collect();
                let nx = orlicz_exp_norm(&xs, p).unwrap();
                let ny = orlicz_exp_norm(&ys, p).unwrap();
                let ns = orlicz_exp_norm(&sum, p).unwrap();
                assert!(ns <= (nx + ny) * (1.0 + 1e-9), "p={p}: {ns} > {nx}+{ny}");
            }
        }
    }

    #[test]
    fn orlicz_lorentz_constant_function_values() {
        // ∫₁^∞ w^{−r/p−1} dw = p/r, so a constant a has norm a·(p/r)^{1/r}.
        for (p, r) in [(2.0, 2.0), (4.0, 1.0), (4.0, 2.0), (3.0, 1.5)] {
            let params = OrliczParams::integrable(p, r);
            let result = orlicz_lorentz_norm_fn(|_| 2.5, &params, 1e-9).unwrap();
            let expected = 2.5 * (p / r).powf(1.0 / r);
            assert!(
                (result.value - expected).abs() < 2e-3 * expected,
                "p={p}, r={r}: {} vs {expected}",
                result.value
            );
            assert!(!result.divergent);
        }
    }

    #[test]
    fn as_printed_weight_diverges_for_constants() {
        let params = OrliczParams::as_printed(2.0, 2.0);
        let result = orlicz_lorentz_norm_fn(|_| 1.0, &params, 1e-9).unwrap();
        assert!(result.divergent);
    }

    #[test]
    fn orlicz_lorentz_empirical_matches_constant() {
        let params = OrliczParams::integrable(3.0, 3.0);
        let samples = vec![-1.75; 4096];
        let result = orlicz_lorentz_norm(&samples, &params).unwrap();
        // r = p: weight integrates to 1 and f* ≡ 1.75.
        assert!(
            (result.value - 1.75).abs() < 5e-3 * 1.75,
            "{}",
            result.value
        );
        assert!((result.truncation_t - 1.0 / 4096.0).abs() < 1e-15);
    }

    #[test]
    fn orlicz_lorentz_validation() {
        let no_r = OrliczParams {
            p: 2.0,
            r: None,
            weight_mode: WeightMode::Integrable,
        };
        assert!(orlicz_lorentz_norm_fn(|_| 1.0, &no_r, 1e-6).is_err());
        assert!(orlicz_lorentz_norm(&[], &OrliczParams::integrable(2.0, 1.0)).is_err());
        assert!(
            orlicz_lorentz_norm_fn(|_| 1.0, &OrliczParams::integrable(-1.0, 1.0), 1e-6).is_err()
        );
    }

    #[test]
    fn pnorm_profile_basics() {
        let profile = pnorm_profile(&[2.0; 1000], &[1.0, 2.0, 4.0]).unwrap();
        for entry in &profile {
            assert!((entry.norm - 2.0).abs() < 1e-12);
        }
        // Jensen: norms nondecreasing in p.
        let mut stream = RngSubstream::new(35);
        let samples: Vec<f64> = (0..10_000).map(|_| stream.next_gaussian()).collect();
        let profile = pnorm_profile(&samples, &[1.0, 2.0, 3.0, 4.0, 6.0]).unwrap();
        for w in profile.windows(2) {
            assert!(w[0].norm <= w[1].norm + 1e-12);
        }
    }

    #[test]
    fn pnorm_profile_gaussian_fourth_moment() {
        let mut stream = RngSubstream::new(36);
        let sigma = 1.4;
        let samples: Vec<f64> = (0..100_000)
            .map(|_| sigma * stream.next_gaussian())
            .collect();
        let profile = pnorm_profile(&samples, &[4.0]).unwrap();
        let expected = sigma * 3.0_f64.powf(0.25);
        assert!((profile[0].norm - expected).abs() < 0.1 * expected);
        assert!(profile[0].reliable);
    }

    #[test]
    fn pnorm_reliability_flags() {
        let samples = vec![1.0; 200];
        let profile = pnorm_profile(&samples, &[1.0, 2.0, 32.0]).unwrap();
        assert!(profile[0].reliable);
        assert!(!profile[2].reliable, "p=32 at 200 samples must be flagged");
        assert!(pnorm_profile(&samples, &[0.5]).is_err());
    }

    #[test]
    fn rodin_semyonov_band_on_power_decay() {
        // s_n = n^{−3/4} (64 scalar blocks): the exp(t⁴) gauge of the series
        // tracks the ℓ_{4/3,∞} norm of s within a single constant band.
        let q: f64 = 4.0 / 3.0;
        let p = 4.0;
        let blocks: Vec<crate::matrices::BlockSpec> = (1..=64)
            .map(|n| {
                crate::matrices::BlockSpec::from_singular_values(1, vec![(n as f64).powf(-1.0 / q)])
                    .unwrap()
            })
            .collect();
        let set =
            crate::series::monte_carlo(&blocks, &crate::series::SeriesKind::Epsilon, 100_000, 808)
                .unwrap();
        let orlicz = orlicz_exp_norm(&set.samples, p).unwrap();
        let s = crate::matrices::s_sequence(&blocks).unwrap();
        let lorentz = crate::sequences::lorentz_norm(s.values(), q, f64::INFINITY).unwrap();
        let ratio = orlicz / lorentz;
        assert!(
            (1.0 / 6.0..=6.0).contains(&ratio),
            "ratio {ratio} outside [1/6, 6]"
        );
    }
}
