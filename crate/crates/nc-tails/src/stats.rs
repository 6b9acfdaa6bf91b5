//! Shared statistical helpers: binomial confidence intervals,
//! Kolmogorov–Smirnov distances, and exact Gaussian moments.

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p_hat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p_hat + z2 / (2.0 * n)) / denom;
    let half = z * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// Abramowitz–Stegun 7.1.26 rational approximation, |error| ≤ 1.5e-7.
pub fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// One-sample KS distance of sorted data against a continuous CDF.
pub fn ks_distance_sorted(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Two-sample KS distance between sorted samples.
pub fn ks_two_sample_sorted(xs: &[f64], ys: &[f64]) -> f64 {
    let (nx, ny) = (xs.len(), ys.len());
    let (n, m) = (nx as f64, ny as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    while i < nx && j < ny {
        // Step both ECDFs past the current value so ties advance together.
        let cur = xs[i].min(ys[j]);
        while i < nx && xs[i] <= cur {
            i += 1;
        }
        while j < ny && ys[j] <= cur {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic two-sample KS rejection threshold at significance `alpha`.
pub fn ks_two_sample_threshold(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Lanczos approximation of ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    let mut yy = y;
    for c in COEFFS {
        yy += 1.0;
        ser += c / yy;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// `(E |g|^p)^{1/p}` for a standard normal g: `(2^{p/2} Γ((p+1)/2) / √π)^{1/p}`.
pub fn normal_abs_moment_root(p: f64) -> f64 {
    let ln_moment = 0.5 * p * std::f64::consts::LN_2 + ln_gamma((p + 1.0) / 2.0)
        - 0.5 * std::f64::consts::PI.ln();
    (ln_moment / p).exp()
}

/// 0-based order-statistic rank window covering the `prob` quantile with
/// confidence `z` (binomial rank fluctuation).
pub fn quantile_rank_window(n: usize, prob: f64, z: f64) -> (usize, usize) {
    let nf = n as f64;
    let target = nf * prob;
    let half = z * (nf * prob * (1.0 - prob)).sqrt();
    let lo = (target - half).floor().max(0.0) as usize;
    let hi = ((target + half).ceil() as usize).min(n.saturating_sub(1));
    (lo.min(n.saturating_sub(1)), hi)
}
