//! Scenario runner: executes the quantitative claims about the series as
//! empirical checks over Monte Carlo samples and emits structured reports.
//!
//! Constants are fitted, never assumed. Each check reports its fitted
//! constant and compares it against a configurable acceptance ceiling:
//!
//! * `tail_formula` — two-sided tail bounds through the K-functional: the
//!   smallest α such that `Pr(S > α·K(t)) ≤ α·e^{−t²/α}` and
//!   `Pr(S > K(t)/α) ≥ e^{−α·t²}/α` across the t grid (CI-adjusted).
//! * `commutative_comparison` — quantile-ratio band between the rotation
//!   series and the scalar sign surrogate `Σ sₙ rₙ`.
//! * `norm_equivalences` — moment, Orlicz and Orlicz–Lorentz norms of the
//!   series against the K-functional and Lorentz norms of `s`.
//! * `gaussian_parity` — quantile-ratio bands against the truncated
//!   Gaussian series at the configured λ.
//!
//! Empirical tails below `10/trials` are censored: such grid points are
//! reported but never used as pass evidence.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrices::{s_sequence, BlockSpec, Matrix, SSequence};
use crate::ri_norms::{orlicz_exp_norm, orlicz_lorentz_norm, pnorm_profile, OrliczParams};
use crate::sampling::TruncationPolicy;
use crate::sequences::{k12_exact, KProfile};
use crate::series::{blocks_digest, monte_carlo, quantile_sorted, SampleSet, SeriesKind};
use crate::stats::{normal_abs_moment_root, quantile_rank_window, wilson_interval, Z95};

pub const CHECK_IDS: &[&str] = &[
    "tail_formula",
    "commutative_comparison",
    "norm_equivalences",
    "gaussian_parity",
];

/// Checks that estimate tail probabilities and therefore need enough trials
/// for the censoring floor to be meaningful.
const TAIL_CHECKS: &[&str] = &["tail_formula", "commutative_comparison", "gaussian_parity"];

/// Acceptance ceilings for the fitted constants.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub alpha_max: f64,
    pub commutative_band: f64,
    pub norm_band: f64,
    pub parity_band: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            alpha_max: 10.0,
            commutative_band: 5.0,
            norm_band: 8.0,
            parity_band: 5.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub blocks: Vec<BlockSpec>,
    pub trials: usize,
    pub master_seed: u64,
    pub t_grid: Vec<f64>,
    pub lambda: f64,
    pub checks: Vec<String>,
    pub tolerances: Tolerances,
    /// Orlicz index pair (p, r) for the norm-equivalence check; the Lorentz
    /// exponent q is its conjugate `p/(p−1)`.
    pub orlicz_p: f64,
    pub orlicz_r: f64,
    pub p_grid: Vec<f64>,
}

// ── configuration parsing ───────────────────────────────────────────

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    blocks: Vec<RawBlock>,
    trials: usize,
    #[serde(default)]
    seed: Option<SeedValue>,
    t_grid: Vec<f64>,
    lambda: f64,
    checks: Vec<String>,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default)]
    orlicz: Option<RawOrlicz>,
    #[serde(default)]
    p_grid: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlock {
    d: usize,
    #[serde(default)]
    singular_values: Option<Vec<f64>>,
    #[serde(default)]
    matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    alpha_max: Option<f64>,
    commutative_band: Option<f64>,
    norm_band: Option<f64>,
    parity_band: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOrlicz {
    p: f64,
    r: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SeedValue {
    Int(u64),
    Text(String),
}

/// Parse a 64-bit seed written in decimal or `0x`-prefixed hex.
pub fn parse_seed(text: &str) -> Result<u64> {
    let trimmed = text.trim();
    let parsed = if let Some(hex) = trimmed
        .strip_prefix("0x")
        .or_else(|| trimmed.strip_prefix("0X"))
    {
        u64::from_str_radix(hex, 16)
    } else {
        trimmed.parse()
    };
    parsed.map_err(|_| Error::invalid(format!("invalid 64-bit seed {trimmed:?}")))
}

impl Scenario {
    /// Parse and validate a JSON scenario. `seed_override` takes precedence
    /// over the config's own seed field.
    pub fn from_json(text: &str, seed_override: Option<u64>) -> Result<Scenario> {
        let mut deserializer = serde_json::Deserializer::from_str(text);
        let raw: RawScenario = serde_path_to_error::deserialize(&mut deserializer)
            .map_err(|e| Error::config(e.path().to_string(), e.inner().to_string()))?;
        Scenario::from_raw(raw, seed_override)
    }

    pub fn from_file(path: &Path, seed_override: Option<u64>) -> Result<Scenario> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Scenario::from_json(&text, seed_override)
    }

    fn from_raw(raw: RawScenario, seed_override: Option<u64>) -> Result<Scenario> {
        let mut blocks = Vec::with_capacity(raw.blocks.len());
        for (i, rb) in raw.blocks.into_iter().enumerate() {
            let field = format!("blocks[{i}]");
            let block = match (rb.singular_values, rb.matrix) {
                (Some(sv), None) => BlockSpec::from_singular_values(rb.d, sv)
                    .map_err(|e| Error::config(&field, e.to_string()))?,
                (None, Some(rows)) => {
                    let m = Matrix::from_rows(&rows)
                        .map_err(|e| Error::config(&field, e.to_string()))?;
                    if m.dim() != rb.d {
                        return Err(Error::config(
                            &field,
                            format!("matrix is {}×{} but d = {}", m.dim(), m.dim(), rb.d),
                        ));
                    }
                    BlockSpec::from_matrix(m).map_err(|e| Error::config(&field, e.to_string()))?
                }
                _ => {
                    return Err(Error::config(
                        &field,
                        "exactly one of `singular_values` or `matrix` is required",
                    ))
                }
            };
            blocks.push(block);
        }

        if raw.trials < 1 {
            return Err(Error::config("trials", "must be ≥ 1"));
        }
        let needs_tails = raw.checks.iter().any(|c| TAIL_CHECKS.contains(&c.as_str()));
        if needs_tails && raw.trials < 10_000 {
            return Err(Error::config(
                "trials",
                "tail checks need ≥ 10000 trials (censoring floor 10/trials)",
            ));
        }

        for (i, c) in raw.checks.iter().enumerate() {
            if !CHECK_IDS.contains(&c.as_str()) {
                return Err(Error::config(
                    format!("checks[{i}]"),
                    format!("unknown check id {c:?} (known: {})", CHECK_IDS.join(", ")),
                ));
            }
            if raw.checks[..i].contains(c) {
                return Err(Error::config(format!("checks[{i}]"), "duplicate check id"));
            }
        }

        if raw.t_grid.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(Error::config("t_grid", "entries must be positive reals"));
        }
        if raw.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("t_grid", "must be strictly increasing"));
        }
        if raw.checks.iter().any(|c| c == "tail_formula") && raw.t_grid.is_empty() {
            return Err(Error::config(
                "t_grid",
                "tail_formula needs a nonempty grid",
            ));
        }
        if raw.lambda <= 0.0 || !raw.lambda.is_finite() {
            return Err(Error::config("lambda", "must be a positive real"));
        }

        let seed = match (seed_override, raw.seed) {
            (Some(s), _) => Some(s),
            (None, Some(SeedValue::Int(s))) => Some(s),
            (None, Some(SeedValue::Text(t))) => {
                Some(parse_seed(&t).map_err(|e| Error::config("seed", e.to_string()))?)
            }
            (None, None) => None,
        };
        let master_seed = seed.ok_or_else(|| {
            Error::config(
                "seed",
                "missing: set it in the config, pass --seed, or export NC_TAILS_SEED",
            )
        })?;

        let defaults = Tolerances::default();
        let tolerances = Tolerances {
            alpha_max: raw.tolerances.alpha_max.unwrap_or(defaults.alpha_max),
            commutative_band: raw
                .tolerances
                .commutative_band
                .unwrap_or(defaults.commutative_band),
            norm_band: raw.tolerances.norm_band.unwrap_or(defaults.norm_band),
            parity_band: raw.tolerances.parity_band.unwrap_or(defaults.parity_band),
        };
        for (name, v) in [
            ("tolerances.alpha_max", tolerances.alpha_max),
            ("tolerances.commutative_band", tolerances.commutative_band),
            ("tolerances.norm_band", tolerances.norm_band),
            ("tolerances.parity_band", tolerances.parity_band),
        ] {
            if v < 1.0 || !v.is_finite() {
                return Err(Error::config(name, "must be a finite real ≥ 1"));
            }
        }

        let (orlicz_p, orlicz_r) = match raw.orlicz {
            Some(o) => (o.p, o.r),
            None => (4.0, 2.0),
        };
        if orlicz_p <= 2.0 || !orlicz_p.is_finite() {
            return Err(Error::config("orlicz.p", "must be a finite real > 2"));
        }
        if orlicz_r <= 0.0 || !orlicz_r.is_finite() {
            return Err(Error::config("orlicz.r", "must be a finite real > 0"));
        }

        let p_grid = raw.p_grid.unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0, 16.0]);
        if p_grid.iter().any(|p| !p.is_finite() || *p < 1.0) {
            return Err(Error::config("p_grid", "entries must be finite reals ≥ 1"));
        }

        Ok(Scenario {
            name: raw.name,
            blocks,
            trials: raw.trials,
            master_seed,
            t_grid: raw.t_grid,
            lambda: raw.lambda,
            checks: raw.checks,
            tolerances,
            orlicz_p,
            orlicz_r,
            p_grid,
        })
    }
}

// ── reports ─────────────────────────────────────────────────────────

/// A named column table; details back the pass verdicts and land in CSV.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                write!(out, "{v}").expect("string write");
                first = false;
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub check_id: String,
    pub passed: bool,
    /// Every tail grid point fell under the censoring floor: neither pass
    /// nor fail evidence exists.
    pub inconclusive: bool,
    /// At least one grid point hit the censoring floor.
    pub censored: bool,
    pub fitted_constants: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_path: Option<String>,
    #[serde(skip)]
    pub table: Table,
}

impl CheckReport {
    fn new(check_id: &str) -> Self {
        CheckReport {
            check_id: check_id.to_string(),
            passed: false,
            inconclusive: false,
            censored: false,
            fitted_constants: BTreeMap::new(),
            table_path: None,
            table: Table::default(),
        }
    }
}

// ── sample cache ────────────────────────────────────────────────────

/// A memoized Monte Carlo run: the sample set plus its ascending sort.
pub struct CachedSamples {
    pub set: SampleSet,
    pub sorted: Vec<f64>,
}

/// Executes checks against one scenario, memoizing sample sets per kind so
/// that several checks share a single Monte Carlo run. Safe to share across
/// threads; the memo table is mutex-guarded.
pub struct ScenarioRunner<'a> {
    scenario: &'a Scenario,
    s: SSequence,
    cache: Mutex<HashMap<&'static str, Arc<CachedSamples>>>,
}

impl<'a> ScenarioRunner<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        let s = s_sequence(&scenario.blocks)?;
        Ok(ScenarioRunner {
            scenario,
            s,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn s_sequence(&self) -> &SSequence {
        &self.s
    }

    pub fn samples(&self, kind: &SeriesKind) -> Result<Arc<CachedSamples>> {
        let key = kind.name();
        // Hold the lock across the Monte Carlo run so concurrent callers of
        // the same kind wait instead of duplicating it.
        let mut cache = self.cache.lock().expect("sample cache poisoned");
        if let Some(hit) = cache.get(key) {
            return Ok(Arc::clone(hit));
        }
        let set = monte_carlo(
            &self.scenario.blocks,
            kind,
            self.scenario.trials,
            self.scenario.master_seed,
        )?;
        let sorted = set.sorted();
        let cached = Arc::new(CachedSamples { set, sorted });
        cache.insert(key, Arc::clone(&cached));
        Ok(cached)
    }

    fn require_nondegenerate(&self) -> Result<()> {
        if self.s.l2() == 0.0 {
            return Err(Error::invalid(
                "degenerate all-zero scenario: every singular value is 0",
            ));
        }
        Ok(())
    }

    pub fn run_check(&self, check_id: &str) -> Result<CheckReport> {
        match check_id {
            "tail_formula" => self.check_tail_formula(),
            "commutative_comparison" => self.check_commutative_comparison(),
            "norm_equivalences" => self.check_norm_equivalences(),
            "gaussian_parity" => self.check_gaussian_parity(),
            other => Err(Error::config(
                "checks",
                format!("unknown check id {other:?}"),
            )),
        }
    }

    // ── tail_formula ────────────────────────────────────────────────

    fn check_tail_formula(&self) -> Result<CheckReport> {
        self.require_nondegenerate()?;
        let scn = self.scenario;
        let eps = self.samples(&SeriesKind::Epsilon)?;
        let profile = KProfile::compute(self.s.values(), &scn.t_grid)?;
        let fit = fit_alpha(
            &eps.sorted,
            scn.trials,
            &scn.t_grid,
            &profile.k_exact,
            scn.tolerances.alpha_max,
        );

        let mut report = CheckReport::new("tail_formula");
        report.censored = fit.any_censored;
        report.inconclusive = fit.all_censored;
        report.passed = fit.alpha.is_some();
        if let Some(a) = fit.alpha {
            report.fitted_constants.insert("alpha".into(), a);
        }
        if let Some(a) = fit.alpha_upper {
            report.fitted_constants.insert("alpha_upper".into(), a);
        }
        if let Some(a) = fit.alpha_lower {
            report.fitted_constants.insert("alpha_lower".into(), a);
        }
        report
            .fitted_constants
            .insert("alpha_max".into(), scn.tolerances.alpha_max);

        let alpha_used = fit.alpha.unwrap_or(scn.tolerances.alpha_max);
        let mut table = Table::new(&[
            "t",
            "k_exact",
            "k_holmstedt",
            "alpha",
            "thr_upper",
            "p_upper",
            "ci_upper_high",
            "bound_upper",
            "thr_lower",
            "p_lower",
            "ci_lower_low",
            "bound_lower",
            "censored",
        ]);
        for (i, &t) in scn.t_grid.iter().enumerate() {
            let k = profile.k_exact[i];
            let side = evaluate_sides(&eps.sorted, scn.trials, t, k, alpha_used);
            table.push(vec![
                t,
                k,
                profile.k_holmstedt[i],
                alpha_used,
                side.thr_upper,
                side.p_upper,
                side.ci_upper_high,
                side.bound_upper,
                side.thr_lower,
                side.p_lower,
                side.ci_lower_low,
                side.bound_lower,
                if side.censored { 1.0 } else { 0.0 },
            ]);
        }
        report.table = table;
        Ok(report)
    }

    // ── commutative_comparison ──────────────────────────────────────

    fn check_commutative_comparison(&self) -> Result<CheckReport> {
        self.require_nondegenerate()?;
        let scn = self.scenario;
        let eps = self.samples(&SeriesKind::Epsilon)?;
        let comm = self.samples(&SeriesKind::Commutative)?;
        let band = quantile_ratio_band(
            &eps.sorted,
            &comm.sorted,
            scn.trials,
            scn.tolerances.commutative_band,
        );

        let mut report = CheckReport::new("commutative_comparison");
        report.table = band.table;
        report.censored = band.any_censored;
        report.inconclusive = band.evaluated == 0;
        report.passed = !report.inconclusive && band.within_band;
        if let Some((lo, hi)) = band.band {
            report.fitted_constants.insert("band_low".into(), lo);
            report.fitted_constants.insert("band_high".into(), hi);
            report
                .fitted_constants
                .insert("c_fitted".into(), hi.max(1.0 / lo));
        }
        report
            .fitted_constants
            .insert("c_max".into(), scn.tolerances.commutative_band);
        Ok(report)
    }

    // ── norm_equivalences ───────────────────────────────────────────

    fn check_norm_equivalences(&self) -> Result<CheckReport> {
        self.require_nondegenerate()?;
        let scn = self.scenario;
        let band_max = scn.tolerances.norm_band;
        let s_l2 = self.s.l2();
        let eps = self.samples(&SeriesKind::Epsilon)?;
        let gauss = self.samples(&SeriesKind::Gauss)?;

        let eps_profile = pnorm_profile(&eps.set.samples, &scn.p_grid)?;
        let gauss_profile = pnorm_profile(&gauss.set.samples, &scn.p_grid)?;

        let mut table = Table::new(&[
            "p",
            "reliable",
            "gauss_control",
            "moment_norm",
            "k_at_sqrt_p",
            "ratio",
        ]);
        let mut control_ok = true;
        let mut ratios: Vec<f64> = Vec::new();
        for (e, g) in eps_profile.iter().zip(&gauss_profile) {
            // Validate the estimator against the exactly-known Gaussian
            // moments before trusting the rotation-series row.
            let control = g.norm / (s_l2 * normal_abs_moment_root(g.p));
            let k = k12_exact(self.s.values(), e.p.sqrt())?;
            let ratio = e.norm / k;
            if e.reliable {
                if !(0.9..=1.1).contains(&control) {
                    control_ok = false;
                }
                ratios.push(ratio);
            }
            table.push(vec![
                e.p,
                if e.reliable { 1.0 } else { 0.0 },
                control,
                e.norm,
                k,
                ratio,
            ]);
        }

        let mut report = CheckReport::new("norm_equivalences");
        if ratios.is_empty() {
            report.inconclusive = true;
            report.table = table;
            return Ok(report);
        }
        let ratio_min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let ratio_max = ratios.iter().copied().fold(0.0_f64, f64::max);
        let moments_ok = ratio_min >= 1.0 / band_max
            && ratio_max <= band_max
            && ratio_max / ratio_min <= band_max;

        // Orlicz gauge against the weak-Lorentz norm of s, and the
        // Orlicz–Lorentz refinement against ℓ_{q,r}.
        let q = scn.orlicz_p / (scn.orlicz_p - 1.0);
        let orlicz = orlicz_exp_norm(&eps.set.samples, scn.orlicz_p)?;
        let lorentz_weak = crate::sequences::lorentz_norm(self.s.values(), q, f64::INFINITY)?;
        let orlicz_ratio = orlicz / lorentz_weak;

        let ol_params = OrliczParams::integrable(scn.orlicz_p, scn.orlicz_r);
        let ol = orlicz_lorentz_norm(&eps.set.samples, &ol_params)?;
        let lorentz_qr = crate::sequences::lorentz_norm(self.s.values(), q, scn.orlicz_r)?;
        let ol_ratio = ol.value / lorentz_qr;

        let orlicz_ok = (1.0 / band_max..=band_max).contains(&orlicz_ratio)
            && (1.0 / band_max..=band_max).contains(&ol_ratio)
            && !ol.divergent;

        report.passed = control_ok && moments_ok && orlicz_ok;
        report.table = table;
        let fc = &mut report.fitted_constants;
        fc.insert("moment_ratio_min".into(), ratio_min);
        fc.insert("moment_ratio_max".into(), ratio_max);
        fc.insert("moment_span".into(), ratio_max / ratio_min);
        fc.insert("orlicz_ratio".into(), orlicz_ratio);
        fc.insert("orlicz_lorentz_ratio".into(), ol_ratio);
        fc.insert("orlicz_p".into(), scn.orlicz_p);
        fc.insert("orlicz_r".into(), scn.orlicz_r);
        fc.insert("lorentz_q".into(), q);
        fc.insert("c_max".into(), band_max);
        fc.insert(
            "gauss_control_ok".into(),
            if control_ok { 1.0 } else { 0.0 },
        );
        Ok(report)
    }

    // ── gaussian_parity ─────────────────────────────────────────────

    fn check_gaussian_parity(&self) -> Result<CheckReport> {
        self.require_nondegenerate()?;
        let scn = self.scenario;
        let eps = self.samples(&SeriesKind::Epsilon)?;

        let mut report = CheckReport::new("gaussian_parity");
        report.fitted_constants.insert("lambda".into(), scn.lambda);
        report
            .fitted_constants
            .insert("c_max".into(), scn.tolerances.parity_band);
        let mut all_within = true;
        let mut any_censored = false;
        let mut any_evaluated = false;
        let mut table = Table::new(&[
            "mode",
            "u",
            "q_epsilon",
            "q_trunc",
            "ratio",
            "ci_overlap",
            "censored",
        ]);

        for (mode_id, policy) in [
            (0.0, TruncationPolicy::whole(scn.lambda)),
            (1.0, TruncationPolicy::diag_offdiag(scn.lambda)),
        ] {
            let kind = SeriesKind::TruncatedGauss(policy);
            let trunc = self.samples(&kind)?;
            let band = quantile_ratio_band(
                &eps.sorted,
                &trunc.sorted,
                scn.trials,
                scn.tolerances.parity_band,
            );
            let prefix = if mode_id == 0.0 {
                "trunc"
            } else {
                "split_trunc"
            };
            if let Some((lo, hi)) = band.band {
                report
                    .fitted_constants
                    .insert(format!("{prefix}_band_low"), lo);
                report
                    .fitted_constants
                    .insert(format!("{prefix}_band_high"), hi);
            }
            if let Some(fired) = trunc.set.truncation_fired {
                report.fitted_constants.insert(
                    format!("{prefix}_fire_fraction"),
                    fired as f64 / scn.trials as f64,
                );
            }
            all_within &= band.within_band;
            any_censored |= band.any_censored;
            any_evaluated |= band.evaluated > 0;
            for row in band.table.rows {
                // band table columns: u, q_a, q_b, ratio, ci_overlap, censored
                table.push(vec![
                    mode_id, row[0], row[1], row[2], row[3], row[4], row[5],
                ]);
            }
        }

        report.table = table;
        report.censored = any_censored;
        report.inconclusive = !any_evaluated;
        report.passed = any_evaluated && all_within;
        Ok(report)
    }
}

// ── tail bound fitting ──────────────────────────────────────────────

struct SideEvaluation {
    thr_upper: f64,
    p_upper: f64,
    ci_upper_high: f64,
    bound_upper: f64,
    upper_ok: bool,
    thr_lower: f64,
    p_lower: f64,
    ci_lower_low: f64,
    bound_lower: f64,
    lower_ok: bool,
    censored: bool,
}

fn tail_at(sorted: &[f64], thr: f64) -> (u64, f64) {
    let n = sorted.len();
    let above = n - sorted.partition_point(|v| *v <= thr);
    (above as u64, above as f64 / n as f64)
}

fn evaluate_sides(sorted: &[f64], trials: usize, t: f64, k: f64, alpha: f64) -> SideEvaluation {
    let floor = 10.0 / trials as f64;
    let thr_upper = alpha * k;
    let (above_u, p_upper) = tail_at(sorted, thr_upper);
    let (_, ci_upper_high) = wilson_interval(above_u, trials as u64, Z95);
    let bound_upper = alpha * (-t * t / alpha).exp();
    // Conservative: the CI upper endpoint must clear the bound.
    let upper_ok = ci_upper_high <= bound_upper;

    let thr_lower = k / alpha;
    let (above_l, p_lower) = tail_at(sorted, thr_lower);
    let (ci_lower_low, _) = wilson_interval(above_l, trials as u64, Z95);
    let bound_lower = (-alpha * t * t).exp() / alpha;
    let censored = p_lower < floor;
    let lower_ok = !censored && ci_lower_low >= bound_lower;

    SideEvaluation {
        thr_upper,
        p_upper,
        ci_upper_high,
        bound_upper,
        upper_ok,
        thr_lower,
        p_lower,
        ci_lower_low,
        bound_lower,
        lower_ok,
        censored,
    }
}

pub struct AlphaFit {
    /// Smallest α satisfying both sides at every uncensored t.
    pub alpha: Option<f64>,
    /// Smallest α satisfying the upper side alone.
    pub alpha_upper: Option<f64>,
    /// Smallest α satisfying the lower side at every uncensored t.
    pub alpha_lower: Option<f64>,
    pub any_censored: bool,
    /// True when even the most generous α leaves every grid point censored.
    pub all_censored: bool,
}

/// Scan α upward on a fine multiplicative grid and record the smallest
/// feasible value per side. Feasibility is monotone in α: both bounds relax
/// as α grows.
pub fn fit_alpha(
    sorted: &[f64],
    trials: usize,
    t_grid: &[f64],
    k_exact: &[f64],
    alpha_max: f64,
) -> AlphaFit {
    let mut alphas: Vec<f64> = Vec::new();
    let mut a = 1.0;
    while a < alpha_max {
        alphas.push(a);
        a *= 1.02;
    }
    alphas.push(alpha_max);

    let mut fit = AlphaFit {
        alpha: None,
        alpha_upper: None,
        alpha_lower: None,
        any_censored: false,
        all_censored: false,
    };

    for &alpha in &alphas {
        let mut joint_ok = true;
        let mut upper_ok = true;
        let mut lower_ok = true;
        let mut uncensored = 0usize;
        for (&t, &k) in t_grid.iter().zip(k_exact) {
            let side = evaluate_sides(sorted, trials, t, k, alpha);
            upper_ok &= side.upper_ok;
            if !side.censored {
                uncensored += 1;
                lower_ok &= side.lower_ok;
                joint_ok &= side.upper_ok && side.lower_ok;
            }
        }
        if uncensored == 0 {
            joint_ok = false;
            lower_ok = false;
        }
        if fit.alpha.is_none() && joint_ok && uncensored > 0 {
            fit.alpha = Some(alpha);
        }
        if fit.alpha_upper.is_none() && upper_ok {
            fit.alpha_upper = Some(alpha);
        }
        if fit.alpha_lower.is_none() && lower_ok && uncensored > 0 {
            fit.alpha_lower = Some(alpha);
        }
        if fit.alpha.is_some() && fit.alpha_upper.is_some() && fit.alpha_lower.is_some() {
            break;
        }
    }

    // Censoring bookkeeping at the most generous α.
    let mut uncensored_at_max = 0usize;
    for (&t, &k) in t_grid.iter().zip(k_exact) {
        let side = evaluate_sides(sorted, trials, t, k, alpha_max);
        if side.censored {
            fit.any_censored = true;
        } else {
            uncensored_at_max += 1;
        }
    }
    fit.all_censored = uncensored_at_max == 0;
    fit
}

// ── quantile ratio bands ────────────────────────────────────────────

struct RatioBand {
    table: Table,
    band: Option<(f64, f64)>,
    within_band: bool,
    any_censored: bool,
    evaluated: usize,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Upper-quantile ratios `q_a(1−u) / q_b(1−u)` over a log grid of tail
/// probabilities `u ∈ [10⁻³, 0.3]`, with order-statistic CI overlap flags.
fn quantile_ratio_band(
    sorted_a: &[f64],
    sorted_b: &[f64],
    trials: usize,
    band_max: f64,
) -> RatioBand {
    let u_grid = log_grid(1e-3, 0.3, 13);
    let floor = 10.0 / trials as f64;
    let mut table = Table::new(&["u", "q_a", "q_b", "ratio", "ci_overlap", "censored"]);
    let mut band: Option<(f64, f64)> = None;
    let mut within = true;
    let mut any_censored = false;
    let mut evaluated = 0usize;

    let scale = sorted_b.last().map(|v| v.abs()).unwrap_or(0.0).max(1e-300);
    for &u in &u_grid {
        let prob = 1.0 - u;
        let qa = quantile_sorted(sorted_a, prob);
        let qb = quantile_sorted(sorted_b, prob);
        let censored = u < floor;
        let degenerate = qb.abs() <= 1e-12 * scale || qa.abs() <= 1e-12 * scale;
        let ratio = if degenerate { f64::NAN } else { qa / qb };

        let (lo_rank_a, hi_rank_a) = quantile_rank_window(sorted_a.len(), prob, Z95);
        let (lo_rank_b, hi_rank_b) = quantile_rank_window(sorted_b.len(), prob, Z95);
        let (a_lo, a_hi) = (sorted_a[lo_rank_a], sorted_a[hi_rank_a]);
        let (b_lo, b_hi) = (sorted_b[lo_rank_b], sorted_b[hi_rank_b]);
        let tol = 1e-9 * scale;
        let overlap = a_lo <= b_hi + tol && b_lo <= a_hi + tol;

        if !censored && !degenerate {
            evaluated += 1;
            let (lo, hi) = band
                .map(|(lo, hi)| (lo.min(ratio), hi.max(ratio)))
                .unwrap_or((ratio, ratio));
            band = Some((lo, hi));
            if !(1.0 / band_max..=band_max).contains(&ratio) || ratio <= 0.0 {
                within = false;
            }
        }
        if censored {
            any_censored = true;
        }
        table.push(vec![
            u,
            qa,
            qb,
            ratio,
            if overlap { 1.0 } else { 0.0 },
            if censored { 1.0 } else { 0.0 },
        ]);
    }

    RatioBand {
        table,
        band,
        within_band: within && evaluated > 0,
        any_censored,
        evaluated,
    }
}

// ── scenario execution and report emission ──────────────────────────

#[derive(Debug, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub trials: usize,
    pub lambda: f64,
    pub blocks_digest: String,
    pub t_grid: Vec<f64>,
    pub all_passed: bool,
    pub checks: Vec<CheckReport>,
}

pub struct RunSummary {
    pub report: ScenarioReport,
    pub report_path: PathBuf,
}

impl RunSummary {
    /// Exit-status semantics: success iff every non-inconclusive check
    /// passed.
    pub fn all_passed(&self) -> bool {
        self.report.all_passed
    }
}

/// Execute the configured checks in declared order, write the report JSON
/// plus per-check CSV tables (and the plot TSV for `tail_formula`), and
/// return the summary.
pub fn run_scenario(
    config_path: &Path,
    report_path: &Path,
    seed_override: Option<u64>,
) -> Result<RunSummary> {
    let scenario = Scenario::from_file(config_path, seed_override)?;
    run_scenario_checks(&scenario, report_path)
}

pub fn run_scenario_checks(scenario: &Scenario, report_path: &Path) -> Result<RunSummary> {
    let runner = ScenarioRunner::new(scenario)?;
    let dir = report_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let stem = report_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());

    let mut checks = Vec::with_capacity(scenario.checks.len());
    for check_id in &scenario.checks {
        let mut report = runner.run_check(check_id)?;
        let table_name = format!("{stem}.{check_id}.csv");
        let table_path = dir.join(&table_name);
        fs::write(&table_path, report.table.to_csv()).map_err(|e| Error::io(&table_path, e))?;
        report.table_path = Some(table_name);

        if check_id == "tail_formula" {
            let tsv_path = dir.join(format!("{stem}.{check_id}.tsv"));
            let tsv = tail_plot_tsv(&runner, scenario)?;
            fs::write(&tsv_path, tsv).map_err(|e| Error::io(&tsv_path, e))?;
        }
        checks.push(report);
    }

    let all_passed = checks.iter().filter(|c| !c.inconclusive).all(|c| c.passed);
    let report = ScenarioReport {
        scenario: scenario.name.clone(),
        seed: scenario.master_seed,
        trials: scenario.trials,
        lambda: scenario.lambda,
        blocks_digest: blocks_digest(&scenario.blocks),
        t_grid: scenario.t_grid.clone(),
        all_passed,
        checks,
    };
    let body = serde_json::to_string_pretty(&report).expect("serializable report");
    fs::write(report_path, body + "\n").map_err(|e| Error::io(report_path, e))?;
    Ok(RunSummary {
        report,
        report_path: report_path.to_path_buf(),
    })
}

/// Plot-ready TSV: t, K values, and the empirical tail at the K(t)
/// threshold with its Wilson interval.
fn tail_plot_tsv(runner: &ScenarioRunner<'_>, scenario: &Scenario) -> Result<String> {
    let eps = runner.samples(&SeriesKind::Epsilon)?;
    let profile = KProfile::compute(runner.s.values(), &scenario.t_grid)?;
    let mut out = String::from("t\tk_exact\tk_holmstedt\tp_emp\tci_low\tci_high\n");
    for (i, &t) in scenario.t_grid.iter().enumerate() {
        let k = profile.k_exact[i];
        let (above, p) = tail_at(&eps.sorted, k);
        let (lo, hi) = wilson_interval(above, scenario.trials as u64, Z95);
        writeln!(out, "{t}\t{k}\t{}\t{p}\t{lo}\t{hi}", profile.k_holmstedt[i])
            .expect("string write");
    }
    Ok(out)
}
