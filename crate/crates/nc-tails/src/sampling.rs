//! Reproducible random generators.
//!
//! Every draw comes from an [`RngSubstream`]: a counter-based stream keyed
//! by a 64-bit mix of the master seed and a path of labels (series kind,
//! trial index, block index). Identical `(seed, path)` replays identical
//! bytes on every run; distinct paths give statistically independent
//! streams, so trials can fan out to any number of workers with no shared
//! generator state.

use serde::{Deserialize, Serialize};

use crate::matrices::{split_diag_offdiag, Matrix};
use crate::sequences::RealSequence;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A value-semantic, counter-based random stream.
#[derive(Debug, Clone)]
pub struct RngSubstream {
    key: u64,
    counter: u64,
    gauss_spare: Option<f64>,
}

impl RngSubstream {
    pub fn new(master_seed: u64) -> Self {
        RngSubstream {
            key: mix64(master_seed ^ 0x6A09_E667_F3BC_C909),
            counter: 0,
            gauss_spare: None,
        }
    }

    /// Derive an independent child stream; children depend only on the key
    /// and the label, never on how much the parent has been consumed.
    pub fn child(&self, label: u64) -> Self {
        RngSubstream {
            key: mix64(
                self.key
                    .wrapping_add(GOLDEN)
                    .wrapping_add(mix64(label ^ 0xD134_2543_DE82_EF95)),
            ),
            counter: 0,
            gauss_spare: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in [0, 1) with 53 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 * SCALE
    }

    #[inline]
    pub fn next_sign(&mut self) -> f64 {
        if self.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Standard normal via the Marsaglia polar transform (frozen: changing
    /// the transform changes every downstream stream).
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(v) = self.gauss_spare.take() {
            return v;
        }
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let m = (-2.0 * s.ln() / s).sqrt();
                self.gauss_spare = Some(v * m);
                return u * m;
            }
        }
    }
}

/// `d×d` matrix with i.i.d. `N(0,1)/√d` entries.
pub fn gaussian_matrix(d: usize, stream: &mut RngSubstream) -> Matrix {
    assert!(d >= 1, "dimension must be ≥ 1");
    let scale = 1.0 / (d as f64).sqrt();
    let mut m = Matrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            m.set(i, j, scale * stream.next_gaussian());
        }
    }
    m
}

/// Haar-uniform orthogonal matrix on O(d).
///
/// A standard-Gaussian matrix is QR-factored with Householder reflections
/// and each column of Q is flipped by the sign of the corresponding R
/// diagonal entry, making the triangular factor's diagonal positive. Without
/// the sign correction the output law depends on the factorization's sign
/// conventions and is not Haar. Degenerate draws (numerically rank-deficient
/// columns) are discarded and redrawn from the stream's next counter value.
pub fn haar_orthogonal(d: usize, stream: &mut RngSubstream) -> Matrix {
    assert!(d >= 1, "dimension must be ≥ 1");
    loop {
        let mut g = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                g.set(i, j, stream.next_gaussian());
            }
        }
        if let Some(q) = qr_orthogonal_factor(&g) {
            return q;
        }
    }
}

/// Q from the Householder QR of `a`, sign-corrected so that R has positive
/// diagonal. `None` when a column is numerically rank-deficient.
#[allow(clippy::needless_range_loop)]
fn qr_orthogonal_factor(a: &Matrix) -> Option<Matrix> {
    let d = a.dim();
    let mut w = a.clone();
    // Householder vectors are stored below the diagonal of `w`; `diag`
    // collects the R diagonal.
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut r_diag = vec![0.0_f64; d];
    for k in 0..d {
        let norm_sq: f64 = (k..d).map(|i| w.get(i, k) * w.get(i, k)).sum();
        let norm = norm_sq.sqrt();
        if norm < 1e-250 {
            return None;
        }
        let x0 = w.get(k, k);
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = vec![0.0; d];
        v[k] = x0 - alpha;
        for i in (k + 1)..d {
            v[i] = w.get(i, k);
        }
        let v_norm_sq: f64 = v[k..].iter().map(|x| x * x).sum();
        if v_norm_sq < 1e-250 {
            // Column already aligned with the axis; identity reflector.
            r_diag[k] = x0;
            vs.push(Vec::new());
            continue;
        }
        // Apply H = I − 2vvᵀ/(vᵀv) to the trailing columns.
        for j in k..d {
            let dot: f64 = (k..d).map(|i| v[i] * w.get(i, j)).sum();
            let factor = 2.0 * dot / v_norm_sq;
            for i in k..d {
                w.set(i, j, w.get(i, j) - factor * v[i]);
            }
        }
        r_diag[k] = w.get(k, k);
        vs.push(v);
    }

    // Accumulate Q = H₀ H₁ ⋯ H_{d−1} applied to the identity.
    let mut q = Matrix::identity(d);
    for k in (0..d).rev() {
        let v = &vs[k];
        if v.is_empty() {
            continue;
        }
        let v_norm_sq: f64 = v[k..].iter().map(|x| x * x).sum();
        for j in 0..d {
            let dot: f64 = (k..d).map(|i| v[i] * q.get(i, j)).sum();
            let factor = 2.0 * dot / v_norm_sq;
            for i in k..d {
                q.set(i, j, q.get(i, j) - factor * v[i]);
            }
        }
    }

    // Sign correction: make the triangular diagonal positive.
    for j in 0..d {
        if r_diag[j] == 0.0 {
            return None;
        }
        if r_diag[j] < 0.0 {
            for i in 0..d {
                q.set(i, j, -q.get(i, j));
            }
        }
    }
    Some(q)
}

/// `n` i.i.d. signs, ±1 with probability ½ each.
pub fn rademacher_signs(n: usize, stream: &mut RngSubstream) -> RealSequence {
    let values: Vec<f64> = (0..n).map(|_| stream.next_sign()).collect();
    RealSequence::new(values).expect("signs are finite")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationMode {
    /// Zero the matrix when its whole operator norm exceeds λ.
    Whole,
    /// Zero the matrix when either the diagonal or the off-diagonal part
    /// exceeds λ in operator norm.
    DiagOffdiag,
}

/// Block-zeroing rule applied to Gaussian draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub lambda: f64,
    pub mode: TruncationMode,
}

impl TruncationPolicy {
    pub fn whole(lambda: f64) -> Self {
        assert!(lambda > 0.0, "lambda must be > 0");
        TruncationPolicy {
            lambda,
            mode: TruncationMode::Whole,
        }
    }

    pub fn diag_offdiag(lambda: f64) -> Self {
        assert!(lambda > 0.0, "lambda must be > 0");
        TruncationPolicy {
            lambda,
            mode: TruncationMode::DiagOffdiag,
        }
    }
}

fn operator_norm(m: &Matrix) -> f64 {
    crate::matrices::schatten_norm(m, f64::INFINITY)
        .expect("rotation sweep converges on finite input")
}

/// Whether the policy zeroes this matrix.
pub fn truncation_fires(g: &Matrix, policy: &TruncationPolicy) -> bool {
    match policy.mode {
        TruncationMode::Whole => operator_norm(g) > policy.lambda,
        TruncationMode::DiagOffdiag => {
            let (diag, off) = split_diag_offdiag(g);
            operator_norm(&diag) > policy.lambda || operator_norm(&off) > policy.lambda
        }
    }
}

/// `g` untouched when within the policy's norm budget, the zero matrix
/// otherwise.
pub fn apply_truncation(g: &Matrix, policy: &TruncationPolicy) -> Matrix {
    if truncation_fires(g, policy) {
        Matrix::zeros(g.dim())
    } else {
        g.clone()
    }
}
