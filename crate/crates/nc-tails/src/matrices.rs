//! Dense small-matrix kernel: singular values by cyclic orthogonal
//! rotations, Schatten norms, the repeated-singular-value sequence built
//! from a block list, and the diagonal/off-diagonal split.

use crate::error::{Error, Result};
use crate::sequences::{self, RealSequence};

/// Maximum number of rotation sweeps before declaring non-convergence.
const MAX_SWEEPS: usize = 30;

/// Relative floor below which computed singular values are clamped to 0.
const SV_CLAMP: f64 = 1e-13;

/// Square row-major matrix of `f64` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    /// Build from rows, rejecting non-square shapes and non-finite entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::invalid("matrix must have positive dimension"));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::invalid(format!("entry ({i},{j}) is not finite")));
                }
                data.push(v);
            }
        }
        Ok(Matrix { dim, data })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let mut m = Matrix::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::invalid(format!("diagonal entry {i} is not finite")));
            }
            m.data[i * diag.len() + i] = v;
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Determinant by LU elimination with partial pivoting.
    pub fn determinant(&self) -> f64 {
        let d = self.dim;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&r, &s| {
                    a[r * d + col]
                        .abs()
                        .partial_cmp(&a[s * d + col].abs())
                        .unwrap()
                })
                .unwrap();
            if a[pivot * d + col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..d {
                    a.swap(col * d + j, pivot * d + j);
                }
                det = -det;
            }
            det *= a[col * d + col];
            for row in col + 1..d {
                let factor = a[row * d + col] / a[col * d + col];
                for j in col..d {
                    a[row * d + j] -= factor * a[col * d + j];
                }
            }
        }
        det
    }
}

/// Singular values in non-increasing order, each ≥ 0.
///
/// Cyclic Jacobi sweeps orthogonalize column pairs until the implicit Gram
/// matrix is diagonal to relative off-mass 1e-12; the column norms are then
/// the singular values. Errors after 30 sweeps (ill-conditioned input).
#[allow(clippy::needless_range_loop)]
pub fn singular_values(a: &Matrix) -> Result<RealSequence> {
    let d = a.dim;
    let fro = a.frobenius_norm();
    if fro == 0.0 {
        return RealSequence::new(vec![0.0; d]);
    }
    // Column-major copy: cols[j][i] = a_ij.
    let mut cols: Vec<Vec<f64>> = (0..d)
        .map(|j| (0..d).map(|i| a.get(i, j)).collect())
        .collect();

    let off_target = 1e-12 * fro * fro;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off_mass = 0.0_f64;
        for p in 0..d {
            for q in (p + 1)..d {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..d {
                    alpha += cols[p][i] * cols[p][i];
                    beta += cols[q][i] * cols[q][i];
                    gamma += cols[p][i] * cols[q][i];
                }
                off_mass += 2.0 * gamma * gamma;
                if gamma.abs() <= 1e-300 || gamma.abs() <= 1e-16 * (alpha * beta).sqrt() {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..d {
                    let vp = cols[p][i];
                    let vq = cols[q][i];
                    cols[p][i] = c * vp - s * vq;
                    cols[q][i] = s * vp + c * vq;
                }
            }
        }
        if off_mass.sqrt() <= off_target {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNonConvergence {
            dim: d,
            sweeps: MAX_SWEEPS,
        });
    }

    let clamp = SV_CLAMP * fro;
    let mut sv: Vec<f64> = cols
        .iter()
        .map(|c| {
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < clamp {
                0.0
            } else {
                norm
            }
        })
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    RealSequence::new(sv)
}

/// `ℓ_p` norm of the singular values: operator norm at `p = ∞`, Frobenius
/// at `p = 2`, trace class at `p = 1`.
pub fn schatten_norm(a: &Matrix, p: f64) -> Result<f64> {
    let sv = singular_values(a)?;
    sequences::lp_norm(&sv, p)
}

/// One series term: the block dimension together with either the dense
/// matrix or its singular values directly. Singular-value payloads skip the
/// rotation sweep (the canonical experimental form is diagonal).
#[derive(Debug, Clone)]
pub struct BlockSpec {
    dim: usize,
    payload: BlockPayload,
}

#[derive(Debug, Clone)]
enum BlockPayload {
    SingularValues(Vec<f64>),
    Dense(Matrix),
}

impl BlockSpec {
    pub fn from_singular_values(dim: usize, sv: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("block dimension must be ≥ 1"));
        }
        if sv.len() != dim {
            return Err(Error::invalid(format!(
                "block with d={dim} carries {} singular values",
                sv.len()
            )));
        }
        if let Some(pos) = sv.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(format!(
                "singular value {pos} must be finite and ≥ 0"
            )));
        }
        let mut sorted = sv;
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(BlockSpec {
            dim,
            payload: BlockPayload::SingularValues(sorted),
        })
    }

    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        if matrix.dim() == 0 {
            return Err(Error::invalid("block dimension must be ≥ 1"));
        }
        Ok(BlockSpec {
            dim: matrix.dim(),
            payload: BlockPayload::Dense(matrix),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn singular_values(&self) -> Result<RealSequence> {
        match &self.payload {
            BlockPayload::SingularValues(sv) => RealSequence::new(sv.clone()),
            BlockPayload::Dense(m) => singular_values(m),
        }
    }

    /// The dense matrix this block multiplies against: the payload itself,
    /// or `diag(singular values)` for singular-value payloads.
    pub fn matrix(&self) -> Result<Matrix> {
        match &self.payload {
            BlockPayload::SingularValues(sv) => Matrix::from_diagonal(sv),
            BlockPayload::Dense(m) => Ok(m.clone()),
        }
    }

    pub fn is_diagonal_nonnegative(&self) -> bool {
        match &self.payload {
            BlockPayload::SingularValues(_) => true,
            BlockPayload::Dense(m) => {
                let d = m.dim();
                (0..d).all(|i| (0..d).all(|j| i == j || m.get(i, j) == 0.0))
                    && (0..d).all(|i| m.get(i, i) >= 0.0)
            }
        }
    }

    /// Stable content bytes for digesting a scenario.
    pub(crate) fn digest_into(&self, h: &mut crate::series::Fnv64) {
        h.write_u64(self.dim as u64);
        match &self.payload {
            BlockPayload::SingularValues(sv) => {
                h.write_u64(1);
                for v in sv {
                    h.write_u64(v.to_bits());
                }
            }
            BlockPayload::Dense(m) => {
                h.write_u64(2);
                for v in &m.data {
                    h.write_u64(v.to_bits());
                }
            }
        }
    }
}

/// The non-increasing scalar sequence built from all blocks: each block's
/// singular values, each repeated `d_n` times, merged and sorted.
#[derive(Debug, Clone)]
pub struct SSequence {
    values: RealSequence,
}

impl SSequence {
    pub fn values(&self) -> &RealSequence {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.values()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn l1(&self) -> f64 {
        self.as_slice().iter().sum()
    }

    pub fn l2(&self) -> f64 {
        self.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub fn s_sequence(blocks: &[BlockSpec]) -> Result<SSequence> {
    let mut all = Vec::new();
    for block in blocks {
        let sv = block.singular_values()?;
        for &v in sv.values() {
            for _ in 0..block.dim() {
                all.push(v);
            }
        }
    }
    all.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(SSequence {
        values: RealSequence::new(all)?,
    })
}

/// Split into `(diagonal part, off-diagonal part)`; the two sum back to `A`.
pub fn split_diag_offdiag(a: &Matrix) -> (Matrix, Matrix) {
    let d = a.dim();
    let mut diag = Matrix::zeros(d);
    let mut off = a.clone();
    for i in 0..d {
        diag.set(i, i, a.get(i, i));
        off.set(i, i, 0.0);
    }
    (diag, off)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{haar_orthogonal, RngSubstream};

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn singular_values_of_simple_matrices() {
        let sv = singular_values(&Matrix::identity(2)).unwrap();
        assert_eq!(sv.values(), &[1.0, 1.0]);

        let sv = singular_values(&Matrix::from_diagonal(&[3.0, -2.0]).unwrap()).unwrap();
        assert!((sv.values()[0] - 3.0).abs() < 1e-12);
        assert!((sv.values()[1] - 2.0).abs() < 1e-12);

        // AᵀA = diag(0, 4): singular values 2 and 0.
        let sv = singular_values(&mat(&[&[0.0, 2.0], &[0.0, 0.0]])).unwrap();
        assert!((sv.values()[0] - 2.0).abs() < 1e-12);
        assert_eq!(sv.values()[1], 0.0);

        let sv = singular_values(&Matrix::zeros(3)).unwrap();
        assert_eq!(sv.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn schatten_norm_diag_examples() {
        let a = Matrix::from_diagonal(&[2.0, 1.0]).unwrap();
        assert!((schatten_norm(&a, 1.0).unwrap() - 3.0).abs() < 1e-12);
        assert!((schatten_norm(&a, 2.0).unwrap() - 5.0_f64.sqrt()).abs() < 1e-12);
        assert!((schatten_norm(&a, f64::INFINITY).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn schatten_2_equals_entrywise_frobenius() {
        let mut stream = RngSubstream::new(11);
        for d in [1usize, 2, 3, 5, 8] {
            let rows: Vec<Vec<f64>> = (0..d)
                .map(|_| (0..d).map(|_| stream.next_gaussian()).collect())
                .collect();
            let a = Matrix::from_rows(&rows).unwrap();
            let s2 = schatten_norm(&a, 2.0).unwrap();
            let fro = a.frobenius_norm();
            assert!(
                (s2 * s2 - fro * fro).abs() <= 1e-10 * fro * fro,
                "d={d}: {s2} vs {fro}"
            );
        }
    }

    #[test]
    fn singular_values_invariant_under_rotations() {
        let mut stream = RngSubstream::new(12);
        for d in [2usize, 4, 9] {
            let rows: Vec<Vec<f64>> = (0..d)
                .map(|_| (0..d).map(|_| stream.next_gaussian()).collect())
                .collect();
            let a = Matrix::from_rows(&rows).unwrap();
            let u = haar_orthogonal(d, &mut stream);
            let v = haar_orthogonal(d, &mut stream);
            let uav = u.matmul(&a).matmul(&v);
            let sv_a = singular_values(&a).unwrap();
            let sv_uav = singular_values(&uav).unwrap();
            for (x, y) in sv_a.values().iter().zip(sv_uav.values()) {
                assert!((x - y).abs() < 1e-9, "d={d}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn s_sequence_repeats_each_singular_value_dim_times() {
        let blocks = vec![
            BlockSpec::from_singular_values(1, vec![3.0]).unwrap(),
            BlockSpec::from_singular_values(2, vec![2.0, 1.0]).unwrap(),
        ];
        let s = s_sequence(&blocks).unwrap();
        assert_eq!(s.as_slice(), &[3.0, 2.0, 2.0, 1.0, 1.0]);

        let single = vec![BlockSpec::from_singular_values(1, vec![0.7]).unwrap()];
        assert_eq!(s_sequence(&single).unwrap().as_slice(), &[0.7]);

        assert!(s_sequence(&[]).unwrap().is_empty());
    }

    #[test]
    fn s_sequence_norm_identities() {
        // ‖s‖₂² = Σ dₙ‖Aₙ‖₂² and ‖s‖₁ = Σ dₙ‖Aₙ‖₁ on random block lists.
        let mut stream = RngSubstream::new(13);
        for _ in 0..50 {
            let n_blocks = 1 + (stream.next_u64() % 4) as usize;
            let mut blocks = Vec::new();
            let mut sum_sq = 0.0;
            let mut sum_l1 = 0.0;
            for _ in 0..n_blocks {
                let d = 1 + (stream.next_u64() % 5) as usize;
                let sv: Vec<f64> = (0..d).map(|_| stream.next_gaussian().abs()).collect();
                sum_sq += d as f64 * sv.iter().map(|v| v * v).sum::<f64>();
                sum_l1 += d as f64 * sv.iter().sum::<f64>();
                blocks.push(BlockSpec::from_singular_values(d, sv).unwrap());
            }
            let s = s_sequence(&blocks).unwrap();
            assert!((s.l2() * s.l2() - sum_sq).abs() <= 1e-10 * sum_sq.max(1.0));
            assert!((s.l1() - sum_l1).abs() <= 1e-10 * sum_l1.max(1.0));
        }
    }

    #[test]
    fn split_examples() {
        let (d, ad) = split_diag_offdiag(&mat(&[&[1.0, 2.0], &[3.0, 4.0]]));
        assert_eq!(d, mat(&[&[1.0, 0.0], &[0.0, 4.0]]));
        assert_eq!(ad, mat(&[&[0.0, 2.0], &[3.0, 0.0]]));

        let (d, ad) = split_diag_offdiag(&Matrix::identity(3));
        assert_eq!(d, Matrix::identity(3));
        assert_eq!(ad, Matrix::zeros(3));

        // Swap matrix: zero diagonal, operator norm carried by the
        // off-diagonal part.
        let swap = mat(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let (d, ad) = split_diag_offdiag(&swap);
        assert_eq!(d, Matrix::zeros(2));
        assert_eq!(ad, swap);
        assert!((schatten_norm(&ad, f64::INFINITY).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn opnorm_diag_offdiag_bounds() {
        // ½·max(‖A^d‖, ‖A^ad‖) ≤ ‖A‖ ≤ 2·max(‖A^d‖, ‖A^ad‖) on random input.
        let mut stream = RngSubstream::new(14);
        for trial in 0..1000 {
            let d = 1 + (stream.next_u64() % 16) as usize;
            let rows: Vec<Vec<f64>> = (0..d)
                .map(|_| (0..d).map(|_| stream.next_gaussian()).collect())
                .collect();
            let a = Matrix::from_rows(&rows).unwrap();
            let (diag, off) = split_diag_offdiag(&a);
            let na = schatten_norm(&a, f64::INFINITY).unwrap();
            let nd = schatten_norm(&diag, f64::INFINITY).unwrap();
            let noff = schatten_norm(&off, f64::INFINITY).unwrap();
            let m = nd.max(noff);
            assert!(
                0.5 * m <= na + 1e-10 && na <= 2.0 * m + 1e-10,
                "trial {trial}: ‖A‖={na}, max={m}"
            );
        }
    }

    #[test]
    fn block_validation() {
        assert!(BlockSpec::from_singular_values(2, vec![1.0]).is_err());
        assert!(BlockSpec::from_singular_values(1, vec![-1.0]).is_err());
        assert!(BlockSpec::from_singular_values(0, vec![]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0, 2.0]]).is_err());
        assert!(Matrix::from_rows(&[vec![f64::NAN]]).is_err());
    }

    #[test]
    fn determinant_basics() {
        assert!((Matrix::identity(3).determinant() - 1.0).abs() < 1e-12);
        let a = mat(&[&[2.0, 1.0], &[1.0, 2.0]]);
        assert!((a.determinant() - 3.0).abs() < 1e-12);
        let singular = mat(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(singular.determinant().abs() < 1e-12);
    }
}
