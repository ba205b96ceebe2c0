//! Jones–Wenzl projections `p_k` on `(C^N)^{⊗k}` and orthonormal bases of
//! their ranges `H_k`.
//!
//! `p_k` is built by the Wenzl recursion
//!
//! ```text
//! p_k = ι⊗p_{k-1} − ([k-1]/[k]) (ι⊗p_{k-1})(T_1T_1^*⊗ι)(ι⊗p_{k-1})
//! ```
//!
//! and the correction term is assembled as `B Bᵀ` with the thin factor
//! `B = (ι⊗p_{k-1})(T_1⊗ι^{⊗(k-2)})`, which has only `N^{k-2}` columns.
//! Spectral work (rank, bases) is done sector by sector, see
//! [`parity_sectors`].

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qnum::QParams;
use crate::tensor_core::{apply_cap, parity_sectors, TensorOperator, TensorShape, TensorVector};

pub const IDEMPOTENCE_TOL: f64 = 1e-9;
pub const SYMMETRY_TOL: f64 = 1e-12;
pub const TRACE_REL_TOL: f64 = 1e-8;
pub const CAP_TOL: f64 = 1e-9;
pub const FIXES_TOL: f64 = 1e-9;

/// Eigenvalues of a projection must avoid this open band around 1/2.
const GUARD_BAND: (f64, f64) = (0.25, 0.75);

/// Base tolerance for level `k`, widened proportionally to `N^k ε` beyond
/// `k = 6`.
pub fn tolerance(base: f64, n: usize, k: usize) -> f64 {
    if k <= 6 {
        base
    } else {
        base * (n as f64).powi(k as i32 - 6)
    }
}

#[derive(Debug, Clone)]
pub struct JwProjection {
    k: usize,
    op: TensorOperator,
}

impl JwProjection {
    /// `p_0`, the scalar 1 on the empty tensor power.
    pub fn trivial(n: usize) -> Self {
        Self { k: 0, op: TensorOperator::identity(TensorShape { n, legs: 0 }) }
    }

    /// Wraps an arbitrary square operator on `k` legs, e.g. one loaded from
    /// disk. No validation beyond shape; use [`verify_jw`].
    pub fn from_operator(k: usize, op: TensorOperator) -> Self {
        Self { k, op }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.op.in_shape().n
    }

    pub fn operator(&self) -> &TensorOperator {
        &self.op
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.op.matrix()
    }
}

/// One step of the Wenzl recursion: `p_k` from `p_{k-1}`.
pub(crate) fn wenzl_step(
    params: &QParams,
    prev: Option<&JwProjection>,
    k: usize,
    cap: usize,
) -> Result<JwProjection> {
    let n = params.n();
    let shape = TensorShape::new(n, k, cap)?;
    if k == 0 {
        return Ok(JwProjection::trivial(n));
    }
    if k == 1 {
        return Ok(JwProjection { k, op: TensorOperator::identity(shape) });
    }
    let prev = prev.filter(|p| p.k == k - 1).ok_or_else(|| {
        Error::InvalidArgument(format!("Wenzl step to level {k} needs p_{}", k - 1))
    })?;
    let p = prev.matrix();
    let d = p.nrows();
    let thin = d / n;
    let dim = shape.dim();

    // B[(a, s), j] = p_{k-1}[s, (a, j)]
    let b = DMatrix::from_fn(dim, thin, |row, j| p[(row % d, (row / d) * thin + j)]);
    let coef = (params.log_q_int(k - 1) - params.log_q_int(k)).exp();
    let mut out = &b * b.transpose();
    out *= -coef;
    for a in 0..n {
        let mut block = out.view_mut((a * d, a * d), (d, d));
        block += p;
    }
    Ok(JwProjection { k, op: TensorOperator::new(shape, shape, out)? })
}

/// Residuals of the defining properties of a Jones–Wenzl projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JwResiduals {
    pub n: usize,
    pub k: usize,
    /// `‖p² − p‖_max`
    pub idempotence: f64,
    /// `‖p − pᵀ‖_max`
    pub symmetry: f64,
    pub trace: f64,
    pub trace_expected: f64,
    pub trace_rel_err: f64,
    /// `max_i ‖(ι⊗T_1T_1^*⊗ι) p‖_max` over cap positions `i`.
    pub cap_annihilation: f64,
    /// Largest entry coupling different parity sectors (exactly 0 for a
    /// Temperley–Lieb element).
    pub sector_leak: f64,
    /// Eigenvalues above 1/2.
    pub rank: usize,
    pub expected_rank: usize,
    /// Largest distance of an eigenvalue from `{0, 1}`.
    pub spectral_spread: f64,
}

impl JwResiduals {
    pub fn within_tolerance(&self) -> bool {
        let tol = |base| tolerance(base, self.n, self.k);
        self.idempotence <= tol(IDEMPOTENCE_TOL)
            && self.symmetry <= tol(SYMMETRY_TOL)
            && self.trace_rel_err <= tol(TRACE_REL_TOL)
            && self.cap_annihilation <= tol(CAP_TOL)
            && self.rank == self.expected_rank
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

fn sector_blocks(p: &DMatrix<f64>, sectors: &[Vec<usize>]) -> Vec<DMatrix<f64>> {
    sectors
        .iter()
        .map(|s| DMatrix::from_fn(s.len(), s.len(), |i, j| p[(s[i], s[j])]))
        .collect()
}

fn sector_leak(p: &DMatrix<f64>, sectors: &[Vec<usize>]) -> f64 {
    let mut label = vec![0usize; p.nrows()];
    for (id, s) in sectors.iter().enumerate() {
        for &pos in s {
            label[pos] = id;
        }
    }
    let mut leak = 0.0f64;
    for j in 0..p.ncols() {
        for i in 0..p.nrows() {
            if label[i] != label[j] {
                leak = leak.max(p[(i, j)].abs());
            }
        }
    }
    leak
}

/// Reports every defining residual of `jw`; never fails on bad input, only
/// reports it.
pub fn verify_jw(params: &QParams, jw: &JwProjection) -> JwResiduals {
    let n = jw.n();
    let k = jw.k;
    let p = jw.matrix();
    let sectors = parity_sectors(n, k);
    let leak = sector_leak(p, &sectors);
    let blocks = sector_blocks(p, &sectors);

    let idempotence = if leak == 0.0 {
        blocks.iter().map(|b| max_abs(&(b * b - b))).fold(0.0, f64::max)
    } else {
        max_abs(&(p * p - p))
    };
    let symmetry = max_abs(&(p - p.transpose()));
    let trace = p.trace();
    let trace_expected = params.dim_irrep(k).unwrap_or(f64::INFINITY);
    let cap_annihilation = (1..k.max(1))
        .map(|i| max_abs(&apply_cap(n, k, i, p)))
        .fold(0.0, f64::max);

    let eigenvalues: Vec<f64> = if leak == 0.0 {
        blocks
            .into_iter()
            .flat_map(|b| SymmetricEigen::new(b).eigenvalues.iter().copied().collect::<Vec<_>>())
            .collect()
    } else {
        let sym = (p + p.transpose()) * 0.5;
        SymmetricEigen::new(sym).eigenvalues.iter().copied().collect()
    };
    let rank = eigenvalues.iter().filter(|&&e| e > 0.5).count();
    let spectral_spread = eigenvalues
        .iter()
        .map(|&e| e.abs().min((e - 1.0).abs()))
        .fold(0.0, f64::max);

    JwResiduals {
        n,
        k,
        idempotence,
        symmetry,
        trace,
        trace_expected,
        trace_rel_err: (trace - trace_expected).abs() / trace_expected,
        cap_annihilation,
        sector_leak: leak,
        rank,
        expected_rank: trace_expected.round() as usize,
        spectral_spread,
    }
}

/// Orthonormal basis of `range(p_k)` as the columns of an `N^k × [k+1]_q`
/// matrix.
#[derive(Debug, Clone)]
pub struct IrrepBasis {
    n: usize,
    k: usize,
    columns: DMatrix<f64>,
}

impl IrrepBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `dim H_k`.
    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    /// Ambient vector of the coordinates `x` (length `dim H_k`).
    pub fn lift(&self, x: &DVector<f64>) -> TensorVector {
        let shape = TensorShape { n: self.n, legs: self.k };
        TensorVector::new(shape, &self.columns * x).expect("lift keeps the ambient shape")
    }

    /// Coordinates of the orthogonal projection of `v` onto `H_k`.
    pub fn coordinates(&self, v: &TensorVector) -> Result<DVector<f64>> {
        if v.shape() != (TensorShape { n: self.n, legs: self.k }) {
            return Err(Error::ShapeMismatch(format!("{:?} is not on {} legs of C^{}", v.shape(), self.k, self.n)));
        }
        Ok(self.columns.tr_mul(v.data()))
    }
}

/// Eigenvectors of `p_k` with eigenvalue above 1/2, computed per parity
/// sector and embedded back into the ambient space.
pub fn onb_of_irrep(params: &QParams, jw: &JwProjection) -> Result<IrrepBasis> {
    let n = jw.n();
    let k = jw.k;
    let expected = params.dim_irrep_usize(k)?;
    let p = jw.matrix();
    let dim = p.nrows();
    let sectors = parity_sectors(n, k);
    if sector_leak(p, &sectors) != 0.0 {
        return Err(Error::Numerical(format!("p_{k} couples parity sectors")));
    }
    let mut columns = DMatrix::zeros(dim, expected);
    let mut filled = 0;
    for (sector, block) in sectors.iter().zip(sector_blocks(p, &sectors)) {
        let eig = SymmetricEigen::new(block);
        for (idx, &e) in eig.eigenvalues.iter().enumerate() {
            if e > GUARD_BAND.0 && e < GUARD_BAND.1 {
                return Err(Error::Numerical(format!(
                    "eigenvalue {e} of p_{k} inside the guard band; projection is inaccurate"
                )));
            }
            if e > 0.5 {
                if filled == expected {
                    return Err(Error::Numerical(format!("p_{k} has rank above [k+1]_q = {expected}")));
                }
                let v = eig.eigenvectors.column(idx);
                for (row, &pos) in sector.iter().enumerate() {
                    columns[(pos, filled)] = v[row];
                }
                filled += 1;
            }
        }
    }
    if filled != expected {
        return Err(Error::Numerical(format!("p_{k} has rank {filled}, expected {expected}")));
    }
    Ok(IrrepBasis { n, k, columns })
}

/// `‖p_k v − v‖`.
pub fn jw_fixes(jw: &JwProjection, v: &TensorVector) -> Result<f64> {
    let pv = jw.operator().apply(v)?;
    Ok((pv.data() - v.data()).norm())
}
