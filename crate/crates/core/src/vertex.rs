//! Three-vertex intertwiners `A_k^{l,m} : H_k → H_l ⊗ H_m` and the equivariant
//! isometries `α_k^{l,m}` obtained by normalising them.
//!
//! Both are stored against the irreducible basis of the domain: the
//! `N^{l+m} × [k+1]_q` matrix `A U_k`, where the columns of `U_k` span `H_k`.
//! Since `A = A p_k = (A U_k) U_kᵀ`, the ambient operator is recovered on
//! demand and nothing is lost. The codomain stays ambient so the `l | m` leg
//! cut is available for Schmidt analysis.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::calculus::Calculus;
use crate::error::{Error, Result};
use crate::jones_wenzl::IrrepBasis;
use crate::qnum::AdmissibleTriple;
use crate::tensor_core::{apply_bipartite, insert_cup, parity_sectors, TensorOperator, TensorShape, TensorVector};

/// Relative disagreement between the closed-form and traced θ-net beyond
/// which a construction is rejected as broken.
pub const THETA_AGREEMENT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ThreeVertex {
    triple: AdmissibleTriple,
    n: usize,
    domain: Arc<IrrepBasis>,
    reduced: DMatrix<f64>,
}

impl ThreeVertex {
    pub fn triple(&self) -> AdmissibleTriple {
        self.triple
    }

    /// `A U_k`, an `N^{l+m} × [k+1]_q` matrix.
    pub fn reduced(&self) -> &DMatrix<f64> {
        &self.reduced
    }

    pub fn domain(&self) -> &IrrepBasis {
        &self.domain
    }

    /// `A` as an operator from `k` legs to `l + m` legs.
    pub fn ambient(&self) -> TensorOperator {
        ambient_operator(self.n, self.triple, &self.reduced, &self.domain)
    }
}

fn ambient_operator(n: usize, t: AdmissibleTriple, reduced: &DMatrix<f64>, domain: &IrrepBasis) -> TensorOperator {
    let data = reduced * domain.columns().transpose();
    TensorOperator::new(TensorShape { n, legs: t.k }, TensorShape { n, legs: t.l + t.m }, data)
        .expect("reduced matrices carry consistent shapes")
}

/// `A = (p_l ⊗ p_m)(ι^{⊗(l-r)} ⊗ T_r ⊗ ι^{⊗(m-r)}) p_k`, restricted to `H_k`.
pub fn three_vertex(calc: &Calculus, t: AdmissibleTriple) -> Result<ThreeVertex> {
    calc.dim(t.k)?;
    calc.dim(t.l + t.m)?;
    let domain = calc.irrep_basis(t.k)?;
    let p_l = calc.projection(t.l)?;
    let p_m = calc.projection(t.m)?;
    let cupped = insert_cup(calc.n(), t.l - t.r, t.r, t.m - t.r, domain.columns());
    let reduced = apply_bipartite(p_l.matrix(), p_m.matrix(), &cupped);
    if reduced.norm() == 0.0 {
        return Err(Error::InvariantViolation(format!("three-vertex {t} vanished")));
    }
    Ok(ThreeVertex { triple: t, n: calc.n(), domain, reduced })
}

/// `Tr(A^* A)` computed from the matrix itself.
pub fn theta_by_trace(v: &ThreeVertex) -> f64 {
    v.reduced.norm_squared()
}

/// `α_k^{l,m} = ([k+1]_q / θ_q(k,l,m))^{1/2} A_k^{l,m}`.
#[derive(Debug, Clone)]
pub struct EquivariantIsometry {
    triple: AdmissibleTriple,
    n: usize,
    domain: Arc<IrrepBasis>,
    reduced: DMatrix<f64>,
    blocks: Vec<SectorBlock>,
    theta_closed: f64,
    theta_trace: f64,
}

/// A nonzero block `reduced[rows, cols]`.
#[derive(Debug, Clone)]
struct SectorBlock {
    rows: Vec<usize>,
    cols: Vec<usize>,
    data: DMatrix<f64>,
}

/// Splits `reduced` into parity-sector blocks. Every map involved preserves
/// the parity of each colour count, so each column is supported on a single
/// sector of the codomain and the blocks reproduce `reduced` exactly. Falls
/// back to one dense block if that ever fails.
fn sector_blocks(n: usize, legs: usize, reduced: &DMatrix<f64>) -> Vec<SectorBlock> {
    let dense = || vec![SectorBlock {
        rows: (0..reduced.nrows()).collect(),
        cols: (0..reduced.ncols()).collect(),
        data: reduced.clone(),
    }];
    let sectors = parity_sectors(n, legs);
    let mut sector_of = vec![0; reduced.nrows()];
    for (s, rows) in sectors.iter().enumerate() {
        for &r in rows {
            sector_of[r] = s;
        }
    }
    let mut cols_of: Vec<Vec<usize>> = vec![Vec::new(); sectors.len()];
    for c in 0..reduced.ncols() {
        let col = reduced.column(c);
        let s = sector_of[col.iamax()];
        if col.iter().zip(&sector_of).any(|(&v, &t)| t != s && v != 0.0) {
            return dense();
        }
        cols_of[s].push(c);
    }
    sectors
        .into_iter()
        .zip(cols_of)
        .filter(|(_, cols)| !cols.is_empty())
        .map(|(rows, cols)| {
            let data = DMatrix::from_fn(rows.len(), cols.len(), |i, j| reduced[(rows[i], cols[j])]);
            SectorBlock { rows, cols, data }
        })
        .collect()
}

impl EquivariantIsometry {
    pub fn triple(&self) -> AdmissibleTriple {
        self.triple
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Maps `H_k` coordinates to ambient `N^{l+m}` coordinates.
    pub fn reduced(&self) -> &DMatrix<f64> {
        &self.reduced
    }

    pub fn domain(&self) -> &Arc<IrrepBasis> {
        &self.domain
    }

    pub fn domain_dim(&self) -> usize {
        self.reduced.ncols()
    }

    pub fn theta_closed(&self) -> f64 {
        self.theta_closed
    }

    pub fn theta_trace(&self) -> f64 {
        self.theta_trace
    }

    pub fn theta_rel_err(&self) -> f64 {
        (self.theta_trace - self.theta_closed).abs() / self.theta_closed
    }

    /// Ambient `N^{l+m} × N^k` operator.
    pub fn ambient(&self) -> TensorOperator {
        ambient_operator(self.n, self.triple, &self.reduced, &self.domain)
    }

    pub fn output_shape(&self) -> TensorShape {
        TensorShape { n: self.n, legs: self.triple.l + self.triple.m }
    }

    /// `α(ξ)` for `ξ` given in `H_k` coordinates.
    pub fn apply(&self, xi: &DVector<f64>) -> Result<TensorVector> {
        if xi.len() != self.domain_dim() {
            return Err(Error::ShapeMismatch(format!(
                "coordinate vector of length {} for dim H_k = {}",
                xi.len(),
                self.domain_dim()
            )));
        }
        TensorVector::new(self.output_shape(), &self.reduced * xi)
    }

    /// `α^*(v)` in `H_k` coordinates.
    pub fn adjoint_apply(&self, v: &TensorVector) -> Result<DVector<f64>> {
        if v.shape() != self.output_shape() {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", v.shape(), self.output_shape())));
        }
        Ok(self.reduced.tr_mul(v.data()))
    }

    /// `α X` for a matrix of `H_k` coordinate columns.
    pub fn apply_many(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.domain_dim(), "apply_many: coordinate length");
        let mut out = DMatrix::zeros(self.reduced.nrows(), x.ncols());
        for b in &self.blocks {
            let y = &b.data * x.select_rows(&b.cols);
            for (i, &r) in b.rows.iter().enumerate() {
                out.row_mut(r).copy_from(&y.row(i));
            }
        }
        out
    }

    /// `α^* Y` for a matrix of ambient columns.
    pub fn adjoint_many(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(y.nrows(), self.reduced.nrows(), "adjoint_many: ambient length");
        let mut out = DMatrix::zeros(self.domain_dim(), y.ncols());
        for b in &self.blocks {
            let x = b.data.tr_mul(&y.select_rows(&b.rows));
            for (i, &c) in b.cols.iter().enumerate() {
                out.row_mut(c).copy_from(&x.row(i));
            }
        }
        out
    }
}

/// Builds `α_k^{l,m}`; fails hard if the traced θ-net disagrees with the
/// closed form by more than [`THETA_AGREEMENT`].
pub fn isometry(calc: &Calculus, t: AdmissibleTriple) -> Result<EquivariantIsometry> {
    let vertex = three_vertex(calc, t)?;
    let theta_closed = calc.params().theta_net(&t);
    let theta_trace = theta_by_trace(&vertex);
    let rel = (theta_trace - theta_closed).abs() / theta_closed;
    if rel > THETA_AGREEMENT {
        return Err(Error::InvariantViolation(format!(
            "θ{t}: closed form {theta_closed} vs trace {theta_trace} (relative error {rel:.3e})"
        )));
    }
    let scale = calc.params().lambda_max(&t).sqrt();
    let ThreeVertex { domain, reduced, .. } = vertex;
    let reduced = reduced * scale;
    let blocks = sector_blocks(calc.n(), t.l + t.m, &reduced);
    Ok(EquivariantIsometry { triple: t, n: calc.n(), domain, reduced, blocks, theta_closed, theta_trace })
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Diagonal blocks of `α^*α`. Sector blocks have disjoint rows and columns,
/// so every entry outside these blocks is exactly zero.
fn gram_blocks(iso: &EquivariantIsometry) -> impl Iterator<Item = DMatrix<f64>> + '_ {
    iso.blocks.iter().map(|b| b.data.tr_mul(&b.data))
}

/// `‖α^*α − ι_{H_k}‖_max`.
pub fn isometry_defect(iso: &EquivariantIsometry) -> f64 {
    gram_blocks(iso).map(|g| gram_defect(&g)).fold(0.0, f64::max)
}

fn gram_defect(gram: &DMatrix<f64>) -> f64 {
    max_abs(&(gram - DMatrix::identity(gram.nrows(), gram.ncols())))
}

/// `‖(p_l ⊗ p_m) α − α‖_max`.
pub fn range_defect(calc: &Calculus, iso: &EquivariantIsometry) -> Result<f64> {
    let t = iso.triple;
    let p_l = calc.projection(t.l)?;
    let p_m = calc.projection(t.m)?;
    let projected = apply_bipartite(p_l.matrix(), p_m.matrix(), &iso.reduced);
    Ok(max_abs(&(projected - &iso.reduced)))
}

/// `‖α p_k − α‖_max` over the ambient operator.
///
/// `p_k` and `U_k` are block diagonal over the parity sectors of `k` legs
/// (the basis is only built when that holds exactly), so the drift
/// `p_k U_k − U_k` is assembled sector by sector.
pub fn domain_defect(calc: &Calculus, iso: &EquivariantIsometry) -> Result<f64> {
    let p_k = calc.projection(iso.triple.k)?;
    let u = iso.domain.columns();
    let mut drift_t = DMatrix::zeros(u.ncols(), u.nrows());
    for rows in parity_sectors(iso.n, iso.triple.k) {
        let u_rows = u.select_rows(&rows);
        let cols: Vec<usize> = (0..u.ncols()).filter(|&c| u_rows.column(c).iter().any(|&x| x != 0.0)).collect();
        if cols.is_empty() {
            continue;
        }
        let u_s = u_rows.select_columns(&cols);
        let p_s = p_k.matrix().select_rows(&rows).select_columns(&rows);
        let d = p_s * &u_s - &u_s;
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                drift_t[(c, r)] = d[(i, j)];
            }
        }
    }
    Ok(max_abs(&iso.apply_many(&drift_t)))
}

/// Stand-in for equivariance: `α` must intertwine the Jones–Wenzl
/// projections on both sides. Returns the larger of the two residuals.
pub fn verify_equivariance_proxy(calc: &Calculus, iso: &EquivariantIsometry) -> Result<f64> {
    Ok(range_defect(calc, iso)?.max(domain_defect(calc, iso)?))
}

/// Summary of an isometry suitable for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometrySummary {
    pub triple: AdmissibleTriple,
    pub ambient_rows: usize,
    pub domain_dim: usize,
    pub theta_closed: f64,
    pub theta_trace: f64,
    pub theta_rel_err: f64,
    pub isometry_defect: f64,
    pub range_defect: f64,
    pub domain_defect: f64,
    /// Largest singular value of `A`, squared.
    pub vertex_norm_sq: f64,
    /// `[r+1]_q`, an upper bound for `vertex_norm_sq`.
    pub vertex_norm_sq_bound: f64,
    pub smallest_singular_value: f64,
}

pub fn summarize(calc: &Calculus, iso: &EquivariantIsometry) -> Result<IsometrySummary> {
    let t = iso.triple;
    let (mut lo, mut hi, mut defect) = (f64::INFINITY, 0.0f64, 0.0f64);
    for gram in gram_blocks(iso) {
        defect = defect.max(gram_defect(&gram));
        for &e in SymmetricEigen::new(gram).eigenvalues.iter() {
            lo = lo.min(e);
            hi = hi.max(e);
        }
    }
    // A = (θ/[k+1])^{1/2} α
    let vertex_norm_sq = hi / calc.params().lambda_max(&t);
    Ok(IsometrySummary {
        triple: t,
        ambient_rows: iso.reduced.nrows(),
        domain_dim: iso.domain_dim(),
        theta_closed: iso.theta_closed,
        theta_trace: iso.theta_trace,
        theta_rel_err: iso.theta_rel_err(),
        isometry_defect: defect,
        range_defect: range_defect(calc, iso)?,
        domain_defect: domain_defect(calc, iso)?,
        vertex_norm_sq,
        vertex_norm_sq_bound: calc.params().q_int(t.r + 1)?,
        smallest_singular_value: lo.max(0.0).sqrt(),
    })
}
