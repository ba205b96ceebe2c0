//! The complementary channels `ρ ↦ (Tr ⊗ ι)(αρα^*)` and `ρ ↦ (ι ⊗ Tr)(αρα^*)`
//! on states of `H_k`, and the Choi-type maps `Φ_t` built from the same
//! isometry.
//!
//! Input states are `[k+1]_q × [k+1]_q` density matrices in the coordinates
//! of [`IrrepBasis`](crate::jones_wenzl::IrrepBasis). Outputs are ambient
//! `N^m × N^m` (or `N^l × N^l`) matrices supported on `H_m` (or `H_l`).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::Calculus;
use crate::entangle::{
    alternating_input, entropy, family_size, max_schmidt_optimizer, saturation_witness, schmidt_decomposition,
    schmidt_spectrum, OptimizerConfig, PLATEAU_REL_TOL,
};
use crate::error::{Error, Result};
use crate::qnum::{AdmissibleTriple, QParams};
use crate::random::{gaussian_vector, orthonormal_columns, stream_rng, unit_vector};
use crate::tensor_core::{apply_bipartite, Kron, TensorOperator, TensorShape, TensorVector};
use crate::vertex::EquivariantIsometry;

/// Tolerance on symmetry, trace and negative eigenvalues of input states.
pub const STATE_TOL: f64 = 1e-8;

/// Which tensor factor of `H_l ⊗ H_m` is traced out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Trace out `H_l`; the output lives on `H_m`.
    TraceFirst,
    /// Trace out `H_m`; the output lives on `H_l`.
    TraceLast,
}

impl Direction {
    pub fn complement(self) -> Self {
        match self {
            Self::TraceFirst => Self::TraceLast,
            Self::TraceLast => Self::TraceFirst,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EquivariantChannel {
    iso: Arc<EquivariantIsometry>,
    direction: Direction,
}

impl EquivariantChannel {
    pub fn new(iso: Arc<EquivariantIsometry>, direction: Direction) -> Self {
        Self { iso, direction }
    }

    pub fn triple(&self) -> AdmissibleTriple {
        self.iso.triple()
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn isometry(&self) -> &EquivariantIsometry {
        &self.iso
    }

    pub fn complementary(&self) -> Self {
        Self { iso: self.iso.clone(), direction: self.direction.complement() }
    }

    pub fn input_dim(&self) -> usize {
        self.iso.domain_dim()
    }

    fn factor_dims(&self) -> (usize, usize) {
        let t = self.triple();
        let n = self.iso.n();
        (n.pow(t.l as u32), n.pow(t.m as u32))
    }

    /// Side length of the ambient output matrix.
    pub fn output_dim(&self) -> usize {
        let (dl, dm) = self.factor_dims();
        match self.direction {
            Direction::TraceFirst => dm,
            Direction::TraceLast => dl,
        }
    }

    /// Output for the rank-one input `Σ_j y_j y_jᵀ`, where `y_j` are the
    /// columns of `images` (ambient vectors on `l + m` legs).
    fn reduce(&self, images: &DMatrix<f64>) -> DMatrix<f64> {
        let (dl, dm) = self.factor_dims();
        let terms = images.ncols();
        match self.direction {
            // Σ_j M_jᵀ M_j with the M_j stacked vertically.
            Direction::TraceFirst => {
                let stacked = DMatrix::from_fn(terms * dl, dm, |r, b| images[((r % dl) * dm + b, r / dl)]);
                stacked.tr_mul(&stacked)
            }
            // Σ_j M_j M_jᵀ with the M_j side by side.
            Direction::TraceLast => {
                let wide = DMatrix::from_fn(dl, terms * dm, |a, c| images[(a * dm + c % dm, c / dm)]);
                &wide * wide.transpose()
            }
        }
    }
}

/// Validates a density matrix and returns its eigendecomposition.
fn checked_state(rho: &DMatrix<f64>, dim: usize) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if rho.shape() != (dim, dim) {
        return Err(Error::ShapeMismatch(format!("state of shape {:?}, expected {dim}×{dim}", rho.shape())));
    }
    let asym = (rho - rho.transpose()).amax();
    if asym > STATE_TOL {
        return Err(Error::NotAState(format!("asymmetry {asym:.3e}")));
    }
    let trace = rho.trace();
    if (trace - 1.0).abs() > STATE_TOL {
        return Err(Error::NotAState(format!("trace {trace}")));
    }
    let eig = SymmetricEigen::new((rho + rho.transpose()) * 0.5);
    let min = eig.eigenvalues.min();
    if min < -STATE_TOL {
        return Err(Error::NotAState(format!("smallest eigenvalue {min:.3e}")));
    }
    Ok(eig)
}

/// `(Tr ⊗ ι)(αρα^*)` or `(ι ⊗ Tr)(αρα^*)`.
pub fn channel_apply(ch: &EquivariantChannel, rho: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = checked_state(rho, ch.input_dim())?;
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
    let mut factors = DMatrix::zeros(ch.input_dim(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        factors.set_column(c, &(eig.eigenvectors.column(i) * eig.eigenvalues[i].sqrt()));
    }
    Ok(ch.reduce(&(ch.iso.reduced() * factors)))
}

/// Output for the pure input `|ξ⟩⟨ξ|`, `ξ` a unit coordinate vector.
pub fn channel_apply_pure(ch: &EquivariantChannel, xi: &DVector<f64>) -> Result<DMatrix<f64>> {
    if xi.len() != ch.input_dim() {
        return Err(Error::ShapeMismatch(format!("input of length {} for dim H_k = {}", xi.len(), ch.input_dim())));
    }
    let norm = xi.norm();
    if (norm - 1.0).abs() > STATE_TOL {
        return Err(Error::NotAState(format!("pure input of norm {norm}")));
    }
    let image = ch.iso.reduced() * xi;
    Ok(ch.reduce(&DMatrix::from_column_slice(image.len(), 1, image.as_slice())))
}

/// `−Tr ρ log ρ`, natural log.
pub fn von_neumann_entropy(rho: &DMatrix<f64>) -> Result<f64> {
    let eig = checked_state(rho, rho.nrows())?;
    Ok(entropy(eig.eigenvalues.iter().copied()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelNorm {
    pub triple: AdmissibleTriple,
    /// Largest output eigenvalue found over pure inputs.
    pub value: f64,
    /// `[k+1]_q / θ_q(k,l,m)`.
    pub exact: f64,
    pub rel_err: f64,
    /// `q^r`.
    pub lower_bound: f64,
    /// `C(q)² q^r`; absent for `N = 2`.
    pub upper_bound: Option<f64>,
    pub converged: bool,
}

/// `‖Φ‖_{S¹→S^∞}`: the supremum over pure inputs of the largest output
/// eigenvalue, which is the largest Schmidt coefficient over `α(H_k)`. Both
/// complementary channels share it.
pub fn channel_norm_1_to_inf(calc: &Calculus, ch: &EquivariantChannel, cfg: &OptimizerConfig) -> Result<ChannelNorm> {
    let t = ch.triple();
    let params = calc.params();
    let opt = max_schmidt_optimizer(ch.isometry(), cfg)?;
    let value = opt.value * opt.value;
    let exact = params.lambda_max(&t);
    let c = params.rd_constant().ok();
    let qr = params.q().powi(t.r as i32);
    Ok(ChannelNorm {
        triple: t,
        value,
        exact,
        rel_err: (value - exact).abs() / exact,
        lower_bound: qr,
        upper_bound: c.map(|c| c * c * qr),
        converged: opt.converged,
    })
}

/// Where the smallest sampled output entropy came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropySource {
    Sample,
    Witness,
    Optimizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoeBracket {
    pub triple: AdmissibleTriple,
    /// `log(θ / [k+1]_q)`.
    pub lower: f64,
    /// Smallest output entropy observed.
    pub upper: f64,
    pub upper_source: EntropySource,
    /// `−r log q − 2 log C(q)`; absent for `N = 2`.
    pub coarse_lower: Option<f64>,
    pub gap: f64,
    /// Entropy of the output at `ξ = η_k(1,2)`.
    pub witness_entropy: f64,
    pub samples: usize,
}

fn pure_output_entropy(iso: &EquivariantIsometry, xi: &DVector<f64>) -> Result<f64> {
    Ok(schmidt_spectrum(&iso.apply(xi)?, iso.triple().l)?.entropy)
}

/// Brackets the minimum output entropy. The lower end is the closed form;
/// the upper end is the least entropy over `samples` Haar-random pure inputs,
/// the input `η_k(1,2)`, and (when `restarts > 0`) the optimizer's maximiser.
///
/// For a pure input the nonzero output spectrum is the Schmidt spectrum of
/// `α(ξ)`, so the bracket is the same for both complementary channels.
pub fn moe_bracket(
    calc: &Calculus,
    ch: &EquivariantChannel,
    samples: usize,
    restarts: usize,
    seed: u64,
) -> Result<MoeBracket> {
    let iso = ch.isometry();
    let t = iso.triple();
    let params = calc.params();
    let lower = -params.lambda_max_log(&t);
    let coarse_lower = params.rd_constant().ok().map(|c| -(t.r as f64) * params.q().ln() - 2.0 * c.ln());

    let witness_entropy = pure_output_entropy(iso, &alternating_input(calc, t.k)?)?;
    let mut upper = witness_entropy;
    let mut upper_source = EntropySource::Witness;

    let dim = iso.domain_dim();
    let sampled: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| pure_output_entropy(iso, &unit_vector(&mut stream_rng(seed, s as u64), dim)))
        .collect::<Result<_>>()?;
    for e in sampled {
        if e < upper {
            upper = e;
            upper_source = EntropySource::Sample;
        }
    }
    if restarts > 0 {
        let cfg = OptimizerConfig { restarts, seed, ..Default::default() };
        let opt = max_schmidt_optimizer(iso, &cfg)?;
        let e = pure_output_entropy(iso, &opt.xi)?;
        if e < upper {
            upper = e;
            upper_source = EntropySource::Optimizer;
        }
    }
    Ok(MoeBracket { triple: t, lower, upper, upper_source, coarse_lower, gap: upper - lower, witness_entropy, samples })
}

/// `C = (p_l ⊗ p_m) − scale · αα^*` on `l + m` legs.
pub fn choi_matrix(calc: &Calculus, iso: &EquivariantIsometry, scale: f64) -> Result<TensorOperator> {
    let t = iso.triple();
    let p = calc.projection(t.l)?.operator().kron(calc.projection(t.m)?.operator(), calc.cap())?;
    let red = iso.reduced();
    let data = p.into_matrix() - (red * red.transpose()) * scale;
    TensorOperator::new(iso.output_shape(), iso.output_shape(), data)
}

/// `θ_q(k,l,m) / (d [k+1]_q)`.
pub fn d_positivity_threshold(params: &QParams, t: AdmissibleTriple, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument("Schmidt rank d must be at least 1".into()));
    }
    Ok((params.theta_net_log(&t) - params.log_q_int(t.k + 1)).exp() / d as f64)
}

/// How the Schmidt-rank-`d` test vector was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    /// `Σ_{i ∈ A'} η_i ⊗ ζ_i` over the first `d` alternating maps.
    Family,
    /// The top `d` Schmidt pairs of `α(η_k(1,2))`, used when the alternating
    /// family is too small but the Schmidt plateau is long enough.
    SchmidtPlateau,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiReport {
    pub triple: AdmissibleTriple,
    pub scale: f64,
    pub d: usize,
    /// `θ / (d [k+1]_q)`.
    pub threshold: f64,
    /// `⟨C x, x⟩` at the witness `x` (norm² `d`).
    pub witness_value: f64,
    /// `d − scale · d² [k+1]_q / θ`.
    pub predicted: f64,
    pub residual: f64,
    pub witness_kind: WitnessKind,
    pub family_size: usize,
    /// Smallest `⟨C x, x⟩` over random unit vectors of Schmidt rank at most `d`.
    pub sampled_min: Option<f64>,
    pub samples: usize,
}

/// `⟨C x, x⟩ = ‖(p_l ⊗ p_m) x‖² − scale ‖α^* x‖²` without forming `C`.
fn choi_form(calc: &Calculus, iso: &EquivariantIsometry, x: &DVector<f64>, scale: f64) -> Result<f64> {
    let t = iso.triple();
    let col = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
    let px = apply_bipartite(calc.projection(t.l)?.matrix(), calc.projection(t.m)?.matrix(), &col);
    Ok(px.norm_squared() - scale * iso.reduced().tr_mul(x).norm_squared())
}

fn witness_vector(calc: &Calculus, iso: &EquivariantIsometry, d: usize) -> Result<(DVector<f64>, WitnessKind)> {
    let t = iso.triple();
    let n = calc.n();
    if n >= 3 && t.r >= 1 && d <= family_size(n, t.r) {
        let w = saturation_witness(calc, t)?;
        let mut x = TensorVector::zeros(iso.output_shape()).into_data();
        for (eta, zeta) in w.eta_family.iter().zip(&w.zeta_family).take(d) {
            x += eta.kron(zeta, calc.cap())?.into_data();
        }
        return Ok((x, WitnessKind::Family));
    }
    let lambda_max = calc.params().lambda_max(&t);
    let dec = schmidt_decomposition(&iso.apply(&alternating_input(calc, t.k)?)?, t.l)?;
    let plateau = dec.report.coefficients.iter().take_while(|&&c| (c - lambda_max).abs() <= PLATEAU_REL_TOL * lambda_max).count();
    if plateau < d {
        return Err(Error::WitnessUnavailable(format!(
            "d = {d} exceeds both the alternating family size (N−2)(N−1)^(r−1) = {} and the Schmidt plateau length {plateau} for {t}",
            family_size(n, t.r)
        )));
    }
    let mut x = DVector::zeros(iso.output_shape().dim());
    for i in 0..d {
        x += dec.left.column(i).kronecker(&dec.right.column(i));
    }
    Ok((x, WitnessKind::SchmidtPlateau))
}

/// Smallest `⟨C x, x⟩` over random unit `x = Σ_i w_i a_i ⊗ b_i` with
/// orthonormal `a_i ∈ H_l`, `b_i ∈ H_m` and Gaussian weights `w`.
fn sampled_choi_min(
    calc: &Calculus,
    iso: &EquivariantIsometry,
    d: usize,
    scale: f64,
    samples: usize,
    seed: u64,
) -> Result<Option<f64>> {
    if samples == 0 {
        return Ok(None);
    }
    let t = iso.triple();
    let ul = calc.irrep_basis(t.l)?;
    let um = calc.irrep_basis(t.m)?;
    let rank = d.min(ul.dim()).min(um.dim());
    let red = iso.reduced();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, s as u64);
            let a = ul.columns() * orthonormal_columns(&mut rng, ul.dim(), rank);
            let b = um.columns() * orthonormal_columns(&mut rng, um.dim(), rank);
            let w = gaussian_vector(&mut rng, rank);
            let w = &w / w.norm();
            // x as an N^l × N^m matrix, flattened row-major
            let x = &a * DMatrix::from_diagonal(&w) * b.transpose();
            let flat = DVector::from_row_slice(x.transpose().as_slice());
            1.0 - scale * red.tr_mul(&flat).norm_squared()
        })
        .collect();
    Ok(values.into_iter().reduce(f64::min))
}

/// Evaluates `Φ_t` at the Schmidt-rank-`d` witness and by random sampling.
pub fn choi_witness_value(
    calc: &Calculus,
    iso: &EquivariantIsometry,
    d: usize,
    scale: f64,
    samples: usize,
    seed: u64,
) -> Result<ChoiReport> {
    let t = iso.triple();
    let params = calc.params();
    let threshold = d_positivity_threshold(params, t, d)?;
    let (x, witness_kind) = witness_vector(calc, iso, d)?;
    let witness_value = choi_form(calc, iso, &x, scale)?;
    let df = d as f64;
    let predicted = df - scale * df * df * params.lambda_max(&t);
    Ok(ChoiReport {
        triple: t,
        scale,
        d,
        threshold,
        witness_value,
        predicted,
        residual: witness_value - predicted,
        witness_kind,
        family_size: if calc.n() >= 3 { family_size(calc.n(), t.r) } else { 0 },
        sampled_min: sampled_choi_min(calc, iso, d, scale, samples, seed)?,
        samples,
    })
}

/// Eigenvalues above `1e-14`, descending.
pub fn output_spectrum(rho: &DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = SymmetricEigen::new(rho.clone()).eigenvalues.iter().copied().filter(|&v| v > 1e-14).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Shape helper for callers that want the output as an operator.
pub fn output_shape(ch: &EquivariantChannel) -> TensorShape {
    let t = ch.triple();
    let legs = match ch.direction() {
        Direction::TraceFirst => t.m,
        Direction::TraceLast => t.l,
    };
    TensorShape { n: ch.isometry().n(), legs }
}
