//! Schmidt analysis of the subspaces `α_k^{l,m}(H_k) ⊆ H_l ⊗ H_m`.
//!
//! The image of `α` always lies in `range(p_l) ⊗ range(p_m)`, so Schmidt data
//! across the ambient `l | m` leg cut coincides with Schmidt data inside
//! `H_l ⊗ H_m`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::Calculus;
use crate::error::{Error, Result};
use crate::jones_wenzl::{jw_fixes, tolerance, FIXES_TOL};
use crate::linalg::{leading_singular_pair, singular_decomposition, squared_singular_values};
use crate::qnum::{AdmissibleTriple, QParams};
use crate::random::{stream_rng, unit_vector};
use crate::tensor_core::{alternating_vector, basis_vector, matricize, Kron, TensorShape, TensorVector};
use crate::vertex::EquivariantIsometry;

/// Slack allowed above the largest-Schmidt-coefficient bound.
pub const BOUND_SLACK: f64 = 1e-8;
/// Relative tolerance for values that must equal `[k+1]_q / θ`.
pub const PLATEAU_REL_TOL: f64 = 1e-8;
/// Schmidt coefficients below `RANK_REL_TOL · λ_1` do not count towards rank.
pub const RANK_REL_TOL: f64 = 1e-8;

/// Shannon entropy (natural log) of a probability vector; `0 log 0 = 0`.
pub fn entropy(probabilities: impl IntoIterator<Item = f64>) -> f64 {
    -probabilities.into_iter().filter(|&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtReport {
    /// Squared Schmidt values, descending, summing to `‖v‖²`.
    pub coefficients: Vec<f64>,
    /// Entropy of the normalised coefficients.
    pub entropy: f64,
    pub max: f64,
    pub numerical_rank: usize,
    pub norm_sq: f64,
}

impl SchmidtReport {
    fn from_coefficients(coefficients: Vec<f64>) -> Result<Self> {
        let norm_sq: f64 = coefficients.iter().sum();
        if norm_sq == 0.0 {
            return Err(Error::ZeroVector);
        }
        let max = coefficients[0];
        Ok(Self {
            entropy: entropy(coefficients.iter().map(|c| c / norm_sq)),
            numerical_rank: coefficients.iter().filter(|&&c| c > RANK_REL_TOL * max).count(),
            max,
            norm_sq,
            coefficients,
        })
    }
}

/// Schmidt coefficients of `v` across the cut after `split` legs.
pub fn schmidt_spectrum(v: &TensorVector, split: usize) -> Result<SchmidtReport> {
    SchmidtReport::from_coefficients(squared_singular_values(&matricize(v, split)?))
}

/// Schmidt coefficients with the matching left and right Schmidt vectors as
/// columns, in the same (descending) order. Vectors paired with vanishing
/// coefficients are zero.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub report: SchmidtReport,
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
}

pub fn schmidt_decomposition(v: &TensorVector, split: usize) -> Result<SchmidtDecomposition> {
    let (lambda, left, right) = singular_decomposition(&matricize(v, split)?);
    Ok(SchmidtDecomposition { report: SchmidtReport::from_coefficients(lambda)?, left, right })
}

/// Views every column of `images` (ambient vectors on `l + m` legs) as an
/// `N^l × N^m` matrix.
fn cut(images: &DMatrix<f64>, col: usize, rows: usize) -> DMatrix<f64> {
    let c = images.column(col);
    DMatrix::from_row_slice(rows, c.len() / rows, c.as_slice())
}

/// Random search for a violation of the largest-Schmidt-coefficient bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdCertificate {
    pub triple: AdmissibleTriple,
    pub samples: usize,
    pub max_observed: f64,
    /// `[k+1]_q / θ_q(k,l,m)`.
    pub bound_exact: f64,
    /// `C(q)² q^r`.
    pub bound_coarse: f64,
    /// `bound_exact − max_observed`; negative means a violation.
    pub margin: f64,
    /// `bound_coarse − bound_exact`.
    pub coarse_margin: f64,
    pub violated: bool,
}

/// Pushes `samples` Haar-random unit vectors of `H_k` through `α` and records
/// the largest `λ_1` seen. Sample `s` is drawn from stream `s` of `seed`.
pub fn rd_certificate(calc: &Calculus, iso: &EquivariantIsometry, samples: usize, seed: u64) -> Result<RdCertificate> {
    let t = iso.triple();
    let bound = calc.params().rd_bound(&t)?;
    let dim = iso.domain_dim();
    let rows = iso.n().pow(t.l as u32);
    let mut inputs = DMatrix::zeros(dim, samples);
    for s in 0..samples {
        inputs.set_column(s, &unit_vector(&mut stream_rng(seed, s as u64), dim));
    }
    let images = iso.apply_many(&inputs);
    let max_observed = (0..samples)
        .into_par_iter()
        .map(|s| squared_singular_values(&cut(&images, s, rows))[0])
        .reduce(|| 0.0, f64::max);
    Ok(RdCertificate {
        triple: t,
        samples,
        max_observed,
        bound_exact: bound.exact,
        bound_coarse: bound.coarse,
        margin: bound.exact - max_observed,
        coarse_margin: bound.coarse - bound.exact,
        violated: max_observed > bound.exact + BOUND_SLACK,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Stop once a sweep changes the objective by less than this.
    pub tol: f64,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { restarts: 20, tol: 1e-12, max_sweeps: 1000, seed: 0 }
    }
}

/// Best point found by [`max_schmidt_optimizer`].
#[derive(Debug, Clone)]
pub struct OptimizerResult {
    /// Estimate of `sup |⟨α(ξ), η ⊗ ζ⟩|`, i.e. of `sup λ_1^{1/2}`.
    pub value: f64,
    /// Whether the restart that produced `value` met the tolerance.
    pub converged: bool,
    pub converged_restarts: usize,
    pub restarts: usize,
    pub best_restart: usize,
    pub sweeps: usize,
    /// Maximiser in `H_k` coordinates.
    pub xi: DVector<f64>,
    /// Ambient unit vectors on `l` and `m` legs.
    pub eta: DVector<f64>,
    pub zeta: DVector<f64>,
}

struct Restart {
    value: f64,
    converged: bool,
    active: bool,
    sweeps: usize,
    xi: DVector<f64>,
    eta: DVector<f64>,
    zeta: DVector<f64>,
}

fn normalized(v: DVector<f64>) -> Option<DVector<f64>> {
    let n = v.norm();
    (n > 1e-300).then(|| v / n)
}

fn stacked<'a>(vectors: impl ExactSizeIterator<Item = &'a DVector<f64>>, dim: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(dim, vectors.len());
    for (c, v) in vectors.enumerate() {
        out.set_column(c, v);
    }
    out
}

/// Alternating maximisation of `|⟨α(ξ), η ⊗ ζ⟩|` over unit `ξ ∈ H_k`,
/// `η`, `ζ`: each sweep sets `η ∝ M ζ`, `ζ ∝ Mᵀ η`, `ξ ∝ α^*(η ⊗ ζ)` where
/// `M` is the matricised image `α(ξ)`. The objective never decreases.
///
/// Restart `i` starts from stream `i` of the seed. Restarts advance in
/// lock-step so that each sweep touches `α` twice in total rather than twice
/// per restart. At the end every restart is polished with the exact top
/// singular pair of its final `M`. Ties go to the lowest restart index.
pub fn max_schmidt_optimizer(iso: &EquivariantIsometry, cfg: &OptimizerConfig) -> Result<OptimizerResult> {
    if cfg.restarts == 0 {
        return Err(Error::InvalidArgument("at least one restart is required".into()));
    }
    let t = iso.triple();
    let (ambient, dim) = iso.reduced().shape();
    let rows = iso.n().pow(t.l as u32);
    let cols = ambient / rows;
    let mut runs: Vec<Restart> = (0..cfg.restarts)
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, i as u64);
            let xi = unit_vector(&mut rng, dim);
            let zeta = unit_vector(&mut rng, cols);
            Restart { value: 0.0, converged: false, active: true, sweeps: 0, xi, eta: DVector::zeros(rows), zeta }
        })
        .collect();

    for _ in 0..cfg.max_sweeps {
        let active: Vec<usize> = (0..runs.len()).filter(|&i| runs[i].active).collect();
        if active.is_empty() {
            break;
        }
        let images = iso.apply_many(&stacked(active.iter().map(|&i| &runs[i].xi), dim));
        let mut products = DMatrix::zeros(ambient, active.len());
        let mut stalled = vec![false; active.len()];
        for (c, &i) in active.iter().enumerate() {
            let m = cut(&images, c, rows);
            let pair = normalized(&m * &runs[i].zeta).and_then(|e| normalized(m.tr_mul(&e)).map(|z| (e, z)));
            match pair {
                Some((e, z)) => {
                    products.set_column(c, &e.kronecker(&z));
                    runs[i].eta = e;
                    runs[i].zeta = z;
                }
                None => stalled[c] = true,
            }
        }
        let contracted = iso.adjoint_many(&products);
        for (c, &i) in active.iter().enumerate() {
            let run = &mut runs[i];
            run.sweeps += 1;
            if stalled[c] {
                run.active = false;
                continue;
            }
            let g = contracted.column(c).into_owned();
            let next = g.norm();
            let gain = next - run.value;
            run.value = next;
            if let Some(x) = normalized(g) {
                run.xi = x;
            }
            if gain.abs() < cfg.tol {
                run.converged = true;
                run.active = false;
            }
        }
    }

    let finals = iso.apply_many(&stacked(runs.iter().map(|r| &r.xi), dim));
    for (c, run) in runs.iter_mut().enumerate() {
        let (lambda, eta, zeta) = leading_singular_pair(&cut(&finals, c, rows));
        let sigma = lambda.sqrt();
        if sigma > run.value {
            run.value = sigma;
            run.eta = eta;
            run.zeta = zeta;
        }
    }

    let converged_restarts = runs.iter().filter(|r| r.converged).count();
    let mut best_restart = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value > runs[best_restart].value {
            best_restart = i;
        }
    }
    let best = runs.swap_remove(best_restart);
    Ok(OptimizerResult {
        value: best.value,
        converged: best.converged,
        converged_restarts,
        restarts: cfg.restarts,
        best_restart,
        sweeps: best.sweeps,
        xi: best.xi,
        eta: best.eta,
        zeta: best.zeta,
    })
}

/// `η_k(1,2)` in `H_k` coordinates, the input that saturates the bound.
pub fn alternating_input(calc: &Calculus, k: usize) -> Result<DVector<f64>> {
    let basis = calc.irrep_basis(k)?;
    let v = alternating_vector(calc.n(), k, 1, 2, calc.cap())?;
    basis.coordinates(&v)
}

/// `|A| = (N−2)(N−1)^{r−1}`.
pub fn family_size(n: usize, r: usize) -> usize {
    if r == 0 || n < 2 {
        return 0;
    }
    (n - 2) * (n - 1).pow(r as u32 - 1)
}

/// All `i : [r] → [N]` with `i(1) ≥ 3` and `i(s) ≠ i(s+1)`, 1-based, in
/// lexicographic order.
pub fn alternating_family(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn extend(n: usize, r: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == r {
            out.push(prefix.clone());
            return;
        }
        let (lo, prev) = match prefix.last() {
            None => (3, None),
            Some(&p) => (1, Some(p)),
        };
        for c in lo..=n {
            if Some(c) != prev {
                prefix.push(c);
                extend(n, r, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    if r > 0 {
        extend(n, r, &mut Vec::with_capacity(r), &mut out);
    }
    out
}

/// The input `ξ = η_k(1,2) = η_0 ⊗ ζ_0` together with the orthonormal
/// families `η_i`, `ζ_i` indexed by [`alternating_family`].
#[derive(Debug, Clone)]
pub struct SaturationWitness {
    pub triple: AdmissibleTriple,
    pub xi: TensorVector,
    pub xi_coords: DVector<f64>,
    pub eta0: TensorVector,
    pub zeta0: TensorVector,
    pub family: Vec<Vec<usize>>,
    pub family_size: usize,
    pub eta_family: Vec<TensorVector>,
    pub zeta_family: Vec<TensorVector>,
    /// Largest `‖p_l η_i − η_i‖`, `‖p_m ζ_i − ζ_i‖`.
    pub fix_residual: f64,
    /// `‖ξ‖ − ‖U_kᵀ ξ‖`, zero when `ξ ∈ H_k`.
    pub domain_residual: f64,
}

pub fn saturation_witness(calc: &Calculus, t: AdmissibleTriple) -> Result<SaturationWitness> {
    let n = calc.n();
    if n < 3 {
        return Err(Error::InvalidRank { n, min: 3 });
    }
    if t.r == 0 {
        return Err(Error::WitnessUnavailable(format!("{t} is highest weight (r = 0)")));
    }
    let cap = calc.cap();
    let (a, b) = (t.l - t.r, t.m - t.r);
    let xi = alternating_vector(n, t.k, 1, 2, cap)?;
    let eta0 = alternating_vector(n, a, 1, 2, cap)?;
    let zeta0 = if a % 2 == 0 { alternating_vector(n, b, 1, 2, cap)? } else { alternating_vector(n, b, 2, 1, cap)? };
    let family = alternating_family(n, t.r);
    let expected = family_size(n, t.r);
    if family.len() != expected {
        return Err(Error::InvariantViolation(format!(
            "enumerated {} alternating maps, count formula gives {expected}",
            family.len()
        )));
    }
    let p_l = calc.projection(t.l)?;
    let p_m = calc.projection(t.m)?;
    let tail_shape = TensorShape::new(n, t.r, cap)?;
    let mut eta_family = Vec::with_capacity(family.len());
    let mut zeta_family = Vec::with_capacity(family.len());
    let mut fix_residual = 0.0f64;
    for i in &family {
        let reversed: Vec<usize> = i.iter().rev().copied().collect();
        let eta = eta0.kron(&basis_vector(tail_shape, i)?, cap)?;
        let zeta = basis_vector(tail_shape, &reversed)?.kron(&zeta0, cap)?;
        fix_residual = fix_residual.max(jw_fixes(&p_l, &eta)?).max(jw_fixes(&p_m, &zeta)?);
        eta_family.push(eta);
        zeta_family.push(zeta);
    }
    let tol = tolerance(FIXES_TOL, n, t.l.max(t.m));
    if fix_residual > tol {
        return Err(Error::InvariantViolation(format!(
            "witness family for {t} is not fixed by the projections (residual {fix_residual:.3e})"
        )));
    }
    let xi_coords = calc.irrep_basis(t.k)?.coordinates(&xi)?;
    let domain_residual = (xi.norm() - xi_coords.norm()).abs();
    Ok(SaturationWitness {
        triple: t,
        xi,
        xi_coords,
        eta0,
        zeta0,
        family_size: family.len(),
        family,
        eta_family,
        zeta_family,
        fix_residual,
        domain_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationReport {
    pub triple: AdmissibleTriple,
    pub family_size: usize,
    /// `[k+1]_q / θ_q(k,l,m)`.
    pub lambda_max: f64,
    /// Leading Schmidt coefficients of `α(η_k(1,2))`, up to `|A| + 1` of them.
    pub top: Vec<f64>,
    /// Largest relative deviation of the first `|A|` values from `lambda_max`.
    pub max_rel_dev: f64,
    /// Number of leading values equal to `lambda_max` within tolerance.
    pub plateau_len: usize,
    pub plateau_extends: bool,
    /// `|A| · [k+1]_q / θ`.
    pub mass: f64,
    pub passed: bool,
}

pub fn verify_saturation(
    calc: &Calculus,
    iso: &EquivariantIsometry,
    witness: &SaturationWitness,
) -> Result<SaturationReport> {
    let t = iso.triple();
    let lambda_max = calc.params().lambda_max(&t);
    let spectrum = schmidt_spectrum(&iso.apply(&witness.xi_coords)?, t.l)?;
    let a = witness.family_size;
    let rel = |c: f64| (c - lambda_max).abs() / lambda_max;
    let max_rel_dev = spectrum.coefficients.iter().take(a).map(|&c| rel(c)).fold(0.0, f64::max);
    let plateau_len = spectrum.coefficients.iter().take_while(|&&c| rel(c) <= PLATEAU_REL_TOL).count();
    Ok(SaturationReport {
        triple: t,
        family_size: a,
        lambda_max,
        top: spectrum.coefficients.iter().take(a + 1).copied().collect(),
        max_rel_dev,
        plateau_len,
        plateau_extends: plateau_len > a,
        mass: a as f64 * lambda_max,
        passed: spectrum.coefficients.len() >= a && max_rel_dev <= PLATEAU_REL_TOL,
    })
}

/// A product vector inside the highest-weight subspace `α_{l+m}^{l,m}(H_{l+m})`.
#[derive(Debug, Clone)]
pub struct SeparabilityWitness {
    pub vector: TensorVector,
    pub schmidt_rank: usize,
    /// `‖v − αα^*v‖`.
    pub range_residual: f64,
}

pub fn separability_witness_highest_weight(
    calc: &Calculus,
    l: usize,
    m: usize,
    i: usize,
    j: usize,
) -> Result<SeparabilityWitness> {
    let n = calc.n();
    for index in [i, j] {
        if index == 0 || index > n {
            return Err(Error::IndexOutOfRange { index, n });
        }
    }
    if i == j {
        return Err(Error::RepeatedIndex(i));
    }
    let cap = calc.cap();
    let left = alternating_vector(n, l, i, j, cap)?;
    let right = if l.is_multiple_of(2) { alternating_vector(n, m, i, j, cap)? } else { alternating_vector(n, m, j, i, cap)? };
    let vector = left.kron(&right, cap)?;
    let iso = crate::vertex::isometry(calc, AdmissibleTriple::from_r(l, m, 0)?)?;
    let back = iso.apply(&iso.adjoint_apply(&vector)?)?;
    let range_residual = (back.data() - vector.data()).norm();
    let schmidt_rank = schmidt_spectrum(&vector, l)?.numerical_rank;
    Ok(SeparabilityWitness { vector, schmidt_rank, range_residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HigherRankReport {
    pub triple: AdmissibleTriple,
    pub family_size: usize,
    /// `‖α^*(Σ_i η_i ⊗ ζ_i)‖`.
    pub lhs: f64,
    /// `|A| ([k+1]_q / θ)^{1/2}`.
    pub rhs_exact: f64,
    /// `|A| q^{r/2}`. Not a valid floor once `r ≥ 1`; reported for comparison.
    pub rhs_floor: f64,
    pub floor_holds: bool,
    pub rel_err: f64,
    /// `lhs` matches `rhs_exact` to [`PLATEAU_REL_TOL`].
    pub passed: bool,
}

pub fn higher_rank_value(
    calc: &Calculus,
    iso: &EquivariantIsometry,
    witness: &SaturationWitness,
) -> Result<HigherRankReport> {
    let t = iso.triple();
    let mut sum = TensorVector::zeros(iso.output_shape());
    for (eta, zeta) in witness.eta_family.iter().zip(&witness.zeta_family) {
        let term = eta.kron(zeta, calc.cap())?;
        sum = TensorVector::new(sum.shape(), sum.data() + term.data())?;
    }
    let lhs = iso.adjoint_apply(&sum)?.norm();
    let a = witness.family_size as f64;
    let params = calc.params();
    let rhs_exact = a * params.lambda_max(&t).sqrt();
    let rhs_floor = a * params.q().powf(t.r as f64 / 2.0);
    let rel_err = (lhs - rhs_exact).abs() / rhs_exact;
    Ok(HigherRankReport {
        triple: t,
        family_size: witness.family_size,
        lhs,
        rhs_exact,
        rhs_floor,
        floor_holds: lhs >= rhs_floor * (1.0 - 1e-12),
        rel_err,
        passed: rel_err <= PLATEAU_REL_TOL,
    })
}

/// Lower-bound surrogate for the entanglement quantity `E_μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EMuReport {
    pub triple: AdmissibleTriple,
    pub mu: f64,
    /// `log(θ / [k+1]_q)`.
    pub entropy_lower: f64,
    /// `log [k+1]_q − log([l+1]_q [m+1]_q)`.
    pub dim_term: f64,
    pub value: f64,
}

pub fn e_mu_report(params: &QParams, t: AdmissibleTriple, mu: f64) -> Result<EMuReport> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::InvalidArgument(format!("mu must lie in (0, 1), got {mu}")));
    }
    let entropy_lower = -params.lambda_max_log(&t);
    let dim_term = params.log_q_int(t.k + 1) - params.log_q_int(t.l + 1) - params.log_q_int(t.m + 1);
    Ok(EMuReport { triple: t, mu, entropy_lower, dim_term, value: entropy_lower + mu * dim_term })
}
