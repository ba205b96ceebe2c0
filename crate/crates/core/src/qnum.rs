//! Scalar arithmetic of the O_N^+ fusion category.
//!
//! Everything here is a function of the rank `N` through the quantum parameter
//! `q`, the root in `(0, 1]` of `q + 1/q = N`. Quantum factorials are kept in
//! log-space so that ratios such as `[k+1]_q / θ_q(k,l,m)` stay finite far past
//! the point where the factorials themselves overflow.

use std::fmt;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative size below which a factor of the infinite product in `C(q)` is
/// treated as 1.
const PRODUCT_CUTOFF: f64 = 1e-15;

/// The quantum parameter `q(N)` with lazily grown tables of quantum integers
/// and log quantum factorials.
pub struct QParams {
    n: usize,
    q: f64,
    log_q: f64,
    qint_cache: RwLock<Vec<f64>>,
    qfact_log_cache: RwLock<Vec<f64>>,
}

impl QParams {
    /// Builds `q = 2 / (N + sqrt(N^2 - 4))`, which equals the smaller root of
    /// `q + 1/q = N` without the cancellation of `(N - sqrt(N^2 - 4)) / 2`.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidRank { n, min: 2 });
        }
        let nf = n as f64;
        let q = if n == 2 {
            1.0
        } else {
            2.0 / (nf + (nf * nf - 4.0).sqrt())
        };
        Ok(Self {
            n,
            q,
            log_q: q.ln(),
            qint_cache: RwLock::new(vec![0.0, 1.0]),
            qfact_log_cache: RwLock::new(vec![0.0]),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn log_q(&self) -> f64 {
        self.log_q
    }

    /// True when `q = 1` (the classical N = 2 case).
    pub fn is_classical(&self) -> bool {
        self.n == 2
    }

    fn closed_form_qint(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        if self.is_classical() {
            return n as f64;
        }
        let q2 = self.q * self.q;
        // q^{-(n-1)} (1 - q^{2n}) / (1 - q^2)
        let grow = (-(n as f64 - 1.0) * self.log_q).exp();
        grow * (1.0 - q2.powi(n as i32)) / (1.0 - q2)
    }

    /// `[n]_q`; `[0] = 0`, `[1] = 1`, `[2] = N`.
    pub fn q_int(&self, n: usize) -> Result<f64> {
        {
            let cache = self.qint_cache.read().expect("qint cache poisoned");
            if let Some(&v) = cache.get(n) {
                return finite(v, n);
            }
        }
        let mut cache = self.qint_cache.write().expect("qint cache poisoned");
        while cache.len() <= n {
            let next = self.closed_form_qint(cache.len());
            cache.push(next);
        }
        finite(cache[n], n)
    }

    /// `log [n]_q`, finite for every `n ≥ 1` and `-inf` for `n = 0`.
    pub fn log_q_int(&self, n: usize) -> f64 {
        if n == 0 {
            return f64::NEG_INFINITY;
        }
        if self.is_classical() {
            return (n as f64).ln();
        }
        let q2 = self.q * self.q;
        -(n as f64 - 1.0) * self.log_q + (-(q2.powi(n as i32))).ln_1p() - (-q2).ln_1p()
    }

    /// `log([n]_q!)` with `log([0]_q!) = 0`.
    pub fn q_factorial_log(&self, n: usize) -> f64 {
        {
            let cache = self.qfact_log_cache.read().expect("factorial cache poisoned");
            if let Some(&v) = cache.get(n) {
                return v;
            }
        }
        let mut cache = self.qfact_log_cache.write().expect("factorial cache poisoned");
        while cache.len() <= n {
            let s = cache.len();
            let next = cache[s - 1] + self.log_q_int(s);
            cache.push(next);
        }
        cache[n]
    }

    /// `dim H_k = [k+1]_q`.
    pub fn dim_irrep(&self, k: usize) -> Result<f64> {
        self.q_int(k + 1)
    }

    /// `dim H_k` rounded to the nearest integer, as used for basis sizes.
    pub fn dim_irrep_usize(&self, k: usize) -> Result<usize> {
        Ok(self.dim_irrep(k)?.round() as usize)
    }

    pub fn theta_net_log(&self, t: &AdmissibleTriple) -> f64 {
        let (k, l, m, r) = (t.k, t.l, t.m, t.r);
        self.q_factorial_log(r)
            + self.q_factorial_log(l - r)
            + self.q_factorial_log(m - r)
            + self.q_factorial_log(k + r + 1)
            - self.q_factorial_log(l)
            - self.q_factorial_log(m)
            - self.q_factorial_log(k)
    }

    /// Closed-form θ-net `θ_q(k,l,m)`.
    pub fn theta_net(&self, t: &AdmissibleTriple) -> f64 {
        self.theta_net_log(t).exp()
    }

    /// `log([k+1]_q / θ_q(k,l,m))`, the log of the largest Schmidt coefficient
    /// attainable in `α(H_k)`.
    pub fn lambda_max_log(&self, t: &AdmissibleTriple) -> f64 {
        self.log_q_int(t.k + 1) - self.theta_net_log(t)
    }

    pub fn lambda_max(&self, t: &AdmissibleTriple) -> f64 {
        self.lambda_max_log(t).exp()
    }

    /// `C(q) = (1-q^2)^{-1/2} (∏_{s≥1} 1/(1-q^{2s}))^{3/2}`.
    pub fn rd_constant(&self) -> Result<f64> {
        if self.n < 3 {
            return Err(Error::InvalidRank { n: self.n, min: 3 });
        }
        let q2 = self.q * self.q;
        let mut log_prod = 0.0;
        let mut term = q2;
        loop {
            // 1/(1 - q^{2s}) - 1 = q^{2s}/(1 - q^{2s})
            if term / (1.0 - term) < PRODUCT_CUTOFF {
                break;
            }
            log_prod -= (-term).ln_1p();
            term *= q2;
        }
        Ok((-0.5 * (-q2).ln_1p() + 1.5 * log_prod).exp())
    }

    /// The exact and coarse Schmidt-coefficient bounds for `α_k^{l,m}(H_k)`.
    pub fn rd_bound(&self, t: &AdmissibleTriple) -> Result<RdBound> {
        let c = self.rd_constant()?;
        Ok(RdBound {
            exact: self.lambda_max(t),
            coarse: c * c * self.q.powi(t.r as i32),
        })
    }

    /// `[r+1]_q [k+1]_q / θ_q(k,l,m)`, never below 1.
    pub fn remark_upbound_check(&self, t: &AdmissibleTriple) -> f64 {
        (self.log_q_int(t.r + 1) + self.lambda_max_log(t)).exp()
    }
}

fn finite(v: f64, n: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow { n })
    }
}

impl Clone for QParams {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            q: self.q,
            log_q: self.log_q,
            qint_cache: RwLock::new(self.qint_cache.read().expect("qint cache poisoned").clone()),
            qfact_log_cache: RwLock::new(
                self.qfact_log_cache.read().expect("factorial cache poisoned").clone(),
            ),
        }
    }
}

impl fmt::Debug for QParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QParams").field("n", &self.n).field("q", &self.q).finish()
    }
}

/// Upper bounds on the largest Schmidt coefficient of a unit vector in
/// `α_k^{l,m}(H_k)`: `exact = [k+1]/θ` and `coarse = C(q)^2 q^r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdBound {
    pub exact: f64,
    pub coarse: f64,
}

/// A triple `(k, l, m)` with `k = l + m - 2r` for some `0 ≤ r ≤ min(l, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AdmissibleTriple {
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub r: usize,
}

impl AdmissibleTriple {
    pub fn new(k: usize, l: usize, m: usize) -> Result<Self> {
        let not = Error::NotAdmissible { k, l, m };
        let twice_r = (l + m).checked_sub(k).ok_or(not)?;
        if twice_r % 2 != 0 || twice_r / 2 > l.min(m) {
            return Err(Error::NotAdmissible { k, l, m });
        }
        Ok(Self { k, l, m, r: twice_r / 2 })
    }

    /// The triple `(l + m - 2r, l, m)`.
    pub fn from_r(l: usize, m: usize, r: usize) -> Result<Self> {
        if r > l.min(m) {
            return Err(Error::InvalidArgument(format!("r={r} exceeds min(l={l}, m={m})")));
        }
        Ok(Self { k: l + m - 2 * r, l, m, r })
    }

    /// Highest weight: `k = l + m`.
    pub fn is_highest_weight(&self) -> bool {
        self.r == 0
    }
}

impl fmt::Display for AdmissibleTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.k, self.l, self.m)
    }
}

/// Every `v^k` inside `v^l ⊗ v^m`, ordered by increasing `r`.
pub fn admissible_triples(l: usize, m: usize) -> Vec<AdmissibleTriple> {
    (0..=l.min(m))
        .map(|r| AdmissibleTriple { k: l + m - 2 * r, l, m, r })
        .collect()
}
