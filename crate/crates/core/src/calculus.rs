use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::jones_wenzl::{self, IrrepBasis, JwProjection};
use crate::qnum::QParams;
use crate::tensor_core::{checked_dim, TensorOperator, DEFAULT_MAX_DIM};

/// Everything that depends only on the rank `N`: the quantum parameter, the
/// ambient dimension cap, and the caches of Jones–Wenzl projections and
/// irreducible bases that every construction above it reuses.
///
/// Caches fill bottom-up under a single writer; readers only ever see fully
/// built levels.
pub struct Calculus {
    params: QParams,
    cap: usize,
    projections: RwLock<Vec<Arc<JwProjection>>>,
    bases: RwLock<BTreeMap<usize, Arc<IrrepBasis>>>,
    store: Option<PathBuf>,
}

impl Calculus {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_cap(n, DEFAULT_MAX_DIM)
    }

    pub fn with_cap(n: usize, cap: usize) -> Result<Self> {
        Ok(Self {
            params: QParams::new(n)?,
            cap,
            projections: RwLock::new(Vec::new()),
            bases: RwLock::new(BTreeMap::new()),
            store: None,
        })
    }

    /// Persist and reload projections as JSON files under `dir`.
    pub fn with_store(mut self, dir: impl Into<PathBuf>) -> Self {
        self.store = Some(dir.into());
        self
    }

    pub fn params(&self) -> &QParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// `N^legs`, checked against the cap.
    pub fn dim(&self, legs: usize) -> Result<usize> {
        checked_dim(self.n(), legs, self.cap)
    }

    /// The projection `p_k`, building `p_1 … p_k` on first use.
    pub fn projection(&self, k: usize) -> Result<Arc<JwProjection>> {
        self.dim(k)?;
        {
            let cache = self.projections.read().expect("projection cache poisoned");
            if let Some(p) = cache.get(k) {
                return Ok(p.clone());
            }
        }
        let mut cache = self.projections.write().expect("projection cache poisoned");
        while cache.len() <= k {
            let level = cache.len();
            let next = match self.load(level)? {
                Some(p) => p,
                None => {
                    let p = if level == 0 {
                        JwProjection::trivial(self.n())
                    } else {
                        jones_wenzl::wenzl_step(&self.params, cache.last().map(|p| p.as_ref()), level, self.cap)?
                    };
                    self.save(&p)?;
                    p
                }
            };
            cache.push(Arc::new(next));
        }
        Ok(cache[k].clone())
    }

    /// Orthonormal basis of `H_k = range(p_k)`.
    pub fn irrep_basis(&self, k: usize) -> Result<Arc<IrrepBasis>> {
        {
            let cache = self.bases.read().expect("basis cache poisoned");
            if let Some(b) = cache.get(&k) {
                return Ok(b.clone());
            }
        }
        let p = self.projection(k)?;
        let mut cache = self.bases.write().expect("basis cache poisoned");
        if let Some(b) = cache.get(&k) {
            return Ok(b.clone());
        }
        let basis = Arc::new(jones_wenzl::onb_of_irrep(&self.params, &p)?);
        cache.insert(k, basis.clone());
        Ok(basis)
    }

    fn store_path(&self, k: usize) -> Option<PathBuf> {
        self.store.as_ref().map(|d| d.join(format!("jw_n{}_k{}.json", self.n(), k)))
    }

    fn load(&self, k: usize) -> Result<Option<JwProjection>> {
        let Some(path) = self.store_path(k) else { return Ok(None) };
        if !path.exists() {
            return Ok(None);
        }
        let op: TensorOperator = serde_json::from_str(&fs::read_to_string(&path)?)?;
        let s = op.in_shape();
        if s.n != self.n() || s.legs != k || !op.is_square() {
            return Err(Error::ShapeMismatch(format!("cached projection {} has shape {s:?}", path.display())));
        }
        Ok(Some(JwProjection::from_operator(k, op)))
    }

    fn save(&self, p: &JwProjection) -> Result<()> {
        let Some(path) = self.store_path(p.k()) else { return Ok(()) };
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, serde_json::to_string(p.operator())?)?;
        Ok(())
    }
}

impl std::fmt::Debug for Calculus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Calculus").field("params", &self.params).field("cap", &self.cap).finish()
    }
}
