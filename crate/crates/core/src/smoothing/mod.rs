//! The smoothed equivalence `ĥ(x, s) = (h(x), Φₓ(s))`.
//!
//! Replacing the linear fiber stretch by `Φₓ`, which is the identity near
//! the bottom of each fiber and a pure shift near the top, makes the map
//! agree to all orders on both sides of the identification
//! `(x, c_f(x)) ∼ (f(x), 0)`.

pub mod bump;
pub mod quadrature;
pub mod reparam;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

pub use bump::{BumpShape, BumpSpec};
pub use reparam::FiberReparam;

use crate::equivalence::EquivalencePair;
use crate::error::Result;
use crate::suspension::SuspensionPoint;
use crate::torus::TorusPoint;

/// Fibers kept in memory before the cache is flushed.
const CACHE_CAPACITY: usize = 4096;

/// Memoized fiber reparametrizations keyed by the exact base point.
///
/// Readers share the lock; inserts take it exclusively.
#[derive(Debug, Default)]
struct FiberCache {
    fibers: RwLock<HashMap<[u64; 2], Arc<FiberReparam>>>,
}

impl FiberCache {
    fn get(&self, key: &[u64; 2]) -> Option<Arc<FiberReparam>> {
        self.fibers.read().expect("fiber cache poisoned").get(key).cloned()
    }

    fn insert(&self, key: [u64; 2], fiber: Arc<FiberReparam>) -> Arc<FiberReparam> {
        let mut map = self.fibers.write().expect("fiber cache poisoned");
        if map.len() >= CACHE_CAPACITY {
            map.clear();
        }
        map.entry(key).or_insert(fiber).clone()
    }
}

/// The equivalence pair with each fiber reparametrized by `Φₓ`.
#[derive(Debug)]
pub struct SmoothedEquivalence {
    pair: EquivalencePair,
    shape: BumpShape,
    epsilon: f64,
    cache: FiberCache,
}

impl SmoothedEquivalence {
    /// Uses `ε = α/3` with `α` the common lower bound of both roofs.
    pub fn new(pair: EquivalencePair, shape: BumpShape) -> Self {
        let epsilon = pair.alpha() / 3.0;
        Self {
            pair,
            shape,
            epsilon,
            cache: FiberCache::default(),
        }
    }

    pub fn pair(&self) -> &EquivalencePair {
        &self.pair
    }

    pub fn shape(&self) -> BumpShape {
        self.shape
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The reparametrization of the fiber over `x`, built on first request.
    pub fn fiber(&self, x: &TorusPoint) -> Result<Arc<FiberReparam>> {
        let key = x.raw();
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit);
        }
        let c_f_x = self.pair.source().roof(x);
        let c_g_hx = self.pair.target().roof(&self.pair.conjugacy().apply(x));
        let fiber = FiberReparam::build(*x, self.epsilon, c_f_x, c_g_hx, self.shape)?;
        Ok(self.cache.insert(key, Arc::new(fiber)))
    }

    /// `Φₓ(s)` for any representative height, continued linearly past the
    /// fiber ends.
    pub fn reparam(&self, x: &TorusPoint, s: f64) -> Result<f64> {
        self.fiber(x)?.value(s)
    }

    /// The smoothed formula applied to a representative, without
    /// normalization of the result.
    pub fn map_representative(&self, base: &TorusPoint, height: f64) -> Result<(TorusPoint, f64)> {
        Ok((self.pair.conjugacy().apply(base), self.reparam(base, height)?))
    }

    pub fn smooth_h_hat(&self, p: &SuspensionPoint) -> Result<SuspensionPoint> {
        let (base, height) = self.map_representative(&p.base, p.height)?;
        Ok(self.pair.target().normalize(base, height))
    }

    /// Target time `t′ = Σ_{i<n} c_g(gⁱh(x)) + Φ_{fⁿx}(s′) − Φₓ(s)` carrying
    /// `smooth_h_hat(p)` to `smooth_h_hat(φ_t(p))`.
    pub fn smooth_time_change(&self, p: &SuspensionPoint, t: f64) -> Result<f64> {
        let landing = self.pair.source().flow_landing(p, t);
        let target = self.pair.target();
        let hx = self.pair.conjugacy().apply(&p.base);
        let crossed = target.ceiling().signed_birkhoff_sum(target.map(), &hx, landing.steps);
        let end = self.reparam(&landing.point.base, landing.point.height)?;
        let start = self.reparam(&p.base, p.height)?;
        Ok(crossed + end - start)
    }

    /// Residual of `ψ_{t′}(ĥ(p)) = ĥ(φ_t(p))` for the smoothed map.
    pub fn verify_time_change(&self, p: &SuspensionPoint, t: f64) -> Result<f64> {
        let target = self.pair.target();
        let t_prime = self.smooth_time_change(p, t)?;
        let lhs = target.flow(&self.smooth_h_hat(p)?, t_prime);
        let rhs = self.smooth_h_hat(&self.pair.source().flow(p, t))?;
        Ok(target.section_distance(&lhs, &rhs))
    }
}
