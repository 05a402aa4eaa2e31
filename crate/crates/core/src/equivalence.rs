//! The orbit equivalence between two suspensions whose bases are conjugate.
//!
//! Given `g∘h = h∘f`, the map `ĥ(x, s) = (h(x), s·c_g(h(x))/c_f(x))`
//! stretches each source fiber linearly onto the target fiber over `h(x)`.
//! It sends orbits to orbits, but along each orbit the target flow has to be
//! run for the reparametrized time `τ_{(x,s)}(t)` computed here.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::suspension::{SuspensionPoint, SuspensionSystem};
use crate::torus::{BaseConjugacy, TorusPoint};

/// Grid size and tolerance used to validate `g∘h = h∘f` at construction.
pub const CONJUGACY_GRID: usize = 64;
pub const CONJUGACY_TOLERANCE: f64 = 1e-10;

/// Two suspensions together with a conjugacy between their bases.
#[derive(Clone, Debug)]
pub struct EquivalencePair {
    source: SuspensionSystem,
    target: SuspensionSystem,
    h: BaseConjugacy,
}

/// The time change at one orbit point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeChangeRecord {
    #[serde(skip)]
    pub point: SuspensionPoint,
    pub t: f64,
    /// Roofs crossed in the source, `n_{s,t}(x)`.
    pub n: i64,
    pub tau: f64,
    /// `dτ/dt = c_g(h(fⁿx)) / c_f(fⁿx)`.
    pub slope: f64,
}

/// One line of the equivalence verification report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerificationRecord {
    pub x1: f64,
    pub x2: f64,
    pub s: f64,
    pub t: f64,
    pub n_src: i64,
    pub n_tgt: i64,
    pub tau: f64,
    pub slope: f64,
    pub residual: f64,
}

impl EquivalencePair {
    /// Builds the pair after checking `g∘h = h∘f` on a 64×64 grid.
    pub fn new(source: SuspensionSystem, target: SuspensionSystem, h: BaseConjugacy) -> Result<Self> {
        let (residual, at) = h.conjugacy_residual(source.map(), target.map(), CONJUGACY_GRID);
        if residual > CONJUGACY_TOLERANCE {
            return Err(Error::ConjugacyMismatch {
                residual,
                x1: at.x1(),
                x2: at.x2(),
            });
        }
        Ok(Self { source, target, h })
    }

    pub fn source(&self) -> &SuspensionSystem {
        &self.source
    }

    pub fn target(&self) -> &SuspensionSystem {
        &self.target
    }

    pub fn conjugacy(&self) -> &BaseConjugacy {
        &self.h
    }

    /// The common lower bound of both roofs.
    pub fn alpha(&self) -> f64 {
        self.source.ceiling().alpha().min(self.target.ceiling().alpha())
    }

    /// `c_g(h(x)) / c_f(x)`.
    pub fn fiber_scale(&self, x: &TorusPoint) -> f64 {
        self.target.roof(&self.h.apply(x)) / self.source.roof(x)
    }

    /// The fiber-scaling formula applied to an arbitrary representative,
    /// without normalizing the result.
    pub fn h_hat_representative(&self, base: &TorusPoint, height: f64) -> (TorusPoint, f64) {
        (self.h.apply(base), height * self.fiber_scale(base))
    }

    pub fn h_hat(&self, p: &SuspensionPoint) -> SuspensionPoint {
        let (base, height) = self.h_hat_representative(&p.base, p.height);
        self.target.normalize(base, height)
    }

    pub fn h_hat_inverse(&self, q: &SuspensionPoint) -> Result<SuspensionPoint> {
        let x = self.h.apply_inverse(&q.base)?;
        let height = q.height * self.source.roof(&x) / self.target.roof(&q.base);
        Ok(self.source.normalize(x, height))
    }

    /// `τ_{(x,s)}(t)` for any real `t`; negative times follow the same
    /// cocycle through backward Birkhoff sums.
    pub fn tau(&self, p: &SuspensionPoint, t: f64) -> TimeChangeRecord {
        let landing = self.source.flow_landing(p, t);
        let n = landing.steps;
        let hx = self.h.apply(&p.base);
        let crossed_target = self.target.ceiling().signed_birkhoff_sum(self.target.map(), &hx, n);
        let slope = self.fiber_scale(&landing.point.base);
        let tau = landing.point.height * slope - p.height * self.fiber_scale(&p.base) + crossed_target;
        TimeChangeRecord {
            point: *p,
            t,
            n,
            tau,
            slope,
        }
    }

    /// Distance between `ĥ(φ_t(p))` and `ψ_{t'}(ĥ(p))` for a given target time.
    pub fn residual_for_time(&self, p: &SuspensionPoint, t: f64, target_time: f64) -> f64 {
        let lhs = self.h_hat(&self.source.flow(p, t));
        let rhs = self.target.flow(&self.h_hat(p), target_time);
        self.target.section_distance(&lhs, &rhs)
    }

    /// Residual of `ĥ(φ_t(p)) = ψ_{τ(t)}(ĥ(p))`.
    pub fn verify_equivalence(&self, p: &SuspensionPoint, t: f64) -> f64 {
        self.residual_for_time(p, t, self.tau(p, t).tau)
    }

    /// Step counts on both sides: `n_{s,t}(x)` in the source and
    /// `n_{s·c_g(h(x))/c_f(x), τ}(h(x))` in the target.
    pub fn n_consistency(&self, p: &SuspensionPoint, t: f64) -> (i64, i64) {
        let rec = self.tau(p, t);
        (rec.n, self.target_steps(p, rec.tau))
    }

    fn target_steps(&self, p: &SuspensionPoint, tau: f64) -> i64 {
        let (hx, height) = self.h_hat_representative(&p.base, p.height);
        self.target.step_count(&hx, height, tau)
    }

    /// Everything the verification report needs for one sample, with an
    /// optional additive perturbation of τ.
    pub fn verification_record(&self, p: &SuspensionPoint, t: f64, tau_offset: f64) -> VerificationRecord {
        let rec = self.tau(p, t);
        let tau = rec.tau + tau_offset;
        VerificationRecord {
            x1: p.base.x1(),
            x2: p.base.x2(),
            s: p.height,
            t,
            n_src: rec.n,
            n_tgt: self.target_steps(p, tau),
            tau,
            slope: rec.slope,
            residual: self.residual_for_time(p, t, tau),
        }
    }
}
