//! The suspension space `M_c` and its unit-speed vertical flow.
//!
//! A point is stored by its canonical representative `(x, s)` with
//! `0 ≤ s < c(x)`; the top of each fiber `(x, c(x))` is identified with
//! `(f(x), 0)`. Flowing for time `t` walks up the fibers, jumping through
//! the identification each time the accumulated height passes a roof.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::ceiling::CeilingFunction;
use crate::torus::{HyperbolicToralMap, TorusPoint};

/// Heights this close to the roof are pushed through the identification.
pub const SEAM_TOLERANCE: f64 = 1e-12;

/// Canonical representative of a point of `M_c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuspensionPoint {
    pub base: TorusPoint,
    pub height: f64,
}

impl SuspensionPoint {
    pub fn new(base: TorusPoint, height: f64) -> Self {
        Self { base, height }
    }
}

/// Where a vertical orbit segment ends: the landing fiber index `n`, the
/// base point `f^n(x)` and the height `s'` within that fiber.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Landing {
    pub steps: i64,
    pub point: SuspensionPoint,
    /// The signed Birkhoff sum `S_n(x)` crossed on the way.
    pub crossed: f64,
}

/// A hyperbolic toral automorphism together with a roof function.
#[derive(Clone, Debug, PartialEq)]
pub struct SuspensionSystem {
    map: HyperbolicToralMap,
    ceiling: CeilingFunction,
}

impl SuspensionSystem {
    pub fn new(map: HyperbolicToralMap, ceiling: CeilingFunction) -> Self {
        Self { map, ceiling }
    }

    pub fn map(&self) -> &HyperbolicToralMap {
        &self.map
    }

    pub fn ceiling(&self) -> &CeilingFunction {
        &self.ceiling
    }

    pub fn roof(&self, x: &TorusPoint) -> f64 {
        self.ceiling.eval(x)
    }

    /// Travels vertical time `v` starting from the bottom of the fiber over `x`.
    ///
    /// Returns the unique `n` with `S_n(x) ≤ v < S_{n+1}(x)` (negative `n` for
    /// negative `v`), taking the larger `n` on ties or within
    /// [`SEAM_TOLERANCE`] of a roof.
    pub fn land(&self, x: &TorusPoint, v: f64) -> Landing {
        let cap = (v.abs() / self.ceiling.alpha()).ceil() as i64 + 2;
        let mut steps = 0i64;
        let mut base = *x;
        let mut acc = 0.0;
        if v >= -SEAM_TOLERANCE {
            for _ in 0..cap {
                let c = self.ceiling.eval(&base);
                if acc + c > v + SEAM_TOLERANCE {
                    break;
                }
                acc += c;
                base = self.map.apply(&base);
                steps += 1;
            }
        } else {
            for _ in 0..cap {
                base = self.map.apply_inverse(&base);
                acc -= self.ceiling.eval(&base);
                steps -= 1;
                if acc <= v + SEAM_TOLERANCE {
                    break;
                }
            }
        }
        Landing {
            steps,
            point: SuspensionPoint::new(base, (v - acc).max(0.0)),
            crossed: acc,
        }
    }

    /// Canonical representative of `(base, height)` for any finite height.
    pub fn normalize(&self, base: TorusPoint, height: f64) -> SuspensionPoint {
        self.land(&base, height).point
    }

    /// Number of roofs crossed when flowing `(x, s)` for time `t`.
    pub fn step_count(&self, x: &TorusPoint, s: f64, t: f64) -> i64 {
        self.land(x, s + t).steps
    }

    pub fn flow_landing(&self, p: &SuspensionPoint, t: f64) -> Landing {
        self.land(&p.base, p.height + t)
    }

    pub fn flow(&self, p: &SuspensionPoint, t: f64) -> SuspensionPoint {
        self.flow_landing(p, t).point
    }

    /// Quotient-aware distance: the smallest `torus distance + |Δheight|`
    /// over the representatives of either point obtained by pushing it once
    /// through the identification in each direction.
    pub fn section_distance(&self, p: &SuspensionPoint, q: &SuspensionPoint) -> f64 {
        self.one_sided_distance(p, q).min(self.one_sided_distance(q, p))
    }

    fn one_sided_distance(&self, p: &SuspensionPoint, q: &SuspensionPoint) -> f64 {
        let d = |base: &TorusPoint, height: f64| p.base.distance(base) + (p.height - height).abs();
        let below = self.map.apply_inverse(&q.base);
        let above = self.map.apply(&q.base);
        d(&q.base, q.height)
            .min(d(&below, q.height + self.roof(&below)))
            .min(d(&above, q.height - self.roof(&q.base)))
    }

    /// A uniformly random base point with a uniformly random height in its
    /// fiber.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> SuspensionPoint {
        let base = TorusPoint::from_raw([rng.gen(), rng.gen()]);
        let u: f64 = rng.gen();
        self.normalize(base, u * self.roof(&base))
    }

    /// Samples the orbit of `p` at the given times.
    pub fn trajectory(&self, p: &SuspensionPoint, times: &[f64]) -> Vec<TrajectoryRow> {
        times
            .iter()
            .map(|&t| {
                let landing = self.flow_landing(p, t);
                let [x1, x2] = landing.point.base.coords();
                TrajectoryRow {
                    t,
                    x1,
                    x2,
                    height: landing.point.height,
                    n: landing.steps,
                }
            })
            .collect()
    }
}

/// One sample of a flow trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub height: f64,
    pub n: i64,
}

/// Writes trajectory rows as CSV with header `t,x1,x2,height,n`.
pub fn write_trajectory_csv<W: Write>(out: W, rows: &[TrajectoryRow]) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}
