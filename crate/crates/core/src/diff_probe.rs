//! Finite-difference evidence for differentiability of suspension maps.
//!
//! Interior points are probed in the product coordinates `(x₁, x₂, s)`.
//! Across the cross section the quotient is only a manifold in flow-box
//! coordinates, so there each side of the seam is read through a
//! [`SectionChart`]: two base coordinates on the section plus the flow time
//! to (or from) it.

use nalgebra::{Matrix2, Matrix3, Vector2};
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::Serialize;

use crate::equivalence::EquivalencePair;
use crate::error::{Error, Result};
use crate::smoothing::SmoothedEquivalence;
use crate::suspension::{SuspensionPoint, SuspensionSystem};
use crate::torus::{quantize_offset, TorusPoint};

/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Default step for [`cross_section_check`].
pub const SECTION_STEP: f64 = 1e-4;

/// A map between suspensions given fiberwise on representatives.
pub trait SuspensionMap {
    /// Image of the representative `(base, height)`, not normalized.
    fn map_representative(&self, base: &TorusPoint, height: f64) -> Result<(TorusPoint, f64)>;
}

impl SuspensionMap for EquivalencePair {
    fn map_representative(&self, base: &TorusPoint, height: f64) -> Result<(TorusPoint, f64)> {
        Ok(self.h_hat_representative(base, height))
    }
}

impl SuspensionMap for SmoothedEquivalence {
    fn map_representative(&self, base: &TorusPoint, height: f64) -> Result<(TorusPoint, f64)> {
        SmoothedEquivalence::map_representative(self, base, height)
    }
}

/// The identity of a suspension.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityMap;

impl SuspensionMap for IdentityMap {
    fn map_representative(&self, base: &TorusPoint, height: f64) -> Result<(TorusPoint, f64)> {
        Ok((*base, height))
    }
}

/// Block Jacobian of the fiber-scaling map `ĥ(x, s) = (h(x), s·k(x))`,
/// `k = c_g∘h / c_f`:
///
/// ```text
/// ⎡ Dh_x      0 ⎤
/// ⎣ s·∇k(x)  k(x) ⎦
/// ```
pub fn analytic_jacobian_piecewise(pair: &EquivalencePair, p: &SuspensionPoint) -> Result<Matrix3<f64>> {
    if p.height == 0.0 {
        return Err(Error::OnSection);
    }
    let x = &p.base;
    let h = pair.conjugacy();
    let dh = h.jacobian(x)?;
    let hx = h.apply(x);
    let c_f = pair.source().roof(x);
    let c_g = pair.target().roof(&hx);
    let grad_k: Vector2<f64> = dh.transpose() * pair.target().ceiling().gradient(&hx) / c_f
        - pair.source().ceiling().gradient(x) * (c_g / (c_f * c_f));
    let k = c_g / c_f;
    Ok(Matrix3::new(
        dh[(0, 0)],
        dh[(0, 1)],
        0.0,
        dh[(1, 0)],
        dh[(1, 1)],
        0.0,
        p.height * grad_k[0],
        p.height * grad_k[1],
        k,
    ))
}

/// Central differences of `map` at an interior point of `source`.
///
/// Base perturbations wrap mod 1; the height perturbation must stay strictly
/// inside every fiber the stencil touches, otherwise
/// [`Error::StepTooLarge`] is returned.
pub fn central_difference_jacobian<M: SuspensionMap + ?Sized>(
    map: &M,
    source: &SuspensionSystem,
    p: &SuspensionPoint,
    step: f64,
) -> Result<Matrix3<f64>> {
    if !(step > 0.0 && step < 0.25) {
        return Err(Error::StepTooLarge { step });
    }
    let (raw, h) = quantize_offset(step);
    let shifted = |col: usize, sign: bool| {
        let mut r = p.base.raw();
        r[col] = if sign {
            r[col].wrapping_add(raw)
        } else {
            r[col].wrapping_sub(raw)
        };
        TorusPoint::from_raw(r)
    };
    let stencil = [shifted(0, true), shifted(0, false), shifted(1, true), shifted(1, false)];
    let lowest_roof = stencil
        .iter()
        .chain(std::iter::once(&p.base))
        .map(|b| source.roof(b))
        .fold(f64::INFINITY, f64::min);
    if p.height - step <= 0.0 || p.height + step >= lowest_roof {
        return Err(Error::StepTooLarge { step });
    }

    let (center, _) = map.map_representative(&p.base, p.height)?;
    let mut jac = Matrix3::zeros();
    let mut fill = |col: usize, plus: (TorusPoint, f64), minus: (TorusPoint, f64), width: f64| {
        let dp = center.displacement_to(&plus.0);
        let dm = center.displacement_to(&minus.0);
        jac[(0, col)] = (dp[0] - dm[0]) / width;
        jac[(1, col)] = (dp[1] - dm[1]) / width;
        jac[(2, col)] = (plus.1 - minus.1) / width;
    };
    for col in 0..2 {
        let plus = map.map_representative(&stencil[2 * col], p.height)?;
        let minus = map.map_representative(&stencil[2 * col + 1], p.height)?;
        fill(col, plus, minus, 2.0 * h);
    }
    let (up, down) = (p.height + step, p.height - step);
    let plus = map.map_representative(&p.base, up)?;
    let minus = map.map_representative(&p.base, down)?;
    fill(2, plus, minus, up - down);
    Ok(jac)
}

/// Central differences with one Richardson level: `(4·D(h/2) − D(h)) / 3`.
pub fn fd_jacobian<M: SuspensionMap + ?Sized>(
    map: &M,
    source: &SuspensionSystem,
    p: &SuspensionPoint,
    step: f64,
) -> Result<Matrix3<f64>> {
    let coarse = central_difference_jacobian(map, source, p, step)?;
    let fine = central_difference_jacobian(map, source, p, 0.5 * step)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

fn rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|r| [m[(r, 0)], m[(r, 1)], m[(r, 2)]])
}

/// Finite-difference Jacobian at one point, optionally compared with an
/// analytic one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JacobianReport {
    pub x1: f64,
    pub x2: f64,
    pub s: f64,
    pub analytic: Option<[[f64; 3]; 3]>,
    pub fd: [[f64; 3]; 3],
    pub max_abs_error: Option<f64>,
    pub determinant: f64,
    pub fd_step: f64,
    pub richardson_order: u32,
}

impl JacobianReport {
    pub fn new(p: &SuspensionPoint, analytic: Option<Matrix3<f64>>, fd: Matrix3<f64>, step: f64) -> Self {
        Self {
            x1: p.base.x1(),
            x2: p.base.x2(),
            s: p.height,
            analytic: analytic.as_ref().map(rows),
            fd: rows(&fd),
            max_abs_error: analytic.map(|a| (a - fd).abs().max()),
            determinant: fd.determinant(),
            fd_step: step,
            richardson_order: 1,
        }
    }
}

/// Which side of the cross section a chart point is represented on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `(anchor + u, σ)` with `σ ≥ 0`.
    Above,
    /// `(f⁻¹(anchor + u), c(f⁻¹(anchor + u)) + σ)` with `σ ≤ 0`.
    Below,
}

/// Flow-box chart around a point of the cross section:
/// `(u₁, u₂, σ) ↦ φ_σ(anchor + u, 0)`.
#[derive(Clone, Copy, Debug)]
pub struct SectionChart<'a> {
    system: &'a SuspensionSystem,
    anchor: TorusPoint,
}

impl<'a> SectionChart<'a> {
    /// Largest admissible `|u|` per coordinate.
    pub const BASE_RADIUS: f64 = 0.25;

    pub fn new(system: &'a SuspensionSystem, anchor: TorusPoint) -> Self {
        Self { system, anchor }
    }

    pub fn anchor(&self) -> TorusPoint {
        self.anchor
    }

    /// Largest admissible `|σ|`.
    pub fn time_radius(&self) -> f64 {
        0.5 * self.system.ceiling().alpha()
    }

    /// Representative of the chart point, on the requested side.
    pub fn to_representative(&self, u: [u64; 2], sigma: f64, side: Side) -> (TorusPoint, f64) {
        let on_section = self.anchor.add(&TorusPoint::from_raw(u));
        match side {
            Side::Above => (on_section, sigma),
            Side::Below => {
                let below = self.system.map().apply_inverse(&on_section);
                (below, self.system.roof(&below) + sigma)
            }
        }
    }

    /// Chart coordinates of a representative with height in `[0, c(base)]`.
    pub fn coordinates(&self, base: &TorusPoint, height: f64) -> Result<[f64; 3]> {
        let roof = self.system.roof(base);
        let (on_section, sigma) = if height <= 0.5 * roof {
            (*base, height)
        } else {
            (self.system.map().apply(base), height - roof)
        };
        let [u1, u2] = self.anchor.displacement_to(&on_section);
        if u1.abs() >= Self::BASE_RADIUS || u2.abs() >= Self::BASE_RADIUS || sigma.abs() >= self.time_radius() {
            return Err(Error::StepTooLarge {
                step: u1.abs().max(u2.abs()).max(sigma.abs()),
            });
        }
        Ok([u1, u2, sigma])
    }
}

/// One-sided Jacobians of a map across the seam `(x, c_f(x)) ∼ (f(x), 0)`,
/// in flow-box charts at `f(x)` and at its image.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionCheck {
    pub above: Matrix3<f64>,
    pub below: Matrix3<f64>,
    /// Largest entrywise difference between the two sides.
    pub mismatch: f64,
}

/// Serializable summary of a [`SectionCheck`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectionReport {
    pub x1: f64,
    pub x2: f64,
    pub above: [[f64; 3]; 3],
    pub below: [[f64; 3]; 3],
    pub mismatch: f64,
    pub fd_step: f64,
}

impl SectionReport {
    pub fn new(x: &TorusPoint, check: &SectionCheck, step: f64) -> Self {
        Self {
            x1: x.x1(),
            x2: x.x2(),
            above: rows(&check.above),
            below: rows(&check.below),
            mismatch: check.mismatch,
            fd_step: step,
        }
    }
}

/// Compares the derivative of `map` computed from above and from below the
/// source cross section at `f(x)`.
///
/// Base columns use central differences along the section; the flow-time
/// column uses one-sided differences away from the seam. Each is refined by
/// one Richardson level.
pub fn cross_section_check<M: SuspensionMap + ?Sized>(
    map: &M,
    pair: &EquivalencePair,
    x: &TorusPoint,
    step: f64,
) -> Result<SectionCheck> {
    let source = SectionChart::new(pair.source(), pair.source().map().apply(x));
    let hfx = pair.conjugacy().apply(&source.anchor());
    let target = SectionChart::new(pair.target(), hfx);
    if !(step > 0.0 && 2.0 * step < source.time_radius().min(target.time_radius())) {
        return Err(Error::StepTooLarge { step });
    }
    let in_chart = |u: [u64; 2], sigma: f64, side: Side| -> Result<[f64; 3]> {
        let (base, height) = source.to_representative(u, sigma, side);
        let (img, img_height) = map.map_representative(&base, height)?;
        target.coordinates(&img, img_height)
    };
    let one_side = |side: Side| -> Result<Matrix3<f64>> {
        let sign = match side {
            Side::Above => 1.0,
            Side::Below => -1.0,
        };
        let center = in_chart([0, 0], 0.0, side)?;
        let column = |col: usize, h: f64| -> Result<[f64; 3]> {
            if col == 2 {
                let g = in_chart([0, 0], sign * h, side)?;
                return Ok([0, 1, 2].map(|i| sign * (g[i] - center[i]) / h));
            }
            let (raw, realized) = quantize_offset(h);
            let mut plus = [0u64; 2];
            let mut minus = [0u64; 2];
            plus[col] = raw;
            minus[col] = raw.wrapping_neg();
            let gp = in_chart(plus, 0.0, side)?;
            let gm = in_chart(minus, 0.0, side)?;
            Ok([0, 1, 2].map(|i| (gp[i] - gm[i]) / (2.0 * realized)))
        };
        let mut jac = Matrix3::zeros();
        for col in 0..3 {
            let coarse = column(col, step)?;
            let fine = column(col, 0.5 * step)?;
            // one-sided differences are first order, central ones second
            let weight = if col == 2 { 2.0 } else { 4.0 };
            for row in 0..3 {
                jac[(row, col)] = (weight * fine[row] - coarse[row]) / (weight - 1.0);
            }
        }
        Ok(jac)
    };
    let above = one_side(Side::Above)?;
    let below = one_side(Side::Below)?;
    Ok(SectionCheck {
        mismatch: (above - below).abs().max(),
        above,
        below,
    })
}

/// Outcome of [`point_differentiability_probe`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeResult {
    /// Least-squares slope of `log|h(x+δv) − h(x)|` against `log δ`; absent
    /// when some increment vanished.
    pub slope: Option<f64>,
    /// Set when an increment was exactly zero, so `h` cannot be locally
    /// invertible at `x`.
    pub degenerate: bool,
}

/// Dyadic scales `2⁻⁴ … 2⁻²⁰` used by the probe.
pub const PROBE_EXPONENTS: std::ops::RangeInclusive<i32> = 4..=20;

/// Scaling exponent of `|h(x + δv) − h(x)|` as `δ → 0`, averaged over
/// `directions` random unit vectors. A slope near 1 is what a differentiable
/// `h` with invertible derivative produces; Hölder singularities show up as
/// smaller slopes.
pub fn point_differentiability_probe<H>(h: H, x: &TorusPoint, directions: usize, seed: u64) -> ProbeResult
where
    H: Fn(&TorusPoint) -> TorusPoint,
{
    let mut rng = SplitMix64::seed_from_u64(seed);
    let dirs: Vec<[f64; 2]> = (0..directions.max(1))
        .map(|_| {
            let angle = rng.gen::<f64>() * std::f64::consts::TAU;
            [angle.cos(), angle.sin()]
        })
        .collect();
    let hx = h(x);
    let mut points = Vec::new();
    for k in PROBE_EXPONENTS {
        let delta = (-k as f64).exp2();
        let mut mean_log = 0.0;
        for v in &dirs {
            let moved = h(&x.translate(delta * v[0], delta * v[1]));
            let d = hx.distance(&moved);
            if d == 0.0 {
                return ProbeResult {
                    slope: None,
                    degenerate: true,
                };
            }
            mean_log += d.ln();
        }
        points.push((delta.ln(), mean_log / dirs.len() as f64));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    ProbeResult {
        slope: Some(sxy / sxx),
        degenerate: false,
    }
}

/// Jacobian of a base conjugacy as a 2×2 block, for callers assembling
/// their own reports.
pub fn base_block(jac: &Matrix3<f64>) -> Matrix2<f64> {
    jac.fixed_view::<2, 2>(0, 0).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ceiling::{CeilingFunction, CosineTerm};
    use crate::smoothing::BumpShape;
    use crate::torus::{BaseConjugacy, CustomConjugacy, HyperbolicToralMap, UnimodularMatrix};

    fn constants(cf: f64, cg: f64, h: BaseConjugacy) -> EquivalencePair {
        let f = HyperbolicToralMap::cat();
        let g = h.conjugate_map(&f).unwrap();
        EquivalencePair::new(
            SuspensionSystem::new(f, CeilingFunction::constant(cf).unwrap()),
            SuspensionSystem::new(g, CeilingFunction::constant(cg).unwrap()),
            h,
        )
        .unwrap()
    }

    fn demo() -> EquivalencePair {
        let f = HyperbolicToralMap::cat();
        let h = BaseConjugacy::Linear(UnimodularMatrix::new(1, 1, 0, 1).unwrap());
        let g = h.conjugate_map(&f).unwrap();
        let cf = CeilingFunction::trig(
            1.0,
            vec![CosineTerm::new(0.1, 1, 0, 0.0), CosineTerm::new(0.05, 1, 1, 0.3)],
        )
        .unwrap();
        let cg = CeilingFunction::trig(1.2, vec![CosineTerm::new(0.15, 0, 1, 0.7)]).unwrap();
        EquivalencePair::new(SuspensionSystem::new(f, cf), SuspensionSystem::new(g, cg), h).unwrap()
    }

    #[test]
    fn analytic_examples() {
        let p = SuspensionPoint::new(TorusPoint::new(0.3, 0.4), 0.5);
        let id = constants(1.0, 1.0, BaseConjugacy::Identity);
        assert_eq!(analytic_jacobian_piecewise(&id, &p).unwrap(), Matrix3::identity());
        let doubled = constants(1.0, 2.0, BaseConjugacy::Identity);
        assert_eq!(
            analytic_jacobian_piecewise(&doubled, &p).unwrap(),
            Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, 2.0))
        );
        let on_section = SuspensionPoint::new(p.base, 0.0);
        assert_eq!(analytic_jacobian_piecewise(&id, &on_section), Err(Error::OnSection));
    }

    #[test]
    fn identity_map_differentiates_to_identity() {
        let pair = demo();
        let p = SuspensionPoint::new(TorusPoint::new(0.7, 0.2), 0.4);
        let jac = fd_jacobian(&IdentityMap, pair.source(), &p, DEFAULT_STEP).unwrap();
        assert!((jac - Matrix3::identity()).abs().max() < 1e-10);
    }

    #[test]
    fn linear_conjugacy_base_block() {
        let b = UnimodularMatrix::new(2, 1, 1, 1).unwrap();
        let pair = constants(1.0, 1.5, BaseConjugacy::Linear(b));
        let p = SuspensionPoint::new(TorusPoint::new(0.1, 0.9), 0.3);
        let jac = fd_jacobian(&pair, pair.source(), &p, DEFAULT_STEP).unwrap();
        assert!((base_block(&jac) - b.to_matrix()).abs().max() < 1e-9);
    }

    #[test]
    fn fd_matches_analytic_in_interior() {
        let pair = demo();
        let p = SuspensionPoint::new(TorusPoint::new(0.31, 0.77), 0.45);
        let fd = fd_jacobian(&pair, pair.source(), &p, DEFAULT_STEP).unwrap();
        let an = analytic_jacobian_piecewise(&pair, &p).unwrap();
        assert!((fd - an).abs().max() < 1e-6);
    }

    #[test]
    fn step_must_stay_in_fiber() {
        let pair = demo();
        let p = SuspensionPoint::new(TorusPoint::new(0.31, 0.77), 1e-6);
        assert!(matches!(
            fd_jacobian(&pair, pair.source(), &p, 1e-5),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn chart_round_trip() {
        let pair = demo();
        let chart = SectionChart::new(pair.source(), TorusPoint::new(0.2, 0.6));
        let (raw, u) = quantize_offset(0.01);
        for side in [Side::Above, Side::Below] {
            let sigma = match side {
                Side::Above => 0.05,
                Side::Below => -0.05,
            };
            let (b, s) = chart.to_representative([raw, 0], sigma, side);
            let c = chart.coordinates(&b, s).unwrap();
            assert!((c[0] - u).abs() < 1e-15 && c[1].abs() < 1e-15);
            assert!((c[2] - sigma).abs() < 1e-15);
        }
    }

    #[test]
    fn seam_check_for_identity_pair() {
        let pair = constants(1.2, 1.2, BaseConjugacy::Identity);
        let se = SmoothedEquivalence::new(pair.clone(), BumpShape::default());
        let x = TorusPoint::new(0.45, 0.15);
        assert!(cross_section_check(&se, &pair, &x, 1e-4).unwrap().mismatch < 1e-9);
        assert!(cross_section_check(&pair, &pair, &x, 1e-4).unwrap().mismatch < 1e-9);
    }

    #[test]
    fn smoothing_repairs_the_seam() {
        let pair = demo();
        let se = SmoothedEquivalence::new(pair.clone(), BumpShape::default());
        let x = TorusPoint::new(0.45, 0.15);
        let fx = pair.source().map().apply(&x);
        let jump = (pair.fiber_scale(&x) - pair.fiber_scale(&fx)).abs();
        let rough = cross_section_check(&pair, &pair, &x, 1e-4).unwrap();
        let smooth = cross_section_check(&se, &pair, &x, 1e-4).unwrap();
        assert!(jump > 0.02);
        assert!((rough.mismatch - jump).abs() < 1e-6, "{} vs {jump}", rough.mismatch);
        assert!(smooth.mismatch < 1e-5);
        assert!(smooth.above.determinant() > 0.0);
    }

    #[test]
    fn probe_on_linear_map() {
        let b = UnimodularMatrix::new(2, 1, 1, 1).unwrap();
        let r = point_differentiability_probe(|p| b.apply(p), &TorusPoint::new(0.3, 0.3), 8, 1);
        assert!((r.slope.unwrap() - 1.0).abs() < 1e-3);
        assert!(!r.degenerate);
    }

    /// Circle homeomorphism `u ↦ ½ + sign(u−½)·√(|u−½|/2)`, Hölder-½ at ½.
    fn sqrt_distortion(p: &TorusPoint) -> TorusPoint {
        let u = p.x1() - 0.5;
        TorusPoint::new(0.5 + u.signum() * (u.abs() / 2.0).sqrt(), p.x2())
    }

    #[test]
    fn probe_detects_holder_singularity() {
        let generic = point_differentiability_probe(sqrt_distortion, &TorusPoint::new(0.2, 0.4), 8, 2);
        assert!((generic.slope.unwrap() - 1.0).abs() < 0.05);
        let singular = point_differentiability_probe(sqrt_distortion, &TorusPoint::new(0.5, 0.4), 8, 2);
        assert!((singular.slope.unwrap() - 0.5).abs() < 0.05);
        // wrapping in a declared-custom conjugacy changes nothing
        let h = BaseConjugacy::Custom(CustomConjugacy::new(sqrt_distortion));
        let again = point_differentiability_probe(|p| h.apply(p), &TorusPoint::new(0.5, 0.4), 8, 2);
        assert_eq!(again, singular);
    }

    #[test]
    fn probe_flags_constant_map() {
        let r = point_differentiability_probe(|_| TorusPoint::ORIGIN, &TorusPoint::new(0.3, 0.3), 4, 0);
        assert!(r.degenerate && r.slope.is_none());
    }
}
