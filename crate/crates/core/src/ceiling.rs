//! Roof functions for suspensions: smooth, positive, with a certified
//! lower bound.

use std::f64::consts::TAU;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::torus::{BaseConjugacy, HyperbolicToralMap, TorusPoint};

/// `amplitude · cos(2π(k₁x₁ + k₂x₂) + phase)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineTerm {
    pub amplitude: f64,
    pub frequency: [i64; 2],
    pub phase: f64,
}

impl CosineTerm {
    pub fn new(amplitude: f64, k1: i64, k2: i64, phase: f64) -> Self {
        Self {
            amplitude,
            frequency: [k1, k2],
            phase,
        }
    }

    /// `k·x mod 1`, computed exactly on the fixed-point grid.
    fn turns(&self, x: &TorusPoint) -> f64 {
        let [r1, r2] = x.raw();
        let [k1, k2] = self.frequency;
        let raw = (k1 as u64).wrapping_mul(r1).wrapping_add((k2 as u64).wrapping_mul(r2));
        TorusPoint::from_raw([raw, 0]).x1()
    }

    fn angle(&self, x: &TorusPoint) -> f64 {
        TAU * self.turns(x) + self.phase
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CeilingKind {
    Constant(f64),
    /// `c0 + Σ terms`.
    Trig {
        c0: f64,
        terms: Vec<CosineTerm>,
    },
}

/// A positive roof function `c` with `c(x) ≥ alpha > 0` everywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct CeilingFunction {
    kind: CeilingKind,
    alpha: f64,
}

impl CeilingFunction {
    pub fn constant(c0: f64) -> Result<Self> {
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(Error::InvalidCeiling(format!(
                "constant ceiling must be positive, got {c0}"
            )));
        }
        Ok(Self {
            kind: CeilingKind::Constant(c0),
            alpha: c0,
        })
    }

    /// A cosine polynomial; the certified bound is `c0 − Σ|amplitude|`.
    pub fn trig(c0: f64, terms: Vec<CosineTerm>) -> Result<Self> {
        let finite = c0.is_finite() && terms.iter().all(|t| t.amplitude.is_finite() && t.phase.is_finite());
        if !finite {
            return Err(Error::InvalidCeiling("non-finite coefficient".into()));
        }
        let alpha = c0 - terms.iter().map(|t| t.amplitude.abs()).sum::<f64>();
        if alpha <= 0.0 {
            return Err(Error::InvalidCeiling(format!(
                "c0 - sum|amplitude| = {alpha} is not positive"
            )));
        }
        Ok(Self {
            kind: CeilingKind::Trig { c0, terms },
            alpha,
        })
    }

    /// Replaces the certified bound by a smaller positive one.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= self.alpha) {
            return Err(Error::InvalidCeiling(format!(
                "alpha {alpha} must lie in (0, {}]",
                self.alpha
            )));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn kind(&self) -> &CeilingKind {
        &self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eval(&self, x: &TorusPoint) -> f64 {
        match &self.kind {
            CeilingKind::Constant(c0) => *c0,
            CeilingKind::Trig { c0, terms } => c0 + terms.iter().map(|t| t.amplitude * t.angle(x).cos()).sum::<f64>(),
        }
    }

    pub fn gradient(&self, x: &TorusPoint) -> Vector2<f64> {
        match &self.kind {
            CeilingKind::Constant(_) => Vector2::zeros(),
            CeilingKind::Trig { terms, .. } => terms.iter().fold(Vector2::zeros(), |acc, t| {
                let scale = -t.amplitude * t.angle(x).sin() * TAU;
                acc + Vector2::new(t.frequency[0] as f64, t.frequency[1] as f64) * scale
            }),
        }
    }

    /// `Σ_{i=0}^{n-1} c(f^i(x))`.
    pub fn birkhoff_sum(&self, f: &HyperbolicToralMap, x: &TorusPoint, n: usize) -> f64 {
        let mut sum = 0.0;
        let mut y = *x;
        for _ in 0..n {
            sum += self.eval(&y);
            y = f.apply(&y);
        }
        sum
    }

    /// Birkhoff sums extended to negative `n` by the cocycle rule:
    /// `S_{-m}(x) = -Σ_{i=1}^{m} c(f^{-i}(x))`.
    pub fn signed_birkhoff_sum(&self, f: &HyperbolicToralMap, x: &TorusPoint, n: i64) -> f64 {
        if n >= 0 {
            return self.birkhoff_sum(f, x, n as usize);
        }
        let mut sum = 0.0;
        let mut y = *x;
        for _ in 0..n.unsigned_abs() {
            y = f.apply_inverse(&y);
            sum -= self.eval(&y);
        }
        sum
    }

    /// The ceiling `c∘h` for an analytic conjugacy `h`, again a cosine
    /// polynomial. `None` for custom conjugacies.
    pub fn pullback(&self, h: &BaseConjugacy) -> Option<Self> {
        let b = h.linear_part()?;
        let offset = match h {
            BaseConjugacy::Affine { offset, .. } => *offset,
            _ => TorusPoint::ORIGIN,
        };
        let kind = match &self.kind {
            CeilingKind::Constant(c0) => CeilingKind::Constant(*c0),
            CeilingKind::Trig { c0, terms } => {
                let bt = b.transpose().entries();
                let terms = terms
                    .iter()
                    .map(|t| {
                        let [k1, k2] = t.frequency;
                        // k·(Bx + v) = (Bᵀk)·x + k·v
                        let phase = t.phase + TAU * t.turns(&offset);
                        CosineTerm::new(t.amplitude, bt[0] * k1 + bt[1] * k2, bt[2] * k1 + bt[3] * k2, phase)
                    })
                    .collect();
                CeilingKind::Trig { c0: *c0, terms }
            }
        };
        Some(Self {
            kind,
            alpha: self.alpha,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::UnimodularMatrix;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::SplitMix64;
    use std::f64::consts::PI;

    fn demo() -> CeilingFunction {
        CeilingFunction::trig(
            1.0,
            vec![
                CosineTerm::new(0.1, 1, 0, 0.0),
                CosineTerm::new(0.05, 1, 1, 0.3),
                CosineTerm::new(-0.03, 0, 2, 1.1),
            ],
        )
        .unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let c = CeilingFunction::constant(1.0).unwrap();
        assert_eq!(c.eval(&TorusPoint::new(0.3, 0.9)), 1.0);
        let t = CeilingFunction::trig(1.0, vec![CosineTerm::new(0.1, 1, 0, 0.0)]).unwrap();
        assert!((t.eval(&TorusPoint::new(0.0, 0.0)) - 1.1).abs() < 1e-15);
        assert!((t.eval(&TorusPoint::new(0.5, 0.0)) - 0.9).abs() < 1e-15);
        assert!((t.alpha() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn construction_rejects_nonpositive_bounds() {
        assert!(CeilingFunction::constant(0.0).is_err());
        assert!(CeilingFunction::constant(-1.0).is_err());
        assert!(CeilingFunction::trig(0.5, vec![CosineTerm::new(0.5, 1, 0, 0.0)]).is_err());
        assert!(demo().with_alpha(0.0).is_err());
        assert!(demo().with_alpha(0.9).is_err());
        assert_eq!(demo().with_alpha(0.5).unwrap().alpha(), 0.5);
    }

    #[test]
    fn gradient_examples() {
        let c = CeilingFunction::constant(2.0).unwrap();
        assert_eq!(c.gradient(&TorusPoint::new(0.1, 0.2)), Vector2::zeros());
        let t = CeilingFunction::trig(1.0, vec![CosineTerm::new(0.1, 1, 0, 0.0)]).unwrap();
        let g = t.gradient(&TorusPoint::new(0.25, 0.0));
        assert!((g[0] + 0.2 * PI).abs() < 1e-14);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let c = demo();
        let mut rng = SplitMix64::seed_from_u64(5);
        let h = 1e-5;
        for _ in 0..100 {
            let x = TorusPoint::new(rng.gen(), rng.gen());
            let g = c.gradient(&x);
            let fd = Vector2::new(
                (c.eval(&x.translate(h, 0.0)) - c.eval(&x.translate(-h, 0.0))) / (2.0 * h),
                (c.eval(&x.translate(0.0, h)) - c.eval(&x.translate(0.0, -h))) / (2.0 * h),
            );
            // relative to the gradient scale, which is O(1)
            assert!((g - fd).norm() / g.norm().max(1.0) < 1e-7, "{g} vs {fd}");
        }
    }

    #[test]
    fn birkhoff_sum_examples() {
        let f = HyperbolicToralMap::cat();
        let one = CeilingFunction::constant(1.0).unwrap();
        let x = TorusPoint::new(0.1, 0.2);
        assert_eq!(one.birkhoff_sum(&f, &x, 4), 4.0);
        assert_eq!(demo().birkhoff_sum(&f, &x, 0), 0.0);

        // independent loop: iterate the matrix on f64 coordinates and
        // evaluate the cosine polynomial directly
        let (mut a, mut b) = (0.1f64, 0.2f64);
        let mut naive = 0.0;
        for _ in 0..5 {
            naive += 1.0 + 0.1 * (2.0 * PI * a).cos() + 0.05 * (2.0 * PI * (a + b) + 0.3).cos()
                - 0.03 * (2.0 * PI * 2.0 * b + 1.1).cos();
            let (na, nb) = ((2.0 * a + b).rem_euclid(1.0), (a + b).rem_euclid(1.0));
            a = na;
            b = nb;
        }
        assert!((demo().birkhoff_sum(&f, &x, 5) - naive).abs() < 1e-12);
    }

    #[test]
    fn birkhoff_cocycle_identity() {
        let f = HyperbolicToralMap::cat();
        let c = demo();
        let mut rng = SplitMix64::seed_from_u64(9);
        for _ in 0..200 {
            let x = TorusPoint::new(rng.gen(), rng.gen());
            let n = rng.gen_range(0..=50usize);
            let k = rng.gen_range(0..=50usize);
            let lhs = c.birkhoff_sum(&f, &x, n + k);
            let rhs = c.birkhoff_sum(&f, &x, n) + c.birkhoff_sum(&f, &f.iterate(&x, n as i64), k);
            assert!((lhs - rhs).abs() < 1e-12);
            assert!(c.birkhoff_sum(&f, &x, n + 1) - c.birkhoff_sum(&f, &x, n) >= c.alpha());
        }
    }

    #[test]
    fn signed_sums_extend_the_cocycle() {
        let f = HyperbolicToralMap::cat();
        let c = demo();
        let x = TorusPoint::new(0.37, 0.81);
        for n in -10..=0i64 {
            // S_n(x) + S_{-n}(f^n x) = 0
            let back = c.signed_birkhoff_sum(&f, &x, n);
            let fwd = c.birkhoff_sum(&f, &f.iterate(&x, n), n.unsigned_abs() as usize);
            assert!((back + fwd).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_certified_on_grid() {
        let c = demo();
        let n = 256;
        let min = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| c.eval(&TorusPoint::new(i as f64 / n as f64, j as f64 / n as f64)))
            .fold(f64::INFINITY, f64::min);
        assert!(min >= c.alpha() - 1e-9);
    }

    #[test]
    fn pullback_is_composition() {
        let b = UnimodularMatrix::new(1, 1, 0, 1).unwrap();
        let h = BaseConjugacy::Affine {
            matrix: b,
            offset: TorusPoint::new(0.25, 0.5),
        };
        let c = demo();
        let pulled = c.pullback(&h).unwrap();
        let mut rng = SplitMix64::seed_from_u64(1);
        for _ in 0..1000 {
            let x = TorusPoint::new(rng.gen(), rng.gen());
            assert!((pulled.eval(&x) - c.eval(&h.apply(&x))).abs() < 1e-14);
        }
        let lin = BaseConjugacy::Linear(b);
        let pulled = c.pullback(&lin).unwrap();
        let x = TorusPoint::new(0.3141, 0.2718);
        assert_eq!(pulled.eval(&x), c.eval(&lin.apply(&x)));
    }
}
