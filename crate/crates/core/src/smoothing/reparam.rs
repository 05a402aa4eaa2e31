//! The per-fiber reparametrization `Φₓ(t) = ∫₀ᵗ (φₓ + 1)`.

use std::sync::OnceLock;

use super::bump::{BumpShape, BumpSpec};
use super::quadrature::adaptive_simpson;
use crate::error::{Error, Result};
use crate::torus::TorusPoint;

/// Number of nodes in the cached table of `Φₓ` over the bump support.
pub const GRID_NODES: usize = 1024;

/// Absolute quadrature tolerance for the whole table.
pub const FIBER_TOLERANCE: f64 = 1e-11;

/// Slack allowed on the domain `[0, c_f(x)]` before reporting
/// [`Error::OutOfDomain`].
const DOMAIN_SLACK: f64 = 1e-12;

/// Monotone map of the fiber `[0, c_f(x)]` onto `[0, c_g(h(x))]`, equal to
/// the identity on `[0, ε]` and to `t + c_g(h(x)) − c_f(x)` on
/// `[c_f(x) − ε, c_f(x)]`.
#[derive(Debug)]
pub struct FiberReparam {
    x: TorusPoint,
    epsilon: f64,
    c_f_x: f64,
    c_g_hx: f64,
    bump: BumpSpec,
    table: OnceLock<Result<HermiteTable>>,
}

impl FiberReparam {
    /// Sets up the bump on `(ε, c_f(x) − ε)` with integral
    /// `c_g(h(x)) − c_f(x)` and checks that `1 + φₓ` stays positive.
    ///
    /// The interpolation table is built on first use inside the support.
    pub fn build(x: TorusPoint, epsilon: f64, c_f_x: f64, c_g_hx: f64, shape: BumpShape) -> Result<Self> {
        let bump = BumpSpec::new(epsilon, c_f_x - epsilon, c_g_hx - c_f_x, shape)?;
        let rep = Self {
            x,
            epsilon,
            c_f_x,
            c_g_hx,
            bump,
            table: OnceLock::new(),
        };
        let margin = rep.min_derivative();
        if margin <= 0.0 {
            return Err(Error::MonotonicityViolation {
                x1: x.x1(),
                x2: x.x2(),
                min_derivative: margin,
            });
        }
        Ok(rep)
    }

    pub fn base(&self) -> TorusPoint {
        self.x
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn source_height(&self) -> f64 {
        self.c_f_x
    }

    pub fn target_height(&self) -> f64 {
        self.c_g_hx
    }

    pub fn bump(&self) -> &BumpSpec {
        &self.bump
    }

    /// `min (1 + φₓ)` over the fiber.
    pub fn min_derivative(&self) -> f64 {
        1.0 + self.bump.min_value()
    }

    /// `(Φₓ(t), Φₓ'(t))` for `t ∈ [0, c_f(x)]`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        if !(t >= -DOMAIN_SLACK && t <= self.c_f_x + DOMAIN_SLACK) {
            return Err(Error::OutOfDomain {
                value: t,
                upper: self.c_f_x,
            });
        }
        Ok((self.value(t)?, self.derivative(t)))
    }

    /// `Φₓ(t)` without the domain check; linear continuation outside the
    /// fiber.
    pub fn value(&self, t: f64) -> Result<f64> {
        if t <= self.bump.a() || self.bump.c() == 0.0 {
            return Ok(t);
        }
        if t >= self.bump.b() {
            return Ok(t + self.bump.c());
        }
        let table = self
            .table
            .get_or_init(|| HermiteTable::build(&self.bump))
            .as_ref()
            .map_err(Clone::clone)?;
        Ok(table.eval(t))
    }

    /// `1 + φₓ(t)`, evaluated from the bump directly.
    pub fn derivative(&self, t: f64) -> f64 {
        1.0 + self.bump.eval(t)
    }
}

/// Piecewise-cubic Hermite interpolant of `Φ(t) = t + ∫ₐᵗ φ` on a uniform
/// grid over the bump support, with node slopes `1 + φ` limited by the
/// Fritsch–Carlson condition so the interpolant stays monotone.
#[derive(Debug)]
struct HermiteTable {
    a: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl HermiteTable {
    fn build(bump: &BumpSpec) -> Result<Self> {
        let (a, b) = (bump.a(), bump.b());
        let cells = GRID_NODES - 1;
        let step = (b - a) / cells as f64;
        let node = |j: usize| if j == cells { b } else { a + j as f64 * step };
        let cell_tol = FIBER_TOLERANCE / cells as f64;

        let mut cumulative = Vec::with_capacity(GRID_NODES);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for j in 0..cells {
            acc += adaptive_simpson(|t| bump.eval(t), node(j), node(j + 1), cell_tol)?;
            cumulative.push(acc);
        }
        // pin the last node to the prescribed integral so Φ is continuous at b
        let rescale = if acc != 0.0 { bump.c() / acc } else { 1.0 };

        let values: Vec<f64> = (0..GRID_NODES).map(|j| node(j) + cumulative[j] * rescale).collect();
        let mut slopes: Vec<f64> = (0..GRID_NODES).map(|j| 1.0 + bump.eval(node(j))).collect();

        for j in 0..cells {
            let secant = (values[j + 1] - values[j]) / (node(j + 1) - node(j));
            if secant <= 0.0 {
                slopes[j] = 0.0;
                slopes[j + 1] = 0.0;
                continue;
            }
            let (al, be) = (slopes[j] / secant, slopes[j + 1] / secant);
            let norm = al.hypot(be);
            if norm > 3.0 {
                let scale = 3.0 / norm;
                slopes[j] = scale * al * secant;
                slopes[j + 1] = scale * be * secant;
            }
        }
        Ok(Self {
            a,
            step,
            values,
            slopes,
        })
    }

    fn eval(&self, t: f64) -> f64 {
        let cells = self.values.len() - 1;
        let j = (((t - self.a) / self.step).floor().max(0.0) as usize).min(cells - 1);
        let t0 = self.a + j as f64 * self.step;
        let h = self.step;
        let u = (t - t0) / h;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        h00 * self.values[j] + h10 * h * self.slopes[j] + h01 * self.values[j + 1] + h11 * h * self.slopes[j + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fiber(c_f: f64, c_g: f64, shape: BumpShape) -> FiberReparam {
        FiberReparam::build(TorusPoint::new(0.1, 0.2), 0.3, c_f, c_g, shape).unwrap()
    }

    #[test]
    fn equal_heights_give_identity() {
        let rep = fiber(1.0, 1.0, BumpShape::default());
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            assert_eq!(rep.eval(t).unwrap(), (t, 1.0));
        }
    }

    #[test]
    fn endpoint_and_plateau_examples() {
        for shape in [BumpShape::Exponential, BumpShape::default()] {
            let rep = fiber(1.1, 1.4, shape);
            assert_eq!(rep.eval(0.0).unwrap(), (0.0, 1.0));
            assert_eq!(rep.eval(0.3).unwrap(), (0.3, 1.0));
            let (v, d) = rep.eval(1.1).unwrap();
            assert!((v - 1.4).abs() < 1e-12);
            assert_eq!(d, 1.0);
        }
    }

    #[test]
    fn domain_is_enforced() {
        let rep = fiber(1.0, 1.2, BumpShape::default());
        assert!(matches!(rep.eval(-0.1), Err(Error::OutOfDomain { .. })));
        assert!(matches!(rep.eval(1.01), Err(Error::OutOfDomain { .. })));
        assert!(rep.eval(f64::NAN).is_err());
    }

    #[test]
    fn table_matches_direct_quadrature() {
        for (shape, c_g) in [
            (BumpShape::Exponential, 1.5),
            (BumpShape::default(), 1.5),
            (BumpShape::default(), 0.9),
        ] {
            let rep = fiber(1.3, c_g, shape);
            for i in 1..40 {
                let t = 0.3 + i as f64 * 0.7 / 40.0;
                let direct = t + adaptive_simpson(|s| rep.bump().eval(s), 0.3, t, 1e-13).unwrap();
                // cubic Hermite error h⁴/384·max|φ‴| is ~1e-10 on the plateau shoulders
                assert!((rep.value(t).unwrap() - direct).abs() < 5e-10, "{shape:?} t={t}");
            }
        }
    }

    #[test]
    fn table_is_monotone() {
        let rep = fiber(1.3, 0.8, BumpShape::default());
        let mut prev = rep.value(0.0).unwrap();
        for i in 1..=10_000 {
            let v = rep.value(1.3 * i as f64 / 10_000.0).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn sharp_negative_bump_is_rejected() {
        let err = FiberReparam::build(TorusPoint::ORIGIN, 1.0 / 3.0, 3.0, 1.0, BumpShape::Exponential);
        assert!(matches!(err, Err(Error::MonotonicityViolation { .. })));
        let ok = FiberReparam::build(TorusPoint::ORIGIN, 1.0 / 3.0, 3.0, 1.0, BumpShape::default()).unwrap();
        assert!(ok.min_derivative() > 0.0);
    }
}
