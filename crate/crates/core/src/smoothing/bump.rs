//! Compactly supported C^∞ bumps normalized to a prescribed integral.
//!
//! For `a < b` and any real `c`, [`BumpSpec`] describes a smooth function
//! vanishing outside `(a, b)` whose integral over ℝ is `c`. Two kernels are
//! available: the classical `exp(−1/((t−a)(b−t)))`, and a plateau kernel that
//! is flat in the middle so that its extreme value stays close to its mean.

use super::quadrature::adaptive_simpson;
use crate::error::{Error, Result};

/// `exp(−1/((t−a)(b−t)))` on `(a, b)`, zero elsewhere.
pub fn exponential_kernel(a: f64, b: f64, t: f64) -> f64 {
    if t <= a || t >= b {
        return 0.0;
    }
    (-1.0 / ((t - a) * (b - t))).exp()
}

/// Smooth step: 0 for `u ≤ 0`, 1 for `u ≥ 1`, built from `exp(−1/u²)`.
///
/// Satisfies `S(u) + S(1 − u) = 1`, so it integrates to 1/2 over `[0, 1]`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let rise = (-1.0 / (u * u)).exp();
    let fall = (-1.0 / ((1.0 - u) * (1.0 - u))).exp();
    rise / (rise + fall)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BumpShape {
    Exponential,
    /// Flat top with smooth shoulders. The bump's extreme value is
    /// `(1 + delta)` times its mean over the support.
    Plateau {
        delta: f64,
    },
}

impl Default for BumpShape {
    fn default() -> Self {
        BumpShape::Plateau { delta: 0.1 }
    }
}

/// A bump on `(a, b)` with integral `c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpSpec {
    a: f64,
    b: f64,
    c: f64,
    shape: BumpShape,
    /// Integral of the (peak-normalized) kernel over `[a, b]`.
    kernel_mass: f64,
}

impl BumpSpec {
    pub fn new(a: f64, b: f64, c: f64, shape: BumpShape) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::InvalidBump("non-finite parameter".into()));
        }
        if a >= b {
            return Err(Error::InvalidBump(format!("need a < b, got a = {a}, b = {b}")));
        }
        if let BumpShape::Plateau { delta } = shape {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::InvalidBump(format!("plateau delta {delta} not in (0, 1)")));
            }
        }
        let mut spec = Self {
            a,
            b,
            c,
            shape,
            kernel_mass: 1.0,
        };
        spec.kernel_mass = match shape {
            // each shoulder of width w loses w/2 of mass
            BumpShape::Plateau { .. } => (b - a) - spec.shoulder_width(),
            BumpShape::Exponential => spec.exponential_mass()?,
        };
        Ok(spec)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// The prescribed integral.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn shape(&self) -> BumpShape {
        self.shape
    }

    fn shoulder_width(&self) -> f64 {
        match self.shape {
            BumpShape::Plateau { delta } => (self.b - self.a) * delta / (1.0 + delta),
            BumpShape::Exponential => 0.0,
        }
    }

    fn half_width(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    // Quadrature runs over the offset from the midpoint: abscissas near the
    // peak are then exact, while `a + k·h` would carry rounding of size ulp(a).
    fn exponential_mass(&self) -> Result<f64> {
        let half = self.half_width();
        let kernel = |off| self.kernel_at_offset(off);
        let rough = composite_simpson(kernel, -half, half, 64);
        adaptive_simpson(kernel, -half, half, 1e-14 * rough.max(f64::MIN_POSITIVE))
    }

    /// The kernel scaled to peak value 1.
    ///
    /// The exponential kernel is divided by its midpoint value
    /// `exp(−4/(b−a)²)`, which would otherwise underflow on short supports.
    pub fn kernel(&self, t: f64) -> f64 {
        if t <= self.a || t >= self.b {
            return 0.0;
        }
        self.kernel_at_offset(t - self.midpoint())
    }

    fn kernel_at_offset(&self, off: f64) -> f64 {
        let half = self.half_width();
        if off.abs() >= half {
            return 0.0;
        }
        // t − a and b − t
        let (left, right) = (half + off, half - off);
        match self.shape {
            BumpShape::Exponential => {
                // 1/half² − 1/((t−a)(b−t)) rewritten without cancellation
                (-(off * off) / (half * half * left * right)).exp()
            }
            BumpShape::Plateau { .. } => {
                let w = self.shoulder_width();
                smooth_step(left / w) * smooth_step(right / w)
            }
        }
    }

    /// `c · kernel(t) / ∫kernel`.
    pub fn eval(&self, t: f64) -> f64 {
        if self.c == 0.0 {
            return 0.0;
        }
        self.c * self.kernel(t) / self.kernel_mass
    }

    /// Smallest value the bump takes on ℝ.
    pub fn min_value(&self) -> f64 {
        (self.c / self.kernel_mass).min(0.0)
    }

    /// Largest value the bump takes on ℝ.
    pub fn max_value(&self) -> f64 {
        (self.c / self.kernel_mass).max(0.0)
    }

    /// Integral of the normalized bump, recomputed by adaptive quadrature.
    pub fn integral(&self) -> Result<f64> {
        if self.c == 0.0 {
            return Ok(0.0);
        }
        let half = self.half_width();
        let scale = self.c / self.kernel_mass;
        // integrate the kernel in units of the peak so the tolerance is relative
        let unit = adaptive_simpson(|off| self.kernel_at_offset(off), -half, half, 1e-12 * self.kernel_mass)?;
        Ok(unit * scale)
    }
}

fn composite_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / (2 * panels) as f64;
    let mut sum = f(a) + f(b);
    for i in 1..2 * panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Gauss–Legendre 5-point rule on many panels; independent of the
    /// adaptive Simpson path used by the implementation.
    fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
        const NODES: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let mid = a + (i as f64 + 0.5) * h;
                NODES
                    .iter()
                    .zip(WEIGHTS)
                    .map(|(x, w)| w * f(mid + 0.5 * h * x))
                    .sum::<f64>()
                    * 0.5
                    * h
            })
            .sum()
    }

    #[test]
    fn exponential_kernel_at_midpoint() {
        assert!((exponential_kernel(0.0, 1.0, 0.5) - 0.018_315_638_888_734_18).abs() < 1e-17);
        assert_eq!(exponential_kernel(0.0, 1.0, 0.0), 0.0);
        assert_eq!(exponential_kernel(0.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn support_boundaries() {
        for shape in [BumpShape::Exponential, BumpShape::default()] {
            let b = BumpSpec::new(0.0, 1.0, 2.5, shape).unwrap();
            assert_eq!(b.eval(0.0), 0.0);
            assert_eq!(b.eval(1.0), 0.0);
            assert_eq!(b.eval(-0.5), 0.0);
            assert_eq!(b.eval(1.5), 0.0);
            assert!(b.eval(0.5) > 0.0);
        }
    }

    #[test]
    fn zero_integral_is_identically_zero() {
        let b = BumpSpec::new(0.2, 0.9, 0.0, BumpShape::Exponential).unwrap();
        for i in 0..=100 {
            assert_eq!(b.eval(i as f64 / 100.0), 0.0);
        }
        assert_eq!(b.integral().unwrap(), 0.0);
    }

    #[test]
    fn invalid_specs() {
        assert!(BumpSpec::new(1.0, 1.0, 1.0, BumpShape::Exponential).is_err());
        assert!(BumpSpec::new(2.0, 1.0, 1.0, BumpShape::Exponential).is_err());
        assert!(BumpSpec::new(0.0, 1.0, 1.0, BumpShape::Plateau { delta: 0.0 }).is_err());
        assert!(BumpSpec::new(0.0, 1.0, 1.0, BumpShape::Plateau { delta: 1.0 }).is_err());
        assert!(BumpSpec::new(0.0, f64::NAN, 1.0, BumpShape::Exponential).is_err());
    }

    #[test]
    fn prescribed_integral_matches_independent_quadrature() {
        for shape in [
            BumpShape::Exponential,
            BumpShape::default(),
            BumpShape::Plateau { delta: 0.5 },
        ] {
            for (a, b) in [(0.0, 1.0), (0.3, 0.45), (-2.0, 5.0)] {
                for c in [-0.3, 2.5, 1e-3] {
                    let spec = BumpSpec::new(a, b, c, shape).unwrap();
                    let oracle = gauss_legendre(|t| spec.eval(t), a, b, 4000);
                    assert!((oracle - c).abs() <= 1e-10 * c.abs(), "{shape:?} {a} {b}: {oracle}");
                    let quad = spec.integral().unwrap();
                    assert!((quad - c).abs() <= 1e-10 * c.abs());
                }
            }
        }
    }

    #[test]
    fn short_support_does_not_underflow() {
        let spec = BumpSpec::new(0.0, 0.02, -0.5, BumpShape::Exponential).unwrap();
        assert!(spec.eval(0.01).is_finite() && spec.eval(0.01) < 0.0);
        assert!((spec.integral().unwrap() + 0.5).abs() < 0.5e-10);
    }

    #[test]
    fn short_support_away_from_origin() {
        let (a, b) = (-0.611_328_385_189_233_6, -0.533_558_409_479_746_2);
        let spec = BumpSpec::new(a, b, 1.0, BumpShape::Exponential).unwrap();
        assert!((spec.integral().unwrap() - 1.0).abs() < 1e-10);
        assert!((gauss_legendre(|t| spec.eval(t), a, b, 4000) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn plateau_extreme_over_mean() {
        let spec = BumpSpec::new(1.0, 3.0, -0.8, BumpShape::Plateau { delta: 0.1 }).unwrap();
        let mean = -0.8 / 2.0;
        assert!((spec.min_value() / mean - 1.1).abs() < 1e-12);
        assert!((spec.eval(2.0) - spec.min_value()).abs() < 1e-15);
    }

    #[test]
    fn flat_to_all_orders_at_endpoints() {
        // one-sided forward/backward differences of orders 1..4, offset 1e-3
        let h = 1e-3;
        let binom = [
            [1.0, 0.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0, 0.0],
            [1.0, 2.0, 1.0, 0.0, 0.0],
            [1.0, 3.0, 3.0, 1.0, 0.0],
            [1.0, 4.0, 6.0, 4.0, 1.0],
        ];
        for shape in [BumpShape::Exponential, BumpShape::default()] {
            let spec = BumpSpec::new(0.0, 1.0, 2.5, shape).unwrap();
            for (order, row) in binom.iter().enumerate().skip(1) {
                let fwd: f64 = (0..=order)
                    .map(|k| {
                        let sign = if (order - k) % 2 == 0 { 1.0 } else { -1.0 };
                        sign * row[k] * spec.eval(k as f64 * h)
                    })
                    .sum::<f64>()
                    / h.powi(order as i32);
                let bwd: f64 = (0..=order)
                    .map(|k| {
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        sign * row[k] * spec.eval(1.0 - k as f64 * h)
                    })
                    .sum::<f64>()
                    / h.powi(order as i32);
                assert!(fwd.abs() < 1e-8, "{shape:?} order {order}: {fwd}");
                assert!(bwd.abs() < 1e-8, "{shape:?} order {order}: {bwd}");
            }
        }
    }
}
