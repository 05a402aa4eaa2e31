//! The base dynamics on the 2-torus ℝ²/ℤ².
//!
//! Points are stored as 64-bit fixed-point fractions, so every integer
//! automorphism (and every translation by a stored point) acts exactly:
//! wrapping `u64` arithmetic is arithmetic in ℤ/2⁶⁴ℤ, which is the torus
//! sampled on the grid 2⁻⁶⁴ℤ². Iterating a hyperbolic map forward and then
//! backward returns the starting point bit for bit, and `g∘h = h∘f` holds
//! exactly whenever it holds for the integer matrices.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;
const TWO_POW_NEG_53: f64 = 1.0 / 9_007_199_254_740_992.0;

fn wrap_to_raw(v: f64) -> u64 {
    if !v.is_finite() {
        return 0;
    }
    let frac = v - v.floor();
    // `as` saturates, so a fraction that rounds up to 1.0 lands on the last grid cell.
    (frac * TWO_POW_64) as u64
}

fn raw_to_unit(raw: u64) -> f64 {
    // round to nearest, except that values just below 1 must not round up to it
    let v = raw as f64 / TWO_POW_64;
    if v < 1.0 {
        v
    } else {
        1.0 - TWO_POW_NEG_53
    }
}

fn signed_raw_to_f64(raw: u64) -> f64 {
    raw as i64 as f64 / TWO_POW_64
}

/// Quantizes a small signed offset to the fixed-point grid.
///
/// Returns the raw increment together with the offset it actually realizes.
pub(crate) fn quantize_offset(delta: f64) -> (u64, f64) {
    let steps = (delta * TWO_POW_64).round() as i64;
    (steps as u64, steps as f64 / TWO_POW_64)
}

/// A point of ℝ²/ℤ² with both coordinates in `[0, 1)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TorusPoint {
    raw: [u64; 2],
}

impl TorusPoint {
    pub const ORIGIN: TorusPoint = TorusPoint { raw: [0, 0] };

    /// Reduces `(x1, x2)` mod 1. An exact `1.0` maps to `0.0`.
    pub fn new(x1: f64, x2: f64) -> Self {
        Self {
            raw: [wrap_to_raw(x1), wrap_to_raw(x2)],
        }
    }

    pub const fn from_raw(raw: [u64; 2]) -> Self {
        Self { raw }
    }

    pub const fn raw(&self) -> [u64; 2] {
        self.raw
    }

    pub fn x1(&self) -> f64 {
        raw_to_unit(self.raw[0])
    }

    pub fn x2(&self) -> f64 {
        raw_to_unit(self.raw[1])
    }

    pub fn coords(&self) -> [f64; 2] {
        [self.x1(), self.x2()]
    }

    pub fn as_vector(&self) -> Vector2<f64> {
        Vector2::new(self.x1(), self.x2())
    }

    /// Translates by `(d1, d2)` mod 1.
    pub fn translate(&self, d1: f64, d2: f64) -> Self {
        Self {
            raw: [
                self.raw[0].wrapping_add(wrap_to_raw(d1)),
                self.raw[1].wrapping_add(wrap_to_raw(d2)),
            ],
        }
    }

    /// Translation by another torus point (exact).
    pub fn add(&self, other: &TorusPoint) -> Self {
        Self {
            raw: [
                self.raw[0].wrapping_add(other.raw[0]),
                self.raw[1].wrapping_add(other.raw[1]),
            ],
        }
    }

    pub fn sub(&self, other: &TorusPoint) -> Self {
        Self {
            raw: [
                self.raw[0].wrapping_sub(other.raw[0]),
                self.raw[1].wrapping_sub(other.raw[1]),
            ],
        }
    }

    /// The shortest signed displacement from `self` to `other`, each
    /// coordinate in `[-1/2, 1/2)`.
    pub fn displacement_to(&self, other: &TorusPoint) -> [f64; 2] {
        [
            signed_raw_to_f64(other.raw[0].wrapping_sub(self.raw[0])),
            signed_raw_to_f64(other.raw[1].wrapping_sub(self.raw[1])),
        ]
    }

    /// Flat quotient metric: per-coordinate wrap-around distance, combined
    /// Euclidean.
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        let [d1, d2] = self.displacement_to(other);
        d1.hypot(d2)
    }
}

impl fmt::Debug for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TorusPoint({}, {})", self.x1(), self.x2())
    }
}

/// An integer 2×2 matrix with determinant ±1, stored row-major `[a, b, c, d]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct UnimodularMatrix {
    entries: [i64; 4],
}

impl UnimodularMatrix {
    pub const IDENTITY: UnimodularMatrix = UnimodularMatrix { entries: [1, 0, 0, 1] };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let det = a as i128 * d as i128 - b as i128 * c as i128;
        if det.abs() != 1 {
            return Err(Error::NotUnimodular(a, b, c, d));
        }
        Ok(Self { entries: [a, b, c, d] })
    }

    pub fn entries(&self) -> [i64; 4] {
        self.entries
    }

    pub fn det(&self) -> i64 {
        let [a, b, c, d] = self.entries;
        a * d - b * c
    }

    pub fn trace(&self) -> i64 {
        self.entries[0] + self.entries[3]
    }

    pub fn inverse(&self) -> Self {
        let [a, b, c, d] = self.entries;
        let det = self.det();
        Self {
            entries: [det * d, -det * b, -det * c, det * a],
        }
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &Self) -> Self {
        let [a, b, c, d] = self.entries;
        let [e, f, g, h] = rhs.entries;
        Self {
            entries: [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h],
        }
    }

    pub fn transpose(&self) -> Self {
        let [a, b, c, d] = self.entries;
        Self { entries: [a, c, b, d] }
    }

    pub fn to_matrix(&self) -> Matrix2<f64> {
        let [a, b, c, d] = self.entries;
        Matrix2::new(a as f64, b as f64, c as f64, d as f64)
    }

    /// Applies the matrix to a torus point, exactly mod 1.
    pub fn apply(&self, p: &TorusPoint) -> TorusPoint {
        let [a, b, c, d] = self.entries;
        let [x1, x2] = p.raw;
        TorusPoint::from_raw([
            (a as u64).wrapping_mul(x1).wrapping_add((b as u64).wrapping_mul(x2)),
            (c as u64).wrapping_mul(x1).wrapping_add((d as u64).wrapping_mul(x2)),
        ])
    }
}

/// Eigen-decomposition of a hyperbolic toral automorphism.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenData {
    /// Expanding eigenvalue, `|lambda_u| > 1`. Negative when the trace is.
    pub lambda_u: f64,
    /// Contracting eigenvalue, `lambda_u · lambda_s = det`.
    pub lambda_s: f64,
    pub v_u: Vector2<f64>,
    pub v_s: Vector2<f64>,
}

/// A unimodular integer matrix with `|trace| > 2`, acting on the torus as
/// an Anosov diffeomorphism.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct HyperbolicToralMap {
    matrix: UnimodularMatrix,
    inverse: UnimodularMatrix,
}

impl HyperbolicToralMap {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        Self::from_matrix(UnimodularMatrix::new(a, b, c, d)?)
    }

    pub fn from_matrix(matrix: UnimodularMatrix) -> Result<Self> {
        if matrix.trace().abs() <= 2 {
            return Err(Error::NotHyperbolic(matrix.trace()));
        }
        Ok(Self {
            matrix,
            inverse: matrix.inverse(),
        })
    }

    /// Arnold's cat map `[[2, 1], [1, 1]]`.
    pub fn cat() -> Self {
        Self::new(2, 1, 1, 1).expect("cat map is hyperbolic")
    }

    pub fn matrix(&self) -> &UnimodularMatrix {
        &self.matrix
    }

    pub fn apply(&self, p: &TorusPoint) -> TorusPoint {
        self.matrix.apply(p)
    }

    pub fn apply_inverse(&self, p: &TorusPoint) -> TorusPoint {
        self.inverse.apply(p)
    }

    /// `f^n(p)` for any integer `n`, iterating one step at a time.
    pub fn iterate(&self, p: &TorusPoint, n: i64) -> TorusPoint {
        let mut q = *p;
        if n >= 0 {
            for _ in 0..n {
                q = self.apply(&q);
            }
        } else {
            for _ in 0..n.unsigned_abs() {
                q = self.apply_inverse(&q);
            }
        }
        q
    }

    pub fn eigen_data(&self) -> EigenData {
        let tr = self.matrix.trace() as f64;
        let det = self.matrix.det() as f64;
        let disc = (tr * tr - 4.0 * det).sqrt();
        // Pick the root whose sign matches the trace to avoid cancellation,
        // then recover the other from the determinant.
        let lambda_u = 0.5 * (tr + tr.signum() * disc);
        let lambda_s = det / lambda_u;
        let [a, b, c, d] = self.matrix.entries().map(|e| e as f64);
        let eigvec = |lambda: f64| {
            let v = if b != 0.0 {
                Vector2::new(b, lambda - a)
            } else {
                Vector2::new(lambda - d, c)
            };
            v.normalize()
        };
        EigenData {
            lambda_u,
            lambda_s,
            v_u: eigvec(lambda_u),
            v_s: eigvec(lambda_s),
        }
    }
}

type PointFn = Arc<dyn Fn(&TorusPoint) -> TorusPoint + Send + Sync>;
type JacobianFn = Arc<dyn Fn(&TorusPoint) -> Matrix2<f64> + Send + Sync>;

/// A user-supplied homeomorphism of the torus.
///
/// Smoothness and invertibility are declared by the caller and never
/// certified.
#[derive(Clone)]
pub struct CustomConjugacy {
    forward: PointFn,
    inverse: Option<PointFn>,
    jacobian: Option<JacobianFn>,
    differentiable: bool,
}

impl CustomConjugacy {
    pub fn new(forward: impl Fn(&TorusPoint) -> TorusPoint + Send + Sync + 'static) -> Self {
        Self {
            forward: Arc::new(forward),
            inverse: None,
            jacobian: None,
            differentiable: false,
        }
    }

    pub fn with_inverse(mut self, inverse: impl Fn(&TorusPoint) -> TorusPoint + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(inverse));
        self
    }

    /// Declares the map differentiable; its Jacobian is then estimated by
    /// central differences.
    pub fn declared_differentiable(mut self) -> Self {
        self.differentiable = true;
        self
    }

    pub fn with_jacobian(mut self, jacobian: impl Fn(&TorusPoint) -> Matrix2<f64> + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(jacobian));
        self.differentiable = true;
        self
    }
}

impl fmt::Debug for CustomConjugacy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomConjugacy")
            .field("invertible", &self.inverse.is_some())
            .field("differentiable", &self.differentiable)
            .finish()
    }
}

/// The base conjugacy `h` with `g∘h = h∘f`.
#[derive(Clone, Debug)]
pub enum BaseConjugacy {
    Identity,
    Linear(UnimodularMatrix),
    /// `x ↦ B·x + offset`.
    Affine {
        matrix: UnimodularMatrix,
        offset: TorusPoint,
    },
    Custom(CustomConjugacy),
}

impl BaseConjugacy {
    pub fn apply(&self, p: &TorusPoint) -> TorusPoint {
        match self {
            BaseConjugacy::Identity => *p,
            BaseConjugacy::Linear(m) => m.apply(p),
            BaseConjugacy::Affine { matrix, offset } => matrix.apply(p).add(offset),
            BaseConjugacy::Custom(c) => (c.forward)(p),
        }
    }

    pub fn apply_inverse(&self, p: &TorusPoint) -> Result<TorusPoint> {
        match self {
            BaseConjugacy::Identity => Ok(*p),
            BaseConjugacy::Linear(m) => Ok(m.inverse().apply(p)),
            BaseConjugacy::Affine { matrix, offset } => Ok(matrix.inverse().apply(&p.sub(offset))),
            BaseConjugacy::Custom(c) => c.inverse.as_ref().map(|inv| inv(p)).ok_or(Error::NotInvertible),
        }
    }

    /// The linear part, when the conjugacy is one of the analytic kinds.
    pub fn linear_part(&self) -> Option<UnimodularMatrix> {
        match self {
            BaseConjugacy::Identity => Some(UnimodularMatrix::IDENTITY),
            BaseConjugacy::Linear(m) | BaseConjugacy::Affine { matrix: m, .. } => Some(*m),
            BaseConjugacy::Custom(_) => None,
        }
    }

    pub fn jacobian(&self, p: &TorusPoint) -> Result<Matrix2<f64>> {
        if let Some(m) = self.linear_part() {
            return Ok(m.to_matrix());
        }
        let BaseConjugacy::Custom(c) = self else { unreachable!() };
        if let Some(jac) = &c.jacobian {
            return Ok(jac(p));
        }
        if !c.differentiable {
            return Err(Error::NotDifferentiable);
        }
        let step = 1e-6;
        let mut out = Matrix2::zeros();
        for col in 0..2 {
            let (raw, h) = quantize_offset(step);
            let mut plus = p.raw();
            let mut minus = p.raw();
            plus[col] = plus[col].wrapping_add(raw);
            minus[col] = minus[col].wrapping_sub(raw);
            let hp = (c.forward)(&TorusPoint::from_raw(plus));
            let hm = (c.forward)(&TorusPoint::from_raw(minus));
            let d = hm.displacement_to(&hp);
            out[(0, col)] = d[0] / (2.0 * h);
            out[(1, col)] = d[1] / (2.0 * h);
        }
        Ok(out)
    }

    /// The map `g = B∘f∘B⁻¹` conjugated to `f` by the linear part of `self`.
    ///
    /// For the affine kind the offset must additionally be fixed by `g`,
    /// which [`BaseConjugacy::conjugacy_residual`] detects.
    pub fn conjugate_map(&self, f: &HyperbolicToralMap) -> Option<HyperbolicToralMap> {
        let b = self.linear_part()?;
        let g = b.compose(f.matrix()).compose(&b.inverse());
        HyperbolicToralMap::from_matrix(g).ok()
    }

    /// Largest torus distance between `g(h(x))` and `h(f(x))` over the grid
    /// `(i/n, j/n)`.
    pub fn conjugacy_residual(&self, f: &HyperbolicToralMap, g: &HyperbolicToralMap, n: usize) -> (f64, TorusPoint) {
        let mut worst = (0.0, TorusPoint::ORIGIN);
        for i in 0..n {
            for j in 0..n {
                let x = TorusPoint::new(i as f64 / n as f64, j as f64 / n as f64);
                let r = g.apply(&self.apply(&x)).distance(&self.apply(&f.apply(&x)));
                if r > worst.0 {
                    worst = (r, x);
                }
            }
        }
        worst
    }
}
