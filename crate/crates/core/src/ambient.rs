//! Linear structures of C^2 = R^4: the complex structure `J`, the symplectic
//! form, the holomorphic volume form `dz1 ^ dz2` and the Liouville form.
//!
//! Coordinates are always ordered `(x1, y1, x2, y2)` with `z_j = x_j + i y_j`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A point or vector of C^2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AmbientVector {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl AmbientVector {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    /// The translation direction `e1 = (1, 0, 0, 0)`.
    pub const fn e1() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    pub fn from_complex(z1: Complex64, z2: Complex64) -> Self {
        Self::new(z1.re, z1.im, z2.re, z2.im)
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn z1(self) -> Complex64 {
        Complex64::new(self.x1, self.y1)
    }

    pub fn z2(self) -> Complex64 {
        Complex64::new(self.x2, self.y2)
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x1 * o.x1 + self.y1 * o.y1 + self.x2 * o.x2 + self.y2 * o.y2
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.y1.is_finite() && self.x2.is_finite() && self.y2.is_finite()
    }

    /// Multiplication by `i` in each complex factor.
    pub fn j(self) -> Self {
        apply_j(self)
    }
}

impl Add for AmbientVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x1 + o.x1, self.y1 + o.y1, self.x2 + o.x2, self.y2 + o.y2)
    }
}

impl AddAssign for AmbientVector {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for AmbientVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x1 - o.x1, self.y1 - o.y1, self.x2 - o.x2, self.y2 - o.y2)
    }
}

impl SubAssign for AmbientVector {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl Mul<f64> for AmbientVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x1 * s, self.y1 * s, self.x2 * s, self.y2 * s)
    }
}

impl Mul<AmbientVector> for f64 {
    type Output = AmbientVector;
    fn mul(self, v: AmbientVector) -> AmbientVector {
        v * self
    }
}

impl Neg for AmbientVector {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

/// An ordered pair of vectors spanning a 2-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoFrame {
    pub a: AmbientVector,
    pub b: AmbientVector,
}

impl TwoFrame {
    pub fn new(a: AmbientVector, b: AmbientVector) -> Self {
        Self { a, b }
    }

    /// Area of the parallelogram spanned by `a` and `b`.
    pub fn area(&self) -> f64 {
        let ab = self.a.dot(self.b);
        (self.a.norm_sq() * self.b.norm_sq() - ab * ab).max(0.0).sqrt()
    }

    /// Gram-Schmidt orthonormalisation preserving orientation.
    /// Returns `None` when the vectors are (numerically) dependent.
    pub fn orthonormalized(&self) -> Option<Self> {
        let na = self.a.norm();
        if na <= f64::EPSILON {
            return None;
        }
        let e1 = self.a * (1.0 / na);
        let b = self.b - e1 * e1.dot(self.b);
        let nb = b.norm();
        if nb <= 1e-14 * self.b.norm().max(1.0) {
            return None;
        }
        Some(Self::new(e1, b * (1.0 / nb)))
    }

    /// The oriented Lagrangian plane `{(u, 0, v cos a, v sin a)}`.
    pub fn lagrangian_plane(angle: f64) -> Self {
        Self::new(
            AmbientVector::e1(),
            AmbientVector::new(0.0, 0.0, angle.cos(), angle.sin()),
        )
    }
}

/// `J(x1, y1, x2, y2) = (-y1, x1, -y2, x2)`.
pub fn apply_j(v: AmbientVector) -> AmbientVector {
    AmbientVector::new(-v.y1, v.x1, -v.y2, v.x2)
}

/// `omega = dx1 ^ dy1 + dx2 ^ dy2` evaluated on the frame.
pub fn symplectic_form(f: &TwoFrame) -> f64 {
    let (a, b) = (f.a, f.b);
    (a.x1 * b.y1 - a.y1 * b.x1) + (a.x2 * b.y2 - a.y2 * b.x2)
}

/// `Omega = dz1 ^ dz2` evaluated on the frame.
pub fn holomorphic_volume(f: &TwoFrame) -> Complex64 {
    f.a.z1() * f.b.z2() - f.b.z1() * f.a.z2()
}

/// The Liouville form `sum_j x_j dy_j - y_j dx_j` at `base`, applied to `v`.
pub fn liouville_form(base: AmbientVector, v: AmbientVector) -> f64 {
    (base.x1 * v.y1 - base.y1 * v.x1) + (base.x2 * v.y2 - base.y2 * v.x2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const E1: AmbientVector = AmbientVector::new(1.0, 0.0, 0.0, 0.0);
    const E2: AmbientVector = AmbientVector::new(0.0, 1.0, 0.0, 0.0);
    const E3: AmbientVector = AmbientVector::new(0.0, 0.0, 1.0, 0.0);

    #[test]
    fn symplectic_examples() {
        assert_eq!(symplectic_form(&TwoFrame::new(E1, E2)), 1.0);
        assert_eq!(symplectic_form(&TwoFrame::new(E1, E3)), 0.0);
        for k in 0..50 {
            let alpha = -3.0 + 0.13 * k as f64;
            assert_eq!(symplectic_form(&TwoFrame::lagrangian_plane(alpha)), 0.0);
        }
    }

    #[test]
    fn holomorphic_volume_examples() {
        let v = holomorphic_volume(&TwoFrame::new(E1, E3));
        assert_eq!(v, Complex64::new(1.0, 0.0));
        for k in 0..50 {
            let alpha = -3.0 + 0.13 * k as f64;
            let v = holomorphic_volume(&TwoFrame::lagrangian_plane(alpha));
            assert!((v - Complex64::from_polar(1.0, alpha)).norm() < 1e-15);
        }
        // orientation reversal of the standard Lagrangian plane
        assert_eq!(holomorphic_volume(&TwoFrame::new(E3, E1)), Complex64::new(-1.0, 0.0));
        // (J e1, e1) spans a complex line, on which dz1 ^ dz2 vanishes
        assert_eq!(holomorphic_volume(&TwoFrame::new(E2, E1)), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn liouville_examples() {
        let v = AmbientVector::new(0.3, -1.2, 2.0, 0.5);
        assert_eq!(liouville_form(AmbientVector::ZERO, v), 0.0);
        assert_eq!(liouville_form(E1, E2), 1.0);
        assert_eq!(liouville_form(E2, E1), -1.0);
    }

    #[test]
    fn j_examples() {
        assert_eq!(apply_j(E1), E2);
        assert_eq!(apply_j(E2), -E1);
        assert_eq!(apply_j(E3), AmbientVector::new(0.0, 0.0, 0.0, 1.0));
    }

    fn vec4() -> impl Strategy<Value = AmbientVector> {
        prop::array::uniform4(-10.0f64..10.0).prop_map(AmbientVector::from_array)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn j_squared_is_minus_identity(v in vec4()) {
            prop_assert_eq!(apply_j(apply_j(v)), -v);
        }

        #[test]
        fn omega_antisymmetric_and_j_invariant(a in vec4(), b in vec4()) {
            let w = symplectic_form(&TwoFrame::new(a, b));
            prop_assert!((w + symplectic_form(&TwoFrame::new(b, a))).abs() < 1e-12);
            prop_assert!((w - symplectic_form(&TwoFrame::new(a.j(), b.j()))).abs() < 1e-12);
        }

        #[test]
        fn liouville_is_contraction_of_omega(base in vec4(), v in vec4()) {
            let lhs = liouville_form(base, v);
            let rhs = symplectic_form(&TwoFrame::new(base, v));
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn calibration_on_lagrangian_planes(
            alpha in -3.2f64..3.2,
            m in prop::array::uniform4(-3.0f64..3.0),
        ) {
            // random frame of the Lagrangian plane P_alpha rotated by a unitary map
            let u = Complex64::from_polar(1.0, m[0]);
            let v = Complex64::from_polar(1.0, m[1]);
            let map = |p: AmbientVector| AmbientVector::from_complex(p.z1() * u, p.z2() * v);
            let base = TwoFrame::lagrangian_plane(alpha);
            let a = base.a * m[2] + base.b * 0.7;
            let b = base.a * -0.4 + base.b * m[3];
            prop_assume!((m[2] * m[3] + 0.28).abs() > 1e-3);
            let f = TwoFrame::new(map(a), map(b));
            prop_assert!(symplectic_form(&f).abs() < 1e-12);
            prop_assert!((holomorphic_volume(&f).norm() - f.area()).abs() < 1e-10);
        }
    }
}
