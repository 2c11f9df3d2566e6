//! Quaternion value type and the algebra every higher layer builds on.
//!
//! Quaternions are immutable value types; every operation returns a new
//! value, so they are safe to share across any number of workers.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Hypercomplex number `r + i·i + j·j + k·k` with the basis relations
/// `i² = j² = k² = ijk = −1`.
///
/// A "pure" quaternion has `r == 0` exactly; the feature pipeline stores an
/// RGB pixel as the pure quaternion `0 + R·i + G·j + B·k`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub r: f64,
    pub i: f64,
    pub j: f64,
    pub k: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(r: f64, i: f64, j: f64, k: f64) -> Self {
        Self { r, i, j, k }
    }

    /// Pure quaternion `0 + x·i + y·j + z·k`.
    #[inline]
    pub const fn pure(x: f64, y: f64, z: f64) -> Self {
        Self::new(0.0, x, y, z)
    }

    /// Imaginary part as a 3-vector.
    #[inline]
    pub fn imag(&self) -> [f64; 3] {
        [self.i, self.j, self.k]
    }

    #[inline]
    pub fn is_pure(&self) -> bool {
        self.r == 0.0
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.r.is_finite() && self.i.is_finite() && self.j.is_finite() && self.k.is_finite()
    }

    /// Componentwise scaling by a real.
    #[inline]
    pub fn scale(&self, x: f64) -> Self {
        Self::new(x * self.r, x * self.i, x * self.j, x * self.k)
    }

    /// Hamilton product, the unique bilinear product satisfying the basis
    /// relations above. Non-commutative: `i*j = k` but `j*i = −k`.
    #[inline]
    pub fn hamilton(&self, rhs: &Quaternion) -> Self {
        Self {
            r: self.r * rhs.r - self.i * rhs.i - self.j * rhs.j - self.k * rhs.k,
            i: self.r * rhs.i + self.i * rhs.r + self.j * rhs.k - self.k * rhs.j,
            j: self.r * rhs.j - self.i * rhs.k + self.j * rhs.r + self.k * rhs.i,
            k: self.r * rhs.k + self.i * rhs.j - self.j * rhs.i + self.k * rhs.r,
        }
    }

    /// Conjugate: negates the imaginary parts.
    #[inline]
    pub fn conjugate(&self) -> Self {
        Self::new(self.r, -self.i, -self.j, -self.k)
    }

    #[inline]
    pub fn norm_squared(&self) -> f64 {
        self.r * self.r + self.i * self.i + self.j * self.j + self.k * self.k
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Multiplicative inverse `conjugate / norm²`.
    ///
    /// The zero quaternion has no inverse.
    pub fn inverse(&self) -> Result<Self> {
        let n2 = self.norm_squared();
        if n2 == 0.0 {
            return Err(Error::Domain("zero quaternion has no inverse".into()));
        }
        Ok(self.conjugate().scale(1.0 / n2))
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn add(self, rhs: Quaternion) -> Quaternion {
        Quaternion::new(
            self.r + rhs.r,
            self.i + rhs.i,
            self.j + rhs.j,
            self.k + rhs.k,
        )
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn sub(self, rhs: Quaternion) -> Quaternion {
        Quaternion::new(
            self.r - rhs.r,
            self.i - rhs.i,
            self.j - rhs.j,
            self.k - rhs.k,
        )
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn mul(self, rhs: Quaternion) -> Quaternion {
        self.hamilton(&rhs)
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn mul(self, x: f64) -> Quaternion {
        self.scale(x)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn neg(self) -> Quaternion {
        self.scale(-1.0)
    }
}

impl std::fmt::Display for Quaternion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({} + {}i + {}j + {}k)", self.r, self.i, self.j, self.k)
    }
}

/// Axis-angle rotation parameters: angle `theta` in `[−π, π]` about a unit
/// axis. Converts to the unit quaternion
/// `cos(θ/2) + (a₁ i + a₂ j + a₃ k) sin(θ/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitAxisQuaternion {
    theta: f64,
    axis: [f64; 3],
}

/// Unit vector along the RGB gray diagonal, the fixed rotation axis of
/// every convolution kernel element.
pub const GRAY_AXIS: [f64; 3] = [
    0.577_350_269_189_625_8,
    0.577_350_269_189_625_8,
    0.577_350_269_189_625_8,
];

impl UnitAxisQuaternion {
    /// Builds a rotation of `theta` radians about `axis`. The axis is
    /// normalized; a near-zero axis or an angle outside `[−π, π]` is a
    /// domain error.
    pub fn new(theta: f64, axis: [f64; 3]) -> Result<Self> {
        if !theta.is_finite() || theta.abs() > std::f64::consts::PI {
            return Err(Error::Domain(format!(
                "rotation angle {theta} outside [-pi, pi]"
            )));
        }
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !n.is_finite() || n < 1e-12 {
            return Err(Error::Domain("rotation axis must be nonzero".into()));
        }
        Ok(Self {
            theta,
            axis: [axis[0] / n, axis[1] / n, axis[2] / n],
        })
    }

    /// Rotation about the gray diagonal with the angle wrapped into
    /// `[−π, π]`. Kernel angles are stored unconstrained, so the oracle
    /// path reduces them here.
    pub fn gray(theta: f64) -> Self {
        use std::f64::consts::PI;
        let mut t = (theta + PI).rem_euclid(2.0 * PI) - PI;
        if t < -PI {
            t = -PI;
        }
        Self {
            theta: t,
            axis: GRAY_AXIS,
        }
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }

    #[inline]
    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    /// The unit quaternion `cos(θ/2) + axis·sin(θ/2)`.
    pub fn to_quaternion(&self) -> Quaternion {
        let (s, c) = (self.theta / 2.0).sin_cos();
        Quaternion::new(c, self.axis[0] * s, self.axis[1] * s, self.axis[2] * s)
    }

    /// The sandwich rotation `p q p⁻¹`. Preserves the norm of `q` and keeps
    /// pure quaternions pure.
    pub fn rotate(&self, q: &Quaternion) -> Quaternion {
        let p = self.to_quaternion();
        let p_inv = p.inverse().expect("unit quaternion is invertible");
        p.hamilton(&q.hamilton(&p_inv))
    }
}
