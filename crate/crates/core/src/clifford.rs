//! Exact 2-D Clifford algebra on the 2-component spinor fiber.
//!
//! The basis matrices are `g1 = i*sigma_1`, `g2 = i*sigma_2`. Both are
//! anti-Hermitian, square to `-Id` and anticommute, so the Riemannian
//! Clifford relation `g_a g_b + g_b g_a = -2 delta_ab Id` holds exactly.
//! The spinor metric is the real part of the standard Hermitian pairing;
//! with this choice Clifford multiplication is skew-adjoint.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

/// One 2-component complex spinor value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor {
    pub c0: Complex64,
    pub c1: Complex64,
}

impl Spinor {
    pub const ZERO: Spinor = Spinor {
        c0: Complex64::new(0.0, 0.0),
        c1: Complex64::new(0.0, 0.0),
    };

    pub fn new(c0: Complex64, c1: Complex64) -> Spinor {
        Spinor { c0, c1 }
    }

    pub fn from_re(a: f64, b: f64) -> Spinor {
        Spinor::new(Complex64::new(a, 0.0), Complex64::new(b, 0.0))
    }

    /// Squared norm `|xi|^2 = spinor_inner(xi, xi)`.
    pub fn norm_sq(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.c0.re.is_finite()
            && self.c0.im.is_finite()
            && self.c1.re.is_finite()
            && self.c1.im.is_finite()
    }

    pub fn scale_complex(&self, z: Complex64) -> Spinor {
        Spinor::new(self.c0 * z, self.c1 * z)
    }
}

impl Add for Spinor {
    type Output = Spinor;
    fn add(self, rhs: Spinor) -> Spinor {
        Spinor::new(self.c0 + rhs.c0, self.c1 + rhs.c1)
    }
}

impl Sub for Spinor {
    type Output = Spinor;
    fn sub(self, rhs: Spinor) -> Spinor {
        Spinor::new(self.c0 - rhs.c0, self.c1 - rhs.c1)
    }
}

impl Neg for Spinor {
    type Output = Spinor;
    fn neg(self) -> Spinor {
        Spinor::new(-self.c0, -self.c1)
    }
}

impl Mul<f64> for Spinor {
    type Output = Spinor;
    fn mul(self, s: f64) -> Spinor {
        Spinor::new(self.c0 * s, self.c1 * s)
    }
}

/// Basis direction for Clifford multiplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

pub const AXES: [Axis; 2] = [Axis::X, Axis::Y];

/// Fixed 2x2 complex matrices representing the Clifford action of e_1, e_2.
///
/// Kept as explicit data (rather than hard-coded arithmetic) so the
/// invariant checker can be run against a deliberately broken basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliffordBasis {
    pub g1: [[Complex64; 2]; 2],
    pub g2: [[Complex64; 2]; 2],
}

const I: Complex64 = Complex64::new(0.0, 1.0);

impl CliffordBasis {
    /// `g1 = i*[[0,1],[1,0]]`, `g2 = i*[[0,-i],[i,0]] = [[0,1],[-1,0]]`.
    pub fn standard() -> CliffordBasis {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        CliffordBasis {
            g1: [[zero, I], [I, zero]],
            g2: [[zero, one], [-one, zero]],
        }
    }

    pub fn matrix(&self, axis: Axis) -> &[[Complex64; 2]; 2] {
        match axis {
            Axis::X => &self.g1,
            Axis::Y => &self.g2,
        }
    }

    pub fn apply(&self, axis: Axis, xi: Spinor) -> Spinor {
        let g = self.matrix(axis);
        Spinor::new(
            g[0][0] * xi.c0 + g[0][1] * xi.c1,
            g[1][0] * xi.c0 + g[1][1] * xi.c1,
        )
    }
}

/// Clifford multiplication `e_alpha . xi` in the standard basis.
#[inline]
pub fn clifford_mul(axis: Axis, xi: Spinor) -> Spinor {
    // Unrolled standard basis; identical to CliffordBasis::standard().apply.
    match axis {
        Axis::X => Spinor::new(I * xi.c1, I * xi.c0),
        Axis::Y => Spinor::new(xi.c1, -xi.c0),
    }
}

/// Real spinor metric: the real part of the Hermitian pairing.
#[inline]
pub fn spinor_inner(xi: Spinor, eta: Spinor) -> f64 {
    (xi.c0.conj() * eta.c0 + xi.c1.conj() * eta.c1).re
}

/// Clifford multiplication of a real 2-vector with a spinor:
/// `v_1 (e_1 . xi) + v_2 (e_2 . xi)`.
#[inline]
pub fn vector_clifford(v: [f64; 2], xi: Spinor) -> Spinor {
    clifford_mul(Axis::X, xi) * v[0] + clifford_mul(Axis::Y, xi) * v[1]
}
