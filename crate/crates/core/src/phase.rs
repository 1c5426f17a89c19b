//! Phase-space primitives: Gaussian measure, reproducing kernels, normalized
//! kernels, symplectic form.
//!
//! The identification C^n ≅ R^{2n} is fixed once and for all as
//! z = x + iξ componentwise, and |z|² always means Σ_j |z_j|².

use crate::error::{Error, Result};
use crate::scalar::{Real, C};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Dimension and quantization parameters shared by every module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizationContext<T: Real> {
    /// complex phase-space dimension
    pub n: usize,
    /// quantization parameter t > 0
    pub t: T,
    /// internal Hilbert-space dimension (1 for scalar symbols)
    pub d: usize,
}

impl<T: Real> QuantizationContext<T> {
    pub fn new(n: usize, t: T, d: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("n must be >= 1".into()));
        }
        if d == 0 {
            return Err(Error::Parameter("d must be >= 1".into()));
        }
        if !(t > T::zero()) || !t.is_finite() {
            return Err(Error::Parameter(format!("t must be positive, got {t}")));
        }
        Ok(Self { n, t, d })
    }

    /// Scalar context at the default t = 0.5 (so 2t = 1).
    pub fn scalar(n: usize, t: T) -> Result<Self> {
        Self::new(n, t, 1)
    }
}

/// A point of C^n ≅ R^{2n}, z = x + iξ.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint<T: Real>(pub Vec<C<T>>);

impl<T: Real> PhasePoint<T> {
    pub fn new(z: Vec<C<T>>) -> Self {
        debug_assert!(z.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
        PhasePoint(z)
    }

    pub fn zero(n: usize) -> Self {
        PhasePoint(vec![Complex::new(T::zero(), T::zero()); n])
    }

    /// One-dimensional point.
    pub fn one(z: C<T>) -> Self {
        PhasePoint(vec![z])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Σ_j |z_j|².
    pub fn norm_sqr(&self) -> T {
        self.0.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b)
    }

    /// z̄ · w = Σ_j conj(z_j) w_j.
    pub fn dot_conj(&self, w: &Self) -> C<T> {
        self.0
            .iter()
            .zip(&w.0)
            .map(|(z, w)| z.conj() * w)
            .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
    }

    pub fn add(&self, w: &Self) -> Self {
        PhasePoint(self.0.iter().zip(&w.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, w: &Self) -> Self {
        PhasePoint(self.0.iter().zip(&w.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, a: C<T>) -> Self {
        PhasePoint(self.0.iter().map(|z| z * a).collect())
    }

    /// Real coordinates (x_1..x_n, ξ_1..ξ_n).
    pub fn to_real(&self) -> Vec<T> {
        let mut out: Vec<T> = self.0.iter().map(|z| z.re).collect();
        out.extend(self.0.iter().map(|z| z.im));
        out
    }

    pub fn from_real(xs: &[T]) -> Self {
        let n = xs.len() / 2;
        PhasePoint((0..n).map(|j| Complex::new(xs[j], xs[n + j])).collect())
    }
}

/// K(z,w) = exp(w̄·z / 2t).
pub fn reproducing_kernel<T: Real>(
    ctx: &QuantizationContext<T>,
    z: &PhasePoint<T>,
    w: &PhasePoint<T>,
) -> C<T> {
    (w.dot_conj(z) / (T::of(2.0) * ctx.t)).exp()
}

/// k_w(z) = exp(−|w|²/4t) K(z,w).
pub fn normalized_kernel<T: Real>(
    ctx: &QuantizationContext<T>,
    z: &PhasePoint<T>,
    w: &PhasePoint<T>,
) -> C<T> {
    let exponent = w.dot_conj(z) / (T::of(2.0) * ctx.t)
        - Complex::new(w.norm_sqr() / (T::of(4.0) * ctx.t), T::zero());
    exponent.exp()
}

/// ω(z,w) = Im(z̄·w).
pub fn symplectic_form<T: Real>(z: &PhasePoint<T>, w: &PhasePoint<T>) -> T {
    z.dot_conj(w).im
}

/// Density of dμ(z) = (2πt)^{−n} exp(−|z|²/2t) dz at z.
pub fn gaussian_density<T: Real>(ctx: &QuantizationContext<T>, z: &PhasePoint<T>) -> T {
    let two_pi_t = T::of(2.0) * T::PI() * ctx.t;
    two_pi_t.powi(-(ctx.n as i32)) * (-z.norm_sqr() / (T::of(2.0) * ctx.t)).exp()
}
