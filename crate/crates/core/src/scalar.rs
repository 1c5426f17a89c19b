//! Scalar abstraction: all numerics are generic over the real field.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Real scalar the whole library is generic over (`f32` or `f64` in practice).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Shorthand for lossless-enough conversion from `f64` literals.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }

    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C<T> = Complex<T>;

pub fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

pub fn c_re<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// ln(k!) by direct summation; exact enough for the degree range in scope.
pub fn ln_factorial<T: Real>(k: usize) -> T {
    (2..=k).map(|j| T::of_usize(j).ln()).sum()
}

/// k! as a real scalar; overflows silently above ~170 for f64, use
/// [`ln_factorial`] past degree 150.
pub fn factorial<T: Real>(k: usize) -> T {
    (2..=k).fold(T::one(), |acc, j| acc * T::of_usize(j))
}

pub fn binomial<T: Real>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    let mut acc = T::one();
    for j in 0..k {
        acc = acc * T::of_usize(n - j) / T::of_usize(j + 1);
    }
    acc
}

pub fn binomial_usize(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for j in 0..k {
        acc = acc * (n - j) / (j + 1);
    }
    acc
}

/// Pairwise (tree) summation with a fixed reduction order, so results are
/// bit-stable for a fixed input order regardless of thread count upstream.
pub fn pairwise_sum<T: Real>(xs: &[C<T>]) -> C<T> {
    match xs.len() {
        0 => Complex::new(T::zero(), T::zero()),
        1 => xs[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

pub fn pairwise_sum_real<T: Real>(xs: &[T]) -> T {
    match xs.len() {
        0 => T::zero(),
        1 => xs[0],
        n => {
            let mid = n / 2;
            pairwise_sum_real(&xs[..mid]) + pairwise_sum_real(&xs[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials_agree_with_log_form() {
        for k in 0..30usize {
            let direct: f64 = factorial(k);
            let viog: f64 = ln_factorial::<f64>(k).exp();
            assert!((direct - viog).abs() / direct.max(1.0) < 1e-12, "k={k}");
        }
    }

    #[test]
    fn binomial_matches_usize_path() {
        for n in 0..20 {
            for k in 0..=n {
                let a: f64 = binomial(n, k);
                let b = binomial_usize(n, k) as f64;
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn pairwise_sum_of_ones() {
        let xs = vec![Complex::new(1.0f64, 0.0); 1023];
        assert_eq!(pairwise_sum(&xs).re, 1023.0);
    }
}
