//! Heat/Gaussian smoothing of symbols, the off-diagonal (two-point) heat
//! transform, and the semigroup factorization check connecting the two.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::phase::{PhasePoint, QuantizationContext};
use crate::quad::gauss_hermite;
use crate::scalar::{c_re, pairwise_sum, Real, C};
use crate::symbol::{BuiltIn, Symbol, SymbolKind};
use num_complex::Complex;
use std::sync::Arc;

/// Quadrature controls for the non-closed-form paths.
#[derive(Clone, Copy, Debug)]
pub struct HeatParams<T: Real> {
    /// Smoothing time s ≥ 0.
    pub s: T,
    /// Starting Gauss-Hermite node count per real dimension.
    pub nodes: usize,
    /// Relative agreement required between successive node doublings.
    pub tol: T,
    /// Largest node count tried before giving up.
    pub max_nodes: usize,
}

impl<T: Real> HeatParams<T> {
    pub fn new(s: T) -> Result<Self> {
        if !(s >= T::zero()) || !s.is_finite() {
            return Err(Error::Parameter("heat time s must satisfy s >= 0".into()));
        }
        Ok(HeatParams { s, nodes: 16, tol: T::of(1e-9), max_nodes: 512 })
    }
}

/// f̃^{(s)}(z) = (2πs)^{−n} ∫ f(z+w) e^{−|w|²/2s} dw over C^n ≅ R^{2n},
/// i.e. each of the 2n real coordinates of w is an independent N(0, s).
///
/// Polynomial symbols smooth in closed form through the matched Gaussian
/// moments E[w^γ w̄^γ] = γ!(2s)^{|γ|}; everything else goes through tensor
/// Gauss-Hermite quadrature with node doubling until two successive levels
/// agree.
pub fn heat_transform<T: Real>(f: &Symbol<T>, hp: &HeatParams<T>) -> Result<Symbol<T>> {
    if hp.s == T::zero() {
        return Ok(f.clone());
    }
    if let Some(p) = f.as_polynomial() {
        return Symbol::polynomial(f.ctx, p.heat(hp.s));
    }
    // SineRe has the exact form e^{−s/2} sin(Re z); keep it symbolic so
    // downstream assembly can still use the closed-form operator path.
    if let SymbolKind::BuiltIn(BuiltIn::SineRe) = &f.kind {
        let damp = (-hp.s / T::of(2.0)).exp();
        let ctx = f.ctx;
        return Ok(Symbol::callable(
            ctx,
            Arc::new(move |z: &PhasePoint<T>| {
                let mut m = CMatrix::zeros(1, 1);
                m[(0, 0)] = Complex::new(damp * z.0[0].re.sin(), T::zero());
                Ok(m)
            }),
        ));
    }
    let inner = f.clone();
    let hp = *hp;
    Ok(Symbol::callable(
        f.ctx,
        Arc::new(move |z: &PhasePoint<T>| heat_eval_quadrature(&inner, &hp, z)),
    ))
}

/// Pointwise Gauss-Hermite evaluation of the smoothed symbol with node
/// doubling; errors if the doubling never settles.
pub fn heat_eval_quadrature<T: Real>(
    f: &Symbol<T>,
    hp: &HeatParams<T>,
    z: &PhasePoint<T>,
) -> Result<CMatrix<T>> {
    let once = |k: usize| -> Result<CMatrix<T>> {
        let (nodes, weights) = gauss_hermite::<T>(k)?;
        let n = f.ctx.n;
        let d = f.ctx.d;
        let root = (T::of(2.0) * hp.s).sqrt();
        let wnorm = T::one() / T::PI().sqrt();
        // odometer over 2n real coordinates
        let mut idx = vec![0usize; 2 * n];
        let mut acc: Vec<Vec<C<T>>> = vec![vec![]; d * d];
        loop {
            let mut w = T::one();
            let mut zz = z.clone();
            for (jr, &i) in idx.iter().enumerate() {
                w = w * weights[i] * wnorm;
                let shift = root * nodes[i];
                let j = jr / 2;
                if jr % 2 == 0 {
                    zz.0[j] = zz.0[j] + Complex::new(shift, T::zero());
                } else {
                    zz.0[j] = zz.0[j] + Complex::new(T::zero(), shift);
                }
            }
            let fv = f.eval(&zz)?;
            for r in 0..d {
                for cidx in 0..d {
                    acc[r * d + cidx].push(fv[(r, cidx)] * c_re(w));
                }
            }
            let mut jr = 0;
            loop {
                if jr == 2 * n {
                    break;
                }
                idx[jr] += 1;
                if idx[jr] < k {
                    break;
                }
                idx[jr] = 0;
                jr += 1;
            }
            if jr == 2 * n {
                break;
            }
        }
        Ok(CMatrix::from_fn(d, d, |r, cidx| pairwise_sum(&acc[r * d + cidx])))
    };
    let mut k = hp.nodes.max(2);
    let mut prev = once(k)?;
    while k * 2 <= hp.max_nodes {
        k *= 2;
        let next = once(k)?;
        let diff = next.sub(&prev).max_abs();
        let scale = next.max_abs().max(T::one());
        if diff <= hp.tol * scale {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Accuracy(format!(
        "heat quadrature did not settle by {} nodes per dimension",
        hp.max_nodes
    )))
}

/// Two-point transform f̃^{(t)}(z, w) = ∫ f(u) k_z(u) conj(k_w(u)) dμ_t(u)
/// for the space with parameter `ctx.t`, by Gauss-Hermite quadrature
/// centered at the midpoint (z+w)/2 with all exponents combined in the
/// exponent before a single exponential per node.
pub fn off_diagonal_heat<T: Real>(
    f: &Symbol<T>,
    ctx: &QuantizationContext<T>,
    z: &PhasePoint<T>,
    w: &PhasePoint<T>,
    nodes: usize,
    tol: T,
) -> Result<CMatrix<T>> {
    if z.dim() != ctx.n || w.dim() != ctx.n {
        return Err(Error::Parameter("off_diagonal_heat point dimension mismatch".into()));
    }
    if f.ctx.n != ctx.n || f.ctx.d != ctx.d {
        return Err(Error::Parameter("off_diagonal_heat symbol shape mismatch".into()));
    }
    let t = ctx.t;
    let n = ctx.n;
    let d = ctx.d;
    let mid = z.add(w).scale(Complex::new(T::of(0.5), T::zero()));
    let two_t = T::of(2.0) * t;
    let root = two_t.sqrt();
    // z-independent part of the exponent
    let base_re = -(z.norm_sqr() + w.norm_sqr()) / (T::of(4.0) * t)
        - T::of_usize(n) * T::PI().ln();
    let once = |k: usize| -> Result<CMatrix<T>> {
        let (xs, ws) = gauss_hermite::<T>(k)?;
        let mut idx = vec![0usize; 2 * n];
        let mut acc: Vec<Vec<C<T>>> = vec![vec![]; d * d];
        loop {
            let mut logw = T::zero();
            let mut u = mid.clone();
            let mut gauss = T::zero();
            for (jr, &i) in idx.iter().enumerate() {
                logw += ws[i].ln();
                gauss += xs[i] * xs[i];
                let shift = root * xs[i];
                let j = jr / 2;
                if jr % 2 == 0 {
                    u.0[j] = u.0[j] + Complex::new(shift, T::zero());
                } else {
                    u.0[j] = u.0[j] + Complex::new(T::zero(), shift);
                }
            }
            // exponent: kernels + measure density + GH weight compensation
            let kernels = (z.dot_conj(&u) + u.dot_conj(&w)) / c_re(two_t);
            let expo = kernels
                + c_re(base_re - u.norm_sqr() / two_t + gauss + logw);
            let factor = expo.exp();
            let fv = f.eval(&u)?;
            for r in 0..d {
                for cidx in 0..d {
                    acc[r * d + cidx].push(fv[(r, cidx)] * factor);
                }
            }
            let mut jr = 0;
            loop {
                if jr == 2 * n {
                    break;
                }
                idx[jr] += 1;
                if idx[jr] < k {
                    break;
                }
                idx[jr] = 0;
                jr += 1;
            }
            if jr == 2 * n {
                break;
            }
        }
        Ok(CMatrix::from_fn(d, d, |r, cidx| pairwise_sum(&acc[r * d + cidx])))
    };
    let mut k = nodes.max(2);
    let mut prev = once(k)?;
    let cap = 512usize;
    while k * 2 <= cap {
        k *= 2;
        let next = once(k)?;
        let diff = next.sub(&prev).max_abs();
        let scale = next.max_abs().max(T::one());
        if diff <= tol * scale {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Accuracy(
        "off-diagonal heat quadrature did not settle".into(),
    ))
}

/// Residual of the factorization
///   f̃^{(t)}(w, z) = e^{|w−z|² s/(4t(t−s)) − i Im(z·w̄) s/(2t(t−s))}
///                   · (f̃^{(s)})^{(t−s)}(w, z)
/// for 0 < s < t, where the outer two-point transform lives in the space
/// with parameter t−s. Returns the max-abs entry difference.
pub fn semigroup_identity_check<T: Real>(
    f: &Symbol<T>,
    ctx: &QuantizationContext<T>,
    s: T,
    z: &PhasePoint<T>,
    w: &PhasePoint<T>,
) -> Result<T> {
    let t = ctx.t;
    if !(s > T::zero() && s < t) {
        return Err(Error::Parameter("semigroup check needs 0 < s < t".into()));
    }
    let tol = T::of(1e-9);
    let lhs = off_diagonal_heat(f, ctx, w, z, 16, tol)?;
    let smoothed = heat_transform(f, &HeatParams { s, nodes: 16, tol, max_nodes: 512 })?;
    let inner_ctx = QuantizationContext::new(ctx.n, t - s, ctx.d)?;
    // the smoothed symbol carries the original ctx; rebuild on the t−s space
    let smoothed = retagged(&smoothed, inner_ctx);
    let rhs_int = off_diagonal_heat(&smoothed, &inner_ctx, w, z, 16, tol)?;
    let diff = w.sub(z);
    let denom = T::of(4.0) * t * (t - s);
    let re_part = s * diff.norm_sqr() / denom;
    // Im(z·w̄) = Im Σ z_j conj(w_j) = Im(w.dot_conj(z)) with dot_conj(a,b)=ā·b
    let im_zwbar = z
        .0
        .iter()
        .zip(&w.0)
        .map(|(zj, wj)| (*zj * wj.conj()).im)
        .fold(T::zero(), |a, b| a + b);
    let im_part = -s * im_zwbar / (T::of(2.0) * t * (t - s));
    let prefactor = Complex::new(re_part, im_part).exp();
    let rhs = rhs_int.scale(prefactor);
    Ok(lhs.sub(&rhs).max_abs())
}

fn retagged<T: Real>(f: &Symbol<T>, ctx: QuantizationContext<T>) -> Symbol<T> {
    let inner = f.clone();
    Symbol::callable(ctx, Arc::new(move |z: &PhasePoint<T>| inner.eval(z)))
}
