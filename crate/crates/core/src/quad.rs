//! Gaussian quadrature for the two integral families in play:
//! Gauss-Hermite tensor rules for heat transforms over R^{2n}, and a
//! polar rule (uniform trapezoid in angle, Gauss-Laguerre in u = r²/2t)
//! for integrals against the Gaussian measure μ on C^n.
//!
//! Node/weight computation is Golub-Welsch on the Jacobi matrix, with a
//! dedicated implicit-QL tridiagonal eigensolver so everything stays
//! generic over the scalar.

use crate::error::{Error, Result};
use crate::phase::{PhasePoint, QuantizationContext};
use crate::scalar::{pairwise_sum, Real, C};
use num_complex::Complex;

/// Implicit-shift QL for a symmetric tridiagonal matrix.
/// `d` holds the diagonal, `e` the off-diagonal (e[0..n-1], e[n-1] unused).
/// `z` is rotated along; seeded with (1,0,…,0) it ends up holding the first
/// component of each normalized eigenvector. Eigenvalues land in `d`.
fn tridiag_ql<T: Real>(d: &mut [T], e: &mut [T], z: &mut [T]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = T::zero();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::Accuracy("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (T::of(2.0) * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut i = m;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + T::of(2.0) * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if r == T::zero() && i > l {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

fn golub_welsch<T: Real>(mut diag: Vec<T>, mut off: Vec<T>, mu0: T) -> Result<(Vec<T>, Vec<T>)> {
    let n = diag.len();
    let mut z = vec![T::zero(); n];
    z[0] = T::one();
    tridiag_ql(&mut diag, &mut off, &mut z)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let nodes: Vec<T> = idx.iter().map(|&i| diag[i]).collect();
    let weights: Vec<T> = idx.iter().map(|&i| mu0 * z[i] * z[i]).collect();
    Ok((nodes, weights))
}

/// Gauss-Hermite nodes/weights for weight e^{−x²} on R.
pub fn gauss_hermite<T: Real>(n: usize) -> Result<(Vec<T>, Vec<T>)> {
    let diag = vec![T::zero(); n];
    let mut off = vec![T::zero(); n];
    for k in 1..n {
        off[k - 1] = (T::of_usize(k) / T::of(2.0)).sqrt();
    }
    golub_welsch(diag, off, T::PI().sqrt())
}

/// Gauss-Laguerre nodes/weights for weight e^{−x} on (0,∞).
pub fn gauss_laguerre<T: Real>(n: usize) -> Result<(Vec<T>, Vec<T>)> {
    let diag: Vec<T> = (0..n).map(|k| T::of_usize(2 * k + 1)).collect();
    let mut off = vec![T::zero(); n];
    for k in 1..n {
        off[k - 1] = T::of_usize(k);
    }
    golub_welsch(diag, off, T::one())
}

/// Node-doubling accuracy policy: double until the relative change drops
/// below `tol`, starting from `initial` nodes, capped at `cap`.
#[derive(Clone, Copy, Debug)]
pub struct Doubling<T: Real> {
    pub initial: usize,
    pub tol: T,
    pub cap: usize,
}

impl<T: Real> Default for Doubling<T> {
    fn default() -> Self {
        Doubling {
            initial: 16,
            tol: T::of(1e-10),
            cap: 1 << 14,
        }
    }
}

/// ∫ f dμ over C^n by the polar rule: per complex coordinate,
/// z_j = √(2t·u_j) e^{iθ_j} with Gauss-Laguerre in u and uniform trapezoid
/// in θ. Exact for polynomial × trigonometric integrands below the node
/// counts.
pub fn integrate_measure<T: Real>(
    ctx: &QuantizationContext<T>,
    radial: usize,
    angular: usize,
    f: &dyn Fn(&PhasePoint<T>) -> C<T>,
) -> Result<C<T>> {
    let (u_nodes, u_weights) = gauss_laguerre::<T>(radial)?;
    let n = ctx.n;
    let two_t = T::of(2.0) * ctx.t;
    let ang_w = T::one() / T::of_usize(angular);
    // radii and unit phases per coordinate are shared
    let radii: Vec<T> = u_nodes.iter().map(|&u| (two_t * u).sqrt()).collect();
    let phases: Vec<C<T>> = (0..angular)
        .map(|k| {
            let th = T::of(2.0) * T::PI() * T::of_usize(k) / T::of_usize(angular);
            Complex::from_polar(T::one(), th)
        })
        .collect();

    // odometer over (radial × angular)^n
    let per_coord = radial * angular;
    let total = per_coord.pow(n as u32);
    let mut terms: Vec<C<T>> = Vec::with_capacity(total);
    let mut z = vec![Complex::new(T::zero(), T::zero()); n];
    for flat in 0..total {
        let mut rem = flat;
        let mut w = T::one();
        for zj in z.iter_mut() {
            let local = rem % per_coord;
            rem /= per_coord;
            let iu = local % radial;
            let ia = local / radial;
            *zj = phases[ia] * radii[iu];
            w *= u_weights[iu] * ang_w;
        }
        let val = f(&PhasePoint::new(z.clone()));
        terms.push(val * w);
    }
    Ok(pairwise_sum(&terms))
}

/// Same integral with node doubling until stable; returns the value and the
/// node counts (radial, angular) that achieved it.
pub fn integrate_measure_adaptive<T: Real>(
    ctx: &QuantizationContext<T>,
    policy: Doubling<T>,
    f: &dyn Fn(&PhasePoint<T>) -> C<T>,
) -> Result<(C<T>, (usize, usize))> {
    let mut radial = policy.initial.max(4);
    let mut angular = (2 * policy.initial).max(8);
    let mut prev = integrate_measure(ctx, radial, angular, f)?;
    loop {
        let r2 = radial * 2;
        let a2 = angular * 2;
        if r2 * a2 > policy.cap {
            return Err(Error::Accuracy(format!(
                "measure quadrature not converged at {radial}x{angular} nodes"
            )));
        }
        let next = integrate_measure(ctx, r2, a2, f)?;
        let scale = next.norm().max(T::one());
        if (next - prev).norm() <= policy.tol * scale {
            return Ok((next, (r2, a2)));
        }
        prev = next;
        radial = r2;
        angular = a2;
    }
}

/// Expectation E[g(ξ)] of g against the standard product Gaussian
/// (2πs)^{−k/2} e^{−|x|²/2s} on R^k, by tensorized Gauss-Hermite:
/// x = √(2s)·ξ against weight e^{−ξ²}/√π per coordinate.
pub fn gaussian_expectation<T: Real, V, Acc>(
    s: T,
    k: usize,
    nodes_per_dim: usize,
    mut zero: Acc,
    mut add_scaled: impl FnMut(&mut Acc, V, T),
    g: impl Fn(&[T]) -> V,
) -> Result<Acc> {
    let (nodes, weights) = gauss_hermite::<T>(nodes_per_dim)?;
    let scale = (T::of(2.0) * s).sqrt();
    let norm = T::PI().sqrt();
    let total = nodes_per_dim.pow(k as u32);
    let mut x = vec![T::zero(); k];
    for flat in 0..total {
        let mut rem = flat;
        let mut w = T::one();
        for xj in x.iter_mut() {
            let i = rem % nodes_per_dim;
            rem /= nodes_per_dim;
            *xj = scale * nodes[i];
            w *= weights[i] / norm;
        }
        add_scaled(&mut zero, g(&x), w);
    }
    Ok(zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::gaussian_density;
    use num_complex::Complex64;

    #[test]
    fn gauss_hermite_moments() {
        // ∫ x^{2k} e^{−x²} dx = Γ(k+1/2)
        let (x, w) = gauss_hermite::<f64>(24).unwrap();
        let m0: f64 = w.iter().sum();
        assert!((m0 - std::f64::consts::PI.sqrt()).abs() < 1e-13);
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| x * x * w).sum();
        assert!((m2 - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-13);
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| x.powi(4) * w).sum();
        assert!((m4 - 0.75 * std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gauss_laguerre_moments() {
        // ∫ x^k e^{−x} dx = k!
        let (x, w) = gauss_laguerre::<f64>(20).unwrap();
        for k in 0..8usize {
            let mk: f64 = x.iter().zip(&w).map(|(x, w)| x.powi(k as i32) * w).sum();
            let expect: f64 = (1..=k).product::<usize>() as f64;
            assert!((mk - expect).abs() < 1e-10 * expect.max(1.0), "k={k}");
        }
    }

    #[test]
    fn measure_total_mass_is_one() {
        let ctx = QuantizationContext::scalar(1, 0.5).unwrap();
        let one = |_: &PhasePoint<f64>| Complex64::new(1.0, 0.0);
        let v = integrate_measure(&ctx, 16, 16, &one).unwrap();
        assert!((v.re - 1.0).abs() < 1e-12);
        // and in n=2
        let ctx2 = QuantizationContext::scalar(2, 0.7).unwrap();
        let v2 = integrate_measure(&ctx2, 8, 8, &one).unwrap();
        assert!((v2.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_normalization_via_cartesian_oracle() {
        // independent route: integrate the density over R² with plain
        // Gauss-Hermite against e^{−x²} compensation
        let ctx = QuantizationContext::scalar(1, 0.5).unwrap();
        let (x, w) = gauss_hermite::<f64>(48).unwrap();
        let mut total = 0.0;
        for (&xi, &wi) in x.iter().zip(&w) {
            for (&yj, &wj) in x.iter().zip(&w) {
                let z = PhasePoint::one(Complex64::new(xi, yj));
                total += wi * wj * gaussian_density(&ctx, &z) * (xi * xi + yj * yj).exp();
            }
        }
        assert!((total - 1.0).abs() < 1e-10, "total={total}");
    }

    #[test]
    fn normalized_kernel_has_unit_mass() {
        // ∫|k_w|² dμ = 1 at n=1, t=0.5, w=1+i
        let ctx = QuantizationContext::scalar(1, 0.5).unwrap();
        let w = PhasePoint::one(Complex64::new(1.0, 1.0));
        let f = |z: &PhasePoint<f64>| {
            let k = crate::phase::normalized_kernel(&ctx, z, &w);
            Complex64::new(k.norm_sqr(), 0.0)
        };
        let (v, _) = integrate_measure_adaptive(&ctx, Doubling::default(), &f).unwrap();
        assert!((v.re - 1.0).abs() < 1e-10, "mass={}", v.re);
    }

    #[test]
    fn reproducing_property_on_polynomials() {
        // ∫ p(u) conj(K(u,z)) dμ(u) = p(z) for analytic p, deg ≤ M
        let ctx = QuantizationContext::scalar(1, 0.5).unwrap();
        let z0 = Complex64::new(0.4, -0.3);
        let z0p = PhasePoint::one(z0);
        let p = |u: Complex64| 1.0 + 2.0 * u + 0.5 * u * u * u;
        let f = |u: &PhasePoint<f64>| {
            p(u.0[0]) * crate::phase::reproducing_kernel(&ctx, u, &z0p).conj()
        };
        let v = integrate_measure(&ctx, 24, 32, &f).unwrap();
        let expect = p(z0);
        assert!((v - expect).norm() < 1e-10);
    }

    #[test]
    fn gaussian_expectation_second_moment() {
        // E|z+W|² = |z|² + 2s at n=1
        let s = 0.25;
        let z = Complex64::new(0.7, -0.2);
        let v = gaussian_expectation(
            s,
            2,
            12,
            0.0f64,
            |acc, v: f64, w| *acc += v * w,
            |x| (z + Complex64::new(x[0], x[1])).norm_sqr(),
        )
        .unwrap();
        assert!((v - (z.norm_sqr() + 2.0 * s)).abs() < 1e-12);
    }
}
