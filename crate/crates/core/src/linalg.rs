//! Minimal dense complex linear algebra: just enough for truncated-operator
//! work (products, adjoints, hermitian eigendecomposition, spectral norms),
//! generic over the real scalar.

use crate::scalar::{c_re, Real, C};
use num_complex::Complex;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T: Real> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c_re(T::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn data(&self) -> &[C<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for j in 0..self.cols {
                    acc = acc + self[(i, j)] * v[j];
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn scale(&self, a: C<T>) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * a)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Largest deviation from hermitian symmetry.
    pub fn hermitian_deviation(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let mut dev = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// (A + A†)/2.
    pub fn hermitize(&self) -> Self {
        let half = c_re(T::of(0.5));
        self.add(&self.adjoint()).scale(half)
    }

    /// Submatrix of the leading `k` rows and columns.
    pub fn leading_block(&self, k: usize) -> Self {
        Self::from_fn(k, k, |i, j| self[(i, j)])
    }

    /// Eigendecomposition of a hermitian matrix by cyclic complex Jacobi
    /// rotations. Returns eigenvalues (ascending) and the unitary whose
    /// columns are the eigenvectors.
    pub fn eigh(&self) -> (Vec<T>, CMatrix<T>) {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut v = CMatrix::identity(n);
        let eps = T::epsilon();
        for _sweep in 0..60 {
            let mut off = T::zero();
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off + a[(p, q)].norm_sqr();
                }
            }
            let diag_scale = (0..n)
                .map(|i| a[(i, i)].norm_sqr())
                .fold(T::zero(), |x, y| x + y)
                .max(T::min_positive_value());
            if off <= eps * eps * diag_scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let b = apq.norm();
                    if b <= eps * (a[(p, p)].norm() + a[(q, q)].norm()) {
                        continue;
                    }
                    let phase = apq / b;
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let tau = (aqq - app) / (T::of(2.0) * b);
                    let t = if tau >= T::zero() {
                        T::one() / (tau + (T::one() + tau * tau).sqrt())
                    } else {
                        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                    };
                    let cth = T::one() / (T::one() + t * t).sqrt();
                    let sth = t * cth;
                    let cc = c_re(cth);
                    let s_e = phase * sth; // s * e^{i arg(apq)}
                    // A <- R† A R with R = I except
                    //   R[p][p]=c, R[p][q]=s e, R[q][p]=-s conj(e), R[q][q]=c
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * cc - akq * s_e.conj();
                        a[(k, q)] = akp * s_e + akq * cc;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = apk * cc - aqk * s_e;
                        a[(q, k)] = apk * s_e.conj() + aqk * cc;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * cc - vkq * s_e.conj();
                        v[(k, q)] = vkp * s_e + vkq * cc;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        let evals: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
        order.sort_by(|&i, &j| evals[i].partial_cmp(&evals[j]).unwrap());
        let sorted_vals: Vec<T> = order.iter().map(|&i| evals[i]).collect();
        let sorted_vecs = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
        (sorted_vals, sorted_vecs)
    }

    /// Spectral norm (largest singular value) via the hermitian
    /// eigendecomposition of A†A.
    pub fn spectral_norm(&self) -> T {
        if self.rows == self.cols && self.hermitian_deviation() <= T::of(1e-12) * (self.max_abs() + T::one()) {
            let (vals, _) = self.eigh();
            return vals
                .iter()
                .map(|x| x.abs())
                .fold(T::zero(), |a, b| a.max(b));
        }
        let gram = self.adjoint().matmul(self);
        let (vals, _) = gram.eigh();
        vals.last().copied().unwrap_or(T::zero()).max(T::zero()).sqrt()
    }

    /// exp(-i τ H) for hermitian H, via eigendecomposition.
    pub fn unitary_exp(&self, tau: T) -> CMatrix<T> {
        let (vals, vecs) = self.eigh();
        let n = self.rows;
        let mut phased = vecs.clone();
        for j in 0..n {
            let ph = Complex::from_polar(T::one(), -tau * vals[j]);
            for i in 0..n {
                phased[(i, j)] = phased[(i, j)] * ph;
            }
        }
        phased.matmul(&vecs.adjoint())
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

pub fn vec_norm<T: Real>(v: &[C<T>]) -> T {
    v.iter()
        .map(|z| z.norm_sqr())
        .fold(T::zero(), |a, b| a + b)
        .sqrt()
}

pub fn inner<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    // convention: ⟨a, b⟩ = Σ a_i conj(b_i), linear in the first slot
    a.iter()
        .zip(b)
        .map(|(x, y)| x * y.conj())
        .fold(Complex::new(T::zero(), T::zero()), |acc, z| acc + z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = CMatrix::from_fn(n, n, |_, _| {
            Complex::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        raw.hermitize()
    }

    #[test]
    fn eigh_reconstructs_matrix() {
        let a = random_hermitian(12, 7);
        let (vals, vecs) = a.eigh();
        let lambda = CMatrix::from_fn(12, 12, |i, j| {
            if i == j {
                Complex::new(vals[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        let recon = vecs.matmul(&lambda).matmul(&vecs.adjoint());
        assert!(a.sub(&recon).max_abs() < 1e-12);
    }

    #[test]
    fn eigh_vectors_unitary() {
        let a = random_hermitian(9, 3);
        let (_, vecs) = a.eigh();
        let dev = vecs.adjoint().matmul(&vecs).sub(&CMatrix::identity(9)).max_abs();
        assert!(dev < 1e-13);
    }

    // independent oracle: power iteration for the largest |eigenvalue|
    fn power_iteration_norm(a: &CMatrix<f64>, iters: usize) -> f64 {
        let gram = a.adjoint().matmul(a);
        let n = gram.rows;
        let mut v: Vec<Complex<f64>> = (0..n)
            .map(|i| Complex::new(1.0 + (i as f64) * 0.1, 0.3 * i as f64))
            .collect();
        let mut lambda = 0.0;
        for _ in 0..iters {
            let w = gram.matvec(&v);
            let nrm = vec_norm(&w);
            lambda = nrm / vec_norm(&v).max(1e-300);
            v = w.iter().map(|z| z / nrm).collect();
        }
        lambda.sqrt()
    }

    #[test]
    fn spectral_norm_vs_power_iteration() {
        let a = random_hermitian(8, 11);
        let direct = a.spectral_norm();
        let oracle = power_iteration_norm(&a, 3000);
        assert!((direct - oracle).abs() < 1e-10, "{direct} vs {oracle}");
    }

    #[test]
    fn unitary_exp_is_unitary_and_matches_diag() {
        let h = random_hermitian(6, 21);
        let u = h.unitary_exp(0.7);
        let dev = u.adjoint().matmul(&u).sub(&CMatrix::identity(6)).max_abs();
        assert!(dev < 1e-13);
        // diagonal case: phases directly
        let d = CMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                Complex::new(i as f64, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        let u = d.unitary_exp(1.3);
        for i in 0..4 {
            let expect = Complex::from_polar(1.0, -1.3 * i as f64);
            assert!((u[(i, i)] - expect).norm() < 1e-15);
        }
    }
}
