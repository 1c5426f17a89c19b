//! Truncated Toeplitz matrices P_M T_f P_M and everything built on them:
//! Berezin transforms, Weyl/displacement matrices, the harmonic oscillator,
//! translation and rotation covariance, phase-space form derivatives, the
//! integral-representation identity, and the portable text export.

use crate::error::{Error, Result};
use crate::fock::{coherent_coefficients, monomial_eval, CoefficientVector, MultiIndex, TruncationSpec};
use crate::heat::off_diagonal_heat;
use crate::linalg::CMatrix;
use crate::phase::{symplectic_form, PhasePoint};
use crate::quad::gauss_laguerre;
use crate::scalar::{c_re, pairwise_sum, Real, C};
use crate::symbol::{BuiltIn, PolySymbol, Symbol, SymbolKind};
use num_complex::Complex;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::io::{BufRead, Write};

/// Default memory guard on the matrix dimension (rows).
pub const DIM_CAP: usize = 4096;

/// Controls for the quadrature assembly path and its node doubling.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureSpec<T: Real> {
    pub radial: usize,
    pub angular: usize,
    pub tol: T,
    /// Cap on radial·angular nodes per coordinate during doubling.
    pub node_cap: usize,
    /// Memory guard on the matrix dimension.
    pub dim_cap: usize,
}

impl<T: Real> Default for QuadratureSpec<T> {
    fn default() -> Self {
        QuadratureSpec {
            radial: 8,
            angular: 16,
            tol: T::of(1e-10),
            node_cap: 1 << 15,
            dim_cap: DIM_CAP,
        }
    }
}

impl<T: Real> QuadratureSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.radial < 4 || self.angular < 4 {
            return Err(Error::Parameter("quadrature needs at least 4 nodes".into()));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::Parameter("quadrature tolerance must be > 0".into()));
        }
        Ok(())
    }
}

/// How a matrix came to be; rides along into the export header.
#[derive(Clone, Debug)]
pub struct Provenance {
    pub symbol: String,
    pub t: f64,
    pub quadrature: Option<String>,
    /// Max |A − A†| entry absorbed by symmetrization (0 for closed forms).
    pub hermitian_deviation: f64,
}

/// The compression P_M T_f P_M in the graded monomial basis
/// (basis index major, internal index minor).
#[derive(Clone, Debug)]
pub struct TruncatedOperator<T: Real> {
    pub spec: TruncationSpec<T>,
    pub matrix: CMatrix<T>,
    pub hermitian: bool,
    pub provenance: Provenance,
}

impl<T: Real> TruncatedOperator<T> {
    fn new(
        spec: TruncationSpec<T>,
        matrix: CMatrix<T>,
        symbol_hermitian: bool,
        provenance: Provenance,
    ) -> Result<Self> {
        let mut provenance = provenance;
        let matrix = if symbol_hermitian {
            let dev = matrix.hermitian_deviation();
            if dev > T::of(1e-9) {
                return Err(Error::Assembly(format!(
                    "hermitian symbol assembled with deviation {dev:?} > 1e-9"
                )));
            }
            provenance.hermitian_deviation = dev.to_f64().unwrap_or(f64::NAN);
            matrix.hermitize()
        } else {
            matrix
        };
        Ok(TruncatedOperator { spec, matrix, hermitian: symbol_hermitian, provenance })
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Largest singular value (largest |eigenvalue| when hermitian).
    pub fn operator_norm(&self) -> T {
        self.matrix.spectral_norm()
    }

    /// Ascending eigenvalues; requires the hermitian flag.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        if !self.hermitian {
            return Err(Error::Parameter("eigenvalues need a hermitian operator".into()));
        }
        Ok(self.matrix.eigh().0)
    }

    /// Interior compression to basis degrees ≤ `deg` (times the internal d).
    pub fn interior_block(&self, deg: usize) -> CMatrix<T> {
        self.matrix.leading_block(interior_dim(&self.spec, deg))
    }
}

/// Number of rows spanned by basis elements of degree ≤ deg.
pub fn interior_dim<T: Real>(spec: &TruncationSpec<T>, deg: usize) -> usize {
    spec.basis().iter().take_while(|nu| nu.degree() <= deg).count() * spec.ctx.d
}

fn symbol_tag<T: Real>(f: &Symbol<T>) -> String {
    f.to_json()
        .map(|v| v.to_string())
        .unwrap_or_else(|_| "callable".into())
}

/// P_M T_f P_M. Polynomial symbols (and built-ins with exact polynomial
/// form) assemble in closed form from the Gaussian moments
/// ∫ z^α z̄^β dμ = δ_{αβ} α! (2t)^{|α|}; SineRe has an exact
/// exponential-symbol expansion; everything else integrates each matrix
/// element by the polar product rule with node doubling.
pub fn assemble_toeplitz<T: Real>(
    f: &Symbol<T>,
    spec: &TruncationSpec<T>,
    q: &QuadratureSpec<T>,
) -> Result<TruncatedOperator<T>> {
    q.validate()?;
    if f.ctx != spec.ctx {
        return Err(Error::Parameter("symbol and truncation contexts differ".into()));
    }
    let dim = spec.dim();
    if dim > q.dim_cap {
        return Err(Error::DimensionCap { dim, cap: q.dim_cap });
    }
    let t64 = spec.ctx.t.to_f64().unwrap_or(f64::NAN);
    if let Some(p) = f.as_polynomial() {
        let matrix = assemble_polynomial(&p, spec);
        let prov = Provenance {
            symbol: symbol_tag(f),
            t: t64,
            quadrature: None,
            hermitian_deviation: 0.0,
        };
        return TruncatedOperator::new(spec.clone(), matrix, f.is_hermitian(), prov);
    }
    if let SymbolKind::BuiltIn(BuiltIn::SineRe) = &f.kind {
        let matrix = assemble_sine_re(spec);
        let prov = Provenance {
            symbol: symbol_tag(f),
            t: t64,
            quadrature: None,
            hermitian_deviation: 0.0,
        };
        return TruncatedOperator::new(spec.clone(), matrix, true, prov);
    }
    let (matrix, nodes) = assemble_quadrature(f, spec, q)?;
    let prov = Provenance {
        symbol: symbol_tag(f),
        t: t64,
        quadrature: Some(format!("polar {}x{}", nodes.0, nodes.1)),
        hermitian_deviation: 0.0,
    };
    TruncatedOperator::new(spec.clone(), matrix, f.is_hermitian(), prov)
}

fn assemble_polynomial<T: Real>(p: &PolySymbol<T>, spec: &TruncationSpec<T>) -> CMatrix<T> {
    let d = spec.ctx.d;
    let n = spec.ctx.n;
    let ln_2t = (T::of(2.0) * spec.ctx.t).ln();
    let basis = spec.basis();
    let mut matrix = CMatrix::zeros(spec.dim(), spec.dim());
    for (kappa_idx, kappa) in basis.iter().enumerate() {
        for ((a, b), coeff) in &p.terms {
            // moment is nonzero only when a + κ = b + ν componentwise
            let mut nu = vec![0usize; n];
            let mut ok = true;
            for j in 0..n {
                let lhs = a[j] + kappa.0[j];
                if lhs < b[j] {
                    ok = false;
                    break;
                }
                nu[j] = lhs - b[j];
            }
            if !ok {
                continue;
            }
            let nu = MultiIndex(nu);
            let nu_idx = match spec.index_of(&nu) {
                Some(i) => i,
                None => continue,
            };
            let merged = MultiIndex(
                (0..n).map(|j| a[j] + kappa.0[j]).collect(),
            );
            let ln_factor = merged.ln_factorial::<T>()
                + T::of_usize(merged.degree()) * ln_2t
                - (kappa.ln_factorial::<T>()
                    + nu.ln_factorial::<T>()
                    + T::of_usize(kappa.degree() + nu.degree()) * ln_2t)
                    / T::of(2.0);
            let factor = ln_factor.exp();
            for i in 0..d {
                for jj in 0..d {
                    let idx = (nu_idx * d + i, kappa_idx * d + jj);
                    matrix[idx] = matrix[idx] + coeff[(i, jj)] * c_re(factor);
                }
            }
        }
    }
    matrix
}

/// Matrix elements of T_{sin(Re z)} at n = d = 1 from the exponential
/// symbols e^{±i(z+z̄)/2}: for κ+ν odd,
///   A[ν,κ] = e^{−t/2} Σ_j (−1)^{(κ+ν−1)/2 − j} C(κ,j)C(ν,j) j!(2t)^j
///            t^{κ+ν−2j} / √(κ!ν!(2t)^{κ+ν}),
/// and 0 for κ+ν even. Summed in log space against the largest term.
fn assemble_sine_re<T: Real>(spec: &TruncationSpec<T>) -> CMatrix<T> {
    let m = spec.m;
    let t = spec.ctx.t;
    let ln_t = t.ln();
    let ln_2t = (T::of(2.0) * t).ln();
    let damp = (-t / T::of(2.0)).exp();
    // cumulative ln k! table: the j-loop below touches factorials
    // quadratically often
    let mut lnf = Vec::with_capacity(m + 2);
    lnf.push(T::zero());
    for k in 1..=m + 1 {
        lnf.push(lnf[k - 1] + T::of_usize(k).ln());
    }
    let entry = |nu: usize, kappa: usize| -> T {
        if (nu + kappa) % 2 == 0 {
            return T::zero();
        }
        let jmax = nu.min(kappa);
        let lnc = |n: usize, k: usize| lnf[n] - lnf[k] - lnf[n - k];
        let norm = (lnf[nu] + lnf[kappa] + T::of_usize(nu + kappa) * ln_2t) / T::of(2.0);
        let mut lns = Vec::with_capacity(jmax + 1);
        let mut signs = Vec::with_capacity(jmax + 1);
        let base_pow = (nu + kappa - 1) / 2;
        for j in 0..=jmax {
            let ln = lnc(kappa, j)
                + lnc(nu, j)
                + lnf[j]
                + T::of_usize(j) * ln_2t
                + T::of_usize(nu + kappa - 2 * j) * ln_t
                - norm;
            lns.push(ln);
            signs.push(if (base_pow - j) % 2 == 0 { T::one() } else { -T::one() });
        }
        let peak = lns.iter().cloned().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for (ln, s) in lns.iter().zip(&signs) {
            sum += *s * (*ln - peak).exp();
        }
        damp * peak.exp() * sum
    };
    CMatrix::from_fn(m + 1, m + 1, |nu, kappa| Complex::new(entry(nu, kappa), T::zero()))
}

fn assemble_quadrature<T: Real>(
    f: &Symbol<T>,
    spec: &TruncationSpec<T>,
    q: &QuadratureSpec<T>,
) -> Result<(CMatrix<T>, (usize, usize))> {
    // polynomial exactness floor: basis products reach degree 2M in r and
    // angular frequency M, on top of whatever the symbol contributes
    let mut radial = q.radial.max(spec.m + 4);
    let mut angular = q.angular.max(2 * spec.m + 8);
    let mut prev = quadrature_pass(f, spec, radial, angular)?;
    loop {
        let (r2, a2) = (radial * 2, angular * 2);
        if r2 * a2 > q.node_cap {
            return Err(Error::Accuracy(format!(
                "Toeplitz quadrature not converged at {radial}x{angular} nodes"
            )));
        }
        let next = quadrature_pass(f, spec, r2, a2)?;
        let diff = next.sub(&prev).max_abs();
        let scale = next.max_abs().max(T::one());
        if diff <= q.tol * scale {
            return Ok((next, (r2, a2)));
        }
        prev = next;
        radial = r2;
        angular = a2;
    }
}

fn quadrature_pass<T: Real>(
    f: &Symbol<T>,
    spec: &TruncationSpec<T>,
    radial: usize,
    angular: usize,
) -> Result<CMatrix<T>> {
    let ctx = spec.ctx;
    let n = ctx.n;
    let d = ctx.d;
    let (u_nodes, u_weights) = gauss_laguerre::<T>(radial)?;
    let two_t = T::of(2.0) * ctx.t;
    let radii: Vec<T> = u_nodes.iter().map(|&u| (two_t * u).sqrt()).collect();
    let ang_w = T::one() / T::of_usize(angular);
    let phases: Vec<C<T>> = (0..angular)
        .map(|k| Complex::from_polar(T::one(), T::of(2.0) * T::PI() * T::of_usize(k) / T::of_usize(angular)))
        .collect();
    let per_coord = radial * angular;
    let total = per_coord.pow(n as u32);
    let basis = spec.basis();
    let blen = basis.len();
    // per node: weight, basis values e_ν(z), symbol value f(z)
    let evals: Vec<Result<(T, Vec<C<T>>, CMatrix<T>)>> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut w = T::one();
            let mut z = vec![Complex::new(T::zero(), T::zero()); n];
            for zj in z.iter_mut() {
                let local = rem % per_coord;
                rem /= per_coord;
                *zj = phases[local / radial] * radii[local % radial];
                w *= u_weights[local % radial] * ang_w;
            }
            let zp = PhasePoint::new(z);
            let fv = f.eval(&zp)?;
            let ev: Vec<C<T>> = basis.iter().map(|nu| monomial_eval(&ctx, nu, &zp)).collect();
            Ok((w, ev, fv))
        })
        .collect();
    let dim = spec.dim();
    // deterministic Kahan-compensated accumulation per entry over nodes
    let zero = Complex::new(T::zero(), T::zero());
    let mut sum = vec![zero; dim * dim];
    let mut comp = vec![zero; dim * dim];
    for e in evals {
        let (w, ev, fv) = e?;
        for nu_idx in 0..blen {
            let left = ev[nu_idx].conj() * c_re(w);
            for kappa_idx in 0..blen {
                let pair = left * ev[kappa_idx];
                for i in 0..d {
                    for jj in 0..d {
                        let at = (nu_idx * d + i) * dim + kappa_idx * d + jj;
                        let y = fv[(i, jj)] * pair - comp[at];
                        let t_acc = sum[at] + y;
                        comp[at] = (t_acc - sum[at]) - y;
                        sum[at] = t_acc;
                    }
                }
            }
        }
    }
    Ok(CMatrix::from_fn(dim, dim, |r, c| sum[r * dim + c]))
}

/// T_{z_j} (or T_{z̄_j} with `conjugate`) tensored with the internal
/// identity, in closed form.
pub fn coordinate_toeplitz<T: Real>(
    spec: &TruncationSpec<T>,
    j: usize,
    conjugate: bool,
) -> Result<TruncatedOperator<T>> {
    let ctx = spec.ctx;
    let mut p = PolySymbol::new(ctx.n, ctx.d);
    let mut a = vec![0usize; ctx.n];
    let mut b = vec![0usize; ctx.n];
    if conjugate {
        b[j] = 1;
    } else {
        a[j] = 1;
    }
    p.add_term(a, b, CMatrix::identity(ctx.d));
    let f = Symbol::polynomial(ctx, p)?;
    assemble_toeplitz(&f, spec, &QuadratureSpec::default())
}

/// Diagonal N with entry t(|ν|+n) per basis index, tensored with the
/// internal identity; equals ½ T_{|z|²} exactly.
pub fn harmonic_oscillator<T: Real>(spec: &TruncationSpec<T>) -> TruncatedOperator<T> {
    let ctx = spec.ctx;
    let d = ctx.d;
    let dim = spec.dim();
    let basis = spec.basis();
    let matrix = CMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            let nu = &basis[r / d];
            Complex::new(ctx.t * T::of_usize(nu.degree() + ctx.n), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    });
    TruncatedOperator {
        spec: spec.clone(),
        matrix,
        hermitian: true,
        provenance: Provenance {
            symbol: "harmonic_oscillator".into(),
            t: ctx.t.to_f64().unwrap_or(f64::NAN),
            quadrature: None,
            hermitian_deviation: 0.0,
        },
    }
}

/// The Berezin value Ã(z) = ⟨A k_z, k_z⟩ as a d×d matrix, with the
/// coherent tail mass at this cutoff attached.
#[derive(Clone, Debug)]
pub struct BerezinValue<T: Real> {
    pub value: CMatrix<T>,
    pub tail_mass: T,
    /// Set when the tail mass exceeds 1e−8 (value is then polluted).
    pub tail_warning: bool,
}

pub fn berezin_transform<T: Real>(
    a: &TruncatedOperator<T>,
    z: &PhasePoint<T>,
) -> Result<BerezinValue<T>> {
    let spec = &a.spec;
    if z.dim() != spec.ctx.n {
        return Err(Error::Parameter("berezin point dimension mismatch".into()));
    }
    let coh = coherent_coefficients(spec, z);
    let tail = coh.tail_mass.unwrap_or(T::zero());
    let d = spec.ctx.d;
    let blen = spec.basis_len();
    let value = CMatrix::from_fn(d, d, |i, jj| {
        let mut terms = Vec::with_capacity(blen * blen);
        for nu in 0..blen {
            for kappa in 0..blen {
                terms.push(
                    coh.coeffs[nu].conj()
                        * a.matrix[(nu * d + i, kappa * d + jj)]
                        * coh.coeffs[kappa],
                );
            }
        }
        pairwise_sum(&terms)
    });
    Ok(BerezinValue {
        value,
        tail_mass: tail,
        tail_warning: tail > T::of(1e-8),
    })
}

/// W_w = exp((1/2t)(T_{w̄·z} − T_{w·z̄})), the displacement with
/// W_w 1 = k_w, computed through the eigendecomposition of the hermitian
/// generator i·G. Accuracy degrades with |w|·√M as the coherent state
/// leaves the truncation.
pub fn weyl_matrix<T: Real>(
    spec: &TruncationSpec<T>,
    w: &PhasePoint<T>,
) -> Result<TruncatedOperator<T>> {
    let ctx = spec.ctx;
    if w.dim() != ctx.n {
        return Err(Error::Parameter("weyl point dimension mismatch".into()));
    }
    let mut p = PolySymbol::new(ctx.n, ctx.d);
    for j in 0..ctx.n {
        let mut a = vec![0usize; ctx.n];
        a[j] = 1;
        let mut b = vec![0usize; ctx.n];
        b[j] = 1;
        // (1/2t)(w̄_j z_j − w_j z̄_j)
        p.add_term(a.clone(), vec![0; ctx.n], CMatrix::identity(ctx.d).scale(w.0[j].conj()));
        p.add_term(vec![0; ctx.n], b, CMatrix::identity(ctx.d).scale(-w.0[j]));
    }
    let gen = Symbol::polynomial(ctx, p)?;
    let g = assemble_toeplitz(&gen, spec, &QuadratureSpec::default())?;
    let half = T::one() / (T::of(2.0) * ctx.t);
    // H = iG is hermitian for the skew generator; W = exp(G) = exp(−iH)
    let h = g.matrix.scale(Complex::new(T::zero(), half)).hermitize();
    let matrix = h.unitary_exp(T::one());
    Ok(TruncatedOperator {
        spec: spec.clone(),
        matrix,
        hermitian: false,
        provenance: Provenance {
            symbol: format!("weyl({:?})", w.0),
            t: ctx.t.to_f64().unwrap_or(f64::NAN),
            quadrature: None,
            hermitian_deviation: 0.0,
        },
    })
}

/// Max-entry residual of W_w W_z − e^{iω(w,z)/2t} W_{w+z} on the interior
/// block of degrees ≤ M/2.
pub fn weyl_relation_check<T: Real>(
    spec: &TruncationSpec<T>,
    w: &PhasePoint<T>,
    z: &PhasePoint<T>,
) -> Result<T> {
    let ww = weyl_matrix(spec, w)?;
    let wz = weyl_matrix(spec, z)?;
    let wsum = weyl_matrix(spec, &w.add(z))?;
    let omega = symplectic_form(w, z);
    let phase = Complex::from_polar(T::one(), omega / (T::of(2.0) * spec.ctx.t));
    let lhs = ww.matrix.matmul(&wz.matrix);
    let rhs = wsum.matrix.scale(phase);
    let k = interior_dim(spec, spec.m / 2);
    Ok(lhs.sub(&rhs).leading_block(k).max_abs())
}

/// Max-entry residual of W_z T_f W_{−z} − T_{f(·−z)} on the interior block
/// (translation covariance α_z T_f = T_{α_z f}).
pub fn covariance_check<T: Real>(
    f: &Symbol<T>,
    spec: &TruncationSpec<T>,
    z: &PhasePoint<T>,
) -> Result<T> {
    let p = f.as_polynomial().ok_or_else(|| {
        Error::UnsupportedVariant("covariance_check needs a Polynomial symbol".into())
    })?;
    let a = assemble_toeplitz(f, spec, &QuadratureSpec::default())?;
    let wz = weyl_matrix(spec, z)?;
    let wneg = weyl_matrix(spec, &z.scale(Complex::new(-T::one(), T::zero())))?;
    let lhs = wz.matrix.matmul(&a.matrix).matmul(&wneg.matrix);
    let shifted = p.translate(&z.scale(Complex::new(-T::one(), T::zero())));
    let rhs = assemble_toeplitz(
        &Symbol::polynomial(spec.ctx, shifted)?,
        spec,
        &QuadratureSpec::default(),
    )?;
    let k = interior_dim(spec, spec.m / 2);
    Ok(lhs.sub(&rhs.matrix).leading_block(k).max_abs())
}

/// Max-entry residual of U_θ T_f U_θ† − T_{f(e^{iθ}·)} where U_θ is the
/// exact diagonal e^{iθN/t} with phases e^{iθ(|ν|+n)}. Exact to rounding
/// because rotation commutes with the total-degree cutoff.
pub fn rotation_covariance_check<T: Real>(
    f: &Symbol<T>,
    spec: &TruncationSpec<T>,
    theta: T,
) -> Result<T> {
    let p = f.as_polynomial().ok_or_else(|| {
        Error::UnsupportedVariant("rotation_covariance_check needs a Polynomial symbol".into())
    })?;
    let ctx = spec.ctx;
    let a = assemble_toeplitz(f, spec, &QuadratureSpec::default())?;
    let d = ctx.d;
    let basis = spec.basis();
    let phases: Vec<C<T>> = (0..spec.dim())
        .map(|r| {
            Complex::from_polar(
                T::one(),
                theta * T::of_usize(basis[r / d].degree() + ctx.n),
            )
        })
        .collect();
    let dim = spec.dim();
    let conjugated = CMatrix::from_fn(dim, dim, |r, c| {
        phases[r] * a.matrix[(r, c)] * phases[c].conj()
    });
    let rhs = assemble_toeplitz(
        &Symbol::polynomial(ctx, p.rotate(theta))?,
        spec,
        &QuadratureSpec::default(),
    )?;
    Ok(conjugated.sub(&rhs.matrix).max_abs())
}

/// Phase-space form derivatives at truncation scale:
/// ∂_j A = −(1/2t)[A, T_{z̄_j}] and ∂̄_j A = (1/2t)[A, T_{z_j}].
pub fn form_derivative<T: Real>(
    a: &TruncatedOperator<T>,
    j: usize,
    conjugate: bool,
) -> Result<TruncatedOperator<T>> {
    let ctx = a.spec.ctx;
    if j >= ctx.n {
        return Err(Error::Parameter("form_derivative coordinate out of range".into()));
    }
    let coord = coordinate_toeplitz(&a.spec, j, !conjugate)?;
    let comm = a.matrix.matmul(&coord.matrix).sub(&coord.matrix.matmul(&a.matrix));
    let scale = if conjugate {
        T::one() / (T::of(2.0) * ctx.t)
    } else {
        -T::one() / (T::of(2.0) * ctx.t)
    };
    Ok(TruncatedOperator {
        spec: a.spec.clone(),
        matrix: comm.scale(c_re(scale)),
        hermitian: false,
        provenance: Provenance {
            symbol: format!(
                "{}derivative_{} of {}",
                if conjugate { "conj_" } else { "" },
                j,
                a.provenance.symbol
            ),
            t: a.provenance.t,
            quadrature: a.provenance.quadrature.clone(),
            hermitian_deviation: 0.0,
        },
    })
}

/// Deviation between the two sides of
///   T_f g(z) = ∫ e^{|z−w|²/4t + Re(z·w̄)/2t} f̃^{(t)}(w,z) g(w) dμ(w),
/// with the left side through the assembled matrix and coherent-series
/// evaluation, and the right side by polar quadrature over w with the
/// two-point heat transform inside.
pub fn integral_representation_check<T: Real>(
    f: &Symbol<T>,
    spec: &TruncationSpec<T>,
    g: &CoefficientVector<T>,
    z: &PhasePoint<T>,
    q: &QuadratureSpec<T>,
) -> Result<T> {
    let ctx = spec.ctx;
    let d = ctx.d;
    let dim = spec.dim();
    if g.coeffs.len() != dim {
        return Err(Error::Parameter("coefficient vector length mismatch".into()));
    }
    // integrability proxy: g supported in degrees ≤ M/2
    let cut = interior_dim(spec, spec.m / 2);
    if g.coeffs[cut..].iter().any(|c| c.norm_sqr() > T::zero()) {
        return Err(Error::Parameter(
            "integral_representation_check needs g supported in degrees <= M/2".into(),
        ));
    }
    let a = assemble_toeplitz(f, spec, q)?;
    let ag = a.matrix.matvec(&g.coeffs);
    let basis = spec.basis();
    let eval_state = |c: &[C<T>], at: &PhasePoint<T>| -> Vec<C<T>> {
        (0..d)
            .map(|i| {
                let terms: Vec<C<T>> = basis
                    .iter()
                    .enumerate()
                    .map(|(nu_idx, nu)| c[nu_idx * d + i] * monomial_eval(&ctx, nu, at))
                    .collect();
                pairwise_sum(&terms)
            })
            .collect()
    };
    let lhs = eval_state(&ag, z);
    let four_t = T::of(4.0) * ctx.t;
    let two_t = T::of(2.0) * ctx.t;
    let rhs_pass = |radial: usize, angular: usize| -> Result<Vec<C<T>>> {
        let (u_nodes, u_weights) = gauss_laguerre::<T>(radial)?;
        let radii: Vec<T> = u_nodes.iter().map(|&u| (two_t * u).sqrt()).collect();
        let ang_w = T::one() / T::of_usize(angular);
        let phases: Vec<C<T>> = (0..angular)
            .map(|k| {
                Complex::from_polar(
                    T::one(),
                    T::of(2.0) * T::PI() * T::of_usize(k) / T::of_usize(angular),
                )
            })
            .collect();
        let per_coord = radial * angular;
        let total = per_coord.pow(ctx.n as u32);
        let mut terms: Vec<Vec<C<T>>> = vec![Vec::with_capacity(total); d];
        for flat in 0..total {
            let mut rem = flat;
            let mut wt = T::one();
            let mut wpt = vec![Complex::new(T::zero(), T::zero()); ctx.n];
            for wj in wpt.iter_mut() {
                let local = rem % per_coord;
                rem /= per_coord;
                *wj = phases[local / radial] * radii[local % radial];
                wt *= u_weights[local % radial] * ang_w;
            }
            let w = PhasePoint::new(wpt);
            let pref = (z.sub(&w).norm_sqr() / four_t + z.dot_conj(&w).re / two_t).exp();
            let odh = off_diagonal_heat(f, &ctx, &w, z, 12, T::of(1e-8))?;
            let gw = eval_state(&g.coeffs, &w);
            let fv = odh.matvec(&gw);
            for i in 0..d {
                terms[i].push(fv[i] * c_re(wt * pref));
            }
        }
        Ok((0..d).map(|i| pairwise_sum(&terms[i])).collect())
    };
    let mut radial = 8usize;
    let mut angular = 16usize;
    let mut prev = rhs_pass(radial, angular)?;
    let rhs = loop {
        let (r2, a2) = (radial * 2, angular * 2);
        if r2 * a2 > 1 << 12 {
            return Err(Error::Accuracy(
                "integral representation quadrature not converged".into(),
            ));
        }
        let next = rhs_pass(r2, a2)?;
        let diff = next
            .iter()
            .zip(&prev)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max);
        let scale = next.iter().map(|a| a.norm()).fold(T::one(), T::max);
        if diff <= T::of(1e-7) * scale {
            break next;
        }
        prev = next;
        radial = r2;
        angular = a2;
    };
    Ok(lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (*a - *b).norm())
        .fold(T::zero(), T::max))
}

/// Write the operator to the portable text format: one JSON header line,
/// then `row,col,re,im` entries (row-major, nonzero only).
pub fn export_operator<T: Real>(op: &TruncatedOperator<T>, out: &mut dyn Write) -> Result<()> {
    let header = json!({
        "schema": "btlab-operator/1",
        "n": op.spec.ctx.n,
        "d": op.spec.ctx.d,
        "t": op.spec.ctx.t.to_f64(),
        "cutoff": op.spec.m,
        "dim": op.dim(),
        "hermitian": op.hermitian,
        "provenance": {
            "symbol": op.provenance.symbol,
            "quadrature": op.provenance.quadrature,
            "hermitian_deviation": op.provenance.hermitian_deviation,
        },
    });
    writeln!(out, "{header}")?;
    writeln!(out, "row,col,re,im")?;
    let dim = op.dim();
    for r in 0..dim {
        for c in 0..dim {
            let v = op.matrix[(r, c)];
            if v.re != T::zero() || v.im != T::zero() {
                writeln!(
                    out,
                    "{},{},{:e},{:e}",
                    r,
                    c,
                    v.re.to_f64().unwrap_or(f64::NAN),
                    v.im.to_f64().unwrap_or(f64::NAN)
                )?;
            }
        }
    }
    Ok(())
}

/// Read the portable text format back and re-validate the invariants.
pub fn import_operator<T: Real>(input: &mut dyn BufRead) -> Result<TruncatedOperator<T>> {
    let mut header_line = String::new();
    input.read_line(&mut header_line)?;
    let header: Value = serde_json::from_str(header_line.trim())?;
    if header.get("schema").and_then(Value::as_str) != Some("btlab-operator/1") {
        return Err(Error::Import("unknown operator schema".into()));
    }
    let get_usize = |k: &str| -> Result<usize> {
        header
            .get(k)
            .and_then(Value::as_u64)
            .map(|u| u as usize)
            .ok_or_else(|| Error::Import(format!("header missing {k}")))
    };
    let n = get_usize("n")?;
    let d = get_usize("d")?;
    let m = get_usize("cutoff")?;
    let t = header
        .get("t")
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Import("header missing t".into()))?;
    let hermitian = header
        .get("hermitian")
        .and_then(Value::as_bool)
        .ok_or_else(|| Error::Import("header missing hermitian".into()))?;
    let ctx = crate::phase::QuantizationContext::new(n, T::of(t), d)?;
    let spec = TruncationSpec::new(ctx, m);
    let dim = spec.dim();
    let declared = get_usize("dim")?;
    if declared != dim {
        return Err(Error::Import(format!(
            "declared dim {declared} inconsistent with spec dim {dim}"
        )));
    }
    let mut matrix = CMatrix::zeros(dim, dim);
    let mut lines = String::new();
    input.read_to_string(&mut lines)?;
    for (lineno, line) in lines.lines().enumerate() {
        if lineno == 0 && line.starts_with("row,") {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Import(format!("bad entry line: {line}")));
        }
        let r: usize = parts[0].parse().map_err(|_| Error::Import("bad row".into()))?;
        let c: usize = parts[1].parse().map_err(|_| Error::Import("bad col".into()))?;
        let re: f64 = parts[2].parse().map_err(|_| Error::Import("bad re".into()))?;
        let im: f64 = parts[3].parse().map_err(|_| Error::Import("bad im".into()))?;
        if r >= dim || c >= dim {
            return Err(Error::Import("entry index out of range".into()));
        }
        matrix[(r, c)] = Complex::new(T::of(re), T::of(im));
    }
    if hermitian && matrix.hermitian_deviation() > T::of(1e-9) {
        return Err(Error::Import("hermitian flag violated by imported entries".into()));
    }
    let symbol = header
        .pointer("/provenance/symbol")
        .and_then(Value::as_str)
        .unwrap_or("imported")
        .to_string();
    Ok(TruncatedOperator {
        spec,
        matrix,
        hermitian,
        provenance: Provenance {
            symbol,
            t,
            quadrature: header
                .pointer("/provenance/quadrature")
                .and_then(Value::as_str)
                .map(str::to_string),
            hermitian_deviation: header
                .pointer("/provenance/hermitian_deviation")
                .and_then(Value::as_f64)
                .unwrap_or(0.0),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::QuantizationContext;
    use num_complex::Complex64;
    use std::sync::Arc;

    fn spec1(m: usize) -> TruncationSpec<f64> {
        TruncationSpec::new(QuantizationContext::scalar(1, 0.5).unwrap(), m)
    }

    fn q() -> QuadratureSpec<f64> {
        QuadratureSpec::default()
    }

    fn scalar_poly(
        ctx: QuantizationContext<f64>,
        terms: &[(Vec<usize>, Vec<usize>, Complex64)],
    ) -> Symbol<f64> {
        let mut p = PolySymbol::new(ctx.n, 1);
        for (a, b, c) in terms {
            p.add_scalar_term(a.clone(), b.clone(), *c);
        }
        Symbol::polynomial(ctx, p).unwrap()
    }

    #[test]
    fn identity_symbol_gives_identity() {
        let spec = spec1(6);
        let f = Symbol::constant(spec.ctx, CMatrix::identity(1)).unwrap();
        let a = assemble_toeplitz(&f, &spec, &q()).unwrap();
        assert!(a.matrix.sub(&CMatrix::identity(spec.dim())).max_abs() < 1e-14);
    }

    #[test]
    fn linear_symbol_raises() {
        // t = 0.5 so √(2t) = 1: T_z e_0 = e_1 exactly
        let spec = spec1(5);
        let f = scalar_poly(spec.ctx, &[(vec![1], vec![0], Complex64::new(1.0, 0.0))]);
        let a = assemble_toeplitz(&f, &spec, &q()).unwrap();
        for r in 0..spec.dim() {
            let expect = if r == 1 { 1.0 } else { 0.0 };
            assert!((a.matrix[(r, 0)] - Complex64::new(expect, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn abs_squared_diagonal() {
        let spec = spec1(10);
        let f = Symbol::abs_squared(spec.ctx);
        let a = assemble_toeplitz(&f, &spec, &q()).unwrap();
        for r in 0..spec.dim() {
            for c in 0..spec.dim() {
                let expect = if r == c { (r + 1) as f64 } else { 0.0 };
                assert!((a.matrix[(r, c)] - Complex64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
        assert!(a.hermitian);
    }

    #[test]
    fn oscillator_hand_values() {
        let spec = spec1(3);
        let n = harmonic_oscillator(&spec);
        let expect = [0.5, 1.0, 1.5, 2.0];
        for (r, &e) in expect.iter().enumerate() {
            assert_eq!(n.matrix[(r, r)], Complex64::new(e, 0.0));
        }
        // n = 2, t = 1, ν = (1,1) entry → 4
        let ctx2 = QuantizationContext::scalar(2, 1.0).unwrap();
        let spec2 = TruncationSpec::new(ctx2, 3);
        let n2 = harmonic_oscillator(&spec2);
        let idx = spec2.index_of(&MultiIndex(vec![1, 1])).unwrap();
        assert_eq!(n2.matrix[(idx, idx)], Complex64::new(4.0, 0.0));
    }

    #[test]
    fn oscillator_is_half_abs_squared() {
        let spec = spec1(12);
        let half = assemble_toeplitz(&Symbol::abs_squared(spec.ctx), &spec, &q())
            .unwrap()
            .matrix
            .scale(Complex64::new(0.5, 0.0));
        let n = harmonic_oscillator(&spec);
        assert!(half.sub(&n.matrix).max_abs() < 1e-12);
    }

    #[test]
    fn moment_identity_abs_fourth() {
        // T_{|z|⁴} = (T_{|z|²})² + 2t·T_{|z|²} on the diagonal moments:
        // 4t²(m+1)(m+2) with no constant term
        let spec = spec1(10);
        let sq = assemble_toeplitz(&Symbol::abs_squared(spec.ctx), &spec, &q()).unwrap();
        let quart = scalar_poly(spec.ctx, &[(vec![2], vec![2], Complex64::new(1.0, 0.0))]);
        let a4 = assemble_toeplitz(&quart, &spec, &q()).unwrap();
        for m in 0..=10usize {
            let expect = 4.0 * 0.25 * ((m + 1) * (m + 2)) as f64;
            assert!((a4.matrix[(m, m)].re - expect).abs() < 1e-10, "m={m}");
        }
        let composed = sq.matrix.matmul(&sq.matrix).add(&sq.matrix.scale(Complex64::new(1.0, 0.0)));
        // interior block only: the square of the truncated matrix is
        // polluted in the top degree
        let k = interior_dim(&spec, 8);
        assert!(a4.matrix.leading_block(k).sub(&composed.leading_block(k)).max_abs() < 1e-10);
    }

    #[test]
    fn berezin_identity_and_oscillator() {
        let spec = spec1(40);
        let id = TruncatedOperator {
            spec: spec.clone(),
            matrix: CMatrix::identity(spec.dim()),
            hermitian: true,
            provenance: Provenance {
                symbol: "1".into(),
                t: 0.5,
                quadrature: None,
                hermitian_deviation: 0.0,
            },
        };
        for z in [PhasePoint::zero(1), PhasePoint::one(Complex64::new(1.0, -0.5))] {
            let b = berezin_transform(&id, &z).unwrap();
            assert!((b.value[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-8);
        }
        let a = assemble_toeplitz(&Symbol::abs_squared(spec.ctx), &spec, &q()).unwrap();
        let b = berezin_transform(&a, &PhasePoint::zero(1)).unwrap();
        assert!((b.value[(0, 0)].re - 1.0).abs() < 1e-8);
        // Ñ(1) = ½(|z|²+2t) = 1.0; cross-check: E[t(m+1)] with m Poisson
        // of mean |z|²/2t = 1 gives t·2 = 1.0
        let n = harmonic_oscillator(&spec);
        let b = berezin_transform(&n, &PhasePoint::one(Complex64::new(1.0, 0.0))).unwrap();
        assert!((b.value[(0, 0)].re - 1.0).abs() < 1e-8);
        assert!(!b.tail_warning);
    }

    #[test]
    fn weyl_reproduces_coherent_state() {
        let spec = spec1(60);
        let w0 = weyl_matrix(&spec, &PhasePoint::zero(1)).unwrap();
        assert!(w0.matrix.sub(&CMatrix::identity(spec.dim())).max_abs() < 1e-12);
        let w = PhasePoint::one(Complex64::new(0.5, 0.0));
        let wm = weyl_matrix(&spec, &w).unwrap();
        let coh = coherent_coefficients(&spec, &w);
        let mut dev: f64 = 0.0;
        for r in 0..spec.dim() {
            dev = dev.max((wm.matrix[(r, 0)] - coh.coeffs[r]).norm());
        }
        assert!(dev < 1e-8, "first column deviation {dev}");
        // unitarity
        let prod = wm.matrix.matmul(&wm.matrix.adjoint());
        assert!(prod.sub(&CMatrix::identity(spec.dim())).max_abs() < 1e-10);
    }

    #[test]
    fn weyl_relations() {
        let spec = spec1(60);
        let w = PhasePoint::one(Complex64::new(0.3, 0.0));
        let z = PhasePoint::one(Complex64::new(0.0, 0.3));
        let r = weyl_relation_check(&spec, &w, &z).unwrap();
        assert!(r < 1e-6, "residual {r}");
        let neg = w.scale(Complex64::new(-1.0, 0.0));
        let r = weyl_relation_check(&spec, &w, &neg).unwrap();
        assert!(r < 1e-8, "inverse residual {r}");
        let r = weyl_relation_check(&spec, &w, &w).unwrap();
        assert!(r < 1e-6, "same-point residual {r}");
    }

    #[test]
    fn translation_covariance() {
        let spec = spec1(60);
        let f = Symbol::abs_squared(spec.ctx);
        let r = covariance_check(&f, &spec, &PhasePoint::zero(1)).unwrap();
        assert!(r < 1e-12);
        let z = PhasePoint::one(Complex64::new(1.0, 0.0));
        let r = covariance_check(&f, &spec, &z).unwrap();
        assert!(r < 1e-6, "abs-squared residual {r}");
        let lin = scalar_poly(
            spec.ctx,
            &[
                (vec![1], vec![0], Complex64::new(1.0, 0.0)),
                (vec![0], vec![1], Complex64::new(1.0, 0.0)),
            ],
        );
        let r = covariance_check(&lin, &spec, &z).unwrap();
        assert!(r < 1e-6, "linear residual {r}");
    }

    #[test]
    fn rotation_covariance() {
        let spec = spec1(20);
        let f = Symbol::abs_squared(spec.ctx);
        assert!(rotation_covariance_check(&f, &spec, 0.0).unwrap() < 1e-14);
        assert!(rotation_covariance_check(&f, &spec, 1.3).unwrap() < 1e-12);
        let g = Symbol::re_z_cubed(spec.ctx);
        let r = rotation_covariance_check(&g, &spec, std::f64::consts::PI / 3.0).unwrap();
        assert!(r < 1e-10, "residual {r}");
    }

    #[test]
    fn form_derivatives() {
        let spec = spec1(20);
        let id = TruncatedOperator {
            spec: spec.clone(),
            matrix: CMatrix::identity(spec.dim()),
            hermitian: true,
            provenance: Provenance {
                symbol: "1".into(),
                t: 0.5,
                quadrature: None,
                hermitian_deviation: 0.0,
            },
        };
        assert!(form_derivative(&id, 0, false).unwrap().matrix.max_abs() < 1e-14);
        // ∂ T_{|z|²} = T_{z̄} on the interior
        let a = assemble_toeplitz(&Symbol::abs_squared(spec.ctx), &spec, &q()).unwrap();
        let da = form_derivative(&a, 0, false).unwrap();
        let zbar = coordinate_toeplitz(&spec, 0, true).unwrap();
        let k = interior_dim(&spec, spec.m - 2 - 1);
        let r = da.matrix.leading_block(k).sub(&zbar.matrix.leading_block(k)).max_abs();
        assert!(r < 1e-10, "∂|z|² residual {r}");
        // ∂̄ T_{z²} = 0 on the interior
        let zsq = scalar_poly(spec.ctx, &[(vec![2], vec![0], Complex64::new(1.0, 0.0))]);
        let b = assemble_toeplitz(&zsq, &spec, &q()).unwrap();
        let db = form_derivative(&b, 0, true).unwrap();
        let r = db.matrix.leading_block(k).max_abs();
        assert!(r < 1e-10, "∂̄ z² residual {r}");
    }

    #[test]
    fn sine_re_closed_form_vs_quadrature() {
        let spec = spec1(8);
        let closed = assemble_toeplitz(&Symbol::sine_re(spec.ctx), &spec, &q()).unwrap();
        // hand value: ⟨T_sin e_1, e_0⟩ = e^{−t/2}·t/√(2t), t = 0.5
        let expect = (-0.25f64).exp() * 0.5 / 1.0f64.sqrt();
        assert!((closed.matrix[(0, 1)].re - expect).abs() < 1e-14);
        let wrapped = Symbol::callable(spec.ctx, {
            let e = Symbol::sine_re(spec.ctx);
            Arc::new(move |z: &PhasePoint<f64>| e.eval(z))
        });
        let quad = assemble_toeplitz(&wrapped, &spec, &q()).unwrap();
        let dev = closed.matrix.sub(&quad.matrix).max_abs();
        assert!(dev < 1e-9, "closed-vs-quadrature deviation {dev}");
    }

    #[test]
    fn matrix_valued_closed_vs_quadrature() {
        // d = 2, degree ≤ 2 hermitian polynomial symbol
        let ctx = QuantizationContext::new(1, 0.5, 2).unwrap();
        let spec = TruncationSpec::new(ctx, 8);
        let mut p = PolySymbol::new(1, 2);
        let mut c0 = CMatrix::zeros(2, 2);
        c0[(0, 0)] = Complex64::new(1.0, 0.0);
        c0[(0, 1)] = Complex64::new(0.3, 0.7);
        c0[(1, 0)] = Complex64::new(0.3, -0.7);
        c0[(1, 1)] = Complex64::new(-0.5, 0.0);
        p.add_term(vec![1], vec![1], c0);
        let mut c1 = CMatrix::zeros(2, 2);
        c1[(0, 1)] = Complex64::new(0.2, -0.4);
        p.add_term(vec![2], vec![0], c1.clone());
        p.add_term(vec![0], vec![2], c1.adjoint());
        let f = Symbol::polynomial(ctx, p).unwrap();
        assert!(f.is_hermitian());
        let closed = assemble_toeplitz(&f, &spec, &q()).unwrap();
        let wrapped = Symbol::callable(ctx, {
            let e = f.clone();
            Arc::new(move |z: &PhasePoint<f64>| e.eval(z))
        });
        let quad = assemble_toeplitz(&wrapped, &spec, &q()).unwrap();
        let dev = closed.matrix.sub(&quad.matrix).max_abs();
        assert!(dev < 1e-9, "deviation {dev}");
        assert!(closed.hermitian && quad.hermitian);
    }

    #[test]
    fn positivity_transfer() {
        // f = |z|² ≥ 0 pointwise → matrix PSD
        let spec = spec1(15);
        let a = assemble_toeplitz(&Symbol::abs_squared(spec.ctx), &spec, &q()).unwrap();
        let (evals, _) = a.matrix.eigh();
        assert!(evals.iter().all(|&e| e > -1e-9));
    }

    #[test]
    fn kadison_schwarz_surrogate() {
        // ⟨T_f² g, g⟩ ≤ ⟨T_{f²} g, g⟩ for hermitian f = z + z̄, low-degree g
        let spec = spec1(16);
        let f = scalar_poly(
            spec.ctx,
            &[
                (vec![1], vec![0], Complex64::new(1.0, 0.0)),
                (vec![0], vec![1], Complex64::new(1.0, 0.0)),
            ],
        );
        let fsq = scalar_poly(
            spec.ctx,
            &[
                (vec![2], vec![0], Complex64::new(1.0, 0.0)),
                (vec![0], vec![2], Complex64::new(1.0, 0.0)),
                (vec![1], vec![1], Complex64::new(2.0, 0.0)),
            ],
        );
        let a = assemble_toeplitz(&f, &spec, &q()).unwrap();
        let a2 = a.matrix.matmul(&a.matrix);
        let b = assemble_toeplitz(&fsq, &spec, &q()).unwrap();
        let cut = interior_dim(&spec, spec.m / 2);
        for probe in 0..cut {
            let mut g = vec![Complex64::new(0.0, 0.0); spec.dim()];
            g[probe] = Complex64::new(0.8, 0.0);
            if probe + 1 < cut {
                g[probe + 1] = Complex64::new(0.0, 0.6);
            }
            let lhs = crate::linalg::inner(&a2.matvec(&g), &g).re;
            let rhs = crate::linalg::inner(&b.matrix.matvec(&g), &g).re;
            assert!(lhs <= rhs + 1e-8, "probe {probe}: {lhs} > {rhs}");
        }
    }

    #[test]
    fn compression_norm_monotone() {
        let f = Symbol::re_z_cubed(QuantizationContext::scalar(1, 0.5).unwrap());
        let mut last = 0.0;
        for m in [4usize, 8, 12, 16] {
            let spec = spec1(m);
            let a = assemble_toeplitz(&f, &spec, &q()).unwrap();
            let norm = a.operator_norm();
            assert!(norm >= last - 1e-10, "norm dropped at M={m}");
            last = norm;
        }
    }

    #[test]
    fn dimension_cap_enforced() {
        let spec = spec1(80);
        let f = Symbol::abs_squared(spec.ctx);
        let mut qq = q();
        qq.dim_cap = 40;
        assert!(matches!(
            assemble_toeplitz(&f, &spec, &qq),
            Err(Error::DimensionCap { .. })
        ));
    }

    #[test]
    fn export_import_round_trip() {
        let spec = spec1(5);
        let a = assemble_toeplitz(&Symbol::abs_squared(spec.ctx), &spec, &q()).unwrap();
        let mut buf: Vec<u8> = Vec::new();
        export_operator(&a, &mut buf).unwrap();
        let mut cursor = std::io::BufReader::new(&buf[..]);
        let back: TruncatedOperator<f64> = import_operator(&mut cursor).unwrap();
        assert_eq!(back.dim(), a.dim());
        assert!(back.matrix.sub(&a.matrix).max_abs() < 1e-15);
        assert!(back.hermitian);
    }

    #[test]
    fn integral_representation_cases() {
        let spec = spec1(14);
        let mut e0 = vec![Complex64::new(0.0, 0.0); spec.dim()];
        e0[0] = Complex64::new(1.0, 0.0);
        let g0 = CoefficientVector { coeffs: e0, tail_mass: None };
        let one = Symbol::constant(spec.ctx, CMatrix::identity(1)).unwrap();
        let dev = integral_representation_check(&one, &spec, &g0, &PhasePoint::zero(1), &q()).unwrap();
        assert!(dev < 1e-9, "identity deviation {dev}");
        let f = Symbol::abs_squared(spec.ctx);
        let dev = integral_representation_check(&f, &spec, &g0, &PhasePoint::zero(1), &q()).unwrap();
        assert!(dev < 1e-7, "abs-squared deviation {dev}");
        let mut e1 = vec![Complex64::new(0.0, 0.0); spec.dim()];
        e1[1] = Complex64::new(1.0, 0.0);
        let g1 = CoefficientVector { coeffs: e1, tail_mass: None };
        let s = Symbol::sine_re(spec.ctx);
        let dev = integral_representation_check(
            &s,
            &spec,
            &g1,
            &PhasePoint::one(Complex64::new(0.5, 0.0)),
            &q(),
        )
        .unwrap();
        assert!(dev < 1e-5, "sine deviation {dev}");
    }

    #[test]
    fn operator_norm_examples() {
        let spec = spec1(10);
        let id = TruncatedOperator {
            spec: spec.clone(),
            matrix: CMatrix::identity(spec.dim()),
            hermitian: true,
            provenance: Provenance {
                symbol: "1".into(),
                t: 0.5,
                quadrature: None,
                hermitian_deviation: 0.0,
            },
        };
        assert!((id.operator_norm() - 1.0).abs() < 1e-12);
        let n = harmonic_oscillator(&spec);
        assert!((n.operator_norm() - 0.5 * 11.0).abs() < 1e-10);
    }
}
