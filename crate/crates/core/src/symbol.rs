//! Symbols f: C^n → d×d hermitian matrices: polynomial, callable and
//! built-in variants, their algebra, Wirtinger derivatives, gradients and
//! polynomial-boundedness fits.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::phase::{PhasePoint, QuantizationContext};
use crate::scalar::{binomial, c_re, factorial, Real, C};
use num_complex::Complex;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::sync::Arc;

/// f(z) = Σ c_{a,b} z^a z̄^b with d×d matrix coefficients, keyed by the
/// exponent pair (a,b).
#[derive(Clone, Debug)]
pub struct PolySymbol<T: Real> {
    pub n: usize,
    pub d: usize,
    pub terms: BTreeMap<(Vec<usize>, Vec<usize>), CMatrix<T>>,
}

impl<T: Real> PolySymbol<T> {
    pub fn new(n: usize, d: usize) -> Self {
        PolySymbol { n, d, terms: BTreeMap::new() }
    }

    pub fn add_term(&mut self, a: Vec<usize>, b: Vec<usize>, coeff: CMatrix<T>) {
        assert_eq!(a.len(), self.n);
        assert_eq!(b.len(), self.n);
        assert_eq!((coeff.rows, coeff.cols), (self.d, self.d));
        let entry = self
            .terms
            .entry((a, b))
            .or_insert_with(|| CMatrix::zeros(self.d, self.d));
        *entry = entry.add(&coeff);
    }

    /// Scalar (d=1) term helper.
    pub fn add_scalar_term(&mut self, a: Vec<usize>, b: Vec<usize>, coeff: C<T>) {
        let mut m = CMatrix::zeros(1, 1);
        m[(0, 0)] = coeff;
        self.add_term(a, b, m);
    }

    pub fn eval(&self, z: &PhasePoint<T>) -> CMatrix<T> {
        let mut out = CMatrix::zeros(self.d, self.d);
        for ((a, b), coeff) in &self.terms {
            let mut factor = Complex::new(T::one(), T::zero());
            for j in 0..self.n {
                factor = factor * z.0[j].powi(a[j] as i32) * z.0[j].conj().powi(b[j] as i32);
            }
            out = out.add(&coeff.scale(factor));
        }
        out
    }

    /// Total degree max(|a|+|b|) over terms.
    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|(a, b)| a.iter().sum::<usize>() + b.iter().sum::<usize>())
            .max()
            .unwrap_or(0)
    }

    /// c_{b,a} = adjoint(c_{a,b}) for every term.
    pub fn is_hermitian(&self, tol: T) -> bool {
        for ((a, b), coeff) in &self.terms {
            let mirror = self.terms.get(&(b.clone(), a.clone()));
            let dev = match mirror {
                Some(m) => m.sub(&coeff.adjoint()).max_abs(),
                None => coeff.max_abs(),
            };
            if dev > tol {
                return false;
            }
        }
        true
    }

    /// Wirtinger derivative ∂_j (on the z exponent) or ∂̄_j (on z̄).
    pub fn wirtinger_derivative(&self, j: usize, conjugate: bool) -> PolySymbol<T> {
        let mut out = PolySymbol::new(self.n, self.d);
        for ((a, b), coeff) in &self.terms {
            let exps = if conjugate { b } else { a };
            if exps[j] == 0 {
                continue;
            }
            let mut a2 = a.clone();
            let mut b2 = b.clone();
            let k = if conjugate {
                b2[j] -= 1;
                b[j]
            } else {
                a2[j] -= 1;
                a[j]
            };
            out.add_term(a2, b2, coeff.scale(c_re(T::of_usize(k))));
        }
        out
    }

    /// Translated polynomial f(· + z0) expanded in closed form.
    pub fn translate(&self, z0: &PhasePoint<T>) -> PolySymbol<T> {
        let mut out = PolySymbol::new(self.n, self.d);
        for ((a, b), coeff) in &self.terms {
            // binomial expansion per coordinate of (z+z0)^a (z̄+z̄0)^b
            let mut expansion: Vec<(Vec<usize>, Vec<usize>, C<T>)> =
                vec![(vec![], vec![], Complex::new(T::one(), T::zero()))];
            for j in 0..self.n {
                let mut next = Vec::new();
                for (pa, pb, f) in &expansion {
                    for aj in 0..=a[j] {
                        for bj in 0..=b[j] {
                            let factor = binomial::<T>(a[j], aj)
                                * binomial::<T>(b[j], bj);
                            let shift = z0.0[j].powi((a[j] - aj) as i32)
                                * z0.0[j].conj().powi((b[j] - bj) as i32);
                            let mut pa2 = pa.clone();
                            let mut pb2 = pb.clone();
                            pa2.push(aj);
                            pb2.push(bj);
                            next.push((pa2, pb2, f * shift * c_re(factor)));
                        }
                    }
                }
                expansion = next;
            }
            for (a2, b2, f) in expansion {
                out.add_term(a2, b2, coeff.scale(f));
            }
        }
        out
    }

    /// Rotated polynomial f(e^{iθ}·): z^a z̄^b picks up e^{iθ(|a|−|b|)}.
    pub fn rotate(&self, theta: T) -> PolySymbol<T> {
        let mut out = PolySymbol::new(self.n, self.d);
        for ((a, b), coeff) in &self.terms {
            let da = a.iter().sum::<usize>() as i64 - b.iter().sum::<usize>() as i64;
            let phase = Complex::from_polar(T::one(), theta * T::of(da as f64));
            out.add_term(a.clone(), b.clone(), coeff.scale(phase));
        }
        out
    }

    /// Gaussian smoothing at time s in closed form:
    /// E[w^γ w̄^γ] = γ!(2s)^{|γ|} per matched exponent pair.
    pub fn heat(&self, s: T) -> PolySymbol<T> {
        let mut out = PolySymbol::new(self.n, self.d);
        for ((a, b), coeff) in &self.terms {
            // γ ≤ min(a,b) componentwise is the exponent absorbed by the moment
            let gmax: Vec<usize> = a.iter().zip(b).map(|(&x, &y)| x.min(y)).collect();
            let mut gamma = vec![0usize; self.n];
            loop {
                let mut factor = T::one();
                for j in 0..self.n {
                    factor = factor
                        * binomial::<T>(a[j], gamma[j])
                        * binomial::<T>(b[j], gamma[j])
                        * factorial::<T>(gamma[j])
                        * (T::of(2.0) * s).powi(gamma[j] as i32);
                }
                let a2: Vec<usize> = a.iter().zip(&gamma).map(|(&x, &g)| x - g).collect();
                let b2: Vec<usize> = b.iter().zip(&gamma).map(|(&x, &g)| x - g).collect();
                out.add_term(a2, b2, coeff.scale(c_re(factor)));
                // odometer over γ ≤ gmax
                let mut j = 0;
                loop {
                    if j == self.n {
                        break;
                    }
                    gamma[j] += 1;
                    if gamma[j] <= gmax[j] {
                        break;
                    }
                    gamma[j] = 0;
                    j += 1;
                }
                if j == self.n {
                    break;
                }
            }
        }
        out
    }
}

/// Named symbols from the worked examples.
#[derive(Clone, Debug)]
pub enum BuiltIn<T: Real> {
    /// |z|²
    AbsSquared,
    /// Re z³ (n = 1)
    ReZCubed,
    /// √(|ξ|² + m²), the free relativistic kinetic energy
    RelativisticKinetic { mass: T },
    /// g(z)·1 + α(zS + z̄S*) + M on C^d with S the right shift and
    /// M = diag(−1, −1/4, …, −1/d²)
    ShiftInteraction {
        alpha: T,
        g: Option<Box<Symbol<T>>>,
        levels: usize,
    },
    /// sin(Re z₁), a bounded symbol
    SineRe,
}

pub type CallableEval<T> =
    Arc<dyn Fn(&PhasePoint<T>) -> Result<CMatrix<T>> + Send + Sync>;

#[derive(Clone)]
pub enum SymbolKind<T: Real> {
    Polynomial(PolySymbol<T>),
    Callable(CallableEval<T>),
    BuiltIn(BuiltIn<T>),
}

impl<T: Real> std::fmt::Debug for SymbolKind<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SymbolKind::Polynomial(p) => write!(f, "Polynomial({} terms)", p.terms.len()),
            SymbolKind::Callable(_) => write!(f, "Callable"),
            SymbolKind::BuiltIn(b) => write!(f, "BuiltIn({b:?})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Symbol<T: Real> {
    pub ctx: QuantizationContext<T>,
    pub kind: SymbolKind<T>,
    hermitian: bool,
}

fn shift_matrix<T: Real>(d: usize) -> CMatrix<T> {
    CMatrix::from_fn(d, d, |i, j| {
        if i == j + 1 {
            Complex::new(T::one(), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

impl<T: Real> Symbol<T> {
    pub fn polynomial(ctx: QuantizationContext<T>, poly: PolySymbol<T>) -> Result<Self> {
        if poly.n != ctx.n || poly.d != ctx.d {
            return Err(Error::Parameter("polynomial shape does not match context".into()));
        }
        let hermitian = poly.is_hermitian(T::of(1e-10));
        Ok(Symbol { ctx, kind: SymbolKind::Polynomial(poly), hermitian })
    }

    pub fn callable(ctx: QuantizationContext<T>, f: CallableEval<T>) -> Self {
        let mut s = Symbol { ctx, kind: SymbolKind::Callable(f), hermitian: false };
        s.hermitian = s.sample_hermitian();
        s
    }

    pub fn builtin(ctx: QuantizationContext<T>, b: BuiltIn<T>) -> Result<Self> {
        match &b {
            BuiltIn::ReZCubed | BuiltIn::SineRe | BuiltIn::RelativisticKinetic { .. } => {
                if ctx.n != 1 {
                    return Err(Error::Parameter("this built-in requires n = 1".into()));
                }
                if ctx.d != 1 {
                    return Err(Error::Parameter("this built-in is scalar (d = 1)".into()));
                }
            }
            BuiltIn::ShiftInteraction { levels, g, .. } => {
                if ctx.n != 1 {
                    return Err(Error::Parameter("ShiftInteraction requires n = 1".into()));
                }
                if *levels != ctx.d {
                    return Err(Error::Parameter(format!(
                        "ShiftInteraction levels {} must equal internal dimension {}",
                        levels, ctx.d
                    )));
                }
                if let Some(g) = g {
                    if g.ctx.d != 1 || g.ctx.n != 1 {
                        return Err(Error::Parameter("ShiftInteraction g must be scalar n=1".into()));
                    }
                }
            }
            BuiltIn::AbsSquared => {
                if ctx.d != 1 {
                    return Err(Error::Parameter("AbsSquared is scalar (d = 1)".into()));
                }
            }
        }
        Ok(Symbol { ctx, kind: SymbolKind::BuiltIn(b), hermitian: true })
    }

    pub fn abs_squared(ctx: QuantizationContext<T>) -> Self {
        Self::builtin(ctx, BuiltIn::AbsSquared).expect("AbsSquared")
    }

    pub fn sine_re(ctx: QuantizationContext<T>) -> Self {
        Self::builtin(ctx, BuiltIn::SineRe).expect("SineRe")
    }

    pub fn re_z_cubed(ctx: QuantizationContext<T>) -> Self {
        Self::builtin(ctx, BuiltIn::ReZCubed).expect("ReZCubed")
    }

    /// Constant (z-independent) matrix symbol as a Polynomial.
    pub fn constant(ctx: QuantizationContext<T>, value: CMatrix<T>) -> Result<Self> {
        let mut poly = PolySymbol::new(ctx.n, ctx.d);
        poly.add_term(vec![0; ctx.n], vec![0; ctx.n], value);
        Self::polynomial(ctx, poly)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    fn sample_hermitian(&self) -> bool {
        let tol = T::of(1e-10);
        let mut pts = Vec::new();
        for k in 0..5usize {
            let r = T::of(0.5) * T::of_usize(k + 1);
            let th = T::of(0.7) * T::of_usize(k + 1);
            pts.push(PhasePoint::new(
                (0..self.ctx.n)
                    .map(|j| Complex::from_polar(r, th + T::of_usize(j)))
                    .collect(),
            ));
        }
        pts.iter().all(|z| match self.eval_raw(z) {
            Ok(m) => m.hermitian_deviation() <= tol,
            Err(_) => false,
        })
    }

    fn eval_raw(&self, z: &PhasePoint<T>) -> Result<CMatrix<T>> {
        match &self.kind {
            SymbolKind::Polynomial(p) => Ok(p.eval(z)),
            SymbolKind::Callable(f) => f(z).map_err(|e| Error::Evaluation {
                location: format!("{:?}", z.0),
                message: e.to_string(),
            }),
            SymbolKind::BuiltIn(b) => Ok(eval_builtin(&self.ctx, b, z)?),
        }
    }

    /// f(z) as a d×d matrix (1×1 for scalar symbols).
    pub fn eval(&self, z: &PhasePoint<T>) -> Result<CMatrix<T>> {
        self.eval_raw(z)
    }

    /// Scalar evaluation shortcut for d = 1.
    pub fn eval_scalar(&self, z: &PhasePoint<T>) -> Result<C<T>> {
        Ok(self.eval(z)?[(0, 0)])
    }

    /// Polynomial representation when one exists exactly.
    pub fn as_polynomial(&self) -> Option<PolySymbol<T>> {
        match &self.kind {
            SymbolKind::Polynomial(p) => Some(p.clone()),
            SymbolKind::BuiltIn(b) => builtin_polynomial(&self.ctx, b),
            SymbolKind::Callable(_) => None,
        }
    }

    /// Wirtinger derivative for Polynomial symbols.
    pub fn wirtinger_derivative(&self, j: usize, conjugate: bool) -> Result<Symbol<T>> {
        let poly = match &self.kind {
            SymbolKind::Polynomial(p) => p.clone(),
            _ => match self.as_polynomial() {
                Some(p) => p,
                None => {
                    return Err(Error::UnsupportedVariant(
                        "wirtinger_derivative needs a Polynomial symbol".into(),
                    ))
                }
            },
        };
        let d = poly.wirtinger_derivative(j, conjugate);
        let hermitian = d.is_hermitian(T::of(1e-10));
        Ok(Symbol { ctx: self.ctx, kind: SymbolKind::Polynomial(d), hermitian })
    }

    /// Gradient on R^{2n} as 2n matrices (∂/∂x_1..x_n, ∂/∂ξ_1..ξ_n), in
    /// closed form where available.
    pub fn gradient(&self, z: &PhasePoint<T>) -> Result<Vec<CMatrix<T>>> {
        match &self.kind {
            SymbolKind::Polynomial(p) => Ok(poly_gradient(p, z)),
            SymbolKind::BuiltIn(b) => builtin_gradient(&self.ctx, b, z),
            SymbolKind::Callable(_) => self.fd_gradient(z),
        }
    }

    /// Central finite differences with relative step 1e−4.
    pub fn fd_gradient(&self, z: &PhasePoint<T>) -> Result<Vec<CMatrix<T>>> {
        let n = self.ctx.n;
        let scale = z.norm_sqr().sqrt().max(T::one());
        let h = T::of(1e-4) * scale;
        let mut out = Vec::with_capacity(2 * n);
        let xs = z.to_real();
        for j in 0..2 * n {
            let mut plus = xs.clone();
            let mut minus = xs.clone();
            plus[j] += h;
            minus[j] -= h;
            let fp = self.eval(&PhasePoint::from_real(&plus))?;
            let fm = self.eval(&PhasePoint::from_real(&minus))?;
            out.push(fp.sub(&fm).scale(c_re(T::one() / (T::of(2.0) * h))));
        }
        Ok(out)
    }

    /// Pointwise sum; stays Polynomial when both sides are.
    pub fn sum(a: &Symbol<T>, b: &Symbol<T>) -> Result<Symbol<T>> {
        if a.ctx != b.ctx {
            return Err(Error::Parameter("symbol sum across different contexts".into()));
        }
        if let (Some(pa), Some(pb)) = (a.as_polynomial(), b.as_polynomial()) {
            let mut out = pa;
            for ((ea, eb), coeff) in pb.terms {
                out.add_term(ea, eb, coeff);
            }
            return Symbol::polynomial(a.ctx, out);
        }
        let fa = a.clone();
        let fb = b.clone();
        Ok(Symbol::callable(
            a.ctx,
            Arc::new(move |z| Ok(fa.eval(z)?.add(&fb.eval(z)?))),
        ))
    }

    /// JSON form; Callable symbols have no serialization.
    pub fn to_json(&self) -> Result<Value> {
        match &self.kind {
            SymbolKind::Polynomial(p) => {
                let terms: Vec<Value> = p
                    .terms
                    .iter()
                    .map(|((a, b), coeff)| {
                        let re: Vec<Vec<f64>> = (0..p.d)
                            .map(|i| (0..p.d).map(|j| coeff[(i, j)].re.to_f64().unwrap()).collect())
                            .collect();
                        let im: Vec<Vec<f64>> = (0..p.d)
                            .map(|i| (0..p.d).map(|j| coeff[(i, j)].im.to_f64().unwrap()).collect())
                            .collect();
                        json!({"a": a, "b": b, "re": re, "im": im})
                    })
                    .collect();
                Ok(json!({"n": p.n, "d": p.d, "terms": terms}))
            }
            SymbolKind::BuiltIn(b) => {
                let v = match b {
                    BuiltIn::AbsSquared => json!({"builtin": "AbsSquared"}),
                    BuiltIn::ReZCubed => json!({"builtin": "ReZCubed"}),
                    BuiltIn::SineRe => json!({"builtin": "SineRe"}),
                    BuiltIn::RelativisticKinetic { mass } => {
                        json!({"builtin": "RelativisticKinetic", "m": mass.to_f64().unwrap()})
                    }
                    BuiltIn::ShiftInteraction { alpha, g, levels } => {
                        let gj = match g {
                            Some(g) => g.to_json()?,
                            None => Value::Null,
                        };
                        json!({"builtin": "ShiftInteraction",
                               "alpha": alpha.to_f64().unwrap(),
                               "g": gj, "d": levels})
                    }
                };
                Ok(v)
            }
            SymbolKind::Callable(_) => Err(Error::UnsupportedVariant(
                "Callable symbols do not serialize".into(),
            )),
        }
    }

    pub fn from_json(ctx: QuantizationContext<T>, v: &Value) -> Result<Symbol<T>> {
        if let Some(name) = v.get("builtin").and_then(Value::as_str) {
            let b = match name {
                "AbsSquared" => BuiltIn::AbsSquared,
                "ReZCubed" => BuiltIn::ReZCubed,
                "SineRe" => BuiltIn::SineRe,
                "RelativisticKinetic" => {
                    let m = v
                        .get("m")
                        .and_then(Value::as_f64)
                        .ok_or_else(|| Error::Import("RelativisticKinetic needs \"m\"".into()))?;
                    BuiltIn::RelativisticKinetic { mass: T::of(m) }
                }
                "ShiftInteraction" => {
                    let alpha = v
                        .get("alpha")
                        .and_then(Value::as_f64)
                        .ok_or_else(|| Error::Import("ShiftInteraction needs \"alpha\"".into()))?;
                    let levels = v
                        .get("d")
                        .and_then(Value::as_u64)
                        .ok_or_else(|| Error::Import("ShiftInteraction needs \"d\"".into()))?
                        as usize;
                    let g = match v.get("g") {
                        None | Some(Value::Null) => None,
                        Some(gj) => {
                            let gctx = QuantizationContext::new(1, ctx.t, 1)?;
                            Some(Box::new(Symbol::from_json(gctx, gj)?))
                        }
                    };
                    BuiltIn::ShiftInteraction { alpha: T::of(alpha), g, levels }
                }
                other => return Err(Error::Import(format!("unknown builtin {other}"))),
            };
            return Symbol::builtin(ctx, b);
        }
        let n = v.get("n").and_then(Value::as_u64).ok_or_else(|| Error::Import("missing n".into()))? as usize;
        let d = v.get("d").and_then(Value::as_u64).ok_or_else(|| Error::Import("missing d".into()))? as usize;
        if n != ctx.n || d != ctx.d {
            return Err(Error::Import(format!(
                "symbol shape (n={n}, d={d}) does not match context (n={}, d={})",
                ctx.n, ctx.d
            )));
        }
        let mut poly = PolySymbol::new(n, d);
        let terms = v
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Import("missing terms".into()))?;
        for term in terms {
            let parse_exps = |key: &str| -> Result<Vec<usize>> {
                term.get(key)
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Import(format!("term missing {key}")))?
                    .iter()
                    .map(|x| {
                        x.as_u64()
                            .map(|u| u as usize)
                            .ok_or_else(|| Error::Import("non-integer exponent".into()))
                    })
                    .collect()
            };
            let a = parse_exps("a")?;
            let b = parse_exps("b")?;
            if a.len() != n || b.len() != n {
                return Err(Error::Import("exponent length != n".into()));
            }
            let grid = |key: &str| -> Result<Vec<Vec<f64>>> {
                term.get(key)
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Import(format!("term missing {key}")))?
                    .iter()
                    .map(|row| {
                        row.as_array()
                            .ok_or_else(|| Error::Import("bad matrix row".into()))?
                            .iter()
                            .map(|x| x.as_f64().ok_or_else(|| Error::Import("bad entry".into())))
                            .collect()
                    })
                    .collect()
            };
            let re = grid("re")?;
            let im = grid("im")?;
            if re.len() != d || im.len() != d || re.iter().chain(&im).any(|r| r.len() != d) {
                return Err(Error::Import("coefficient matrix shape != d×d".into()));
            }
            let coeff = CMatrix::from_fn(d, d, |i, j| Complex::new(T::of(re[i][j]), T::of(im[i][j])));
            poly.add_term(a, b, coeff);
        }
        Symbol::polynomial(ctx, poly)
    }
}

fn eval_builtin<T: Real>(
    ctx: &QuantizationContext<T>,
    b: &BuiltIn<T>,
    z: &PhasePoint<T>,
) -> Result<CMatrix<T>> {
    let scalar = |v: C<T>| {
        let mut m = CMatrix::zeros(1, 1);
        m[(0, 0)] = v;
        m
    };
    Ok(match b {
        BuiltIn::AbsSquared => scalar(Complex::new(z.norm_sqr(), T::zero())),
        BuiltIn::ReZCubed => {
            let z3 = z.0[0] * z.0[0] * z.0[0];
            scalar(Complex::new(z3.re, T::zero()))
        }
        BuiltIn::SineRe => scalar(Complex::new(z.0[0].re.sin(), T::zero())),
        BuiltIn::RelativisticKinetic { mass } => {
            let xi2: T = z.0.iter().map(|c| c.im * c.im).fold(T::zero(), |a, b| a + b);
            scalar(Complex::new((xi2 + *mass * *mass).sqrt(), T::zero()))
        }
        BuiltIn::ShiftInteraction { alpha, g, levels } => {
            let d = *levels;
            let s = shift_matrix::<T>(d);
            let zc = z.0[0];
            let mut out = s.scale(Complex::new(*alpha, T::zero()) * zc)
                .add(&s.adjoint().scale(Complex::new(*alpha, T::zero()) * zc.conj()));
            for k in 0..d {
                let kk = T::of_usize(k + 1);
                out[(k, k)] = out[(k, k)] - Complex::new(T::one() / (kk * kk), T::zero());
            }
            if let Some(g) = g {
                let gv = g.eval_scalar(z)?;
                for k in 0..d {
                    out[(k, k)] = out[(k, k)] + gv;
                }
            }
            let _ = ctx;
            out
        }
    })
}

fn builtin_polynomial<T: Real>(
    ctx: &QuantizationContext<T>,
    b: &BuiltIn<T>,
) -> Option<PolySymbol<T>> {
    match b {
        BuiltIn::AbsSquared => {
            // Σ_j z_j z̄_j
            let mut p = PolySymbol::new(ctx.n, 1);
            for j in 0..ctx.n {
                let mut a = vec![0; ctx.n];
                let mut bb = vec![0; ctx.n];
                a[j] = 1;
                bb[j] = 1;
                p.add_scalar_term(a, bb, Complex::new(T::one(), T::zero()));
            }
            Some(p)
        }
        BuiltIn::ReZCubed => {
            // (z³ + z̄³)/2
            let mut p = PolySymbol::new(1, 1);
            let half = Complex::new(T::of(0.5), T::zero());
            p.add_scalar_term(vec![3], vec![0], half);
            p.add_scalar_term(vec![0], vec![3], half);
            Some(p)
        }
        BuiltIn::ShiftInteraction { alpha, g, levels } => {
            let d = *levels;
            let gp = match g {
                Some(g) => Some(g.as_polynomial()?),
                None => None,
            };
            let mut p = PolySymbol::new(1, d);
            let s = shift_matrix::<T>(d);
            p.add_term(vec![1], vec![0], s.scale(c_re(*alpha)));
            p.add_term(vec![0], vec![1], s.adjoint().scale(c_re(*alpha)));
            let m = CMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    let kk = T::of_usize(i + 1);
                    Complex::new(-T::one() / (kk * kk), T::zero())
                } else {
                    Complex::new(T::zero(), T::zero())
                }
            });
            p.add_term(vec![0], vec![0], m);
            if let Some(gp) = gp {
                for ((a, bb), coeff) in gp.terms {
                    let block = CMatrix::from_fn(d, d, |i, j| {
                        if i == j {
                            coeff[(0, 0)]
                        } else {
                            Complex::new(T::zero(), T::zero())
                        }
                    });
                    p.add_term(a, bb, block);
                }
            }
            Some(p)
        }
        BuiltIn::SineRe | BuiltIn::RelativisticKinetic { .. } => None,
    }
}

fn poly_gradient<T: Real>(p: &PolySymbol<T>, z: &PhasePoint<T>) -> Vec<CMatrix<T>> {
    // ∂/∂x_j = ∂_j + ∂̄_j, ∂/∂ξ_j = i(∂_j − ∂̄_j)
    let n = p.n;
    let mut out = Vec::with_capacity(2 * n);
    let i_unit = Complex::new(T::zero(), T::one());
    for j in 0..n {
        let dz = p.wirtinger_derivative(j, false).eval(z);
        let dzbar = p.wirtinger_derivative(j, true).eval(z);
        out.push(dz.add(&dzbar));
        out.push(dz.sub(&dzbar).scale(i_unit));
    }
    // reorder to (x_1..x_n, ξ_1..ξ_n)
    let mut ordered = Vec::with_capacity(2 * n);
    for j in 0..n {
        ordered.push(out[2 * j].clone());
    }
    for j in 0..n {
        ordered.push(out[2 * j + 1].clone());
    }
    ordered
}

fn builtin_gradient<T: Real>(
    ctx: &QuantizationContext<T>,
    b: &BuiltIn<T>,
    z: &PhasePoint<T>,
) -> Result<Vec<CMatrix<T>>> {
    let scalar = |v: T| {
        let mut m = CMatrix::zeros(1, 1);
        m[(0, 0)] = Complex::new(v, T::zero());
        m
    };
    match b {
        BuiltIn::SineRe => Ok(vec![scalar(z.0[0].re.cos()), scalar(T::zero())]),
        BuiltIn::RelativisticKinetic { mass } => {
            let xi = z.0[0].im;
            let root = (xi * xi + *mass * *mass).sqrt();
            Ok(vec![scalar(T::zero()), scalar(xi / root)])
        }
        _ => {
            if let Some(p) = builtin_polynomial(ctx, b) {
                Ok(poly_gradient(&p, z))
            } else {
                Err(Error::UnsupportedVariant("no closed-form gradient".into()))
            }
        }
    }
}

/// Fit of the smallest polynomial growth order: the least N ≤ 12 whose
/// constant c = sup ‖f(z)‖/(1+|z|^N) is stable when the grid radius
/// doubles from R/2 to R.
pub fn poly_bound_fit<T: Real>(
    f: &Symbol<T>,
    radius: T,
    samples: usize,
) -> Result<(usize, T)> {
    if !(radius > T::zero()) {
        return Err(Error::Parameter("poly_bound_fit needs R > 0".into()));
    }
    let sup_ratio = |rad: T, order: i32| -> Result<T> {
        let mut worst = T::zero();
        for k in 1..=samples {
            let r = rad * T::of_usize(k) / T::of_usize(samples);
            for a in 0..samples {
                let th = T::of(2.0) * T::PI() * T::of_usize(a) / T::of_usize(samples);
                let z = PhasePoint::new(
                    (0..f.ctx.n)
                        .map(|j| Complex::from_polar(r, th + T::of_usize(j) * T::of(0.71)))
                        .collect(),
                );
                let normf = f.eval(&z)?.spectral_norm();
                let ratio = normf / (T::one() + z.norm_sqr().sqrt().powi(order));
                worst = worst.max(ratio);
            }
        }
        Ok(worst)
    };
    for order in 0..=12usize {
        let c_half = sup_ratio(radius / T::of(2.0), order as i32)?;
        let c_full = sup_ratio(radius, order as i32)?;
        if c_full <= T::of(1.25) * c_half.max(T::of(1e-12)) && c_full <= T::of(1e6) {
            return Ok((order, c_full));
        }
    }
    let c = sup_ratio(radius, 12)?;
    Err(Error::GrowthExceedsPolynomial {
        max_degree: 12,
        constant: c.to_f64().unwrap_or(f64::INFINITY),
    })
}
