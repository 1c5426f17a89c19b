//! Classical and quantum dynamics: the Hamiltonian flow of a scalar symbol,
//! unitary evolution of truncated Toeplitz operators, expectation
//! trajectories, and the completeness experiment juxtaposing the two.

use crate::error::{Error, Result};
use crate::fock::{coherent_coefficients, TruncationSpec};
use crate::linalg::{inner, vec_norm};
use crate::phase::PhasePoint;
use crate::scalar::{Real, C};
use crate::symbol::{Symbol, SymbolKind};
use crate::toeplitz::{assemble_toeplitz, QuadratureSpec, TruncatedOperator};
use num_complex::Complex;
use rayon::prelude::*;
use serde_json::{json, Value};

/// Point of the real phase space R^{2n}, identified with z = x + iξ.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalState<T: Real> {
    pub x: Vec<T>,
    pub xi: Vec<T>,
}

impl<T: Real> ClassicalState<T> {
    pub fn new(x: Vec<T>, xi: Vec<T>) -> Result<Self> {
        if x.len() != xi.len() {
            return Err(Error::Parameter("x and ξ must have the same length".into()));
        }
        if x.iter().chain(&xi).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("classical state entries must be finite".into()));
        }
        Ok(ClassicalState { x, xi })
    }

    pub fn to_phase_point(&self) -> PhasePoint<T> {
        PhasePoint::new(
            self.x.iter().zip(&self.xi).map(|(&a, &b)| Complex::new(a, b)).collect(),
        )
    }

    pub fn from_phase_point(z: &PhasePoint<T>) -> Self {
        ClassicalState {
            x: z.0.iter().map(|c| c.re).collect(),
            xi: z.0.iter().map(|c| c.im).collect(),
        }
    }

    pub fn norm(&self) -> T {
        self.x
            .iter()
            .chain(&self.xi)
            .map(|&v| v * v)
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    ImplicitMidpoint,
    AdaptiveRk,
}

/// Which way time runs. The printed equation (ẋ, ξ̇) = −J∇f with
/// J(x,ξ) = (ξ,−x) is implemented verbatim as the default; it is the time
/// reverse of the textbook Hamilton flow, which `Standard` selects.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowDirection {
    Paper,
    Standard,
}

#[derive(Clone, Debug)]
pub struct EvolutionConfig<T: Real> {
    pub total_time: T,
    pub step: T,
    pub integrator: Integrator,
    /// largest blow-up threshold; escape is extrapolated across
    /// {B/100, B/10, B}
    pub blow_up: T,
    pub cutoffs: Vec<usize>,
    pub direction: FlowDirection,
}

impl<T: Real> EvolutionConfig<T> {
    pub fn new(total_time: T, step: T) -> Result<Self> {
        let cfg = EvolutionConfig {
            total_time,
            step,
            integrator: Integrator::ImplicitMidpoint,
            blow_up: T::of(1e8),
            cutoffs: Vec::new(),
            direction: FlowDirection::Paper,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_time > T::zero() && self.step > T::zero() && self.blow_up > T::one()) {
            return Err(Error::Parameter(
                "evolution config needs τ > 0, h > 0, B > 1".into(),
            ));
        }
        Ok(())
    }
}

/// Escape time bracket from blow-up extrapolation: the flow left the
/// largest threshold at `lower`; `upper` extrapolates the crossing times
/// geometrically toward the blow-up time.
#[derive(Clone, Debug)]
pub struct EscapeRange<T: Real> {
    pub lower: T,
    pub upper: T,
    /// (threshold, first crossing time) triples the range was fitted from
    pub crossings: Vec<(T, T)>,
}

#[derive(Clone, Debug)]
pub struct ClassicalTrajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<ClassicalState<T>>,
    pub escape: Option<EscapeRange<T>>,
}

/// The right-hand side of the flow equation at a point, as a 2n-vector
/// (ẋ, ξ̇).
fn vector_field<T: Real>(
    f: &Symbol<T>,
    y: &[T],
    direction: FlowDirection,
) -> Result<Vec<T>> {
    let n = y.len() / 2;
    let z = PhasePoint::from_real(y);
    let grad = f.gradient(&z)?;
    let sign = match direction {
        FlowDirection::Paper => T::one(),
        FlowDirection::Standard => -T::one(),
    };
    let mut out = vec![T::zero(); 2 * n];
    for j in 0..n {
        let gx = grad[j][(0, 0)].re;
        let gxi = grad[n + j][(0, 0)].re;
        // −J∇f with J(x,ξ) = (ξ,−x): ẋ = −∂_ξ f, ξ̇ = ∂_x f
        out[j] = sign * -gxi;
        out[n + j] = sign * gx;
    }
    Ok(out)
}

fn axpy<T: Real>(y: &[T], k: &[T], h: T) -> Vec<T> {
    y.iter().zip(k).map(|(&a, &b)| a + h * b).collect()
}

fn real_norm<T: Real>(y: &[T]) -> T {
    y.iter().map(|&v| v * v).fold(T::zero(), |a, b| a + b).sqrt()
}

fn rk4_step<T: Real>(
    f: &Symbol<T>,
    y: &[T],
    h: T,
    dir: FlowDirection,
) -> Result<Vec<T>> {
    let k1 = vector_field(f, y, dir)?;
    let k2 = vector_field(f, &axpy(y, &k1, h / T::of(2.0)), dir)?;
    let k3 = vector_field(f, &axpy(y, &k2, h / T::of(2.0)), dir)?;
    let k4 = vector_field(f, &axpy(y, &k3, h), dir)?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, &v)| v + h / T::of(6.0) * (k1[i] + T::of(2.0) * (k2[i] + k3[i]) + k4[i]))
        .collect())
}

/// One implicit-midpoint step solved by fixed-point iteration; halves the
/// sub-step on non-convergence (stiff near blow-up).
fn midpoint_advance<T: Real>(
    f: &Symbol<T>,
    y: &mut Vec<T>,
    time: &mut T,
    h: T,
    dir: FlowDirection,
    ceiling: T,
) -> Result<bool> {
    let mut remaining = h;
    let mut sub = h;
    let tol = T::of(1e-13);
    while remaining > T::zero() {
        let step = sub.min(remaining);
        let mut mid_guess = y.clone();
        let mut converged = false;
        for _ in 0..60 {
            let fm = vector_field(f, &mid_guess, dir)?;
            let next_mid = axpy(y, &fm, step / T::of(2.0));
            let delta = next_mid
                .iter()
                .zip(&mid_guess)
                .map(|(&a, &b)| (a - b).abs())
                .fold(T::zero(), T::max);
            mid_guess = next_mid;
            if !delta.is_finite() {
                break;
            }
            if delta <= tol * (T::one() + real_norm(&mid_guess)) {
                converged = true;
                break;
            }
        }
        if !converged {
            sub = sub / T::of(2.0);
            if sub < h * T::of(1e-12) {
                return Err(Error::Accuracy(format!(
                    "implicit midpoint failed to converge near τ = {} (|state| = {})",
                    *time,
                    real_norm(y)
                )));
            }
            continue;
        }
        let fm = vector_field(f, &mid_guess, dir)?;
        *y = axpy(y, &fm, step);
        *time += step;
        remaining -= step;
        if real_norm(y) > ceiling {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Step-doubling adaptive RK4 across one macro step; returns true on
/// ceiling crossing.
fn adaptive_rk_advance<T: Real>(
    f: &Symbol<T>,
    y: &mut Vec<T>,
    time: &mut T,
    h: T,
    dir: FlowDirection,
    ceiling: T,
) -> Result<bool> {
    let tol = T::of(1e-12);
    let mut remaining = h;
    let mut sub = h;
    while remaining > T::zero() {
        let step = sub.min(remaining);
        let full = rk4_step(f, y, step, dir)?;
        let half = step / T::of(2.0);
        let two = rk4_step(f, &rk4_step(f, y, half, dir)?, half, dir)?;
        let err = full
            .iter()
            .zip(&two)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
            / (T::one() + real_norm(&two));
        if err <= tol {
            // local Richardson correction on the paired half steps
            *y = two
                .iter()
                .zip(&full)
                .map(|(&a, &b)| a + (a - b) / T::of(15.0))
                .collect();
            *time += step;
            remaining -= step;
            if real_norm(y) > ceiling {
                return Ok(true);
            }
            let grow = T::of(0.9) * (tol / err.max(T::of(1e-300))).powf(T::of(0.2));
            sub = (step * grow.min(T::of(2.0))).min(h);
        } else {
            let shrink = T::of(0.9) * (tol / err).powf(T::of(0.2));
            sub = step * shrink.max(T::of(0.1));
            if sub < h * T::of(1e-12) {
                return Err(Error::Accuracy(format!(
                    "adaptive step collapsed near τ = {} (|state| = {})",
                    *time,
                    real_norm(y)
                )));
            }
        }
    }
    Ok(false)
}

/// Integrates (ẋ, ξ̇) = −J∇f(x,ξ) with J(x,ξ) = (ξ,−x) from z0 on the
/// output grid k·h, stopping early when the state leaves the blow-up
/// thresholds {B/100, B/10, B}; crossing times are extrapolated to an
/// escape-time bracket.
pub fn classical_flow<T: Real>(
    f: &Symbol<T>,
    z0: &ClassicalState<T>,
    cfg: &EvolutionConfig<T>,
) -> Result<ClassicalTrajectory<T>> {
    cfg.validate()?;
    if f.ctx.d != 1 {
        return Err(Error::Parameter("classical_flow needs a scalar symbol (d = 1)".into()));
    }
    if matches!(f.kind, SymbolKind::Callable(_)) {
        return Err(Error::UnsupportedVariant(
            "classical_flow needs a closed-form gradient (Polynomial or BuiltIn)".into(),
        ));
    }
    if z0.x.len() != f.ctx.n {
        return Err(Error::Parameter("initial state dimension mismatch".into()));
    }
    let thresholds = [
        cfg.blow_up / T::of(100.0),
        cfg.blow_up / T::of(10.0),
        cfg.blow_up,
    ];
    let mut crossings: Vec<(T, T)> = Vec::new();
    let mut y: Vec<T> = z0.x.iter().chain(&z0.xi).copied().collect();
    let mut time = T::zero();
    let mut times = vec![T::zero()];
    let mut states = vec![z0.clone()];
    let steps = (cfg.total_time / cfg.step).ceil().to_f64().unwrap_or(0.0) as usize;
    let ceiling = cfg.blow_up;
    'outer: for k in 1..=steps {
        let target = (cfg.step * T::of_usize(k)).min(cfg.total_time);
        let h = target - time;
        if h <= T::zero() {
            break;
        }
        let crossed = match cfg.integrator {
            Integrator::ImplicitMidpoint => {
                midpoint_advance(f, &mut y, &mut time, h, cfg.direction, ceiling)?
            }
            Integrator::AdaptiveRk => {
                adaptive_rk_advance(f, &mut y, &mut time, h, cfg.direction, ceiling)?
            }
        };
        let state = ClassicalState {
            x: y[..f.ctx.n].to_vec(),
            xi: y[f.ctx.n..].to_vec(),
        };
        let norm = state.norm();
        for &b in &thresholds {
            if norm > b && !crossings.iter().any(|(bb, _)| *bb == b) {
                crossings.push((b, time));
            }
        }
        times.push(time);
        states.push(state);
        if crossed || norm > ceiling {
            break 'outer;
        }
    }
    let escape = if crossings.len() == 3 {
        let t1 = crossings[0].1;
        let t2 = crossings[1].1;
        let t3 = crossings[2].1;
        let d1 = t2 - t1;
        let d2 = t3 - t2;
        // geometric extrapolation of the crossing-time increments
        let upper = if d1 > T::zero() && d2 < d1 {
            t3 + d2 * d2 / (d1 - d2)
        } else {
            t3 + d2.max(cfg.step) * T::of(2.0)
        };
        Some(EscapeRange { lower: t3, upper, crossings })
    } else {
        None
    };
    Ok(ClassicalTrajectory { times, states, escape })
}

/// ψ(τ_k) = exp(−iτ_k A/t)ψ0 at the requested times, via one
/// eigendecomposition of the hermitian generator.
pub fn quantum_evolve<T: Real>(
    a: &TruncatedOperator<T>,
    psi0: &[C<T>],
    times: &[T],
) -> Result<Vec<Vec<C<T>>>> {
    if !a.hermitian {
        return Err(Error::Parameter("quantum_evolve needs a hermitian generator".into()));
    }
    if psi0.len() != a.dim() {
        return Err(Error::Parameter("state length does not match operator dimension".into()));
    }
    let norm0 = vec_norm(psi0);
    if (norm0 - T::one()).abs() > T::of(1e-8) {
        return Err(Error::Parameter("initial state must be normalized".into()));
    }
    let t = a.spec.ctx.t;
    let (vals, vecs) = a.matrix.eigh();
    // coefficients in the eigenbasis: c_k = ⟨v_k, ψ0⟩
    let dim = psi0.len();
    let coeffs: Vec<C<T>> = (0..dim)
        .map(|k| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for i in 0..dim {
                acc = acc + vecs[(i, k)].conj() * psi0[i];
            }
            acc
        })
        .collect();
    let mut out = Vec::with_capacity(times.len());
    for &tau in times {
        let mut psi = vec![Complex::new(T::zero(), T::zero()); dim];
        for k in 0..dim {
            let phase = Complex::from_polar(T::one(), -tau * vals[k] / t);
            let ck = coeffs[k] * phase;
            for i in 0..dim {
                psi[i] = psi[i] + vecs[(i, k)] * ck;
            }
        }
        out.push(psi);
    }
    Ok(out)
}

/// ⟨ψ(τ_k), A_j ψ(τ_k)⟩ for each observable, one complex series per
/// observable.
pub fn expectation_trajectory<T: Real>(
    trajectory: &[Vec<C<T>>],
    observables: &[TruncatedOperator<T>],
) -> Result<Vec<Vec<C<T>>>> {
    for a in observables {
        if trajectory.iter().any(|psi| psi.len() != a.dim()) {
            return Err(Error::Parameter(
                "trajectory and observable cutoffs do not match".into(),
            ));
        }
    }
    Ok(observables
        .iter()
        .map(|a| {
            trajectory
                .iter()
                .map(|psi| inner(&a.matrix.matvec(psi), psi))
                .collect()
        })
        .collect())
}

/// Fraction of state mass carried by the top 10% of total degrees.
pub fn leakage<T: Real>(spec: &TruncationSpec<T>, psi: &[C<T>]) -> T {
    let m = spec.m;
    let top = (m + 1).div_ceil(10).max(1);
    let cut = m + 1 - top; // degrees ≥ cut are "top"
    let d = spec.ctx.d;
    let mut mass = T::zero();
    let mut total = T::zero();
    for (i, nu) in spec.basis().iter().enumerate() {
        for q in 0..d {
            let p = psi[i * d + q].norm_sqr();
            total += p;
            if nu.degree() >= cut {
                mass += p;
            }
        }
    }
    if total > T::zero() {
        mass / total
    } else {
        T::zero()
    }
}

#[derive(Clone, Debug)]
pub struct LeakageCurve<T: Real> {
    pub cutoff: usize,
    pub times: Vec<T>,
    pub leakage: Vec<T>,
    /// first time leakage exceeds 1%, if it does
    pub onset: Option<T>,
}

#[derive(Clone, Debug)]
pub struct CompletenessReport<T: Real> {
    pub classical_escape: Option<EscapeRange<T>>,
    pub curves: Vec<LeakageCurve<T>>,
    pub summary: String,
}

impl<T: Real> CompletenessReport<T> {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": crate::criteria::REPORT_SCHEMA,
            "kind": "completeness_experiment",
            "classical_escape": self.classical_escape.as_ref().map(|e| json!({
                "lower": e.lower.to_f64(),
                "upper": e.upper.to_f64(),
                "crossings": e.crossings.iter().map(|(b, tt)| {
                    json!({"threshold": b.to_f64(), "time": tt.to_f64()})
                }).collect::<Vec<_>>(),
            })),
            "curves": self.curves.iter().map(|c| json!({
                "cutoff": c.cutoff,
                "onset": c.onset.map(|t| t.to_f64()),
                "times": c.times.iter().map(|t| t.to_f64()).collect::<Vec<_>>(),
                "leakage": c.leakage.iter().map(|t| t.to_f64()).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "summary": self.summary,
        })
    }
}

/// Runs the classical flow from z0 and the quantum evolution from the
/// coherent state at z0 across the cutoff ladder; reports the two sides of
/// the completeness question without drawing a verdict.
pub fn completeness_experiment<T: Real>(
    f: &Symbol<T>,
    z0: &ClassicalState<T>,
    cfg: &EvolutionConfig<T>,
) -> Result<CompletenessReport<T>> {
    cfg.validate()?;
    if f.ctx.d != 1 {
        return Err(Error::Parameter("completeness_experiment needs d = 1".into()));
    }
    if !f.is_hermitian() {
        return Err(Error::Parameter("completeness_experiment needs a hermitian symbol".into()));
    }
    if cfg.cutoffs.is_empty() {
        return Err(Error::Parameter("completeness_experiment needs a cutoff ladder".into()));
    }
    let classical = classical_flow(f, z0, cfg)?;
    let steps = (cfg.total_time / cfg.step).ceil().to_f64().unwrap_or(0.0) as usize;
    let times: Vec<T> = (0..=steps)
        .map(|k| (cfg.step * T::of_usize(k)).min(cfg.total_time))
        .collect();
    let w = z0.to_phase_point();
    let curves: Vec<LeakageCurve<T>> = cfg
        .cutoffs
        .par_iter()
        .map(|&m| -> Result<LeakageCurve<T>> {
            let spec = TruncationSpec::new(f.ctx, m);
            let a = assemble_toeplitz(f, &spec, &QuadratureSpec::default())?;
            let mut psi0 = coherent_coefficients(&spec, &w).coeffs;
            let norm = vec_norm(&psi0);
            for c in psi0.iter_mut() {
                *c = *c / Complex::new(norm, T::zero());
            }
            let traj = quantum_evolve(&a, &psi0, &times)?;
            let leak: Vec<T> = traj.iter().map(|psi| leakage(&spec, psi)).collect();
            let onset = times
                .iter()
                .zip(&leak)
                .find(|(_, &l)| l > T::of(0.01))
                .map(|(&tt, _)| tt);
            Ok(LeakageCurve { cutoff: m, times: times.clone(), leakage: leak, onset })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = match &classical.escape {
        Some(e) => format!(
            "classical orbit escapes in [{}, {}]; leakage onsets per cutoff: {:?} (probed orbit only, no completeness verdict)",
            e.lower,
            e.upper,
            curves.iter().map(|c| (c.cutoff, c.onset.and_then(|t| t.to_f64()))).collect::<Vec<_>>(),
        ),
        None => format!(
            "no classical escape within τ = {}; leakage onsets per cutoff: {:?} (probed orbit only, no completeness verdict)",
            cfg.total_time,
            curves.iter().map(|c| (c.cutoff, c.onset.and_then(|t| t.to_f64()))).collect::<Vec<_>>(),
        ),
    };
    Ok(CompletenessReport { classical_escape: classical.escape, curves, summary })
}

/// Position observables T_{z_j} at the trajectory's cutoff, as needed by
/// [`expectation_trajectory`].
pub fn position_observables<T: Real>(spec: &TruncationSpec<T>) -> Result<Vec<TruncatedOperator<T>>> {
    (0..spec.ctx.n)
        .map(|j| crate::toeplitz::coordinate_toeplitz(spec, j, false))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;
    use crate::phase::QuantizationContext;
    use crate::symbol::PolySymbol;
    use crate::toeplitz::harmonic_oscillator;
    use num_complex::Complex64;

    fn ctx1() -> QuantizationContext<f64> {
        QuantizationContext::scalar(1, 0.5).unwrap()
    }

    fn cfg(tau: f64, h: f64) -> EvolutionConfig<f64> {
        EvolutionConfig::new(tau, h).unwrap()
    }

    #[test]
    fn circular_orbit_speed_two() {
        let f = Symbol::abs_squared(ctx1());
        let z0 = ClassicalState::new(vec![1.0], vec![0.0]).unwrap();
        let period = std::f64::consts::PI; // angular speed 2
        let mut c = cfg(period, 1e-4);
        for integ in [Integrator::ImplicitMidpoint, Integrator::AdaptiveRk] {
            c.integrator = integ;
            let traj = classical_flow(&f, &z0, &c).unwrap();
            assert!(traj.escape.is_none());
            // |z| constant within 1e-9 along the whole orbit
            for s in &traj.states {
                assert!((s.norm() - 1.0).abs() < 1e-9, "{:?}", integ);
            }
            // closed form z(τ) = e^{2iτ}·1 checked at the grid time nearest
            // the quarter period
            let quarter = traj
                .times
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    (*a - period / 4.0).abs().partial_cmp(&(*b - period / 4.0).abs()).unwrap()
                })
                .map(|(i, _)| i)
                .unwrap();
            let tq = traj.times[quarter];
            let s = &traj.states[quarter];
            assert!(
                (s.x[0] - (2.0 * tq).cos()).abs() < 1e-6
                    && (s.xi[0] - (2.0 * tq).sin()).abs() < 1e-6,
                "{:?}",
                integ
            );
            // closed after one period
            let last = traj.states.last().unwrap();
            assert!((last.x[0] - 1.0).abs() < 1e-6 && last.xi[0].abs() < 1e-6);
        }
    }

    #[test]
    fn linear_symbol_drifts() {
        // f = ξ = (z − z̄)/(2i): ẋ = −∂_ξ f = −1, ξ̇ = 0
        let mut p = PolySymbol::new(1, 1);
        p.add_scalar_term(vec![1], vec![0], Complex64::new(0.0, -0.5));
        p.add_scalar_term(vec![0], vec![1], Complex64::new(0.0, 0.5));
        let f = Symbol::polynomial(ctx1(), p).unwrap();
        let z0 = ClassicalState::new(vec![0.0], vec![0.0]).unwrap();
        let traj = classical_flow(&f, &z0, &cfg(1.0, 0.01)).unwrap();
        let last = traj.states.last().unwrap();
        assert!((last.x[0] + 1.0).abs() < 1e-9 && last.xi[0].abs() < 1e-12);
    }

    #[test]
    fn energy_conserved_and_second_order() {
        let f = Symbol::re_z_cubed(ctx1());
        // the cubic flow ż = 3i z̄² blows up near τ ≈ 1/(3|z0|); stay well
        // inside that horizon
        let z0 = ClassicalState::new(vec![0.3], vec![0.2]).unwrap();
        let run = |h: f64| {
            let traj = classical_flow(&f, &z0, &cfg(0.5, h)).unwrap();
            let last = traj.states.last().unwrap().clone();
            let e0 = f.eval(&z0.to_phase_point()).unwrap()[(0, 0)].re;
            let e1 = f.eval(&last.to_phase_point()).unwrap()[(0, 0)].re;
            (last, (e1 - e0).abs())
        };
        let (s1, drift1) = run(0.01);
        let (s2, _) = run(0.005);
        assert!(drift1 < 1e-6, "energy drift {drift1}");
        // reference with a much finer step
        let (sref, _) = run(0.000125);
        let err = |s: &ClassicalState<f64>| {
            ((s.x[0] - sref.x[0]).powi(2) + (s.xi[0] - sref.xi[0]).powi(2)).sqrt()
        };
        let (e1, e2) = (err(&s1), err(&s2));
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "convergence order {order} (e1={e1:.3e}, e2={e2:.3e})");
    }

    #[test]
    fn cubic_escape_is_finite_and_step_stable() {
        let f = Symbol::re_z_cubed(ctx1());
        let z0 = ClassicalState::new(vec![1.0], vec![0.0]).unwrap();
        let mut c = cfg(5.0, 1e-3);
        c.integrator = Integrator::AdaptiveRk;
        let a = classical_flow(&f, &z0, &c).unwrap();
        let ea = a.escape.expect("cubic orbit must escape");
        assert!(ea.upper > ea.lower && ea.lower > 0.0);
        c.step = 5e-4;
        let eb = classical_flow(&f, &z0, &c).unwrap().escape.unwrap();
        let rel = (ea.lower - eb.lower).abs() / ea.lower;
        assert!(rel < 0.05, "escape range unstable under step halving: {rel}");
    }

    #[test]
    fn vacuum_is_stationary() {
        let ctx = ctx1();
        let spec = TruncationSpec::new(ctx, 20);
        let n = harmonic_oscillator(&spec);
        let mut psi0 = vec![Complex64::new(0.0, 0.0); spec.dim()];
        psi0[0] = Complex64::new(1.0, 0.0);
        let times: Vec<f64> = (0..10).map(|k| 0.3 * k as f64).collect();
        let traj = quantum_evolve(&n, &psi0, &times).unwrap();
        for psi in &traj {
            assert!((vec_norm(psi) - 1.0).abs() < 1e-12);
            assert!((psi[0].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_hamiltonian_freezes() {
        let ctx = ctx1();
        let spec = TruncationSpec::new(ctx, 10);
        let zero = Symbol::constant(ctx, CMatrix::zeros(1, 1)).unwrap();
        let a = assemble_toeplitz(&zero, &spec, &QuadratureSpec::default()).unwrap();
        let mut psi0 = vec![Complex64::new(0.0, 0.0); spec.dim()];
        psi0[3] = Complex64::new(0.6, 0.0);
        psi0[5] = Complex64::new(0.0, 0.8);
        let traj = quantum_evolve(&a, &psi0, &[0.0, 1.0, 2.5]).unwrap();
        for psi in &traj {
            for (u, v) in psi.iter().zip(&psi0) {
                assert!((u - v).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn coherent_rotates_under_oscillator() {
        let ctx = ctx1();
        let spec = TruncationSpec::new(ctx, 40);
        let n = harmonic_oscillator(&spec);
        let w = PhasePoint::new(vec![Complex64::new(0.7, 0.2)]);
        let mut psi0 = coherent_coefficients(&spec, &w).coeffs;
        let norm = vec_norm(&psi0);
        for c in psi0.iter_mut() {
            *c /= norm;
        }
        let times = [0.4, 1.1, 2.0];
        let traj = quantum_evolve(&n, &psi0, &times).unwrap();
        for (&tau, psi) in times.iter().zip(&traj) {
            assert!((vec_norm(psi) - 1.0).abs() < 1e-12);
            // N rotates the coherent center by e^{iτ}
            let rotated = w.scale(Complex64::from_polar(1.0, tau));
            let mut target = coherent_coefficients(&spec, &rotated).coeffs;
            let tnorm = vec_norm(&target);
            for c in target.iter_mut() {
                *c /= tnorm;
            }
            let overlap = inner(psi, &target).norm();
            assert!((overlap - 1.0).abs() < 1e-6, "τ={tau}: overlap {overlap}");
        }
    }

    #[test]
    fn quadratic_ehrenfest_matches_classical_flow() {
        // quantum evolution under T_{|z|²} vs the classical flow of |z|²
        let ctx = ctx1();
        let spec = TruncationSpec::new(ctx, 40);
        let f = Symbol::abs_squared(ctx);
        let a = assemble_toeplitz(&f, &spec, &QuadratureSpec::default()).unwrap();
        let w = PhasePoint::new(vec![Complex64::new(0.5, 0.3)]);
        let mut psi0 = coherent_coefficients(&spec, &w).coeffs;
        let norm = vec_norm(&psi0);
        for c in psi0.iter_mut() {
            *c /= norm;
        }
        let period = std::f64::consts::PI;
        let times: Vec<f64> = (0..=40).map(|k| period * k as f64 / 40.0).collect();
        let traj = quantum_evolve(&a, &psi0, &times).unwrap();
        let obs = position_observables(&spec).unwrap();
        let exps = expectation_trajectory(&traj, &obs).unwrap();
        // energy conservation along the quantum evolution
        let e: Vec<f64> = traj
            .iter()
            .map(|psi| inner(&a.matrix.matvec(psi), psi).re)
            .collect();
        for v in &e {
            assert!((v - e[0]).abs() < 1e-10, "energy drift");
        }
        let z0 = ClassicalState::from_phase_point(&w);
        let mut c = cfg(period, period / 40.0);
        c.integrator = Integrator::AdaptiveRk;
        let classical = classical_flow(&f, &z0, &c).unwrap();
        for (k, &tau) in times.iter().enumerate() {
            let q = exps[0][k];
            let s = &classical.states[k];
            let dev = ((q.re - s.x[0]).powi(2) + (q.im - s.xi[0]).powi(2)).sqrt();
            assert!(dev < 1e-6, "τ={tau}: quantum {q} vs classical ({}, {})", s.x[0], s.xi[0]);
        }
    }

    #[test]
    fn expectation_rejects_cutoff_mismatch() {
        let ctx = ctx1();
        let spec20 = TruncationSpec::new(ctx, 20);
        let spec10 = TruncationSpec::new(ctx, 10);
        let n = harmonic_oscillator(&spec20);
        let mut psi0 = vec![Complex64::new(0.0, 0.0); spec20.dim()];
        psi0[0] = Complex64::new(1.0, 0.0);
        let traj = quantum_evolve(&n, &psi0, &[0.5]).unwrap();
        let obs = position_observables(&spec10).unwrap();
        assert!(expectation_trajectory(&traj, &obs).is_err());
    }

    #[test]
    fn completeness_oscillator_never_leaks() {
        let ctx = ctx1();
        let f = Symbol::abs_squared(ctx);
        let z0 = ClassicalState::new(vec![0.8], vec![0.0]).unwrap();
        let mut c = cfg(3.0 * std::f64::consts::PI, 0.05);
        c.cutoffs = vec![20, 40];
        let rep = completeness_experiment(&f, &z0, &c).unwrap();
        assert!(rep.classical_escape.is_none());
        for curve in &rep.curves {
            assert!(curve.onset.is_none());
            assert!(curve.leakage.iter().all(|&l| l < 1e-8), "cutoff {}", curve.cutoff);
        }
    }

    #[test]
    fn completeness_cubic_leaks_with_escape() {
        let ctx = ctx1();
        let f = Symbol::re_z_cubed(ctx);
        let z0 = ClassicalState::new(vec![1.0], vec![0.0]).unwrap();
        let mut c = cfg(2.0, 0.01);
        c.integrator = Integrator::AdaptiveRk;
        c.cutoffs = vec![20, 40, 80];
        let rep = completeness_experiment(&f, &z0, &c).unwrap();
        assert!(rep.classical_escape.is_some(), "cubic orbit escapes");
        let onsets: Vec<f64> = rep
            .curves
            .iter()
            .map(|cu| cu.onset.expect("leakage onset at every cutoff"))
            .collect();
        // ladder-monotone onset ordering
        assert!(
            onsets.windows(2).all(|w| w[0] <= w[1]) || onsets.windows(2).all(|w| w[0] >= w[1]),
            "onsets not monotone: {onsets:?}"
        );
        for curve in &rep.curves {
            assert!(curve.leakage.iter().all(|&l| (0.0..=1.0).contains(&l)));
        }
    }

    #[test]
    fn direction_flag_reverses_flow() {
        let f = Symbol::abs_squared(ctx1());
        let z0 = ClassicalState::new(vec![1.0], vec![0.0]).unwrap();
        let mut c = cfg(0.25, 1e-3);
        c.direction = FlowDirection::Standard;
        let traj = classical_flow(&f, &z0, &c).unwrap();
        let paper = classical_flow(&f, &z0, &cfg(0.25, 1e-3)).unwrap();
        let a = traj.states.last().unwrap();
        let b = paper.states.last().unwrap();
        // time reversal: ξ components mirror
        assert!((a.x[0] - b.x[0]).abs() < 1e-8 && (a.xi[0] + b.xi[0]).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_configs_and_symbols() {
        assert!(EvolutionConfig::<f64>::new(0.0, 0.1).is_err());
        assert!(EvolutionConfig::<f64>::new(1.0, 0.0).is_err());
        let ctx = ctx1();
        let z0 = ClassicalState::new(vec![0.0], vec![0.0]).unwrap();
        let callable = Symbol::callable(
            ctx,
            std::sync::Arc::new(|_: &PhasePoint<f64>| Ok(CMatrix::identity(1))),
        );
        assert!(classical_flow(&callable, &z0, &cfg(1.0, 0.1)).is_err());
        assert!(ClassicalState::new(vec![f64::NAN], vec![0.0]).is_err());
    }
}
