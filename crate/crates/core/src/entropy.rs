//! Entropy pairs, the face transforms `V`, per-cell entropy residuals, the dissipation
//! functional, the L∞ envelope and the global entropy inequality.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flux::{FaceOps, NumericalFlux, RANGE_SAMPLES};
use crate::geometry::{ChartPoint, QuadratureRule};
use crate::mesh::{ElemId, FaceId, Mesh};
use crate::scheme::{decompose, neighbor_values, Decomposition, SliceState, Solver};

/// Default size of the Kruzkov constant grid.
pub const DEFAULT_LAMBDA_POINTS: usize = 11;
/// Bound on per-cell residuals.
pub const TOL_ENTROPY: f64 = 1e-10;
/// Relative slack of the global inequality.
pub const TOL_GLOBAL: f64 = 1e-8;
/// Nodes of the Gauss–Legendre rule for quadratic-entropy integrals.
pub const ENTROPY_QUAD_NODES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EntropyPair {
    /// `U(u) = |u - λ|`
    Kruzkov(f64),
    /// `U(u) = u²/2`
    Quadratic,
}

impl EntropyPair {
    pub fn u(&self, u: f64) -> f64 {
        match *self {
            EntropyPair::Kruzkov(l) => (u - l).abs(),
            EntropyPair::Quadratic => 0.5 * u * u,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            EntropyPair::Kruzkov(l) => format!("kruzkov({l})"),
            EntropyPair::Quadratic => "quadratic".into(),
        }
    }

    /// Profile `(Φ, Ψ)` of the entropy flux, `F(u, p) = w(p)·(Φ(u), Ψ(u))`.
    pub fn flux_profile(&self, ops: &FaceOps, u: f64) -> [f64; 2] {
        let prof = ops.flux.profile;
        match *self {
            EntropyPair::Kruzkov(l) => {
                let s = sgn(u - l);
                let (a, b) = (prof.components(u), prof.components(l));
                [s * (a[0] - b[0]), s * (a[1] - b[1])]
            }
            EntropyPair::Quadratic => {
                if u == 0.0 {
                    return [0.0, 0.0];
                }
                let q = quad32();
                [
                    q.integrate(0.0, u, |s| s * prof.d_components(s)[0]),
                    q.integrate(0.0, u, |s| s * prof.d_components(s)[1]),
                ]
            }
        }
    }

    /// `μ^F_e(u)` in the face's reference orientation.
    pub fn face_flux(&self, ops: &FaceOps, face: FaceId, u: f64) -> f64 {
        ops.contract(face, self.flux_profile(ops, u))
    }

    /// `V_K(m) = μ^F_{K,e+}((μ_K^+)^{-1}(m))`.
    pub fn v(&self, mesh: &Mesh, ops: &FaceOps, k: ElemId, m: f64) -> Result<f64> {
        let e = mesh.element(k);
        match *self {
            EntropyPair::Kruzkov(l) => Ok((m - ops.mu_plus(e, l)).abs()),
            EntropyPair::Quadratic => {
                let u = ops.invert(e.outflow, m, None)?;
                Ok(self.face_flux(ops, e.outflow, u))
            }
        }
    }

    /// Numerical entropy flux `Q_{K,e0}(u, v)` built from `q`.
    pub fn q_entropy(&self, q: &dyn NumericalFlux, k: ElemId, i: usize, u: f64, v: f64) -> f64 {
        match *self {
            EntropyPair::Kruzkov(l) => kruzkov_q(q, k, i, u, v, l),
            EntropyPair::Quadratic => quadratic_q(q, k, i, u, v),
        }
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn quad32() -> &'static QuadratureRule {
    static RULE: std::sync::OnceLock<QuadratureRule> = std::sync::OnceLock::new();
    RULE.get_or_init(|| QuadratureRule::gauss_legendre(ENTROPY_QUAD_NODES))
}

/// `sgn(u - λ)(μ_e(u) - μ_e(λ))` in the face's reference orientation.
pub fn kruzkov_face_flux(ops: &FaceOps, face: FaceId, u: f64, lambda: f64) -> f64 {
    sgn(u - lambda) * (ops.avg(face, u) - ops.avg(face, lambda))
}

/// `q(u∨λ, v∨λ) - q(u∧λ, v∧λ)`
pub fn kruzkov_q(q: &dyn NumericalFlux, k: ElemId, i: usize, u: f64, v: f64, lambda: f64) -> f64 {
    q.q(k, i, u.max(lambda), v.max(lambda)) - q.q(k, i, u.min(lambda), v.min(lambda))
}

/// Numerical flux of `u²/2`, obtained by integrating the Kruzkov fluxes over `λ`:
/// with `m = u∧v`, `M = u∨v`,
/// `Q = ½[(m + M) q(u,v) - ∫_0^M q(λ,λ) - ∫_0^m q(λ,λ) + ∫_m^M mid(λ)]`
/// where `mid(λ) = ±(q(λ,v) - q(u,λ))`, sign `+` for `u ≤ v`.
pub fn quadratic_q(q: &dyn NumericalFlux, k: ElemId, i: usize, u: f64, v: f64) -> f64 {
    let (m, big) = (u.min(v), u.max(v));
    let rule = quad32();
    let diag = |l: f64| q.q(k, i, l, l);
    let mid = |l: f64| {
        if u <= v {
            q.q(k, i, l, v) - q.q(k, i, u, l)
        } else {
            q.q(k, i, u, l) - q.q(k, i, l, v)
        }
    };
    let int_diag = |b: f64| if b == 0.0 { 0.0 } else { rule.integrate(0.0, b, diag) };
    let int_mid = if big > m { rule.integrate(m, big, mid) } else { 0.0 };
    0.5 * ((m + big) * q.q(k, i, u, v) - int_diag(big) - int_diag(m) + int_mid)
}

/// `L_{e0} = V(μ̄) - V(μ^+(u)) + (|∂0K|/|e+|)(Q(u,v) - Q(u,u)) - R` per lateral face,
/// with `R = V(μ̄) - V(μ̃)`.
#[allow(clippy::too_many_arguments)]
pub fn residuals_from(
    mesh: &Mesh,
    ops: &FaceOps,
    q: &dyn NumericalFlux,
    k: ElemId,
    u: f64,
    nbs: &[f64],
    dec: &Decomposition,
    pair: &EntropyPair,
) -> Result<Vec<f64>> {
    let e = mesh.element(k);
    let ratio = e.lateral_measure / mesh.face(e.outflow).measure;
    let v_u = pair.v(mesh, ops, k, dec.mu_plus)?;
    let mut out = Vec::with_capacity(nbs.len());
    for (i, &v) in nbs.iter().enumerate() {
        let v_bar = pair.v(mesh, ops, k, dec.bar[i])?;
        let v_tilde = pair.v(mesh, ops, k, dec.tilde[i])?;
        let r = v_bar - v_tilde;
        let dq = pair.q_entropy(q, k, i, u, v) - pair.q_entropy(q, k, i, u, u);
        out.push(v_bar - v_u + ratio * dq - r);
    }
    Ok(out)
}

/// Maximum of [`residuals_from`] over the lateral faces.
#[allow(clippy::too_many_arguments)]
pub fn residual_from(
    mesh: &Mesh,
    ops: &FaceOps,
    q: &dyn NumericalFlux,
    k: ElemId,
    u: f64,
    nbs: &[f64],
    dec: &Decomposition,
    pair: &EntropyPair,
) -> Result<f64> {
    Ok(residuals_from(mesh, ops, q, k, u, nbs, dec, pair)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Residual of element `k` for the step out of `state`.
pub fn cell_entropy_residual(
    mesh: &Mesh,
    ops: &FaceOps,
    q: &dyn NumericalFlux,
    k: ElemId,
    state: &SliceState,
    pair: &EntropyPair,
) -> Result<f64> {
    let u = state.values[mesh.element(k).slot];
    let nbs = neighbor_values(mesh, k, state);
    let dec = decompose(mesh, ops, q, k, u, &nbs);
    residual_from(mesh, ops, q, k, u, &nbs, &dec, pair)
}

/// `(1/|e|) Σ w φ(p)` over the face nodes.
pub fn face_average<P: Fn(ChartPoint) -> f64>(mesh: &Mesh, face: FaceId, phi: &P) -> f64 {
    let f = mesh.face(face);
    f.nodes.iter().map(|nd| nd.weight * phi(nd.point)).sum::<f64>() / f.measure
}

/// `∫_e c(p) g(F(u), n_ref)` by the face quadrature.
fn weighted_flux<C: Fn(ChartPoint) -> f64>(mesh: &Mesh, ops: &FaceOps, face: FaceId, c: C, prof: [f64; 2]) -> f64 {
    mesh.face(face)
        .nodes
        .iter()
        .map(|nd| {
            let w = nd.weight * ops.flux.weight_at(&mesh.metric, nd.point) * c(nd.point);
            w * (prof[0] * nd.conormal[0] + prof[1] * nd.conormal[1])
        })
        .sum()
}

/// `Σ_n Σ_{K,e0} (|e0||e+|/|∂0K|)·|μ̄ - μ^+(u^{n+1})|²`
pub fn dissipation_total(solver: &Solver, states: &[SliceState]) -> f64 {
    let mesh = &solver.mesh;
    let lf = solver.lf();
    states
        .windows(2)
        .map(|w| {
            let (s, next) = (&w[0], &w[1]);
            mesh.slices[s.n]
                .par_iter()
                .map(|&k| {
                    let e = mesh.element(k);
                    let u = s.values[e.slot];
                    let nbs = neighbor_values(mesh, k, s);
                    let dec = decompose(mesh, &solver.ops, &lf, k, u, &nbs);
                    let target = solver.ops.mu_plus(e, next.values[e.slot]);
                    let e_plus = mesh.face(e.outflow).measure;
                    dec.weights
                        .iter()
                        .zip(&dec.bar)
                        .map(|(w, b)| w * e_plus * (b - target).powi(2))
                        .sum::<f64>()
                })
                .collect::<Vec<f64>>()
                .into_iter()
                .sum::<f64>()
        })
        .sum()
}

/// Modulus of convexity `β = inf_K inf_u V_K''`; refused for Kruzkov pairs.
pub fn beta(mesh: &Mesh, ops: &FaceOps, pair: &EntropyPair) -> Result<f64> {
    match pair {
        EntropyPair::Kruzkov(_) => Err(Error::ZeroConvexity),
        EntropyPair::Quadratic => {
            // V'(m) = (μ^+)^{-1}(m), so V'' = 1/μ^+'
            let samples = ops.range_samples(RANGE_SAMPLES);
            let mut b = f64::INFINITY;
            for e in &mesh.elements {
                let sup = samples.iter().map(|&u| ops.d_mu_plus(e, u)).fold(0.0, f64::max);
                b = b.min(1.0 / sup);
            }
            Ok(b)
        }
    }
}

/// Entropy balance that bounds `β/2 · dissipation` for a strongly convex pair.
#[derive(Clone, Debug, PartialEq)]
pub struct DissipationBound {
    pub beta: f64,
    pub dissipation: f64,
    /// `E_0 - E_N + Σ ∫_K div F(u_K) + Σ (|e0||e+|/|∂0K|) R`, with `E_n = Σ_{H_n} |e| μ^F`.
    pub bound: f64,
    pub pass: bool,
}

pub fn dissipation_bound(solver: &Solver, states: &[SliceState], pair: &EntropyPair) -> Result<DissipationBound> {
    let mesh = &solver.mesh;
    let ops = &solver.ops;
    let beta = beta(mesh, ops, pair)?;
    let lf = solver.lf();
    let energy = |s: &SliceState| -> f64 {
        mesh.hypersurface(s.n)
            .iter()
            .zip(&s.values)
            .map(|(&f, &u)| mesh.face(f).measure * pair.face_flux(ops, f, u))
            .sum()
    };
    let mut bound = energy(&states[0]) - energy(&states[states.len() - 1]);
    for s in &states[..states.len() - 1] {
        for &k in &mesh.slices[s.n] {
            let e = mesh.element(k);
            let u = s.values[e.slot];
            let mut div = mesh.face(e.outflow).measure * pair.face_flux(ops, e.outflow, u)
                - mesh.face(e.inflow).measure * pair.face_flux(ops, e.inflow, u);
            for l in &e.laterals {
                div += l.sign * mesh.face(l.face).measure * pair.face_flux(ops, l.face, u);
            }
            bound += div;
            let nbs = neighbor_values(mesh, k, s);
            let dec = decompose(mesh, ops, &lf, k, u, &nbs);
            let e_plus = mesh.face(e.outflow).measure;
            for i in 0..nbs.len() {
                let r = pair.v(mesh, ops, k, dec.bar[i])? - pair.v(mesh, ops, k, dec.tilde[i])?;
                bound += dec.weights[i] * e_plus * r;
            }
        }
    }
    let dissipation = dissipation_total(solver, states);
    let scale = bound.abs().max(dissipation).max(1.0);
    Ok(DissipationBound {
        beta,
        dissipation,
        bound,
        pass: 0.5 * beta * dissipation <= bound + 1e-10 * scale,
    })
}

/// `λ` values evenly spaced from the data minimum to the data maximum.
pub fn lambda_grid(values: &[f64], n: usize) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !lo.is_finite() || n == 0 {
        return Vec::new();
    }
    if n == 1 || lo == hi {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeReport {
    pub c1: f64,
    pub c2: f64,
    /// `(max|u^0| + C1 t_n)·exp(C2 t_n)` per slice.
    pub bounds: Vec<f64>,
    pub values: Vec<f64>,
    /// `min_n (bound_n + 1e-10 - max|u^n|)`
    pub margin: f64,
    pub pass: bool,
}

/// Absolute slack of the envelope check.
pub const ENVELOPE_TOL: f64 = 1e-10;

/// Checks `max|u^n| ≤ (max|u^0| + C1 t_n)·exp(C2 t_n)` with `t_n` measured from `H_0`.
pub fn linfty_envelope(states: &[SliceState], c1: f64, c2: f64) -> EnvelopeReport {
    let u0 = states.first().map(|s| s.max_abs()).unwrap_or(0.0);
    let t0 = states.first().map(|s| s.t).unwrap_or(0.0);
    let mut bounds = Vec::with_capacity(states.len());
    let mut values = Vec::with_capacity(states.len());
    let mut margin = f64::INFINITY;
    for s in states {
        let t = s.t - t0;
        let b = (u0 + c1 * t) * (c2 * t).exp();
        let v = s.max_abs();
        margin = margin.min(b + ENVELOPE_TOL - v);
        bounds.push(b);
        values.push(v);
    }
    EnvelopeReport {
        c1,
        c2,
        bounds,
        values,
        margin,
        pass: margin >= 0.0,
    }
}

/// Smooth bump `B((t - tc)/rt)·B(d(x, xc)/rx)` with `B(z) = exp(1 - 1/(1 - z²))` on `|z| < 1`
/// and `d` the periodic distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestFunction {
    pub tc: f64,
    pub xc: f64,
    pub rt: f64,
    pub rx: f64,
    pub period: f64,
}

impl TestFunction {
    pub fn eval(&self, p: ChartPoint) -> f64 {
        let b = |z: f64| {
            if z.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - z * z)).exp()
            }
        };
        let mut dx = (p.x - self.xc).rem_euclid(self.period);
        if dx > 0.5 * self.period {
            dx -= self.period;
        }
        b((p.t - self.tc) / self.rt) * b(dx / self.rx)
    }

    /// Five bumps inside `(0, t_end) × [0, L)`, clear of the final slice.
    pub fn builtin(t_end: f64, period: f64) -> Vec<TestFunction> {
        // (tc/T, xc/L, rt/T, rx/L)
        const SHAPES: [(f64, f64, f64, f64); 5] = [
            (0.4, 0.6, 0.3, 0.15),
            (0.5, 0.0, 0.4, 0.2),
            (0.3, 0.3, 0.3, 0.2),
            (0.2, 0.55, 0.2, 0.1),
            (0.6, 0.65, 0.38, 0.3),
        ];
        SHAPES
            .iter()
            .map(|&(a, b, c, d)| TestFunction {
                tc: a * t_end,
                xc: b * period,
                rt: c * t_end,
                rx: d * period,
                period,
            })
            .collect()
    }
}

/// Both sides of the global entropy inequality, with the right-hand side split by term.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GlobalEntropyReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `-Σ w|e+| φ_{e0} (V(μ̃) - V(μ̄))`
    pub remainder: f64,
    /// `Σ w|e+| (φ_∂ - φ_{e0}) V(μ̄)`
    pub averaging: f64,
    /// `Σ ∫_{e0} (φ_{e0} - φ) F_{e0}(u)` plus the lateral quadrature mismatch
    pub lateral: f64,
    /// `Σ_{K^0} ∫_{e-} φ g(F(u^0), n) - Σ_{K^{N-1}} ∫_{e+} φ g(F(u^N), n)`
    pub boundary: f64,
    /// `-Σ ∫_{e+} (φ_∂ - φ) g(F(u^{n+1}) - F(u^n), n)`
    pub interface: f64,
    /// Sum of the absolute values of all contributions.
    pub scale: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Evaluates the global entropy inequality for the test function `phi` on a trajectory.
///
/// All space-like integrals use the past-directed normal, so `∫_K div(φF) = P^+ - P^- + Σ L`.
pub fn global_entropy_functional<P: Fn(ChartPoint) -> f64 + Sync>(
    solver: &Solver,
    states: &[SliceState],
    phi: &P,
    pair: &EntropyPair,
) -> Result<GlobalEntropyReport> {
    let mesh = &solver.mesh;
    let ops = &solver.ops;
    let lf = solver.lf();
    let last = states.len() - 1;
    for &f in &mesh.hypersurface(last) {
        for nd in &mesh.face(f).nodes {
            if phi(nd.point) != 0.0 {
                return Err(Error::UnsupportedPhi(nd.point.t));
            }
        }
    }
    let per_slice: Vec<Result<[f64; 7]>> = states[..last]
        .par_iter()
        .map(|s| {
            let next = &states[s.n + 1];
            // lhs, remainder, averaging, lateral, boundary, interface, scale
            let mut acc = [0.0; 7];
            for &k in &mesh.slices[s.n] {
                let e = mesh.element(k);
                let u = s.values[e.slot];
                let u1 = next.values[e.slot];
                let fu = pair.flux_profile(ops, u);
                let fu1 = pair.flux_profile(ops, u1);
                let nbs = neighbor_values(mesh, k, s);
                let dec = decompose(mesh, ops, &lf, k, u, &nbs);
                let e_plus = mesh.face(e.outflow).measure;
                let phi_i: Vec<f64> = e.laterals.iter().map(|l| face_average(mesh, l.face, phi)).collect();
                let phi_d: f64 = dec.weights.iter().zip(&phi_i).map(|(w, p)| w * p).sum();

                let p_plus = weighted_flux(mesh, ops, e.outflow, phi, fu);
                let p_minus = weighted_flux(mesh, ops, e.inflow, phi, fu);
                let mut lat = 0.0;
                for l in &e.laterals {
                    lat += l.sign * weighted_flux(mesh, ops, l.face, phi, fu);
                }
                let lhs = -(p_plus - p_minus + lat);
                acc[0] += lhs;
                acc[6] += p_plus.abs() + p_minus.abs() + lat.abs();

                for (i, l) in e.laterals.iter().enumerate() {
                    let wi = dec.weights[i];
                    let v_bar = pair.v(mesh, ops, k, dec.bar[i])?;
                    let v_tilde = pair.v(mesh, ops, k, dec.tilde[i])?;
                    let a = wi * e_plus * phi_i[i] * (v_bar - v_tilde);
                    let b = -wi * e_plus * (phi_i[i] - phi_d) * v_bar;
                    let e0 = mesh.face(l.face).measure;
                    let pi = phi_i[i];
                    let c = l.sign * weighted_flux(mesh, ops, l.face, |p| pi - phi(p), fu)
                        + e0 * pi * (pair.q_entropy(&lf, k, i, u, u) - l.sign * pair.face_flux(ops, l.face, u));
                    acc[1] += a;
                    acc[2] += b;
                    acc[3] += c;
                    acc[6] += a.abs() + b.abs() + c.abs();
                }
                if s.n == 0 {
                    acc[4] += p_minus;
                    acc[6] += p_minus.abs();
                }
                if s.n + 1 == last {
                    let fin = weighted_flux(mesh, ops, e.outflow, phi, fu1);
                    acc[4] -= fin;
                    acc[6] += fin.abs();
                }
                let g1 = weighted_flux(mesh, ops, e.outflow, |p| phi_d - phi(p), fu1);
                let g0 = weighted_flux(mesh, ops, e.outflow, |p| phi_d - phi(p), fu);
                acc[5] -= g1 - g0;
                acc[6] += g1.abs() + g0.abs();
            }
            Ok(acc)
        })
        .collect();
    let mut tot = [0.0; 7];
    for acc in per_slice {
        for (t, a) in tot.iter_mut().zip(acc?) {
            *t += a;
        }
    }
    let [lhs, remainder, averaging, lateral, boundary, interface, scale] = tot;
    let rhs = remainder + averaging + lateral + boundary + interface;
    let slack = rhs - lhs;
    Ok(GlobalEntropyReport {
        lhs,
        rhs,
        remainder,
        averaging,
        lateral,
        boundary,
        interface,
        scale,
        slack,
        pass: lhs <= rhs + TOL_GLOBAL * scale,
    })
}

/// Per-slice entropy residuals and dissipation of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyReport {
    pub pair: EntropyPair,
    /// Kruzkov constants used, empty for the quadratic pair.
    pub lambda_grid: Vec<f64>,
    /// Largest cell residual per step.
    pub slice_residuals: Vec<f64>,
    /// Dissipation per step.
    pub slice_dissipation: Vec<f64>,
    pub max_residual: f64,
    pub dissipation_total: f64,
    /// `None` for Kruzkov pairs, whose modulus of convexity is zero.
    pub beta: Option<f64>,
    pub tol: f64,
    pub pass: bool,
}

/// Sweeps every cell of every step with `pair` (or, for Kruzkov, the whole `lambdas` grid).
pub fn entropy_report(
    solver: &Solver,
    states: &[SliceState],
    quadratic: bool,
    lambdas: &[f64],
) -> Result<EntropyReport> {
    let mesh = &solver.mesh;
    let ops = &solver.ops;
    let lf = solver.lf();
    let pairs: Vec<EntropyPair> = if quadratic {
        vec![EntropyPair::Quadratic]
    } else {
        lambdas.iter().map(|&l| EntropyPair::Kruzkov(l)).collect()
    };
    let mut slice_residuals = Vec::new();
    let mut slice_dissipation = Vec::new();
    for w in states.windows(2) {
        let (s, next) = (&w[0], &w[1]);
        let per: Vec<Result<(f64, f64)>> = mesh.slices[s.n]
            .par_iter()
            .map(|&k| {
                let e = mesh.element(k);
                let u = s.values[e.slot];
                let nbs = neighbor_values(mesh, k, s);
                let dec = decompose(mesh, ops, &lf, k, u, &nbs);
                let mut r = f64::NEG_INFINITY;
                for p in &pairs {
                    r = r.max(residual_from(mesh, ops, &lf, k, u, &nbs, &dec, p)?);
                }
                let target = ops.mu_plus(e, next.values[e.slot]);
                let e_plus = mesh.face(e.outflow).measure;
                let d = dec
                    .weights
                    .iter()
                    .zip(&dec.bar)
                    .map(|(w, b)| w * e_plus * (b - target).powi(2))
                    .sum::<f64>();
                Ok((r, d))
            })
            .collect();
        let mut rmax = f64::NEG_INFINITY;
        let mut dsum = 0.0;
        for x in per {
            let (r, d) = x?;
            rmax = rmax.max(r);
            dsum += d;
        }
        slice_residuals.push(rmax);
        slice_dissipation.push(dsum);
    }
    let max_residual = slice_residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let beta = if quadratic {
        Some(beta(mesh, ops, &EntropyPair::Quadratic)?)
    } else {
        None
    };
    Ok(EntropyReport {
        pair: pairs.first().copied().unwrap_or(EntropyPair::Quadratic),
        lambda_grid: if quadratic { Vec::new() } else { lambdas.to_vec() },
        dissipation_total: slice_dissipation.iter().sum(),
        slice_residuals,
        slice_dissipation,
        max_residual,
        beta,
        tol: TOL_ENTROPY,
        pass: !(max_residual > TOL_ENTROPY),
    })
}
