//! Time marching: initialization on `H_0`, the per-element update, and the convex
//! decomposition of the updated outflow averages.

use rayon::prelude::*;

use crate::entropy::{self, EntropyPair};
use crate::error::{Error, Result};
use crate::flux::{required_diffusion, FaceOps, LaxFriedrichs, NumericalFlux, RANGE_SAMPLES};
use crate::geometry::{growth_constants, sample_grid, ChartPoint, FluxField, MetricChart, QuadratureRule};
use crate::mesh::{self, cfl_report, ElemId, Mesh};

/// Discrete solution on the hypersurface `H_n`, indexed by slot.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceState {
    pub n: usize,
    pub t: f64,
    pub values: Vec<f64>,
    /// `|e| μ_e(u)` on the faces of `H_n`.
    pub masses: Vec<f64>,
}

impl SliceState {
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn face_masses(mesh: &Mesh, ops: &FaceOps, n: usize, values: &[f64]) -> Vec<f64> {
    mesh.hypersurface(n)
        .iter()
        .zip(values)
        .map(|(&f, &u)| mesh.face(f).measure * ops.avg(f, u))
        .collect()
}

/// `u_K = ⨍_{e_K^-} u0`.
pub fn init<F: Fn(ChartPoint) -> f64>(mesh: &Mesh, ops: &FaceOps, u0: F) -> SliceState {
    let values: Vec<f64> = mesh.slices[0]
        .iter()
        .map(|&k| {
            let face = mesh.face(mesh.element(k).inflow);
            face.nodes
                .iter()
                .map(|nd| nd.weight * u0(mesh.metric.reduce(nd.point)))
                .sum::<f64>()
                / face.measure
        })
        .collect();
    SliceState {
        n: 0,
        t: mesh.times[0],
        masses: face_masses(mesh, ops, 0, &values),
        values,
    }
}

/// Chart time of the first vertex of `H_n`; constant along `H_n` for generated meshes.
pub fn chart_time(mesh: &Mesh, n: usize) -> f64 {
    mesh.face(mesh.hypersurface(n)[0]).a.t
}

/// Neighbor values of element `k` in lateral order.
pub fn neighbor_values(mesh: &Mesh, k: ElemId, state: &SliceState) -> Vec<f64> {
    mesh.element(k)
        .laterals
        .iter()
        .map(|l| state.values[mesh.element(l.neighbor).slot])
        .collect()
}

/// One step `H_n → H_{n+1}`; every element of slice `n` reads only `state`.
pub fn step(mesh: &Mesh, ops: &FaceOps, q: &dyn NumericalFlux, state: &SliceState) -> Result<SliceState> {
    let n = state.n;
    if n >= mesh.num_slices() {
        return Err(Error::InvalidMesh(format!("no slice above H_{n}")));
    }
    let values: Vec<f64> = mesh.slices[n]
        .par_iter()
        .map(|&k| {
            let e = mesh.element(k);
            let u = state.values[e.slot];
            let mut y = mesh.face(e.inflow).measure * ops.mu_minus(e, u);
            for (i, l) in e.laterals.iter().enumerate() {
                let nb = mesh.element(l.neighbor);
                if nb.slice != n {
                    return Err(Error::NeighborMissing { elem: k, face: l.face });
                }
                y -= mesh.face(l.face).measure * q.q(k, i, u, state.values[nb.slot]);
            }
            y /= mesh.face(e.outflow).measure;
            ops.invert(e.outflow, y, Some(u))
        })
        .collect::<Result<_>>()?;
    Ok(SliceState {
        n: n + 1,
        t: mesh.times[n + 1],
        masses: face_masses(mesh, ops, n + 1, &values),
        values,
    })
}

/// Intermediate values of the convex decomposition for one element and step.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    /// `μ_K^+(u_K)`
    pub mu_plus: f64,
    /// `μ̃_{K,e0}` per lateral face.
    pub tilde: Vec<f64>,
    /// `μ̄_{K,e0}` per lateral face.
    pub bar: Vec<f64>,
    /// `|e0| / |∂0K|` per lateral face.
    pub weights: Vec<f64>,
    /// `∫_K div_g f(u_K)` through the boundary identity.
    pub divergence: f64,
}

/// `μ̃ = μ^+(u) - (|∂0K|/|e+|)(q(u,v) - q(u,u))`, `μ̄ = μ̃ - div/|e+|`, with the divergence
/// from `|e+|μ^+(u) - |e-|μ^-(u) + Σ|e0| q(u,u)`, so that `Σ w μ̄ = μ^+(u_K^{n+1})`.
pub fn decompose(mesh: &Mesh, ops: &FaceOps, q: &dyn NumericalFlux, k: ElemId, u: f64, nbs: &[f64]) -> Decomposition {
    let e = mesh.element(k);
    let e_plus = mesh.face(e.outflow).measure;
    let ratio = e.lateral_measure / e_plus;
    let mu_plus = ops.mu_plus(e, u);
    let mut divergence = e_plus * mu_plus - mesh.face(e.inflow).measure * ops.mu_minus(e, u);
    let quu: Vec<f64> = (0..e.laterals.len()).map(|i| q.q(k, i, u, u)).collect();
    for (l, quu) in e.laterals.iter().zip(&quu) {
        divergence += mesh.face(l.face).measure * quu;
    }
    let tilde: Vec<f64> = nbs
        .iter()
        .enumerate()
        .map(|(i, &v)| mu_plus - ratio * (q.q(k, i, u, v) - quu[i]))
        .collect();
    let bar = tilde.iter().map(|t| t - divergence / e_plus).collect();
    let weights = e
        .laterals
        .iter()
        .map(|l| mesh.face(l.face).measure / e.lateral_measure)
        .collect();
    Decomposition {
        mu_plus,
        tilde,
        bar,
        weights,
        divergence,
    }
}

/// Relative size below which `μ^+(u) - μ^+(v)` is treated as zero.
pub const ALPHA_GUARD: f64 = 1e-14;

/// `α_{K,e0} = (|e0|/|e+|)(q(u,v) - q(u,u)) / (μ^+(u) - μ^+(v))`, zero when the
/// denominator vanishes.
pub fn convex_coefficients(
    mesh: &Mesh,
    ops: &FaceOps,
    q: &dyn NumericalFlux,
    k: ElemId,
    state: &SliceState,
) -> Vec<f64> {
    let e = mesh.element(k);
    let u = state.values[e.slot];
    let e_plus = mesh.face(e.outflow).measure;
    let mu_u = ops.mu_plus(e, u);
    neighbor_values(mesh, k, state)
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let den = mu_u - ops.mu_plus(e, v);
            let scale = 1.0 + mu_u.abs() + ops.mu_plus(e, v).abs();
            if den.abs() <= ALPHA_GUARD * scale {
                0.0
            } else {
                let e0 = mesh.face(e.laterals[i].face).measure;
                e0 / e_plus * (q.q(k, i, u, v) - q.q(k, i, u, u)) / den
            }
        })
        .collect()
}

/// Built-in initial data, functions of the reduced chart point.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    Constant(f64),
    /// `inner` on `[a, b)`, `outer` elsewhere.
    Step {
        inner: f64,
        outer: f64,
        a: f64,
        b: f64,
    },
    /// `offset + amplitude · sin(2πx/L)`
    Sine {
        amplitude: f64,
        offset: f64,
    },
    /// Piecewise linear interpolation of `(x, u)` knots, extended periodically.
    Knots(Vec<(f64, f64)>),
    /// `4ξ` on `[0, ¼)`, `1` on `[¼, ½)`, `0` on `[½, 1)` with `ξ = x/L`.
    ShockRamp,
    /// `0` on `[0, ¼)`, `1` on `[¼, ½)`, `2(1 - ξ)` on `[½, 1)` with `ξ = x/L`.
    RarefactionRamp,
}

impl InitialData {
    /// Registry lookup: `constant c`, `step inner outer a b`, `sine amplitude offset`,
    /// `knots x0 u0 x1 u1 ...`, `shock_ramp`, `rarefaction_ramp`.
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let p = |i: usize, d: f64| params.get(i).copied().unwrap_or(d);
        match name {
            "constant" => Ok(Self::Constant(p(0, 0.0))),
            "step" => Ok(Self::Step {
                inner: p(0, 1.0),
                outer: p(1, 0.0),
                a: p(2, 0.0),
                b: p(3, 0.5),
            }),
            "sine" => Ok(Self::Sine {
                amplitude: p(0, 0.5),
                offset: p(1, 0.0),
            }),
            "knots" => {
                if params.len() < 4 || !params.len().is_multiple_of(2) {
                    return Err(Error::Config("knots needs an even number (>= 4) of parameters".into()));
                }
                let k: Vec<(f64, f64)> = params.chunks(2).map(|c| (c[0], c[1])).collect();
                if k.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::Config("knot positions must increase".into()));
                }
                Ok(Self::Knots(k))
            }
            "shock_ramp" => Ok(Self::ShockRamp),
            "rarefaction_ramp" => Ok(Self::RarefactionRamp),
            other => Err(Error::Config(format!("unknown initial data '{other}'"))),
        }
    }

    pub fn eval(&self, p: ChartPoint, period: f64) -> f64 {
        let x = p.x.rem_euclid(period);
        match self {
            Self::Constant(c) => *c,
            Self::Step { inner, outer, a, b } => {
                if x >= *a && x < *b {
                    *inner
                } else {
                    *outer
                }
            }
            Self::Sine { amplitude, offset } => offset + amplitude * (2.0 * std::f64::consts::PI * x / period).sin(),
            Self::Knots(k) => {
                let first = k[0];
                let last = k[k.len() - 1];
                let x = if x < first.0 { x + period } else { x };
                if x >= last.0 {
                    // wrap segment from the last knot to the first one shifted by a period
                    let span = first.0 + period - last.0;
                    let s = if span > 0.0 { (x - last.0) / span } else { 0.0 };
                    return last.1 + s * (first.1 - last.1);
                }
                let i = k.windows(2).position(|w| x < w[1].0).unwrap_or(0);
                let (x0, u0) = k[i];
                let (x1, u1) = k[i + 1];
                u0 + (x - x0) / (x1 - x0) * (u1 - u0)
            }
            Self::ShockRamp => {
                let xi = x / period;
                if xi < 0.25 {
                    4.0 * xi
                } else if xi < 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::RarefactionRamp => {
                let xi = x / period;
                if xi < 0.25 {
                    0.0
                } else if xi < 0.5 {
                    1.0
                } else {
                    2.0 * (1.0 - xi)
                }
            }
        }
    }

    pub fn data_range(&self) -> (f64, f64) {
        match self {
            Self::Constant(c) => (*c, *c),
            Self::Step { inner, outer, .. } => (inner.min(*outer), inner.max(*outer)),
            Self::Sine { amplitude, offset } => (offset - amplitude.abs(), offset + amplitude.abs()),
            Self::Knots(k) => k.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, u)| {
                (lo.min(u), hi.max(u))
            }),
            Self::ShockRamp | Self::RarefactionRamp => (0.0, 1.0),
        }
    }
}

/// How the space-time mesh of a run is produced.
#[derive(Clone, Debug, PartialEq)]
pub enum MeshSource {
    Uniform {
        nx: usize,
        nt: usize,
        t_end: f64,
    },
    /// Uniform layers with the fewest steps whose CFL ratio is at most `cfl`.
    Cfl {
        nx: usize,
        t_end: f64,
        cfl: f64,
    },
    TimeGrid {
        nx: usize,
        times: Vec<f64>,
    },
    Sheared {
        nx: usize,
        nt: usize,
        t_end: f64,
        shear: f64,
        alternating: bool,
    },
    File(std::path::PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub metric: MetricChart,
    pub flux: FluxField,
    pub d_safety: f64,
    pub quad_order: usize,
    pub mesh: MeshSource,
    pub u0: InitialData,
    /// Compute per-step entropy, decomposition and dissipation diagnostics.
    pub diagnostics: bool,
    /// Number of Kruzkov constants in the per-step sweep.
    pub lambda_points: usize,
}

impl RunConfig {
    pub fn new(metric: MetricChart, flux: FluxField, mesh: MeshSource, u0: InitialData) -> Self {
        Self {
            metric,
            flux,
            d_safety: 1.0,
            quad_order: 5,
            mesh,
            u0,
            diagnostics: true,
            lambda_points: entropy::DEFAULT_LAMBDA_POINTS,
        }
    }
}

/// Uniform layers on `[0, t_end]` with the fewest steps meeting the CFL target.
pub fn uniform_for_cfl(
    g: &MetricChart,
    flux: &FluxField,
    nx: usize,
    t_end: f64,
    cfl: f64,
    quad: &QuadratureRule,
) -> Result<Mesh> {
    if !(cfl > 0.0) {
        return Err(Error::Config(format!("cfl target must be positive, got {cfl}")));
    }
    let build = |nt: usize| {
        let times: Vec<f64> = (0..=nt).map(|n| t_end * n as f64 / nt as f64).collect();
        mesh::build_foliated(g, nx, &times, &vec![0.0; times.len()], quad.clone())
    };
    let mut nt = ((t_end / (g.period / nx.max(1) as f64)).ceil() as usize).max(1);
    for _ in 0..8 {
        let m = build(nt)?;
        let r = cfl_report(&m, flux, flux.range)?.max_ratio;
        if r <= cfl {
            return Ok(m);
        }
        if !r.is_finite() {
            return Err(Error::CflViolated(r));
        }
        nt = ((nt as f64 * r / cfl - 1e-9).ceil() as usize).max(nt + 1);
    }
    Err(Error::CflViolated(f64::NAN))
}

pub fn build_mesh(cfg: &RunConfig) -> Result<Mesh> {
    let quad = QuadratureRule::gauss_legendre(cfg.quad_order.max(1));
    let g = &cfg.metric;
    let uniform_times = |nt: usize, t_end: f64| -> Result<Vec<f64>> {
        if nt < 1 || !(t_end > 0.0) {
            return Err(Error::BadDimensions(format!(
                "need Nt >= 1 and T > 0, got Nt={nt}, T={t_end}"
            )));
        }
        Ok((0..=nt).map(|n| t_end * n as f64 / nt as f64).collect())
    };
    match &cfg.mesh {
        MeshSource::Uniform { nx, nt, t_end } => {
            let times = uniform_times(*nt, *t_end)?;
            mesh::build_foliated(g, *nx, &times, &vec![0.0; times.len()], quad)
        }
        MeshSource::Cfl { nx, t_end, cfl } => uniform_for_cfl(g, &cfg.flux, *nx, *t_end, *cfl, &quad),
        MeshSource::TimeGrid { nx, times } => {
            if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
                return Err(Error::NonMonotoneGrid(i + 1));
            }
            mesh::build_foliated(g, *nx, times, &vec![0.0; times.len()], quad)
        }
        MeshSource::Sheared {
            nx,
            nt,
            t_end,
            shear,
            alternating,
        } => {
            let m = mesh::build_sheared(g, *nx, *nt, *t_end, *shear, *alternating)?;
            if cfg.quad_order == 5 {
                Ok(m)
            } else {
                mesh::io::read_mesh(&mesh::io::write_mesh(&m), g, quad)
            }
        }
        MeshSource::File(path) => mesh::io::load_mesh(path, g, quad),
    }
}

/// Per-step diagnostics, indexed by the step `n → n+1`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct StepDiagnostics {
    pub n: usize,
    pub t: f64,
    /// `|Σ m^{n+1} - Σ m^n| / max(1, Σ|m^n|)`
    pub conservation_drift: f64,
    pub max_abs: f64,
    /// Largest Kruzkov cell residual over the λ grid.
    pub entropy_residual: f64,
    pub min_alpha: f64,
    pub max_alpha_sum: f64,
    /// `max_K |Σ w μ̄ - μ^+(u^{n+1})|` and the α-form reconstruction error.
    pub reconstruction: f64,
    /// Contribution of this step to the dissipation total.
    pub dissipation: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct RunDiagnostics {
    pub steps: Vec<StepDiagnostics>,
    pub max_drift: f64,
    pub max_entropy_residual: f64,
    pub min_alpha: f64,
    pub max_alpha_sum: f64,
    pub max_reconstruction: f64,
    pub dissipation_total: f64,
    pub envelope: Option<entropy::EnvelopeReport>,
    pub cfl: f64,
    /// [`Solver::monotonicity_ratio`]; runs refuse when it exceeds 1.
    pub monotonicity: f64,
    pub lambda_grid: Vec<f64>,
    pub growth: (f64, f64),
}

/// Mesh, face averages and Lax–Friedrichs constants of one run.
#[derive(Clone, Debug)]
pub struct Solver {
    pub mesh: Mesh,
    pub ops: FaceOps,
    pub diffusion: Vec<f64>,
}

impl Solver {
    pub fn new(mesh: Mesh, flux: FluxField, d_safety: f64) -> Self {
        let ops = FaceOps::new(&mesh, flux);
        let diffusion = required_diffusion(&mesh, &ops)
            .into_iter()
            .map(|d| d_safety * d)
            .collect();
        Self { mesh, ops, diffusion }
    }

    pub fn lf(&self) -> LaxFriedrichs<'_> {
        LaxFriedrichs::with_diffusion(&self.mesh, &self.ops, &self.diffusion)
    }

    pub fn init(&self, u0: &InitialData) -> SliceState {
        let period = self.mesh.metric.period;
        init(&self.mesh, &self.ops, |p| u0.eval(p, period))
    }

    pub fn step(&self, state: &SliceState) -> Result<SliceState> {
        step(&self.mesh, &self.ops, &self.lf(), state)
    }

    /// `max_K Σ_{e0} (|e0|/|e+|) (sup|μ_{e0}'| / inf μ_K^+' + D_{e0}) / 2`.
    ///
    /// The update is monotone in every argument iff this is at most 1; with the minimal
    /// `D` it equals `(1 + r)/2` for the CFL ratio `r`.
    pub fn monotonicity_ratio(&self) -> f64 {
        let samples = self.ops.range_samples(RANGE_SAMPLES);
        self.mesh
            .elements
            .iter()
            .map(|e| {
                let e_plus = self.mesh.face(e.outflow).measure;
                let inf_plus = self.ops.inf_d(e.outflow, &samples);
                e.laterals
                    .iter()
                    .map(|l| {
                        let wave = self.ops.sup_abs_d(l.face, &samples) / inf_plus;
                        self.mesh.face(l.face).measure / e_plus * 0.5 * (wave + self.diffusion[l.face])
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct Run {
    pub solver: Solver,
    pub states: Vec<SliceState>,
    pub diagnostics: RunDiagnostics,
}

/// Diagnostics of the step `state → next`.
pub fn step_diagnostics(solver: &Solver, state: &SliceState, next: &SliceState, lambdas: &[f64]) -> StepDiagnostics {
    let mesh = &solver.mesh;
    let ops = &solver.ops;
    let lf = solver.lf();
    let n = state.n;
    let m0 = state.total_mass();
    let scale = state.masses.iter().map(|m| m.abs()).sum::<f64>().max(1.0);
    let per_elem: Vec<(f64, f64, f64, f64, f64)> = mesh.slices[n]
        .par_iter()
        .map(|&k| {
            let e = mesh.element(k);
            let u = state.values[e.slot];
            let nbs = neighbor_values(mesh, k, state);
            let dec = decompose(mesh, ops, &lf, k, u, &nbs);
            let target = ops.mu_plus(e, next.values[e.slot]);
            let recon_bar: f64 = dec.weights.iter().zip(&dec.bar).map(|(w, b)| w * b).sum();
            let alphas = convex_coefficients(mesh, ops, &lf, k, state);
            let asum: f64 = alphas.iter().sum();
            let e_plus = mesh.face(e.outflow).measure;
            let recon_alpha = (1.0 - asum) * dec.mu_plus
                + alphas
                    .iter()
                    .zip(&nbs)
                    .map(|(a, &v)| a * ops.mu_plus(e, v))
                    .sum::<f64>()
                - dec.divergence / e_plus;
            let recon = (recon_bar - target).abs().max((recon_alpha - target).abs());
            let amin = alphas.iter().copied().fold(f64::INFINITY, f64::min);
            let mut res = f64::NEG_INFINITY;
            for &lam in lambdas {
                let r = entropy::residual_from(mesh, ops, &lf, k, u, &nbs, &dec, &EntropyPair::Kruzkov(lam))
                    .unwrap_or(f64::INFINITY);
                res = res.max(r);
            }
            let diss: f64 = dec
                .weights
                .iter()
                .zip(&dec.bar)
                .map(|(w, b)| w * e_plus * (b - target).powi(2))
                .sum();
            (res, amin, asum, recon, diss)
        })
        .collect();
    let mut d = StepDiagnostics {
        n,
        t: state.t,
        conservation_drift: (next.total_mass() - m0).abs() / scale,
        max_abs: next.max_abs(),
        entropy_residual: f64::NEG_INFINITY,
        min_alpha: f64::INFINITY,
        max_alpha_sum: 0.0,
        reconstruction: 0.0,
        dissipation: 0.0,
    };
    for (res, amin, asum, recon, diss) in per_elem {
        d.entropy_residual = d.entropy_residual.max(res);
        d.min_alpha = d.min_alpha.min(amin);
        d.max_alpha_sum = d.max_alpha_sum.max(asum);
        d.reconstruction = d.reconstruction.max(recon);
        d.dissipation += diss;
    }
    d
}

/// Checks the CFL condition, marches every slice and accumulates diagnostics.
pub fn run(cfg: &RunConfig) -> Result<Run> {
    let mesh = build_mesh(cfg)?;
    run_on(mesh, cfg)
}

/// As [`run`] on a prebuilt mesh.
pub fn run_on(mesh: Mesh, cfg: &RunConfig) -> Result<Run> {
    let cfl = cfl_report(&mesh, &cfg.flux, cfg.flux.range)?;
    if !cfl.pass {
        return Err(Error::CflViolated(cfl.max_ratio));
    }
    let solver = Solver::new(mesh, cfg.flux, cfg.d_safety);
    let monotonicity = solver.monotonicity_ratio();
    if monotonicity > 1.0 + 1e-12 {
        return Err(Error::CflViolated(monotonicity));
    }
    let first = solver.init(&cfg.u0);
    let lambda_grid = if cfg.diagnostics {
        entropy::lambda_grid(&first.values, cfg.lambda_points)
    } else {
        Vec::new()
    };
    let mut states = Vec::with_capacity(solver.mesh.num_slices() + 1);
    states.push(first);
    let mut diag = RunDiagnostics {
        min_alpha: f64::INFINITY,
        max_entropy_residual: f64::NEG_INFINITY,
        cfl: cfl.max_ratio,
        monotonicity,
        lambda_grid: lambda_grid.clone(),
        ..Default::default()
    };
    for _ in 0..solver.mesh.num_slices() {
        let cur = states.last().unwrap();
        let next = solver.step(cur)?;
        let sd = if cfg.diagnostics {
            step_diagnostics(&solver, cur, &next, &lambda_grid)
        } else {
            let scale = cur.masses.iter().map(|m| m.abs()).sum::<f64>().max(1.0);
            StepDiagnostics {
                n: cur.n,
                t: cur.t,
                conservation_drift: (next.total_mass() - cur.total_mass()).abs() / scale,
                max_abs: next.max_abs(),
                ..Default::default()
            }
        };
        diag.max_drift = diag.max_drift.max(sd.conservation_drift);
        if cfg.diagnostics {
            diag.max_entropy_residual = diag.max_entropy_residual.max(sd.entropy_residual);
            diag.min_alpha = diag.min_alpha.min(sd.min_alpha);
            diag.max_alpha_sum = diag.max_alpha_sum.max(sd.max_alpha_sum);
            diag.max_reconstruction = diag.max_reconstruction.max(sd.reconstruction);
            diag.dissipation_total += sd.dissipation;
        }
        diag.steps.push(sd);
        states.push(next);
    }
    let m = &solver.mesh;
    let window = (chart_time(m, 0), chart_time(m, m.num_slices()));
    let grid = sample_grid(cfg.flux.range, 33, window, 17, cfg.metric.period, 4);
    diag.growth = growth_constants(&cfg.flux, &cfg.metric, &grid)?;
    diag.envelope = Some(entropy::linfty_envelope(&states, diag.growth.0, diag.growth.1));
    Ok(Run {
        solver,
        states,
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::compatibility_defect;
    use crate::mesh::build_uniform;

    fn four_cell_solver() -> Solver {
        let mesh = build_uniform(&MetricChart::minkowski(1.0), 4, 1, 0.1).unwrap();
        Solver::new(mesh, FluxField::burgers((-1.0, 1.0)), 1.0)
    }

    #[test]
    fn init_examples() {
        let s = four_cell_solver();
        let st = s.init(&InitialData::Constant(0.3));
        assert!(st.values.iter().all(|&v| v == 0.3));
        let st = s.init(&InitialData::from_name("step", &[1.0, 0.0, 0.0, 0.5]).unwrap());
        assert_eq!(st.values, vec![1.0, 1.0, 0.0, 0.0]);
        // cell averages of sin(2πx) over quarters: ±2/π
        let st = s.init(&InitialData::Sine {
            amplitude: 1.0,
            offset: 0.0,
        });
        let oracle = |a: f64, b: f64| {
            // composite Simpson with many panels
            let n = 2000;
            let h = (b - a) / n as f64;
            let f = |x: f64| (2.0 * std::f64::consts::PI * x).sin();
            let mut s = f(a) + f(b);
            for i in 1..n {
                s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0 / (b - a)
        };
        for (j, v) in st.values.iter().enumerate() {
            let want = oracle(0.25 * j as f64, 0.25 * (j + 1) as f64);
            assert!((v - want).abs() < 1e-9, "{v} vs {want}");
        }
        assert!((st.values[0] - 2.0 / std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn four_cell_step_by_hand() {
        let s = four_cell_solver();
        let st = s.init(&InitialData::from_name("step", &[1.0, 0.0, 0.0, 0.5]).unwrap());
        let next = s.step(&st).unwrap();
        let want = [0.65, 0.85, 0.35, 0.15];
        for (a, b) in next.values.iter().zip(want) {
            assert!((a - b).abs() < 1e-14, "{:?}", next.values);
        }
        assert!((next.total_mass() - 0.5).abs() < 1e-15);
        assert!((st.total_mass() - 0.5).abs() < 1e-15);
        // α on the right face of cell 1 (value 1, right neighbor 0)
        let alphas = convex_coefficients(&s.mesh, &s.ops, &s.lf(), s.mesh.slices[0][1], &st);
        let e = s.mesh.element(s.mesh.slices[0][1]);
        let r = e.laterals.iter().position(|l| l.sign > 0.0).unwrap();
        assert!((alphas[r] - 0.15).abs() < 1e-14);
        assert_eq!(alphas[1 - r], 0.0);
    }

    #[test]
    fn constant_state_is_fixed() {
        let s = four_cell_solver();
        let st = s.init(&InitialData::Constant(0.4));
        let next = s.step(&st).unwrap();
        assert!(next.values.iter().all(|&v| (v - 0.4).abs() <= 1e-15));
        let k = s.mesh.slices[0][2];
        assert_eq!(convex_coefficients(&s.mesh, &s.ops, &s.lf(), k, &st), vec![0.0, 0.0]);
    }

    #[test]
    fn flrw_constant_preserved() {
        let g = MetricChart::flrw_linear(1.0);
        let mesh = build_uniform(&g, 16, 10, 0.5).unwrap();
        let f = FluxField::flrw_compatible((-0.5, 0.5));
        for k in 0..mesh.elements.len() {
            assert!(compatibility_defect(&f, &g, &mesh, k, 0.3, &mesh.quad).unwrap().abs() < 1e-10);
        }
        let s = Solver::new(mesh, f, 1.0);
        let mut st = s.init(&InitialData::Constant(0.3));
        for _ in 0..10 {
            st = s.step(&st).unwrap();
            assert!(st.values.iter().all(|v| (v - 0.3).abs() < 1e-10));
        }
    }

    #[test]
    fn cfl_mesh_for_shock_tube() {
        let g = MetricChart::minkowski(1.0);
        let f = FluxField::burgers((-1.0, 1.0));
        let m = uniform_for_cfl(&g, &f, 64, 0.5, 0.5, &QuadratureRule::default()).unwrap();
        assert_eq!(m.num_slices(), 128);
        let s = Solver::new(m, f, 1.0);
        let lat = s.mesh.element(0).laterals[0].face;
        assert!((s.diffusion[lat] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_steps_is_init_only() {
        let cfg = RunConfig::new(
            MetricChart::minkowski(1.0),
            FluxField::burgers((-1.0, 1.0)),
            MeshSource::Uniform {
                nx: 4,
                nt: 1,
                t_end: 0.1,
            },
            InitialData::Constant(0.2),
        );
        let r = run(&cfg).unwrap();
        assert_eq!(r.states.len(), 2);
        let s = r.solver.init(&cfg.u0);
        assert_eq!(r.states[0], s);
    }

    #[test]
    fn cfl_violation_refuses_to_run() {
        let cfg = RunConfig::new(
            MetricChart::minkowski(1.0),
            FluxField::burgers((-1.0, 1.0)),
            MeshSource::Uniform {
                nx: 8,
                nt: 1,
                t_end: 0.5,
            },
            InitialData::Constant(0.2),
        );
        assert!(matches!(run(&cfg), Err(Error::CflViolated(_))));
    }

    #[test]
    fn extra_diffusion_tightens_the_step() {
        // r = 2τ/h; the ratio is (r + safety)/2 on a uniform Minkowski mesh
        let mut cfg = RunConfig::new(
            MetricChart::minkowski(1.0),
            FluxField::burgers((-1.0, 1.0)),
            MeshSource::Uniform {
                nx: 8,
                nt: 8,
                t_end: 0.5,
            },
            InitialData::Constant(0.2),
        );
        let r = run(&cfg).unwrap();
        assert!((r.diagnostics.cfl - 1.0).abs() < 1e-12);
        assert!((r.diagnostics.monotonicity - 1.0).abs() < 1e-12);
        cfg.d_safety = 1.5;
        assert!(matches!(run(&cfg), Err(Error::CflViolated(x)) if (x - 1.25).abs() < 1e-12));
        cfg.mesh = MeshSource::Uniform {
            nx: 8,
            nt: 16,
            t_end: 0.5,
        };
        assert!((run(&cfg).unwrap().diagnostics.monotonicity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn knots_interpolate_periodically() {
        let d = InitialData::from_name("knots", &[0.0, 0.0, 0.25, 1.0, 0.5, 1.0, 0.5001, 0.0]).unwrap();
        assert!((d.eval(ChartPoint::new(0.0, 0.125), 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(d.eval(ChartPoint::new(0.0, 0.75), 1.0), 0.0);
        assert_eq!(d.eval(ChartPoint::new(0.0, 0.3), 1.0), 1.0);
    }
}
