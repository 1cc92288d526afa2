//! Command-line driver, reference solutions, convergence studies and CSV output.
//!
//! Exit codes: `0` clean, `1` a checked invariant failed, `2` usage, configuration or
//! input error.

pub mod config;
pub mod convergence;
pub mod exact;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::entropy::{self, EntropyPair};
use crate::error::{Error, Result};
use crate::geometry::{FluxField, MetricChart, QuadratureRule};
use crate::mesh::{self, cartesian_deviation, cfl_report, ProbeField, DEFAULT_ETA_MAX};
use crate::scheme::{self, chart_time, InitialData, Run, RunConfig, SliceState, Solver};
use config::ConfigFile;
use convergence::{cfl_family, convergence_study};
use exact::ExactSolution;

pub use exact::l1_error;

/// Relative per-slice bound on conservation drift.
pub const TOL_CONSERVATION: f64 = 1e-12;
/// Bound on the convex-combination reconstruction error.
pub const TOL_RECONSTRUCTION: f64 = 1e-11;

#[derive(Parser, Debug)]
#[command(name = "lorfv", about = "Finite volume schemes on 1+1 Lorentzian cylinders")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the scheme described by a config file and write CSV output.
    Run {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Report admissibility and CFL diagnostics of a mesh file.
    CheckMesh {
        mesh: PathBuf,
        #[arg(long, default_value = "minkowski")]
        metric: String,
        #[arg(long)]
        metric_k: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        period: f64,
        /// Also require the CFL condition for this flux.
        #[arg(long)]
        flux: Option<String>,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        u_min: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        u_max: f64,
        #[arg(long, default_value_t = DEFAULT_ETA_MAX)]
        eta_max: f64,
    },
    /// Run a refinement family and tabulate L1 errors against an exact solution.
    Convergence {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Recompute entropy residuals, dissipation and the L∞ envelope for a run directory.
    EntropyReport {
        run_output: PathBuf,
        /// Comma-separated Kruzkov constants; defaults to an even grid over the data.
        #[arg(long, allow_hyphen_values = true)]
        lambda_grid: Option<String>,
        #[arg(long, default_value_t = entropy::DEFAULT_LAMBDA_POINTS)]
        lambda_points: usize,
        #[arg(long, default_value = "quadratic")]
        entropy: String,
    },
    /// Write a generated mesh file.
    GenMesh {
        /// `uniform`, `sheared` or `alternating`
        kind: String,
        #[arg(long)]
        nx: usize,
        #[arg(long)]
        nt: usize,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        shear: f64,
        #[arg(long, default_value = "minkowski")]
        metric: String,
        #[arg(long)]
        metric_k: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        period: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// Exit code for an error: `2` for bad input, `1` for a failed check during a run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Io(_)
        | Error::MeshParse { .. }
        | Error::InvalidMesh(_)
        | Error::BadDimensions(_)
        | Error::NonMonotoneGrid(_)
        | Error::ShearTooLarge { .. }
        | Error::EmptyRange(..)
        | Error::EmptyGrid
        | Error::DegenerateFace(_)
        | Error::InconsistentFamily(_) => 2,
        _ => 1,
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("LORFV_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        if n > 0 {
            // a second initialization in the same process is harmless
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parses `args` (without the program name), dispatches, and returns the exit code.
pub fn cli_main(args: &[String]) -> i32 {
    init_threads();
    let cli = match Cli::try_parse_from(std::iter::once("lorfv".to_string()).chain(args.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let res = match cli.cmd {
        Command::Run { config, out_dir } => cmd_run(&config, out_dir.as_deref()),
        Command::CheckMesh {
            mesh,
            metric,
            metric_k,
            period,
            flux,
            u_min,
            u_max,
            eta_max,
        } => cmd_check_mesh(
            &mesh,
            &metric,
            metric_k,
            period,
            flux.as_deref(),
            (u_min, u_max),
            eta_max,
        ),
        Command::Convergence { config, out_dir } => cmd_convergence(&config, out_dir.as_deref()),
        Command::EntropyReport {
            run_output,
            lambda_grid,
            lambda_points,
            entropy,
        } => cmd_entropy_report(&run_output, lambda_grid.as_deref(), lambda_points, &entropy),
        Command::GenMesh {
            kind,
            nx,
            nt,
            t_end,
            shear,
            metric,
            metric_k,
            period,
            output,
        } => cmd_gen_mesh(&kind, nx, nt, t_end, shear, &metric, metric_k, period, &output),
    };
    match res {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// One row per `(n, slot)`: the value on the `slot`-th face of `H_n`.
pub fn solution_csv(run: &Run) -> String {
    let m = &run.solver.mesh;
    let mut s = String::from("n,element,face,t_n,x,u\n");
    for st in &run.states {
        let n = st.n;
        let elems = if n < m.num_slices() {
            &m.slices[n]
        } else {
            &m.slices[n - 1]
        };
        for ((&k, &f), &u) in elems.iter().zip(&m.hypersurface(n)).zip(&st.values) {
            let x = m.metric.reduce(m.face(f).centroid).x;
            writeln!(s, "{n},{k},{f},{},{x},{u}", st.t).unwrap();
        }
    }
    s
}

/// One row per hypersurface; step columns describe the step leaving `H_n` and are blank
/// on the last row.
pub fn summary_csv(run: &Run) -> String {
    let m = &run.solver.mesh;
    let d = &run.diagnostics;
    let env = d.envelope.as_ref();
    let mut s = String::from(
        "n,t_n,chart_t,mass,max_abs,envelope_bound,drift,entropy_residual,min_alpha,max_alpha_sum,reconstruction,dissipation\n",
    );
    for st in &run.states {
        let n = st.n;
        let bound = env.map(|e| e.bounds[n].to_string()).unwrap_or_default();
        write!(
            s,
            "{n},{},{},{},{},{bound}",
            st.t,
            chart_time(m, n),
            st.total_mass(),
            st.max_abs()
        )
        .unwrap();
        match d.steps.get(n) {
            Some(sd) => writeln!(
                s,
                ",{},{},{},{},{},{}",
                sd.conservation_drift,
                sd.entropy_residual,
                sd.min_alpha,
                sd.max_alpha_sum,
                sd.reconstruction,
                sd.dissipation
            )
            .unwrap(),
            None => s.push_str(",,,,,,\n"),
        }
    }
    s
}

/// Names of the checks a run failed.
pub fn run_violations(run: &Run, diagnostics: bool) -> Vec<String> {
    let d = &run.diagnostics;
    let mut v = Vec::new();
    if !(d.max_drift <= TOL_CONSERVATION) {
        v.push(format!("conservation drift {:e}", d.max_drift));
    }
    if let Some(e) = &d.envelope {
        if !e.pass {
            v.push(format!("L∞ envelope margin {:e}", e.margin));
        }
    }
    if diagnostics && !d.steps.is_empty() {
        if d.max_entropy_residual > entropy::TOL_ENTROPY {
            v.push(format!("entropy residual {:e}", d.max_entropy_residual));
        }
        if d.min_alpha < 0.0 {
            v.push(format!("negative α {:e}", d.min_alpha));
        }
        if !(d.max_alpha_sum < 1.0) {
            v.push(format!("Σα = {}", d.max_alpha_sum));
        }
        if d.max_reconstruction > TOL_RECONSTRUCTION {
            v.push(format!("reconstruction error {:e}", d.max_reconstruction));
        }
    }
    v
}

/// Copy of the config with `mesh` made absolute, so the run directory is self-contained.
fn portable_config(cfg: &ConfigFile) -> String {
    let mut out = String::new();
    for line in cfg.text.lines() {
        let key = line
            .split('#')
            .next()
            .unwrap_or_default()
            .split_once('=')
            .map(|(k, _)| k.trim());
        if key == Some("mesh") {
            if let Some(m) = cfg.get("mesh") {
                let p = cfg.base.join(m);
                let p = std::fs::canonicalize(&p).unwrap_or(p);
                writeln!(out, "mesh = {}", p.display()).unwrap();
                continue;
            }
        }
        writeln!(out, "{line}").unwrap();
    }
    out
}

/// `(max|u^0| + C1 t)·exp(C2 t)` at the last hypersurface of the configured mesh.
fn final_envelope(cfg: &RunConfig) -> Result<(f64, f64)> {
    let m = scheme::build_mesh(cfg)?;
    let solver = Solver::new(m, cfg.flux, cfg.d_safety);
    let u0 = solver.init(&cfg.u0).max_abs();
    let m = &solver.mesh;
    let window = (chart_time(m, 0), chart_time(m, m.num_slices()));
    let grid = crate::geometry::sample_grid(cfg.flux.range, 33, window, 17, cfg.metric.period, 4);
    let (c1, c2) = crate::geometry::growth_constants(&cfg.flux, &cfg.metric, &grid)?;
    let t = m.times[m.num_slices()];
    Ok(((u0 + c1 * t) * (c2 * t).exp(), window.1))
}

fn cmd_run(path: &Path, out_dir: Option<&Path>) -> Result<bool> {
    let file = ConfigFile::load(path)?;
    let cfg = file.run_config()?;
    let out = out_dir.map(Path::to_path_buf).unwrap_or_else(|| file.out_dir());
    let run = match scheme::run(&cfg) {
        Ok(r) => r,
        Err(e @ Error::InversionOutOfRange { .. }) => {
            if let Ok((bound, t)) = final_envelope(&cfg) {
                println!("L∞ envelope for comparison: {bound:.6e} at chart time {t}");
            }
            return Err(e);
        }
        Err(e) => return Err(e),
    };
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("solution.csv"), solution_csv(&run))?;
    std::fs::write(out.join("summary.csv"), summary_csv(&run))?;
    std::fs::write(out.join("run.cfg"), portable_config(&file))?;
    let m = &run.solver.mesh;
    let d = &run.diagnostics;
    println!(
        "{} on {} with {}: Nx={} Nt={} h={:.4e} tau={:.4e} cfl={:.4}",
        cfg.u0_name(),
        cfg.metric.name(),
        cfg.flux.name(),
        m.slice_len(),
        m.num_slices(),
        m.h,
        m.tau,
        d.cfl
    );
    println!("  max drift          {:.3e}", d.max_drift);
    if let Some(e) = &d.envelope {
        println!(
            "  L∞ envelope margin {:.3e} (C1={:.3e}, C2={:.3e})",
            e.margin, e.c1, e.c2
        );
    }
    if cfg.diagnostics {
        println!("  entropy residual   {:.3e}", d.max_entropy_residual);
        println!("  α range            [{:.3e}, Σ ≤ {:.6}]", d.min_alpha, d.max_alpha_sum);
        println!("  reconstruction     {:.3e}", d.max_reconstruction);
        println!("  dissipation total  {:.6e}", d.dissipation_total);
    }
    println!("  output             {}", out.display());
    let v = run_violations(&run, cfg.diagnostics);
    for x in &v {
        println!("VIOLATION: {x}");
    }
    Ok(v.is_empty())
}

#[allow(clippy::too_many_arguments)]
fn cmd_check_mesh(
    path: &Path,
    metric: &str,
    metric_k: Option<f64>,
    period: f64,
    flux: Option<&str>,
    range: (f64, f64),
    eta_max: f64,
) -> Result<bool> {
    let g = MetricChart::from_name(metric, &metric_k.into_iter().collect::<Vec<_>>(), period)?;
    let m = mesh::io::load_mesh(path, &g, QuadratureRule::default())?;
    let r = cartesian_deviation(&m, &g, &ProbeField::BASIS, eta_max);
    println!(
        "mesh {}: {} elements, {} slices, h={:.4e}, tau={:.4e}, h²/tau={:.4e}",
        path.display(),
        m.elements.len(),
        m.num_slices(),
        m.h,
        m.tau,
        m.h2_over_tau()
    );
    println!(
        "  deviation sum {:.3e}  bound {:.3e}  eta_sum {:.3e}  eta_ex3 {:.3e}  eta_ex4 {:.3e}  (threshold {})",
        r.magnitude, r.aggregate, r.eta_sum, r.eta_ex3, r.eta_ex4, r.threshold
    );
    println!(
        "  flatness {:.3e}  normal variation {:.3e}",
        r.flatness, r.normal_variation
    );
    println!("  admissible: {}", if r.pass { "yes" } else { "no" });
    let mut ok = r.pass;
    let name = flux.unwrap_or("burgers");
    let f = FluxField::from_name(name, &[], range)?;
    let c = cfl_report(&m, &f, range)?;
    println!(
        "  cfl ({name} on [{}, {}]): max ratio {:.4} at element {}{}",
        range.0,
        range.1,
        c.max_ratio,
        c.worst_element,
        if flux.is_some() { "" } else { " (informational)" }
    );
    if flux.is_some() {
        ok &= c.pass;
    }
    Ok(ok)
}

fn cmd_convergence(path: &Path, out_dir: Option<&Path>) -> Result<bool> {
    let file = ConfigFile::load(path)?;
    let family = file.get("family").unwrap_or("shock");
    let sol = match family {
        "shock" => ExactSolution::shock_family(),
        "rarefaction" => ExactSolution::rarefaction_family(),
        "constant" => ExactSolution::Constant(file.list("u0.params")?.and_then(|p| p.first().copied()).unwrap_or(0.0)),
        other => return Err(Error::Config(format!("unknown family '{other}'"))),
    };
    let mut base = file.run_config()?;
    base.u0 = sol.initial_data().expect("families carry their data");
    let nxs: Vec<usize> = match file.list("nx_list")? {
        Some(l) => l.into_iter().map(|x| x as usize).collect(),
        None => vec![32, 64, 128, 256],
    };
    let t_end = file.real("t_end")?.unwrap_or(0.25);
    let cfl = file.real("cfl")?.unwrap_or(0.5);
    let table = convergence_study(&cfl_family(&base, &nxs, t_end, cfl), &sol)?;
    let out = out_dir.map(Path::to_path_buf).unwrap_or_else(|| file.out_dir());
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("convergence.csv"), table.to_csv())?;
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>14} {:>8}",
        "Nx", "h", "tau", "h²/tau", "L1 error", "order"
    );
    for r in &table.rows {
        let o = r.order.map(|o| format!("{o:.3}")).unwrap_or_else(|| "-".into());
        println!(
            "{:>6} {:>12.4e} {:>12.4e} {:>12.4e} {:>14.6e} {:>8}",
            r.nx, r.h, r.tau, r.h2_over_tau, r.error, o
        );
    }
    println!("errors strictly decreasing: {}", table.decreasing);
    Ok(table.decreasing)
}

/// Reads `solution.csv` back into states on `mesh`.
pub fn read_solution(text: &str, mesh: &crate::mesh::Mesh) -> Result<Vec<SliceState>> {
    let nx = mesh.slice_len();
    let mut rows: Vec<(usize, f64, f64)> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || Error::Config(format!("solution.csv line {}: malformed row", i + 1));
        if cols.len() != 6 {
            return Err(bad());
        }
        let n = cols[0].parse::<usize>().map_err(|_| bad())?;
        let t = cols[3].parse::<f64>().map_err(|_| bad())?;
        let u = cols[5].parse::<f64>().map_err(|_| bad())?;
        rows.push((n, t, u));
    }
    if rows.len() != (mesh.num_slices() + 1) * nx {
        return Err(Error::Config(format!(
            "solution.csv has {} rows, mesh needs {}",
            rows.len(),
            (mesh.num_slices() + 1) * nx
        )));
    }
    let mut states = Vec::with_capacity(mesh.num_slices() + 1);
    for (n, chunk) in rows.chunks(nx).enumerate() {
        if chunk.iter().any(|r| r.0 != n) {
            return Err(Error::Config(format!("solution.csv rows for H_{n} are out of order")));
        }
        states.push(SliceState {
            n,
            t: chunk[0].1,
            values: chunk.iter().map(|r| r.2).collect(),
            masses: Vec::new(),
        });
    }
    Ok(states)
}

fn cmd_entropy_report(dir: &Path, lambda_grid: Option<&str>, lambda_points: usize, kind: &str) -> Result<bool> {
    let file = ConfigFile::load(&dir.join("run.cfg"))?;
    let cfg = file.run_config()?;
    let m = scheme::build_mesh(&cfg)?;
    let solver = Solver::new(m, cfg.flux, cfg.d_safety);
    let text = std::fs::read_to_string(dir.join("solution.csv"))
        .map_err(|e| Error::Config(format!("cannot read solution.csv: {e}")))?;
    let mut states = read_solution(&text, &solver.mesh)?;
    for s in &mut states {
        s.masses = solver
            .mesh
            .hypersurface(s.n)
            .iter()
            .zip(&s.values)
            .map(|(&f, &u)| solver.mesh.face(f).measure * solver.ops.avg(f, u))
            .collect();
    }
    let lambdas = match lambda_grid {
        Some(g) => g
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad λ '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?,
        None => entropy::lambda_grid(&states[0].values, lambda_points),
    };
    let quadratic = match kind {
        "quadratic" => true,
        "kruzkov" => false,
        other => return Err(Error::Config(format!("unknown entropy '{other}'"))),
    };
    let rep = entropy::entropy_report(&solver, &states, quadratic, &lambdas)?;
    let m = &solver.mesh;
    let window = (chart_time(m, 0), chart_time(m, m.num_slices()));
    let grid = crate::geometry::sample_grid(cfg.flux.range, 33, window, 17, cfg.metric.period, 4);
    let (c1, c2) = crate::geometry::growth_constants(&cfg.flux, &cfg.metric, &grid)?;
    let env = entropy::linfty_envelope(&states, c1, c2);
    let mut csv = String::from("n,t_n,max_residual,dissipation,envelope_bound,max_abs,envelope_margin\n");
    for s in &states {
        let n = s.n;
        let (r, d) = match (rep.slice_residuals.get(n), rep.slice_dissipation.get(n)) {
            (Some(r), Some(d)) => (r.to_string(), d.to_string()),
            _ => (String::new(), String::new()),
        };
        let margin = env.bounds[n] + entropy::ENVELOPE_TOL - env.values[n];
        writeln!(csv, "{n},{},{r},{d},{},{},{margin}", s.t, env.bounds[n], env.values[n]).unwrap();
    }
    std::fs::write(dir.join("entropy_report.csv"), csv)?;
    let pair = if quadratic {
        EntropyPair::Quadratic.name()
    } else {
        format!("kruzkov over {} λ values", lambdas.len())
    };
    println!("entropy report for {} ({pair})", dir.display());
    println!(
        "  max cell residual  {:.3e} (tolerance {:e})",
        rep.max_residual, rep.tol
    );
    println!("  dissipation total  {:.6e}", rep.dissipation_total);
    match rep.beta {
        Some(b) => {
            let bound = entropy::dissipation_bound(&solver, &states, &EntropyPair::Quadratic)?;
            println!("  beta               {b:.6}");
            println!(
                "  β/2 · dissipation  {:.6e} ≤ entropy balance {:.6e}: {}",
                0.5 * b * bound.dissipation,
                bound.bound,
                bound.pass
            );
        }
        None => println!("  beta               0 (Kruzkov pairs give no dissipation bound)"),
    }
    println!("  L∞ envelope margin {:.3e}", env.margin);
    Ok(rep.pass && env.pass)
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen_mesh(
    kind: &str,
    nx: usize,
    nt: usize,
    t_end: f64,
    shear: f64,
    metric: &str,
    metric_k: Option<f64>,
    period: f64,
    output: &Path,
) -> Result<bool> {
    let g = MetricChart::from_name(metric, &metric_k.into_iter().collect::<Vec<_>>(), period)?;
    let m = match kind {
        "uniform" => mesh::build_uniform(&g, nx, nt, t_end)?,
        "sheared" => mesh::build_sheared(&g, nx, nt, t_end, shear, false)?,
        "alternating" => mesh::build_sheared(&g, nx, nt, t_end, shear, true)?,
        other => return Err(Error::Config(format!("unknown mesh kind '{other}'"))),
    };
    mesh::io::save_mesh(&m, output)?;
    println!("wrote {} ({} elements)", output.display(), m.elements.len());
    Ok(true)
}

impl RunConfig {
    fn u0_name(&self) -> &'static str {
        match self.u0 {
            InitialData::Constant(_) => "constant",
            InitialData::Step { .. } => "step",
            InitialData::Sine { .. } => "sine",
            InitialData::Knots(_) => "knots",
            InitialData::ShockRamp => "shock_ramp",
            InitialData::RarefactionRamp => "rarefaction_ramp",
        }
    }
}
