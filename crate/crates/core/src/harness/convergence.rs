use rayon::prelude::*;

use super::exact::{l1_error, ExactSolution};
use crate::error::{Error, Result};
use crate::scheme::{run, MeshSource, RunConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub nx: usize,
    pub h: f64,
    pub tau: f64,
    pub h2_over_tau: f64,
    pub error: f64,
    /// `log2(e_{i-1}/e_i) / log2(h_{i-1}/h_i)`, absent on the first row.
    pub order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Errors strictly decrease along the family.
    pub decreasing: bool,
    /// Order between the two finest resolutions.
    pub finest_order: Option<f64>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("nx,h,tau,h2_over_tau,l1_error,order\n");
        for r in &self.rows {
            let order = r.order.map(|o| o.to_string()).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.nx, r.h, r.tau, r.h2_over_tau, r.error, order
            ));
        }
        s
    }
}

fn nx_of(m: &MeshSource) -> Option<usize> {
    match m {
        MeshSource::Uniform { nx, .. }
        | MeshSource::Cfl { nx, .. }
        | MeshSource::TimeGrid { nx, .. }
        | MeshSource::Sheared { nx, .. } => Some(*nx),
        MeshSource::File(_) => None,
    }
}

/// Runs every configuration and measures the L1 error on the final hypersurface.
///
/// The family must share metric, flux and data, double `Nx` from row to row, and have
/// `h²/τ` strictly decreasing.
pub fn convergence_study(family: &[RunConfig], sol: &ExactSolution) -> Result<ConvergenceTable> {
    let first = family
        .first()
        .ok_or_else(|| Error::InconsistentFamily("empty family".into()))?;
    let mut nxs = Vec::with_capacity(family.len());
    for c in family {
        if c.metric != first.metric || c.flux != first.flux || c.u0 != first.u0 {
            return Err(Error::InconsistentFamily(
                "metric, flux and initial data must agree".into(),
            ));
        }
        nxs.push(nx_of(&c.mesh).ok_or_else(|| Error::InconsistentFamily("file meshes have no Nx".into()))?);
    }
    if let Some(w) = nxs.windows(2).find(|w| w[1] != 2 * w[0]) {
        return Err(Error::InconsistentFamily(format!(
            "Nx must double, got {} then {}",
            w[0], w[1]
        )));
    }
    let runs: Vec<Result<(f64, f64, f64)>> = family
        .par_iter()
        .map(|c| {
            let mut c = c.clone();
            c.diagnostics = false;
            let r = run(&c)?;
            let m = &r.solver.mesh;
            let last = r.states.last().expect("at least the initial state");
            Ok((m.h, m.tau, l1_error(m, last, sol)))
        })
        .collect();
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(family.len());
    for (nx, res) in nxs.into_iter().zip(runs) {
        let (h, tau, error) = res?;
        let order = rows.last().map(|p| {
            if p.error > 0.0 && error > 0.0 {
                (p.error / error).log2() / (p.h / h).log2()
            } else {
                f64::NAN
            }
        });
        rows.push(ConvergenceRow {
            nx,
            h,
            tau,
            h2_over_tau: h * h / tau,
            error,
            order,
        });
    }
    if let Some(w) = rows.windows(2).find(|w| !(w[1].h2_over_tau < w[0].h2_over_tau)) {
        return Err(Error::InconsistentFamily(format!(
            "h²/τ does not decrease: {} at Nx={} then {} at Nx={}",
            w[0].h2_over_tau, w[0].nx, w[1].h2_over_tau, w[1].nx
        )));
    }
    Ok(ConvergenceTable {
        decreasing: rows.windows(2).all(|w| w[1].error < w[0].error),
        finest_order: rows.last().and_then(|r| r.order),
        rows,
    })
}

/// Uniform-CFL family over `nxs` built from `base`.
pub fn cfl_family(base: &RunConfig, nxs: &[usize], t_end: f64, cfl: f64) -> Vec<RunConfig> {
    nxs.iter()
        .map(|&nx| {
            let mut c = base.clone();
            c.mesh = MeshSource::Cfl { nx, t_end, cfl };
            c
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FluxField, MetricChart};
    use crate::scheme::InitialData;

    fn base(u0: InitialData) -> RunConfig {
        RunConfig::new(
            MetricChart::minkowski(1.0),
            FluxField::burgers((-1.0, 1.0)),
            MeshSource::Cfl {
                nx: 8,
                t_end: 0.25,
                cfl: 0.5,
            },
            u0,
        )
    }

    #[test]
    fn constant_data_is_exact() {
        let fam = cfl_family(&base(InitialData::Constant(0.4)), &[16, 32, 64], 0.25, 0.5);
        let t = convergence_study(&fam, &ExactSolution::Constant(0.4)).unwrap();
        assert!(t.rows.iter().all(|r| r.error <= 1e-12));
        assert_eq!(t.rows.len(), 3);
    }

    #[test]
    fn inconsistent_families_rejected() {
        let mut fam = cfl_family(&base(InitialData::Constant(0.4)), &[16, 32], 0.25, 0.5);
        fam[1].u0 = InitialData::Constant(0.5);
        assert!(matches!(
            convergence_study(&fam, &ExactSolution::Constant(0.4)),
            Err(Error::InconsistentFamily(_))
        ));
        let fam = cfl_family(&base(InitialData::Constant(0.4)), &[16, 48], 0.25, 0.5);
        assert!(matches!(
            convergence_study(&fam, &ExactSolution::Constant(0.4)),
            Err(Error::InconsistentFamily(_))
        ));
        // Nt growing like Nx² keeps h²/τ constant
        let mut fam = Vec::new();
        for (nx, nt) in [(8, 4), (16, 16)] {
            let mut c = base(InitialData::Constant(0.4));
            c.mesh = MeshSource::Uniform { nx, nt, t_end: 0.25 };
            fam.push(c);
        }
        assert!(matches!(
            convergence_study(&fam, &ExactSolution::Constant(0.4)),
            Err(Error::InconsistentFamily(_))
        ));
        assert!(matches!(
            convergence_study(&[], &ExactSolution::Constant(0.4)),
            Err(Error::InconsistentFamily(_))
        ));
    }
}
