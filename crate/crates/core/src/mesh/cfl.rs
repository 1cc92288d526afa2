use super::Mesh;
use crate::error::{Error, Result};
use crate::flux::FaceOps;
use crate::geometry::FluxField;

/// Minimum number of `u` samples for the suprema in the ratio.
pub const CFL_SAMPLES: usize = 129;

#[derive(Clone, Debug, PartialEq)]
pub struct CflReport {
    /// `r_K` per element id.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub worst_element: usize,
    pub pass: bool,
}

/// `r_K = (|∂0K|/|e+|) · max_{e0} sup_u |μ_{K,e0}'(u)| · sup_u 1/μ_K^+'(u)` over `u_range`.
pub fn cfl_report(mesh: &Mesh, f: &FluxField, u_range: (f64, f64)) -> Result<CflReport> {
    if !(u_range.0 < u_range.1) {
        return Err(Error::EmptyRange(u_range.0, u_range.1));
    }
    let ops = FaceOps::new(mesh, FluxField { range: u_range, ..*f });
    let samples = ops.range_samples(CFL_SAMPLES);
    let ratios: Vec<f64> = mesh
        .elements
        .iter()
        .map(|e| {
            let geo = e.lateral_measure / mesh.face(e.outflow).measure;
            let wave = e
                .laterals
                .iter()
                .map(|l| ops.sup_abs_d(l.face, &samples))
                .fold(0.0, f64::max);
            let inf_plus = ops.inf_d(e.outflow, &samples);
            if wave == 0.0 {
                0.0
            } else if inf_plus > 0.0 {
                geo * wave / inf_plus
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let (worst_element, max_ratio) =
        ratios
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0), |acc, (i, r)| if r > acc.1 { (i, r) } else { acc });
    Ok(CflReport {
        pass: max_ratio <= 1.0,
        ratios,
        max_ratio,
        worst_element,
    })
}
