use super::{FaceKind, Mesh, MeshSpec};
use crate::error::{Error, Result};
use crate::geometry::{CausalClass, ChartPoint, MetricChart, QuadratureRule};

/// `Nt·Nx` product cells on `[0, T] × [0, L)`.
pub fn build_uniform(g: &MetricChart, nx: usize, nt: usize, t_end: f64) -> Result<Mesh> {
    if nt < 1 || !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::BadDimensions(format!(
            "need Nt >= 1 and T > 0, got Nt={nt}, T={t_end}"
        )));
    }
    let times: Vec<f64> = (0..=nt).map(|n| t_end * n as f64 / nt as f64).collect();
    build_foliated(g, nx, &times, &vec![0.0; nt + 1], QuadratureRule::default())
}

/// Product cells with layer boundaries at `time_grid`.
pub fn build_nonuniform_time(g: &MetricChart, nx: usize, time_grid: &[f64]) -> Result<Mesh> {
    if time_grid.len() < 2 {
        return Err(Error::BadDimensions("time grid needs at least two points".into()));
    }
    if let Some(i) = time_grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotoneGrid(i + 1));
    }
    build_foliated(g, nx, time_grid, &vec![0.0; time_grid.len()], QuadratureRule::default())
}

/// Uniform layers whose lateral faces have chart slope `dx/dt = s`, or `±s` alternating
/// between layers.
pub fn build_sheared(g: &MetricChart, nx: usize, nt: usize, t_end: f64, shear: f64, alternating: bool) -> Result<Mesh> {
    if nt < 1 || !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::BadDimensions(format!(
            "need Nt >= 1 and T > 0, got Nt={nt}, T={t_end}"
        )));
    }
    let times: Vec<f64> = (0..=nt).map(|n| t_end * n as f64 / nt as f64).collect();
    let offsets: Vec<f64> = if alternating {
        let dt = t_end / nt as f64;
        (0..=nt).map(|n| if n % 2 == 1 { shear * dt } else { 0.0 }).collect()
    } else {
        times.iter().map(|t| shear * t).collect()
    };
    if nx >= 2 {
        let dx = g.period / nx as f64;
        for n in 0..nt {
            let drift = offsets[n + 1] - offsets[n];
            if drift.abs() >= dx {
                return Err(Error::ShearTooLarge {
                    shear,
                    reason: format!("layer {n} moves vertices by {drift:.3e}, at least one cell width"),
                });
            }
            let slope = [times[n + 1] - times[n], drift];
            for s in [0.0, 0.5, 1.0] {
                let p = ChartPoint::new(times[n] + s * slope[0], 0.0);
                if g.classify_components(p, slope) != CausalClass::Timelike {
                    return Err(Error::ShearTooLarge {
                        shear,
                        reason: format!("lateral faces of layer {n} are not time-like"),
                    });
                }
            }
        }
    }
    build_foliated(g, nx, &times, &offsets, QuadratureRule::default())
}

/// Shared generator: hypersurface `H_n` is `t = times[n]` with vertices at
/// `j·L/Nx + offsets[n]`.
///
/// Ids: space-like face of `H_n` at slot `j` is `n·Nx + j`; the lateral face on the left of
/// cell `(n, j)` is `(N+1)·Nx + n·Nx + j`; element `(n, j)` is `n·Nx + j`.
pub fn build_foliated(
    g: &MetricChart,
    nx: usize,
    times: &[f64],
    offsets: &[f64],
    quad: QuadratureRule,
) -> Result<Mesh> {
    if nx < 2 {
        return Err(Error::BadDimensions(format!("need Nx >= 2, got {nx}")));
    }
    let nt = times.len().saturating_sub(1);
    if nt < 1 || offsets.len() != times.len() {
        return Err(Error::BadDimensions(
            "need at least one layer and one offset per hypersurface".into(),
        ));
    }
    let dx = g.period / nx as f64;
    let mut spec = MeshSpec::default();
    for n in 0..=nt {
        for j in 0..nx {
            spec.vertices
                .push(ChartPoint::wrapped(times[n], j as f64 * dx + offsets[n], g.period));
        }
    }
    let vid = |n: usize, j: usize| n * nx + (j % nx);
    for n in 0..=nt {
        let kind = if n == nt { FaceKind::Outflow } else { FaceKind::Inflow };
        for j in 0..nx {
            spec.faces.push((kind, vid(n, j), vid(n, j + 1)));
        }
    }
    let lat0 = (nt + 1) * nx;
    for n in 0..nt {
        for j in 0..nx {
            spec.faces.push((FaceKind::Lateral, vid(n, j), vid(n + 1, j)));
        }
    }
    for n in 0..nt {
        let mut slice = Vec::with_capacity(nx);
        for j in 0..nx {
            let left = lat0 + n * nx + j;
            let right = lat0 + n * nx + (j + 1) % nx;
            spec.elements.push((n * nx + j, (n + 1) * nx + j, vec![left, right]));
            slice.push(n * nx + j);
        }
        spec.slices.push(slice);
    }
    Mesh::assemble(*g, quad, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_minkowski_measures() {
        let g = MetricChart::minkowski(1.0);
        let m = build_uniform(&g, 4, 2, 0.2).unwrap();
        assert_eq!(m.elements.len(), 8);
        for e in &m.elements {
            assert!((e.volume - 0.025).abs() < 1e-15);
            assert!((m.face(e.outflow).measure - 0.25).abs() < 1e-15);
            assert!((m.face(e.inflow).measure - 0.25).abs() < 1e-15);
            assert!((e.tau - 0.1).abs() < 1e-15);
            for l in &e.laterals {
                assert!((m.face(l.face).measure - 0.1).abs() < 1e-15);
            }
            assert_eq!(e.laterals.iter().filter(|l| l.sign > 0.0).count(), 1);
        }
        assert!((m.h - 0.25).abs() < 1e-15);
        assert!((m.times[2] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn flrw_face_length() {
        let g = MetricChart::flrw_linear(1.0);
        let m = build_uniform(&g, 2, 1, 1.0).unwrap();
        let top = m.element(0).outflow;
        assert!((m.face(top).measure - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nonuniform_time_layers() {
        let g = MetricChart::minkowski(1.0);
        let m = build_nonuniform_time(&g, 4, &[0.0, 0.1, 0.25]).unwrap();
        assert!((m.slice_tau[0] - 0.1).abs() < 1e-15);
        assert!((m.slice_tau[1] - 0.15).abs() < 1e-15);
        assert!((m.times[2] - 0.25).abs() < 1e-15);
        let m = build_nonuniform_time(&g, 8, &[0.0, 0.05, 0.1, 0.2]).unwrap();
        assert_eq!(m.elements.len(), 24);
        assert!(m.slices.iter().all(|s| s.len() == 8));
        assert!(matches!(
            build_nonuniform_time(&g, 4, &[0.0, 0.2, 0.1]),
            Err(Error::NonMonotoneGrid(2))
        ));
    }

    #[test]
    fn degenerate_cases_agree() {
        let g = MetricChart::flrw_exp(0.5, 1.0);
        let a = build_uniform(&g, 6, 1, 0.1).unwrap();
        let b = build_nonuniform_time(&g, 6, &[0.0, 0.1]).unwrap();
        let c = build_sheared(&g, 6, 1, 0.1, 0.0, false).unwrap();
        for other in [&b, &c] {
            assert_eq!(a.elements.len(), other.elements.len());
            for (x, y) in a.elements.iter().zip(&other.elements) {
                assert_eq!((x.inflow, x.outflow), (y.inflow, y.outflow));
                assert!((x.volume - y.volume).abs() <= 1e-14);
            }
            for (x, y) in a.faces.iter().zip(&other.faces) {
                assert!((x.measure - y.measure).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn shear_limits() {
        let g = MetricChart::minkowski(1.0);
        let m = build_sheared(&g, 8, 4, 0.2, 0.3, false).unwrap();
        for f in m.faces.iter().filter(|f| f.kind == FaceKind::Lateral) {
            let d = f.tangent();
            assert!((d[1] / d[0] - 0.3).abs() < 1e-12);
            assert!(g.inner_components(f.a, d, d) < 0.0);
        }
        assert!(matches!(
            build_sheared(&g, 8, 4, 0.2, 1.5, false),
            Err(Error::ShearTooLarge { .. })
        ));
        assert!(build_sheared(&g, 8, 4, 0.2, 0.3, true).is_ok());
    }

    #[test]
    fn bad_dimensions() {
        let g = MetricChart::minkowski(1.0);
        assert!(matches!(build_uniform(&g, 1, 2, 0.1), Err(Error::BadDimensions(_))));
        assert!(matches!(build_uniform(&g, 4, 0, 0.1), Err(Error::BadDimensions(_))));
        assert!(matches!(build_uniform(&g, 4, 2, 0.0), Err(Error::BadDimensions(_))));
    }

    #[test]
    fn slices_match_and_measures_sum() {
        let g = MetricChart::flrw_linear(1.0);
        let m = build_sheared(&g, 16, 5, 0.5, 0.2, false).unwrap();
        for n in 0..m.num_slices() - 1 {
            for (j, &k) in m.slices[n].iter().enumerate() {
                let up = m.slices[n + 1][j];
                assert_eq!(m.element(k).outflow, m.element(up).inflow);
            }
        }
        for n in 0..=m.num_slices() {
            let len: f64 = m.hypersurface(n).iter().map(|&f| m.face(f).measure).sum();
            let a = 1.0 + m.face(m.hypersurface(n)[0]).a.t;
            assert!((len - a).abs() <= 1e-10 * a);
        }
        for f in &m.faces {
            for nd in &f.nodes {
                let n = nd.normal;
                let q = g.reduce(nd.point);
                assert!((g.inner_components(q, n, n).abs() - 1.0).abs() <= 1e-10);
                match f.kind {
                    FaceKind::Lateral => assert_eq!(g.classify_components(q, n), CausalClass::Spacelike),
                    _ => {
                        assert_eq!(g.classify_components(q, n), CausalClass::Timelike);
                        assert!(n[0] < 0.0);
                    }
                }
            }
        }
    }
}
