//! Lorentzian charts, quadrature and flux fields.

pub mod flux_field;
pub mod metric;
pub mod quadrature;

pub use flux_field::{
    growth_constants, sample_grid, timelike_flux_report, FluxField, FluxProfile, FluxWeight, TimelikeReport,
};
pub use metric::{classify, inner, CausalClass, ChartPoint, MetricChart, MetricKind, SpacetimeVector};
pub use quadrature::QuadratureRule;

use crate::error::{Error, Result};
use crate::mesh::{ElemId, Mesh};

/// Unit conormal `g(n, ·)` of the chart segment with tangent `d` at `p`, in reference
/// orientation: past-directed if `spacelike`, otherwise pointing towards increasing `x`.
pub fn reference_conormal(g: &MetricChart, p: ChartPoint, d: [f64; 2], spacelike: bool) -> [f64; 2] {
    let q = g.reduce(p);
    let omega = [-d[1], d[0]];
    let raised = g.raise(q, omega);
    let s = 1.0 / (omega[0] * raised[0] + omega[1] * raised[1]).abs().sqrt();
    let flip = if spacelike { raised[0] > 0.0 } else { raised[1] < 0.0 };
    let s = if flip { -s } else { s };
    [omega[0] * s, omega[1] * s]
}

/// `(∫_e g(f(u), n_ref), |e|)` along the segment `a → b`.
pub fn segment_flux(
    g: &MetricChart,
    f: &FluxField,
    a: ChartPoint,
    b: ChartPoint,
    spacelike: bool,
    u: f64,
    quad: &QuadratureRule,
) -> (f64, f64) {
    let d = [b.t - a.t, b.x - a.x];
    let mut flux = 0.0;
    let mut len = 0.0;
    for (s, w) in quad.iter() {
        let p = a.lerp(b, s);
        let dl = w * g.inner_components(g.reduce(p), d, d).abs().sqrt();
        let nb = reference_conormal(g, p, d, spacelike);
        let fv = f.eval(g, u, p);
        flux += dl * (fv.t * nb[0] + fv.x * nb[1]);
        len += dl;
    }
    (flux, len)
}

/// `∮_{∂K} g(f(u), ñ)`, which approximates `∫_K div_g f(u, ·)`.
///
/// Space-like faces enter through their past-directed normals, with the inflow face
/// counted negatively; lateral faces through their outward normals.
pub fn compatibility_defect(
    f: &FluxField,
    g: &MetricChart,
    mesh: &Mesh,
    k: ElemId,
    u: f64,
    quad: &QuadratureRule,
) -> Result<f64> {
    let e = mesh.element(k);
    let check = |id: usize, shift: f64, spacelike: bool| -> Result<f64> {
        let face = mesh.face(id);
        let a = Mesh::shifted(face.a, shift);
        let b = Mesh::shifted(face.b, shift);
        let (flux, len) = segment_flux(g, f, a, b, spacelike, u, quad);
        if !(len > 0.0) {
            return Err(Error::DegenerateFace(id));
        }
        Ok(flux)
    };
    let mut total = check(e.outflow, e.outflow_shift, true)? - check(e.inflow, 0.0, true)?;
    for l in &e.laterals {
        total += l.sign * check(l.face, l.shift, false)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_uniform;

    #[test]
    fn burgers_minkowski_defect_vanishes() {
        let g = MetricChart::minkowski(1.0);
        let mesh = build_uniform(&g, 4, 2, 0.2).unwrap();
        let f = FluxField::burgers((-1.0, 1.0));
        let q = QuadratureRule::default();
        for k in 0..mesh.elements.len() {
            assert!(compatibility_defect(&f, &g, &mesh, k, 0.7, &q).unwrap().abs() <= 1e-14);
        }
    }

    #[test]
    fn compatible_flrw_defect_vanishes() {
        let g = MetricChart::flrw_linear(1.0);
        let mesh = build_uniform(&g, 8, 5, 1.0).unwrap();
        let f = FluxField::flrw_compatible((-0.4, 0.4));
        let q = QuadratureRule::default();
        for k in 0..mesh.elements.len() {
            assert!(compatibility_defect(&f, &g, &mesh, k, 0.3, &q).unwrap().abs() <= 1e-10);
        }
    }

    #[test]
    fn incompatible_defect_matches_volume_integral() {
        // K = [0, 0.1] × [0, 0.25] on a(t) = 1 + t, u = 1.
        let g = MetricChart::flrw_linear(1.0);
        let mesh = build_uniform(&g, 4, 1, 0.1).unwrap();
        let f = FluxField::burgers((-1.0, 1.0));
        let got = compatibility_defect(&f, &g, &mesh, 0, 1.0, &QuadratureRule::default()).unwrap();
        // oracle: ∫∫ div_g f · ρ dt dx by a tensor midpoint rule, refined
        let n = 400;
        let mut vol = 0.0;
        for i in 0..n {
            for j in 0..n {
                let t = 0.1 * (i as f64 + 0.5) / n as f64;
                let x = 0.25 * (j as f64 + 0.5) / n as f64;
                let p = ChartPoint::new(t, x);
                vol += f.divergence(&g, 1.0, p) * g.volume_density(p) * (0.1 / n as f64) * (0.25 / n as f64);
            }
        }
        assert!((vol - 0.025).abs() < 1e-8);
        assert!((got - 0.025).abs() < 1e-14);
    }

    #[test]
    fn past_normal_is_timelike_unit() {
        let g = MetricChart::flrw_exp(0.5, 1.0);
        let p = ChartPoint::new(0.7, 0.2);
        let nb = reference_conormal(&g, p, [0.01, 0.3], true);
        let n = g.raise(p, nb);
        assert!(n[0] < 0.0);
        assert!((g.inner_components(p, n, n) + 1.0).abs() < 1e-13);
        assert_eq!(g.classify_components(p, n), CausalClass::Timelike);
    }
}
