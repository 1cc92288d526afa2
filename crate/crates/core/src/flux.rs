//! Face-averaged fluxes, their monotone inversion, and two-point numerical fluxes.
//!
//! Every built-in flux is separable, `f(u, p) = w(p)·(φ(u), ψ(u))`, so the average of
//! `g(f(u), n)` over a face collapses to `A·φ(u) + B·ψ(u)` with per-face constants
//! computed once from the face quadrature.

use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::geometry::FluxField;
use crate::mesh::{ElemId, Element, FaceId, FaceKind, Mesh};

/// Number of `u` samples used for suprema and infima over the declared range.
pub const RANGE_SAMPLES: usize = 257;

/// Face averages of one flux field on one mesh, in each face's reference orientation
/// (past-directed on space-like faces, towards increasing `x` on lateral faces).
#[derive(Clone, Debug)]
pub struct FaceOps {
    pub flux: FluxField,
    coef: Vec<[f64; 2]>,
}

impl FaceOps {
    pub fn new(mesh: &Mesh, flux: FluxField) -> Self {
        let coef = mesh
            .faces
            .iter()
            .map(|face| {
                let (mut a, mut b) = (0.0, 0.0);
                for nd in &face.nodes {
                    let w = nd.weight * flux.weight_at(&mesh.metric, nd.point);
                    a += w * nd.conormal[0];
                    b += w * nd.conormal[1];
                }
                [a / face.measure, b / face.measure]
            })
            .collect();
        Self { flux, coef }
    }

    pub fn coefficients(&self, face: FaceId) -> [f64; 2] {
        self.coef[face]
    }

    /// Average of `g(w·(a, b), n_ref)` for given profile values `(a, b)`.
    #[inline]
    pub fn contract(&self, face: FaceId, ab: [f64; 2]) -> f64 {
        let [ca, cb] = self.coef[face];
        ca * ab[0] + cb * ab[1]
    }

    #[inline]
    pub fn avg(&self, face: FaceId, u: f64) -> f64 {
        self.contract(face, self.flux.profile.components(u))
    }

    #[inline]
    pub fn d_avg(&self, face: FaceId, u: f64) -> f64 {
        self.contract(face, self.flux.profile.d_components(u))
    }

    /// `μ_K^-`, increasing.
    #[inline]
    pub fn mu_minus(&self, e: &Element, u: f64) -> f64 {
        self.avg(e.inflow, u)
    }

    /// `μ_K^+ = -μ^f_{K,e_K^+}`, increasing.
    #[inline]
    pub fn mu_plus(&self, e: &Element, u: f64) -> f64 {
        self.avg(e.outflow, u)
    }

    #[inline]
    pub fn d_mu_plus(&self, e: &Element, u: f64) -> f64 {
        self.d_avg(e.outflow, u)
    }

    /// `μ_{K,e0}` with the outward normal of `K`.
    #[inline]
    pub fn mu_lateral(&self, e: &Element, i: usize, u: f64) -> f64 {
        let l = &e.laterals[i];
        l.sign * self.avg(l.face, u)
    }

    #[inline]
    pub fn d_mu_lateral(&self, e: &Element, i: usize, u: f64) -> f64 {
        let l = &e.laterals[i];
        l.sign * self.d_avg(l.face, u)
    }

    /// Evenly spaced samples of the declared range, endpoints included.
    pub fn range_samples(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.flux.range;
        let n = n.max(2);
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    pub fn sup_abs_d(&self, face: FaceId, samples: &[f64]) -> f64 {
        samples.iter().map(|&u| self.d_avg(face, u).abs()).fold(0.0, f64::max)
    }

    pub fn inf_d(&self, face: FaceId, samples: &[f64]) -> f64 {
        samples
            .iter()
            .map(|&u| self.d_avg(face, u))
            .fold(f64::INFINITY, f64::min)
    }

    /// Solves `avg(face, u) = y` on a space-like face.
    pub fn invert(&self, face: FaceId, y: f64, hint: Option<f64>) -> Result<f64> {
        invert_monotone(|u| (self.avg(face, u), self.d_avg(face, u)), y, self.flux.range, hint)
    }
}

/// Relative residual accepted by [`invert_monotone`].
pub const INVERSION_TOL: f64 = 1e-12;

/// Fraction of the range width by which the bracket may be widened on either side.
pub const BRACKET_MARGIN: f64 = 0.25;

/// Safeguarded Newton–bisection for an increasing `F`, given as `u ↦ (F(u), F'(u))`.
pub fn invert_monotone<F>(fun: F, y: f64, range: (f64, f64), hint: Option<f64>) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (lo, hi) = range;
    let width = hi - lo;
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (fun(a).0, fun(b).0);
    if y < fa || y > fb {
        let (ea, eb) = (lo - BRACKET_MARGIN * width, hi + BRACKET_MARGIN * width);
        let (fea, feb) = (fun(ea).0, fun(eb).0);
        if y < fea || y > feb {
            return Err(Error::InversionOutOfRange {
                target: y,
                lo: ea,
                hi: eb,
            });
        }
        if y < fa {
            b = a;
            fb = fa;
            a = ea;
            fa = fea;
        } else {
            a = b;
            fa = fb;
            b = eb;
            fb = feb;
        }
    }
    if fa == y {
        return Ok(a);
    }
    if fb == y {
        return Ok(b);
    }
    let mut x = match hint {
        Some(h) if h > a && h < b => h,
        _ => a + (y - fa) / (fb - fa) * (b - a),
    };
    if !(x > a && x < b) {
        x = 0.5 * (a + b);
    }
    let tol = INVERSION_TOL * (1.0 + y.abs());
    let mut best = (f64::INFINITY, x);
    for _ in 0..100 {
        let (fx, dx) = fun(x);
        let r = fx - y;
        if r.abs() < best.0 {
            best = (r.abs(), x);
        }
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let newton = x - r / dx;
        let next = if dx > 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        // keep polishing below `tol` until the iterate stalls
        if (next - x).abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs()) && r.abs() <= tol {
            return Ok(next);
        }
        if b - a <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            break;
        }
        x = next;
    }
    if best.0 <= tol {
        Ok(best.1)
    } else {
        Err(Error::InversionOutOfRange {
            target: y,
            lo: a,
            hi: b,
        })
    }
}

/// Average over `face` of `g(f(u), n)` with the outward normal of `owner`, by direct
/// quadrature of the field (independent of [`FaceOps`]).
pub fn mu(mesh: &Mesh, face: FaceId, owner: ElemId, f: &FluxField, u: f64) -> f64 {
    let fc = mesh.face(face);
    let e = mesh.element(owner);
    let orient = if face == e.inflow {
        1.0
    } else if face == e.outflow {
        -1.0
    } else {
        e.laterals
            .iter()
            .find(|l| l.face == face)
            .map(|l| l.sign)
            .expect("face does not bound the owner")
    };
    let mut s = 0.0;
    for nd in &fc.nodes {
        let v = f.eval(&mesh.metric, u, nd.point);
        s += nd.weight * (v.t * nd.conormal[0] + v.x * nd.conormal[1]);
    }
    orient * s / fc.measure
}

/// Inverse of the increasing face average of a space-like face.
pub fn mu_inverse(mesh: &Mesh, face: FaceId, f: &FluxField, y: f64) -> Result<f64> {
    if !mesh.face(face).kind.is_spacelike() {
        return Err(Error::InvalidMesh(format!("face {face} is not space-like")));
    }
    FaceOps::new(mesh, *f).invert(face, y, None)
}

/// A two-point flux `q_{K,e0}(u, v)` for every element and lateral face.
pub trait NumericalFlux: Sync {
    /// Flux through lateral face `i` of element `k`, own value `u`, neighbor value `v`.
    fn q(&self, k: ElemId, i: usize, u: f64, v: f64) -> f64;

    /// Value of `q(u, u)` under the four-argument reading of consistency.
    fn consistency_target(&self, k: ElemId, i: usize, u: f64) -> f64;

    fn name(&self) -> &'static str;
}

/// `q = ½(μ_{K,e0}(u) + μ_{K,e0}(v)) + (D/2)(μ_K^+(u) - μ_{K_{e0}}^+(v))`, with `D` shared
/// by both sides of each face.
#[derive(Clone, Debug)]
pub struct LaxFriedrichs<'a> {
    pub mesh: &'a Mesh,
    pub ops: &'a FaceOps,
    d: Cow<'a, [f64]>,
}

impl<'a> LaxFriedrichs<'a> {
    /// `D_e0 = safety · max over both sides of max(|e+|/|∂0K|, sup|μ_{e0}'| / inf μ_K^+')`.
    pub fn with_policy(mesh: &'a Mesh, ops: &'a FaceOps, safety: f64) -> Self {
        let d: Vec<f64> = required_diffusion(mesh, ops).into_iter().map(|r| safety * r).collect();
        Self {
            mesh,
            ops,
            d: Cow::Owned(d),
        }
    }

    /// Uses precomputed per-face constants, indexed by face id.
    pub fn with_diffusion(mesh: &'a Mesh, ops: &'a FaceOps, d: &'a [f64]) -> Self {
        assert_eq!(d.len(), mesh.faces.len());
        Self {
            mesh,
            ops,
            d: Cow::Borrowed(d),
        }
    }

    /// Same `D` on every face, unchecked.
    pub fn with_constant(mesh: &'a Mesh, ops: &'a FaceOps, d: f64) -> Self {
        let d: Vec<f64> = mesh
            .faces
            .iter()
            .map(|f| if f.kind == FaceKind::Lateral { d } else { 0.0 })
            .collect();
        Self {
            mesh,
            ops,
            d: Cow::Owned(d),
        }
    }

    pub fn diffusion(&self, face: FaceId) -> f64 {
        self.d[face]
    }
}

impl NumericalFlux for LaxFriedrichs<'_> {
    #[inline]
    fn q(&self, k: ElemId, i: usize, u: f64, v: f64) -> f64 {
        let e = &self.mesh.elements[k];
        let l = &e.laterals[i];
        let nb = &self.mesh.elements[l.neighbor];
        let central = 0.5 * l.sign * (self.ops.avg(l.face, u) + self.ops.avg(l.face, v));
        central + 0.5 * self.d[l.face] * (self.ops.mu_plus(e, u) - self.ops.mu_plus(nb, v))
    }

    fn consistency_target(&self, k: ElemId, i: usize, u: f64) -> f64 {
        self.q(k, i, u, u)
    }

    fn name(&self) -> &'static str {
        "lax_friedrichs"
    }
}

/// Smallest admissible `D` per face id (zero on space-like faces).
pub fn required_diffusion(mesh: &Mesh, ops: &FaceOps) -> Vec<f64> {
    let samples = ops.range_samples(RANGE_SAMPLES);
    let mut req = vec![0.0; mesh.faces.len()];
    for e in &mesh.elements {
        let geo = mesh.face(e.outflow).measure / e.lateral_measure;
        let inf_plus = ops.inf_d(e.outflow, &samples);
        for l in &e.laterals {
            let wave = ops.sup_abs_d(l.face, &samples) / inf_plus;
            let r = geo.max(wave);
            if r > req[l.face] {
                req[l.face] = r;
            }
        }
    }
    req
}

/// Checked single evaluation of the Lax–Friedrichs flux with an explicit `D`.
pub fn lax_friedrichs(mesh: &Mesh, ops: &FaceOps, k: ElemId, i: usize, u: f64, v: f64, d: f64) -> Result<f64> {
    let e = mesh.element(k);
    let face = e.laterals[i].face;
    let required = required_diffusion(mesh, ops)[face];
    if d < required * (1.0 - 1e-12) {
        return Err(Error::DTooSmall { face, d, required });
    }
    let nb = mesh.element(e.laterals[i].neighbor);
    Ok(0.5 * (ops.mu_lateral(e, i, u) + ops.mu_lateral(e, i, v)) + 0.5 * d * (ops.mu_plus(e, u) - ops.mu_plus(nb, v)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FluxAxiomReport {
    /// `max |q(u,u) - μ_{K,e0}(u)|`
    pub consistency: f64,
    /// `max |q(u,u) - target(u)|` for the four-argument reading.
    pub generalized_consistency: f64,
    /// `max |q_{K,e0}(u,v) + q_{K',e0}(v,u)|`
    pub conservation: f64,
    /// `min ∂_u q`
    pub min_du: f64,
    /// `max ∂_v q`
    pub max_dv: f64,
}

impl FluxAxiomReport {
    pub fn monotone(&self, tol: f64) -> bool {
        self.min_du >= -tol && self.max_dv <= tol
    }
}

/// Finite-difference step used for the monotonicity sweep.
pub const FD_STEP: f64 = 1e-6;

pub fn verify_flux_axioms(q: &dyn NumericalFlux, mesh: &Mesh, ops: &FaceOps, u_grid: &[f64]) -> FluxAxiomReport {
    let mut rep = FluxAxiomReport {
        consistency: 0.0,
        generalized_consistency: 0.0,
        conservation: 0.0,
        min_du: f64::INFINITY,
        max_dv: f64::NEG_INFINITY,
    };
    let h = FD_STEP;
    for e in &mesh.elements {
        for (i, l) in e.laterals.iter().enumerate() {
            let nb = mesh.element(l.neighbor);
            let j = nb
                .laterals
                .iter()
                .position(|m| m.face == l.face && m.neighbor == e.id)
                .expect("lateral face not shared");
            for &u in u_grid {
                let quu = q.q(e.id, i, u, u);
                rep.consistency = rep.consistency.max((quu - ops.mu_lateral(e, i, u)).abs());
                rep.generalized_consistency = rep
                    .generalized_consistency
                    .max((quu - q.consistency_target(e.id, i, u)).abs());
                for &v in u_grid {
                    rep.conservation = rep.conservation.max((q.q(e.id, i, u, v) + q.q(nb.id, j, v, u)).abs());
                    let du = (q.q(e.id, i, u + h, v) - q.q(e.id, i, u - h, v)) / (2.0 * h);
                    let dv = (q.q(e.id, i, u, v + h) - q.q(e.id, i, u, v - h)) / (2.0 * h);
                    rep.min_du = rep.min_du.min(du);
                    rep.max_dv = rep.max_dv.max(dv);
                }
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricChart;
    use crate::mesh::build_uniform;
    use proptest::prelude::*;

    fn four_cells() -> Mesh {
        build_uniform(&MetricChart::minkowski(1.0), 4, 1, 0.1).unwrap()
    }

    fn right_face(mesh: &Mesh, k: usize) -> usize {
        let e = mesh.element(k);
        e.laterals.iter().position(|l| l.sign > 0.0).unwrap()
    }

    #[test]
    fn minkowski_burgers_averages() {
        let mesh = four_cells();
        let f = FluxField::burgers((-1.0, 1.0));
        let ops = FaceOps::new(&mesh, f);
        let e = mesh.element(0);
        let r = right_face(&mesh, 0);
        for u in [-0.7, 0.0, 0.3, 1.0] {
            assert!((mu(&mesh, e.inflow, 0, &f, u) - u).abs() < 1e-15);
            assert!((ops.mu_minus(e, u) - u).abs() < 1e-15);
            assert!((mu(&mesh, e.laterals[r].face, 0, &f, u) - 0.5 * u * u).abs() < 1e-15);
            assert!((ops.mu_lateral(e, r, u) - 0.5 * u * u).abs() < 1e-15);
            assert!((mu(&mesh, e.outflow, 0, &f, u) + ops.mu_plus(e, u)).abs() < 1e-15);
        }
    }

    #[test]
    fn flrw_inflow_average_and_inverse() {
        let g = MetricChart::flrw_linear(1.0);
        let mesh = build_uniform(&g, 4, 2, 2.0).unwrap();
        let f = FluxField::flrw_compatible((-0.5, 0.5));
        // second slice starts at t = 1
        let k = mesh.slices[1][0];
        let e = mesh.element(k);
        assert!((mu(&mesh, e.inflow, k, &f, 0.4) - 0.2).abs() < 1e-14);
        // the face at t = 1 is the outflow of slice 0
        let below = mesh.slices[0][0];
        let face = mesh.element(below).outflow;
        assert!((mu_inverse(&mesh, face, &f, 0.3).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn lf_hand_value() {
        let mesh = four_cells();
        let ops = FaceOps::new(&mesh, FluxField::burgers((-1.0, 1.0)));
        let lf = LaxFriedrichs::with_policy(&mesh, &ops, 1.0);
        let r = right_face(&mesh, 0);
        let face = mesh.element(0).laterals[r].face;
        assert!((lf.diffusion(face) - 1.25).abs() < 1e-14);
        assert!((lf.q(0, r, 1.0, 0.0) - 0.875).abs() < 1e-14);
        assert!((lax_friedrichs(&mesh, &ops, 0, r, 1.0, 0.0, 1.25).unwrap() - 0.875).abs() < 1e-14);
        assert!(matches!(
            lax_friedrichs(&mesh, &ops, 0, r, 1.0, 0.0, 1.0),
            Err(Error::DTooSmall { .. })
        ));
    }

    #[test]
    fn lf_axioms_on_uniform_mesh() {
        let mesh = build_uniform(&MetricChart::minkowski(1.0), 8, 2, 0.1).unwrap();
        let ops = FaceOps::new(&mesh, FluxField::burgers((-1.0, 1.0)));
        let lf = LaxFriedrichs::with_policy(&mesh, &ops, 1.0);
        let grid = ops.range_samples(16);
        let rep = verify_flux_axioms(&lf, &mesh, &ops, &grid);
        assert!(rep.consistency <= 1e-12);
        assert!(rep.generalized_consistency <= 1e-12);
        assert!(rep.conservation <= 1e-12);
        assert!(rep.monotone(1e-8), "{rep:?}");
    }

    #[test]
    fn lf_without_diffusion_is_not_monotone() {
        let mesh = four_cells();
        let ops = FaceOps::new(&mesh, FluxField::burgers((-1.0, 1.0)));
        let lf = LaxFriedrichs::with_constant(&mesh, &ops, 0.0);
        let rep = verify_flux_axioms(&lf, &mesh, &ops, &ops.range_samples(16));
        assert!(!rep.monotone(1e-8));
        assert!(rep.min_du < 0.0);
    }

    #[test]
    fn constant_flux_lf_formula() {
        let mesh = four_cells();
        let c = 0.3;
        let ops = FaceOps::new(&mesh, FluxField::constant(c, (-1.0, 1.0)));
        let lf = LaxFriedrichs::with_policy(&mesh, &ops, 1.0);
        let r = right_face(&mesh, 1);
        let d = lf.diffusion(mesh.element(1).laterals[r].face);
        for (u, v) in [(0.2, -0.5), (1.0, 0.0)] {
            assert!((lf.q(1, r, u, v) - (c + 0.5 * d * (u - v))).abs() < 1e-14);
        }
        let rep = verify_flux_axioms(&lf, &mesh, &ops, &ops.range_samples(16));
        assert_eq!(rep.consistency, 0.0);
    }

    #[test]
    fn out_of_range_inversion_reports() {
        let mesh = four_cells();
        let ops = FaceOps::new(&mesh, FluxField::burgers((-1.0, 1.0)));
        let face = mesh.element(0).outflow;
        assert!((ops.invert(face, 1.2, None).unwrap() - 1.2).abs() < 1e-12);
        assert!(matches!(
            ops.invert(face, 2.0, None),
            Err(Error::InversionOutOfRange { .. })
        ));
    }

    proptest! {
        #[test]
        fn lf_conservation_random(u in -1.0f64..1.0, v in -1.0f64..1.0) {
            let mesh = four_cells();
            let ops = FaceOps::new(&mesh, FluxField::burgers((-1.0, 1.0)));
            let lf = LaxFriedrichs::with_policy(&mesh, &ops, 1.0);
            for e in &mesh.elements {
                for (i, l) in e.laterals.iter().enumerate() {
                    let nb = mesh.element(l.neighbor);
                    let j = nb.laterals.iter().position(|m| m.face == l.face).unwrap();
                    prop_assert!((lf.q(e.id, i, u, v) + lf.q(nb.id, j, v, u)).abs() <= 1e-14);
                    prop_assert!((ops.mu_lateral(e, i, u) + ops.mu_lateral(nb, j, u)).abs() <= 1e-13);
                }
            }
        }

        #[test]
        fn inverse_round_trip(u in -0.5f64..0.5, t_end in 0.2f64..2.0) {
            let g = MetricChart::flrw_exp(0.8, 1.0);
            let mesh = build_uniform(&g, 4, 2, t_end).unwrap();
            let ops = FaceOps::new(&mesh, FluxField::flrw_compatible((-0.5, 0.5)));
            for e in &mesh.elements {
                let back = ops.invert(e.outflow, ops.mu_plus(e, u), None).unwrap();
                prop_assert!((back - u).abs() <= 1e-10);
            }
        }

        #[test]
        fn inflow_average_strictly_increasing(a in -0.9f64..0.9, b in -0.9f64..0.9) {
            prop_assume!(a < b);
            let g = MetricChart::flrw_linear(1.0);
            let mesh = build_uniform(&g, 4, 3, 0.6).unwrap();
            let ops = FaceOps::new(&mesh, FluxField::burgers((-0.9, 0.9)));
            for e in &mesh.elements {
                prop_assert!(ops.mu_minus(e, a) < ops.mu_minus(e, b));
            }
        }
    }
}
