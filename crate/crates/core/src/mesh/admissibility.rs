//! Local Cartesian deviation of consecutive element pairs and the flatness checks on
//! outflow faces.
//!
//! The tangent `w_K` is taken along the straight chart segment from the lateral centroid
//! `p_K^0` to the outflow centroid `p_K^+`, normalized at `p_K^+`. Probe fields are
//! evaluated at the point shared by a pair (the outflow centroid of `K^-`), components
//! being identified through the chart.

use std::f64::consts::PI;

use super::{ElemId, Mesh};
use crate::geometry::{ChartPoint, MetricChart};

/// Default classification threshold for the estimated `η(h)`.
pub const DEFAULT_ETA_MAX: f64 = 0.25;

/// Bound on the outflow-normal variation proxy.
pub const NORMAL_VARIATION_MAX: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProbeField {
    /// `∂_t`
    Dt,
    /// `∂_x`
    Dx,
    /// `(cos 2πx/L, sin 2πx/L)`
    Rotating,
    /// `(sin 2πx/L · cos πt, cos 4πx/L)`
    Wave,
}

impl ProbeField {
    pub const BASIS: [ProbeField; 4] = [ProbeField::Dt, ProbeField::Dx, ProbeField::Rotating, ProbeField::Wave];

    pub fn eval(&self, p: ChartPoint, period: f64) -> [f64; 2] {
        let k = 2.0 * PI * p.x / period;
        match self {
            ProbeField::Dt => [1.0, 0.0],
            ProbeField::Dx => [0.0, 1.0],
            ProbeField::Rotating => [k.cos(), k.sin()],
            ProbeField::Wave => [k.sin() * (PI * p.t).cos(), (2.0 * k).cos()],
        }
    }
}

fn sup(v: [f64; 2]) -> f64 {
    v[0].abs().max(v[1].abs())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairResidual {
    pub elem: ElemId,
    pub prev: ElemId,
    /// `max_X |g(|e+|n+, X) - g(|e-|n-, X)| / (|K| ‖X‖)`
    pub ex3: f64,
    /// `max_X |g(w_K, X) - g(w_{K^-}, X)| / (τ_K ‖X‖)`
    pub ex4: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviationReport {
    pub pairs: Vec<PairResidual>,
    /// Elements of the first slice, which have no predecessor and are skipped.
    pub skipped_initial: usize,
    /// Signed sum `Σ_K (|K|E(K) - |K^-|E(K^-))(Φ, Ψ)` for the probe pair of largest
    /// normalized magnitude.
    pub sum: f64,
    /// `|sum| / (sup|Φ| sup|Ψ|)`
    pub magnitude: f64,
    /// Largest normalized `Σ_K |(|K|E(K) - |K^-|E(K^-))(Φ, Ψ)|`, which bounds the sum for
    /// any `Ψ_K` varying per element within the probe's bound.
    pub aggregate: f64,
    pub eta_sum: f64,
    pub eta_ex3: f64,
    pub eta_ex4: f64,
    /// `max(eta_sum, eta_ex3, eta_ex4)`
    pub eta: f64,
    /// `max_K dist(p_K^+, e_K^+) / (|e_K^+| τ)`
    pub flatness: f64,
    /// `max_K` chart variation of the outflow normal per unit chart length.
    pub normal_variation: f64,
    pub threshold: f64,
    pub h: f64,
    pub pass_sum: bool,
    pub pass_ex3: bool,
    pub pass_ex4: bool,
    pub pass: bool,
    pub tangent_model: &'static str,
}

struct ElemFrame {
    p_plus: ChartPoint,
    w: [f64; 2],
    /// future unit normal of the outflow face at `p_plus`
    n_plus: [f64; 2],
    scale: f64,
}

fn frame(mesh: &Mesh, g: &MetricChart, k: ElemId) -> ElemFrame {
    let e = mesh.element(k);
    let p_plus = mesh.outflow_centroid(k);
    let p0 = mesh.lateral_centroid(k);
    let q = g.reduce(p_plus);
    let mut d = [p_plus.t - p0.t, p_plus.x - p0.x];
    if d[0] < 0.0 {
        d = [-d[0], -d[1]];
    }
    let norm = g.inner_components(q, d, d).abs().sqrt();
    let w = [d[0] / norm, d[1] / norm];
    let face = mesh.face(e.outflow);
    let nb = crate::geometry::reference_conormal(g, p_plus, face.tangent(), true);
    let n_past = g.raise(q, nb);
    ElemFrame {
        p_plus,
        w,
        n_plus: [-n_past[0], -n_past[1]],
        scale: e.volume / e.tau,
    }
}

/// Evaluates the deviation sum over the probe basis, the pairwise sufficient conditions
/// and the flatness residuals, classifying with `threshold` on the estimated `η(h)`.
pub fn cartesian_deviation(mesh: &Mesh, g: &MetricChart, probes: &[ProbeField], threshold: f64) -> DeviationReport {
    let period = g.period;
    let frames: Vec<ElemFrame> = (0..mesh.elements.len()).map(|k| frame(mesh, g, k)).collect();
    let mut pairs = Vec::new();
    let mut skipped = 0;
    let np = probes.len();
    // fixed sums for each (Φ, Ψ), adversarial sums for each (Φ, Ψ)
    let mut fixed = vec![0.0; np * np];
    let mut adversarial = vec![0.0; np * np];
    let mut phi_sup = vec![0.0f64; np];
    let ip = |q: ChartPoint, a: [f64; 2], b: [f64; 2]| g.inner_components(g.reduce(q), a, b);
    for (k, e) in mesh.elements.iter().enumerate() {
        let Some(prev) = e.predecessor else {
            skipped += 1;
            continue;
        };
        let fk = &frames[k];
        let fp = &frames[prev];
        // shared point in K's frame: the inflow centroid of K
        let shared = mesh.face(e.inflow).centroid;
        let p_prev = shared;
        let vals: Vec<[f64; 2]> = probes.iter().map(|p| p.eval(shared, period)).collect();
        let mut ex3 = 0.0f64;
        let mut ex4 = 0.0f64;
        let e_plus = mesh.face(e.outflow).measure;
        let e_minus = mesh.face(e.inflow).measure;
        for (a, x) in vals.iter().enumerate() {
            let nx = sup(*x);
            phi_sup[a] = phi_sup[a].max(nx);
            if nx == 0.0 {
                continue;
            }
            let d3 = e_plus * ip(fk.p_plus, fk.n_plus, *x) - e_minus * ip(p_prev, fp.n_plus, *x);
            let d4 = ip(fk.p_plus, fk.w, *x) - ip(p_prev, fp.w, *x);
            ex3 = ex3.max(d3.abs() / (e.volume * nx));
            ex4 = ex4.max(d4.abs() / (e.tau * nx));
            for (b, y) in vals.iter().enumerate() {
                let term = fk.scale * ip(fk.p_plus, *x, fk.w) * ip(fk.p_plus, *y, fk.n_plus)
                    - fp.scale * ip(p_prev, *x, fp.w) * ip(p_prev, *y, fp.n_plus);
                fixed[a * np + b] += term;
                adversarial[a * np + b] += term.abs();
            }
        }
        pairs.push(PairResidual {
            elem: k,
            prev,
            ex3,
            ex4,
        });
    }
    let mut magnitude = 0.0f64;
    let mut sum = 0.0;
    let mut aggregate = 0.0f64;
    for a in 0..np {
        for b in 0..np {
            let norm = phi_sup[a] * phi_sup[b];
            if norm == 0.0 {
                continue;
            }
            if fixed[a * np + b].abs() / norm > magnitude {
                magnitude = fixed[a * np + b].abs() / norm;
                sum = fixed[a * np + b];
            }
            aggregate = aggregate.max(adversarial[a * np + b] / norm);
        }
    }
    let aggregate = aggregate.max(magnitude);
    let h = mesh.h;
    let eta_sum = h * aggregate;
    let eta_ex3 = h * pairs.iter().map(|p| p.ex3).fold(0.0, f64::max);
    let eta_ex4 = h * pairs.iter().map(|p| p.ex4).fold(0.0, f64::max);
    let eta = eta_sum.max(eta_ex3).max(eta_ex4);

    let mut flatness = 0.0f64;
    let mut normal_variation = 0.0f64;
    for (k, e) in mesh.elements.iter().enumerate() {
        let face = mesh.face(e.outflow);
        let c = face.centroid;
        let d = face.tangent();
        let len2 = d[0] * d[0] + d[1] * d[1];
        let s = (((c.t - face.a.t) * d[0] + (c.x - face.a.x) * d[1]) / len2).clamp(0.0, 1.0);
        let foot = face.a.lerp(face.b, s);
        let dist = ((c.t - foot.t).powi(2) + (c.x - foot.x).powi(2)).sqrt();
        flatness = flatness.max(dist / (face.measure * mesh.tau));
        let n0 = frames[k].n_plus;
        let chart_len = len2.sqrt();
        for nd in &face.nodes {
            let dn = [(-nd.normal[0]) - n0[0], (-nd.normal[1]) - n0[1]];
            normal_variation = normal_variation.max(sup(dn) / chart_len);
        }
    }

    let pass_sum = eta_sum <= threshold;
    let pass_ex3 = eta_ex3 <= threshold;
    let pass_ex4 = eta_ex4 <= threshold;
    DeviationReport {
        pairs,
        skipped_initial: skipped,
        sum,
        magnitude,
        aggregate,
        eta_sum,
        eta_ex3,
        eta_ex4,
        eta,
        flatness,
        normal_variation,
        threshold,
        h,
        pass_sum,
        pass_ex3,
        pass_ex4,
        pass: pass_sum && pass_ex3 && pass_ex4 && flatness <= 1.0 && normal_variation <= NORMAL_VARIATION_MAX,
        tangent_model: "straight chart segment from lateral centroid to outflow centroid",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_nonuniform_time, build_sheared, build_uniform};

    #[test]
    fn uniform_minkowski_is_exact() {
        let g = MetricChart::minkowski(1.0);
        let m = build_uniform(&g, 16, 8, 0.5).unwrap();
        let r = cartesian_deviation(&m, &g, &ProbeField::BASIS, DEFAULT_ETA_MAX);
        assert!(r.aggregate <= 1e-12);
        assert!(r.magnitude <= r.aggregate);
        assert!(r.eta <= 1e-12);
        assert_eq!(r.skipped_initial, 16);
        assert_eq!(r.pairs.len(), 16 * 7);
        assert!(r.pass);
        assert!(r.flatness <= 1e-12);
    }

    #[test]
    fn alternating_shear_tangent_jump() {
        // w = (1, ±s)/sqrt(1 - s²) on Minkowski; against X = ∂x the jump is 2s/sqrt(1 - s²)
        let g = MetricChart::minkowski(1.0);
        let s = 0.3;
        let m = build_sheared(&g, 16, 8, 0.25, s, true).unwrap();
        let r = cartesian_deviation(&m, &g, &[ProbeField::Dx], DEFAULT_ETA_MAX);
        let jump = 2.0 * s / (1.0 - s * s).sqrt();
        let tau = 0.25 / 8.0;
        for p in &r.pairs {
            assert!((p.ex4 - jump / tau).abs() < 1e-9 * jump / tau);
        }
        assert!(!r.pass_ex4);
        assert!(!r.pass);
    }

    #[test]
    fn steady_shear_passes() {
        let g = MetricChart::minkowski(1.0);
        let m = build_sheared(&g, 16, 8, 0.25, 0.3, false).unwrap();
        let r = cartesian_deviation(&m, &g, &ProbeField::BASIS, DEFAULT_ETA_MAX);
        assert!(r.eta_ex4 <= 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn smooth_time_grid_on_flrw_refines() {
        let g = MetricChart::flrw_linear(1.0);
        let mut last = f64::INFINITY;
        for nx in [8, 16, 32, 64] {
            let nt = nx / 2;
            let grid: Vec<f64> = (0..=nt)
                .map(|n| {
                    let s = n as f64 / nt as f64;
                    0.5 * (s + 0.3 * s * s) / 1.3
                })
                .collect();
            let m = build_nonuniform_time(&g, nx, &grid).unwrap();
            let r = cartesian_deviation(&m, &g, &ProbeField::BASIS, DEFAULT_ETA_MAX);
            assert!(r.pass, "nx={nx} eta={}", r.eta);
            assert!(r.eta < last);
            last = r.eta;
        }
    }
}
