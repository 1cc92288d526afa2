//! Space-time triangulations of the cylinder `R × [0, L)`.
//!
//! Every element has one inflow face (space-like, outward normal past-directed), one
//! outflow face (space-like, outward normal future-directed) and a nonempty set of
//! time-like lateral faces. Elements are grouped in slices `K^n` whose inflow faces
//! tile `H_n` and whose outflow faces tile `H_{n+1}`.

mod admissibility;
mod cfl;
mod generate;
pub mod io;

pub use admissibility::{cartesian_deviation, DeviationReport, PairResidual, ProbeField, DEFAULT_ETA_MAX};
pub use cfl::{cfl_report, CflReport};
pub use generate::{build_foliated, build_nonuniform_time, build_sheared, build_uniform};

use crate::error::{Error, Result};
use crate::geometry::{CausalClass, ChartPoint, MetricChart, QuadratureRule};

pub type FaceId = usize;
pub type ElemId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FaceKind {
    Inflow,
    Outflow,
    Lateral,
}

impl FaceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FaceKind::Inflow => "inflow",
            FaceKind::Outflow => "outflow",
            FaceKind::Lateral => "lateral",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "inflow" => Some(FaceKind::Inflow),
            "outflow" => Some(FaceKind::Outflow),
            "lateral" => Some(FaceKind::Lateral),
            _ => None,
        }
    }

    pub fn is_spacelike(&self) -> bool {
        !matches!(self, FaceKind::Lateral)
    }
}

/// Quadrature node on a face.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceNode {
    pub point: ChartPoint,
    /// Rule weight times the length element, so that `Σ weight = |e|`.
    pub weight: f64,
    /// Unit normal in the face's reference orientation (contravariant components).
    pub normal: [f64; 2],
    /// The same normal with its index lowered, `g(n, ·)`.
    pub conormal: [f64; 2],
}

/// A straight chart segment `a → b`.
///
/// The reference orientation of the normal is past-directed for space-like faces and
/// points towards increasing `x` for lateral faces.
#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub id: FaceId,
    pub kind: FaceKind,
    pub vertices: [usize; 2],
    pub a: ChartPoint,
    pub b: ChartPoint,
    pub measure: f64,
    pub centroid: ChartPoint,
    pub nodes: Vec<FaceNode>,
}

impl Face {
    pub fn tangent(&self) -> [f64; 2] {
        [self.b.t - self.a.t, self.b.x - self.a.x]
    }

    pub fn midpoint(&self) -> ChartPoint {
        self.a.lerp(self.b, 0.5)
    }
}

/// A lateral face seen from one of its two elements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LateralRef {
    pub face: FaceId,
    /// `+1` if the face's reference normal is outward for this element, else `-1`.
    pub sign: f64,
    pub neighbor: ElemId,
    /// Multiple of the period added to the face's `x` to place it next to the element.
    pub shift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub id: ElemId,
    pub slice: usize,
    pub slot: usize,
    pub inflow: FaceId,
    pub outflow: FaceId,
    pub outflow_shift: f64,
    pub laterals: Vec<LateralRef>,
    /// `|K|`
    pub volume: f64,
    /// `|K| / |e_K^+|`
    pub tau: f64,
    /// `|∂^0 K|`, the summed measure of the lateral faces.
    pub lateral_measure: f64,
    pub successor: Option<ElemId>,
    pub predecessor: Option<ElemId>,
}

/// Mesh description before any geometry is computed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeshSpec {
    pub vertices: Vec<ChartPoint>,
    /// `(kind, v0, v1)`
    pub faces: Vec<(FaceKind, usize, usize)>,
    /// `(inflow, outflow, laterals)`
    pub elements: Vec<(FaceId, FaceId, Vec<FaceId>)>,
    pub slices: Vec<Vec<ElemId>>,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub metric: MetricChart,
    pub quad: QuadratureRule,
    pub vertices: Vec<ChartPoint>,
    pub faces: Vec<Face>,
    pub elements: Vec<Element>,
    /// `slices[n][slot]` is an element of `K^n`; slot `j` of slice `n + 1` sits on the
    /// outflow face of slot `j` of slice `n`.
    pub slices: Vec<Vec<ElemId>>,
    /// Largest measure of a space-like face.
    pub h: f64,
    /// `max_K τ_K`.
    pub tau: f64,
    /// `max_{K ∈ K^n} τ_K` per slice.
    pub slice_tau: Vec<f64>,
    /// `t_n = Σ_{j<n} τ_j`, one entry per hypersurface `H_0 … H_N`.
    pub times: Vec<f64>,
}

impl Mesh {
    pub fn num_slices(&self) -> usize {
        self.slices.len()
    }

    pub fn slice_len(&self) -> usize {
        self.slices.first().map_or(0, Vec::len)
    }

    pub fn element(&self, id: ElemId) -> &Element {
        &self.elements[id]
    }

    pub fn face(&self, id: FaceId) -> &Face {
        &self.faces[id]
    }

    /// Faces of `H_n`, in slot order.
    pub fn hypersurface(&self, n: usize) -> Vec<FaceId> {
        if n < self.slices.len() {
            self.slices[n].iter().map(|&k| self.elements[k].inflow).collect()
        } else {
            self.slices[n - 1].iter().map(|&k| self.elements[k].outflow).collect()
        }
    }

    /// `h² / τ`.
    pub fn h2_over_tau(&self) -> f64 {
        self.h * self.h / self.tau
    }

    /// Chart points of a face as seen from an element (shift applied).
    pub fn shifted(p: ChartPoint, shift: f64) -> ChartPoint {
        ChartPoint::new(p.t, p.x + shift)
    }

    /// Assembles geometry, normals, measures, neighbors and slice order.
    pub fn assemble(metric: MetricChart, quad: QuadratureRule, spec: MeshSpec) -> Result<Self> {
        let period = metric.period;
        let nv = spec.vertices.len();
        let mut faces = Vec::with_capacity(spec.faces.len());
        for (id, &(kind, v0, v1)) in spec.faces.iter().enumerate() {
            if v0 >= nv || v1 >= nv {
                return Err(Error::InvalidMesh(format!("face {id} references a missing vertex")));
            }
            let a = spec.vertices[v0];
            let raw = spec.vertices[v1];
            let b = ChartPoint::new(raw.t, a.x + wrap_symmetric(raw.x - a.x, period));
            faces.push(build_face(&metric, &quad, id, kind, [v0, v1], a, b)?);
        }

        let nf = faces.len();
        // owners per role
        let mut inflow_of = vec![None; nf];
        let mut outflow_of = vec![None; nf];
        let mut lateral_of: Vec<Vec<ElemId>> = vec![Vec::new(); nf];
        for (k, (inf, outf, lats)) in spec.elements.iter().enumerate() {
            for &f in std::iter::once(inf).chain(std::iter::once(outf)).chain(lats.iter()) {
                if f >= nf {
                    return Err(Error::InvalidMesh(format!("element {k} references missing face {f}")));
                }
            }
            if lats.is_empty() {
                return Err(Error::InvalidMesh(format!("element {k} has no lateral faces")));
            }
            if inf == outf {
                return Err(Error::InvalidMesh(format!(
                    "element {k} has identical inflow and outflow faces"
                )));
            }
            for (f, slot, role) in [(*inf, &mut inflow_of, "inflow"), (*outf, &mut outflow_of, "outflow")] {
                if !faces[f].kind.is_spacelike() {
                    return Err(Error::InvalidMesh(format!(
                        "element {k}: {role} face {f} is declared lateral"
                    )));
                }
                if slot[f].replace(k).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "face {f} is the {role} face of two elements"
                    )));
                }
            }
            for &f in lats {
                if faces[f].kind != FaceKind::Lateral {
                    return Err(Error::InvalidMesh(format!(
                        "element {k}: lateral face {f} is declared {}",
                        faces[f].kind.as_str()
                    )));
                }
                lateral_of[f].push(k);
            }
        }

        let mut elements = Vec::with_capacity(spec.elements.len());
        for (k, (inf, outf, lats)) in spec.elements.iter().enumerate() {
            let inflow = &faces[*inf];
            let reference = inflow.midpoint().x;
            let outflow_shift = best_shift(faces[*outf].midpoint().x, reference, period);
            let mut laterals = Vec::with_capacity(lats.len());
            for &f in lats {
                let owners = &lateral_of[f];
                if owners.len() != 2 || owners[0] == owners[1] {
                    return Err(Error::InvalidMesh(format!(
                        "lateral face {f} must be shared by exactly two distinct elements"
                    )));
                }
                let neighbor = if owners[0] == k { owners[1] } else { owners[0] };
                let shift = best_shift(faces[f].midpoint().x, reference, period);
                laterals.push(LateralRef {
                    face: f,
                    sign: 0.0,
                    neighbor,
                    shift,
                });
            }
            // polygon, centroid, outward signs
            let mut pts = vec![inflow.a, inflow.b];
            let of = &faces[*outf];
            pts.push(Self::shifted(of.a, outflow_shift));
            pts.push(Self::shifted(of.b, outflow_shift));
            for l in &laterals {
                let lf = &faces[l.face];
                pts.push(Self::shifted(lf.a, l.shift));
                pts.push(Self::shifted(lf.b, l.shift));
            }
            let poly = convex_polygon(&pts);
            if poly.len() < 3 {
                return Err(Error::InvalidMesh(format!("element {k} is degenerate")));
            }
            let center = polygon_center(&poly);
            for l in &mut laterals {
                let lf = &faces[l.face];
                let d = lf.tangent();
                let mid = Self::shifted(lf.midpoint(), l.shift);
                let o = [mid.t - center.t, mid.x - center.x];
                let n = lf.nodes[0].normal;
                let side_n = d[0] * n[1] - d[1] * n[0];
                let side_o = d[0] * o[1] - d[1] * o[0];
                l.sign = if side_n * side_o > 0.0 { 1.0 } else { -1.0 };
            }
            // inflow must be past-outward, outflow future-outward: check geometry agrees
            let below = inflow.midpoint().t < center.t;
            let above = Self::shifted(of.midpoint(), outflow_shift).t > center.t;
            if !below || !above {
                return Err(Error::InvalidMesh(format!(
                    "element {k}: inflow face must lie in the past and outflow face in the future"
                )));
            }
            let volume = polygon_volume(&metric, &quad, &poly, center);
            if !(volume > 0.0) {
                return Err(Error::InvalidMesh(format!("element {k} has nonpositive volume")));
            }
            let lateral_measure = laterals.iter().map(|l| faces[l.face].measure).sum();
            let tau = volume / of.measure;
            elements.push(Element {
                id: k,
                slice: usize::MAX,
                slot: usize::MAX,
                inflow: *inf,
                outflow: *outf,
                outflow_shift,
                laterals,
                volume,
                tau,
                lateral_measure,
                successor: inflow_of[*outf],
                predecessor: outflow_of[*inf],
            });
        }

        // slices, reordered so that slot j of slice n+1 succeeds slot j of slice n
        if spec.slices.is_empty() {
            return Err(Error::InvalidMesh("mesh has no slices".into()));
        }
        let mut seen = vec![false; elements.len()];
        let mut slices: Vec<Vec<ElemId>> = Vec::with_capacity(spec.slices.len());
        for (n, listed) in spec.slices.iter().enumerate() {
            for &k in listed {
                if k >= elements.len() || std::mem::replace(&mut seen[k], true) {
                    return Err(Error::InvalidMesh(format!(
                        "slice {n}: element {k} missing or repeated"
                    )));
                }
            }
            let ordered: Vec<ElemId> = if n == 0 {
                for &k in listed {
                    if elements[k].predecessor.is_some() {
                        return Err(Error::InvalidMesh(format!(
                            "element {k} of slice 0 does not sit on the initial hypersurface"
                        )));
                    }
                }
                listed.clone()
            } else {
                let prev = &slices[n - 1];
                if prev.len() != listed.len() {
                    return Err(Error::InvalidMesh(format!("slice {n} does not match slice {}", n - 1)));
                }
                let mut ordered = Vec::with_capacity(prev.len());
                for &p in prev {
                    let s = elements[p]
                        .successor
                        .ok_or_else(|| Error::InvalidMesh(format!("element {p} has no successor in slice {n}")))?;
                    if !listed.contains(&s) {
                        return Err(Error::InvalidMesh(format!(
                            "successor {s} of element {p} is not listed in slice {n}"
                        )));
                    }
                    ordered.push(s);
                }
                ordered
            };
            slices.push(ordered);
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidMesh("some elements belong to no slice".into()));
        }
        for (n, slice) in slices.iter().enumerate() {
            for (j, &k) in slice.iter().enumerate() {
                elements[k].slice = n;
                elements[k].slot = j;
            }
        }
        for e in &elements {
            for l in &e.laterals {
                if elements[l.neighbor].slice != e.slice {
                    return Err(Error::InvalidMesh(format!(
                        "elements {} and {} share lateral face {} across slices",
                        e.id, l.neighbor, l.face
                    )));
                }
            }
        }

        let h = elements
            .iter()
            .flat_map(|e| [faces[e.inflow].measure, faces[e.outflow].measure])
            .fold(0.0, f64::max);
        let slice_tau: Vec<f64> = slices
            .iter()
            .map(|s| s.iter().map(|&k| elements[k].tau).fold(0.0, f64::max))
            .collect();
        let tau = slice_tau.iter().copied().fold(0.0, f64::max);
        let mut times = Vec::with_capacity(slices.len() + 1);
        let mut acc = 0.0;
        times.push(0.0);
        for &t in &slice_tau {
            acc += t;
            times.push(acc);
        }

        Ok(Self {
            metric,
            quad,
            vertices: spec.vertices,
            faces,
            elements,
            slices,
            h,
            tau,
            slice_tau,
            times,
        })
    }

    /// Chart centroid of `∂^0 K` weighted by lateral face measures, placed next to `K`.
    pub fn lateral_centroid(&self, k: ElemId) -> ChartPoint {
        let e = &self.elements[k];
        let (mut t, mut x) = (0.0, 0.0);
        for l in &e.laterals {
            let f = &self.faces[l.face];
            t += f.measure * f.centroid.t;
            x += f.measure * (f.centroid.x + l.shift);
        }
        ChartPoint::new(t / e.lateral_measure, x / e.lateral_measure)
    }

    /// Centroid of `e_K^+` placed next to `K`.
    pub fn outflow_centroid(&self, k: ElemId) -> ChartPoint {
        let e = &self.elements[k];
        Self::shifted(self.faces[e.outflow].centroid, e.outflow_shift)
    }
}

/// Representative of `d` modulo `period` in `(-period/2, period/2]`.
pub(crate) fn wrap_symmetric(d: f64, period: f64) -> f64 {
    let r = d.rem_euclid(period);
    if r > 0.5 * period {
        r - period
    } else {
        r
    }
}

fn best_shift(x: f64, reference: f64, period: f64) -> f64 {
    let d = wrap_symmetric(x - reference, period);
    (reference + d) - x
}

fn build_face(
    g: &MetricChart,
    quad: &QuadratureRule,
    id: FaceId,
    kind: FaceKind,
    vertices: [usize; 2],
    a: ChartPoint,
    b: ChartPoint,
) -> Result<Face> {
    let d = [b.t - a.t, b.x - a.x];
    let mut nodes = Vec::with_capacity(quad.len());
    let mut measure = 0.0;
    let (mut ct, mut cx) = (0.0, 0.0);
    for (s, w) in quad.iter() {
        let p = a.lerp(b, s);
        let q = g.reduce(p);
        let len2 = g.inner_components(q, d, d);
        let class = g.classify_components(q, d);
        let expected = if kind.is_spacelike() {
            CausalClass::Spacelike
        } else {
            CausalClass::Timelike
        };
        if class != expected {
            return Err(Error::InvalidMesh(format!(
                "face {id} declared {} is {:?} at t={}, x={}",
                kind.as_str(),
                class,
                p.t,
                p.x
            )));
        }
        // covector annihilating the tangent, normalized
        let omega = [-d[1], d[0]];
        let raised = g.raise(q, omega);
        let norm2 = omega[0] * raised[0] + omega[1] * raised[1];
        let scale = 1.0 / norm2.abs().sqrt();
        let mut conormal = [omega[0] * scale, omega[1] * scale];
        let mut normal = [raised[0] * scale, raised[1] * scale];
        let flip = if kind.is_spacelike() {
            normal[0] > 0.0
        } else {
            normal[1] < 0.0
        };
        if flip {
            conormal = [-conormal[0], -conormal[1]];
            normal = [-normal[0], -normal[1]];
        }
        let wl = w * len2.abs().sqrt();
        measure += wl;
        ct += wl * p.t;
        cx += wl * p.x;
        nodes.push(FaceNode {
            point: p,
            weight: wl,
            normal,
            conormal,
        });
    }
    if !(measure > 0.0) {
        return Err(Error::DegenerateFace(id));
    }
    Ok(Face {
        id,
        kind,
        vertices,
        a,
        b,
        measure,
        centroid: ChartPoint::new(ct / measure, cx / measure),
        nodes,
    })
}

/// Distinct points sorted counterclockwise around their mean.
fn convex_polygon(pts: &[ChartPoint]) -> Vec<ChartPoint> {
    let mut uniq: Vec<ChartPoint> = Vec::new();
    for &p in pts {
        if !uniq
            .iter()
            .any(|q| (q.t - p.t).abs() < 1e-12 && (q.x - p.x).abs() < 1e-12)
        {
            uniq.push(p);
        }
    }
    let n = uniq.len() as f64;
    let ct = uniq.iter().map(|p| p.t).sum::<f64>() / n;
    let cx = uniq.iter().map(|p| p.x).sum::<f64>() / n;
    uniq.sort_by(|p, q| {
        let ap = (p.t - ct).atan2(p.x - cx);
        let aq = (q.t - ct).atan2(q.x - cx);
        ap.partial_cmp(&aq).unwrap()
    });
    uniq
}

fn polygon_center(poly: &[ChartPoint]) -> ChartPoint {
    let n = poly.len() as f64;
    ChartPoint::new(
        poly.iter().map(|p| p.t).sum::<f64>() / n,
        poly.iter().map(|p| p.x).sum::<f64>() / n,
    )
}

/// `∫_K sqrt(-det g)` by a fan of collapsed tensor rules.
fn polygon_volume(g: &MetricChart, quad: &QuadratureRule, poly: &[ChartPoint], c: ChartPoint) -> f64 {
    let mut vol = 0.0;
    for i in 0..poly.len() {
        let p1 = poly[i];
        let p2 = poly[(i + 1) % poly.len()];
        let e1 = [p1.t - c.t, p1.x - c.x];
        let e2 = [p2.t - c.t, p2.x - c.x];
        let area2 = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
        for (s, ws) in quad.iter() {
            for (r, wr) in quad.iter() {
                // Duffy map of the unit square onto triangle (c, p1, p2)
                let t = c.t + s * (e1[0] + r * (e2[0] - e1[0]));
                let x = c.x + s * (e1[1] + r * (e2[1] - e1[1]));
                let rho = g.volume_density(g.reduce(ChartPoint::new(t, x)));
                vol += ws * wr * s * area2 * rho;
            }
        }
    }
    vol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_wrap() {
        assert!((wrap_symmetric(-0.5, 1.0) - 0.5).abs() < 1e-15);
        assert!((wrap_symmetric(0.75, 1.0) + 0.25).abs() < 1e-15);
        assert!((wrap_symmetric(0.1, 1.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn shift_places_face_near_reference() {
        assert!((best_shift(0.0, 0.75, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(best_shift(0.5, 0.25, 1.0), 0.0);
    }
}
