use super::metric::{ChartPoint, MetricChart, SpacetimeVector};
use crate::error::{Error, Result};

/// The `u`-dependence of a flux field: `f(u, p) = w(p) · (φ(u), ψ(u))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FluxProfile {
    /// `(u, u²/2)`
    Burgers,
    /// `(u, c u)`
    LinearAdvection { speed: f64 },
    /// `(u, c)`
    Constant { value: f64 },
}

impl FluxProfile {
    /// Time component `φ(u)`.
    #[inline]
    pub fn temporal(&self, u: f64) -> f64 {
        u
    }

    /// Space component `ψ(u)`.
    #[inline]
    pub fn spatial(&self, u: f64) -> f64 {
        match *self {
            FluxProfile::Burgers => 0.5 * u * u,
            FluxProfile::LinearAdvection { speed } => speed * u,
            FluxProfile::Constant { value } => value,
        }
    }

    #[inline]
    pub fn d_temporal(&self, _u: f64) -> f64 {
        1.0
    }

    #[inline]
    pub fn d_spatial(&self, u: f64) -> f64 {
        match *self {
            FluxProfile::Burgers => u,
            FluxProfile::LinearAdvection { speed } => speed,
            FluxProfile::Constant { .. } => 0.0,
        }
    }

    #[inline]
    pub fn components(&self, u: f64) -> [f64; 2] {
        [self.temporal(u), self.spatial(u)]
    }

    #[inline]
    pub fn d_components(&self, u: f64) -> [f64; 2] {
        [self.d_temporal(u), self.d_spatial(u)]
    }
}

/// Position dependence of a flux field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluxWeight {
    /// `w ≡ 1`.
    Unit,
    /// `w = 1 / sqrt(-det g)`; the resulting field is divergence free for every frozen `u`.
    InverseDensity,
}

/// A flux vector field `f(u, p)` together with the range of `u` on which it is claimed
/// to be time-like.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxField {
    pub profile: FluxProfile,
    pub weight: FluxWeight,
    pub range: (f64, f64),
}

impl FluxField {
    pub fn new(profile: FluxProfile, weight: FluxWeight, range: (f64, f64)) -> Self {
        Self { profile, weight, range }
    }

    pub fn burgers(range: (f64, f64)) -> Self {
        Self::new(FluxProfile::Burgers, FluxWeight::Unit, range)
    }

    /// Burgers profile scaled by the inverse volume density.
    pub fn flrw_compatible(range: (f64, f64)) -> Self {
        Self::new(FluxProfile::Burgers, FluxWeight::InverseDensity, range)
    }

    pub fn linear_advection(speed: f64, range: (f64, f64)) -> Self {
        Self::new(FluxProfile::LinearAdvection { speed }, FluxWeight::Unit, range)
    }

    pub fn constant(value: f64, range: (f64, f64)) -> Self {
        Self::new(FluxProfile::Constant { value }, FluxWeight::Unit, range)
    }

    /// Registry lookup: `burgers`, `flrw_compatible`, `linear_advection` (param speed),
    /// `constant` (param value).
    pub fn from_name(name: &str, params: &[f64], range: (f64, f64)) -> Result<Self> {
        if !(range.0 < range.1) {
            return Err(Error::EmptyRange(range.0, range.1));
        }
        let p0 = params.first().copied();
        Ok(match name {
            "burgers" => Self::burgers(range),
            "flrw_compatible" => Self::flrw_compatible(range),
            "linear_advection" => Self::linear_advection(p0.unwrap_or(0.5), range),
            "constant" => Self::constant(p0.unwrap_or(0.0), range),
            other => return Err(Error::Config(format!("unknown flux '{other}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match (self.profile, self.weight) {
            (FluxProfile::Burgers, FluxWeight::Unit) => "burgers",
            (FluxProfile::Burgers, FluxWeight::InverseDensity) => "flrw_compatible",
            (FluxProfile::LinearAdvection { .. }, _) => "linear_advection",
            (FluxProfile::Constant { .. }, _) => "constant",
        }
    }

    /// `w(p)`.
    #[inline]
    pub fn weight_at(&self, g: &MetricChart, p: ChartPoint) -> f64 {
        match self.weight {
            FluxWeight::Unit => 1.0,
            FluxWeight::InverseDensity => 1.0 / g.volume_density(g.reduce(p)),
        }
    }

    pub fn eval(&self, g: &MetricChart, u: f64, p: ChartPoint) -> SpacetimeVector {
        let w = self.weight_at(g, p);
        let [a, b] = self.profile.components(u);
        SpacetimeVector::new(p, w * a, w * b)
    }

    /// `∂_u f(u, p)`, analytic.
    pub fn du(&self, g: &MetricChart, u: f64, p: ChartPoint) -> SpacetimeVector {
        let w = self.weight_at(g, p);
        let [a, b] = self.profile.d_components(u);
        SpacetimeVector::new(p, w * a, w * b)
    }

    /// `div_g f(u, ·)` at `p`, from `(1/ρ) ∂_μ(ρ f^μ)`.
    pub fn divergence(&self, g: &MetricChart, u: f64, p: ChartPoint) -> f64 {
        match self.weight {
            FluxWeight::InverseDensity => 0.0,
            FluxWeight::Unit => {
                let q = g.reduce(p);
                let rho = g.volume_density(q);
                let (drt, drx) = g.density_gradient(q);
                let [a, b] = self.profile.components(u);
                (drt * a + drx * b) / rho
            }
        }
    }

    pub fn in_range(&self, u: f64) -> bool {
        u >= self.range.0 && u <= self.range.1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimelikeReport {
    pub ok: bool,
    /// Maximum of `g(∂_u f, ∂_u f)` over the samples.
    pub worst_value: f64,
    /// Sample attaining `worst_value`, or the first past-directed one.
    pub witness: (f64, ChartPoint),
}

/// Checks that `∂_u f` is time-like and future-directed on every sample.
pub fn timelike_flux_report(f: &FluxField, g: &MetricChart, samples: &[(f64, ChartPoint)]) -> Result<TimelikeReport> {
    if samples.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    let mut witness = samples[0];
    let mut past_witness = None;
    for &(u, p) in samples {
        let d = f.du(g, u, p);
        let val = g.inner_components(g.reduce(p), d.components(), d.components());
        if val > worst {
            worst = val;
            witness = (u, p);
        }
        if !(val < -g.null_tol) {
            ok = false;
        }
        if !(d.t > 0.0) {
            ok = false;
            past_witness.get_or_insert((u, p));
        }
    }
    Ok(TimelikeReport {
        ok,
        worst_value: worst,
        witness: past_witness.unwrap_or(witness),
    })
}

/// Tensor grid of `nu` values over `range` and `nt × nx` chart points in
/// `[t0, t1] × [0, L)`.
pub fn sample_grid(
    range: (f64, f64),
    nu: usize,
    t_window: (f64, f64),
    nt: usize,
    period: f64,
    nx: usize,
) -> Vec<(f64, ChartPoint)> {
    let lin = |a: f64, b: f64, n: usize, i: usize| {
        if n <= 1 {
            0.5 * (a + b)
        } else {
            a + (b - a) * i as f64 / (n - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(nu * nt * nx);
    for i in 0..nu {
        let u = lin(range.0, range.1, nu, i);
        for j in 0..nt {
            let t = lin(t_window.0, t_window.1, nt, j);
            for k in 0..nx {
                out.push((u, ChartPoint::new(t, period * k as f64 / nx.max(1) as f64)));
            }
        }
    }
    out
}

/// Growth constants `(C1, C2)` with `|div_g f(u, p)| <= C1 + C2 |u|` on the samples.
pub fn growth_constants(f: &FluxField, g: &MetricChart, samples: &[(f64, ChartPoint)]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let c1 = samples
        .iter()
        .map(|&(_, p)| f.divergence(g, 0.0, p).abs())
        .fold(0.0, f64::max);
    let c2 = samples
        .iter()
        .filter(|(u, _)| u.abs() > 1e-12)
        .map(|&(u, p)| ((f.divergence(g, u, p).abs() - c1) / u.abs()).max(0.0))
        .fold(0.0, f64::max);
    Ok((c1, c2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn burgers_minkowski_timelike() {
        let g = MetricChart::minkowski(1.0);
        let f = FluxField::burgers((-0.9, 0.9));
        let grid = sample_grid((-0.9, 0.9), 19, (0.0, 1.0), 3, 1.0, 4);
        let rep = timelike_flux_report(&f, &g, &grid).unwrap();
        assert!(rep.ok);
        assert!((rep.worst_value + 0.19).abs() < 1e-14);
        assert!((rep.witness.0.abs() - 0.9).abs() < 1e-14);
    }

    #[test]
    fn burgers_null_at_unit_speed() {
        let g = MetricChart::minkowski(1.0);
        let f = FluxField::burgers((-1.0, 1.0));
        let rep = timelike_flux_report(&f, &g, &[(1.0, ChartPoint::new(0.0, 0.2))]).unwrap();
        assert!(!rep.ok);
        assert_eq!(rep.worst_value, 0.0);
        assert_eq!(rep.witness.0, 1.0);
    }

    #[test]
    fn flrw_compatible_timelike() {
        let g = MetricChart::flrw_linear(1.0);
        let f = FluxField::flrw_compatible((-0.4, 0.4));
        let grid = sample_grid((-0.4, 0.4), 17, (0.0, 1.0), 11, 1.0, 4);
        assert!(timelike_flux_report(&f, &g, &grid).unwrap().ok);
    }

    #[test]
    fn empty_grid_is_error() {
        let g = MetricChart::minkowski(1.0);
        let f = FluxField::burgers((-1.0, 1.0));
        assert!(matches!(timelike_flux_report(&f, &g, &[]), Err(Error::EmptyGrid)));
    }

    #[test]
    fn divergence_of_plain_burgers_on_flrw() {
        let g = MetricChart::flrw_linear(1.0);
        let f = FluxField::burgers((-1.0, 1.0));
        let p = ChartPoint::new(1.0, 0.5);
        assert!((f.divergence(&g, 0.6, p) - 0.3).abs() < 1e-15);
        let grid = sample_grid((-1.0, 1.0), 21, (0.0, 1.0), 11, 1.0, 3);
        let (c1, c2) = growth_constants(&f, &g, &grid).unwrap();
        assert_eq!(c1, 0.0);
        assert!((c2 - 1.0).abs() < 1e-14);
        let fc = FluxField::flrw_compatible((-1.0, 1.0));
        assert_eq!(growth_constants(&fc, &g, &grid).unwrap(), (0.0, 0.0));
    }
}
