use crate::error::{Error, Result};

/// A point of the chart `(t, x)`.
///
/// Mesh geometry works with lifts of `x` to the real line so that a face crossing the
/// periodic seam stays a straight segment; the metric always evaluates at the reduced
/// coordinate, see [`MetricChart::reduce`].
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ChartPoint {
    pub t: f64,
    pub x: f64,
}

impl ChartPoint {
    pub const fn new(t: f64, x: f64) -> Self {
        Self { t, x }
    }

    /// Point with `x` reduced to `[0, period)`.
    pub fn wrapped(t: f64, x: f64, period: f64) -> Self {
        Self {
            t,
            x: x.rem_euclid(period),
        }
    }

    pub fn lerp(self, other: Self, s: f64) -> Self {
        Self {
            t: self.t + s * (other.t - self.t),
            x: self.x + s * (other.x - self.x),
        }
    }
}

/// Tangent vector `X = X_t ∂_t + X_x ∂_x` attached to a base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpacetimeVector {
    pub base: ChartPoint,
    pub t: f64,
    pub x: f64,
}

impl SpacetimeVector {
    pub const fn new(base: ChartPoint, t: f64, x: f64) -> Self {
        Self { base, t, x }
    }

    pub fn components(&self) -> [f64; 2] {
        [self.t, self.x]
    }

    pub fn scaled(self, s: f64) -> Self {
        Self {
            t: self.t * s,
            x: self.x * s,
            ..self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalClass {
    Timelike,
    Null,
    Spacelike,
}

/// Built-in metrics of the form `-dt² + a(t)² dx²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MetricKind {
    Minkowski,
    /// `a(t) = 1 + t`
    FlrwLinear,
    /// `a(t) = exp(k t)`
    FlrwExp {
        k: f64,
    },
}

/// A Lorentzian metric on the cylinder `R × [0, L)` in one global chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricChart {
    pub kind: MetricKind,
    pub period: f64,
    /// Half-width of the band around zero classified as null.
    pub null_tol: f64,
}

pub const DEFAULT_NULL_TOL: f64 = 1e-12;

impl MetricChart {
    pub fn new(kind: MetricKind, period: f64) -> Self {
        assert!(period > 0.0, "spatial period must be positive");
        Self {
            kind,
            period,
            null_tol: DEFAULT_NULL_TOL,
        }
    }

    pub fn minkowski(period: f64) -> Self {
        Self::new(MetricKind::Minkowski, period)
    }

    pub fn flrw_linear(period: f64) -> Self {
        Self::new(MetricKind::FlrwLinear, period)
    }

    pub fn flrw_exp(k: f64, period: f64) -> Self {
        Self::new(MetricKind::FlrwExp { k }, period)
    }

    /// Registry lookup: `minkowski`, `flrw_linear`, `flrw_exp` (parameter `k`).
    pub fn from_name(name: &str, params: &[f64], period: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Config(format!("spatial period must be positive, got {period}")));
        }
        match name {
            "minkowski" => Ok(Self::minkowski(period)),
            "flrw_linear" => Ok(Self::flrw_linear(period)),
            "flrw_exp" => {
                let k = params.first().copied().unwrap_or(1.0);
                Ok(Self::flrw_exp(k, period))
            }
            other => Err(Error::Config(format!("unknown metric '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            MetricKind::Minkowski => "minkowski",
            MetricKind::FlrwLinear => "flrw_linear",
            MetricKind::FlrwExp { .. } => "flrw_exp",
        }
    }

    pub fn reduce(&self, p: ChartPoint) -> ChartPoint {
        ChartPoint::wrapped(p.t, p.x, self.period)
    }

    /// Scale factor `a(t)` and `a'(t)`.
    pub fn scale_factor(&self, t: f64) -> (f64, f64) {
        match self.kind {
            MetricKind::Minkowski => (1.0, 0.0),
            MetricKind::FlrwLinear => (1.0 + t, 1.0),
            MetricKind::FlrwExp { k } => {
                let a = (k * t).exp();
                (a, k * a)
            }
        }
    }

    /// `(g_tt, g_tx, g_xx)` at `p`.
    pub fn components(&self, p: ChartPoint) -> [f64; 3] {
        let (a, _) = self.scale_factor(p.t);
        [-1.0, 0.0, a * a]
    }

    /// `(g^tt, g^tx, g^xx)` at `p`.
    pub fn inverse(&self, p: ChartPoint) -> [f64; 3] {
        let [gtt, gtx, gxx] = self.components(p);
        let det = gtt * gxx - gtx * gtx;
        [gxx / det, -gtx / det, gtt / det]
    }

    /// `sqrt(-det g)`.
    pub fn volume_density(&self, p: ChartPoint) -> f64 {
        let [gtt, gtx, gxx] = self.components(p);
        (gtx * gtx - gtt * gxx).sqrt()
    }

    /// `(∂_t ρ, ∂_x ρ)` for the volume density `ρ`.
    pub fn density_gradient(&self, p: ChartPoint) -> (f64, f64) {
        let (_, da) = self.scale_factor(p.t);
        (da, 0.0)
    }

    /// Lorentzian signature at `p`: `g_tt < 0` and `det g < 0`.
    pub fn is_lorentzian_at(&self, p: ChartPoint) -> bool {
        let [gtt, gtx, gxx] = self.components(p);
        gtt < 0.0 && gtt * gxx - gtx * gtx < 0.0 && self.volume_density(p) > 0.0
    }

    /// `g_p(X, Y)` on raw components.
    pub fn inner_components(&self, p: ChartPoint, x: [f64; 2], y: [f64; 2]) -> f64 {
        let [gtt, gtx, gxx] = self.components(p);
        gtt * x[0] * y[0] + gtx * (x[0] * y[1] + x[1] * y[0]) + gxx * x[1] * y[1]
    }

    /// Lowers an index: `(g X)_μ`.
    pub fn lower(&self, p: ChartPoint, x: [f64; 2]) -> [f64; 2] {
        let [gtt, gtx, gxx] = self.components(p);
        [gtt * x[0] + gtx * x[1], gtx * x[0] + gxx * x[1]]
    }

    /// Raises an index: `(g^{-1} ω)^μ`.
    pub fn raise(&self, p: ChartPoint, w: [f64; 2]) -> [f64; 2] {
        let [itt, itx, ixx] = self.inverse(p);
        [itt * w[0] + itx * w[1], itx * w[0] + ixx * w[1]]
    }

    pub fn classify_components(&self, p: ChartPoint, x: [f64; 2]) -> CausalClass {
        let n = self.inner_components(p, x, x);
        if n < -self.null_tol {
            CausalClass::Timelike
        } else if n > self.null_tol {
            CausalClass::Spacelike
        } else {
            CausalClass::Null
        }
    }
}

/// `g_p(X, Y) = g_tt X_t Y_t + g_tx (X_t Y_x + X_x Y_t) + g_xx X_x Y_x`.
pub fn inner(g: &MetricChart, p: ChartPoint, x: &SpacetimeVector, y: &SpacetimeVector) -> f64 {
    g.inner_components(p, x.components(), y.components())
}

/// Causal character of `X` by the sign of `g(X, X)`, with a null band of `g.null_tol`.
pub fn classify(g: &MetricChart, p: ChartPoint, x: &SpacetimeVector) -> CausalClass {
    g.classify_components(p, x.components())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(t: f64, x: f64) -> SpacetimeVector {
        SpacetimeVector::new(ChartPoint::default(), t, x)
    }

    #[test]
    fn minkowski_examples() {
        let g = MetricChart::minkowski(1.0);
        let p = ChartPoint::new(0.0, 0.0);
        assert_eq!(inner(&g, p, &v(1.0, 0.0), &v(1.0, 0.0)), -1.0);
        assert_eq!(inner(&g, p, &v(1.0, 1.0), &v(1.0, 1.0)), 0.0);
        assert_eq!(classify(&g, p, &v(1.0, 0.0)), CausalClass::Timelike);
        assert_eq!(classify(&g, p, &v(1.0, 1.0)), CausalClass::Null);
        assert_eq!(classify(&g, p, &v(0.0, 1.0)), CausalClass::Spacelike);
    }

    #[test]
    fn flrw_spatial_norm() {
        let g = MetricChart::flrw_linear(1.0);
        let p = ChartPoint::new(1.0, 0.3);
        assert!((inner(&g, p, &v(0.0, 1.0), &v(0.0, 1.0)) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn raise_inverts_lower() {
        let g = MetricChart::flrw_exp(0.7, 2.0);
        let p = ChartPoint::new(0.4, 1.1);
        let x = [0.3, -1.7];
        let back = g.raise(p, g.lower(p, x));
        assert!((back[0] - x[0]).abs() < 1e-14 && (back[1] - x[1]).abs() < 1e-14);
        assert!(g.is_lorentzian_at(p));
        assert!((g.volume_density(p) - (0.7f64 * 0.4).exp()).abs() < 1e-14);
    }

    #[test]
    fn wrapped_reduces() {
        let p = ChartPoint::wrapped(0.0, -0.25, 1.0);
        assert!((p.x - 0.75).abs() < 1e-15);
    }

    #[test]
    fn unknown_metric_rejected() {
        assert!(MetricChart::from_name("schwarzschild", &[], 1.0).is_err());
    }
}
