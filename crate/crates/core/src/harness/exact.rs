//! Entropy solutions of the flat Burgers equation used as references.

use crate::geometry::QuadratureRule;
use crate::mesh::Mesh;
use crate::scheme::{chart_time, InitialData, SliceState};

/// `u = (p + q x) / (r + s t)` on `[a0 + a1 t, b0 + b1 t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl Piece {
    fn constant(c: f64, a: (f64, f64), b: (f64, f64)) -> Self {
        Piece {
            p: c,
            q: 0.0,
            r: 1.0,
            s: 0.0,
            a,
            b,
        }
    }

    fn value(&self, t: f64, x: f64) -> f64 {
        (self.p + self.q * x) / (self.r + self.s * t)
    }

    fn bounds(&self, t: f64) -> (f64, f64) {
        (self.a.0 + self.a.1 * t, self.b.0 + self.b.1 * t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExactSolution {
    /// Single shock from `x0` on the line, `u_l > u_r`.
    BurgersShock {
        ul: f64,
        ur: f64,
        x0: f64,
    },
    /// Centered fan from `x0` on the line, `u_l < u_r`.
    BurgersRarefaction {
        ul: f64,
        ur: f64,
        x0: f64,
    },
    Constant(f64),
    /// Periodic piecewise-smooth solution on `[0, period)`; pieces tile the period.
    Periodic {
        period: f64,
        pieces: Vec<Piece>,
        initial: InitialData,
    },
}

impl ExactSolution {
    pub fn burgers_shock(ul: f64, ur: f64) -> Self {
        assert!(ul > ur, "a Burgers shock needs u_l > u_r");
        Self::BurgersShock { ul, ur, x0: 0.0 }
    }

    pub fn burgers_rarefaction(ul: f64, ur: f64) -> Self {
        assert!(ul < ur, "a Burgers rarefaction needs u_l < u_r");
        Self::BurgersRarefaction { ul, ur, x0: 0.0 }
    }

    /// Ramp `x/0.25` on `[0, 0.25)`, `1` on `[0.25, 0.5)`, `0` on `[0.5, 1)`: a shock of
    /// speed ½ from `x = 0.5` behind an expanding ramp; valid for `t < 0.5`.
    pub fn shock_family() -> Self {
        Self::Periodic {
            period: 1.0,
            initial: InitialData::ShockRamp,
            pieces: vec![
                Piece {
                    p: 0.0,
                    q: 1.0,
                    r: 0.25,
                    s: 1.0,
                    a: (0.0, 0.0),
                    b: (0.25, 1.0),
                },
                Piece::constant(1.0, (0.25, 1.0), (0.5, 0.5)),
                Piece::constant(0.0, (0.5, 0.5), (1.0, 0.0)),
            ],
        }
    }

    /// `0` on `[0, 0.25)`, `1` on `[0.25, 0.5)`, `(1 - x)/0.5` on `[0.5, 1)`: a centered fan
    /// from `x = 0.25` ahead of a steepening ramp; valid for `t < 0.5`.
    pub fn rarefaction_family() -> Self {
        Self::Periodic {
            period: 1.0,
            initial: InitialData::RarefactionRamp,
            pieces: vec![
                Piece::constant(0.0, (0.0, 0.0), (0.25, 0.0)),
                Piece {
                    p: -0.25,
                    q: 1.0,
                    r: 0.0,
                    s: 1.0,
                    a: (0.25, 0.0),
                    b: (0.25, 1.0),
                },
                Piece::constant(1.0, (0.25, 1.0), (0.5, 1.0)),
                Piece {
                    p: 1.0,
                    q: -1.0,
                    r: 0.5,
                    s: -1.0,
                    a: (0.5, 1.0),
                    b: (1.0, 0.0),
                },
            ],
        }
    }

    /// Periodic initial data matching this solution at `t = 0`; single waves on the line
    /// have none.
    pub fn initial_data(&self) -> Option<InitialData> {
        match self {
            Self::Constant(c) => Some(InitialData::Constant(*c)),
            Self::BurgersShock { .. } | Self::BurgersRarefaction { .. } => None,
            Self::Periodic { initial, .. } => Some(initial.clone()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::BurgersShock { .. } => "burgers_shock",
            Self::BurgersRarefaction { .. } => "burgers_rarefaction",
            Self::Constant(_) => "constant",
            Self::Periodic { .. } => "periodic",
        }
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match *self {
            Self::Constant(c) => c,
            Self::BurgersShock { ul, ur, x0 } => {
                if x - x0 < 0.5 * (ul + ur) * t {
                    ul
                } else {
                    ur
                }
            }
            Self::BurgersRarefaction { ul, ur, x0 } => {
                let d = x - x0;
                if d <= ul * t {
                    ul
                } else if d >= ur * t {
                    ur
                } else {
                    d / t
                }
            }
            Self::Periodic { period, ref pieces, .. } => {
                let x = x.rem_euclid(period);
                for pc in pieces {
                    let (a, b) = pc.bounds(t);
                    if x >= a && x < b {
                        return pc.value(t, x);
                    }
                }
                let last = pieces.last().expect("pieces");
                last.value(t, x)
            }
        }
    }

    /// Points where the solution or its derivative may jump, within one period if periodic.
    pub fn breakpoints(&self, t: f64) -> Vec<f64> {
        match *self {
            Self::Constant(_) => Vec::new(),
            Self::BurgersShock { ul, ur, x0 } => vec![x0 + 0.5 * (ul + ur) * t],
            Self::BurgersRarefaction { ul, ur, x0 } => vec![x0 + ul * t, x0 + ur * t],
            Self::Periodic { ref pieces, .. } => pieces.iter().map(|p| p.bounds(t).0).collect(),
        }
    }

    /// Mean over `[a, b]` at time `t`, splitting at the breakpoints and integrating each
    /// smooth part with an 8-point Gauss–Legendre rule.
    pub fn cell_average(&self, t: f64, a: f64, b: f64) -> f64 {
        if b <= a {
            return self.eval(t, a);
        }
        let mut cuts = vec![a, b];
        let bp = self.breakpoints(t);
        match self {
            Self::Periodic { period, .. } => {
                let k0 = (a / period).floor() as i64 - 1;
                let k1 = (b / period).ceil() as i64 + 1;
                for k in k0..=k1 {
                    for &x in &bp {
                        let y = x + k as f64 * period;
                        if y > a && y < b {
                            cuts.push(y);
                        }
                    }
                }
            }
            _ => cuts.extend(bp.into_iter().filter(|&x| x > a && x < b)),
        }
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let rule = QuadratureRule::gauss_legendre(8);
        let total: f64 = cuts
            .windows(2)
            .map(|w| rule.integrate(w[0], w[1], |x| self.eval(t, x)))
            .sum();
        total / (b - a)
    }
}

/// `Σ_K |e| · |u_K - (mean of the exact solution over e)|` on `H_n`.
pub fn l1_error(mesh: &Mesh, state: &SliceState, sol: &ExactSolution) -> f64 {
    let t = chart_time(mesh, state.n);
    mesh.hypersurface(state.n)
        .iter()
        .zip(&state.values)
        .map(|(&f, &u)| {
            let face = mesh.face(f);
            let (a, b) = (face.a.x.min(face.b.x), face.a.x.max(face.b.x));
            face.measure * (u - sol.cell_average(t, a, b)).abs()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FluxField, MetricChart};
    use crate::mesh::build_uniform;
    use crate::scheme::Solver;

    #[test]
    fn single_wave_examples() {
        let s = ExactSolution::burgers_shock(1.0, 0.0);
        assert_eq!(s.eval(1.0, 0.49), 1.0);
        assert_eq!(s.eval(1.0, 0.51), 0.0);
        let r = ExactSolution::burgers_rarefaction(0.0, 1.0);
        assert_eq!(r.eval(1.0, 0.5), 0.5);
        assert_eq!(ExactSolution::Constant(0.3).eval(7.0, -2.0), 0.3);
    }

    #[test]
    fn families_match_their_data() {
        for sol in [ExactSolution::shock_family(), ExactSolution::rarefaction_family()] {
            let u0 = sol.initial_data().unwrap();
            for i in 0..200 {
                let x = (i as f64 + 0.5) / 200.0;
                let d = (sol.eval(0.0, x) - u0.eval(crate::geometry::ChartPoint::new(0.0, x), 1.0)).abs();
                assert!(d < 1e-9, "x={x}");
            }
        }
    }

    #[test]
    fn families_are_weak_solutions() {
        // Rankine–Hugoniot and characteristics: check d/dt ∫ u = 0 and the shock speed
        let sol = ExactSolution::shock_family();
        let mass = |t: f64| sol.cell_average(t, 0.0, 1.0);
        for t in [0.0, 0.1, 0.2, 0.25] {
            assert!((mass(t) - mass(0.0)).abs() < 1e-13);
        }
        let sol = ExactSolution::rarefaction_family();
        for t in [0.05, 0.15, 0.25] {
            assert!((sol.cell_average(t, 0.0, 1.0) - sol.cell_average(0.0, 0.0, 1.0)).abs() < 1e-13);
            // fan and plateau meet continuously
            assert!((sol.eval(t, 0.25 + t - 1e-12) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cell_average_brute_force_oracle() {
        let sol = ExactSolution::shock_family();
        let brute = |t: f64, a: f64, b: f64| {
            let n = 200_000;
            let h = (b - a) / n as f64;
            (0..n).map(|i| sol.eval(t, a + (i as f64 + 0.5) * h)).sum::<f64>() / n as f64
        };
        for (a, b) in [(0.3, 0.7), (0.9, 1.2), (-0.1, 0.05)] {
            let d = sol.cell_average(0.2, a, b) - brute(0.2, a, b);
            assert!(d.abs() < 1e-8, "[{a},{b}]: {d}");
        }
    }

    #[test]
    fn l1_error_examples() {
        let mesh = build_uniform(&MetricChart::minkowski(1.0), 4, 1, 0.1).unwrap();
        let s = Solver::new(mesh, FluxField::burgers((-1.0, 1.0)), 1.0);
        let st = s.init(&InitialData::Constant(0.3));
        assert!(l1_error(&s.mesh, &st, &ExactSolution::Constant(0.3)) <= 1e-14);
        assert!((l1_error(&s.mesh, &st, &ExactSolution::Constant(0.5)) - 0.2).abs() < 1e-14);
        let mut one = st.clone();
        one.values[2] += 1.0;
        assert!((l1_error(&s.mesh, &one, &ExactSolution::Constant(0.3)) - 0.25).abs() < 1e-14);
        let sol = ExactSolution::shock_family();
        let st = s.init(&sol.initial_data().unwrap());
        assert!(l1_error(&s.mesh, &st, &sol) < 1e-9);
    }
}
