//! Invariant manifolds of saddle-type equilibria of the traveling-wave field
//! and their first intersection with a transversal section.

use serde::{Deserialize, Serialize};

use crate::capillarity::{TwField, TOL_SN};
use crate::corey::{eigen_of, State};
use crate::error::{Error, Result};
use crate::linalg::{self, Vec2};
use crate::ode::{Integrator, OdeOptions};

/// A transversal segment used to compare manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SotomayorLine {
    pub point: State,
    /// Unit vector along the segment.
    pub direction: Vec2,
    pub half_length: f64,
}

impl SotomayorLine {
    pub fn new(point: State, direction: Vec2, half_length: f64) -> Self {
        SotomayorLine { point, direction: linalg::normalize(direction), half_length }
    }

    /// Perpendicular bisector of the segment from `a` to `b`.
    pub fn bisector(a: State, b: State, half_length: f64) -> Self {
        let mid = State::from_vec(linalg::scale(0.5, linalg::add(a.vec(), b.vec())));
        SotomayorLine::new(mid, linalg::perp(linalg::sub(b.vec(), a.vec())), half_length)
    }

    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let d = self.direction;
        SotomayorLine::new(self.point, [c * d[0] - s * d[1], s * d[0] + c * d[1]], self.half_length)
    }

    pub fn normal(&self) -> Vec2 {
        linalg::perp(self.direction)
    }

    /// Signed distance from the supporting line.
    pub fn side(&self, x: Vec2) -> f64 {
        linalg::dot(self.normal(), linalg::sub(x, self.point.vec()))
    }

    /// Coordinate along the segment direction.
    pub fn coordinate(&self, x: Vec2) -> f64 {
        linalg::dot(self.direction, linalg::sub(x, self.point.vec()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldKind {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    HitSection,
    LeftDomain,
    ReachedEquilibrium,
    MaxLength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub points: Vec<State>,
    pub terminal: Terminal,
}

impl Orbit {
    pub fn last(&self) -> State {
        *self.points.last().expect("orbits hold at least their seed point")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldLimits {
    /// Offset of the seed point from the equilibrium.
    pub eps0: f64,
    pub max_arclength: f64,
    pub max_steps: usize,
    pub ode: OdeOptions,
    /// Keep every accepted step in the returned orbit (otherwise only the
    /// seed and the terminal point).
    pub record: bool,
    /// Seed along a zero-eigenvalue direction when the requested manifold
    /// has no hyperbolic direction (saddle-node left states).
    pub allow_center: bool,
}

impl Default for ManifoldLimits {
    fn default() -> Self {
        ManifoldLimits {
            eps0: 1e-6,
            max_arclength: 4.0,
            max_steps: 50_000,
            ode: OdeOptions::default(),
            record: false,
            allow_center: false,
        }
    }
}

/// Smallest seeding eigenvalue, relative to the spectral radius, for which a
/// manifold can be integrated within the step budget.
pub const MIN_RATE: f64 = 1e-4;

fn field_radius(eq: State, field: &TwField) -> f64 {
    eigen_of(&field.linearization(eq.vec())).map(|e| e.lambda_s.abs().max(e.lambda_f.abs())).unwrap_or(0.0)
}

/// Seed direction of a manifold and its eigenvalue.
///
/// The unstable manifold uses the largest eigenvalue, the stable one the
/// smallest; both must be bounded away from zero relative to the spectral
/// radius unless a center direction is explicitly allowed.
pub fn manifold_direction(eq: State, kind: ManifoldKind, field: &TwField, allow_center: bool) -> Result<(Vec2, f64, bool)> {
    let lin = field.linearization(eq.vec());
    let e = eigen_of(&lin)?;
    let radius = e.lambda_s.abs().max(e.lambda_f.abs());
    let (lam, v) = match kind {
        ManifoldKind::Unstable => (e.lambda_f, e.r_f),
        ManifoldKind::Stable => (e.lambda_s, e.r_s),
    };
    let hyperbolic = match kind {
        ManifoldKind::Unstable => lam > TOL_SN * radius,
        ManifoldKind::Stable => lam < -TOL_SN * radius,
    };
    if hyperbolic {
        return Ok((v, lam, false));
    }
    if allow_center && radius > 0.0 {
        // `lam` is the near-zero eigenvalue; the caller picks the escaping side.
        return Ok((v, lam, true));
    }
    Err(Error::DegenerateDirection(lam))
}

/// Integrate one branch of a manifold of `eq` until it meets `section`.
pub fn integrate_manifold(
    eq: State,
    kind: ManifoldKind,
    branch_sign: f64,
    field: &TwField,
    section: &SotomayorLine,
    limits: &ManifoldLimits,
) -> Result<Orbit> {
    let (v, lam, center) = manifold_direction(eq, kind, field, limits.allow_center)?;
    if !center && lam.abs() < MIN_RATE * field_radius(eq, field) {
        // Leaving the equilibrium would take ~1/|λ| time units, while the
        // other direction caps explicit steps near 1/radius.
        return Err(Error::DegenerateDirection(lam));
    }
    let sign = if branch_sign < 0.0 { -1.0 } else { 1.0 };
    let time_dir = match kind {
        ManifoldKind::Unstable => 1.0,
        ManifoldKind::Stable => -1.0,
    };
    let mut eps = limits.eps0;
    if center {
        // A centre direction only escapes on the side where the field points away.
        eps = eps.max(1e-5);
        let probe = linalg::axpy(sign * eps, v, eq.vec());
        let outward = linalg::dot(field.eval(probe), linalg::scale(sign, v)) * time_dir;
        if outward <= 0.0 {
            return Err(Error::DegenerateDirection(lam));
        }
    }
    let x0 = linalg::axpy(sign * eps, v, eq.vec());
    // Scale the first step to the local time scale.
    let speed = linalg::norm(field.eval(x0)).max(1e-300);
    let mut opts = limits.ode;
    opts.h_init = (0.1 * eps / speed).max(1e-12);
    let mut it = Integrator::new(|x: Vec2| field.eval(x), x0, time_dir, opts);
    let mut points = vec![State::from_vec(x0)];
    let mut length = 0.0;
    let eq_v = eq.vec();
    for _ in 0..limits.max_steps {
        let Some(step) = it.step() else {
            return Ok(Orbit { points, terminal: Terminal::MaxLength });
        };
        let (sa, sb) = (section.side(step.from), section.side(step.to));
        if (sa > 0.0) != (sb > 0.0) || sb == 0.0 {
            let (_, x) = it.locate(&step, |x| section.side(x), 1e-12);
            if section.coordinate(x).abs() <= section.half_length && State::from_vec(x).in_triangle(1e-9) {
                points.push(State::from_vec(x));
                return Ok(Orbit { points, terminal: Terminal::HitSection });
            }
        }
        let to = State::from_vec(step.to);
        if !to.in_triangle(1e-9) {
            points.push(to);
            return Ok(Orbit { points, terminal: Terminal::LeftDomain });
        }
        length += linalg::norm(linalg::sub(step.to, step.from));
        if limits.record {
            points.push(to);
        }
        if linalg::norm(it.current_derivative()) < 1e-11 && linalg::norm(linalg::sub(step.to, eq_v)) > 10.0 * eps {
            points.push(to);
            return Ok(Orbit { points, terminal: Terminal::ReachedEquilibrium });
        }
        if length > limits.max_arclength {
            points.push(to);
            return Ok(Orbit { points, terminal: Terminal::MaxLength });
        }
    }
    points.push(State::from_vec(it.x));
    Ok(Orbit { points, terminal: Terminal::MaxLength })
}
