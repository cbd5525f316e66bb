//! Scalar reduction of the system on the three invariant lines joining a
//! vertex of the triangle to the umbilic point and beyond to the opposite edge.
//!
//! On a line the two non-vertex phases flow in a fixed proportion, so the
//! problem collapses to a Buckley–Leverett flux in the effective saturation
//! `s` (0 at the vertex, 1 on the opposite edge) with a single viscosity
//! ratio `ν`.

use serde::{Deserialize, Serialize};

use crate::corey::{FluidParams, Phase, State};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Vertex {
    G,
    W,
    O,
}

impl Vertex {
    pub const ALL: [Vertex; 3] = [Vertex::G, Vertex::W, Vertex::O];

    /// Phase saturated at the vertex.
    pub fn phase(self) -> Phase {
        match self {
            Vertex::G => Phase::Gas,
            Vertex::W => Phase::Water,
            Vertex::O => Phase::Oil,
        }
    }

    /// The two phases mixed along the line, in (w, o, g) order.
    pub fn line_phases(self) -> (Phase, Phase) {
        match self {
            Vertex::G => (Phase::Water, Phase::Oil),
            Vertex::W => (Phase::Oil, Phase::Gas),
            Vertex::O => (Phase::Water, Phase::Gas),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Vertex::G => "G",
            Vertex::W => "W",
            Vertex::O => "O",
        }
    }

    /// Name of the edge endpoint reached at `s = 1`.
    pub fn far_end_name(self) -> &'static str {
        match self {
            Vertex::G => "D",
            Vertex::W => "E",
            Vertex::O => "B",
        }
    }
}

impl std::str::FromStr for Vertex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "G" => Ok(Vertex::G),
            "W" => Ok(Vertex::W),
            "O" => Ok(Vertex::O),
            other => Err(Error::Precondition(format!("unknown line vertex '{other}' (expected G, W or O)"))),
        }
    }
}

/// An invariant line with its effective viscosities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantLine {
    pub vertex: Vertex,
    pub nu: f64,
    /// Sum of the two line-phase viscosities.
    pub mu_ab: f64,
    /// Viscosity of the vertex phase.
    pub mu_vertex: f64,
    pub params: FluidParams,
}

fn unit(phase: Phase) -> State {
    match phase {
        Phase::Water => State { sw: 1.0, so: 0.0 },
        Phase::Oil => State { sw: 0.0, so: 1.0 },
        Phase::Gas => State { sw: 0.0, so: 0.0 },
    }
}

impl InvariantLine {
    pub fn new(vertex: Vertex, params: FluidParams) -> Self {
        let (a, b) = vertex.line_phases();
        let mu_ab = params.mu(a) + params.mu(b);
        let mu_vertex = params.mu(vertex.phase());
        InvariantLine { vertex, nu: mu_ab / mu_vertex, mu_ab, mu_vertex, params }
    }

    /// `s = 0` endpoint.
    pub fn vertex_state(&self) -> State {
        unit(self.vertex.phase())
    }

    /// `s = 1` endpoint on the opposite edge.
    pub fn far_end(&self) -> State {
        self.embed(1.0)
    }

    pub fn embed(&self, s: f64) -> State {
        let (a, b) = self.vertex.line_phases();
        let v = self.vertex_state().vec();
        let wa = s * self.params.mu(a) / self.mu_ab;
        let wb = s * self.params.mu(b) / self.mu_ab;
        let pa = unit(a).vec();
        let pb = unit(b).vec();
        // Barycentric combination of the three vertices.
        let x = linalg::add(linalg::scale(1.0 - s, v), linalg::add(linalg::scale(wa, pa), linalg::scale(wb, pb)));
        State::from_vec(x)
    }

    /// Orthogonal projection onto the segment, with its distance.
    pub fn project_with_distance(&self, u: State) -> (f64, f64) {
        let v = self.vertex_state().vec();
        let d = linalg::sub(self.far_end().vec(), v);
        let t = (linalg::dot(linalg::sub(u.vec(), v), d) / linalg::dot(d, d)).clamp(0.0, 1.0);
        (t, u.distance(self.embed(t)))
    }

    pub fn project(&self, u: State) -> Result<f64> {
        let (s, dist) = self.project_with_distance(u);
        if dist > 1e-9 {
            return Err(Error::NotOnLine(dist));
        }
        Ok(s)
    }

    /// Unit direction from the vertex towards the far end.
    pub fn direction(&self) -> [f64; 2] {
        linalg::normalize(linalg::sub(self.far_end().vec(), self.vertex_state().vec()))
    }

    fn denom(&self, s: f64) -> f64 {
        s * s / self.mu_ab + (1.0 - s) * (1.0 - s) / self.mu_vertex
    }

    pub fn lambda_ab(&self, s: f64) -> (f64, f64) {
        let d = self.denom(s);
        let la = 2.0 * s / (self.mu_ab * d);
        let lb = 2.0 * s * (1.0 - s) / (self.mu_ab * self.mu_vertex * d * d);
        (la, lb)
    }

    pub fn char_speeds(&self, s: f64) -> (f64, f64) {
        let (a, b) = self.lambda_ab(s);
        (a.min(b), a.max(b))
    }

    pub fn flux(&self, s: f64) -> f64 {
        effective_flux(s, self.nu)
    }

    /// Shock speed between two effective saturations.
    pub fn shock_speed(&self, s1: f64, s2: f64) -> f64 {
        shock_speed_reduced(s1, s2, self.nu)
    }

    pub fn distinguished_states(&self) -> DistinguishedStates {
        distinguished_states(self.nu)
    }

    /// Whether the mixed slow–fast contact state lies inside the triangle.
    pub fn mixed_contact_inside(&self) -> bool {
        let (a, b) = self.vertex.line_phases();
        let nu_minus = (self.params.mu(a) - self.params.mu(b)) / self.mu_vertex;
        nu_minus * nu_minus / self.nu <= 8.0
    }
}

/// `s² / (s² + ν (1 − s)²)`.
#[inline]
pub fn effective_flux(s: f64, nu: f64) -> f64 {
    let a = s * s;
    a / (a + nu * (1.0 - s) * (1.0 - s))
}

/// Derivative of [`effective_flux`] in `s` (the speed `λ_b`).
pub fn effective_flux_derivative(s: f64, nu: f64) -> f64 {
    let q = s * s + nu * (1.0 - s) * (1.0 - s);
    2.0 * nu * s * (1.0 - s) / (q * q)
}

/// `λ_a` in terms of `ν` only.
pub fn lambda_a_reduced(s: f64, nu: f64) -> f64 {
    2.0 * s / (s * s + nu * (1.0 - s) * (1.0 - s))
}

/// Slow and fast speeds of the reduced problem in terms of `ν`.
pub fn char_speeds_reduced(s: f64, nu: f64) -> (f64, f64) {
    let a = lambda_a_reduced(s, nu);
    let b = effective_flux_derivative(s, nu);
    (a.min(b), a.max(b))
}

/// Chord slope of the effective flux, written without subtraction of
/// nearly equal flux values: `σ = (s₁ + s₂ − 2 s₁ s₂) ν / (q(s₁) q(s₂))`.
pub fn shock_speed_reduced(s1: f64, s2: f64, nu: f64) -> f64 {
    let q = |s: f64| s * s + nu * (1.0 - s) * (1.0 - s);
    nu * (s1 + s2 - 2.0 * s1 * s2) / (q(s1) * q(s2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistinguishedStates {
    pub nu: f64,
    /// Umbilic point.
    pub s_u: f64,
    /// Fast double contact pair, present iff `1 < ν ≤ 8`.
    pub double_contact: Option<(f64, f64)>,
    /// Fast extension of the far end (`σ(s;1) = λ_f(s)`).
    pub s_b2: f64,
    /// Slow extension of the far end (`σ(s;1) = λ_s(s)`).
    pub s_b1: f64,
    /// Extension of the umbilic point.
    pub s_b0: f64,
    /// Inflection of the effective flux.
    pub s_i: f64,
    /// State with `σ(s;1) = λ_f(1)`, present iff `ν > 8`.
    pub s_b2_star: Option<f64>,
}

impl DistinguishedStates {
    pub fn s_y(&self) -> Option<f64> {
        self.double_contact.map(|(a, _)| a)
    }
    pub fn s_y_hat(&self) -> Option<f64> {
        self.double_contact.map(|(_, b)| b)
    }
}

pub fn distinguished_states(nu: f64) -> DistinguishedStates {
    let s_u = nu / (1.0 + nu);
    let double_contact = (nu > 1.0 && nu <= 8.0).then(|| {
        let s_y = 0.5 * (2.0 * nu / (nu + 1.0)).sqrt();
        let s_yh = (nu + (2.0 * nu * (nu + 1.0)).sqrt()) / (2.0 * (nu + 2.0));
        (s_y, s_yh.min(1.0))
    });
    let r = (nu + 1.0).sqrt();
    let s_b2_star = (nu > 8.0).then(|| (3.0 * nu + (nu * (nu - 8.0)).sqrt()) / (4.0 * (nu + 1.0)));
    DistinguishedStates {
        nu,
        s_u,
        double_contact,
        s_b2: (r - 1.0) / r,
        s_b1: nu / (2.0 + nu),
        s_b0: 0.5,
        s_i: inflection(s_u),
        s_b2_star,
    }
}

/// Root in [0, 1] of `2s³ − 3s² + s_U`, which is decreasing on that interval.
fn inflection(s_u: f64) -> f64 {
    let p = |s: f64| 2.0 * s * s * s - 3.0 * s * s + s_u;
    let dp = |s: f64| 6.0 * s * s - 6.0 * s;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut s = 0.5;
    for _ in 0..200 {
        let v = p(s);
        if v == 0.0 {
            return s;
        }
        if v > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let d = dp(s);
        let newton = if d != 0.0 { s - v / d } else { f64::NAN };
        s = if newton.is_finite() && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-16 || (v / d).abs() < 1e-17 {
            break;
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootChoice {
    Lower,
    Upper,
}

/// Roots of `a x² + b x + c` without cancellation, ascending; handles `a = 0`.
pub fn stable_quadratic(a: f64, b: f64, c: f64, disc_slack: f64) -> Result<Vec<f64>> {
    let mut disc = b * b - 4.0 * a * c;
    let scale = (b * b).max((4.0 * a * c).abs()).max(1e-300);
    if disc < 0.0 {
        if disc < -disc_slack * scale {
            return Err(Error::NoRealRoot);
        }
        disc = 0.0;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = Vec::with_capacity(2);
    if a != 0.0 && q != 0.0 {
        roots.push(q / a);
        roots.push(c / q);
    } else if a != 0.0 {
        roots.push(q / a);
        roots.push(q / a);
    } else if b != 0.0 {
        roots.push(-c / b);
    } else {
        return Err(Error::NoRealRoot);
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    Ok(roots)
}

/// Solve the effective shock identity for the unknown partner of `s_known`
/// at speed `σ`.
pub fn effective_shock_partner(s_known: f64, sigma: f64, nu: f64, which: RootChoice) -> Result<f64> {
    let k = s_known;
    let big_k = k * k + nu * (1.0 - k) * (1.0 - k);
    let m = sigma * big_k / nu;
    // m [(1+ν) s² − 2ν s + ν] − (1 − 2k) s − k = 0
    let a = m * (1.0 + nu);
    let b = -2.0 * m * nu - (1.0 - 2.0 * k);
    let c = m * nu - k;
    let roots = stable_quadratic(a, b, c, 1e-12)?;
    let r = match which {
        RootChoice::Lower => roots[0],
        RootChoice::Upper => *roots.last().unwrap(),
    };
    if !(-1e-12..=1.0 + 1e-12).contains(&r) {
        return Err(Error::RootOutOfRange(r));
    }
    Ok(r.clamp(0.0, 1.0))
}
