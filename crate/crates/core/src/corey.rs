//! Corey model with quadratic relative permeabilities: fractional flows,
//! their Jacobian and eigenstructure, the umbilic point and its
//! viscosity-ratio classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Vec2};

/// Slack allowed when validating saturations that come out of arithmetic.
const STATE_SLACK: f64 = 1e-12;

/// A point of the saturation triangle, stored as water and oil saturations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub sw: f64,
    pub so: f64,
}

impl State {
    /// Build a validated state (tiny round-off outside the triangle is accepted).
    pub fn new(sw: f64, so: f64) -> Result<Self> {
        let s = State { sw, so };
        if !(sw.is_finite() && so.is_finite()) || !s.in_triangle(STATE_SLACK) {
            return Err(Error::InvalidState { sw, so });
        }
        Ok(s)
    }

    pub const fn from_vec(v: Vec2) -> Self {
        State { sw: v[0], so: v[1] }
    }

    pub const fn vec(self) -> Vec2 {
        [self.sw, self.so]
    }

    pub fn sg(self) -> f64 {
        1.0 - (self.sw + self.so)
    }

    pub fn in_triangle(self, tol: f64) -> bool {
        self.sw >= -tol && self.so >= -tol && self.sg() >= -tol
    }

    /// Distance to the closest edge of the triangle (negative outside).
    pub fn edge_distance(self) -> f64 {
        let sg = self.sg() / std::f64::consts::SQRT_2;
        self.sw.min(self.so).min(sg)
    }

    /// Nearest point of the closed triangle.
    pub fn clamp_to_triangle(self) -> State {
        let mut sw = self.sw.max(0.0);
        let mut so = self.so.max(0.0);
        let excess = sw + so - 1.0;
        if excess > 0.0 {
            sw -= 0.5 * excess;
            so -= 0.5 * excess;
            if sw < 0.0 {
                so += sw;
                sw = 0.0;
            }
            if so < 0.0 {
                sw += so;
                so = 0.0;
            }
        }
        State { sw, so }
    }

    pub fn distance(self, other: State) -> f64 {
        linalg::norm(linalg::sub(self.vec(), other.vec()))
    }
}

/// Phase viscosities and capillary constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidParams {
    pub mu_w: f64,
    pub mu_o: f64,
    pub mu_g: f64,
    pub c_ow: f64,
    pub c_og: f64,
}

impl FluidParams {
    pub fn new(mu_w: f64, mu_o: f64, mu_g: f64, c_ow: f64, c_og: f64) -> Result<Self> {
        let p = FluidParams { mu_w, mu_o, mu_g, c_ow, c_og };
        for (name, v) in [("mu_w", mu_w), ("mu_o", mu_o), ("mu_g", mu_g), ("c_ow", c_ow), ("c_og", c_og)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(p)
    }

    /// Viscosities only, with unit capillary constants.
    pub fn viscosities(mu_w: f64, mu_o: f64, mu_g: f64) -> Result<Self> {
        Self::new(mu_w, mu_o, mu_g, 1.0, 1.0)
    }

    pub fn mu(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Water => self.mu_w,
            Phase::Oil => self.mu_o,
            Phase::Gas => self.mu_g,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Water,
    Oil,
    Gas,
}

/// Phase mobilities `s_i² / μ_i` in the order water, oil, gas.
#[inline]
pub fn mobilities(u: State, p: &FluidParams) -> [f64; 3] {
    let sg = u.sg();
    [u.sw * u.sw / p.mu_w, u.so * u.so / p.mu_o, sg * sg / p.mu_g]
}

/// Fractional flows `(f_w, f_o)`.
#[inline]
pub fn flux(u: State, p: &FluidParams) -> Vec2 {
    let [lw, lo, lg] = mobilities(u, p);
    // Grouped so that exchanging water and oil gives bitwise-swapped flows.
    let total = (lw + lo) + lg;
    [lw / total, lo / total]
}

/// Analytic Jacobian `∂f_i/∂s_j` (rows: f_w, f_o; columns: s_w, s_o).
pub fn jacobian(u: State, p: &FluidParams) -> Mat2 {
    let [lw, lo, lg] = mobilities(u, p);
    let total = lw + lo + lg;
    let sg = u.sg();
    let dlw = 2.0 * u.sw / p.mu_w;
    let dlo = 2.0 * u.so / p.mu_o;
    let dlg = 2.0 * sg / p.mu_g;
    // d(total)/d(s_w), d(total)/d(s_o); s_g depends on both with slope -1.
    let dt = [dlw - dlg, dlo - dlg];
    let t2 = total * total;
    [
        [(dlw * total - lw * dt[0]) / t2, (-lw * dt[1]) / t2],
        [(-lo * dt[0]) / t2, (dlo * total - lo * dt[1]) / t2],
    ]
}

/// Eigenvalues and eigenvectors of the flux Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub lambda_s: f64,
    pub lambda_f: f64,
    pub r_s: Vec2,
    pub r_f: Vec2,
    pub l_s: Vec2,
    pub l_f: Vec2,
}

/// Relative tolerance for accepting a slightly negative discriminant.
const DISC_TOL: f64 = 1e-12;
/// Rank decision threshold for `J - λI` (relative to the Jacobian scale).
const RANK_TOL: f64 = 1e-10;

fn sign_convention(v: Vec2) -> Vec2 {
    let v = linalg::normalize(v);
    let lead = if v[0].abs() > 1e-14 { v[0] } else { v[1] };
    if lead < 0.0 {
        linalg::scale(-1.0, v)
    } else {
        v
    }
}

/// Null vector of the rank-one matrix `m`, or `None` when `m` is (numerically) zero.
fn null_vector(m: &Mat2, scale: f64) -> Option<Vec2> {
    let r0 = m[0];
    let r1 = m[1];
    let (n0, n1) = (linalg::norm(r0), linalg::norm(r1));
    if n0.max(n1) <= RANK_TOL * scale {
        return None;
    }
    let row = if n0 >= n1 { r0 } else { r1 };
    Some(sign_convention(linalg::perp(row)))
}

/// Eigen-decomposition of a real 2×2 matrix with real spectrum.
pub fn eigen_of(j: &Mat2) -> Result<EigenData> {
    let half_tr = 0.5 * linalg::trace(j);
    let half_diff = 0.5 * (j[0][0] - j[1][1]);
    let mut disc = half_diff * half_diff + j[0][1] * j[1][0];
    let scale = j.iter().flatten().fold(0.0_f64, |a, x| a.max(x.abs())).max(1e-300);
    if disc < 0.0 {
        if disc < -DISC_TOL * scale * scale {
            return Err(Error::ComplexEigenvalues(disc));
        }
        disc = 0.0;
    }
    let r = disc.sqrt();
    let (lambda_s, lambda_f) = (half_tr - r, half_tr + r);
    let shifted = |l: f64| [[j[0][0] - l, j[0][1]], [j[1][0], j[1][1] - l]];
    let right = |l: f64| null_vector(&shifted(l), scale);
    let left = |l: f64| null_vector(&linalg::transpose(&shifted(l)), scale);
    let (r_s, r_f, l_s, l_f) = match (right(lambda_s), right(lambda_f)) {
        (Some(rs), Some(rf)) => {
            let ls = left(lambda_s).unwrap_or(linalg::perp(rf));
            let lf = left(lambda_f).unwrap_or(linalg::perp(rs));
            (rs, rf, sign_convention(ls), sign_convention(lf))
        }
        // Scalar matrix (umbilic point): every direction is an eigenvector.
        _ => ([1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]),
    };
    Ok(EigenData { lambda_s, lambda_f, r_s, r_f, l_s, l_f })
}

/// Characteristic speeds and eigenvectors at `u`.
pub fn eigen(u: State, p: &FluidParams) -> Result<EigenData> {
    eigen_of(&jacobian(u, p))
}

/// Characteristic speeds `(λ_s, λ_f)` only.
pub fn char_speeds(u: State, p: &FluidParams) -> (f64, f64) {
    let j = jacobian(u, p);
    let half_tr = 0.5 * linalg::trace(&j);
    let half_diff = 0.5 * (j[0][0] - j[1][1]);
    let r = (half_diff * half_diff + j[0][1] * j[1][0]).max(0.0).sqrt();
    (half_tr - r, half_tr + r)
}

/// The interior state where the two characteristic speeds coincide.
pub fn umbilic_point(p: &FluidParams) -> State {
    let total = p.mu_w + p.mu_o + p.mu_g;
    State { sw: p.mu_w / total, so: p.mu_o / total }
}

/// Viscosity ratios `ν_Γ = (sum of the other two viscosities) / μ_Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViscosityRatios {
    pub nu_g: f64,
    pub nu_w: f64,
    pub nu_o: f64,
}

pub fn viscosity_ratios(p: &FluidParams) -> ViscosityRatios {
    ViscosityRatios {
        nu_g: (p.mu_w + p.mu_o) / p.mu_g,
        nu_w: (p.mu_o + p.mu_g) / p.mu_w,
        nu_o: (p.mu_w + p.mu_g) / p.mu_o,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UmbilicClass {
    I,
    #[serde(rename = "II_O")]
    IIO,
    #[serde(rename = "II_W")]
    IIW,
    #[serde(rename = "II_G")]
    IIG,
    Border,
}

impl std::fmt::Display for UmbilicClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UmbilicClass::I => "I",
            UmbilicClass::IIO => "II_O",
            UmbilicClass::IIW => "II_W",
            UmbilicClass::IIG => "II_G",
            UmbilicClass::Border => "border",
        })
    }
}

const BORDER_TOL: f64 = 1e-12;

/// Type I when every ratio exceeds one, type II_Γ when only `ν_Γ` is below one.
pub fn classify_umbilic(p: &FluidParams) -> UmbilicClass {
    let r = viscosity_ratios(p);
    let all = [(r.nu_o, UmbilicClass::IIO), (r.nu_w, UmbilicClass::IIW), (r.nu_g, UmbilicClass::IIG)];
    if all.iter().any(|(nu, _)| (nu - 1.0).abs() <= BORDER_TOL) {
        return UmbilicClass::Border;
    }
    let below: Vec<_> = all.iter().filter(|(nu, _)| *nu < 1.0).collect();
    match below.as_slice() {
        [] => UmbilicClass::I,
        [(_, class)] => *class,
        // Two ratios below one would need 2μ_a + μ_b + μ_c < μ_b + μ_c.
        _ => UmbilicClass::Border,
    }
}

/// `F(U⁺) − F(U⁻) − σ (U⁺ − U⁻)`.
pub fn rh_residual(um: State, up: State, sigma: f64, p: &FluidParams) -> Vec2 {
    let df = linalg::sub(flux(up, p), flux(um, p));
    let du = linalg::sub(up.vec(), um.vec());
    linalg::axpy(-sigma, du, df)
}

/// Shock speed between two Rankine–Hugoniot related states.
pub fn shock_speed(um: State, up: State, p: &FluidParams) -> Result<f64> {
    let du = linalg::sub(up.vec(), um.vec());
    if linalg::norm(du) <= 1e-10 {
        return Err(Error::CoincidentStates);
    }
    let df = linalg::sub(flux(up, p), flux(um, p));
    let (k, j) = if du[0].abs() >= du[1].abs() { (0, 1) } else { (1, 0) };
    let sigma = df[k] / du[k];
    let other = df[j] - sigma * du[j];
    if other.abs() > 1e-8 * (1.0 + sigma.abs()) {
        let alt = if du[j] != 0.0 { df[j] / du[j] } else { f64::NAN };
        return Err(Error::InconsistentSpeeds(sigma, alt));
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> FluidParams {
        FluidParams::new(1.0, 2.0, 0.75, 1.0, 1.0).unwrap()
    }

    #[test]
    fn vertex_flux() {
        assert_eq!(flux(State { sw: 1.0, so: 0.0 }, &p()), [1.0, 0.0]);
    }

    #[test]
    fn umbilic_is_a_flux_fixed_point() {
        let u = umbilic_point(&p());
        let f = flux(u, &p());
        assert!((f[0] - u.sw).abs() < 1e-14 && (f[1] - u.so).abs() < 1e-14);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let u = State { sw: 0.2, so: 0.3 };
        let j = jacobian(u, &p());
        let h = 1e-6;
        for c in 0..2 {
            let mut a = u.vec();
            let mut b = u.vec();
            a[c] += h;
            b[c] -= h;
            let fa = flux(State::from_vec(a), &p());
            let fb = flux(State::from_vec(b), &p());
            for r in 0..2 {
                let fd = (fa[r] - fb[r]) / (2.0 * h);
                assert!((fd - j[r][c]).abs() < 1e-8, "{r}{c}: {fd} vs {}", j[r][c]);
            }
        }
    }

    #[test]
    fn classification_of_reference_params() {
        assert_eq!(classify_umbilic(&p()), UmbilicClass::IIO);
        assert_eq!(classify_umbilic(&FluidParams::viscosities(1.0, 1.0, 1.0).unwrap()), UmbilicClass::I);
    }

    #[test]
    fn shock_speed_rejects_coincident() {
        let u = State { sw: 0.2, so: 0.2 };
        assert_eq!(shock_speed(u, u, &p()), Err(Error::CoincidentStates));
    }
}
