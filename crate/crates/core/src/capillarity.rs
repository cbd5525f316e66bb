//! The capillarity diffusion matrix `B = Q P′` and the rescaled
//! traveling-wave field `dU/dη = Adj(B) G(U)`.
//!
//! `B` itself is bounded on the closed triangle even though `P′` blows up
//! at the water and gas edges: the divergent factors always meet a mobility
//! that vanishes faster. [`capillarity_matrix_extended`] evaluates `B` in that
//! grouped form so the field is defined up to and including the boundary.

use serde::{Deserialize, Serialize};

use crate::corey::{flux, jacobian, mobilities, FluidParams, State};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Vec2};

/// Saturations at or below this are treated as lying on an edge.
pub const BOUNDARY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViscosityMode {
    Identity,
    Capillarity,
}

/// The symmetric mobility matrix `Q`.
pub fn q_matrix(u: State, p: &FluidParams) -> Mat2 {
    let [lw, lo, lg] = mobilities(u, p);
    let total = lw + lo + lg;
    let (fw, fo) = (lw / total, lo / total);
    [[lw * (1.0 - fw), -lw * fo], [-lo * fw, lo * (1.0 - fo)]]
}

/// Derivatives of the capillary pressure differences: `(ς, τ)`.
pub fn pressure_slopes(u: State, p: &FluidParams) -> Result<(f64, f64)> {
    let sg = u.sg();
    if u.sw <= BOUNDARY_EPS || sg <= BOUNDARY_EPS {
        return Err(Error::BoundaryState);
    }
    let varsigma = 0.5 * p.c_ow * (1.0 + u.sw) / u.sw.powf(1.5);
    let tau = 0.5 * p.c_og * (1.0 + sg) / sg.powf(1.5);
    Ok((varsigma, tau))
}

/// `P′ = [[ς+τ, τ], [τ, τ]]`.
pub fn p_prime(u: State, p: &FluidParams) -> Result<Mat2> {
    let (vs, tau) = pressure_slopes(u, p)?;
    Ok([[vs + tau, tau], [tau, tau]])
}

/// `B = Q P′` for interior states.
pub fn capillarity_matrix(u: State, p: &FluidParams) -> Result<Mat2> {
    let pp = p_prime(u, p)?;
    Ok(linalg::matmul(&q_matrix(u, p), &pp))
}

/// `B` on the closed triangle, with the singular factors paired with the
/// mobilities that cancel them.
///
/// Writing `P′ = ς e₁e₁ᵀ + τ 𝟙𝟙ᵀ` gives `B = ς (Q e₁) e₁ᵀ + τ (Q 𝟙) 𝟙ᵀ`, and
/// `Q 𝟙 = f_g (λ_w, λ_o)`. The products `ς λ_w` and `τ λ_g` are then
/// `O(s^{1/2})` at their edges.
pub fn capillarity_matrix_extended(u: State, p: &FluidParams) -> Mat2 {
    let sw = u.sw.max(0.0);
    let so = u.so.max(0.0);
    let sg = (1.0 - sw - so).max(0.0);
    let lw = sw * sw / p.mu_w;
    let lo = so * so / p.mu_o;
    let lg = sg * sg / p.mu_g;
    let total = lw + lo + lg;
    // ς·λ_w and τ·λ_g without forming the divergent factors.
    let vs_lw = 0.5 * p.c_ow * (1.0 + sw) * sw.sqrt() / p.mu_w;
    let tau_lg = 0.5 * p.c_og * (1.0 + sg) * sg.sqrt() / p.mu_g;
    let fw = lw / total;
    // ς·f_w = ς λ_w / λ_T and τ·f_g = τ λ_g / λ_T.
    let vs_fw = vs_lw / total;
    let tau_fg = tau_lg / total;
    let (c0, c1) = (tau_fg * lw, tau_fg * lo);
    [[vs_lw * (1.0 - fw) + c0, c0], [-vs_fw * lo + c1, c1]]
}

/// Parameters of the traveling-wave field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwField {
    pub um: State,
    pub sigma: f64,
    pub params: FluidParams,
    pub mode: ViscosityMode,
}

impl TwField {
    pub fn new(um: State, sigma: f64, params: FluidParams, mode: ViscosityMode) -> Self {
        TwField { um, sigma, params, mode }
    }

    /// `G(x) = F(x) − F(U⁻) − σ (x − U⁻)`.
    pub fn rh_map(&self, x: Vec2) -> Vec2 {
        let fx = flux(State::from_vec(x), &self.params);
        let fm = flux(self.um, &self.params);
        linalg::axpy(-self.sigma, linalg::sub(x, self.um.vec()), linalg::sub(fx, fm))
    }

    /// Diffusion-side matrix multiplying `G` (identity or `Adj(B)`).
    pub fn mobility_factor(&self, x: Vec2) -> Mat2 {
        match self.mode {
            ViscosityMode::Identity => [[1.0, 0.0], [0.0, 1.0]],
            ViscosityMode::Capillarity => {
                linalg::adjugate(&capillarity_matrix_extended(State::from_vec(x), &self.params))
            }
        }
    }

    pub fn eval(&self, x: Vec2) -> Vec2 {
        let g = self.rh_map(x);
        match self.mode {
            ViscosityMode::Identity => g,
            ViscosityMode::Capillarity => linalg::matvec(&self.mobility_factor(x), g),
        }
    }

    /// Linearization at an equilibrium: `M(x) (DF(x) − σ I)`, exact because
    /// the derivative of `M` multiplies `G(x) = 0`.
    pub fn linearization(&self, x: Vec2) -> Mat2 {
        let mut j = jacobian(State::from_vec(x), &self.params);
        j[0][0] -= self.sigma;
        j[1][1] -= self.sigma;
        match self.mode {
            ViscosityMode::Identity => j,
            ViscosityMode::Capillarity => linalg::matmul(&self.mobility_factor(x), &j),
        }
    }
}

/// Free function form of the field evaluation.
pub fn tw_field(x: State, f: &TwField) -> Vec2 {
    f.eval(x.vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumKind {
    Repeller,
    Attractor,
    Saddle,
    RepellerSaddle,
    SaddleAttractor,
    CenterLike,
}

/// Zero-eigenvalue tolerance relative to the spectral radius.
pub const TOL_SN: f64 = 1e-7;
/// Field norm below which a point counts as an equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-9;

/// Classify an equilibrium of the traveling-wave field.
pub fn classify_equilibrium(x: State, f: &TwField) -> Result<EquilibriumKind> {
    let n = linalg::norm(f.eval(x.vec()));
    if n >= EQUILIBRIUM_TOL {
        return Err(Error::NotEquilibrium(n));
    }
    classify_linearization(&f.linearization(x.vec()))
}

/// Classification from a linearization matrix alone.
pub fn classify_linearization(m: &Mat2) -> Result<EquilibriumKind> {
    let ([a, b], im) = linalg::eigenvalues(m);
    if im != 0.0 {
        let radius = a.hypot(im);
        return Ok(if a.abs() <= TOL_SN * radius {
            EquilibriumKind::CenterLike
        } else if a > 0.0 {
            EquilibriumKind::Repeller
        } else {
            EquilibriumKind::Attractor
        });
    }
    let radius = a.abs().max(b.abs());
    if radius == 0.0 {
        return Err(Error::Degenerate);
    }
    let tol = TOL_SN * radius;
    let zero_a = a.abs() <= tol;
    let zero_b = b.abs() <= tol;
    Ok(match (zero_a, zero_b) {
        (true, true) => return Err(Error::Degenerate),
        (true, false) => {
            if b > 0.0 {
                EquilibriumKind::RepellerSaddle
            } else {
                EquilibriumKind::SaddleAttractor
            }
        }
        (false, true) => {
            if a > 0.0 {
                EquilibriumKind::RepellerSaddle
            } else {
                EquilibriumKind::SaddleAttractor
            }
        }
        (false, false) => match (a > 0.0, b > 0.0) {
            (true, true) => EquilibriumKind::Repeller,
            (false, false) => EquilibriumKind::Attractor,
            _ => EquilibriumKind::Saddle,
        },
    })
}
