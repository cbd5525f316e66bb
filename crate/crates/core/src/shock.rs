//! Shock triples and their Lax-type classification.

use serde::{Deserialize, Serialize};

use crate::corey::{char_speeds, rh_residual, FluidParams, State};
use crate::linalg;

/// Tolerance for deciding that a shock speed equals a characteristic speed.
pub const CHAR_TOL: f64 = 1e-9;

/// Position of a shock speed relative to the characteristic speeds at both states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaxTag {
    /// `λ_s(U⁺) < σ < λ_s(U⁻)` and `σ < λ_f(U⁺)`.
    LaxS,
    /// `λ_f(U⁺) < σ < λ_f(U⁻)` and `λ_s(U⁻) < σ`.
    LaxF,
    /// `λ_s < σ < λ_f` at both states.
    Crossing,
    /// `λ_f(U⁺) < σ < λ_s(U⁻)`.
    Overcompressive,
    /// Slow shock whose speed equals `λ_s(U⁻)`.
    LeftCharS,
    /// Fast shock whose speed equals `λ_f(U⁺)`.
    RightCharF,
    /// Crossing limit with `σ = λ_f(U⁻)`.
    LeftCharU,
    /// Any other equality between σ and a characteristic speed.
    OtherCharacteristic,
    /// Strict inequalities outside the cases above.
    Other,
}

/// `(U⁻, U⁺, σ)` satisfying the Rankine–Hugoniot condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockTriple {
    pub minus: State,
    pub plus: State,
    pub sigma: f64,
    pub tag: LaxTag,
}

impl ShockTriple {
    pub fn new(minus: State, plus: State, sigma: f64, p: &FluidParams) -> Self {
        ShockTriple { minus, plus, sigma, tag: lax_tag(minus, plus, sigma, p) }
    }

    pub fn rh_norm(&self, p: &FluidParams) -> f64 {
        linalg::norm(rh_residual(self.minus, self.plus, self.sigma, p))
    }

    /// Smallest margin by which σ sits strictly between the two speeds at
    /// both states; positive exactly for crossing shocks.
    pub fn crossing_margin(&self, p: &FluidParams) -> f64 {
        let (sm, fm) = char_speeds(self.minus, p);
        let (sp, fp) = char_speeds(self.plus, p);
        let s = self.sigma;
        (s - sm).min(fm - s).min(s - sp).min(fp - s)
    }
}

/// Classify a shock from strict comparisons of σ with the characteristic
/// speeds; a near-equality (within [`CHAR_TOL`]) yields a characteristic tag.
pub fn lax_tag(minus: State, plus: State, sigma: f64, p: &FluidParams) -> LaxTag {
    let (sm, fm) = char_speeds(minus, p);
    let (sp, fp) = char_speeds(plus, p);
    let eq = |a: f64| (sigma - a).abs() <= CHAR_TOL;
    let above = |a: f64| sigma > a + CHAR_TOL;
    let below = |a: f64| sigma < a - CHAR_TOL;
    let between = |lo: f64, hi: f64| above(lo) && below(hi);

    if eq(sm) || eq(fm) || eq(sp) || eq(fp) {
        return if eq(sm) && !eq(fm) && between(sp, fp) {
            LaxTag::LeftCharS
        } else if eq(fp) && !eq(sp) && between(sm, fm) {
            LaxTag::RightCharF
        } else if eq(fm) && !eq(sm) && between(sp, fp) {
            LaxTag::LeftCharU
        } else {
            LaxTag::OtherCharacteristic
        };
    }
    if between(sm, fm) && between(sp, fp) {
        LaxTag::Crossing
    } else if sp < sigma && sigma < sm && sigma < fp {
        LaxTag::LaxS
    } else if fp < sigma && sigma < fm && sm < sigma {
        LaxTag::LaxF
    } else if fp < sigma && sigma < sm {
        LaxTag::Overcompressive
    } else {
        LaxTag::Other
    }
}
