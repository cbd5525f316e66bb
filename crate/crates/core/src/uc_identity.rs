//! Closed-form undercompressive shocks for identity diffusion.
//!
//! For a right state `s_M` beyond the umbilic on an invariant line, the left
//! states admitting a saddle-to-saddle profile form an interval `(s_F, s_S)`
//! on the vertex side. Sweeping `s_M` produces a surface in state-speed space
//! whose edges are the characteristic boundaries tagged below.

use serde::{Deserialize, Serialize};

use crate::corey::State;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::reduced::{stable_quadratic, DistinguishedStates, InvariantLine};
use crate::shock::ShockTriple;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseTag {
    /// Fast endpoint fixed by `σ = λ_f(M)`.
    A,
    /// Fast endpoint fixed by `σ = λ_f(F)`.
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UCInterval {
    pub s_m: f64,
    pub s_s: f64,
    pub s_f: f64,
    pub case: CaseTag,
}

/// Admissible right states: `(lower, lower_is_open, upper)`.
pub fn admissible_range(nu: f64) -> (f64, bool, f64) {
    if nu > 1.0 {
        (nu / (1.0 + nu), true, 1.0)
    } else {
        (0.5, false, 1.0)
    }
}

/// Case used for the fast endpoint at `s_M`.
pub fn case_for(nu: f64, s_m: f64, ds: &DistinguishedStates) -> CaseTag {
    if nu > 8.0 {
        CaseTag::A
    } else if nu <= 1.0 {
        CaseTag::B
    } else if s_m <= ds.s_y_hat().unwrap_or(1.0) {
        CaseTag::A
    } else {
        CaseTag::B
    }
}

/// Slow endpoint `s_S(s_M)`.
pub fn slow_endpoint(nu: f64, s_m: f64) -> f64 {
    nu * s_m / (2.0 * (1.0 + nu) * s_m * s_m + nu * (1.0 - 2.0 * s_m))
}

/// Fast endpoint `s_F(s_M)` for the given case.
pub fn fast_endpoint(nu: f64, s_m: f64, case: CaseTag) -> Result<f64> {
    match case {
        CaseTag::A => {
            let roots = stable_quadratic(
                2.0 * s_m * (1.0 + nu),
                -(2.0 * s_m + 1.0) * nu,
                nu * s_m,
                1e-10,
            )?;
            Ok(*roots.last().unwrap())
        }
        CaseTag::B => {
            let roots = stable_quadratic(
                (2.0 * s_m - 1.0) * (nu + 1.0),
                -2.0 * s_m * (nu + 1.0),
                nu,
                1e-10,
            )?;
            Ok(roots[0])
        }
    }
}

/// The interval of left states with an undercompressive shock into `s_M`.
pub fn uc_interval(line: &InvariantLine, s_m: f64) -> Result<UCInterval> {
    uc_interval_nu(line.nu, s_m)
}

pub fn uc_interval_nu(nu: f64, s_m: f64) -> Result<UCInterval> {
    let s_u = nu / (1.0 + nu);
    let (lo, open, hi) = admissible_range(nu);
    if nu < 1.0 && s_m > s_u && s_m < 0.5 {
        return Err(Error::GapRegion { s_m, s_u });
    }
    let below = if open { s_m <= lo } else { s_m < lo };
    if below || s_m > hi || !s_m.is_finite() {
        return Err(Error::OutOfRange { value: s_m, lo, hi });
    }
    let ds = crate::reduced::distinguished_states(nu);
    let case = case_for(nu, s_m, &ds);
    Ok(UCInterval { s_m, s_s: slow_endpoint(nu, s_m), s_f: fast_endpoint(nu, s_m, case)?, case })
}

/// Undercompressive triple for a left state strictly inside the interval.
pub fn uc_shock(line: &InvariantLine, s_left: f64, s_m: f64) -> Result<ShockTriple> {
    let iv = uc_interval(line, s_m)?;
    if !(s_left > iv.s_f && s_left < iv.s_s) {
        return Err(Error::NotInInterval { s: s_left, lo: iv.s_f, hi: iv.s_s });
    }
    let sigma = line.shock_speed(s_left, s_m);
    Ok(ShockTriple::new(line.embed(s_left), line.embed(s_m), sigma, &line.params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    SCB,
    FCB,
    UCB,
    GUB,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 4] = [BoundaryTag::SCB, BoundaryTag::FCB, BoundaryTag::UCB, BoundaryTag::GUB];

    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::SCB => "SCB",
            BoundaryTag::FCB => "FCB",
            BoundaryTag::UCB => "UCB",
            BoundaryTag::GUB => "GUB",
        }
    }
}

/// Which state of the triple a boundary curve tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Minus,
    Plus,
}

/// A point of the surface over an invariant line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub s: f64,
    pub state: State,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub tag: BoundaryTag,
    pub side: Side,
    pub points: Vec<SurfacePoint>,
}

impl BoundaryCurve {
    pub fn start(&self) -> &SurfacePoint {
        &self.points[0]
    }
    pub fn end(&self) -> &SurfacePoint {
        self.points.last().unwrap()
    }
}

/// The pair of curves generated by one right state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePair {
    pub s_m: f64,
    pub interval: UCInterval,
    /// Left states and speeds, `s` from `s_F` to `s_S`.
    pub minus: Vec<SurfacePoint>,
    /// The right state with the speed range (endpoints only).
    pub plus: Vec<SurfacePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UCSurfaceIdentity {
    pub line: InvariantLine,
    pub curves: Vec<CurvePair>,
    pub boundaries: Vec<BoundaryCurve>,
    /// Raw `(s, σ(s; s_M))` samples for `s_M` beyond the mixed-contact state,
    /// when that state was located.
    pub compatibility_points: Option<Vec<SurfacePoint>>,
}

impl UCSurfaceIdentity {
    pub fn boundary(&self, tag: BoundaryTag, side: Side) -> Option<&BoundaryCurve> {
        self.boundaries.iter().find(|b| b.tag == tag && b.side == side)
    }

    pub fn tags(&self) -> Vec<BoundaryTag> {
        let mut t: Vec<_> = self.boundaries.iter().map(|b| b.tag).collect();
        t.sort();
        t.dedup();
        t
    }
}

/// Points per boundary polyline.
const BOUNDARY_SAMPLES: usize = 64;
/// Left-state samples per `C_M⁻` curve.
const CURVE_SAMPLES: usize = 24;

fn point(line: &InvariantLine, s: f64, sigma: f64) -> SurfacePoint {
    SurfacePoint { s, state: line.embed(s), sigma }
}

/// Sample `g` at `n` points of the parameter range `[a, b]`, replacing the
/// end samples with the exact corner values.
fn polyline<F>(a: f64, b: f64, n: usize, start: (f64, f64), end: (f64, f64), line: &InvariantLine, g: F) -> Vec<SurfacePoint>
where
    F: Fn(f64) -> (f64, f64),
{
    let mut pts = Vec::with_capacity(n);
    pts.push(point(line, start.0, start.1));
    for i in 1..n - 1 {
        let t = a + (b - a) * i as f64 / (n - 1) as f64;
        let (s, sig) = g(t);
        pts.push(point(line, s, sig));
    }
    pts.push(point(line, end.0, end.1));
    pts
}

/// Build the identity-diffusion surface over `line` with `n_m ≥ 2` right states.
pub fn build_surface_identity(line: &InvariantLine, n_m: usize) -> UCSurfaceIdentity {
    build_surface_identity_with(line, n_m, Execution::default())
}

pub fn build_surface_identity_with(line: &InvariantLine, n_m: usize, exec: Execution) -> UCSurfaceIdentity {
    let n_m = n_m.max(2);
    let nu = line.nu;
    let ds = line.distinguished_states();
    let (lo, open, hi) = admissible_range(nu);
    let mut s_values: Vec<f64> = (0..n_m)
        .map(|i| lo + (hi - lo) * i as f64 / (n_m - 1) as f64)
        .filter(|&s| !(open && s <= lo))
        .collect();
    if let Some(yh) = ds.s_y_hat().filter(|&v| v < 1.0) {
        s_values.push(yh);
    }
    s_values.sort_by(|a, b| a.total_cmp(b));
    s_values.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let curves = exec.map_slice(&s_values, |&s_m| {
        let iv = uc_interval(line, s_m).expect("sampled right state lies in the admissible range");
        let minus = (0..CURVE_SAMPLES)
            .map(|j| {
                let s = iv.s_f + (iv.s_s - iv.s_f) * j as f64 / (CURVE_SAMPLES - 1) as f64;
                point(line, s, line.shock_speed(s, s_m))
            })
            .collect();
        let plus = vec![
            point(line, s_m, line.shock_speed(iv.s_f, s_m)),
            point(line, s_m, line.shock_speed(iv.s_s, s_m)),
        ];
        CurvePair { s_m, interval: iv, minus, plus }
    });

    UCSurfaceIdentity { line: *line, curves, boundaries: surface_boundaries(line, &ds), compatibility_points: None }
}

fn surface_boundaries(line: &InvariantLine, ds: &DistinguishedStates) -> Vec<BoundaryCurve> {
    let nu = line.nu;
    let n = BOUNDARY_SAMPLES;
    let s_u = ds.s_u;
    let lam_u = 2.0;
    let lam_s = |s: f64| line.char_speeds(s).0;
    let lam_f = |s: f64| line.char_speeds(s).1;
    let sig = |a: f64, b: f64| line.shock_speed(a, b);
    let s_s = |m: f64| slow_endpoint(nu, m);
    let s_f = |m: f64, c: CaseTag| fast_endpoint(nu, m, c).expect("fast endpoint exists in its case range");
    let mut out = Vec::new();
    let mut push = |tag, side, points| out.push(BoundaryCurve { tag, side, points });

    // Lower end of the right-state range and the corner reached there.
    let (m_lo, corner_lo_minus, corner_lo_plus) = if nu > 1.0 {
        (s_u, (s_u, lam_u), (s_u, lam_u))
    } else {
        (0.5, (s_u, lam_u), (0.5, lam_u))
    };

    let d1_hat = (ds.s_b1, lam_s(ds.s_b1));
    let d_hat = (1.0, lam_s(ds.s_b1));
    // Slow characteristic boundary: left state at s_S, σ = λ_s(s_S).
    push(
        BoundaryTag::SCB,
        Side::Minus,
        polyline(1.0, m_lo, n, d1_hat, corner_lo_minus, line, |m| (s_s(m), lam_s(s_s(m)))),
    );
    push(
        BoundaryTag::SCB,
        Side::Plus,
        polyline(m_lo, 1.0, n, corner_lo_plus, d_hat, line, |m| (m, lam_s(s_s(m)))),
    );

    // Fast characteristic boundary (case A right states).
    let case_a_hi = if nu > 8.0 { Some(1.0) } else if nu > 1.0 { ds.s_y_hat() } else { None };
    if let Some(m_hi) = case_a_hi {
        let (far_minus, far_plus) = if nu > 8.0 {
            let b2s = ds.s_b2_star.expect("present for ν > 8");
            ((b2s, lam_f(1.0)), (1.0, lam_f(1.0)))
        } else {
            let (sy, syh) = ds.double_contact.expect("present for 1 < ν ≤ 8");
            ((sy, lam_f(syh)), (syh, lam_f(syh)))
        };
        push(
            BoundaryTag::FCB,
            Side::Minus,
            polyline(m_hi, s_u, n, far_minus, (s_u, lam_u), line, |m| (s_f(m, CaseTag::A), lam_f(m))),
        );
        push(
            BoundaryTag::FCB,
            Side::Plus,
            polyline(s_u, m_hi, n, (s_u, lam_u), far_plus, line, |m| (m, lam_f(m))),
        );
    }

    // Undercompressive characteristic boundary (case B right states).
    let case_b_lo = if nu > 8.0 {
        None
    } else if nu > 1.0 {
        ds.s_y_hat().filter(|&v| v < 1.0)
    } else {
        Some(0.5)
    };
    let d2_hat = (ds.s_b2, lam_f(ds.s_b2));
    let d_check = (1.0, lam_f(ds.s_b2));
    if let Some(m_lo_b) = case_b_lo {
        let (end_minus, end_plus) = if nu > 1.0 {
            let (sy, syh) = ds.double_contact.expect("present for 1 < ν ≤ 8");
            ((sy, lam_f(sy)), (syh, lam_f(sy)))
        } else {
            ((s_u, lam_u), (0.5, lam_u))
        };
        push(
            BoundaryTag::UCB,
            Side::Minus,
            polyline(1.0, m_lo_b, n, d2_hat, end_minus, line, |m| {
                let f = s_f(m, CaseTag::B);
                (f, lam_f(f))
            }),
        );
        push(
            BoundaryTag::UCB,
            Side::Plus,
            polyline(1.0, m_lo_b, n, d_check, end_plus, line, |m| (m, lam_f(s_f(m, CaseTag::B)))),
        );
    }

    // Genuine undercompressive boundary: right state pinned at the far end.
    let (g_lo, g_lo_sigma) = match ds.s_b2_star {
        Some(b2s) => (b2s, lam_f(1.0)),
        None => (ds.s_b2, lam_f(ds.s_b2)),
    };
    push(
        BoundaryTag::GUB,
        Side::Minus,
        polyline(g_lo, ds.s_b1, n, (g_lo, g_lo_sigma), d1_hat, line, |s| (s, sig(s, 1.0))),
    );
    push(
        BoundaryTag::GUB,
        Side::Plus,
        polyline(g_lo, ds.s_b1, n, (1.0, g_lo_sigma), d_hat, line, |s| (1.0, sig(s, 1.0))),
    );
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WaveKind {
    RarefactionSlow,
    RarefactionFast,
    ShockSlow,
    ShockFast,
    ShockUndercompressive,
    LeftCharShockSlow,
    RightCharShockFast,
    LeftCharShockUndercompressive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveLeg {
    pub kind: WaveKind,
    pub s_start: f64,
    pub s_end: f64,
    pub start: State,
    pub end: State,
    /// Speed at the start and end of the leg (equal for shocks).
    pub speed_start: f64,
    pub speed_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSequence {
    pub legs: Vec<WaveLeg>,
}

impl WaveSequence {
    /// Each leg ends no faster than the next one starts.
    pub fn is_speed_compatible(&self, tol: f64) -> bool {
        self.legs.windows(2).all(|w| w[0].speed_end <= w[1].speed_start + tol)
    }
}

/// Right state `M₃` of the slow rarefaction when `s_M` lies past the inflection.
pub fn transitional_m3(s_m: f64, s_u: f64) -> f64 {
    // Smaller root of (2s_M − 1)s² − 2 s_M s + s_U, in product form.
    let disc = (s_m * s_m - s_u * (2.0 * s_m - 1.0)).max(0.0);
    s_u / (s_m + disc.sqrt())
}

/// Fast rarefaction into the umbilic point followed by a slow wave to `s_M`.
pub fn transitional_rarefaction(line: &InvariantLine, s_left: f64, s_m: f64) -> Result<WaveSequence> {
    let nu = line.nu;
    if nu >= 1.0 {
        return Err(Error::OutOfRange { value: nu, lo: 0.0, hi: 1.0 });
    }
    let ds = line.distinguished_states();
    let s_u = ds.s_u;
    if !(0.0..s_u).contains(&s_left) {
        return Err(Error::OutOfRange { value: s_left, lo: 0.0, hi: s_u });
    }
    if !(s_m > s_u && s_m <= 0.5) {
        return Err(Error::OutOfRange { value: s_m, lo: s_u, hi: 0.5 });
    }
    let leg = |kind, a: f64, b: f64, va: f64, vb: f64| WaveLeg {
        kind,
        s_start: a,
        s_end: b,
        start: line.embed(a),
        end: line.embed(b),
        speed_start: va,
        speed_end: vb,
    };
    let lam_s = |s: f64| line.char_speeds(s).0;
    let lam_f = |s: f64| line.char_speeds(s).1;
    let mut legs = vec![leg(WaveKind::RarefactionFast, s_left, s_u, lam_f(s_left), 2.0)];
    if s_m <= ds.s_i {
        legs.push(leg(WaveKind::RarefactionSlow, s_u, s_m, 2.0, lam_s(s_m)));
    } else {
        let m3 = transitional_m3(s_m, s_u);
        let v3 = lam_s(m3);
        legs.push(leg(WaveKind::RarefactionSlow, s_u, m3, 2.0, v3));
        if m3 < s_m {
            let sigma = line.shock_speed(m3, s_m);
            legs.push(leg(WaveKind::LeftCharShockSlow, m3, s_m, sigma, sigma));
        }
    }
    Ok(WaveSequence { legs })
}
