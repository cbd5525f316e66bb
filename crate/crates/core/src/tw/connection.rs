//! Saddle-to-saddle connections: the difference vector on a section and the
//! bisection drivers built on it.

use serde::{Deserialize, Serialize};

use crate::capillarity::{classify_linearization, EquilibriumKind, TwField, ViscosityMode};
use crate::corey::{char_speeds, shock_speed, FluidParams, State};
use crate::error::{Error, Result};
use crate::hugoniot::{rh_points_at_speed, solve_rh_near};
use crate::linalg::{self, Vec2};
use crate::shock::ShockTriple;

use super::manifold::{integrate_manifold, ManifoldKind, ManifoldLimits, SotomayorLine, Terminal};

/// Parameters shared by every traveling-wave field of one problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub params: FluidParams,
    pub mode: ViscosityMode,
}

impl FieldSpec {
    pub fn new(params: FluidParams, mode: ViscosityMode) -> Self {
        FieldSpec { params, mode }
    }

    pub fn field(&self, um: State, sigma: f64) -> TwField {
        TwField::new(um, sigma, self.params, self.mode)
    }

    pub fn classify(&self, um: State, x: State, sigma: f64) -> Result<EquilibriumKind> {
        classify_linearization(&self.field(um, sigma).linearization(x.vec()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionOptions {
    /// Convergence target for the difference vector.
    pub delta: f64,
    pub limits: ManifoldLimits,
    /// Re-run seeding at half offset and require agreement.
    pub richardson: bool,
    pub max_iter: usize,
    /// Half-length of automatically chosen sections.
    pub section_half_length: f64,
}

impl Default for ConnectionOptions {
    fn default() -> Self {
        ConnectionOptions {
            delta: 1e-7,
            limits: ManifoldLimits::default(),
            richardson: true,
            max_iter: 200,
            section_half_length: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceVector {
    pub d: Vec2,
    pub from_unstable: State,
    pub to_stable: State,
    /// Signed length of `d` along the section direction.
    pub along: f64,
}

impl DifferenceVector {
    pub fn norm(&self) -> f64 {
        linalg::norm(self.d)
    }
}

/// Section hit of one manifold, trying the branch facing `towards` first.
fn section_hit(
    eq: State,
    kind: ManifoldKind,
    towards: State,
    field: &TwField,
    section: &SotomayorLine,
    limits: &ManifoldLimits,
) -> Result<State> {
    let (v, _, _) = super::manifold::manifold_direction(eq, kind, field, limits.allow_center)?;
    let facing = linalg::dot(v, linalg::sub(towards.vec(), eq.vec()));
    let first = if facing >= 0.0 { 1.0 } else { -1.0 };
    let mut last_terminal = Terminal::MaxLength;
    for sign in [first, -first] {
        match integrate_manifold(eq, kind, sign, field, section, limits) {
            Ok(o) if o.terminal == Terminal::HitSection => return Ok(o.last()),
            Ok(o) => last_terminal = o.terminal,
            Err(e @ Error::DegenerateDirection(_)) => return Err(e),
            Err(_) => {}
        }
    }
    Err(Error::NoSectionHit(format!("{kind:?} manifold ended with {last_terminal:?}")))
}

fn raw_difference(
    um: State,
    up: State,
    field: &TwField,
    section: &SotomayorLine,
    limits: &ManifoldLimits,
) -> Result<DifferenceVector> {
    let a = section_hit(um, ManifoldKind::Unstable, up, field, section, limits)?;
    let stable_limits = ManifoldLimits { allow_center: false, ..*limits };
    let b = section_hit(up, ManifoldKind::Stable, um, field, section, &stable_limits)?;
    // Both hits lie on the section, so only the component along it is kept.
    let along = linalg::dot(linalg::sub(b.vec(), a.vec()), section.direction);
    Ok(DifferenceVector { d: linalg::scale(along, section.direction), from_unstable: a, to_stable: b, along })
}

/// `d(U⁻, U⁺) = (stable hit of U⁺) − (unstable hit of U⁻)` on `section`.
pub fn difference_vector(
    um: State,
    up: State,
    sigma: f64,
    spec: &FieldSpec,
    section: &SotomayorLine,
    opts: &ConnectionOptions,
) -> Result<DifferenceVector> {
    let field = spec.field(um, sigma);
    let mut limits = opts.limits;
    let mut dv = raw_difference(um, up, &field, section, &limits)?;
    if !opts.richardson {
        return Ok(dv);
    }
    for _ in 0..4 {
        limits.eps0 *= 0.5;
        let half = raw_difference(um, up, &field, section, &limits)?;
        let moved = linalg::norm(linalg::sub(half.from_unstable.vec(), dv.from_unstable.vec()))
            .max(linalg::norm(linalg::sub(half.to_stable.vec(), dv.to_stable.vec())));
        dv = half;
        if moved < 10.0 * opts.delta {
            break;
        }
    }
    Ok(dv)
}

/// Difference vector with the section re-chosen (rotated by 30° steps) when
/// the default one is missed.
pub fn difference_vector_auto(
    um: State,
    up: State,
    sigma: f64,
    spec: &FieldSpec,
    opts: &ConnectionOptions,
) -> Result<(DifferenceVector, SotomayorLine)> {
    let base = SotomayorLine::bisector(um, up, opts.section_half_length);
    let mut last = None;
    for k in 0..6 {
        let angle = (if k % 2 == 0 { 1.0 } else { -1.0 }) * ((k + 1) / 2) as f64 * std::f64::consts::PI / 6.0;
        let section = base.rotated(angle);
        match difference_vector(um, up, sigma, spec, &section, opts) {
            Ok(d) => return Ok((d, section)),
            Err(e @ Error::NoSectionHit(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::NoSectionHit("no section candidate".into())))
}

/// Both states are saddles of the field at speed σ.
pub fn both_saddles(um: State, up: State, sigma: f64, spec: &FieldSpec) -> bool {
    matches!(spec.classify(um, um, sigma), Ok(EquilibriumKind::Saddle))
        && matches!(spec.classify(um, up, sigma), Ok(EquilibriumKind::Saddle))
}

/// Bisection on σ between two right states whose difference
/// vectors point to opposite sides of the section.
pub fn find_saddle_saddle(
    um: State,
    up_prev: State,
    up_next: State,
    section: &SotomayorLine,
    spec: &FieldSpec,
    opts: &ConnectionOptions,
) -> Result<ShockTriple> {
    let p = &spec.params;
    let mut sp = shock_speed(um, up_prev, p)?;
    let mut sn = shock_speed(um, up_next, p)?;
    let mut upp = up_prev;
    let mut upn = up_next;
    let mut dp = difference_vector(um, upp, sp, spec, section, opts)?;
    let mut dn = difference_vector(um, upn, sn, spec, section, opts)?;
    bisect_sigma(um, (&mut sp, &mut upp, &mut dp), (&mut sn, &mut upn, &mut dn), section, spec, opts)
}

/// Core of [`find_saddle_saddle`] with the bracket already evaluated.
pub fn bisect_sigma(
    um: State,
    prev: (&mut f64, &mut State, &mut DifferenceVector),
    next: (&mut f64, &mut State, &mut DifferenceVector),
    section: &SotomayorLine,
    spec: &FieldSpec,
    opts: &ConnectionOptions,
) -> Result<ShockTriple> {
    let p = &spec.params;
    let (sp, upp, dp) = prev;
    let (sn, upn, dn) = next;
    let converged = |dp: &DifferenceVector, dn: &DifferenceVector| {
        dp.norm().max(dn.norm()) <= opts.delta || dp.norm().min(dn.norm()) <= 0.01 * opts.delta
    };
    // An end that already closes the connection needs no sign change.
    if dp.along * dn.along > 0.0 && !converged(dp, dn) {
        return Err(Error::Precondition("difference vectors at the bracket ends point the same way".into()));
    }
    for _ in 0..opts.max_iter {
        if converged(dp, dn) {
            let (s, u) = if dp.norm() <= dn.norm() { (*sp, *upp) } else { (*sn, *upn) };
            return Ok(ShockTriple::new(um, u, s, p));
        }
        if (*sp - *sn).abs() <= 1e-15 * (1.0 + sp.abs()) {
            return Err(Error::BracketLost(format!(
                "σ bracket collapsed with ‖d‖ = {:e}",
                dp.norm().min(dn.norm())
            )));
        }
        let sc = 0.5 * (*sp + *sn);
        let w = 0.5;
        let guess = linalg::add(linalg::scale(1.0 - w, upp.vec()), linalg::scale(w, upn.vec()));
        let upc = solve_rh_near(um, sc, p, guess)
            .filter(|u| u.distance(State::from_vec(guess)) <= upp.distance(*upn) + 1e-9)
            .ok_or_else(|| Error::BracketLost(format!("no Hugoniot point at σ = {sc}")))?;
        if !both_saddles(um, upc, sc, spec) {
            return Err(Error::BracketLost(format!("σ = {sc} leaves the saddle–saddle range")));
        }
        let dc = difference_vector(um, upc, sc, spec, section, opts)
            .map_err(|e| Error::BracketLost(format!("difference vector failed: {e}")))?;
        if dp.along * dc.along > 0.0 {
            *sp = sc;
            *upp = upc;
            *dp = dc;
        } else {
            *sn = sc;
            *upn = upc;
            *dn = dc;
        }
    }
    Err(Error::MaxIterations(opts.max_iter))
}

/// Bisect between a left state with a connection and one
/// without, using `has_connection` on each midpoint.
///
/// Both ends are tested first; a segment whose ends agree is rejected.
pub fn find_boundary_point<F>(ul_in: State, ul_out: State, delta: f64, max_iter: usize, mut has_connection: F) -> Result<(State, State)>
where
    F: FnMut(State) -> Result<bool>,
{
    if !has_connection(ul_in)? {
        return Err(Error::Precondition("inner seed has no connection".into()));
    }
    if has_connection(ul_out)? {
        return Err(Error::Precondition("outer seed has a connection".into()));
    }
    bisect_boundary(ul_in, ul_out, delta, max_iter, has_connection)
}

/// Bisection of [`find_boundary_point`] for ends already known to straddle the boundary.
pub(crate) fn bisect_boundary<F>(ul_in: State, ul_out: State, delta: f64, max_iter: usize, mut has_connection: F) -> Result<(State, State)>
where
    F: FnMut(State) -> Result<bool>,
{
    let mut a = ul_in;
    let mut b = ul_out;
    for _ in 0..max_iter {
        if a.distance(b) <= delta {
            return Ok((a, b));
        }
        let mid = State::from_vec(linalg::scale(0.5, linalg::add(a.vec(), b.vec())));
        if has_connection(mid)? {
            a = mid;
        } else {
            b = mid;
        }
    }
    Err(Error::MaxIterations(max_iter))
}

/// Characteristic condition defining a boundary family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CharCondition {
    /// `σ = λ_s(U⁻)`: left state is a repeller-saddle.
    SlowLeft,
    /// `σ = λ_f(U⁺)`: right state is a saddle-attractor.
    FastRight,
    /// `σ = λ_f(U⁻)`: left state is a saddle-attractor.
    FastLeft,
}

/// Partner of `ul` satisfying `cond`, closest to `ur_guess`.
pub fn characteristic_partner(ul: State, ur_guess: State, cond: CharCondition, spec: &FieldSpec) -> Result<(State, f64)> {
    let p = &spec.params;
    match cond {
        CharCondition::SlowLeft | CharCondition::FastLeft => {
            let (ls, lf) = char_speeds(ul, p);
            let sigma = if cond == CharCondition::SlowLeft { ls } else { lf };
            let near = solve_rh_near(ul, sigma, p, ur_guess.vec()).filter(|u| u.distance(ul) > 1e-6);
            let candidates = match near {
                Some(u) => vec![u],
                None => rh_points_at_speed(ul, sigma, p),
            };
            candidates
                .into_iter()
                .filter(|u| matches!(spec.classify(ul, *u, sigma), Ok(EquilibriumKind::Saddle)))
                .min_by(|a, b| a.distance(ur_guess).total_cmp(&b.distance(ur_guess)))
                .map(|u| (u, sigma))
                .ok_or(Error::PartnerNotFound)
        }
        CharCondition::FastRight => fast_right_partner(ul, ur_guess, p),
    }
}

/// Newton on `(U, σ)` for `G(U; σ) = 0`, `σ = λ_f(U)`.
fn fast_right_partner(ul: State, guess: State, p: &FluidParams) -> Result<(State, f64)> {
    let fl = crate::corey::flux(ul, p);
    let resid = |x: [f64; 3]| {
        let u = State::from_vec([x[0], x[1]]);
        let f = crate::corey::flux(u, p);
        let lf = char_speeds(u, p).1;
        [f[0] - fl[0] - x[2] * (x[0] - ul.sw), f[1] - fl[1] - x[2] * (x[1] - ul.so), x[2] - lf]
    };
    let mut x = [guess.sw, guess.so, shock_speed(ul, guess, p).unwrap_or_else(|_| char_speeds(guess, p).1)];
    for _ in 0..50 {
        let r = resid(x);
        let rn = r.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if rn < 1e-14 {
            break;
        }
        let h = 1e-7;
        let mut jac = [[0.0; 3]; 3];
        for c in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let (rp, rm) = (resid(xp), resid(xm));
            for row in 0..3 {
                jac[row][c] = (rp[row] - rm[row]) / (2.0 * h);
            }
        }
        let dx = solve3(jac, r).ok_or(Error::PartnerNotFound)?;
        for i in 0..3 {
            x[i] -= dx[i];
        }
    }
    let u = State::from_vec([x[0], x[1]]);
    let r = resid(x);
    if r.iter().any(|v| v.abs() > 1e-10) || !u.in_triangle(1e-9) || u.distance(ul) < 1e-6 {
        return Err(Error::PartnerNotFound);
    }
    Ok((u.clamp_to_triangle(), x[2]))
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&a);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut out = [0.0; 3];
    for c in 0..3 {
        let mut m = a;
        for r in 0..3 {
            m[r][c] = b[r];
        }
        out[c] = det(&m) / d;
    }
    Some(out)
}

/// Difference vector for a characteristic-boundary trial triple: the
/// degenerate state contributes its strong (or, for a saddle-node left state,
/// centre) manifold.
fn characteristic_difference(ul: State, ur: State, sigma: f64, spec: &FieldSpec, section: &SotomayorLine, opts: &ConnectionOptions) -> Result<DifferenceVector> {
    let mut o = *opts;
    o.limits.allow_center = true;
    difference_vector(ul, ur, sigma, spec, section, &o)
}

/// Locate the boundary triple on the segment `[ul_m, ul_p]`
/// where the characteristic connection closes.
pub fn find_saddle_saddlenode(
    ul_m: State,
    ul_p: State,
    ur0: State,
    section: &SotomayorLine,
    cond: CharCondition,
    spec: &FieldSpec,
    opts: &ConnectionOptions,
) -> Result<ShockTriple> {
    let p = &spec.params;
    let (mut a, mut b) = (ul_m, ul_p);
    let (ur_a, sa) = characteristic_partner(a, ur0, cond, spec)?;
    let (ur_b, sb) = characteristic_partner(b, ur_a, cond, spec)?;
    let mut da = characteristic_difference(a, ur_a, sa, spec, section, opts)?;
    let db = characteristic_difference(b, ur_b, sb, spec, section, opts)?;
    let mut running = (ur_a, sa);
    let mut best = (a, ur_a, sa, da);
    if db.norm() < da.norm() {
        best = (b, ur_b, sb, db);
    }
    if da.along * db.along > 0.0 && best.3.norm() > opts.delta {
        return Err(Error::Precondition("trial left states do not straddle the boundary".into()));
    }
    for _ in 0..opts.max_iter {
        if best.3.norm() <= opts.delta {
            return Ok(ShockTriple::new(best.0, best.1, best.2, p));
        }
        if a.distance(b) < 1e-15 {
            break;
        }
        let mid = State::from_vec(linalg::scale(0.5, linalg::add(a.vec(), b.vec())));
        let (ur, s) = characteristic_partner(mid, running.0, cond, spec)?;
        let dm = characteristic_difference(mid, ur, s, spec, section, opts)?;
        running = (ur, s);
        if dm.norm() < best.3.norm() {
            best = (mid, ur, s, dm);
        }
        if dm.along * da.along > 0.0 {
            a = mid;
            da = dm;
        } else {
            b = mid;
        }
    }
    if best.3.norm() <= opts.delta {
        return Ok(ShockTriple::new(best.0, best.1, best.2, p));
    }
    Err(Error::MaxIterations(opts.max_iter))
}

/// Controls for [`connection_search`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub connection: ConnectionOptions,
    /// Number of σ samples across the search window.
    pub sigma_samples: usize,
    /// Lattice used to seed right states at each sampled σ.
    pub rh_lattice: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { connection: ConnectionOptions::default(), sigma_samples: 48, rh_lattice: 40 }
    }
}

/// A saddle right state followed through consecutive σ samples.
#[derive(Debug, Clone)]
struct PartnerArc {
    samples: Vec<(f64, State)>,
}

/// Right states that are saddles together with `ul`, organised into arcs in σ.
fn partner_arcs(ul: State, sigmas: &[f64], spec: &FieldSpec, lattice: usize) -> Vec<PartnerArc> {
    let p = &spec.params;
    let mut open: Vec<PartnerArc> = Vec::new();
    let mut closed = Vec::new();
    let mut prev_sigma = None;
    for &sigma in sigmas {
        if !matches!(spec.classify(ul, ul, sigma), Ok(EquilibriumKind::Saddle)) {
            closed.append(&mut open);
            prev_sigma = None;
            continue;
        }
        let mut found: Vec<State> = crate::hugoniot::rh_points_at_speed_with(ul, sigma, p, lattice, crate::exec::Execution::Sequential)
            .into_iter()
            .filter(|u| u.distance(ul) > 1e-6 && matches!(spec.classify(ul, *u, sigma), Ok(EquilibriumKind::Saddle)))
            .collect();
        // Continue existing arcs first: predict with the previous right state.
        let mut next_open = Vec::new();
        for mut arc in open.drain(..) {
            let (_, last) = *arc.samples.last().unwrap();
            let tracked = solve_rh_near(ul, sigma, p, last.vec())
                .filter(|u| u.distance(ul) > 1e-6 && u.distance(last) < 0.1)
                .filter(|u| matches!(spec.classify(ul, *u, sigma), Ok(EquilibriumKind::Saddle)));
            match tracked {
                Some(u) if prev_sigma.is_some() => {
                    found.retain(|f| f.distance(u) > 1e-6);
                    arc.samples.push((sigma, u));
                    next_open.push(arc);
                }
                _ => closed.push(arc),
            }
        }
        for u in found {
            next_open.push(PartnerArc { samples: vec![(sigma, u)] });
        }
        open = next_open;
        prev_sigma = Some(sigma);
    }
    closed.append(&mut open);
    for arc in closed.iter_mut() {
        refine_arc_ends(ul, arc, sigmas, spec);
    }
    closed.retain(|a| a.samples.len() >= 2);
    closed
}

fn saddle_partner_near(ul: State, sigma: f64, guess: State, spec: &FieldSpec) -> Option<State> {
    solve_rh_near(ul, sigma, &spec.params, guess.vec())
        .filter(|u| u.distance(ul) > 1e-6 && u.distance(guess) < 0.1)
        .filter(|u| both_saddles(ul, *u, sigma, spec))
}

/// Locates where an arc stops being a saddle pair between its last sample
/// and the next σ sample, and adds samples approaching that end so that
/// connections close to a characteristic boundary can be bracketed.
fn refine_arc_ends(ul: State, arc: &mut PartnerArc, sigmas: &[f64], spec: &FieldSpec) {
    let (ls, lf) = char_speeds(ul, &spec.params);
    for at_end in [true, false] {
        let (s_in, u_in) = if at_end { *arc.samples.last().unwrap() } else { arc.samples[0] };
        let pos = sigmas.iter().position(|s| *s == s_in);
        let s_out = match (pos, at_end) {
            (Some(k), true) => sigmas.get(k + 1).copied().unwrap_or(lf),
            (Some(k), false) if k > 0 => sigmas[k - 1],
            _ => if at_end { lf } else { ls },
        };
        let (mut a, mut ua, mut b) = (s_in, u_in, s_out);
        for _ in 0..60 {
            if (a - b).abs() < 1e-13 * (1.0 + a.abs()) {
                break;
            }
            let m = 0.5 * (a + b);
            match saddle_partner_near(ul, m, ua, spec) {
                Some(u) => {
                    a = m;
                    ua = u;
                }
                None => b = m,
            }
        }
        let span = s_in - a;
        if span.abs() < 1e-12 {
            continue;
        }
        let mut extra: Vec<(f64, State)> = Vec::new();
        let mut guess = u_in;
        for rel in [0.5, 1e-1, 1e-2, 1e-3] {
            let s = a + rel * span;
            if let Some(u) = saddle_partner_near(ul, s, guess, spec) {
                extra.push((s, u));
                guess = u;
            }
        }
        if at_end {
            arc.samples.extend(extra);
        } else {
            extra.reverse();
            let mut v = extra;
            v.extend(arc.samples.drain(..));
            arc.samples = v;
        }
    }
}

/// Every undercompressive connection from `ul` found by scanning σ across
/// its saddle window and bisecting each sign change of the difference vector.
pub fn connection_search(ul: State, spec: &FieldSpec, opts: &SearchOptions) -> Result<Vec<ShockTriple>> {
    let (ls, lf) = char_speeds(ul, &spec.params);
    if !(lf - ls > 1e-9) {
        return Ok(Vec::new());
    }
    let n = opts.sigma_samples.max(4);
    let sigmas = with_window_ends((1..n).map(|k| ls + (lf - ls) * k as f64 / n as f64).collect(), ls, lf);
    search_window(ul, &sigmas, spec, opts)
}

/// Connection search restricted to σ samples near `sigma_hint`.
pub fn connection_search_near(ul: State, sigma_hint: f64, width: f64, spec: &FieldSpec, opts: &SearchOptions) -> Result<Vec<ShockTriple>> {
    let (ls, lf) = char_speeds(ul, &spec.params);
    let lo = (sigma_hint - width).max(ls + 1e-9);
    let hi = (sigma_hint + width).min(lf - 1e-9);
    if !(hi > lo) {
        return Ok(Vec::new());
    }
    let n = (opts.sigma_samples / 4).max(6);
    let mut sigmas: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    if lo <= ls + 1e-6 || hi >= lf - 1e-6 {
        sigmas = with_window_ends(sigmas, ls, lf);
    }
    search_window(ul, &sigmas, spec, opts)
}

/// Adds samples just inside the saddle window so connections with σ close
/// to a characteristic speed of the left state can still be bracketed.
fn with_window_ends(mut sigmas: Vec<f64>, ls: f64, lf: f64) -> Vec<f64> {
    let w = lf - ls;
    for rel in [1e-6, 1e-4, 1e-2] {
        sigmas.push(ls + rel * w);
        sigmas.push(lf - rel * w);
    }
    sigmas.retain(|s| *s > ls && *s < lf);
    sigmas.sort_by(f64::total_cmp);
    sigmas.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    sigmas
}

fn search_window(ul: State, sigmas: &[f64], spec: &FieldSpec, opts: &SearchOptions) -> Result<Vec<ShockTriple>> {
    let copts = &opts.connection;
    let mut out: Vec<ShockTriple> = Vec::new();
    for arc in partner_arcs(ul, sigmas, spec, opts.rh_lattice) {
        let mid = arc.samples[arc.samples.len() / 2].1;
        let base = SotomayorLine::bisector(ul, mid, copts.section_half_length);
        let mut evaluated: Option<(SotomayorLine, Vec<Option<DifferenceVector>>)> = None;
        for k in 0..6 {
            let angle = (if k % 2 == 0 { 1.0 } else { -1.0 }) * ((k + 1) / 2) as f64 * std::f64::consts::PI / 6.0;
            let section = base.rotated(angle);
            let ds: Vec<Option<DifferenceVector>> =
                arc.samples.iter().map(|&(s, u)| difference_vector(ul, u, s, spec, &section, copts).ok()).collect();
            let hits = ds.iter().filter(|d| d.is_some()).count();
            let better = evaluated.as_ref().map_or(true, |(_, e)| e.iter().filter(|d| d.is_some()).count() < hits);
            if better {
                evaluated = Some((section, ds));
            }
            if hits == arc.samples.len() {
                break;
            }
        }
        let Some((section, ds)) = evaluated else { continue };
        for i in 0..arc.samples.len().saturating_sub(1) {
            let (Some(da), Some(db)) = (ds[i], ds[i + 1]) else { continue };
            if da.along * db.along > 0.0 {
                continue;
            }
            let (mut sa, mut ua, mut dva) = (arc.samples[i].0, arc.samples[i].1, da);
            let (mut sb, mut ub, mut dvb) = (arc.samples[i + 1].0, arc.samples[i + 1].1, db);
            match bisect_sigma(ul, (&mut sa, &mut ua, &mut dva), (&mut sb, &mut ub, &mut dvb), &section, spec, copts) {
                Ok(t) if !out.iter().any(|o| o.plus.distance(t.plus) < 1e-6) => out.push(t),
                Ok(_) => {}
                Err(e) => log::debug!("bisection from {ul:?} failed: {e}"),
            }
        }
    }
    Ok(out)
}

/// Checks a candidate triple against the connection predicate: both states
/// saddles, the shock conditions, and a section residual within `delta`.
pub fn verify_connection(triple: &ShockTriple, spec: &FieldSpec, opts: &ConnectionOptions) -> Result<DifferenceVector> {
    if !both_saddles(triple.minus, triple.plus, triple.sigma, spec) {
        return Err(Error::Precondition("states are not both saddles".into()));
    }
    if triple.rh_norm(&spec.params) >= 1e-8 {
        return Err(Error::InconsistentSpeeds(triple.sigma, shock_speed(triple.minus, triple.plus, &spec.params)?));
    }
    if triple.crossing_margin(&spec.params) <= 1e-9 {
        return Err(Error::Precondition("shock is not strictly crossing".into()));
    }
    let (d, _) = difference_vector_auto(triple.minus, triple.plus, triple.sigma, spec, opts)?;
    if d.norm() > opts.delta {
        return Err(Error::Precondition(format!("section residual {:e} exceeds tolerance", d.norm())));
    }
    Ok(d)
}
