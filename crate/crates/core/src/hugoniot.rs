//! Hugoniot loci: the zero set of
//! `H(U) = Δf_w · Δs_o − Δf_o · Δs_w` relative to a base state.
//!
//! Tracing combines a sign-change scan of `H` on a regular grid (which finds
//! every branch crossing a cell edge) with predictor–corrector continuation
//! from those seeds. The corrector solves `H = 0` on the line through the
//! predicted point normal to the current tangent, so each emitted point is a
//! polished root. Branches are split where they pass through the base state
//! and where they cross each other.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corey::{self, char_speeds, flux, jacobian, shock_speed, FluidParams, State};
use crate::exec::Execution;
use crate::linalg::{self, Vec2};
use crate::shock::{lax_tag, LaxTag};

/// Points closer than this to the base state are trivial solutions.
pub const TRIVIAL_RADIUS: f64 = 1e-6;
/// Target accuracy of polished points.
const POLISH_TOL: f64 = 1e-14;
/// Slack used when deciding that a point is inside the triangle.
const DOMAIN_SLACK: f64 = 1e-12;

/// The Hugoniot function of a fixed base state.
#[derive(Debug, Clone, Copy)]
pub struct HugoniotFn {
    pub base: State,
    base_flux: Vec2,
    pub params: FluidParams,
}

impl HugoniotFn {
    pub fn new(base: State, params: FluidParams) -> Self {
        HugoniotFn { base, base_flux: flux(base, &params), params }
    }

    #[inline]
    pub fn value(&self, x: Vec2) -> f64 {
        let f = flux(State::from_vec(x), &self.params);
        let dfw = f[0] - self.base_flux[0];
        let dfo = f[1] - self.base_flux[1];
        dfw * (x[1] - self.base.so) - dfo * (x[0] - self.base.sw)
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        let u = State::from_vec(x);
        let f = flux(u, &self.params);
        let j = jacobian(u, &self.params);
        let dsw = x[0] - self.base.sw;
        let dso = x[1] - self.base.so;
        let dfw = f[0] - self.base_flux[0];
        let dfo = f[1] - self.base_flux[1];
        [j[0][0] * dso - j[1][0] * dsw - dfo, dfw + j[0][1] * dso - j[1][1] * dsw]
    }
}

/// Root of `phi` on `[a, b]` given opposite signs at the ends (Illinois
/// false position, terminating on bracket width).
fn bracket_root<F: Fn(f64) -> f64>(phi: F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, tol: f64) -> f64 {
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let mut side = 0;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = phi(c);
        if fc == 0.0 {
            return c;
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        // Guarantee progress when false position stalls.
        let mid = 0.5 * (a + b);
        let fm = phi(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }
    0.5 * (a + b)
}

/// Solve `H(y + τ n) = 0` for the root `τ ∈ [-w, w]` closest to zero.
fn transverse_root(h: &HugoniotFn, y: Vec2, n: Vec2, w: f64) -> Option<Vec2> {
    let phi = |t: f64| h.value(linalg::axpy(t, n, y));
    const SAMPLES: usize = 16;
    let ts: Vec<f64> = (0..=SAMPLES).map(|i| -w + 2.0 * w * i as f64 / SAMPLES as f64).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| phi(t)).collect();
    let mut best: Option<(f64, f64)> = None;
    for i in 0..SAMPLES {
        let (a, b, fa, fb) = (ts[i], ts[i + 1], vals[i], vals[i + 1]);
        if fa == 0.0 || fb == 0.0 || (fa > 0.0) != (fb > 0.0) {
            let t = bracket_root(phi, a, b, fa, fb, POLISH_TOL);
            if best.map_or(true, |(bt, _)| t.abs() < bt.abs()) {
                best = Some((t, 0.0));
            }
        }
    }
    best.map(|(t, _)| linalg::axpy(t, n, y))
}

/// Clip a chord from `a` (inside) to `b` (outside) at the triangle boundary.
fn boundary_crossing(a: Vec2, b: Vec2) -> (Vec2, Vec2) {
    // Each edge as (g(x) >= 0 inside, outward-agnostic direction along the edge).
    let gs: [(fn(Vec2) -> f64, Vec2); 3] = [
        (|x| x[0], [0.0, 1.0]),
        (|x| x[1], [1.0, 0.0]),
        (|x| 1.0 - x[0] - x[1], [std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2]),
    ];
    let mut best = (1.0, gs[0].1);
    for (g, dir) in gs {
        let (ga, gb) = (g(a), g(b));
        if gb < 0.0 && ga >= 0.0 {
            let t = ga / (ga - gb);
            if t < best.0 {
                best = (t, dir);
            }
        }
    }
    (linalg::add(a, linalg::scale(best.0, linalg::sub(b, a))), best.1)
}

fn inside(x: Vec2) -> bool {
    State::from_vec(x).in_triangle(DOMAIN_SLACK)
}

/// Spatial hash of polyline segments for proximity queries.
struct SegmentIndex {
    cell: f64,
    map: HashMap<(i64, i64), Vec<(usize, usize)>>,
}

impl SegmentIndex {
    fn new(cell: f64) -> Self {
        SegmentIndex { cell, map: HashMap::new() }
    }

    fn key(&self, x: Vec2) -> (i64, i64) {
        ((x[0] / self.cell).floor() as i64, (x[1] / self.cell).floor() as i64)
    }

    fn insert(&mut self, line: usize, pts: &[Vec2]) {
        for (k, w) in pts.windows(2).enumerate() {
            let (i0, j0) = self.key([w[0][0].min(w[1][0]), w[0][1].min(w[1][1])]);
            let (i1, j1) = self.key([w[0][0].max(w[1][0]), w[0][1].max(w[1][1])]);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    self.map.entry((i, j)).or_default().push((line, k));
                }
            }
        }
    }

    fn nearest(&self, x: Vec2, lines: &[Vec<Vec2>]) -> f64 {
        let (i, j) = self.key(x);
        let mut best = f64::INFINITY;
        for di in -1..=1 {
            for dj in -1..=1 {
                if let Some(v) = self.map.get(&(i + di, j + dj)) {
                    for &(l, k) in v {
                        best = best.min(point_segment_distance(x, lines[l][k], lines[l][k + 1]));
                    }
                }
            }
        }
        best
    }
}

pub fn point_segment_distance(x: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = linalg::sub(b, a);
    let len2 = linalg::dot(d, d);
    let t = if len2 > 0.0 { (linalg::dot(linalg::sub(x, a), d) / len2).clamp(0.0, 1.0) } else { 0.0 };
    linalg::norm(linalg::sub(x, linalg::axpy(t, d, a)))
}

/// Tracing controls.
#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    /// Grid cells per unit length for the seed scan; the continuation step
    /// is the grid spacing.
    pub resolution: usize,
    /// Subdivision factor of scan cells near the umbilic point.
    pub umbilic_refinement: usize,
    pub exec: Execution,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { resolution: 400, umbilic_refinement: 8, exec: Execution::default() }
    }
}

impl TraceOptions {
    pub fn with_resolution(resolution: usize) -> Self {
        TraceOptions { resolution, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HugoniotPoint {
    pub state: State,
    pub sigma: f64,
    pub tag: LaxTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HugoniotBranch {
    pub base: State,
    pub points: Vec<HugoniotPoint>,
}

impl HugoniotBranch {
    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        self.points.iter().map(|p| p.state)
    }
}

/// Polished points where the locus crosses edges of the scan grid.
fn scan_seeds(h: &HugoniotFn, n: usize, refine: usize, exec: Execution) -> Vec<Vec2> {
    let step = 1.0 / n as f64;
    // Rows of node values over the square; nodes beyond the hypotenuse by
    // more than one cell are never needed.
    let rows: Vec<Vec<f64>> = exec.map(n + 1, |i| {
        let jmax = (n + 1 - i).min(n);
        (0..=jmax).map(|j| h.value([i as f64 * step, j as f64 * step])).collect()
    });
    let umb = corey::umbilic_point(&h.params).vec();
    let per_row: Vec<Vec<Vec2>> = exec.map(n, |i| {
        let mut out = Vec::new();
        let jmax = rows[i].len().min(rows[i + 1].len() + 1) - 1;
        for j in 0..jmax {
            let x0 = [i as f64 * step, j as f64 * step];
            // Horizontal and vertical edges starting at node (i, j).
            if j + 1 < rows[i].len() {
                edge_seed(h, x0, [0.0, step], rows[i][j], rows[i][j + 1], &mut out);
            }
            if j < rows[i + 1].len() {
                edge_seed(h, x0, [step, 0.0], rows[i][j], rows[i + 1][j], &mut out);
            }
            let centre = [x0[0] + 0.5 * step, x0[1] + 0.5 * step];
            if refine > 1 && linalg::norm(linalg::sub(centre, umb)) < 3.0 * step {
                refine_cell(h, x0, step, refine, &mut out);
            }
        }
        out
    });
    per_row.into_iter().flatten().filter(|&x| inside(x)).collect()
}

fn edge_seed(h: &HugoniotFn, x0: Vec2, d: Vec2, fa: f64, fb: f64, out: &mut Vec<Vec2>) {
    if fa == 0.0 || (fa > 0.0) != (fb > 0.0) {
        let t = bracket_root(|t| h.value(linalg::axpy(t, d, x0)), 0.0, 1.0, fa, fb, 1e-13);
        out.push(linalg::axpy(t, d, x0));
    }
}

fn refine_cell(h: &HugoniotFn, x0: Vec2, step: f64, k: usize, out: &mut Vec<Vec2>) {
    let sub = step / k as f64;
    for a in 0..k {
        for b in 0..k {
            let p = [x0[0] + a as f64 * sub, x0[1] + b as f64 * sub];
            let v00 = h.value(p);
            edge_seed(h, p, [0.0, sub], v00, h.value([p[0], p[1] + sub]), out);
            edge_seed(h, p, [sub, 0.0], v00, h.value([p[0] + sub, p[1]]), out);
        }
    }
}

/// Continue the locus from `x` in direction `t` until it leaves the domain,
/// closes on `stop_at`, or the step budget runs out.
fn march(h: &HugoniotFn, start: Vec2, t0: Vec2, step: f64, stop_at: Option<Vec2>) -> Vec<Vec2> {
    let mut pts = Vec::new();
    let mut x = start;
    let mut t = t0;
    let mut travelled = 0.0;
    let max_steps = (40.0 / step) as usize;
    for _ in 0..max_steps {
        let mut hh = step;
        let mut next = None;
        while hh >= step / 64.0 {
            let y = linalg::axpy(hh, t, x);
            if let Some(z) = transverse_root(h, y, linalg::perp(t), 0.5 * hh) {
                next = Some(z);
                break;
            }
            hh *= 0.5;
        }
        let Some(z) = next else { break };
        if !inside(z) {
            let (c, edge_dir) = boundary_crossing(x, z);
            let polished = transverse_root(h, c, edge_dir, 0.25 * hh).filter(|&p| inside(p)).unwrap_or(c);
            pts.push(polished);
            break;
        }
        let secant = linalg::normalize(linalg::sub(z, x));
        let g = h.gradient(z);
        let mut tg = linalg::normalize(linalg::perp(g));
        if linalg::dot(tg, secant) < 0.0 {
            tg = linalg::scale(-1.0, tg);
        }
        t = if linalg::norm(g) > 0.0 && linalg::dot(tg, secant) > 0.9 { tg } else { secant };
        travelled += linalg::norm(linalg::sub(z, x));
        pts.push(z);
        x = z;
        if let Some(s) = stop_at {
            if travelled > 4.0 * step && linalg::norm(linalg::sub(z, s)) < 0.75 * step {
                pts.push(s);
                break;
            }
        }
    }
    pts
}

fn trace_seed(h: &HugoniotFn, seed: Vec2, step: f64) -> Vec<Vec2> {
    let t = linalg::normalize(linalg::perp(h.gradient(seed)));
    let fwd = march(h, seed, t, step, Some(seed));
    let closed = fwd.last().map_or(false, |&p| p == seed);
    if closed {
        let mut out = vec![seed];
        out.extend(fwd);
        return out;
    }
    let mut back = march(h, seed, linalg::scale(-1.0, t), step, None);
    back.reverse();
    back.push(seed);
    back.extend(fwd);
    back
}

/// Root of `H` on the circle of radius `r` about `c`, near angle `theta`.
fn circle_root(h: &HugoniotFn, c: Vec2, r: f64, theta: f64, window: f64) -> Option<Vec2> {
    let at = |a: f64| [c[0] + r * a.cos(), c[1] + r * a.sin()];
    let phi = |a: f64| h.value(at(a));
    const SAMPLES: usize = 24;
    let mut best: Option<f64> = None;
    let mut prev = (theta - window, phi(theta - window));
    for i in 1..=SAMPLES {
        let a = theta - window + 2.0 * window * i as f64 / SAMPLES as f64;
        let fa = phi(a);
        if prev.1 == 0.0 || (prev.1 > 0.0) != (fa > 0.0) {
            let root = bracket_root(phi, prev.0, a, prev.1, fa, 1e-15);
            if best.map_or(true, |b| (root - theta).abs() < (b - theta).abs()) {
                best = Some(root);
            }
        }
        prev = (a, fa);
    }
    best.map(at)
}

/// Replace the approach of a polyline to the base state by points on
/// shrinking circles, ending just outside the trivial radius.
fn approach_base(h: &HugoniotFn, from: Vec2, step: f64) -> Vec<Vec2> {
    let c = h.base.vec();
    let mut out = Vec::new();
    let mut dir = linalg::sub(from, c);
    let mut r = linalg::norm(dir);
    let floor = 2.0 * TRIVIAL_RADIUS;
    while r > floor {
        r = (r * 0.5).max(floor);
        let theta = dir[1].atan2(dir[0]);
        match circle_root(h, c, r, theta, 0.35) {
            Some(p) if inside(p) => {
                dir = linalg::sub(p, c);
                out.push(p);
            }
            _ => break,
        }
        if r <= floor {
            break;
        }
    }
    let _ = step;
    out
}

/// Split polylines where they pass through the base state.
fn split_at_base(h: &HugoniotFn, lines: Vec<Vec<Vec2>>, step: f64) -> Vec<Vec<Vec2>> {
    let c = h.base.vec();
    let mut out = Vec::new();
    for line in lines {
        let mut current: Vec<Vec2> = Vec::new();
        let mut i = 0;
        while i < line.len() {
            let p = line[i];
            if linalg::norm(linalg::sub(p, c)) < 1.5 * step {
                // Run of points near the base; decide whether the polyline
                // actually passes through it.
                let mut j = i;
                while j < line.len() && linalg::norm(linalg::sub(line[j], c)) < 1.5 * step {
                    j += 1;
                }
                let run = &line[i.saturating_sub(1)..(j + 1).min(line.len())];
                let closest = run
                    .windows(2)
                    .map(|w| point_segment_distance(c, w[0], w[1]))
                    .fold(f64::INFINITY, f64::min);
                if closest < 0.5 * step {
                    // Outgoing half of the run: last point before, first after.
                    let keep: Vec<Vec2> = line[i..j].iter().copied().filter(|q| linalg::norm(linalg::sub(*q, c)) > 0.75 * step).collect();
                    let (before, after): (Vec<Vec2>, Vec<Vec2>) = {
                        // Split the kept run by which side of the closest approach it lies.
                        let k_min = (i..j)
                            .min_by(|&a, &b| {
                                linalg::norm(linalg::sub(line[a], c)).total_cmp(&linalg::norm(linalg::sub(line[b], c)))
                            })
                            .unwrap();
                        let b: Vec<Vec2> = line[i..k_min].iter().copied().filter(|q| keep.contains(q)).collect();
                        let a: Vec<Vec2> = line[k_min..j].iter().copied().filter(|q| keep.contains(q)).collect();
                        (b, a)
                    };
                    current.extend(before);
                    if let Some(&last) = current.last() {
                        current.extend(approach_base(h, last, step));
                    }
                    if current.len() >= 2 {
                        out.push(std::mem::take(&mut current));
                    } else {
                        current.clear();
                    }
                    let mut head = Vec::new();
                    let first_after = after.first().copied().or_else(|| line.get(j).copied());
                    if let Some(fa) = first_after {
                        head = approach_base(h, fa, step);
                        head.reverse();
                    }
                    current = head;
                    current.extend(after);
                    i = j;
                    continue;
                }
                current.extend_from_slice(&line[i..j]);
                i = j;
                continue;
            }
            current.push(p);
            i += 1;
        }
        if current.len() >= 2 {
            out.push(current);
        }
    }
    out
}

fn segment_intersection(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> Option<Vec2> {
    let r = linalg::sub(b, a);
    let s = linalg::sub(d, c);
    let den = linalg::cross(r, s);
    if den.abs() < 1e-300 {
        return None;
    }
    let ca = linalg::sub(c, a);
    let t = linalg::cross(ca, s) / den;
    let u = linalg::cross(ca, r) / den;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then(|| linalg::axpy(t, r, a))
}

/// Newton on `∇H = 0` (finite-difference Hessian) from a polyline crossing.
fn polish_singular(h: &HugoniotFn, x0: Vec2, step: f64) -> Vec2 {
    let mut x = x0;
    let e = 1e-7;
    for _ in 0..30 {
        let g = h.gradient(x);
        let gx = h.gradient([x[0] + e, x[1]]);
        let gxm = h.gradient([x[0] - e, x[1]]);
        let gy = h.gradient([x[0], x[1] + e]);
        let gym = h.gradient([x[0], x[1] - e]);
        let hess = [
            [(gx[0] - gxm[0]) / (2.0 * e), (gy[0] - gym[0]) / (2.0 * e)],
            [(gx[1] - gxm[1]) / (2.0 * e), (gy[1] - gym[1]) / (2.0 * e)],
        ];
        let Some(dx) = linalg::solve(&hess, g) else { return x0 };
        x = linalg::sub(x, dx);
        if linalg::norm(dx) < 1e-15 {
            break;
        }
    }
    if linalg::norm(linalg::sub(x, x0)) < step && h.value(x).abs() < 1e-12 {
        x
    } else {
        x0
    }
}

/// Split polylines at mutual crossings, inserting the crossing point.
fn split_at_crossings(h: &HugoniotFn, lines: Vec<Vec<Vec2>>, step: f64) -> Vec<Vec<Vec2>> {
    let mut index = SegmentIndex::new(2.0 * step);
    for (l, pts) in lines.iter().enumerate() {
        index.insert(l, pts);
    }
    // cuts[l] = list of (segment index, parameter point)
    let mut cuts: Vec<Vec<(usize, Vec2)>> = vec![Vec::new(); lines.len()];
    let mut found: Vec<Vec2> = Vec::new();
    for bucket in index.map.values() {
        for (ia, &(la, ka)) in bucket.iter().enumerate() {
            for &(lb, kb) in &bucket[ia + 1..] {
                if la == lb && ka.abs_diff(kb) <= 1 {
                    continue;
                }
                let (a0, a1) = (lines[la][ka], lines[la][ka + 1]);
                let (b0, b1) = (lines[lb][kb], lines[lb][kb + 1]);
                // Shared endpoints (e.g. closed loops, joins at the base) are not crossings.
                if a0 == b0 || a0 == b1 || a1 == b0 || a1 == b1 {
                    continue;
                }
                if let Some(p) = segment_intersection(a0, a1, b0, b1) {
                    let x = polish_singular(h, p, step);
                    if found.iter().any(|q| linalg::norm(linalg::sub(*q, x)) < 1e-3 * step) {
                        // Same crossing seen from another bucket.
                        if !cuts[la].iter().any(|c| c.0 == ka) {
                            cuts[la].push((ka, x));
                        }
                        if !cuts[lb].iter().any(|c| c.0 == kb) {
                            cuts[lb].push((kb, x));
                        }
                        continue;
                    }
                    if linalg::norm(linalg::sub(x, h.base.vec())) < 2.0 * TRIVIAL_RADIUS {
                        continue;
                    }
                    found.push(x);
                    cuts[la].push((ka, x));
                    cuts[lb].push((kb, x));
                }
            }
        }
    }
    let mut out = Vec::new();
    for (l, pts) in lines.into_iter().enumerate() {
        let mut c = std::mem::take(&mut cuts[l]);
        c.sort_by(|a, b| {
            a.0.cmp(&b.0).then_with(|| {
                let o = pts[a.0];
                linalg::norm(linalg::sub(a.1, o)).total_cmp(&linalg::norm(linalg::sub(b.1, o)))
            })
        });
        c.dedup_by(|a, b| linalg::norm(linalg::sub(a.1, b.1)) < 1e-12);
        let mut current = Vec::new();
        let mut ci = 0;
        for (k, &p) in pts.iter().enumerate() {
            current.push(p);
            while ci < c.len() && c[ci].0 == k {
                let x = c[ci].1;
                if linalg::norm(linalg::sub(x, p)) > 1e-13 {
                    current.push(x);
                }
                if current.len() >= 2 {
                    out.push(std::mem::take(&mut current));
                } else {
                    current.clear();
                }
                current.push(x);
                ci += 1;
            }
        }
        if current.len() >= 2 {
            out.push(current);
        }
    }
    out
}

/// Trace the Hugoniot locus of `um` with default options at `resolution`.
pub fn trace_hugoniot(um: State, p: &FluidParams, resolution: usize) -> Vec<HugoniotBranch> {
    trace_hugoniot_with(um, p, TraceOptions::with_resolution(resolution))
}

/// Raw polylines of the locus, before speeds are attached.
pub fn trace_polylines(um: State, p: &FluidParams, opts: TraceOptions) -> Vec<Vec<Vec2>> {
    let n = opts.resolution.max(8);
    let h = HugoniotFn::new(um, *p);
    let step = 1.0 / n as f64;
    let base = um.vec();
    let seeds: Vec<Vec2> = scan_seeds(&h, n, opts.umbilic_refinement, opts.exec)
        .into_iter()
        .filter(|&s| linalg::norm(linalg::sub(s, base)) > 2.0 * step)
        .collect();

    let mut lines: Vec<Vec<Vec2>> = Vec::new();
    let mut index = SegmentIndex::new(step);
    for seed in seeds {
        if !lines.is_empty() && index.nearest(seed, &lines) < 0.2 * step {
            continue;
        }
        let line = trace_seed(&h, seed, step);
        if line.len() < 2 {
            continue;
        }
        index.insert(lines.len(), &line);
        lines.push(line);
    }
    let lines = split_at_base(&h, lines, step);
    let lines = split_at_crossings(&h, lines, step);
    lines
        .into_iter()
        .map(|l| l.into_iter().filter(|x| linalg::norm(linalg::sub(*x, base)) > TRIVIAL_RADIUS).collect::<Vec<_>>())
        .filter(|l| l.len() >= 2 && polyline_length(l) > TRIVIAL_RADIUS)
        .collect()
}

fn polyline_length(l: &[Vec2]) -> f64 {
    l.windows(2).map(|w| linalg::norm(linalg::sub(w[1], w[0]))).sum()
}

/// Trace the locus and attach speeds and Lax tags.
pub fn trace_hugoniot_with(um: State, p: &FluidParams, opts: TraceOptions) -> Vec<HugoniotBranch> {
    let base = um.vec();
    let mut branches: Vec<HugoniotBranch> = trace_polylines(um, p, opts)
        .into_iter()
        .map(|mut l| {
            let d0 = linalg::norm(linalg::sub(l[0], base));
            let d1 = linalg::norm(linalg::sub(*l.last().unwrap(), base));
            if d1 < d0 {
                l.reverse();
            }
            let points = l
                .into_iter()
                .map(|x| {
                    let state = State::from_vec(x);
                    let sigma = speed_of(um, state, p);
                    HugoniotPoint { state, sigma, tag: lax_tag(um, state, sigma, p) }
                })
                .collect();
            HugoniotBranch { base: um, points }
        })
        .collect();
    branches.sort_by(|a, b| {
        let ang = |br: &HugoniotBranch| {
            let d = linalg::sub(br.points[0].state.vec(), base);
            d[1].atan2(d[0])
        };
        ang(a).total_cmp(&ang(b))
    });
    branches
}

/// Shock speed, falling back to the least-squares value if the component
/// speeds disagree (never expected for polished points).
fn speed_of(um: State, up: State, p: &FluidParams) -> f64 {
    shock_speed(um, up, p).unwrap_or_else(|_| {
        let du = linalg::sub(up.vec(), um.vec());
        let df = linalg::sub(flux(up, p), flux(um, p));
        linalg::dot(df, du) / linalg::dot(du, du)
    })
}

/// Lax tags of every point of a branch.
pub fn classify_branch(branch: &HugoniotBranch, p: &FluidParams) -> Vec<LaxTag> {
    branch.points.iter().map(|q| lax_tag(branch.base, q.state, q.sigma, p)).collect()
}

/// All states `U ≠ U⁻` in the triangle with `F(U) − F(U⁻) = σ (U − U⁻)`.
pub fn rh_points_at_speed(um: State, sigma: f64, p: &FluidParams) -> Vec<State> {
    rh_points_at_speed_with(um, sigma, p, 40, Execution::Sequential)
}

pub fn rh_points_at_speed_with(um: State, sigma: f64, p: &FluidParams, lattice: usize, exec: Execution) -> Vec<State> {
    let mut seeds = Vec::new();
    for i in 0..=lattice {
        for j in 0..=(lattice - i) {
            seeds.push([i as f64 / lattice as f64, j as f64 / lattice as f64]);
        }
    }
    let roots: Vec<Option<Vec2>> = exec.map_slice(&seeds, |&s| solve_rh_near(um, sigma, p, s).map(|u| u.vec()));
    let mut out: Vec<State> = Vec::new();
    for r in roots.into_iter().flatten() {
        let u = State::from_vec(r);
        if u.distance(um) <= TRIVIAL_RADIUS {
            continue;
        }
        if out.iter().all(|q| q.distance(u) > 1e-7) {
            out.push(u);
        }
    }
    out.sort_by(|a, b| a.sw.total_cmp(&b.sw).then(a.so.total_cmp(&b.so)));
    out
}

/// Damped Newton for `G(U) = 0` from `guess`; the root must lie in the
/// triangle (it is snapped onto it when within round-off).
pub fn solve_rh_near(um: State, sigma: f64, p: &FluidParams, guess: Vec2) -> Option<State> {
    let fm = flux(um, p);
    let g = |x: Vec2| {
        let f = flux(State::from_vec(x), p);
        [f[0] - fm[0] - sigma * (x[0] - um.sw), f[1] - fm[1] - sigma * (x[1] - um.so)]
    };
    let mut x = guess;
    let mut gx = g(x);
    for _ in 0..60 {
        let n0 = linalg::norm(gx);
        if n0 < 1e-15 {
            break;
        }
        let mut j = jacobian(State::from_vec(x), p);
        j[0][0] -= sigma;
        j[1][1] -= sigma;
        let dx = linalg::solve(&j, gx)?;
        let mut lam = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let y = linalg::axpy(-lam, dx, x);
            let gy = g(y);
            if linalg::norm(gy) < n0 * (1.0 - 1e-4 * lam) || linalg::norm(gy) < 1e-15 {
                x = y;
                gx = gy;
                accepted = true;
                break;
            }
            lam *= 0.5;
        }
        if !accepted {
            break;
        }
        if x[0].abs() > 3.0 || x[1].abs() > 3.0 {
            return None;
        }
        if lam == 1.0 && linalg::norm(dx) < 1e-15 {
            break;
        }
    }
    let u = State::from_vec(x);
    if linalg::norm(gx) > 1e-12 || !u.in_triangle(1e-9) {
        return None;
    }
    Some(u.clamp_to_triangle())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Slow,
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtensionSide {
    /// Characteristic speed taken at the member of the set.
    Left,
    /// Characteristic speed taken at the new state.
    Right,
}

fn family_speed(u: State, fam: Family, p: &FluidParams) -> f64 {
    let (s, f) = char_speeds(u, p);
    match fam {
        Family::Slow => s,
        Family::Fast => f,
    }
}

/// Extension of a set of states by shocks characteristic on one side.
pub fn extension_of_set(c: &[State], fam: Family, side: ExtensionSide, p: &FluidParams) -> Vec<State> {
    extension_of_set_with(c, fam, side, p, 200, Execution::default())
}

pub fn extension_of_set_with(
    c: &[State],
    fam: Family,
    side: ExtensionSide,
    p: &FluidParams,
    resolution: usize,
    exec: Execution,
) -> Vec<State> {
    let per_member = exec.map_slice(c, |&um| match side {
        ExtensionSide::Left => {
            let sigma = family_speed(um, fam, p);
            rh_points_at_speed(um, sigma, p)
                .into_iter()
                .filter(|&u| (speed_of(um, u, p) - sigma).abs() < 1e-9)
                .collect::<Vec<_>>()
        }
        ExtensionSide::Right => right_extension(um, fam, p, resolution),
    });
    per_member.into_iter().flatten().collect()
}

fn right_extension(um: State, fam: Family, p: &FluidParams, resolution: usize) -> Vec<State> {
    let h = HugoniotFn::new(um, *p);
    let step = 1.0 / resolution as f64;
    let lines = trace_polylines(um, p, TraceOptions { resolution, umbilic_refinement: 4, exec: Execution::Sequential });
    let gap = |x: Vec2| {
        let u = State::from_vec(x);
        speed_of(um, u, p) - family_speed(u, fam, p)
    };
    let mut out: Vec<State> = Vec::new();
    for line in lines {
        let vals: Vec<f64> = line.iter().map(|&x| gap(x)).collect();
        for k in 0..line.len().saturating_sub(1) {
            let (a, b) = (line[k], line[k + 1]);
            let (ga, gb) = (vals[k], vals[k + 1]);
            if !(ga == 0.0 || (ga > 0.0) != (gb > 0.0)) {
                continue;
            }
            // Bisection along the chord, each trial projected back onto the locus.
            let d = linalg::sub(b, a);
            let n = linalg::normalize(linalg::perp(d));
            let onto = |t: f64| {
                let y = linalg::axpy(t, d, a);
                transverse_root(&h, y, n, step).unwrap_or(y)
            };
            let t = bracket_root(|t| gap(onto(t)), 0.0, 1.0, ga, gb, 1e-14);
            let x = onto(t);
            let u = State::from_vec(x);
            if !u.in_triangle(1e-9) || u.distance(um) <= TRIVIAL_RADIUS || gap(x).abs() > 1e-9 {
                continue;
            }
            let u = u.clamp_to_triangle();
            if out.iter().all(|q| q.distance(u) > 1e-7) {
                out.push(u);
            }
        }
    }
    out
}
