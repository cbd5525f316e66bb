//! Breadth-first continuation of undercompressive connections over a lattice
//! of left states, with refinement and tagging of the region boundary.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corey::{char_speeds, State};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{self, Vec2};
use crate::reduced::InvariantLine;
use crate::shock::ShockTriple;
use crate::uc_identity::BoundaryTag;

use super::connection::{
    bisect_boundary, connection_search, connection_search_near, verify_connection, FieldSpec, SearchOptions,
};

/// Normalised characteristic margin below which a boundary point is
/// attributed to that characteristic condition.
const CHARACTERISTIC_TAG_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Lattice step along `axis`.
    pub step_along: f64,
    /// Lattice step perpendicular to `axis`.
    pub step_across: f64,
    /// First lattice direction; the second is its perpendicular.
    pub axis: Vec2,
    pub search: SearchOptions,
    /// Distance at which boundary bisection stops.
    pub boundary_delta: f64,
    pub refine_boundaries: bool,
    /// Largest accepted jump of the right state between lattice neighbours.
    pub partner_radius: f64,
    /// Half-width of the σ window used for warm starts.
    pub warm_sigma_width: f64,
    pub max_nodes: usize,
    pub exec: Execution,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            step_along: 0.01,
            step_across: 0.01,
            axis: [1.0, 0.0],
            search: SearchOptions::default(),
            boundary_delta: 1e-6,
            refine_boundaries: true,
            partner_radius: 0.15,
            warm_sigma_width: 0.15,
            max_nodes: 20_000,
            exec: Execution::default(),
        }
    }
}

impl SweepOptions {
    /// Lattice aligned with an invariant line.
    pub fn along_line(line: &InvariantLine, step_along: f64, step_across: f64) -> Self {
        SweepOptions { step_along, step_across, axis: linalg::normalize(line.direction()), ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepNode {
    pub index: (i64, i64),
    pub triple: ShockTriple,
    /// More than one right state matched the warm start.
    pub multi_valued: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericBoundaryPoint {
    pub minus: State,
    pub plus: State,
    pub sigma: f64,
    pub tag: BoundaryTag,
}

/// Sampled undercompressive region: interior triples and tagged boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UCSurfaceNumeric {
    pub nodes: Vec<SweepNode>,
    /// Boundary points grouped by tag, each group ordered as a polyline.
    pub boundaries: BTreeMap<BoundaryTag, Vec<NumericBoundaryPoint>>,
    pub step_along: f64,
    pub step_across: f64,
    pub axis: Vec2,
    pub origin: State,
}

impl UCSurfaceNumeric {
    pub fn interior(&self) -> impl Iterator<Item = &ShockTriple> {
        self.nodes.iter().map(|n| &n.triple)
    }

    pub fn tags(&self) -> Vec<BoundaryTag> {
        self.boundaries.iter().filter(|(_, v)| !v.is_empty()).map(|(t, _)| *t).collect()
    }

    pub fn multi_valued(&self) -> usize {
        self.nodes.iter().filter(|n| n.multi_valued).count()
    }

    /// Right state and speed stored at the lattice node nearest `ul`, if it
    /// lies within one lattice cell.
    pub fn map(&self, ul: State) -> Option<(State, f64)> {
        let idx = lattice_index(self.origin, self.axis, self.step_along, self.step_across, ul);
        self.nodes.iter().find(|n| n.index == idx).map(|n| (n.triple.plus, n.triple.sigma))
    }

    /// Left-state polyline of one boundary.
    pub fn minus_polyline(&self, tag: BoundaryTag) -> Vec<State> {
        self.boundaries.get(&tag).map(|v| v.iter().map(|b| b.minus).collect()).unwrap_or_default()
    }

    /// Right-state polyline of one boundary.
    pub fn plus_polyline(&self, tag: BoundaryTag) -> Vec<State> {
        self.boundaries.get(&tag).map(|v| v.iter().map(|b| b.plus).collect()).unwrap_or_default()
    }
}

fn lattice_point(origin: State, axis: Vec2, ha: f64, hc: f64, (i, j): (i64, i64)) -> State {
    let n = linalg::perp(axis);
    State::from_vec(linalg::add(origin.vec(), linalg::add(linalg::scale(i as f64 * ha, axis), linalg::scale(j as f64 * hc, n))))
}

fn lattice_index(origin: State, axis: Vec2, ha: f64, hc: f64, x: State) -> (i64, i64) {
    let r = linalg::sub(x.vec(), origin.vec());
    ((linalg::dot(r, axis) / ha).round() as i64, (linalg::dot(r, linalg::perp(axis)) / hc).round() as i64)
}

/// Connection from `ul` continuing the neighbour triple `from`.
fn continue_connection(ul: State, from: &ShockTriple, spec: &FieldSpec, opts: &SweepOptions) -> Option<(ShockTriple, bool)> {
    if !ul.in_triangle(0.0) || ul.edge_distance() < 1e-9 {
        return None;
    }
    let near = |found: Vec<ShockTriple>| -> Vec<ShockTriple> {
        let mut v: Vec<ShockTriple> = found
            .into_iter()
            .filter(|t| t.plus.distance(from.plus) <= opts.partner_radius)
            .filter(|t| t.rh_norm(&spec.params) < 1e-8 && t.crossing_margin(&spec.params) > 1e-9)
            .collect();
        v.sort_by(|a, b| a.plus.distance(from.plus).total_cmp(&b.plus.distance(from.plus)));
        v
    };
    let mut hits = near(connection_search_near(ul, from.sigma, opts.warm_sigma_width, spec, &opts.search).unwrap_or_default());
    if hits.is_empty() {
        hits = near(connection_search(ul, spec, &opts.search).unwrap_or_default());
    }
    let multi = hits.len() > 1;
    hits.into_iter().next().map(|t| (t, multi))
}

/// Boundary tag from the smallest normalised characteristic margin of the
/// last triple inside the region.
pub fn boundary_tag(t: &ShockTriple, spec: &FieldSpec) -> BoundaryTag {
    let p = &spec.params;
    let (lsm, lfm) = char_speeds(t.minus, p);
    let (lsp, lfp) = char_speeds(t.plus, p);
    let wm = (lfm - lsm).max(1e-12);
    let wp = (lfp - lsp).max(1e-12);
    let margins = [
        (BoundaryTag::SCB, (t.sigma - lsm) / wm),
        (BoundaryTag::UCB, (lfm - t.sigma) / wm),
        (BoundaryTag::FCB, (lfp - t.sigma) / wp),
    ];
    let (tag, m) = margins.into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    if m < CHARACTERISTIC_TAG_TOL {
        tag
    } else {
        BoundaryTag::GUB
    }
}

/// Refine the crossing between a resolved node and a failed neighbour.
fn refine_boundary(inside: &ShockTriple, outside: State, spec: &FieldSpec, opts: &SweepOptions) -> Option<NumericBoundaryPoint> {
    let mut last = *inside;
    let res = bisect_boundary(inside.minus, outside, opts.boundary_delta, 200, |mid| {
        Ok(match continue_connection(mid, &last, spec, opts) {
            Some((t, _)) => {
                last = t;
                true
            }
            None => false,
        })
    });
    match res {
        Ok(_) => Some(NumericBoundaryPoint { minus: last.minus, plus: last.plus, sigma: last.sigma, tag: boundary_tag(&last, spec) }),
        Err(e) => {
            log::debug!("boundary refinement toward {outside:?} failed: {e}");
            None
        }
    }
}

const NEIGHBOURS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Sweep the undercompressive region containing `seed`.
pub fn sweep_uc_region(seed: &ShockTriple, spec: &FieldSpec, opts: &SweepOptions) -> Result<UCSurfaceNumeric> {
    verify_connection(seed, spec, &opts.search.connection).map_err(|e| Error::SeedInvalid(e.to_string()))?;
    let axis = linalg::normalize(opts.axis);
    let (ha, hc) = (opts.step_along, opts.step_across);
    let origin = seed.minus;

    let mut resolved: HashMap<(i64, i64), Option<SweepNode>> = HashMap::new();
    resolved.insert((0, 0), Some(SweepNode { index: (0, 0), triple: *seed, multi_valued: false }));
    let mut frontier = vec![(0i64, 0i64)];
    let mut crossings: Vec<((i64, i64), (i64, i64))> = Vec::new();

    while !frontier.is_empty() && resolved.len() < opts.max_nodes {
        // Candidates adjacent to the frontier, each warm-started from the
        // first frontier node (in index order) that reaches it.
        let mut candidates: BTreeMap<(i64, i64), (i64, i64)> = BTreeMap::new();
        for &f in &frontier {
            for (di, dj) in NEIGHBOURS {
                let c = (f.0 + di, f.1 + dj);
                if !resolved.contains_key(&c) {
                    candidates.entry(c).or_insert(f);
                }
            }
        }
        let list: Vec<((i64, i64), (i64, i64))> = candidates.into_iter().collect();
        let results = opts.exec.map(list.len(), |k| {
            let (c, src) = list[k];
            let from = resolved[&src].as_ref().expect("frontier nodes are resolved").triple;
            continue_connection(lattice_point(origin, axis, ha, hc, c), &from, spec, opts)
        });
        frontier.clear();
        for ((c, src), r) in list.into_iter().zip(results) {
            match r {
                Some((triple, multi_valued)) => {
                    if multi_valued {
                        log::warn!("several right states for left state {:?}", triple.minus);
                    }
                    resolved.insert(c, Some(SweepNode { index: c, triple, multi_valued }));
                    frontier.push(c);
                }
                None => {
                    resolved.insert(c, None);
                    crossings.push((src, c));
                }
            }
        }
        // Nodes resolved later may also border earlier failures.
        for &c in &frontier {
            for (di, dj) in NEIGHBOURS {
                let n = (c.0 + di, c.1 + dj);
                if matches!(resolved.get(&n), Some(None)) && !crossings.contains(&(c, n)) {
                    crossings.push((c, n));
                }
            }
        }
    }

    let mut nodes: Vec<SweepNode> = resolved.values().flatten().copied().collect();
    nodes.sort_by_key(|n| n.index);

    let mut boundaries: BTreeMap<BoundaryTag, Vec<NumericBoundaryPoint>> = BTreeMap::new();
    if opts.refine_boundaries {
        crossings.sort();
        crossings.dedup();
        let refined = opts.exec.map(crossings.len(), |k| {
            let (inside, outside) = crossings[k];
            let from = resolved[&inside].as_ref().expect("crossing starts inside").triple;
            refine_boundary(&from, lattice_point(origin, axis, ha, hc, outside), spec, opts)
        });
        for b in refined.into_iter().flatten() {
            boundaries.entry(b.tag).or_default().push(b);
        }
        for points in boundaries.values_mut() {
            order_polyline(points);
        }
    }
    Ok(UCSurfaceNumeric { nodes, boundaries, step_along: ha, step_across: hc, axis, origin })
}

/// Greedy nearest-neighbour ordering starting from an extreme point.
fn order_polyline(points: &mut Vec<NumericBoundaryPoint>) {
    if points.len() < 3 {
        return;
    }
    let c = points.iter().fold([0.0, 0.0], |a, p| linalg::add(a, p.minus.vec()));
    let c = linalg::scale(1.0 / points.len() as f64, c);
    let start = (0..points.len())
        .max_by(|&a, &b| linalg::norm(linalg::sub(points[a].minus.vec(), c)).total_cmp(&linalg::norm(linalg::sub(points[b].minus.vec(), c))))
        .unwrap();
    let mut rest = std::mem::take(points);
    let mut cur = rest.swap_remove(start);
    points.push(cur);
    while !rest.is_empty() {
        let k = (0..rest.len()).min_by(|&a, &b| rest[a].minus.distance(cur.minus).total_cmp(&rest[b].minus.distance(cur.minus))).unwrap();
        cur = rest.swap_remove(k);
        points.push(cur);
    }
}

/// Offsets (in units of `step`) tried around a line: unit steps close to
/// it, then geometrically growing ones out to `max_offset`.
fn seed_offsets(step: f64, max_offset: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut k = 1.0_f64;
    while k * step <= max_offset {
        out.push(k * step);
        out.push(-k * step);
        k = if k < 8.0 { k + 1.0 } else { (k * 1.25).round() };
    }
    out
}

/// First connection found near `line`: left states at the given line
/// coordinates, displaced across the line by unit multiples of `step_across`
/// close to it and by geometrically growing offsets up to `max_offset`.
pub fn seed_near_line(
    line: &InvariantLine,
    s_values: &[f64],
    step_across: f64,
    max_offset: f64,
    spec: &FieldSpec,
    opts: &SearchOptions,
) -> Option<ShockTriple> {
    let n = linalg::perp(linalg::normalize(line.direction()));
    let offsets = seed_offsets(step_across, max_offset);
    for &s in s_values {
        let base = line.embed(s).vec();
        for &o in &offsets {
            let ul = State::from_vec(linalg::axpy(o, n, base));
            if !ul.in_triangle(0.0) || ul.edge_distance() < 1e-6 {
                continue;
            }
            if let Some(t) = connection_search(ul, spec, opts).ok().and_then(|v| v.into_iter().next()) {
                return Some(t);
            }
        }
    }
    None
}

/// Seed near `line` and sweep the region around the seed.
///
/// Left states are tried at fractions of the umbilic coordinate, closest to
/// three quarters first, with across-line offsets up to 0.1.
pub fn sweep_near_line(line: &InvariantLine, spec: &FieldSpec, opts: &SweepOptions) -> Result<UCSurfaceNumeric> {
    let s_u = line.distinguished_states().s_u;
    let s_values: Vec<f64> = [0.75, 0.65, 0.85, 0.55].iter().map(|k| k * s_u).collect();
    let seed = seed_near_line(line, &s_values, opts.step_across, 0.1, spec, &opts.search)
        .ok_or_else(|| Error::SeedInvalid(format!("no connection found near line {}", line.vertex.name())))?;
    log::info!("seed {:?} -> {:?} at σ = {}", seed.minus, seed.plus, seed.sigma);
    sweep_uc_region(&seed, spec, opts)
}
