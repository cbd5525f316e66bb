//! Crank–Nicolson solver for `U_t + F(U)_x = ε (B(U) U_x)_x` with Riemann
//! data, and extraction of wave groups from the self-similar profile.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::capillarity::{capillarity_matrix_extended, ViscosityMode};
use crate::corey::{char_speeds, flux, jacobian, umbilic_point, FluidParams, State};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Vec2};

/// Saturations are clipped this far inside the triangle before `B` is
/// evaluated.
pub const CLIP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub left: State,
    pub right: State,
    pub dx: f64,
    pub dt: f64,
    pub t_final: f64,
    pub epsilon: f64,
    pub mode: ViscosityMode,
    /// Domain is `[-half_width, half_width]`; chosen from the wave speeds
    /// when absent.
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max")]
    pub newton_max: usize,
    /// Number of stored profiles, evenly spaced in time and ending at
    /// `t_final`.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    /// Width of a `tanh` transition replacing the jump (0 keeps the jump).
    #[serde(default)]
    pub initial_width: f64,
    /// Nodes within this distance of the far-field states are left out of
    /// the Newton solve (0 solves on the whole grid).
    #[serde(default = "default_window_tol")]
    pub window_tol: f64,
}

fn default_newton_tol() -> f64 {
    1e-10
}
fn default_newton_max() -> usize {
    30
}
fn default_snapshots() -> usize {
    1
}
fn default_window_tol() -> f64 {
    1e-13
}

impl SimConfig {
    pub fn new(left: State, right: State, dx: f64, dt: f64, t_final: f64, epsilon: f64, mode: ViscosityMode) -> Self {
        SimConfig {
            left,
            right,
            dx,
            dt,
            t_final,
            epsilon,
            mode,
            half_width: None,
            newton_tol: default_newton_tol(),
            newton_max: default_newton_max(),
            snapshots: default_snapshots(),
            initial_width: 0.0,
            window_tol: default_window_tol(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("dx", self.dx), ("dt", self.dt), ("t_final", self.t_final), ("epsilon", self.epsilon)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(x) = self.half_width {
            if !(x.is_finite() && x > self.dx) {
                return Err(Error::InvalidParams(format!("half_width must exceed dx, got {x}")));
            }
        }
        if !(self.newton_tol > 0.0) || self.newton_max == 0 || self.snapshots == 0 {
            return Err(Error::InvalidParams("newton_tol, newton_max and snapshots must be positive".into()));
        }
        for u in [self.left, self.right] {
            if !u.in_triangle(0.0) {
                return Err(Error::InvalidState { sw: u.sw, so: u.so });
            }
        }
        Ok(())
    }

    /// `1.2·T_f·(largest characteristic speed)` over the data, the umbilic
    /// and the segment joining the data.
    pub fn default_half_width(&self, p: &FluidParams) -> f64 {
        let mut speed: f64 = char_speeds(umbilic_point(p), p).1;
        for k in 0..=64 {
            let t = k as f64 / 64.0;
            let u = State::from_vec(linalg::add(linalg::scale(1.0 - t, self.left.vec()), linalg::scale(t, self.right.vec())));
            let (a, b) = char_speeds(u, p);
            speed = speed.max(a.abs()).max(b.abs());
        }
        1.2 * self.t_final * speed.max(1e-3)
    }
}

/// Stored solution profiles on the node grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub x: Vec<f64>,
    pub times: Vec<f64>,
    pub sw: Vec<Vec<f64>>,
    pub so: Vec<Vec<f64>>,
}

impl Profile {
    pub fn state(&self, snapshot: usize, i: usize) -> State {
        State { sw: self.sw[snapshot][i], so: self.so[snapshot][i] }
    }

    pub fn last(&self) -> usize {
        self.times.len() - 1
    }

    /// CSV with columns `t, x, v, s_w, s_o`; `v` is empty at `t = 0`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,v,s_w,s_o")?;
        for (k, &t) in self.times.iter().enumerate() {
            for (i, &x) in self.x.iter().enumerate() {
                let v = if t > 0.0 { format!("{:.16e}", x / t) } else { String::new() };
                writeln!(w, "{:.16e},{:.16e},{},{:.16e},{:.16e}", t, x, v, self.sw[k][i], self.so[k][i])?;
            }
        }
        Ok(())
    }
}

fn clipped(u: Vec2) -> State {
    let sw = u[0].max(CLIP);
    let so = u[1].max(CLIP);
    let excess = (sw + so - (1.0 - CLIP)).max(0.0);
    State { sw: sw - 0.5 * excess, so: so - 0.5 * excess }
}

/// Time stepper holding the current grid state.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SimConfig,
    params: FluidParams,
    pub x: Vec<f64>,
    /// Node values including the two Dirichlet nodes.
    pub u: Vec<Vec2>,
    pub t: f64,
}

struct Blocks {
    lower: Vec<Mat2>,
    diag: Vec<Mat2>,
    upper: Vec<Mat2>,
}

impl Simulator {
    pub fn new(cfg: SimConfig, params: FluidParams) -> Result<Self> {
        cfg.validate()?;
        let half = cfg.half_width.unwrap_or_else(|| cfg.default_half_width(&params));
        let n = (2.0 * half / cfg.dx).round() as usize;
        let x: Vec<f64> = (0..=n).map(|i| -half + i as f64 * cfg.dx).collect();
        let (l, r) = (cfg.left.vec(), cfg.right.vec());
        let u = x
            .iter()
            .map(|&xi| {
                let w = if cfg.initial_width > 0.0 {
                    0.5 * (1.0 + (xi / cfg.initial_width).tanh())
                } else if xi < 0.0 {
                    0.0
                } else if xi > 0.0 {
                    1.0
                } else {
                    0.5
                };
                linalg::add(linalg::scale(1.0 - w, l), linalg::scale(w, r))
            })
            .collect();
        Ok(Simulator { cfg, params, x, u, t: 0.0 })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    fn diffusion(&self, u: Vec2) -> Mat2 {
        match self.cfg.mode {
            ViscosityMode::Identity => [[1.0, 0.0], [0.0, 1.0]],
            ViscosityMode::Capillarity => capillarity_matrix_extended(clipped(u), &self.params),
        }
    }

    /// Flux through the cell face between nodes `i` and `i + 1`:
    /// `½(F_i + F_{i+1}) − ε B_{i+½} (U_{i+1} − U_i)/Δx`.
    fn face_flux(&self, u: &[Vec2], i: usize) -> Vec2 {
        let p = &self.params;
        let fa = flux(State::from_vec(u[i]), p);
        let fb = flux(State::from_vec(u[i + 1]), p);
        let b = self.diffusion(linalg::scale(0.5, linalg::add(u[i], u[i + 1])));
        let grad = linalg::scale(1.0 / self.cfg.dx, linalg::sub(u[i + 1], u[i]));
        linalg::sub(linalg::scale(0.5, linalg::add(fa, fb)), linalg::scale(self.cfg.epsilon, linalg::matvec(&b, grad)))
    }

    /// Semi-discrete right-hand side at interior nodes.
    fn rhs(&self, u: &[Vec2]) -> Vec<Vec2> {
        let n = u.len();
        let faces: Vec<Vec2> = (0..n - 1).map(|i| self.face_flux(u, i)).collect();
        (1..n - 1).map(|i| linalg::scale(-1.0 / self.cfg.dx, linalg::sub(faces[i], faces[i - 1]))).collect()
    }

    /// Net inflow `G_{½} − G_{N−½}` through the two outermost faces.
    pub fn boundary_flux(&self) -> Vec2 {
        let n = self.u.len();
        linalg::sub(self.face_flux(&self.u, 0), self.face_flux(&self.u, n - 2))
    }

    /// Derivatives of the face flux at face `i` with respect to the node
    /// values on its left and right.
    fn face_jacobians(&self, u: &[Vec2], i: usize) -> (Mat2, Mat2) {
        let p = &self.params;
        let (dx, eps) = (self.cfg.dx, self.cfg.epsilon);
        let ja = jacobian(State::from_vec(u[i]), p);
        let jb = jacobian(State::from_vec(u[i + 1]), p);
        let mid = linalg::scale(0.5, linalg::add(u[i], u[i + 1]));
        let b = self.diffusion(mid);
        let diff = linalg::sub(u[i + 1], u[i]);
        // ∂(B(mid)·diff)/∂mid by central differences, one column per component.
        let mut db = [[0.0; 2]; 2];
        if self.cfg.mode == ViscosityMode::Capillarity {
            let h = 1e-7;
            for k in 0..2 {
                let mut up = mid;
                let mut dn = mid;
                up[k] += h;
                dn[k] -= h;
                let col = linalg::scale(
                    1.0 / (2.0 * h),
                    linalg::sub(linalg::matvec(&self.diffusion(up), diff), linalg::matvec(&self.diffusion(dn), diff)),
                );
                db[0][k] = col[0];
                db[1][k] = col[1];
            }
        }
        let half_db = linalg::scale_mat(0.5 * eps / dx, db);
        let b_term = linalg::scale_mat(eps / dx, b);
        // d/dU_i:   ½J_i + εB/Δx − ½ε/Δx·∂B·diff
        // d/dU_i+1: ½J_{i+1} − εB/Δx − ½ε/Δx·∂B·diff
        let left = linalg::add_mat(linalg::sub_mat(linalg::scale_mat(0.5, ja), half_db), b_term);
        let right = linalg::sub_mat(linalg::sub_mat(linalg::scale_mat(0.5, jb), half_db), b_term);
        (left, right)
    }

    fn newton_blocks(&self, v: &[Vec2], dt: f64) -> Blocks {
        let n = v.len();
        let m = n - 2;
        let c = 0.5 * dt / self.cfg.dx;
        let faces: Vec<(Mat2, Mat2)> = (0..n - 1).map(|i| self.face_jacobians(v, i)).collect();
        let eye = [[1.0, 0.0], [0.0, 1.0]];
        let mut lower = vec![[[0.0; 2]; 2]; m];
        let mut diag = vec![eye; m];
        let mut upper = vec![[[0.0; 2]; 2]; m];
        for k in 0..m {
            let node = k + 1;
            // Residual_k = V − Uⁿ + c·(G_{node} − G_{node−1}) summed over both levels.
            let (fl_left, fl_right) = faces[node - 1];
            let (fr_left, fr_right) = faces[node];
            diag[k] = linalg::add_mat(eye, linalg::scale_mat(c, linalg::sub_mat(fr_left, fl_right)));
            lower[k] = linalg::scale_mat(-c, fl_left);
            upper[k] = linalg::scale_mat(c, fr_right);
        }
        Blocks { lower, diag, upper }
    }

    fn residual(&self, v: &[Vec2], old: &[Vec2], rhs_old: &[Vec2], dt: f64) -> Vec<Vec2> {
        let rhs_new = self.rhs(v);
        let half = 0.5 * dt;
        (0..rhs_new.len())
            .map(|k| linalg::sub(linalg::sub(v[k + 1], old[k + 1]), linalg::scale(half, linalg::add(rhs_new[k], rhs_old[k]))))
            .collect()
    }

    /// Node range that can change during the next step: everything not yet
    /// within `window_tol` of the far-field states, padded on both sides.
    fn active_window(&self) -> (usize, usize) {
        let n = self.u.len();
        let tol = self.cfg.window_tol;
        if tol <= 0.0 {
            return (0, n - 1);
        }
        let (l, r) = (self.u[0], self.u[n - 1]);
        let far = |a: Vec2, b: Vec2| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()) > tol;
        let first = self.u.iter().position(|v| far(*v, l)).unwrap_or(n / 2);
        let last = self.u.iter().rposition(|v| far(*v, r)).unwrap_or(n / 2);
        let pad = 32 + (4.0 * self.cfg.dt / self.cfg.dx).ceil() as usize;
        (first.min(last).saturating_sub(pad), (first.max(last) + pad).min(n - 1))
    }

    /// Advance one time step.
    ///
    /// A step whose Newton iteration fails is retried as two half steps,
    /// down to `dt / 2^MAX_SPLITS`; steep initial jumps need this for the
    /// first few steps.
    pub fn step(&mut self) -> Result<()> {
        self.advance(self.cfg.dt, 0)
    }

    fn advance(&mut self, dt: f64, depth: u32) -> Result<()> {
        const MAX_SPLITS: u32 = 8;
        match self.try_step(dt) {
            Err(Error::NewtonDiverged { .. }) if depth < MAX_SPLITS => {
                log::debug!("splitting step at t = {} (dt = {dt})", self.t);
                self.advance(0.5 * dt, depth + 1)?;
                self.advance(0.5 * dt, depth + 1)
            }
            other => other,
        }
    }

    fn try_step(&mut self, dt: f64) -> Result<()> {
        let (lo, hi) = self.active_window();
        let old: Vec<Vec2> = self.u[lo..=hi].to_vec();
        let rhs_old = self.rhs(&old);
        let mut v = old.clone();
        let mut res = self.residual(&v, &old, &rhs_old, dt);
        let mut norm = max_norm(&res);
        let mut converged = norm <= self.cfg.newton_tol;
        for _ in 0..self.cfg.newton_max {
            if converged {
                break;
            }
            let blocks = self.newton_blocks(&v, dt);
            let delta = solve_block_tridiagonal(&blocks, &res).ok_or(Error::NewtonDiverged { t: self.t, residual: norm })?;
            let mut lambda = 1.0;
            loop {
                let mut trial = v.clone();
                for (k, d) in delta.iter().enumerate() {
                    trial[k + 1] = linalg::axpy(-lambda, *d, v[k + 1]);
                }
                let trial_res = self.residual(&trial, &old, &rhs_old, dt);
                let trial_norm = max_norm(&trial_res);
                if trial_norm < norm || trial_norm <= self.cfg.newton_tol {
                    v = trial;
                    res = trial_res;
                    norm = trial_norm;
                    break;
                }
                lambda *= 0.5;
                if lambda < 1e-4 {
                    return Err(Error::NewtonDiverged { t: self.t, residual: norm });
                }
            }
            converged = norm <= self.cfg.newton_tol;
        }
        if !converged {
            return Err(Error::NewtonDiverged { t: self.t, residual: norm });
        }
        for x in v.iter_mut() {
            let s = State::from_vec(*x);
            if !s.in_triangle(0.0) {
                if !s.in_triangle(1e-9) {
                    log::warn!("state {s:?} outside the triangle at t = {}", self.t);
                }
                *x = s.clamp_to_triangle().vec();
            }
        }
        self.u[lo..=hi].copy_from_slice(&v);
        self.t += dt;
        Ok(())
    }

    pub fn state_at(&self, i: usize) -> State {
        State::from_vec(self.u[i])
    }
}

fn max_norm(r: &[Vec2]) -> f64 {
    r.iter().fold(0.0_f64, |a, v| a.max(v[0].abs()).max(v[1].abs()))
}

/// Block Thomas algorithm for 2×2 blocks.
fn solve_block_tridiagonal(b: &Blocks, rhs: &[Vec2]) -> Option<Vec<Vec2>> {
    let m = rhs.len();
    let mut c_prime: Vec<Mat2> = Vec::with_capacity(m);
    let mut d_prime: Vec<Vec2> = Vec::with_capacity(m);
    for k in 0..m {
        let (denom, d) = if k == 0 {
            (b.diag[0], rhs[0])
        } else {
            (
                linalg::sub_mat(b.diag[k], linalg::matmul(&b.lower[k], &c_prime[k - 1])),
                linalg::sub(rhs[k], linalg::matvec(&b.lower[k], d_prime[k - 1])),
            )
        };
        let inv = linalg::inverse(denom)?;
        c_prime.push(linalg::matmul(&inv, &b.upper[k]));
        d_prime.push(linalg::matvec(&inv, d));
    }
    let mut x = vec![[0.0; 2]; m];
    x[m - 1] = d_prime[m - 1];
    for k in (0..m - 1).rev() {
        x[k] = linalg::sub(d_prime[k], linalg::matvec(&c_prime[k], x[k + 1]));
    }
    Some(x)
}

/// Run to `t_final`, storing `cfg.snapshots` profiles (plus the initial one).
pub fn simulate(cfg: &SimConfig, p: &FluidParams) -> Result<Profile> {
    let mut sim = Simulator::new(cfg.clone(), *p)?;
    let steps = (cfg.t_final / cfg.dt).round().max(1.0) as usize;
    let every = (steps as f64 / cfg.snapshots as f64).max(1.0);
    let mut profile = Profile { x: sim.x.clone(), times: Vec::new(), sw: Vec::new(), so: Vec::new() };
    let store = |sim: &Simulator, profile: &mut Profile| {
        profile.times.push(sim.t);
        profile.sw.push(sim.u.iter().map(|v| v[0]).collect());
        profile.so.push(sim.u.iter().map(|v| v[1]).collect());
    };
    store(&sim, &mut profile);
    let mut next = 1usize;
    for n in 1..=steps {
        sim.step()?;
        if n == steps || n as f64 >= next as f64 * every - 1e-9 {
            store(&sim, &mut profile);
            next += 1;
        }
    }
    Ok(profile)
}

/// Constant state over an interval of the similarity variable `v = x/t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub state: State,
    pub v_range: (f64, f64),
}

/// Plateaus in increasing `v` and the wave groups between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveStructure {
    pub plateaus: Vec<Plateau>,
    /// Speed intervals of the wave groups separating consecutive plateaus.
    pub groups: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauOptions {
    /// Upper bound on `‖dU/dv‖` inside a plateau.
    pub plateau_tol: f64,
    /// Shortest plateau, in `v`.
    pub min_width: f64,
    /// Neighbouring plateaus closer than this in state are merged.
    pub merge_tol: f64,
}

impl Default for PlateauOptions {
    fn default() -> Self {
        PlateauOptions { plateau_tol: 0.05, min_width: 0.02, merge_tol: 5e-3 }
    }
}

/// Detect constant states in one stored profile.
pub fn extract_wave_groups(profile: &Profile, snapshot: usize, opts: &PlateauOptions) -> WaveStructure {
    let t = profile.times[snapshot];
    let n = profile.x.len();
    let states: Vec<State> = (0..n).map(|i| profile.state(snapshot, i)).collect();
    if t <= 0.0 || n < 3 {
        let s = states[0];
        return WaveStructure { plateaus: vec![Plateau { state: s, v_range: (f64::NEG_INFINITY, f64::INFINITY) }], groups: vec![] };
    }
    let v: Vec<f64> = profile.x.iter().map(|x| x / t).collect();
    let flat: Vec<bool> = (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            states[b].distance(states[a]) / (v[b] - v[a]) < opts.plateau_tol
        })
        .collect();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n {
        if flat[i] {
            let start = i;
            while i + 1 < n && flat[i + 1] {
                i += 1;
            }
            if v[i] - v[start] >= opts.min_width {
                runs.push((start, i));
            }
        }
        i += 1;
    }
    let mean = |(a, b): (usize, usize)| {
        let k = (b - a + 1) as f64;
        let s = states[a..=b].iter().fold([0.0, 0.0], |acc, s| linalg::add(acc, s.vec()));
        State::from_vec(linalg::scale(1.0 / k, s))
    };
    let mut plateaus: Vec<Plateau> = Vec::new();
    for r in runs {
        let p = Plateau { state: mean(r), v_range: (v[r.0], v[r.1]) };
        match plateaus.last_mut() {
            Some(last) if last.state.distance(p.state) < opts.merge_tol => {
                last.v_range.1 = p.v_range.1;
                last.state = p.state;
            }
            _ => plateaus.push(p),
        }
    }
    let groups = plateaus.windows(2).map(|w| (w[0].v_range.1, w[1].v_range.0)).collect();
    WaveStructure { plateaus, groups }
}
