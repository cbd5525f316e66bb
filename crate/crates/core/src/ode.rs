//! Adaptive Dormand–Prince 5(4) integrator for planar autonomous fields,
//! stepped one accepted step at a time so callers can monitor events.

use crate::linalg::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, h_init: 1e-3, h_min: 1e-14, h_max: f64::INFINITY }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Differences between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn comb(x: Vec2, h: f64, terms: &[(f64, Vec2)]) -> Vec2 {
    let mut out = x;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// One Dormand–Prince step; returns the fifth-order solution, the error
/// estimate and the derivative at the new point.
fn dp_step<F: Fn(Vec2) -> Vec2>(f: &F, x: Vec2, k1: Vec2, h: f64) -> (Vec2, Vec2, Vec2) {
    let k2 = f(comb(x, h, &[(A21, k1)]));
    let k3 = f(comb(x, h, &[(A31, k1), (A32, k2)]));
    let k4 = f(comb(x, h, &[(A41, k1), (A42, k2), (A43, k3)]));
    let k5 = f(comb(x, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]));
    let k6 = f(comb(x, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]));
    let y = comb(x, h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
    let k7 = f(y);
    let err = comb([0.0, 0.0], h, &[(E1, k1), (E3, k3), (E4, k4), (E5, k5), (E6, k6), (E7, k7)]);
    (y, err, k7)
}

/// An accepted step from `from` to `to` with signed size `h`.
#[derive(Debug, Clone, Copy)]
pub struct Step {
    pub from: Vec2,
    pub to: Vec2,
    pub h: f64,
}

/// Stateful integrator of `dx/dt = f(x)`; negative `direction` integrates
/// backwards in time.
pub struct Integrator<F: Fn(Vec2) -> Vec2> {
    f: F,
    pub x: Vec2,
    pub t: f64,
    k1: Vec2,
    h: f64,
    dir: f64,
    opts: OdeOptions,
}

impl<F: Fn(Vec2) -> Vec2> Integrator<F> {
    pub fn new(f: F, x0: Vec2, direction: f64, opts: OdeOptions) -> Self {
        let k1 = f(x0);
        let dir = if direction < 0.0 { -1.0 } else { 1.0 };
        Integrator { f, x: x0, t: 0.0, k1, h: opts.h_init, dir, opts }
    }

    pub fn field(&self, x: Vec2) -> Vec2 {
        (self.f)(x)
    }

    /// Derivative at the current point.
    pub fn current_derivative(&self) -> Vec2 {
        self.k1
    }

    /// Advance by one accepted step. `None` if the step size underflowed.
    pub fn step(&mut self) -> Option<Step> {
        loop {
            let h = self.dir * self.h;
            let (y, err, k7) = dp_step(&self.f, self.x, self.k1, h);
            let mut e = 0.0_f64;
            for i in 0..2 {
                let sc = self.opts.atol + self.opts.rtol * self.x[i].abs().max(y[i].abs());
                e = e.max((err[i] / sc).abs());
            }
            if !e.is_finite() {
                self.h *= 0.1;
            } else if e <= 1.0 {
                let step = Step { from: self.x, to: y, h };
                self.x = y;
                self.t += h;
                self.k1 = k7;
                let fac = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
                self.h = (self.h * fac).min(self.opts.h_max);
                return Some(step);
            } else {
                self.h *= (0.9 * e.powf(-0.2)).clamp(0.1, 0.9);
            }
            if self.h < self.opts.h_min {
                return None;
            }
        }
    }

    /// Re-integrate a fraction `theta` of an accepted step (a single
    /// Dormand–Prince step, accurate to the local tolerance).
    pub fn partial(&self, step: &Step, theta: f64) -> Vec2 {
        if theta <= 0.0 {
            return step.from;
        }
        let k1 = (self.f)(step.from);
        dp_step(&self.f, step.from, k1, theta * step.h).0
    }

    /// Locate the zero of `g` inside an accepted step where `g` changes sign,
    /// bisecting until the bracket is shorter than `tol` in state space.
    pub fn locate<G: Fn(Vec2) -> f64>(&self, step: &Step, g: G, tol: f64) -> (f64, Vec2) {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let g_lo = g(step.from);
        let mut x_hi = step.to;
        let len = crate::linalg::norm(crate::linalg::sub(step.to, step.from)).max(1e-300);
        for _ in 0..200 {
            if (hi - lo) * len <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let xm = self.partial(step, mid);
            let gm = g(xm);
            if gm == 0.0 {
                return (mid, xm);
            }
            if (gm > 0.0) == (g_lo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
                x_hi = xm;
            }
        }
        (hi, x_hi)
    }
}
