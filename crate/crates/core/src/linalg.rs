//! Tiny fixed-size helpers for the planar problems in this crate.

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

#[inline]
pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(k: f64, a: Vec2) -> Vec2 {
    [k * a[0], k * a[1]]
}

#[inline]
pub fn axpy(k: f64, x: Vec2, y: Vec2) -> Vec2 {
    [y[0] + k * x[0], y[1] + k * x[1]]
}

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn perp(a: Vec2) -> Vec2 {
    [-a[1], a[0]]
}

pub fn normalize(a: Vec2) -> Vec2 {
    let n = norm(a);
    if n == 0.0 {
        a
    } else {
        scale(1.0 / n, a)
    }
}

#[inline]
pub fn matvec(m: &Mat2, v: Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

#[inline]
pub fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

#[inline]
pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

#[inline]
pub fn trace(m: &Mat2) -> f64 {
    m[0][0] + m[1][1]
}

/// Classical adjugate: `adj(m) * m = det(m) I`.
#[inline]
pub fn adjugate(m: &Mat2) -> Mat2 {
    [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]
}

pub fn transpose(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

/// Solve `m x = b` by Cramer's rule; `None` when the matrix is numerically singular.
pub fn solve(m: &Mat2, b: Vec2) -> Option<Vec2> {
    let d = det(m);
    let scale = m.iter().flatten().fold(0.0_f64, |a, x| a.max(x.abs()));
    if d.abs() <= 1e-300 || d.abs() <= 1e-15 * scale * scale {
        return None;
    }
    Some([
        (b[0] * m[1][1] - b[1] * m[0][1]) / d,
        (m[0][0] * b[1] - m[1][0] * b[0]) / d,
    ])
}

/// Eigenvalues of a real 2×2 matrix, as (real, imag) parts of the pair
/// sorted so the first has the smaller real part (or, if real, smaller value).
pub fn eigenvalues(m: &Mat2) -> ([f64; 2], f64) {
    let half_tr = 0.5 * trace(m);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let disc = half_diff * half_diff + m[0][1] * m[1][0];
    if disc >= 0.0 {
        let r = disc.sqrt();
        // Avoid cancellation for the smaller-magnitude root.
        let (a, b) = if half_tr >= 0.0 {
            let big = half_tr + r;
            let small = if big != 0.0 { det(m) / big } else { half_tr - r };
            (small, big)
        } else {
            let big = half_tr - r;
            let small = if big != 0.0 { det(m) / big } else { half_tr + r };
            (big, small)
        };
        ([a.min(b), a.max(b)], 0.0)
    } else {
        ([half_tr, half_tr], (-disc).sqrt())
    }
}

pub fn add_mat(a: Mat2, b: Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

pub fn sub_mat(a: Mat2, b: Mat2) -> Mat2 {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

pub fn scale_mat(k: f64, a: Mat2) -> Mat2 {
    [[k * a[0][0], k * a[0][1]], [k * a[1][0], k * a[1][1]]]
}

/// Inverse, or `None` when the determinant vanishes relative to the entries.
pub fn inverse(m: Mat2) -> Option<Mat2> {
    let d = det(&m);
    let scale = m.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()));
    if d.abs() <= 1e-300_f64.max(1e-15 * scale * scale) {
        return None;
    }
    Some(scale_mat(1.0 / d, adjugate(&m)))
}
