use approx::assert_relative_eq;
use proptest::prelude::*;

use uctk_core::corey::*;
use uctk_core::linalg;

fn reference_params() -> FluidParams {
    FluidParams::new(1.0, 2.0, 0.75, 1.0, 1.0).unwrap()
}

/// Fractional flows evaluated straight from the mobility ratios.
fn flux_oracle(sw: f64, so: f64, mu: [f64; 3]) -> [f64; 2] {
    let sg = 1.0 - sw - so;
    let (lw, lo, lg) = (sw * sw / mu[0], so * so / mu[1], sg * sg / mu[2]);
    let t = lw + lo + lg;
    [lw / t, lo / t]
}

fn interior() -> impl Strategy<Value = State> {
    (0.01f64..0.98, 0.01f64..0.98)
        .prop_filter("inside", |(a, b)| a + b < 0.99)
        .prop_map(|(sw, so)| State { sw, so })
}

fn viscosities() -> impl Strategy<Value = FluidParams> {
    (0.2f64..5.0, 0.2f64..5.0, 0.2f64..5.0).prop_map(|(a, b, c)| FluidParams::viscosities(a, b, c).unwrap())
}

#[test]
fn state_validation_rejects_points_outside_the_triangle() {
    assert!(State::new(0.5, 0.5).is_ok());
    assert!(State::new(-0.1, 0.5).is_err());
    assert!(State::new(0.7, 0.4).is_err());
    assert!(State::new(f64::NAN, 0.1).is_err());
}

#[test]
fn params_must_be_positive() {
    assert!(FluidParams::new(1.0, 2.0, 0.75, 1.0, 1.0).is_ok());
    assert!(FluidParams::new(0.0, 2.0, 0.75, 1.0, 1.0).is_err());
    assert!(FluidParams::new(1.0, 2.0, 0.75, -1.0, 1.0).is_err());
}

#[test]
fn flux_at_water_vertex_is_pure_water() {
    let f = flux(State { sw: 1.0, so: 0.0 }, &reference_params());
    assert_eq!(f, [1.0, 0.0]);
}

#[test]
fn flux_fixes_the_umbilic_point() {
    let p = reference_params();
    let u = State { sw: 1.0 / 3.75, so: 2.0 / 3.75 };
    let f = flux(u, &p);
    assert_relative_eq!(f[0], u.sw, epsilon = 1e-12);
    assert_relative_eq!(f[1], u.so, epsilon = 1e-12);
    assert_relative_eq!(f[0], 0.266667, epsilon = 1e-5);
    assert_relative_eq!(f[1], 0.533333, epsilon = 1e-5);
}

#[test]
fn flux_on_gas_line_reduces_to_effective_flux() {
    let f = flux(State { sw: 0.1, so: 0.2 }, &reference_params());
    let expected = 0.09 / (0.09 + 4.0 * 0.49);
    assert_relative_eq!(f[0] + f[1], expected, epsilon = 1e-12);
    assert_relative_eq!(f[0] + f[1], 0.0439024, epsilon = 1e-6);
}

#[test]
fn umbilic_eigenvalues_equal_two() {
    let p = reference_params();
    let u = umbilic_point(&p);
    let (ls, lf) = char_speeds(u, &p);
    assert_relative_eq!(ls, 2.0, epsilon = 1e-10);
    assert_relative_eq!(lf, 2.0, epsilon = 1e-10);
    let e = eigen(u, &p).unwrap();
    assert_relative_eq!(e.lambda_s, 2.0, epsilon = 1e-10);
    assert_relative_eq!(linalg::norm(e.r_s), 1.0, epsilon = 1e-12);
    assert_relative_eq!(linalg::norm(e.r_f), 1.0, epsilon = 1e-12);
    // The fallback basis at the umbilic is orthonormal.
    assert!(linalg::dot(e.r_s, e.r_f).abs() < 1e-12);
}

#[test]
fn fast_speed_at_d_equals_two() {
    let p = reference_params();
    let (_, lf) = char_speeds(State { sw: 1.0 / 3.0, so: 2.0 / 3.0 }, &p);
    assert_relative_eq!(lf, 2.0, epsilon = 1e-10);
}

#[test]
fn umbilic_point_examples() {
    let u = umbilic_point(&FluidParams::viscosities(1.0, 1.0, 1.0).unwrap());
    assert_relative_eq!(u.sw, 1.0 / 3.0, epsilon = 1e-15);
    assert_relative_eq!(u.so, 1.0 / 3.0, epsilon = 1e-15);
    let u = umbilic_point(&reference_params());
    assert_relative_eq!(u.sw, 1.0 / 3.75, epsilon = 1e-15);
    assert_relative_eq!(u.so, 2.0 / 3.75, epsilon = 1e-15);
}

#[test]
fn classification_examples() {
    let p = reference_params();
    assert_eq!(classify_umbilic(&p), UmbilicClass::IIO);
    assert_eq!(classify_umbilic(&FluidParams::viscosities(1.0, 1.0, 1.0).unwrap()), UmbilicClass::I);
    let r = viscosity_ratios(&p);
    assert_relative_eq!(r.nu_o, 0.875, epsilon = 1e-15);
    assert_relative_eq!(r.nu_g, 4.0, epsilon = 1e-15);
    assert_relative_eq!(r.nu_w, 2.75, epsilon = 1e-15);
    // ν_W = (μ_o + μ_g)/μ_w = 1 exactly.
    assert_eq!(classify_umbilic(&FluidParams::viscosities(2.0, 1.0, 1.0).unwrap()), UmbilicClass::Border);
    assert_eq!(classify_umbilic(&FluidParams::viscosities(5.0, 1.0, 1.0).unwrap()), UmbilicClass::IIW);
    assert_eq!(classify_umbilic(&FluidParams::viscosities(1.0, 1.0, 5.0).unwrap()), UmbilicClass::IIG);
}

#[test]
fn rh_residual_examples_on_gas_line() {
    let p = reference_params();
    let embed = |s: f64| State { sw: s / 3.0, so: 2.0 * s / 3.0 };
    let (um, up) = (embed(0.5), embed(1.0));
    assert!(linalg::norm(rh_residual(um, up, 1.6, &p)) < 1e-12);
    assert!(linalg::norm(rh_residual(um, up, 1.0, &p)) > 1e-3);
    assert_eq!(rh_residual(um, um, 0.7, &p), [0.0, 0.0]);
    assert_relative_eq!(shock_speed(um, up, &p).unwrap(), 1.6, epsilon = 1e-12);
    assert_relative_eq!(shock_speed(embed(0.5), embed(0.8), &p).unwrap(), 2.0, epsilon = 1e-12);
}

#[test]
fn shock_speed_rejects_unrelated_states() {
    let p = reference_params();
    let err = shock_speed(State { sw: 0.2, so: 0.3 }, State { sw: 0.5, so: 0.1 }, &p).unwrap_err();
    assert!(matches!(err, uctk_core::Error::InconsistentSpeeds(..)));
    assert!(shock_speed(State { sw: 0.2, so: 0.3 }, State { sw: 0.2, so: 0.3 }, &p).is_err());
}

#[test]
fn jacobian_matches_finite_differences_on_grid() {
    let p = reference_params();
    let h = 1e-6;
    for i in 1..50 {
        for j in 1..50 {
            let (sw, so) = (i as f64 / 50.0, j as f64 / 50.0);
            if sw + so >= 0.99 {
                continue;
            }
            let u = State { sw, so };
            let jac = jacobian(u, &p);
            for k in 0..2 {
                let mut a = u.vec();
                let mut b = u.vec();
                a[k] += h;
                b[k] -= h;
                let fa = flux(State::from_vec(a), &p);
                let fb = flux(State::from_vec(b), &p);
                for r in 0..2 {
                    let fd = (fa[r] - fb[r]) / (2.0 * h);
                    let scale = jac[r][k].abs().max(1.0);
                    assert!((fd - jac[r][k]).abs() / scale < 1e-6, "∂f{r}/∂u{k} at {u:?}: {fd} vs {}", jac[r][k]);
                }
            }
        }
    }
}

#[test]
fn speeds_coincide_only_at_the_umbilic() {
    let p = reference_params();
    let u = umbilic_point(&p);
    let n = 200;
    for i in 1..n {
        for j in 1..(n - i) {
            let s = State { sw: i as f64 / n as f64, so: j as f64 / n as f64 };
            let (ls, lf) = char_speeds(s, &p);
            assert!(ls <= lf);
            let d = s.distance(u);
            if d > 0.02 {
                assert!(lf - ls > 1e-8, "speeds coincide at {s:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn flux_matches_mobility_oracle(u in interior(), p in viscosities()) {
        let f = flux(u, &p);
        let g = flux_oracle(u.sw, u.so, [p.mu_w, p.mu_o, p.mu_g]);
        prop_assert!((f[0] - g[0]).abs() < 1e-14 && (f[1] - g[1]).abs() < 1e-14);
        prop_assert!((0.0..=1.0).contains(&f[0]) && (0.0..=1.0).contains(&f[1]));
        let fg = 1.0 - f[0] - f[1];
        prop_assert!(fg >= -1e-15);
    }

    #[test]
    fn interchange_symmetry(u in interior(), p in viscosities()) {
        let swapped = FluidParams::viscosities(p.mu_o, p.mu_w, p.mu_g).unwrap();
        let f = flux(u, &p);
        let g = flux(State { sw: u.so, so: u.sw }, &swapped);
        prop_assert_eq!(f[0], g[1]);
        prop_assert_eq!(f[1], g[0]);
    }

    #[test]
    fn eigen_structure_is_consistent(u in interior(), p in viscosities()) {
        let um = umbilic_point(&p);
        prop_assume!(u.distance(um) > 1e-3);
        let e = eigen(u, &p).unwrap();
        prop_assert!(e.lambda_s <= e.lambda_f);
        let j = jacobian(u, &p);
        for (lam, r, l) in [(e.lambda_s, e.r_s, e.l_s), (e.lambda_f, e.r_f, e.l_f)] {
            let jr = linalg::matvec(&j, r);
            let scale = 1.0 + lam.abs();
            prop_assert!((jr[0] - lam * r[0]).abs() < 1e-8 * scale && (jr[1] - lam * r[1]).abs() < 1e-8 * scale);
            let lj = linalg::matvec(&linalg::transpose(&j), l);
            let nl = linalg::norm(l);
            prop_assert!((lj[0] - lam * l[0]).abs() < 1e-8 * scale * nl && (lj[1] - lam * l[1]).abs() < 1e-8 * scale * nl);
            // Sign convention: first nonzero component positive.
            let lead = if r[0].abs() > 1e-14 { r[0] } else { r[1] };
            prop_assert!(lead > 0.0);
        }
        let nl = linalg::norm(e.l_s) * linalg::norm(e.r_f);
        prop_assert!(linalg::dot(e.l_s, e.r_f).abs() < 1e-8 * nl.max(1.0));
        let nl = linalg::norm(e.l_f) * linalg::norm(e.r_s);
        prop_assert!(linalg::dot(e.l_f, e.r_s).abs() < 1e-8 * nl.max(1.0));
    }

    #[test]
    fn shock_speed_satisfies_rh_whenever_defined(a in interior(), t in 0.05f64..0.95, p in viscosities()) {
        // States on a line through a vertex are Rankine–Hugoniot related.
        let line = uctk_core::InvariantLine::new(uctk_core::Vertex::G, p);
        let s = line.project_with_distance(a).0.clamp(0.02, 0.98);
        let um = line.embed(s);
        let up = line.embed(t);
        prop_assume!((s - t).abs() > 1e-3);
        let sigma = shock_speed(um, up, &p).unwrap();
        prop_assert!(linalg::norm(rh_residual(um, up, sigma, &p)) < 1e-8);
    }
}
