use approx::assert_relative_eq;
use proptest::prelude::*;

use uctk_core::corey::{char_speeds, flux, umbilic_point};
use uctk_core::reduced::*;
use uctk_core::{FluidParams, State};

fn params() -> FluidParams {
    FluidParams::viscosities(1.0, 2.0, 0.75).unwrap()
}

fn fast(s: f64, nu: f64) -> f64 {
    char_speeds_reduced(s, nu).1
}

fn slow(s: f64, nu: f64) -> f64 {
    char_speeds_reduced(s, nu).0
}

/// Chord slope computed from the flux values directly.
fn chord(a: f64, b: f64, nu: f64) -> f64 {
    (effective_flux(b, nu) - effective_flux(a, nu)) / (b - a)
}

#[test]
fn effective_flux_examples() {
    assert_relative_eq!(effective_flux(0.5, 4.0), 0.2, epsilon = 1e-15);
    for nu in [0.3, 1.0, 4.0, 11.0] {
        assert_eq!(effective_flux(0.0, nu), 0.0);
        assert_eq!(effective_flux(1.0, nu), 1.0);
    }
    for k in 0..=100 {
        let s = k as f64 / 100.0;
        assert_relative_eq!(effective_flux(s, 1.0), s * s / (s * s + (1.0 - s) * (1.0 - s)), epsilon = 1e-15);
        assert_relative_eq!(effective_flux(1.0 - s, 1.0), 1.0 - effective_flux(s, 1.0), epsilon = 1e-15);
    }
}

#[test]
fn line_speeds_examples() {
    let line = InvariantLine::new(Vertex::G, params());
    assert_relative_eq!(line.nu, 4.0, epsilon = 1e-15);
    let (a, b) = line.lambda_ab(0.8);
    assert_relative_eq!(a, 2.0, epsilon = 1e-12);
    assert_relative_eq!(b, 2.0, epsilon = 1e-12);
    assert_eq!(line.lambda_ab(0.0), (0.0, 0.0));
}

#[test]
fn lambda_b_is_flux_derivative() {
    let h = 1e-6;
    for nu in [0.875, 4.0, 9.0] {
        for k in 1..1000 {
            let s = k as f64 / 1000.0;
            let fd = (effective_flux(s + h, nu) - effective_flux(s - h, nu)) / (2.0 * h);
            let exact = effective_flux_derivative(s, nu);
            assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0), "ν = {nu}, s = {s}");
        }
    }
}

#[test]
fn distinguished_states_for_gas_line() {
    let ds = distinguished_states(4.0);
    assert_relative_eq!(ds.s_u, 0.8, epsilon = 1e-15);
    let (sy, syh) = ds.double_contact.unwrap();
    assert_relative_eq!(sy, 0.632456, epsilon = 1e-6);
    assert_relative_eq!(syh, 0.860380, epsilon = 1e-6);
    assert_relative_eq!(ds.s_b2, 0.552786, epsilon = 1e-6);
    assert_relative_eq!(ds.s_b1, 2.0 / 3.0, epsilon = 1e-15);
    assert_eq!(ds.s_b0, 0.5);
    let sigma = chord(sy, syh, 4.0);
    assert!((sigma - fast(sy, 4.0)).abs() < 1e-8);
    assert!((sigma - fast(syh, 4.0)).abs() < 1e-8);
}

#[test]
fn double_contact_reaches_edge_at_eight() {
    let ds = distinguished_states(8.0);
    assert_eq!(ds.s_y_hat(), Some(1.0));
    assert!(distinguished_states(8.0 + 1e-9).double_contact.is_none());
    assert!(distinguished_states(8.0 + 1e-9).s_b2_star.is_some());
}

#[test]
fn distinguished_states_for_oil_line() {
    let ds = distinguished_states(0.875);
    assert_relative_eq!(ds.s_u, 0.875 / 1.875, epsilon = 1e-15);
    assert!(ds.double_contact.is_none());
    // Independent bisection for the inflection on [s_U, 1/2].
    let g = |s: f64| 2.0 * s * s * s - 3.0 * s * s + ds.s_u;
    let (mut lo, mut hi) = (ds.s_u, 0.5);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert_relative_eq!(ds.s_i, lo, epsilon = 1e-12);
    assert_relative_eq!(ds.s_i, 0.4777, epsilon = 1e-4);
}

#[test]
fn shock_partner_examples() {
    assert_relative_eq!(effective_shock_partner(1.0, 1.6, 4.0, RootChoice::Lower).unwrap(), 0.5, epsilon = 1e-12);
    assert_relative_eq!(effective_shock_partner(0.8, 2.0, 4.0, RootChoice::Lower).unwrap(), 0.5, epsilon = 1e-12);
    for s in [0.2, 0.45, 0.7, 0.93] {
        let sigma = effective_flux_derivative(s, 4.0);
        let lo = effective_shock_partner(s, sigma, 4.0, RootChoice::Lower).unwrap_or(f64::NAN);
        let hi = effective_shock_partner(s, sigma, 4.0, RootChoice::Upper).unwrap_or(f64::NAN);
        assert!((lo - s).abs() < 1e-6 || (hi - s).abs() < 1e-6, "s = {s}: roots {lo}, {hi}");
    }
}

#[test]
fn mixed_contact_gate() {
    assert!(InvariantLine::new(Vertex::G, params()).mixed_contact_inside());
    let equal = FluidParams::viscosities(1.3, 1.3, 0.2).unwrap();
    assert!(InvariantLine::new(Vertex::G, equal).mixed_contact_inside());
    // (μ_w − μ_o)²/(μ_g (μ_w + μ_o)) = 16/(6 μ_g) crosses 8 at μ_g = 1/3.
    let inside = FluidParams::viscosities(1.0, 5.0, 1.0 / 3.0 + 1e-6).unwrap();
    let outside = FluidParams::viscosities(1.0, 5.0, 1.0 / 3.0 - 1e-6).unwrap();
    assert!(InvariantLine::new(Vertex::G, inside).mixed_contact_inside());
    assert!(!InvariantLine::new(Vertex::G, outside).mixed_contact_inside());
}

#[test]
fn embedding_and_projection() {
    let p = params();
    let gd = InvariantLine::new(Vertex::G, p);
    let d = gd.embed(1.0);
    assert_relative_eq!(d.sw, 1.0 / 3.0, epsilon = 1e-15);
    assert_relative_eq!(d.so, 2.0 / 3.0, epsilon = 1e-15);
    let u = umbilic_point(&p);
    for v in Vertex::ALL {
        let line = InvariantLine::new(v, p);
        assert_eq!(line.embed(0.0), line.vertex_state());
        assert_relative_eq!(line.project(u).unwrap(), line.distinguished_states().s_u, epsilon = 1e-12);
        assert!(line.project(State { sw: 0.9, so: 0.05 }).is_err());
    }
    assert_eq!(Vertex::W.far_end_name(), "E");
    assert_eq!(Vertex::O.far_end_name(), "B");
}

#[test]
fn reduction_matches_full_model_on_every_line() {
    let p = FluidParams::viscosities(1.0, 2.0, 0.75).unwrap();
    for v in Vertex::ALL {
        let line = InvariantLine::new(v, p);
        let (a, b) = v.line_phases();
        for k in 0..=200 {
            let s = k as f64 / 200.0;
            let u = line.embed(s);
            let f = flux(u, &p);
            let fg = 1.0 - f[0] - f[1];
            let pick = |ph: uctk_core::corey::Phase| match ph {
                uctk_core::corey::Phase::Water => f[0],
                uctk_core::corey::Phase::Oil => f[1],
                uctk_core::corey::Phase::Gas => fg,
            };
            assert!((pick(a) + pick(b) - effective_flux(s, line.nu)).abs() < 1e-12, "{v:?} at s = {s}");
            let (ls, lf) = char_speeds(u, &p);
            let (rs, rf) = line.char_speeds(s);
            assert!((ls - rs).abs() < 1e-10 && (lf - rf).abs() < 1e-10, "{v:?} speeds at s = {s}");
        }
    }
}

#[test]
fn no_same_side_fast_double_contact() {
    let nu = 4.0;
    let s_u = nu / (1.0 + nu);
    let n = 2000;
    let grid: Vec<f64> = (1..n).map(|k| k as f64 / n as f64).collect();
    let lf: Vec<f64> = grid.iter().map(|&s| fast(s, nu)).collect();
    for (i, &a) in grid.iter().enumerate() {
        for (j, &b) in grid.iter().enumerate().skip(i + 1) {
            if (a < s_u) != (b < s_u) || b - a < 0.05 {
                continue;
            }
            let sigma = shock_speed_reduced(a, b, nu);
            assert!(
                !((sigma - lf[i]).abs() < 1e-4 && (sigma - lf[j]).abs() < 1e-4),
                "same-side double contact at ({a}, {b})"
            );
        }
    }
}

fn check_identities(nu: f64) -> Result<(), TestCaseError> {
    let ds = distinguished_states(nu);
    let tol = 1e-8;
    prop_assert!((ds.s_u - nu / (1.0 + nu)).abs() < 1e-15);
    let (la, lb) = (lambda_a_reduced(ds.s_u, nu), effective_flux_derivative(ds.s_u, nu));
    prop_assert!((la - lb).abs() < tol);
    prop_assert!((shock_speed_reduced(ds.s_b1, 1.0, nu) - slow(ds.s_b1, nu)).abs() < tol);
    prop_assert!((shock_speed_reduced(ds.s_b2, 1.0, nu) - fast(ds.s_b2, nu)).abs() < tol);
    prop_assert!((shock_speed_reduced(ds.s_b0, ds.s_u, nu) - la).abs() < tol);
    let inflection = 2.0 * ds.s_i.powi(3) - 3.0 * ds.s_i.powi(2) + ds.s_u;
    prop_assert!(inflection.abs() < tol);
    let h = 1e-5;
    let curvature = |s: f64| (effective_flux_derivative(s + h, nu) - effective_flux_derivative(s - h, nu)) / (2.0 * h);
    prop_assert!(curvature(ds.s_i - 1e-3) * curvature(ds.s_i + 1e-3) < 0.0);
    // Regime gates are exact.
    prop_assert_eq!(ds.double_contact.is_some(), nu > 1.0 && nu <= 8.0);
    prop_assert_eq!(ds.s_b2_star.is_some(), nu > 8.0);
    if let Some((sy, syh)) = ds.double_contact {
        let sigma = shock_speed_reduced(sy, syh, nu);
        prop_assert!((sigma - fast(sy, nu)).abs() < tol && (sigma - fast(syh, nu)).abs() < tol);
    }
    if let Some(b) = ds.s_b2_star {
        prop_assert!((shock_speed_reduced(b, 1.0, nu) - fast(1.0, nu)).abs() < tol);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn distinguished_identities(nu in 0.01f64..=12.0) {
        check_identities(nu)?;
    }

    #[test]
    fn distinguished_ordering(nu in 1.0f64..=8.0) {
        prop_assume!(nu > 1.0);
        let ds = distinguished_states(nu);
        let (sy, syh) = ds.double_contact.unwrap();
        prop_assert!(ds.s_b2 <= sy + 1e-12);
        prop_assert!(sy < ds.s_i && ds.s_i < ds.s_u);
        prop_assert!(ds.s_u <= syh && syh <= 1.0);
        prop_assert!(ds.s_b1 < ds.s_u);
    }

    #[test]
    fn chord_formula_matches_flux_difference(a in 0.0f64..1.0, b in 0.0f64..1.0, nu in 0.1f64..12.0) {
        prop_assume!((a - b).abs() > 1e-4);
        let direct = chord(a, b, nu);
        prop_assert!((shock_speed_reduced(a, b, nu) - direct).abs() < 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn embed_project_roundtrip(s in 0.0f64..=1.0, v in 0usize..3) {
        let line = InvariantLine::new(Vertex::ALL[v], params());
        prop_assert!((line.project(line.embed(s)).unwrap() - s).abs() < 1e-12);
    }
}
