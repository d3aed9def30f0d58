use ecm_core::dissolution::{activation_update, currents_from_density, effective_current, update_level};
use ecm_core::geometry::{Region, UnitCellGeom};
use nalgebra::Vector3;
use proptest::prelude::*;

fn currents() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(0.0..10.0f64).prop_map(|mut i| {
        i.sort_by(|a, b| b.total_cmp(a));
        i
    })
}

proptest! {
    #[test]
    fn uncapped_update_solves_the_implicit_relation(
        d_n in 0.0..0.9f64, i in currents(), c in 0.0..0.01f64, v_uc in 1e-12..1e-10f64, dt in 1e-3..1.0f64,
    ) {
        let v_eff = c * v_uc / dt;
        let up = update_level(d_n, i, v_eff, v_uc, dt, true).unwrap();
        prop_assume!(up.raw <= 1.0);
        let lhs = (up.d - d_n) * v_uc;
        let rhs = v_eff * dt * (i[0] + (1.0 - up.d) * (i[1] + i[2]));
        let scale = lhs.abs().max(rhs.abs()).max(d_n * v_uc);
        prop_assert!((lhs - rhs).abs() <= 1e-14 * scale, "{lhs:e} vs {rhs:e}");
        prop_assert_eq!(up.cutoff, 0.0);
    }

    #[test]
    fn level_is_monotone_and_capped(
        d_n in 0.0..1.0f64, i in currents(), c in 0.0..1e3f64, v_uc in 1e-12..1e-9f64, dt in 1e-3..1.0f64,
    ) {
        let v_eff = c * v_uc / dt;
        let up = update_level(d_n, i, v_eff, v_uc, dt, true).unwrap();
        prop_assert!(up.d >= d_n);
        prop_assert!(up.d <= 1.0);
        prop_assert!(up.cutoff >= 0.0);
        // Dissolved plus discarded volume equals V_eff times the charge at the uncapped level.
        let booked = (up.d - d_n) * v_uc + up.cutoff;
        let charge = effective_current(up.raw, i) * dt;
        // Rounding bound: the charge is a difference of terms of size `gross`.
        let gross = v_eff * dt * (i[0] + (1.0 + up.raw) * (i[1] + i[2])) + up.raw * v_uc;
        prop_assert!((booked - v_eff * charge).abs() <= 16.0 * f64::EPSILON * gross,
            "{booked:e} vs {:e}", v_eff * charge);
    }
}

#[test]
fn capped_update_books_cutoff() {
    let up = update_level(0.9, [10.0, 0.0, 0.0], 1.0, 1.0, 0.1, true).unwrap();
    assert_eq!(up.d, 1.0);
    assert!((up.raw - 1.9).abs() < 1e-15);
    assert!((up.cutoff - 0.9).abs() < 1e-15);
}

#[test]
fn inactive_points_keep_their_level() {
    let up = update_level(0.3, [5.0, 1.0, 1.0], 1.0, 1.0, 1.0, false).unwrap();
    assert_eq!((up.d, up.cutoff), (0.3, 0.0));
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(update_level(0.1, [-1.0, 0.0, 0.0], 1.0, 1.0, 1.0, true).is_err());
    assert!(update_level(0.1, [1.0, 0.0, 0.0], 1.0, 0.0, 1.0, true).is_err());
    assert!(update_level(1.5, [1.0, 0.0, 0.0], 1.0, 1.0, 1.0, true).is_err());
    assert!(update_level(0.1, [f64::NAN, 0.0, 0.0], 1.0, 1.0, 1.0, true).is_err());
}

#[test]
fn scalar_march_reaches_one_in_the_expected_number_of_steps() {
    // A single dominant current: each step adds V_eff I Δt / V_uc.
    let (v_eff, v_uc, dt, i) = (1e-11, 1e-12, 0.01, 2.0);
    let per_step = v_eff * i * dt / v_uc;
    let mut d = 0.0;
    let mut steps = 0;
    let mut cut = 0.0;
    while d < 1.0 {
        let up = update_level(d, [i, 0.0, 0.0], v_eff, v_uc, dt, true).unwrap();
        d = up.d;
        cut += up.cutoff;
        steps += 1;
    }
    assert_eq!(steps, (1.0 / per_step).ceil() as usize);
    let total = v_eff * i * dt * steps as f64;
    assert!((total - (v_uc + cut)).abs() < 1e-12 * total);
}

#[test]
fn currents_are_sorted_magnitudes() {
    let uc = UnitCellGeom { v_uc: 1.0, a_uc: [2.0, 3.0, 0.5] };
    let i = currents_from_density(&Vector3::new(-1.0, 0.5, 4.0), &uc);
    assert_eq!(i, [2.0, 2.0, 1.5]);
}

#[test]
fn activation_moves_with_the_front() {
    // metal 0 – metal 1 – electrolyte 2 in a row
    let neighbors = vec![vec![1], vec![0, 2], vec![1]];
    let regions = [Region::Metal, Region::Metal, Region::Electrolyte];
    let a = activation_update(&neighbors, &regions, &[0.0, 0.0, 1.0], 0.999);
    assert_eq!(a, [false, true, false]);
    let a = activation_update(&neighbors, &regions, &[0.0, 0.5, 1.0], 0.999);
    assert_eq!(a, [false, true, false]);
    let a = activation_update(&neighbors, &regions, &[0.0, 0.9995, 1.0], 0.999);
    assert_eq!(a, [true, true, false]);
    let a = activation_update(&neighbors, &regions, &[0.2, 1.0, 1.0], 0.999);
    assert_eq!(a, [true, false, false]);
}
