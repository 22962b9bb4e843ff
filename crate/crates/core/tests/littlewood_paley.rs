use blowlab_core::data::{build_bump, build_u0n, construction_grid, u0n_term, BumpSpec, Schedule};
use blowlab_core::littlewood_paley::{
    annulus_profile, besov_norm, besov_norm_spectral, build_filter_bank, dyadic_block, lq_sum,
};
use blowlab_core::spectral::{dyadic_rescale, lp_norm, transform_inverse};
use blowlab_core::{besov_integrability, Error, RealField, SpectralField, TorusGrid};
use num_complex::Complex64;
use proptest::prelude::*;

const B: u32 = 4;
const N: u32 = 6;

fn setup() -> (TorusGrid, SpectralField, Schedule) {
    let grid = construction_grid(1, B, N, Some(N as i32)).unwrap();
    let (_, w_hat) = build_bump(&grid, &BumpSpec::for_exponent(B)).unwrap();
    (grid, w_hat, Schedule::paper(B))
}

proptest! {
    #[test]
    fn partition_of_unity_at_random_radii(u in 0.0f64..1.0, lo in -4i32..2, span in 2i32..6) {
        let hi = lo + span;
        // covered band [2^lo·8/3, 2^hi·3/4]
        let (a, b) = (8.0 / 3.0 * (lo as f64).exp2(), 0.75 * (hi as f64).exp2());
        let r = a * (b / a).powf(u);
        let sum: f64 = (lo..=hi).map(|j| annulus_profile(r, j)).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn profiles_stay_in_unit_interval(r in 0.0f64..100.0, j in -5i32..5) {
        let v = annulus_profile(r, j);
        prop_assert!((0.0..=1.0).contains(&v));
    }
}

#[test]
fn spec_point_values() {
    assert_eq!(annulus_profile(1.5, 0), 1.0);
    assert_eq!(annulus_profile(0.5, 0), 0.0);
    let sum: f64 = (-3..=3).map(|j| annulus_profile(2.37, j)).sum();
    assert!((sum - 1.0).abs() <= 1e-12);
}

#[test]
fn partition_of_unity_on_grids() {
    for grid in [
        TorusGrid::new(vec![4], vec![512]).unwrap(),
        TorusGrid::new(vec![3, 3], vec![256, 256]).unwrap(),
    ] {
        let bank = build_filter_bank(&grid, -2, 2).unwrap();
        let (a, b) = bank.covered_band();
        let radii = grid.wavenumbers();
        let cov = bank.coverage();
        let mut checked = 0;
        for (r, c) in radii.iter().zip(&cov) {
            assert!((0.0..=1.0 + 1e-15).contains(c));
            if *r >= a && *r <= b {
                assert!((c - 1.0).abs() <= 1e-12, "|ξ| = {r}: {c}");
                checked += 1;
            }
        }
        assert!(checked > 10);
        for j in -2..=2 {
            let scale = (j as f64).exp2();
            for (r, p) in radii.iter().zip(bank.profile(j).unwrap()) {
                if *r < 0.75 * scale || *r > 8.0 / 3.0 * scale {
                    assert_eq!(*p, 0.0);
                }
                if *r >= 1.25 * scale && *r <= 1.75 * scale {
                    assert_eq!(*p, 1.0);
                }
            }
        }
    }
}

#[test]
fn blocks_select_construction_terms() {
    let (grid, w_hat, s) = setup();
    let bank = build_filter_bank(&grid, 0, N as i32).unwrap();
    let (_, u_hat) = build_u0n(&grid, N, &s, &w_hat).unwrap();
    for j in 0..=N as i32 {
        let term = u0n_term(&w_hat, N, j as u32, &s).unwrap();
        let block = dyadic_block(&u_hat, &bank, j).unwrap();
        assert!(block.max_diff(&term).unwrap() <= 1e-10 * term.max_abs());
        for k in 0..=N {
            if k as i32 != j {
                let other = u0n_term(&w_hat, N, k, &s).unwrap();
                let off = dyadic_block(&other, &bank, j).unwrap();
                assert!(off.max_abs() <= 1e-12 * other.max_abs(), "j = {j}, k = {k}");
            }
        }
    }
    assert!(dyadic_block(&u_hat, &bank, N as i32 + 1).is_err());
}

#[test]
fn constant_field_has_no_blocks() {
    let grid = TorusGrid::new(vec![3], vec![256]).unwrap();
    let bank = build_filter_bank(&grid, -2, 2).unwrap();
    let c = SpectralField::delta(grid, &[0], Complex64::new(2.0, 0.0)).unwrap();
    for j in -2..=2 {
        assert_eq!(dyadic_block(&c, &bank, j).unwrap().max_abs(), 0.0);
    }
    match besov_norm_spectral(&c, -0.5, 6.0, 8.0, &bank) {
        Err(Error::UncoveredMass { fraction, modes }) => {
            assert_eq!(fraction, 1.0);
            assert_eq!(modes, vec![vec![0]]);
        }
        other => panic!("expected uncovered mass, got {other:?}"),
    }
}

#[test]
fn zero_field_and_single_annulus() {
    let grid = TorusGrid::new(vec![3], vec![256]).unwrap();
    let bank = build_filter_bank(&grid, -1, 2).unwrap();
    let zero = RealField::constant(grid.clone(), 0.0).unwrap();
    assert_eq!(besov_norm(&zero, -0.5, 6.0, 2.0, &bank).unwrap().total, 0.0);
    // modes 12 and -12 sit at |ξ| = 3/2, inside the j = 0 plateau only
    let g = SpectralField::delta(grid.clone(), &[12], Complex64::new(0.5, 0.0))
        .unwrap()
        .add(&SpectralField::delta(grid, &[-12], Complex64::new(0.5, 0.0)).unwrap())
        .unwrap();
    let phys = transform_inverse(&g).unwrap();
    let s = -0.5;
    for p in [2.0, 6.0] {
        let expected = lp_norm(&phys, p).unwrap();
        for q in [1.0, 3.0, f64::INFINITY] {
            let total = besov_norm(&phys, s, p, q, &bank).unwrap().total;
            assert!((total / expected - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn norm_of_data_matches_term_series() {
    let (grid, w_hat, s) = setup();
    let bank = build_filter_bank(&grid, 0, N as i32).unwrap();
    let (u, _) = build_u0n(&grid, N, &s, &w_hat).unwrap();
    let w = transform_inverse(&w_hat).unwrap();
    let p = besov_integrability(1, B);
    let q = 8.0;
    // 2^{js} cancels 2^{2j/b} when s = −2/b
    let terms: Vec<f64> = (0..=N)
        .map(|j| {
            let freq = 1.5 * (j as f64).exp2();
            let modulated = RealField::new(
                grid.clone(),
                (0..grid.len())
                    .map(|i| w.samples()[i] * (freq * grid.position(i)[0]).cos())
                    .collect(),
            )
            .unwrap();
            s.eta(j as u64) * lp_norm(&modulated, p).unwrap()
        })
        .collect();
    let oracle = s.epsilon(N as u64) * lq_sum(&terms, q).unwrap();
    let report = besov_norm(&u, -2.0 / B as f64, p, q, &bank).unwrap();
    assert!((report.total / oracle - 1.0).abs() <= 1e-8, "{} vs {oracle}", report.total);

    let etas: Vec<f64> = (0..=N as u64).map(|k| s.eta(k)).collect();
    let bound = s.epsilon(N as u64) * lq_sum(&etas, q).unwrap() * lp_norm(&w, p).unwrap();
    assert!(report.total <= bound * (1.0 + 1e-8));

    assert_eq!(report.block_csv().lines().next(), Some("j,block_norm,weighted,total"));
    assert_eq!(report.block_csv().lines().count(), N as usize + 2);
}

#[test]
fn norm_is_nonincreasing_in_q() {
    let (grid, w_hat, s) = setup();
    let bank = build_filter_bank(&grid, 0, N as i32).unwrap();
    let (u, _) = build_u0n(&grid, N, &s, &w_hat).unwrap();
    let p = besov_integrability(1, B);
    let mut prev = f64::INFINITY;
    for q in [1.0, 1.5, 2.0, 4.0, 8.0, 16.0, f64::INFINITY] {
        let v = besov_norm(&u, -0.5, p, q, &bank).unwrap().total;
        assert!(v <= prev * (1.0 + 1e-14), "q = {q}");
        prev = v;
    }
}

#[test]
fn critical_norm_is_scale_invariant() {
    let (grid, w_hat, s) = setup();
    let n_terms = 3;
    let (u, _) = build_u0n(&grid, n_terms, &s, &w_hat).unwrap();
    let p = besov_integrability(1, B);
    let sb = -2.0 / B as f64;
    let bank = build_filter_bank(&grid, 0, 3).unwrap();
    for q in [2.0, 8.0, f64::INFINITY] {
        let base = besov_norm(&u, sb, p, q, &bank).unwrap();
        for j in [-2, 1, 2] {
            let scaled = dyadic_rescale(&u, j, B).unwrap();
            let shifted = build_filter_bank(scaled.grid(), j, 3 + j).unwrap();
            let r = besov_norm(&scaled, sb, p, q, &shifted).unwrap();
            assert!((r.total / base.total - 1.0).abs() <= 1e-10, "j = {j}, q = {q}");
        }
    }
}
