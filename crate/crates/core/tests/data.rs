use blowlab_core::data::{
    build_bump, build_u0n, construction_grid, modulation_mode, u0n_term, BumpSpec, DataDescriptor,
    Schedule,
};
use blowlab_core::spectral::{l1_spectrum, transform_inverse};
use blowlab_core::TorusGrid;

fn bump_l1(r: i32, m: usize, b: u32) -> f64 {
    let grid = TorusGrid::new(vec![r], vec![m]).unwrap();
    l1_spectrum(&build_bump(&grid, &BumpSpec::for_exponent(b)).unwrap().1)
}

#[test]
fn bump_center_boundary_evenness() {
    let grid = TorusGrid::new(vec![6, 5], vec![256, 64]).unwrap();
    let spec = BumpSpec { rho: 0.125, amplitude: 2.5 };
    let (w, hat) = build_bump(&grid, &spec).unwrap();
    assert_eq!(hat.at(&[0, 0]).re, 2.5);
    assert_eq!(hat.at(&[8, 0]).re, 0.0);
    assert_eq!(hat.at(&[0, 4]).re, 0.0);
    for i in 0..grid.len() {
        let c = hat.coeffs()[i];
        assert!(c.re >= 0.0 && c.im == 0.0);
        assert_eq!(c, hat.coeffs()[hat.conjugate_index(i)]);
    }
    assert!(hat.is_real() && hat.is_nonnegative());
    // w(0) = Σ ŵ
    assert!((w.samples()[0] - l1_spectrum(&hat)).abs() < 1e-12 * l1_spectrum(&hat));
}

#[test]
fn bump_l1_is_stable_under_refinement() {
    // more modes at the same spacing: identical coefficient set
    for b in [2, 3, 4, 5] {
        let (a, c) = (bump_l1(6, 256, b), bump_l1(6, 512, b));
        assert!((a / c - 1.0).abs() <= 1e-6);
    }
    assert!((bump_l1(6, 256, 4) - 9.653_359_130_661_858).abs() < 1e-12);
    // finer spacing: Σ ŵ·2^{−r} approximates ∫ŵ
    for b in [2, 4] {
        let coarse = bump_l1(8, 512, b) * 2f64.powi(-8);
        let fine = bump_l1(9, 1024, b) * 2f64.powi(-9);
        assert!((coarse / fine - 1.0).abs() <= 1e-6, "b = {b}: {coarse} vs {fine}");
    }
}

#[test]
fn schedule_reference_values() {
    for b in 2..=6 {
        assert_eq!(Schedule::paper(b).eta(0), 1.0);
    }
    let s2 = Schedule::paper(2);
    assert!((s2.eta(7) - 0.353_553_390_593_27).abs() < 1e-13);
    let s = Schedule::paper(4);
    assert!((s.epsilon(13) - 0.980_602_274_416_971).abs() < 1e-13);
    let first = (0..100).find(|&n| s.epsilon(n) < 1.0).unwrap();
    assert_eq!(first, 13);
    for k in 0..50 {
        assert!(s.eta(k + 1) < s.eta(k));
        assert!(s.epsilon(k + 1) < s.epsilon(k));
        assert!((s.log_eta(k) - s.eta(k).ln()).abs() < 1e-14);
        assert!((s.log_epsilon(k) - s.epsilon(k).ln()).abs() < 1e-14);
    }
}

#[test]
fn single_term_instance() {
    let grid = construction_grid(1, 4, 0, None).unwrap();
    let (_, w_hat) = build_bump(&grid, &BumpSpec::for_exponent(4)).unwrap();
    let s = Schedule::paper(4);
    let (u, u_hat) = build_u0n(&grid, 0, &s, &w_hat).unwrap();
    let w = transform_inverse(&w_hat).unwrap();
    let eps = s.epsilon(0);
    for i in 0..grid.len() {
        let x = grid.position(i)[0];
        let expected = eps * (1.5 * x).cos() * w.samples()[i];
        assert!((u.samples()[i] - expected).abs() < 1e-12 * w.sup_norm());
    }
    let h = grid.spacing(0);
    for (i, c) in u_hat.coeffs().iter().enumerate() {
        if c.re > 0.0 {
            let xi = grid.wavevector(i)[0];
            assert!((xi.abs() - 1.5).abs() < 0.125, "ξ = {xi}");
        }
    }
    assert_eq!(modulation_mode(&grid, 0).unwrap() as f64 * h, 1.5);
}

#[test]
fn support_scan_for_six_terms() {
    let (b, n_terms) = (4, 6);
    let grid = construction_grid(1, b, n_terms, None).unwrap();
    let spec = BumpSpec::for_exponent(b);
    assert_eq!(spec.rho, 0.125);
    let (_, w_hat) = build_bump(&grid, &spec).unwrap();
    let (_, u_hat) = build_u0n(&grid, n_terms, &Schedule::paper(b), &w_hat).unwrap();
    assert!(u_hat.is_nonnegative() && u_hat.is_real());
    let mut seen = vec![false; n_terms as usize + 1];
    for (i, c) in u_hat.coeffs().iter().enumerate() {
        assert!(c.re >= 0.0 && c.im == 0.0);
        if c.re == 0.0 {
            continue;
        }
        let xi = grid.wavevector(i)[0];
        let k = (0..=n_terms)
            .find(|&k| (xi.abs() - 1.5 * (k as f64).exp2()).abs() < spec.rho)
            .unwrap_or_else(|| panic!("stray coefficient at ξ = {xi}"));
        let scale = (k as f64).exp2();
        assert!(xi.abs() >= 1.25 * scale && xi.abs() <= 1.75 * scale);
        seen[k as usize] = true;
    }
    assert!(seen.iter().all(|s| *s));
}

#[test]
fn terms_sum_to_data() {
    let grid = construction_grid(1, 5, 4, None).unwrap();
    let (_, w_hat) = build_bump(&grid, &BumpSpec::for_exponent(5)).unwrap();
    let s = Schedule::constant(5, 0.7).unwrap();
    let (_, u_hat) = build_u0n(&grid, 4, &s, &w_hat).unwrap();
    let mut acc = u0n_term(&w_hat, 4, 0, &s).unwrap();
    for k in 1..=4 {
        acc = acc.add(&u0n_term(&w_hat, 4, k, &s).unwrap()).unwrap();
    }
    assert!(acc.max_diff(&u_hat).unwrap() < 1e-15);
    let expected: f64 = (0..=4u64).map(|k| s.term_weight(k, 4)).sum::<f64>() * l1_spectrum(&w_hat);
    assert!((l1_spectrum(&u_hat) / expected - 1.0).abs() < 1e-13);
}

#[test]
fn two_dimensional_cubic_data() {
    let grid = construction_grid(2, 3, 3, None).unwrap();
    let (_, w_hat) = build_bump(&grid, &BumpSpec::for_exponent(3)).unwrap();
    let s = Schedule::paper(3);
    let (u, u_hat) = build_u0n(&grid, 3, &s, &w_hat).unwrap();
    assert!(u_hat.is_nonnegative());
    let m = modulation_mode(&grid, 2).unwrap();
    let expected = 0.5 * s.term_weight(2, 3);
    assert!((u_hat.at(&[m, 0]).re - expected).abs() < 1e-14);
    assert!((u_hat.at(&[-m, 0]).re - expected).abs() < 1e-14);
    assert!(u.samples().iter().all(|v| v.is_finite()));
    assert!(u.sup_norm() <= l1_spectrum(&u_hat) * (1.0 + 1e-12));
}

#[test]
fn fujita_regime_is_rejected_with_reason() {
    for (n, b) in [(1usize, 2u32), (1, 3), (2, 2)] {
        let grid = construction_grid(n, b, 1, None).unwrap();
        let (_, w_hat) = build_bump(&grid, &BumpSpec::for_exponent(b)).unwrap();
        let err = build_u0n(&grid, 1, &Schedule::paper(b), &w_hat).unwrap_err();
        assert!(err.to_string().contains("n(b-1)/2 > 1"), "{err}");
    }
}

#[test]
fn under_resolved_and_overflowing_inputs() {
    let grid = TorusGrid::new(vec![2], vec![64]).unwrap();
    assert!(build_bump(&grid, &BumpSpec::for_exponent(4)).is_err());
    let grid = TorusGrid::new(vec![6], vec![256]).unwrap();
    let (_, w_hat) = build_bump(&grid, &BumpSpec::for_exponent(4)).unwrap();
    assert!(build_u0n(&grid, 1, &Schedule::paper(4), &w_hat).is_err());
}

#[test]
fn descriptor_rebuilds_identical_data() {
    let grid = construction_grid(2, 3, 2, None).unwrap();
    let d = DataDescriptor {
        n: 2,
        b: 3,
        n_terms: 2,
        bump: BumpSpec::for_exponent(3),
        schedule: Schedule::paper(3),
        grid: (&grid).into(),
    };
    let json = serde_json::to_string_pretty(&d).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["N"], 2);
    let back: DataDescriptor = serde_json::from_str(&json).unwrap();
    let (_, w_hat) = build_bump(&grid, &d.bump).unwrap();
    let (_, direct) = build_u0n(&grid, 2, &d.schedule, &w_hat).unwrap();
    assert_eq!(back.build().unwrap().1, direct);
    let extra = json.replacen('{', "{\"extra\": 1,", 1);
    assert!(serde_json::from_str::<DataDescriptor>(&extra).is_err());
}
