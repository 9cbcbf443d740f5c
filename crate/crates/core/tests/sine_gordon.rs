use backlund_core::dichotomy::DichotomyCase;
use backlund_core::grid::{l2_norm, sup_norm, Field, Grid1D};
use backlund_core::sine_gordon::*;

fn grid(dx: f64) -> Grid1D {
    Grid1D::symmetric(40.0, dx).unwrap()
}

fn kink(a: f64, delta: f64, g: &Grid1D) -> SGState {
    sg_kink(&KinkParams::new(a, delta).unwrap(), g, 0.0).unwrap()
}

fn sup_diff(a: &SGState, b: &SGState) -> f64 {
    sup_norm(&a.u().sub(b.u()).unwrap()).max(sup_norm(&a.v().sub(b.v()).unwrap()))
}

/// Kink residual evaluated on the closed form with exact derivatives; this is
/// the oracle that fixes the direction of travel.
#[test]
fn kink_zeroes_transform_and_equation_analytically() {
    for a in [0.3, 0.5, 0.7] {
        let p = KinkParams::new(a, 0.4).unwrap();
        let (g, c) = (p.gamma(), p.speed());
        assert!(c < 0.0);
        for &x in &[-3.0, -0.5, 0.0, 0.7, 2.5] {
            for &t in &[0.0, 1.3] {
                let z = g * (x - c * t) + 0.4;
                let u = 4.0 * z.exp().atan();
                let ux = 2.0 * g / z.cosh();
                let ut = -c * ux;
                let uxx = -2.0 * g * g * z.tanh() / z.cosh();
                let utt = c * c * uxx;
                let f1 = ux - a * (u / 2.0).sin() - (u / 2.0).sin() / a;
                let f2 = ut - (u / 2.0).sin() / a + a * (u / 2.0).sin();
                assert!(f1.abs() < 1e-12 && f2.abs() < 1e-12, "a={a} x={x}");
                assert!((utt - uxx + u.sin()).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn kink_samples_match_closed_form() {
    let g = grid(0.1);
    let p = KinkParams::new(0.3, -1.0).unwrap();
    let s = sg_kink(&p, &g, 2.0).unwrap();
    for i in (0..g.n()).step_by(37) {
        let z = p.gamma() * (g.x(i) - p.speed() * 2.0) - 1.0;
        assert!((s.u().samples()[i] - 4.0 * z.exp().atan()).abs() < 1e-12);
        assert!((s.v().samples()[i] - (1.0 / 0.3 - 0.3) / z.cosh()).abs() < 1e-12);
    }
    assert_eq!(s.kink_index(), 1);
}

#[test]
fn kink_energy_is_eight_gamma() {
    for a in [0.3, 0.5, 0.7] {
        let k = kink(a, 0.0, &grid(0.05));
        let e = sg_energy(&k);
        let exact = 4.0 * (a + 1.0 / a);
        assert!((e - exact).abs() / exact < 1e-6, "a={a} E={e}");
    }
}

#[test]
fn kink_residual_at_fine_resolution() {
    let g = grid(0.01);
    for a in [0.3, 0.5, 0.7] {
        let k = kink(a, 0.0, &g);
        let r = bt_residual_norm(&k, &sg_zero(g), a).unwrap();
        assert!(r < 1e-8, "a={a} residual={r:e}");
    }
}

#[test]
fn forward_from_zero_matches_closed_form() {
    let g = grid(0.01);
    for a in [0.3, 0.5, 0.7] {
        let built = bt_forward(&sg_zero(g), a, 0.0).unwrap();
        let e = sup_diff(&built, &kink(a, 0.0, &g));
        assert!(e < 1e-8, "a={a} err={e:e}");
        assert_eq!(built.kink_index(), 1);
    }
}

#[test]
fn forward_phase_moves_the_kink() {
    let g = grid(0.02);
    let built = bt_forward(&sg_zero(g), 0.5, 2.5).unwrap();
    assert!(sup_diff(&built, &kink(0.5, 2.5, &g)) < 1e-7);
}

#[test]
fn forward_on_kink_gives_two_kink() {
    let g = grid(0.01);
    let y = kink(0.7, 0.0, &g);
    let x = bt_forward(&y, 0.4, 0.0).unwrap();
    assert_eq!(x.kink_index(), 2);
    assert!(bt_residual_norm(&x, &y, 0.4).unwrap() < 1e-6);
}

#[test]
fn inverse_recovers_zero() {
    for dx in [0.01, 0.05] {
        let g = grid(dx);
        for a in [0.3, 0.5, 0.7] {
            for delta in [0.0, 3.0] {
                let x = kink(a, delta, &g);
                let (y, found) = sg_bt_inverse(&x, a - 0.1).unwrap();
                assert!((found - a).abs() < 1e-6, "dx={dx} a={a} found={found}");
                assert!(sup_diff(&y, &sg_zero(g)) < 1e-6);
            }
        }
    }
}

#[test]
fn inverse_of_forward_is_identity() {
    let g = grid(0.02);
    let y = kink(0.7, 1.0, &g);
    let x = bt_forward(&y, 0.4, -0.5).unwrap();
    let (back, found) = sg_bt_inverse(&x, 0.45).unwrap();
    assert!((found - 0.4).abs() < 1e-6, "found={found}");
    assert!(sup_diff(&back, &y) < 1e-5);
}

#[test]
fn inverse_is_lipschitz_in_the_input() {
    let g = grid(0.02);
    let x = kink(0.5, 0.0, &g);
    let mut ratios = Vec::new();
    for eps in [1e-3, 1e-4] {
        let bump = Field::from_fn(g, |s| eps * (-(s - 1.0) * (s - 1.0)).exp()).unwrap();
        let xp = SGState::new(x.u().add(&bump).unwrap(), x.v().clone()).unwrap();
        let (_, found) = sg_bt_inverse(&xp, 0.45).unwrap();
        ratios.push((found - 0.5).abs() / eps);
    }
    assert!(ratios.iter().all(|&c| c < 5.0), "{ratios:?}");
    assert!((ratios[0] - ratios[1]).abs() < 0.1 * ratios[1].max(1e-3));
}

#[test]
fn one_step_error_is_third_order() {
    let p = KinkParams::new(0.5, 0.0).unwrap();
    for dx in [0.05, 0.025] {
        let (g, dt) = (grid(dx), 0.9 * dx);
        let s = sg_kink(&p, &g, 0.0).unwrap();
        let stepped = sg_step(&s, dt).unwrap();
        let exact = sg_kink(&p, &g, dt).unwrap();
        let c = sup_diff(&stepped, &exact) / dt.powi(3);
        assert!(c < 0.5, "dt={dt} C={c}");
    }
}

#[test]
fn energy_and_kink_index_are_conserved() {
    let g = grid(0.05);
    let s = kink(0.5, 15.0 * 1.25, &g);
    let e0 = sg_energy(&s);
    let mut drift: f64 = 0.0;
    sg_evolve_with(&s, 50.0, 0.045, 20, |_, st| {
        drift = drift.max((sg_energy(st) - e0).abs() / e0);
        assert_eq!(st.kink_index(), 1);
        Ok(())
    })
    .unwrap();
    assert!(drift < 1e-3, "drift={drift:e}");
}

#[test]
fn cfl_is_enforced() {
    let g = grid(0.05);
    assert!(matches!(
        sg_step(&sg_zero(g), 0.05),
        Err(backlund_core::Error::CflViolation { .. })
    ));
}

/// Error against the travelling kink at T = 10 with `dt = 0.9 dx`; halving
/// both should divide it by four.
#[test]
fn evolution_converges_at_second_order() {
    let p = KinkParams::centered(0.5, 5.0).unwrap();
    let errors: Vec<f64> = [0.05, 0.025]
        .iter()
        .map(|&dx| {
            let g = grid(dx);
            let end = sg_evolve_with(
                &sg_kink(&p, &g, 0.0).unwrap(),
                10.0,
                0.9 * dx,
                1000,
                |_, _| Ok(()),
            )
            .unwrap();
            sup_diff(&end, &sg_kink(&p, &g, 10.0).unwrap())
        })
        .collect();
    assert!(errors[0] < 1e-2, "{errors:?}");
    let ratio = errors[0] / errors[1];
    assert!((3.5..4.5).contains(&ratio), "ratio={ratio}");
}

#[test]
fn transform_zero_set_is_invariant_under_the_flow() {
    let g = grid(0.05);
    let x = kink(0.5, 5.0, &g);
    let y = sg_zero(g);
    let r0 = bt_residual_norm(&x, &y, 0.5).unwrap();
    let bound = (10.0 * r0).max(5.0 * 0.05 * 0.05);
    let xs = sg_evolve(&x, 20.0, 0.045, 10).unwrap();
    let ys = sg_evolve(&y, 20.0, 0.045, 10).unwrap();
    for ((t, a), (_, b)) in xs.iter().zip(&ys) {
        let r = bt_residual_norm(a, b, 0.5).unwrap();
        assert!(r < bound, "t={t} residual={r:e} bound={bound:e}");
    }
}

#[test]
fn coefficient_has_one_sign_change() {
    let g = grid(0.02);
    let profile = sg_alpha(&kink(0.5, 0.0, &g), &sg_zero(g), 0.5).unwrap();
    assert!((profile.alpha_minus() - 1.25).abs() < 1e-12);
    assert!((profile.alpha_plus() + 1.25).abs() < 1e-12);
    assert_eq!(profile.case(), Some(DichotomyCase::ContinuousCase1));
    let changes = profile
        .alpha()
        .windows(2)
        .filter(|w| (w[0] > 0.0) != (w[1] > 0.0))
        .count();
    assert_eq!(changes, 1);
}

#[test]
fn kernel_element_annihilates_the_linearization() {
    let g = grid(0.01);
    let z = sg_zero(g);
    let x = kink(0.5, 0.0, &g);
    let (phi, psi) = sg_kernel_element(&x, &z, 0.5).unwrap();
    assert!(phi.samples().iter().all(|&v| v > 0.0));
    assert!((l2_norm(&phi) - 1.0).abs() < 1e-12);
    assert!(phi.first() < 1e-6 && phi.last() < 1e-6);
    let h = 1e-4;
    let shifted = |sign: f64| {
        SGState::new(
            x.u().add(&phi.scaled(sign * h).unwrap()).unwrap(),
            x.v().add(&psi.scaled(sign * h).unwrap()).unwrap(),
        )
        .unwrap()
    };
    let (p1, p2) = bt_residual(&shifted(1.0), &z, 0.5).unwrap();
    let (m1, m2) = bt_residual(&shifted(-1.0), &z, 0.5).unwrap();
    let d1 = sup_norm(&p1.sub(&m1).unwrap()) / (2.0 * h);
    let d2 = sup_norm(&p2.sub(&m2).unwrap()) / (2.0 * h);
    assert!(d1 < 1e-6 && d2 < 1e-6, "{d1:e} {d2:e}");
}

/// `∫ b μ` for the kink over zero is `2(1 + a⁻²)/γ`.
#[test]
fn nondegeneracy_matches_closed_form() {
    let g = grid(0.01);
    let z = sg_zero(g);
    for i in 2..=8 {
        let a = i as f64 / 10.0;
        let gamma = 0.5 * (a + 1.0 / a);
        let exact = 2.0 * (1.0 + 1.0 / (a * a)) / gamma;
        let v = sg_nondegeneracy(&kink(a, 0.0, &g), &z, a).unwrap();
        assert!(v > 0.0);
        assert!(
            (v - exact).abs() / exact < 1e-6,
            "a={a} value={v} exact={exact}"
        );
    }
}

#[test]
fn nondegeneracy_is_translation_invariant() {
    let g = grid(0.01);
    let z = sg_zero(g);
    let base = sg_nondegeneracy(&kink(0.5, 0.0, &g), &z, 0.5).unwrap();
    for d in [0.37, 3.0, -2.2] {
        let v = sg_nondegeneracy(&kink(0.5, d, &g), &z, 0.5).unwrap();
        assert!((v - base).abs() < 1e-9, "delta={d}");
    }
}
