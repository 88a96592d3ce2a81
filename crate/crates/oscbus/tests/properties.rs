//! Property suites over randomized inputs: Williamson decomposition
//! invariants, propagation physicality, closed-form propagator group
//! membership, and continuity of the degenerate reduction.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use oscbus::dynamics::{
    drift_and_diffusion, propagate_cm, thermal_bath_noise, CovarianceState,
};
use oscbus::effective::{
    analytic_propagator_6x6, build_effective_hessian, transfer_function_f,
};
use oscbus::linalg::expm;
use oscbus::network::{
    analytic_williamson, assemble_system_hessian, Attachment, ExternalId, NetworkSpec, SystemSpec,
};
use oscbus::symplectic::{
    is_symplectic, symplectic_form, symplectic_spectrum, williamson, QuadraticForm,
};

fn random_pd(rng: &mut ChaCha8Rng, n_modes: usize) -> QuadraticForm {
    let dim = 2 * n_modes;
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    let m = &a * a.transpose() + DMatrix::identity(dim, dim) * 0.1;
    QuadraticForm::new(n_modes, m).unwrap()
}

fn random_symplectic(rng: &mut ChaCha8Rng, n_modes: usize) -> DMatrix<f64> {
    // exp(J·H) is symplectic for any symmetric H.
    let dim = 2 * n_modes;
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-0.5..0.5));
    let h = (&a + a.transpose()) * 0.5;
    let j = symplectic_form(n_modes).unwrap().matrix;
    expm(&(&j * h))
}

#[test]
fn williamson_random_pd_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for trial in 0..200 {
        let n = rng.gen_range(1..=8usize);
        let m = random_pd(&mut rng, n);
        let w = williamson(&m).unwrap();
        assert!(is_symplectic(&w.s, 1e-10).unwrap(), "trial {trial}");

        // S M Sᵀ must be the doubled-pair diagonal Diag(ς…, ς…).
        let cong = &w.s * &m.matrix * w.s.transpose();
        for r in 0..2 * n {
            for c in 0..2 * n {
                let expect = if r == c { w.spectrum[r % n] } else { 0.0 };
                assert!(
                    (cong[(r, c)] - expect).abs() < 1e-8,
                    "trial {trial}: entry ({r},{c}) = {} vs {expect}",
                    cong[(r, c)]
                );
            }
        }

        // Spectrum oracle: moduli of the imaginary eigenvalues of JM.
        let oracle = symplectic_spectrum(&m).unwrap();
        for k in 0..n {
            assert!((w.spectrum[k] - oracle[k]).abs() < 1e-8, "trial {trial} mode {k}");
        }
    }
}

#[test]
fn spectrum_invariant_under_symplectic_congruence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..25 {
        let n = rng.gen_range(1..=5usize);
        let m = random_pd(&mut rng, n);
        let t = random_symplectic(&mut rng, n);
        let m2 = QuadraticForm::new(n, {
            let raw = &t * &m.matrix * t.transpose();
            (&raw + raw.transpose()) * 0.5
        })
        .unwrap();
        let s1 = symplectic_spectrum(&m).unwrap();
        let s2 = symplectic_spectrum(&m2).unwrap();
        for k in 0..n {
            assert!((s1[k] - s2[k]).abs() < 1e-8 * s1[k].max(1.0));
        }
    }
}

#[test]
fn spectrum_scales_linearly() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for _ in 0..25 {
        let n = rng.gen_range(1..=5usize);
        let m = random_pd(&mut rng, n);
        let c = rng.gen_range(0.5..4.0);
        let scaled = QuadraticForm::new(n, &m.matrix * c).unwrap();
        let s1 = symplectic_spectrum(&m).unwrap();
        let s2 = symplectic_spectrum(&scaled).unwrap();
        for k in 0..n {
            assert!((s2[k] - c * s1[k]).abs() < 1e-9 * s2[k]);
        }
    }
}

fn fig3_system() -> SystemSpec {
    SystemSpec {
        network: NetworkSpec::Chain { n: 10, omega: 1.0, kappa: 20.0 },
        omega_ext: 1.0,
        attachments: vec![
            Attachment { external: ExternalId::A, site: 10, epsilon: 0.03 },
            Attachment { external: ExternalId::B, site: 1, epsilon: 0.03 },
        ],
        hbar: 1.0,
    }
}

#[test]
fn open_propagation_preserves_uncertainty_relation() {
    let spec = fig3_system();
    let h = assemble_system_hessian(&spec).unwrap();
    let noise = thermal_bath_noise(&spec, 0.01, 1.0).unwrap();
    let (gamma, d) = drift_and_diffusion(&h, &noise, 1.0).unwrap();
    let v0 = CovarianceState::new(
        DMatrix::identity(24, 24) * 0.5,
        DVector::zeros(24),
        0.0,
    )
    .unwrap();
    let times: Vec<f64> = (1..=30).map(|k| 50.0 * k as f64).collect();
    let res = propagate_cm(&gamma, &d, &v0, &times).unwrap();
    for st in &res.states {
        st.check_physical(1.0).unwrap();
        assert!(st.uncertainty_margin(1.0) > -1e-10);
    }
}

#[test]
fn closed_propagation_conserves_symplectic_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    for _ in 0..10 {
        let n = rng.gen_range(1..=4usize);
        let h = random_pd(&mut rng, n);
        let v = random_pd(&mut rng, n);
        let j = symplectic_form(n).unwrap().matrix;
        let gamma = &j * &h.matrix;
        let d = DMatrix::zeros(2 * n, 2 * n);
        let v0 = CovarianceState::new(v.matrix.clone(), DVector::zeros(2 * n), 0.0).unwrap();
        let res = propagate_cm(&gamma, &d, &v0, &[0.7, 3.1, 12.9]).unwrap();
        let s0 = symplectic_spectrum(&v).unwrap();
        for st in &res.states {
            let vq = QuadraticForm::new(n, (&st.v + st.v.transpose()) * 0.5).unwrap();
            let s = symplectic_spectrum(&vq).unwrap();
            for k in 0..n {
                assert!((s[k] - s0[k]).abs() < 1e-7 * s0[k].max(1.0));
            }
        }
    }
}

#[test]
fn analytic_propagator_group_membership_long_horizon() {
    // Orthogonal + symplectic over τ ∈ [0, 50].
    let s = 0.1f64.sqrt();
    let eps = 0.03;
    for k in 0..=100 {
        let tau = 0.5 * k as f64;
        let t = 4.0 * tau / eps;
        let e = analytic_propagator_6x6(s, s, eps, t);
        assert!((&e * e.transpose() - DMatrix::identity(6, 6)).amax() < 1e-10, "tau = {tau}");
        assert!(is_symplectic(&e, 1e-10).unwrap(), "tau = {tau}");
    }
}

#[test]
fn degenerate_reduction_is_continuous_at_the_degeneracy() {
    // Triangle with κ′ → κ from above: the two-mode effective Hessian
    // converges entrywise (up to the within-pair mode ordering) to its value
    // at κ′ = κ, with deviation bounded by the parameter perturbation.
    let (omega, kappa) = (1.0, 1.0 / 3.0);
    let eps = 1.0 / 600.0;
    let atts = vec![
        Attachment { external: ExternalId::A, site: 2, epsilon: eps },
        Attachment { external: ExternalId::B, site: 3, epsilon: eps },
    ];
    let exact = {
        let w = analytic_williamson(&NetworkSpec::Triangle {
            omega,
            kappa,
            kappa_prime: kappa,
        })
        .unwrap();
        build_effective_hessian(&w, &[1, 2], &atts).unwrap().h_eff.matrix
    };
    // Swap of the two mode slots (indices 2,3 and 6,7 in the 8-dim ordering).
    let mut p = DMatrix::<f64>::identity(8, 8);
    for base in [2usize, 6] {
        p.swap_rows(base, base + 1);
    }
    for rel in [1e-3, 1e-6] {
        let w = analytic_williamson(&NetworkSpec::Triangle {
            omega,
            kappa,
            kappa_prime: kappa * (1.0 + rel),
        })
        .unwrap();
        let h = build_effective_hessian(&w, &[1, 2], &atts).unwrap().h_eff.matrix;
        let d_direct = (&h - &exact).amax();
        let d_swapped = (&p * &h * p.transpose() - &exact).amax();
        let diff = d_direct.min(d_swapped);
        let bound = 10.0 * exact.amax() * rel;
        assert!(diff <= bound, "rel = {rel}: diff {diff} > bound {bound}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transfer_function_is_bounded_and_nonnegative(
        chi in 1.0001f64..4.0,
        tau in 0.0f64..200.0,
    ) {
        let f = transfer_function_f(chi, tau).unwrap();
        prop_assert!(f >= -1e-12);
        // 2n̄_b·F is an occupation transferred from a single thermal source;
        // F itself cannot exceed 1/2 by passivity.
        prop_assert!(f <= 0.5 + 1e-9);
    }

    #[test]
    fn expm_semigroup_random(
        seed in any::<u64>(),
        dt in 0.05f64..2.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-2.0..2.0));
        let e1 = expm(&(&a * dt));
        let e2 = expm(&(&a * (2.0 * dt)));
        let scale = e2.amax().max(1.0);
        prop_assert!((&e1 * &e1 - e2).amax() < 1e-9 * scale);
    }

    #[test]
    fn williamson_spectrum_positive(
        seed in any::<u64>(),
        n in 1usize..5,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_pd(&mut rng, n);
        let w = williamson(&m).unwrap();
        for &s in &w.spectrum {
            prop_assert!(s > 0.0);
        }
        // Ascending order.
        for k in 1..n {
            prop_assert!(w.spectrum[k] >= w.spectrum[k - 1]);
        }
    }
}
