use proptest::prelude::*;
use twosite_core::ensemble::{run_ensemble, InitialState};
use twosite_core::model::{assemble_hamiltonian, build_h0, make_initial_state, sample_interaction};
use twosite_core::propagator::{eigendecompose, evolve, evolve_state, remainder_norms, DuhamelGrid};
use twosite_core::{Site, SpectrumConfig};

fn setup(n: usize, lambda: f64, seed: u64) -> (SpectrumConfig, twosite_core::Hamiltonian) {
    let cfg = SpectrumConfig::new(n, lambda, 0.05, seed).unwrap();
    let h0 = build_h0(&cfg).unwrap();
    let v = sample_interaction(&cfg, seed);
    let h = assemble_hamiltonian(&h0, &v, lambda).unwrap();
    (cfg, h)
}

#[test]
fn interaction_entry_variance_is_one_over_n() {
    let n = 64;
    let cfg = SpectrumConfig::new(n, 1.0, 0.05, 0).unwrap();
    let v = sample_interaction(&cfg, 11);
    let block = v.upper_block();
    let values: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| block[(i, j)].norm_sqr()).collect();
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0);
    let stderr = (var / count).sqrt();
    assert!((mean - 1.0 / n as f64).abs() < 5.0 * stderr, "{mean} vs {}", 1.0 / n as f64);
}

#[test]
fn duhamel_remainder_decreases_through_fourth_order() {
    let (cfg, _) = setup(32, 0.1, 5);
    let h0 = build_h0(&cfg).unwrap();
    let v = sample_interaction(&cfg, 5);
    let psi0 = make_initial_state(&cfg, Site::One, (0.3, 0.7)).unwrap();
    let r = remainder_norms(4, 2.0, &h0, &v, 0.1, &psi0, DuhamelGrid::default()).unwrap();
    for m in 1..4 {
        assert!(r[m + 1] < r[m] + 1e-6, "{r:?}");
    }
    assert!(r[4] < r[2]);
}

#[test]
fn ensemble_output_is_independent_of_thread_count() {
    let cfg = SpectrumConfig::new(24, 0.1, 0.05, 0).unwrap();
    let times = [0.0, 1.0, 5.0, 20.0];
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&cfg, InitialState::default(), &times, 6, 99).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a.trace_mean, b.trace_mean);
    assert_eq!(a.trace_stderr, b.trace_stderr);
    assert_eq!(a.member_seeds, b.member_seeds);
}

#[test]
fn stderr_shrinks_with_more_members() {
    let cfg = SpectrumConfig::new(32, 0.1, 0.05, 0).unwrap();
    let times = [0.0, 8.0];
    let small = run_ensemble(&cfg, InitialState::default(), &times, 8, 1).unwrap();
    let large = run_ensemble(&cfg, InitialState::default(), &times, 32, 1).unwrap();
    assert!(large.trace_stderr.p1[1] < small.trace_stderr.p1[1]);
    for k in 0..2 {
        assert!((large.trace_mean.p1[k] + large.trace_mean.p2[k] - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hamiltonian_is_hermitian_and_state_normalized(n in 2usize..40, lambda in 0.0f64..2.0, seed in any::<u64>()) {
        let (cfg, h) = setup(n, lambda, seed);
        prop_assert!(twosite_core::model::hermiticity_defect(&h.dense()) < 1e-12);
        if let Ok(psi) = make_initial_state(&cfg, Site::Two, (0.3, 0.7)) {
            prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
            prop_assert_eq!(psi.site_probability(Site::One), 0.0);
            for k in 1..=n {
                let e = cfg.energy(k);
                if !(e > 0.3 && e <= 0.7) {
                    prop_assert_eq!(psi.amplitude(Site::Two, k), twosite_core::C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn evolution_is_unitary_and_conserves_energy(n in 4usize..24, lambda in 0.01f64..0.5, seed in any::<u64>()) {
        let (cfg, h) = setup(n, lambda, seed);
        let psi0 = make_initial_state(&cfg, Site::One, (0.25, 0.75)).unwrap();
        let f = eigendecompose(&h).unwrap();
        let times = [0.0, 0.5, 3.0, 17.0, 120.0];
        let trace = evolve(&psi0, &f, &times).unwrap();
        prop_assert!(trace.norm.iter().all(|x| (x - 1.0).abs() < 1e-9));
        let e0 = h.expectation(&psi0);
        for &t in &times {
            let psi = evolve_state(&psi0, &f, t).unwrap();
            prop_assert!((h.expectation(&psi) - e0).abs() < 1e-9);
        }
    }

    #[test]
    fn evolution_composes_in_time(n in 4usize..24, seed in any::<u64>(), t1 in 0.0f64..20.0, dt in 0.0f64..20.0) {
        let (cfg, h) = setup(n, 0.2, seed);
        let psi0 = make_initial_state(&cfg, Site::One, (0.25, 0.75)).unwrap();
        let f = eigendecompose(&h).unwrap();
        let direct = evolve_state(&psi0, &f, t1 + dt).unwrap();
        let staged = evolve_state(&evolve_state(&psi0, &f, t1).unwrap(), &f, dt).unwrap();
        prop_assert!(direct.distance(&staged) < 1e-9);
    }
}
