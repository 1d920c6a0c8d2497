use cdmalab_core::channel::psd_q;
use cdmalab_core::popdyn::{
    ber_from_population, branch_point, pd_sweep_modulated, pd_sweep_unmodulated, run_to_convergence,
};
use cdmalab_core::seeds::{child_seed, rng_from_seed};
use cdmalab_core::stats::{combined_se, mean_se};
use cdmalab_core::{EnsembleSpec, InitMode, Modulation, PdParams};

fn params(population_size: usize, seed: u64) -> PdParams {
    PdParams {
        population_size,
        measure_sweeps: 60,
        samples: 5_000,
        seed,
        ..PdParams::default()
    }
}

#[test]
fn nishimori_identity_holds_at_fixed_points() {
    for (l, sigma0) in [(2, 0.5), (2, 0.8), (3, 0.5)] {
        for modulation in [Modulation::Bpsk, Modulation::Unmodulated] {
            let spec = EnsembleSpec::degrees(3, l, modulation).unwrap();
            let gaps: Vec<f64> = (0..6)
                .map(|s| {
                    let sol = run_to_convergence(
                        &spec,
                        psd_q(sigma0).unwrap(),
                        &params(5_000, s),
                        InitMode::Zero,
                    )
                    .unwrap();
                    sol.mean_tanh - sol.mean_tanh_sq
                })
                .collect();
            let (m, se) = mean_se(&gaps);
            assert!(
                m.abs() < 3.0 * se,
                "L={l} σ0={sigma0} {modulation:?}: {gaps:?}"
            );
        }
    }
}

#[test]
fn doubling_the_population_keeps_the_ber() {
    let spec = EnsembleSpec::degrees(3, 2, Modulation::Bpsk).unwrap();
    for sigma0 in [0.5, 0.8] {
        let q = psd_q(sigma0).unwrap();
        let a = run_to_convergence(&spec, q, &params(5_000, 1), InitMode::Random).unwrap();
        let b = run_to_convergence(&spec, q, &params(10_000, 2), InitMode::Random).unwrap();
        assert!(
            (a.ber.value - b.ber.value).abs() < 2.0 * combined_se(a.ber.se, b.ber.se),
            "σ0={sigma0}: {:?} vs {:?}",
            a.ber,
            b.ber
        );
    }
}

#[test]
fn one_more_sweep_stays_within_tolerance() {
    for modulation in [Modulation::Bpsk, Modulation::Unmodulated] {
        let spec = EnsembleSpec::degrees(3, 2, modulation).unwrap();
        let p = PdParams {
            tolerance: 0.01,
            ..params(20_000, 3)
        };
        let q = psd_q(0.7).unwrap();
        let sol = run_to_convergence(&spec, q, &p, InitMode::Random).unwrap();
        assert!(sol.converged);
        let mut pops = sol.populations.clone();
        let mut rng = rng_from_seed(child_seed(3, 9));
        let before = ber_from_population(&sol.model, &pops.bias, 200_000, &mut rng).value;
        match modulation {
            Modulation::Bpsk => pd_sweep_modulated(&sol.model, &mut pops, &mut rng).unwrap(),
            Modulation::Unmodulated => {
                pd_sweep_unmodulated(&sol.model, &mut pops, &mut rng).unwrap()
            }
        }
        let after = ber_from_population(&sol.model, &pops.bias, 200_000, &mut rng).value;
        assert!((after - before).abs() < p.tolerance, "{before} -> {after}");
        assert!((pops.field.mean_tanh() - sol.mean_tanh).abs() < p.tolerance);
    }
}

#[test]
fn thermodynamic_ber_does_not_increase_with_q() {
    let spec = EnsembleSpec::degrees(3, 2, Modulation::Bpsk).unwrap();
    let bers: Vec<_> = [1.2, 1.0, 0.8, 0.6, 0.4]
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let p = branch_point(&spec, s, &params(5_000, child_seed(4, i as u64))).unwrap();
            assert!(!p.multivalued);
            p.thermodynamic().ber
        })
        .collect();
    for w in bers.windows(2) {
        assert!(
            w[1].value <= w[0].value + 2.0 * combined_se(w[0].se, w[1].se),
            "{bers:?}"
        );
    }
}

#[test]
fn high_load_high_q_has_two_branches() {
    let spec = EnsembleSpec::degrees(3, 6, Modulation::Bpsk).unwrap();
    let p = branch_point(&spec, 0.2, &params(5_000, 5)).unwrap();
    assert!(p.multivalued);
    assert!(
        p.random.ber.value > 10.0 * p.informed.ber.value,
        "{:?} {:?}",
        p.random.ber,
        p.informed.ber
    );
}
