mod common;

use cdmalab_core::channel::{psd_q, sample_bits, transmit};
use cdmalab_core::ensemble::sample_code;
use cdmalab_core::landscape::{
    chip_clique_spin_energy, coupling_field_decomposition, energy_difference_check,
    naesat_ground_states, predicted_field_moments, MomentEnsemble,
};
use cdmalab_core::seeds::{child_seed, rng_from_seed};
use cdmalab_core::{EnsembleSpec, Modulation, Regularity, SparseCode};
use common::{instance, small_spec};
use proptest::prelude::*;
use rand::Rng;

fn spins<R: Rng>(k: usize, rng: &mut R) -> Vec<i8> {
    (0..k)
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect()
}

/// (min all-equal chips, its count, ground clique energy, its count) by a
/// plain double loop over chips and user pairs.
fn census_oracle(code: &SparseCode) -> (usize, u64, i64, u64) {
    let k = code.users();
    let mut best = (usize::MAX, 0u64, i64::MAX, 0u64);
    for mask in 0u32..1 << k {
        let tau = |u: usize| if mask >> u & 1 == 1 { -1i64 } else { 1 };
        let (mut all_equal, mut energy) = (0usize, 0i64);
        for mu in 0..code.chips() {
            let users: Vec<usize> = code.chip_entries(mu).iter().map(|e| e.user).collect();
            if users.iter().all(|&u| tau(u) == tau(users[0])) {
                all_equal += 1;
            }
            for i in 0..users.len() {
                for j in i + 1..users.len() {
                    energy += tau(users[i]) * tau(users[j]);
                }
            }
        }
        match all_equal.cmp(&best.0) {
            std::cmp::Ordering::Less => (best.0, best.1) = (all_equal, 1),
            std::cmp::Ordering::Equal => best.1 += 1,
            _ => {}
        }
        match energy.cmp(&best.2) {
            std::cmp::Ordering::Less => (best.2, best.3) = (energy, 1),
            std::cmp::Ordering::Equal => best.3 += 1,
            _ => {}
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_forms_agree(seed in any::<u64>(), reg in 0usize..3, bpsk in any::<bool>()) {
        let mut rng = rng_from_seed(seed);
        let regularity = [Regularity::PureRandom, Regularity::UserRegular, Regularity::FullyRegular][reg];
        let modulation = if bpsk { Modulation::Bpsk } else { Modulation::Unmodulated };
        let spec = small_spec(regularity, modulation, 16, &mut rng);
        let (code, record) = instance(&spec, 0.5, child_seed(seed, 1));
        let cf = coupling_field_decomposition(&code, &record).unwrap();
        for _ in 0..20 {
            let (a, b) = (spins(spec.users, &mut rng), spins(spec.users, &mut rng));
            let d = energy_difference_check(&code, &record, &cf, &a, &b).unwrap();
            prop_assert!(d.agrees(1e-9), "{d:?}");
        }
    }

    #[test]
    fn couplings_do_not_depend_on_bits(seed in any::<u64>(), bpsk in any::<bool>()) {
        let modulation = if bpsk { Modulation::Bpsk } else { Modulation::Unmodulated };
        let spec = EnsembleSpec::fully_regular(12, 9, 3, 4, modulation).unwrap();
        let mut rng = rng_from_seed(seed);
        let code = sample_code(&spec, &mut rng).unwrap();
        let r1 = transmit(&code, &sample_bits(12, &mut rng).unwrap(), 0.5, &mut rng).unwrap();
        let r2 = transmit(&code, &sample_bits(12, &mut rng).unwrap(), 0.5, &mut rng).unwrap();
        let j1 = coupling_field_decomposition(&code, &r1).unwrap().couplings;
        let j2 = coupling_field_decomposition(&code, &r2).unwrap().couplings;
        prop_assert_eq!(j1, j2);
    }

    #[test]
    fn couplings_are_multiples_of_q_over_l(seed in any::<u64>(), bpsk in any::<bool>()) {
        let modulation = if bpsk { Modulation::Bpsk } else { Modulation::Unmodulated };
        let spec = EnsembleSpec::fully_regular(12, 6, 3, 6, modulation).unwrap();
        let (code, record) = instance(&spec, 0.8, seed);
        let cf = coupling_field_decomposition(&code, &record).unwrap();
        let unit = record.q() / 6.0;
        for (&(a, b), &j) in &cf.couplings {
            let m = j / unit;
            prop_assert!((m - m.round()).abs() < 1e-9);
            let shared = (0..spec.chips).filter(|&mu| code.value(a, mu) != 0.0 && code.value(b, mu) != 0.0).count();
            // BPSK chips contribute ±1 each, so opposite signs can cancel
            prop_assert!(m.round().abs() as usize <= shared);
            prop_assert_eq!((m.round() as i64 - shared as i64).rem_euclid(2), 0);
            if !bpsk {
                prop_assert_eq!(m.round() as i64, -(shared as i64));
            }
        }
    }
}

#[test]
fn three_cliques_take_two_energies() {
    for mask in 0..8 {
        let tau: Vec<i8> = (0..3)
            .map(|i| if mask >> i & 1 == 1 { -1 } else { 1 })
            .collect();
        let all_equal = tau.iter().all(|&t| t == tau[0]);
        assert_eq!(
            chip_clique_spin_energy(&tau),
            if all_equal { 3 } else { -1 }
        );
    }
}

#[test]
fn census_matches_oracle() {
    let specs = [
        EnsembleSpec::fully_regular(12, 9, 3, 4, Modulation::Unmodulated).unwrap(),
        EnsembleSpec::fully_regular(12, 12, 3, 3, Modulation::Unmodulated).unwrap(),
        EnsembleSpec::fully_regular(15, 10, 2, 3, Modulation::Unmodulated).unwrap(),
    ];
    for (i, spec) in specs.iter().enumerate() {
        for seed in 0..5 {
            let code = sample_code(spec, &mut rng_from_seed(child_seed(i as u64, seed))).unwrap();
            let c = naesat_ground_states(&code).unwrap();
            let oracle = census_oracle(&code);
            assert_eq!(
                (
                    c.min_all_equal,
                    c.min_all_equal_count,
                    c.ground_energy,
                    c.ground_state_count
                ),
                oracle
            );
        }
    }
}

#[test]
fn predicted_mean_outgrows_spread() {
    let spec = EnsembleSpec::fully_regular(600, 300, 3, 6, Modulation::Bpsk).unwrap();
    let ratios: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&q| {
            let p = predicted_field_moments(&spec, q, MomentEnsemble::SparseBpsk).unwrap();
            p.mean / p.variance.sqrt()
        })
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
    let means: Vec<f64> = [1.0, 2.0, 3.0]
        .iter()
        .map(|&q| {
            predicted_field_moments(&spec, q, MomentEnsemble::SparseBpsk)
                .unwrap()
                .mean
        })
        .collect();
    assert!((means[2] - means[1] - (means[1] - means[0])).abs() < 1e-12);
    assert!((psd_q(1.0).unwrap() - 0.5).abs() < 1e-15);
}
