mod common;

use cdmalab_core::channel::{psd_q, sample_bits, transmit, transmit_with_noise};
use cdmalab_core::detector::{bit_error_rate, bp_detect, exact_marginals};
use cdmalab_core::seeds::{child_seed, rng_from_seed};
use cdmalab_core::stats::{combined_se, mean_se};
use cdmalab_core::{BpParams, EnsembleSpec, Modulation, Regularity};
use common::{brute_force_marginals, instance, small_spec, tree_code};
use proptest::prelude::*;

fn modulation(bpsk: bool) -> Modulation {
    if bpsk {
        Modulation::Bpsk
    } else {
        Modulation::Unmodulated
    }
}

fn regularity(i: u8) -> Regularity {
    [
        Regularity::PureRandom,
        Regularity::UserRegular,
        Regularity::FullyRegular,
    ][i as usize % 3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_matches_direct_summation(
        seed in any::<u64>(),
        reg in 0u8..3,
        bpsk in any::<bool>(),
        sigma0 in prop::sample::select(vec![0.25, 0.5, 1.0]),
    ) {
        let mut rng = rng_from_seed(seed);
        let spec = small_spec(regularity(reg), modulation(bpsk), 10, &mut rng);
        let (code, record) = instance(&spec, sigma0, child_seed(seed, 1));
        let exact = exact_marginals(&code, &record).unwrap();
        let oracle = brute_force_marginals(&code, &record);
        for (a, b) in exact.prob_plus.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn bp_is_exact_on_trees(
        seed in any::<u64>(),
        users in 1usize..12,
        bpsk in any::<bool>(),
        sigma0 in prop::sample::select(vec![0.25, 0.5, 1.0]),
    ) {
        let mut rng = rng_from_seed(seed);
        let code = tree_code(users, modulation(bpsk), &mut rng);
        let bits = sample_bits(users, &mut rng).unwrap();
        let record = transmit(&code, &bits, sigma0, &mut rng).unwrap();
        let bp = bp_detect(&code, &record, &BpParams { tolerance: 1e-13, ..BpParams::default() }).unwrap();
        prop_assert!(bp.converged);
        let exact = exact_marginals(&code, &record).unwrap();
        for (a, b) in bp.prob_plus.iter().zip(&exact.prob_plus) {
            prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn gauge_covariance(seed in any::<u64>(), user in 0usize..12) {
        let spec = EnsembleSpec::fully_regular(12, 6, 3, 6, Modulation::Bpsk).unwrap();
        let (code, record) = instance(&spec, 0.6, seed);
        let flipped_code = code.with_user_negated(user);
        let mut bits = record.bits().to_vec();
        bits[user] = -bits[user];
        let flipped = transmit_with_noise(&flipped_code, &bits, record.noise().to_vec(), record.sigma0()).unwrap();
        for (a, b) in record.received().iter().zip(flipped.received()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let p = exact_marginals(&code, &record).unwrap().prob_plus;
        let pf = exact_marginals(&flipped_code, &flipped).unwrap().prob_plus;
        for k in 0..12 {
            let want = if k == user { 1.0 - p[k] } else { p[k] };
            prop_assert!((pf[k] - want).abs() < 1e-10);
        }
    }
}

#[test]
fn exact_ber_does_not_increase_with_q() {
    let spec = EnsembleSpec::fully_regular(12, 6, 3, 6, Modulation::Bpsk).unwrap();
    let points: Vec<(f64, f64)> = [0.5f64, 1.0, 2.0, 4.0]
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let sigma0 = (1.0 / (2.0 * q)).sqrt();
            let bers: Vec<f64> = (0..200)
                .map(|t| {
                    let (code, record) = instance(&spec, sigma0, child_seed(i as u64, t));
                    bit_error_rate(&exact_marginals(&code, &record).unwrap(), record.bits())
                        .unwrap()
                })
                .collect();
            mean_se(&bers)
        })
        .collect();
    for w in points.windows(2) {
        let ((a, sa), (b, sb)) = (w[0], w[1]);
        assert!(b <= a + 2.0 * combined_se(sa, sb), "{points:?}");
    }
}

#[test]
fn messages_stay_finite_at_high_q() {
    let sigma0 = (1.0f64 / 200.0).sqrt();
    assert!((psd_q(sigma0).unwrap() - 100.0).abs() < 1e-9);
    for seed in 0..20 {
        let spec = EnsembleSpec::fully_regular(60, 30, 3, 6, Modulation::Bpsk).unwrap();
        let (code, record) = instance(&spec, sigma0, seed);
        let bp = bp_detect(&code, &record, &BpParams::default()).unwrap();
        assert!(bp
            .prob_plus
            .iter()
            .all(|p| p.is_finite() && (0.0..=1.0).contains(p)));
        assert!(bp.residual.is_finite());
    }
    let spec = EnsembleSpec::fully_regular(12, 6, 3, 6, Modulation::Unmodulated).unwrap();
    let (code, record) = instance(&spec, sigma0, 99);
    let exact = exact_marginals(&code, &record).unwrap();
    assert!(exact.prob_plus.iter().all(|p| p.is_finite()));
}
