mod common;

use cdmalab_core::channel::{noiseless_signal, sample_bits, transmit};
use cdmalab_core::ensemble::{sample_code, validate_code};
use cdmalab_core::seeds::{child_seed, rng_from_seed};
use cdmalab_core::stats::mean_se;
use cdmalab_core::{EnsembleSpec, Modulation, Regularity};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn fully_regular_degrees_are_exact(seed in any::<u64>(), c in 1usize..5, l in 1usize..7, m in 1usize..5, bpsk in any::<bool>()) {
        let g = common::gcd(c, l);
        let modulation = if bpsk { Modulation::Bpsk } else { Modulation::Unmodulated };
        let spec = EnsembleSpec::fully_regular(m * l / g * 2, m * c / g * 2, c, l, modulation);
        prop_assume!(spec.is_ok());
        let spec = spec.unwrap();
        let code = sample_code(&spec, &mut rng_from_seed(seed)).unwrap();
        prop_assert!(validate_code(&code, &spec).all_passed());
        prop_assert!((0..spec.users).all(|k| code.user_degree(k) == c));
        prop_assert!((0..spec.chips).all(|mu| code.chip_degree(mu) == l));
        let again = sample_code(&spec, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(code, again);
    }

    #[test]
    fn flipping_a_bit_moves_only_its_chips(seed in any::<u64>(), user in 0usize..12) {
        let spec = EnsembleSpec::fully_regular(12, 9, 3, 4, Modulation::Bpsk).unwrap();
        let mut rng = rng_from_seed(seed);
        let code = sample_code(&spec, &mut rng).unwrap();
        let bits = sample_bits(12, &mut rng).unwrap();
        let mut flipped = bits.clone();
        flipped[user] = -flipped[user];
        let y = noiseless_signal(&code, &bits).unwrap();
        let y2 = noiseless_signal(&code, &flipped).unwrap();
        for mu in 0..spec.chips {
            let s = code.value(user, mu);
            let want = -2.0 * s * f64::from(bits[user]);
            prop_assert!((y2[mu] - y[mu] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn twelve_nine_degree_histogram() {
    let spec = EnsembleSpec::fully_regular(12, 9, 3, 4, Modulation::Bpsk).unwrap();
    let mut user_hist = [0usize; 8];
    let mut chip_hist = [0usize; 8];
    for seed in 0..1000 {
        let code = sample_code(&spec, &mut rng_from_seed(seed)).unwrap();
        (0..12).for_each(|k| user_hist[code.user_degree(k)] += 1);
        (0..9).for_each(|mu| chip_hist[code.chip_degree(mu)] += 1);
    }
    assert_eq!(user_hist[3], 12_000);
    assert_eq!(chip_hist[4], 9_000);
}

#[test]
fn six_three_is_complete() {
    let spec = EnsembleSpec::fully_regular(6, 3, 3, 6, Modulation::Bpsk).unwrap();
    let code = sample_code(&spec, &mut rng_from_seed(5)).unwrap();
    assert_eq!(code.entries().len(), 18);
    let amp = 1.0 / 6f64.sqrt();
    assert!(code
        .entries()
        .iter()
        .all(|e| (e.value.abs() - amp).abs() < 1e-15));
}

#[test]
fn pure_random_mean_user_degree() {
    let spec = EnsembleSpec {
        users: 1000,
        chips: 750,
        user_degree: 3,
        chip_degree: 4,
        modulation: Modulation::Bpsk,
        regularity: Regularity::PureRandom,
    };
    let means: Vec<f64> = (0..100)
        .map(|s| {
            let code = sample_code(&spec, &mut rng_from_seed(child_seed(7, s))).unwrap();
            code.entries().len() as f64 / 1000.0
        })
        .collect();
    let (m, se) = mean_se(&means);
    assert!((m - 3.0).abs() < 3.0 * se, "{m} ± {se}");
}

#[test]
fn bpsk_sign_balance() {
    let spec = EnsembleSpec::fully_regular(120, 90, 3, 4, Modulation::Bpsk).unwrap();
    let (mut plus, mut total) = (0usize, 0usize);
    for seed in 0..100 {
        let code = sample_code(&spec, &mut rng_from_seed(seed)).unwrap();
        plus += code.entries().iter().filter(|e| e.value > 0.0).count();
        total += code.entries().len();
    }
    let frac = plus as f64 / total as f64;
    let se = (0.25 / total as f64).sqrt();
    assert!((frac - 0.5).abs() < 3.0 * se, "{frac}");
}

#[test]
fn noise_variance() {
    let spec = EnsembleSpec::fully_regular(12, 6, 3, 6, Modulation::Bpsk).unwrap();
    let mut rng = rng_from_seed(11);
    let code = sample_code(&spec, &mut rng).unwrap();
    let bits = sample_bits(12, &mut rng).unwrap();
    let sigma0 = 0.7;
    let mut noise = Vec::new();
    while noise.len() < 100_000 {
        noise.extend_from_slice(transmit(&code, &bits, sigma0, &mut rng).unwrap().noise());
    }
    let n = noise.len() as f64;
    let var = noise.iter().map(|x| x * x).sum::<f64>() / n;
    let se = sigma0 * sigma0 * (2.0 / n).sqrt();
    assert!((var - sigma0 * sigma0).abs() < 3.0 * se, "{var}");
}
