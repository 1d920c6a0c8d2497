//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use cdmalab_core::channel::{sample_bits, transmit};
use cdmalab_core::ensemble::{sample_code, Entry};
use cdmalab_core::seeds::rng_from_seed;
use cdmalab_core::{EnsembleSpec, Modulation, Regularity, SparseCode, TransmissionRecord};
use rand::Rng;

/// `P(τ_k = +1 | y)` by direct summation of `exp(-Q Σ_μ (y_μ - Σ_k s_μk τ_k)^2)`
/// over all assignments, with a running maximum for stability.
pub fn brute_force_marginals(code: &SparseCode, record: &TransmissionRecord) -> Vec<f64> {
    let k = code.users();
    let q = record.q();
    let mut dense = vec![vec![0.0; k]; code.chips()];
    for e in code.entries() {
        dense[e.chip][e.user] = e.value;
    }
    let log_w: Vec<f64> = (0..1u64 << k)
        .map(|mask| {
            let tau: Vec<f64> = (0..k)
                .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            -q * dense
                .iter()
                .zip(record.received())
                .map(|(row, y)| {
                    let r = y - row.iter().zip(&tau).map(|(s, t)| s * t).sum::<f64>();
                    r * r
                })
                .sum::<f64>()
        })
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut plus = vec![0.0; k];
    let mut total = 0.0;
    for (mask, lw) in log_w.iter().enumerate() {
        let w = (lw - max).exp();
        total += w;
        for (i, p) in plus.iter_mut().enumerate() {
            if mask >> i & 1 == 0 {
                *p += w;
            }
        }
    }
    plus.iter().map(|p| p / total).collect()
}

/// Random bipartite tree: each new chip hangs off one existing user and
/// brings `1..=3` new users; some chips are leaves on a single user.
pub fn tree_code<R: Rng>(users: usize, modulation: Modulation, rng: &mut R) -> SparseCode {
    let mut links: Vec<(usize, usize)> = Vec::new();
    let mut placed = 1;
    let mut chips = 0;
    while placed < users {
        let anchor = rng.random_range(0..placed);
        links.push((anchor, chips));
        let fresh = rng.random_range(1..=3).min(users - placed);
        for u in placed..placed + fresh {
            links.push((u, chips));
        }
        placed += fresh;
        chips += 1;
        if rng.random_bool(0.3) {
            links.push((rng.random_range(0..placed), chips));
            chips += 1;
        }
    }
    if chips == 0 {
        links.push((0, 0));
        chips = 1;
    }
    let max_degree = (0..chips)
        .map(|c| links.iter().filter(|l| l.1 == c).count())
        .max()
        .unwrap();
    let amp = 1.0 / (max_degree as f64).sqrt();
    let spec = EnsembleSpec {
        users,
        chips,
        user_degree: 1,
        chip_degree: max_degree,
        modulation,
        regularity: Regularity::PureRandom,
    };
    let entries = links.into_iter().map(|(user, chip)| Entry {
        user,
        chip,
        value: match modulation {
            Modulation::Bpsk if rng.random_bool(0.5) => -amp,
            _ => amp,
        },
    });
    SparseCode::from_entries(spec, amp, entries).unwrap()
}

/// Code, bits and noisy record for a spec, all from one seed.
pub fn instance(spec: &EnsembleSpec, sigma0: f64, seed: u64) -> (SparseCode, TransmissionRecord) {
    let mut rng = rng_from_seed(seed);
    let code = sample_code(spec, &mut rng).unwrap();
    let bits = sample_bits(spec.users, &mut rng).unwrap();
    let record = transmit(&code, &bits, sigma0, &mut rng).unwrap();
    (code, record)
}

/// A small random spec of the given regularity with `K <= max_users`.
pub fn small_spec<R: Rng>(
    regularity: Regularity,
    modulation: Modulation,
    max_users: usize,
    rng: &mut R,
) -> EnsembleSpec {
    loop {
        let (users, chips, c, l) = match regularity {
            Regularity::FullyRegular => {
                let c = rng.random_range(1..=3);
                let l = rng.random_range(1..=4);
                // K C = N L with K = m L / g, N = m C / g
                let g = gcd(c, l);
                let m = rng.random_range(1..=4);
                (m * l / g, m * c / g, c, l)
            }
            _ => {
                let users = rng.random_range(2..=max_users);
                let chips = rng.random_range(1..=users);
                let c = rng.random_range(1..=chips.min(3));
                let l = rng.random_range(1..=users.min(4));
                (users, chips, c, l)
            }
        };
        let spec = EnsembleSpec {
            users,
            chips,
            user_degree: c,
            chip_degree: l,
            modulation,
            regularity,
        };
        if users <= max_users && spec.validate().is_ok() {
            return spec;
        }
    }
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
