use std::path::Path;

use cdmalab::formats::{
    code_from_str, code_to_string, read_code, read_record, write_code, write_record, CodeRef,
};
use cdmalab_core::channel::{sample_bits, transmit};
use cdmalab_core::ensemble::sample_code;
use cdmalab_core::seeds::rng_from_seed;
use cdmalab_core::{EnsembleSpec, Modulation, Regularity};
use proptest::prelude::*;

fn spec(reg: usize, bpsk: bool, m: usize) -> EnsembleSpec {
    EnsembleSpec {
        users: 4 * m,
        chips: 3 * m,
        user_degree: 3,
        chip_degree: 4,
        modulation: if bpsk {
            Modulation::Bpsk
        } else {
            Modulation::Unmodulated
        },
        regularity: [
            Regularity::PureRandom,
            Regularity::UserRegular,
            Regularity::FullyRegular,
        ][reg],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn code_text_round_trips(seed in any::<u64>(), reg in 0usize..3, bpsk in any::<bool>(), m in 1usize..6) {
        let spec = spec(reg, bpsk, m);
        let code = sample_code(&spec, &mut rng_from_seed(seed)).unwrap();
        let text = code_to_string(&code);
        let back = code_from_str(&text, Path::new("mem")).unwrap();
        prop_assert_eq!(&back, &code);
        prop_assert_eq!(code_to_string(&back), text);
    }

    #[test]
    fn files_round_trip(seed in any::<u64>(), sigma0 in 0.05f64..3.0) {
        let dir = tempfile::tempdir().unwrap();
        let spec = spec(2, true, 2);
        let mut rng = rng_from_seed(seed);
        let code = sample_code(&spec, &mut rng).unwrap();
        let bits = sample_bits(spec.users, &mut rng).unwrap();
        let record = transmit(&code, &bits, sigma0, &mut rng).unwrap();
        write_code(&dir.path().join("c.txt"), &code).unwrap();
        let code_ref = CodeRef { path: Some("c.txt".into()), seed: Some(seed) };
        write_record(&dir.path().join("r.json"), &record, code_ref.clone()).unwrap();
        prop_assert_eq!(read_code(&dir.path().join("c.txt")).unwrap(), code);
        let (back, back_ref) = read_record(&dir.path().join("r.json")).unwrap();
        prop_assert_eq!(back, record);
        prop_assert_eq!(back_ref, code_ref);
    }
}

#[test]
fn record_with_unknown_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    std::fs::write(
        &path,
        r#"{"bits":[1],"noise":[0.0],"received":[1.0],"sigma0":1.0,"Q":0.5,"gain":3}"#,
    )
    .unwrap();
    assert!(read_record(&path).is_err());
}
