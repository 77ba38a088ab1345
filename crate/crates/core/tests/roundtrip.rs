mod common;

use ivy::tmk::{parse_model, serialize_model, validate_model};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

#[test]
fn fixtures_round_trip() {
    for name in [common::SAFE, common::UNSAFE] {
        let model = common::fixture(name);
        let text = serialize_model(&model);
        let again = parse_model(&text).unwrap();
        assert_eq!(again, model, "{name}");
        assert_eq!(serialize_model(&again), text, "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn random_models_round_trip(seed in any::<u64>()) {
        let model = common::random_model(&mut StdRng::seed_from_u64(seed));
        let report = validate_model(&model);
        prop_assert!(report.is_valid(), "{}", report);
        let text = serialize_model(&model);
        let again = parse_model(&text).unwrap();
        prop_assert_eq!(&again, &model);
        prop_assert_eq!(serialize_model(&again), text);
    }
}
