//! Property tests for the library-wide invariants: printing and
//! reparsing a description is the identity, sugar expansion is
//! idempotent, and every stable model of a translation assigns exactly
//! one value to every constant.

use proptest::prelude::*;

use pbcplus_core::lpmln::EnumOptions;
use pbcplus_core::mvpp::translate_mvpp;
use pbcplus_core::parser::{parse_description, print_description};
use pbcplus_core::translator::translate;

mod common;
use common::random_description;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn print_parse_round_trips(seed in any::<u64>()) {
        let d = random_description(seed);
        let printed = print_description(&d);
        let reparsed = parse_description(&printed)
            .unwrap_or_else(|e| panic!("reprint failed to parse: {e}\n{printed}"));
        prop_assert_eq!(&d, &reparsed);
        // printing is a fixed point
        prop_assert_eq!(printed, print_description(&reparsed));
    }

    #[test]
    fn sugar_expansion_is_idempotent(seed in any::<u64>()) {
        let d = random_description(seed);
        let once = d.expand_sugar().unwrap();
        let twice = once.expand_sugar().unwrap();
        prop_assert_eq!(&once, &twice);
    }

    #[test]
    fn stable_models_are_total(seed in any::<u64>()) {
        let d = random_description(seed % 1024);
        let out = translate(&d, 1).unwrap();
        let program = translate_mvpp(&out.program).unwrap();
        let sig = program.signature().clone();
        let models = program
            .enumerate_stable_models(None, &EnumOptions::default())
            .unwrap();
        prop_assert!(!models.is_empty());
        for (i, _) in &models {
            for (id, c) in sig.constants() {
                prop_assert!(
                    i.value_of(&sig, id).is_some(),
                    "constant {} has no value in a stable model",
                    c.name
                );
            }
        }
    }

    #[test]
    fn probabilities_are_valid(seed in any::<u64>()) {
        let d = random_description(seed % 1024);
        let out = translate(&d, 1).unwrap();
        let program = translate_mvpp(&out.program).unwrap();
        let models = program
            .enumerate_stable_models(None, &EnumOptions::default())
            .unwrap();
        let max_soft = models
            .iter()
            .map(|(_, w)| w.soft_sum)
            .fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = models.iter().map(|(_, w)| (w.soft_sum - max_soft).exp()).sum();
        let mut total = 0.0;
        for (_, w) in &models {
            let p = (w.soft_sum - max_soft).exp() / z;
            prop_assert!(p.is_finite() && (0.0..=1.0).contains(&p));
            total += p;
        }
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }
}
