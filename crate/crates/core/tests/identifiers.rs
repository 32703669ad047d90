//! Generated identifiers against an independent check-digit computation.

mod support;

use hazardchat_core::model::{validate_cas, validate_ec, IdentifierError};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{cas_oracle, check_digit_mutations as mutations, ec_oracle, generated_cas, generated_ec};

#[test]
fn fifty_cas_and_twenty_ec() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cas = generated_cas(&mut rng, 50);
    let ec = generated_ec(&mut rng, 20);
    for id in &cas {
        assert_eq!(validate_cas(id).unwrap().as_str(), id);
        for m in mutations(id) {
            assert!(matches!(validate_cas(&m), Err(IdentifierError::ChecksumMismatch { .. })), "{m} accepted");
        }
    }
    for id in &ec {
        assert_eq!(validate_ec(id).unwrap().as_str(), id);
        for m in mutations(id) {
            assert!(matches!(validate_ec(&m), Err(IdentifierError::ChecksumMismatch { .. })), "{m} accepted");
        }
    }
}

#[test]
fn published_examples() {
    for cas in ["107-02-8", "7732-18-5", "71-43-2", "50-00-0"] {
        assert!(validate_cas(cas).is_ok(), "{cas}");
    }
    for ec in ["203-453-4", "231-791-2", "200-753-7"] {
        assert!(validate_ec(ec).is_ok(), "{ec}");
    }
    assert!(matches!(validate_cas("107-2-8"), Err(IdentifierError::MalformedFormat { .. })));
    assert!(matches!(validate_ec("2034534"), Err(IdentifierError::MalformedFormat { .. })));
}

proptest! {
    #[test]
    fn ec_stems_with_remainder_ten_never_validate(prefix in "[0-9]{5}", check in 0u8..10) {
        // Solve 6*d = 10 - partial (mod 11); 2 is the inverse of 6 mod 11.
        let partial: u32 = prefix.chars().enumerate().map(|(i, c)| (i as u32 + 1) * c.to_digit(10).unwrap()).sum();
        let d = (2 * (10 + 11 * 10 - partial % 11)) % 11;
        prop_assume!(d < 10);
        let stem = format!("{prefix}{d}");
        prop_assert_eq!(ec_oracle(&stem), None);
        let text = format!("{}-{}-{check}", &stem[..3], &stem[3..]);
        prop_assert!(validate_ec(&text).is_err());
    }

    #[test]
    fn cas_validation_agrees_with_oracle(head in "[1-9][0-9]{1,6}", mid in "[0-9]{2}", check in 0u32..10) {
        let text = format!("{head}-{mid}-{check}");
        let expected = cas_oracle(&format!("{head}{mid}")) == check;
        prop_assert_eq!(validate_cas(&text).is_ok(), expected);
    }
}
