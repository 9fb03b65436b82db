use proptest::prelude::*;

use rollerchain_cli::Scenario;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..400)) {
        let _ = Scenario::from_bytes(&bytes);
    }

    #[test]
    fn key_value_noise_never_panics(
        lines in prop::collection::vec(
            ("[a-z_]{0,14}", "[ =#]{0,2}", "[-0-9a-z.=#]{0,24}"),
            0..20,
        ),
    ) {
        let text: String = lines.iter().map(|(k, sep, v)| format!("{k}{sep}{v}\n")).collect();
        let _ = Scenario::from_bytes(text.as_bytes());
    }

    #[test]
    fn accepted_scenarios_survive_a_print_parse_roundtrip(parties in 1usize..30, window in 1u64..200, k in 1usize..6) {
        let text = format!("parties={parties}\nwindow={window}\nsnapshots={k}\n");
        match Scenario::from_bytes(text.as_bytes()) {
            Ok(sc) => {
                prop_assert!(k as u64 <= window);
                let again = Scenario::from_bytes(sc.config.to_string().as_bytes()).unwrap();
                prop_assert_eq!(again, sc);
            }
            Err(_) => prop_assert!(k as u64 > window),
        }
    }
}
