use logconc_cli::config::KNOWN_KEYS;
use logconc_cli::ExperimentConfig;
use proptest::prelude::*;

fn known_key() -> impl Strategy<Value = String> {
    prop::sample::select(KNOWN_KEYS.iter().map(|(k, _)| k.to_string()).collect::<Vec<_>>())
}

proptest! {
    #[test]
    fn display_parses_back(entries in prop::collection::btree_map(known_key(), "[a-z0-9.,:-]{1,12}", 0..12)) {
        let mut cfg = ExperimentConfig::default();
        for (k, v) in &entries {
            cfg.set(k, v).unwrap();
        }
        let text = cfg.to_string();
        prop_assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_never_parse(key in "[a-z]{3,10}\\.[a-z]{3,10}") {
        prop_assume!(!KNOWN_KEYS.iter().any(|(k, _)| *k == key));
        let line = format!("{key} = 1");
        prop_assert!(ExperimentConfig::parse(&line).is_err());
    }
}

#[test]
fn grids_must_be_sorted() {
    for key in ["dims", "samples", "p-grid", "t-grid", "eps-grid"] {
        let cfg = ExperimentConfig::parse(&format!("{key} = 3, 1")).unwrap();
        assert!(cfg.list::<f64>(key).is_err(), "{key}");
        let cfg = ExperimentConfig::parse(&format!("{key} = 1, 3")).unwrap();
        assert_eq!(cfg.list::<f64>(key).unwrap(), Some(vec![1.0, 3.0]));
    }
}
