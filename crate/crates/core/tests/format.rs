use geomnet::filters::enumerate_invariant_filters;
use geomnet::format::*;
use geomnet::net::presets::{preset, PRESET_NAMES};
use geomnet::net::{Model, TrainConfig};
use geomnet::numerics::Prng;
use geomnet::physics::{gen_gravity, GravityConfig, Problem};
use geomnet::{GeometricImage, Parity, TensorSpec};
use proptest::prelude::*;
use std::sync::OnceLock;

/// Runs every parser; they may fail but must not panic.
fn parse_all(text: &str) {
    let _ = parse_image(text);
    let _ = parse_bank(text);
    let _ = parse_model(text);
    let _ = parse_net(text);
    let _ = parse_train_config(text);
    let _ = parse_split(text);
    let _ = parse_dataset_manifest(text);
}

fn valid_documents() -> &'static [String] {
    static DOCS: OnceLock<Vec<String>> = OnceLock::new();
    DOCS.get_or_init(build_documents)
}

fn build_documents() -> Vec<String> {
    let img =
        GeometricImage::new(3, TensorSpec::new(2, 1, Parity::Neg), (0..18).map(|x| x as f64 * 0.5).collect()).unwrap();
    let spec = preset("fig6").unwrap();
    let params = vec![0.25; Model::new(spec.clone()).unwrap().param_count()];
    let samples = gen_gravity(0, 1, &GravityConfig { n: 4, masses: 2 }).unwrap();
    vec![
        image_to_json(&img),
        bank_to_json(&enumerate_invariant_filters(3, 2, 1, Parity::Pos).unwrap()),
        model_to_json(&spec, &params),
        net_to_json(&preset("gravity-baseline").unwrap()),
        train_config_to_json(&TrainConfig::default()),
        split_to_json(Problem::Gravity, "train", 0, &samples),
        r#"{"schema_version":1,"seed":0,"config":{"problem":"gravity","n":4,"masses":2},"sizes":{"train":1,"val":0,"test":0},"files":{"train":"train.json"}}"#.to_string(),
    ]
}

#[test]
fn documents_round_trip() {
    let img = GeometricImage::new(3, TensorSpec::new(2, 2, Parity::Neg), (0..36).map(|x| (x as f64).sin()).collect())
        .unwrap();
    assert_eq!(parse_image(&image_to_json(&img)).unwrap(), img);

    let bank = enumerate_invariant_filters(5, 2, 1, Parity::Neg).unwrap();
    let back = parse_bank(&bank_to_json(&bank)).unwrap();
    assert_eq!(back.filters, bank.filters);

    for name in PRESET_NAMES {
        let spec = preset(name).unwrap();
        let model = Model::new(spec.clone()).unwrap();
        let params = model.init_params(&mut Prng::new(1), 0.1);
        let (spec2, params2) = parse_model(&model_to_json(&spec, &params)).unwrap();
        assert_eq!((spec2, params2), (spec.clone(), params));
        assert_eq!(parse_net(&net_to_json(&spec)).unwrap(), spec);
    }

    let cfg = TrainConfig { learning_rate: 0.01, seed: 4, ..Default::default() };
    assert_eq!(parse_train_config(&train_config_to_json(&cfg)).unwrap(), cfg);
    assert_eq!(parse_train_config(r#"{"schema_version":1}"#).unwrap(), TrainConfig::default());

    let samples = gen_gravity(2, 3, &GravityConfig { n: 5, masses: 3 }).unwrap();
    assert_eq!(parse_split(&split_to_json(Problem::Gravity, "test", 2, &samples)).unwrap(), samples);
    assert!(parse_split(&split_to_json(Problem::Gravity, "val", 2, &[])).unwrap().is_empty());

    let manifest = parse_dataset_manifest(&valid_documents()[6]).unwrap();
    assert_eq!(manifest.files["train"], "train.json");
}

#[test]
fn hostile_documents_are_rejected() {
    let huge = r#"{"schema_version":1,"N":100000,"d":4,"k":8,"parity":1,"data":[]}"#;
    assert!(parse_image(huge).is_err());
    let bad_parity = r#"{"schema_version":1,"N":1,"d":1,"k":0,"parity":0,"data":[1.0]}"#;
    assert!(parse_image(bad_parity).is_err());
    let extra = r#"{"schema_version":1,"N":1,"d":1,"k":0,"parity":1,"data":[1.0],"x":1}"#;
    assert!(parse_image(extra).is_err());
    let escape = r#"{"schema_version":1,"seed":0,"config":{"problem":"gravity","n":4,"masses":2},"sizes":{"train":1,"val":0,"test":0},"files":{"train":"../etc/passwd"}}"#;
    assert!(parse_dataset_manifest(escape).is_err());
    let mut cfg = train_config_to_json(&TrainConfig::default());
    cfg = cfg.replace("\"batch_fraction\": 0.2", "\"batch_fraction\": -1.0");
    assert!(parse_train_config(&cfg).is_err());
    // Parsing does not build the network; the count is checked on first use.
    let (spec, params) = parse_model(&model_to_json(&preset("fig6").unwrap(), &[1.0])).unwrap();
    let model = Model::new(spec).unwrap();
    let input = GeometricImage::zeros(3, TensorSpec::new(2, 1, Parity::Pos));
    assert!(matches!(model.forward(&params, &input), Err(geomnet::Error::ParamCount { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn random_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
        parse_all(&String::from_utf8_lossy(&bytes));
    }

    #[test]
    fn mutated_documents_never_panic(
        which in 0usize..7,
        edits in proptest::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..6),
    ) {
        let mut bytes = valid_documents()[which].clone().into_bytes();
        for (at, b) in edits {
            let i = at.index(bytes.len());
            bytes[i] = b;
        }
        parse_all(&String::from_utf8_lossy(&bytes));
    }

    #[test]
    fn truncated_documents_never_panic(which in 0usize..7, cut in any::<prop::sample::Index>()) {
        let doc = valid_documents()[which].clone();
        let bytes = &doc.as_bytes()[..cut.index(doc.len() + 1)];
        parse_all(&String::from_utf8_lossy(bytes));
    }
}

#[test]
fn fuzz_seeds_parse() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    type Accepts = fn(&str) -> bool;
    let parsers: [(&str, Accepts); 7] = [
        ("parse_image", |t| parse_image(t).is_ok()),
        ("parse_bank", |t| parse_bank(t).is_ok()),
        ("parse_model", |t| parse_model(t).is_ok()),
        ("parse_net", |t| parse_net(t).is_ok()),
        ("parse_train_config", |t| parse_train_config(t).is_ok()),
        ("parse_split", |t| parse_split(t).is_ok()),
        ("parse_dataset_manifest", |t| parse_dataset_manifest(t).is_ok()),
    ];
    for (name, parse) in parsers {
        let mut seen = 0;
        for entry in std::fs::read_dir(root.join(name)).unwrap() {
            let path = entry.unwrap().path();
            let text = std::fs::read_to_string(&path).unwrap();
            assert!(parse(&text), "{} does not parse", path.display());
            parse_all(&text);
            seen += 1;
        }
        assert!(seen > 0, "no seeds for {name}");
    }
}
