use ddlab::{parse_config, parse_config_as, ConfigErrorKind, Value};

const RECIPES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/recipes");

fn recipe(name: &str) -> String {
    std::fs::read_to_string(format!("{RECIPES}/{name}")).unwrap()
}

#[test]
fn minimal_map_config_fills_defaults() {
    let cfg = parse_config("kind = map-iterate\n[params]\na = 1.3\nn_iter = 10\n").unwrap();
    assert_eq!(cfg.kind, "map-iterate");
    assert_eq!(cfg.seed, 1);
    let p = cfg.params();
    assert_eq!(p.f64("a"), 1.3);
    assert_eq!(p.usize("n_iter"), 10);
    assert_eq!(p.str("map"), "hat");
    assert_eq!(p.usize("cells"), 4096);
}

#[test]
fn type_mismatch_points_at_its_line() {
    let text = "kind = map-iterate\n\n[params]\nn_iter = 10\na = \"two\"\n";
    let errs = parse_config(text).unwrap_err();
    assert_eq!(errs.0.len(), 1, "{errs}");
    assert_eq!(errs.0[0].line, 5);
    assert_eq!(errs.0[0].kind, ConfigErrorKind::TypeMismatch);
    assert!(errs.to_string().contains("line 5"));
}

#[test]
fn every_problem_is_reported_at_once() {
    let text = "kind = map-iterate\n[params]\nn_iter = ten\nbogus = 1\nn_iter = 3\n[output]\nbins = 4\n";
    let errs = parse_config(text).unwrap_err();
    let kinds: Vec<_> = errs.0.iter().map(|e| (e.line, e.kind.clone())).collect();
    assert!(kinds.contains(&(3, ConfigErrorKind::TypeMismatch)), "{errs}");
    assert!(kinds.contains(&(4, ConfigErrorKind::UnknownKey)), "{errs}");
    assert!(kinds.contains(&(5, ConfigErrorKind::Duplicate)), "{errs}");
    assert!(kinds.contains(&(7, ConfigErrorKind::UnknownKey)), "{errs}");
    assert!(errs.0.iter().any(|e| e.kind == ConfigErrorKind::MissingKey && e.message.contains("`a`")));
    assert!(errs.0.windows(2).all(|w| w[0].line <= w[1].line));
}

#[test]
fn strategy_member_decides_the_schema() {
    let ok = "kind = map-iterate\n[params]\nmap = keener\na = 0.5\nb = 0.567\nn_iter = 2\n";
    assert!(parse_config(ok).is_ok());
    // b belongs to keener, not hat
    let errs = parse_config("kind = map-iterate\n[params]\na = 2\nb = 1\nn_iter = 2\n").unwrap_err();
    assert_eq!(errs.0[0].kind, ConfigErrorKind::UnknownKey);
    let errs = parse_config("kind = map-iterate\n[params]\nmap = cubic\nn_iter = 2\n").unwrap_err();
    assert!(errs.to_string().contains("cubic"), "{errs}");
}

#[test]
fn kind_must_agree_with_the_command_line() {
    assert!(parse_config_as("[params]\na = 2\nn_iter = 2\n", Some("map-iterate")).is_ok());
    assert!(parse_config_as("kind = gaussian\n[params]\na = 2\nn_iter = 2\n", Some("map-iterate")).is_err());
    assert!(parse_config("[params]\na = 2\n").is_err());
}

#[test]
fn uniform_ensemble_recipe_reads_back() {
    let cfg = parse_config(&recipe("hat-dde-uniform.conf")).unwrap();
    assert_eq!(cfg.kind, "dde-ensemble");
    let p = cfg.params();
    assert_eq!((p.str("system"), p.f64("alpha"), p.f64("a"), p.f64("tau")), ("hat", 13.0, 10.0, 1.0));
    let e = cfg.ensemble();
    assert_eq!(e.str("spec"), "uniform");
    assert_eq!(e.usize("n"), 22500);
    assert_eq!((e.f64s("lo"), e.f64s("hi")), (&[0.65][..], &[0.75][..]));
    let o = cfg.output();
    assert_eq!((o.f64("snapshot_start"), o.f64("snapshot_end")), (400.0, 402.9));
}

#[test]
fn mixture_recipe_reads_back() {
    let cfg = parse_config(&recipe("hat-dde-mixture.conf")).unwrap();
    let e = cfg.ensemble();
    assert_eq!(e.f64s("lo"), [0.65, 0.35]);
    assert_eq!(e.f64s("hi"), [0.75, 0.45]);
    assert_eq!(e.usizes("counts"), [17000, 5500]);
}

#[test]
fn every_recipe_parses_and_normalizes_stably() {
    for entry in std::fs::read_dir(RECIPES).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg = parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = parse_config(&cfg.normalized()).unwrap();
        assert_eq!(again, cfg, "{}", path.display());
        assert_eq!(again.normalized(), cfg.normalized());
    }
}

#[test]
fn values_print_back_to_themselves() {
    let cfg = parse_config(
        "kind = kicked\n[params]\ntaus = [0.2, 0.1, 0.05]\nobservable = identity\nmembers = 7\n",
    )
    .unwrap();
    assert_eq!(cfg.params().get("taus"), Some(&Value::FloatList(vec![0.2, 0.1, 0.05])));
    assert_eq!(Value::Float(0.1).to_string(), "0.1");
    assert_eq!(Value::Str("two words".into()).to_string(), "\"two words\"");
}
