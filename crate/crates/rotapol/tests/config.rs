use rotapol::config::{InitialState, ModelKind, ScenarioConfig};
use rotapol::{CliError, Scenario};

fn parse(text: &str) -> Result<ScenarioConfig, CliError> {
    ScenarioConfig::from_json(text)
}

fn config_error(text: &str) -> String {
    match parse(text) {
        Err(CliError::Config(msg)) => msg,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn preset_fills_medium_and_geometry() {
    let cfg = parse(r#"{ "preset": "p0" }"#).unwrap();
    let (m, g) = cfg.medium_geometry().unwrap();
    assert_eq!(g.nu, 628.3);
    assert_eq!(m.speed_of_light, 3e8);
}

#[test]
fn user_keys_override_the_preset_one_by_one() {
    let cfg = parse(r#"{ "preset": "p0", "geometry": { "nu": 100.0 }, "medium": { "gamma": 2.0 } }"#).unwrap();
    let (base_m, base_g) = parse(r#"{ "preset": "p0" }"#).unwrap().medium_geometry().unwrap();
    let (m, g) = cfg.medium_geometry().unwrap();
    assert_eq!(g.nu, 100.0);
    assert_eq!(g.radius, base_g.radius);
    assert_eq!(m.gamma, 2.0);
    assert_eq!(m.coupling_gsqrt_n, base_m.coupling_gsqrt_n);
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(config_error(r#"{ "preset": "p0", "medium": { "gama": 1.0 } }"#).contains("gama"));
    assert!(config_error(r#"{ "preset": "p0", "numerics": { "grids": 64 } }"#).contains("grids"));
    assert!(config_error(r#"{ "preset": "p0", "extra": 1 }"#).contains("extra"));
    config_error(r#"{ "preset": "p1" }"#);
}

#[test]
fn malformed_documents_are_config_errors() {
    config_error("{ not json");
    config_error("[1, 2]");
}

#[test]
fn missing_blocks_are_reported() {
    let cfg = parse("{}").unwrap();
    assert!(matches!(cfg.medium_geometry(), Err(CliError::Config(_))));
    assert!(matches!(cfg.initial(), Err(CliError::Config(_))));
    assert!(matches!(cfg.t_final(), Err(CliError::Config(_))));
}

#[test]
fn scenario_cross_check() {
    let cfg = parse(r#"{ "scenario": "scan" }"#).unwrap();
    assert!(cfg.check_scenario(Scenario::Scan).is_ok());
    assert!(matches!(cfg.check_scenario(Scenario::Landau), Err(CliError::Config(_))));
    let cfg = parse(r#"{ "scenario": "rotate-image" }"#).unwrap();
    assert!(cfg.check_scenario(Scenario::RotateImage).is_ok());
    let cfg = parse(r#"{ "scenario": "spin" }"#).unwrap();
    assert!(matches!(cfg.check_scenario(Scenario::Scan), Err(CliError::Config(_))));
}

#[test]
fn scenario_names_round_trip() {
    for s in Scenario::ALL {
        assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
    }
}

#[test]
fn grid_and_extent_accept_scalars_or_pairs() {
    let cfg = parse(r#"{ "numerics": { "grid": [64, 32], "extent": 20 } }"#).unwrap();
    assert_eq!(cfg.numerics.grid.unwrap().get(), (64, 32));
    assert_eq!(cfg.numerics.extent.unwrap().get(), (20.0, 20.0));
}

#[test]
fn initial_states_are_tagged() {
    let cfg = parse(r#"{ "initial": { "kind": "landau_vortex", "m": -2 } }"#).unwrap();
    assert!(matches!(cfg.initial().unwrap(), InitialState::LandauVortex { m: -2 }));
    config_error(r#"{ "initial": { "kind": "landau_vortex", "m": -2, "width": 1 } }"#);
    config_error(r#"{ "initial": { "kind": "plane_wave" } }"#);
}

#[test]
fn defaults() {
    let cfg = parse("{}").unwrap();
    assert_eq!(cfg.model.kind, ModelKind::Effective);
    assert!(cfg.model.rot_loss_mass_correction);
    assert!(cfg.output.csv && cfg.output.json && !cfg.output.snapshots);
    assert_eq!(cfg.numerics.sample_every, 20);
    assert_eq!(cfg.spectrum.k, 48);
}

#[test]
fn shipped_configs_parse_and_name_their_scenario() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let (cfg, _) = ScenarioConfig::load(&path).unwrap();
            let name = cfg.scenario.clone().expect("shipped configs name their scenario");
            cfg.check_scenario(name.parse().unwrap()).unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 7);
}
