use std::path::PathBuf;

use fso_relay::power_alloc::Scheme;
use fso_relay::protocols::Protocol;
use fso_relay_cli::{load_scenario, Scenario, ThresholdPolicy};

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

const MINIMAL: &str = r#"
name = "minimal"

[optical]
wavelength_nm = 1550.0

[weather]
attenuation_per_km = 0.1
cn2 = 2e-14

[geometry]
rx_aperture_m = 0.2
tx_aperture_m = 0.2
divergence_mrad = 2.0

[relays]
d_sr_km = [2.0, 2.0]
d_rd_km = [2.0, 2.0]

[analysis]
protocols = ["select_max"]
allocation = "distance_rule"

[sweep]
pm_start_db = 30.0
pm_stop_db = 40.0
pm_step_db = 2.5
"#;

#[test]
fn shipped_scenarios_load() {
    let s = load_scenario(&shipped("fig3_config2.toml")).unwrap();
    assert_eq!(s.d_sr_km, vec![2.0, 1.5, 1.0]);
    assert_eq!(s.d_rd_km, vec![1.0, 2.5, 3.0]);
    assert_eq!(s.protocols, Protocol::ALL.to_vec());
    assert_eq!(s.allocation, Scheme::Equal);
    assert_eq!(s.threshold, ThresholdPolicy::Optimal);
    assert_eq!(s.grid_db().len(), 31);
    let mc = s.monte_carlo.unwrap();
    assert_eq!((mc.n_slots, mc.seed), (1_000_000, 20_120_901));
    for name in ["fig2_sym_2km.toml", "fig3_config1.toml"] {
        load_scenario(&shipped(name)).unwrap();
    }
}

#[test]
fn minimal_scenario_defaults() {
    let s = Scenario::from_toml(MINIMAL).unwrap();
    assert_eq!(s.grid_db(), vec![30.0, 32.5, 35.0, 37.5, 40.0]);
    assert!(s.monte_carlo.is_none());
    assert!(s.optical.is_none());
    assert!((s.wavelength_m - 1550e-9).abs() < 1e-18);
    let cfg = s.config(Protocol::SelectMax, 1e4).unwrap();
    assert!(cfg.sr().iter().all(|l| (l.rho - 0.5).abs() < 1e-15));
}

#[test]
fn missing_divergence_is_an_error() {
    let text = MINIMAL.replace("divergence_mrad = 2.0\n", "");
    let err = Scenario::from_toml(&text).unwrap_err();
    assert!(format!("{err:#}").contains("divergence_mrad"), "{err:#}");
}

#[test]
fn malformed_scenarios_are_rejected() {
    let cases = [
        MINIMAL.replace("d_rd_km = [2.0, 2.0]", "d_rd_km = [2.0]"),
        MINIMAL.replace("pm_step_db = 2.5", "pm_step_db = 0.0"),
        MINIMAL.replace("\"select_max\"", "\"best_effort\""),
        MINIMAL.replace("cn2 = 2e-14", "cn2 = -1.0"),
        MINIMAL.replace("[sweep]", "[sweep]\nunknown_key = 1"),
        format!("{MINIMAL}\n[dssc]\nthreshold = \"fixed\"\n"),
    ];
    for text in cases {
        assert!(Scenario::from_toml(&text).is_err(), "accepted:\n{text}");
    }
}

#[test]
fn relay_count_override() {
    let s = Scenario::from_toml(MINIMAL).unwrap();
    let four = s.with_relays(4).unwrap();
    assert_eq!(four.d_sr_km, vec![2.0; 4]);
    let c2 = load_scenario(&shipped("fig3_config2.toml")).unwrap();
    let two = c2.with_relays(2).unwrap();
    assert_eq!(two.d_sr_km, vec![2.0, 1.5]);
    assert_eq!(two.d_rd_km, vec![1.0, 2.5]);
    assert!(c2.with_relays(0).is_err());
}
