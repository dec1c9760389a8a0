use fdmac::analysis::{normalized_throughput, Backend, QuadratureOptions};
use fdmac::model::NetworkConfig;
use fdmac::{sim, Scenario};

fn small() -> NetworkConfig<f64> {
    let mut cfg = NetworkConfig::<f64>::reference();
    cfg.num_su_pairs = 1;
    cfg.mac.contention_window = 64;
    cfg.mac.max_contention_window = 64;
    cfg.mac.fragments_per_packet = 2;
    cfg
}

#[test]
fn scenario_round_trips_through_toml() {
    let mut s = Scenario::parse("tx_power = \"12 dB\"\n[mac]\nfragments_per_packet = 3\n").unwrap();
    s.seed = 9;
    let text = s.to_toml();
    let back = Scenario::parse(&text).unwrap();
    // Exact at printed precision; durations are written in ms.
    assert_eq!(back.to_toml(), text);
    assert_eq!(back.seed, 9);
    assert_eq!(back.network.mac.fragments_per_packet, 3);
}

#[test]
fn backends_agree_on_small_network() {
    let cfg = small();
    let q = normalized_throughput(&cfg, &Backend::Quadrature(QuadratureOptions::default())).unwrap();
    let mc = normalized_throughput(&cfg, &Backend::MonteCarlo { samples: 200_000, seed: 4 }).unwrap();
    let se = mc.standard_error.unwrap();
    let d = (q.normalized_throughput - mc.normalized_throughput).abs();
    assert!(d <= 4.0 * se + 1e-12, "quadrature {} mc {} se {se}", q.normalized_throughput, mc.normalized_throughput);
}

#[test]
fn single_pair_simulation_tracks_analysis() {
    // With one SU pair there are no collisions, so the two should be close.
    let cfg = small();
    let q = normalized_throughput(&cfg, &Backend::Quadrature(QuadratureOptions::default())).unwrap();
    let cal = cfg.calibrate().unwrap();
    let runs = sim::replicate(4, 11, |s| sim::run_fd(&cfg, &cal, 2_000.0, s)).unwrap();
    let (nt, se) = sim::summarize(&runs);
    let rel = (nt - q.normalized_throughput) / q.normalized_throughput;
    assert!(rel.abs() < 0.03 || (nt - q.normalized_throughput).abs() < 3.0 * se, "sim {nt} analysis {}", q.normalized_throughput);
}
