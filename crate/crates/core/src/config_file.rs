//! Scenario files: TOML whose keys mirror the [`NetworkConfig`] field names.
//!
//! Keys may sit at top level or inside any table (`[pu]`, `[mac]`, ...);
//! only the leaf name matters. Durations and powers carry mandatory units:
//!
//! ```toml
//! num_su_pairs = 40
//! [pu]
//! mean_idle = "1000 ms"
//! [radio]
//! tx_power = "15 dB"
//! pu_received_power = "-20dB"
//! sampling_frequency = "6 MHz"
//! ```
//!
//! Unset keys keep the reference scenario's value.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::nested::QuadratureOptions;
use crate::analysis::Backend;
use crate::error::{ConfigIssue, Error, Result};
use crate::model::{db_to_linear, linear_to_db, FragmentCredit, NetworkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Duration,
    Power,
    Frequency,
    Real,
    Count,
    Flag,
    FragmentCredit,
    Backend,
}

impl Kind {
    fn hint(self) -> &'static str {
        match self {
            Kind::Duration => "a duration with unit s, ms or us, e.g. \"18 ms\"",
            Kind::Power => "a power with unit dB or lin, e.g. \"15 dB\"",
            Kind::Frequency => "a frequency with unit Hz, kHz or MHz",
            Kind::Real => "a plain number",
            Kind::Count => "a nonnegative integer",
            Kind::Flag => "true or false",
            Kind::FragmentCredit => "on_transmission or on_idle_verdict",
            Kind::Backend => "montecarlo or quadrature",
        }
    }
}

/// Every recognised key, in the canonical column order.
pub const KEYS: &[(&str, Kind)] = &[
    ("num_su_pairs", Kind::Count),
    ("mean_idle", Kind::Duration),
    ("mean_active", Kind::Duration),
    ("min_idle", Kind::Duration),
    ("min_active", Kind::Duration),
    ("evacuation_time", Kind::Duration),
    ("mini_slot", Kind::Duration),
    ("sifs", Kind::Duration),
    ("difs", Kind::Duration),
    ("rts", Kind::Duration),
    ("cts", Kind::Duration),
    ("contention_window", Kind::Count),
    ("max_contention_window", Kind::Count),
    ("fragments_per_packet", Kind::Count),
    ("fragment_time", Kind::Duration),
    ("tx_power", Kind::Power),
    ("max_tx_power", Kind::Power),
    ("noise_power", Kind::Power),
    ("pu_received_power", Kind::Power),
    ("si_scale", Kind::Real),
    ("si_exponent", Kind::Real),
    ("sampling_frequency", Kind::Frequency),
    ("target_detection_prob", Kind::Real),
    ("prob_idle_uses_shift", Kind::Flag),
    ("receiver_self_interference", Kind::Flag),
    ("count_first_fragment", Kind::Flag),
    ("fragment_credit", Kind::FragmentCredit),
    ("integration_backend", Kind::Backend),
    ("mc_samples", Kind::Count),
    ("quadrature_nodes", Kind::Count),
    ("quadrature_subdivisions", Kind::Count),
    ("seed", Kind::Count),
];

pub fn kind_of(key: &str) -> Option<Kind> {
    KEYS.iter().find(|(k, _)| *k == key).map(|&(_, kind)| kind)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    MonteCarlo,
    Quadrature,
}

/// A network configuration plus the analysis settings that travel with it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub network: NetworkConfig<f64>,
    pub backend_kind: BackendKind,
    pub mc_samples: usize,
    pub quadrature: QuadratureOptions,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            network: NetworkConfig::reference(),
            backend_kind: BackendKind::MonteCarlo,
            mc_samples: 200_000,
            quadrature: QuadratureOptions::default(),
            seed: 1,
        }
    }
}

impl Scenario {
    pub fn backend(&self) -> Backend {
        match self.backend_kind {
            BackendKind::MonteCarlo => Backend::MonteCarlo {
                samples: self.mc_samples,
                seed: self.seed,
            },
            BackendKind::Quadrature => Backend::Quadrature(self.quadrature),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Parses a scenario and validates it, reporting every bad key and every
    /// violated constraint together.
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        let mut leaves = Vec::new();
        flatten(&table, "", &mut leaves);
        let mut scenario = Self::default();
        let mut issues = Vec::new();
        let mut seen: Vec<&str> = Vec::new();
        for (path, key, value) in &leaves {
            if seen.contains(&key.as_str()) {
                issues.push(ConfigIssue {
                    key: path.clone(),
                    message: "set more than once".into(),
                });
                continue;
            }
            seen.push(key);
            let raw = match value {
                toml::Value::String(s) => s.clone(),
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => f.to_string(),
                toml::Value::Boolean(b) => b.to_string(),
                other => {
                    issues.push(ConfigIssue {
                        key: path.clone(),
                        message: format!("unsupported value {other}"),
                    });
                    continue;
                }
            };
            if let Err(message) = scenario.set(key, &raw) {
                issues.push(ConfigIssue {
                    key: path.clone(),
                    message,
                });
            }
        }
        issues.extend(scenario.violations());
        if issues.is_empty() {
            Ok(scenario)
        } else {
            Err(Error::Config(issues))
        }
    }

    pub fn violations(&self) -> Vec<ConfigIssue> {
        let mut v: Vec<ConfigIssue> = self
            .network
            .violations()
            .into_iter()
            .map(|v| ConfigIssue {
                key: v.field.to_string(),
                message: v.message,
            })
            .collect();
        if self.mc_samples == 0 {
            v.push(ConfigIssue {
                key: "mc_samples".into(),
                message: "must be at least 1".into(),
            });
        }
        if self.quadrature.nodes < 2 || self.quadrature.subdivisions < 1 {
            v.push(ConfigIssue {
                key: "quadrature_nodes".into(),
                message: "need at least 2 nodes and 1 subdivision".into(),
            });
        }
        v
    }

    /// Sets one key from its textual form (units included where required).
    pub fn set(&mut self, key: &str, raw: &str) -> std::result::Result<(), String> {
        let kind = kind_of(key).ok_or_else(|| "unknown key".to_string())?;
        let raw = raw.trim();
        let bad = || format!("expected {}, got {raw:?}", kind.hint());
        let n = &mut self.network;
        match kind {
            Kind::Duration => {
                let v = parse_duration(raw).ok_or_else(bad)?;
                *duration_field(n, key) = v;
            }
            Kind::Power => {
                let v = parse_power(raw).ok_or_else(bad)?;
                let r = &mut n.radio;
                match key {
                    "tx_power" => r.tx_power = v,
                    "max_tx_power" => r.max_tx_power = v,
                    "noise_power" => r.noise_power = v,
                    _ => r.pu_received_power = v,
                }
            }
            Kind::Frequency => {
                n.radio.sampling_frequency =
                    parse_with_unit(raw, &[("MHz", 1e6), ("kHz", 1e3), ("Hz", 1.0)]).ok_or_else(bad)?;
            }
            Kind::Real => {
                let v: f64 = raw.parse().map_err(|_| bad())?;
                match key {
                    "si_scale" => n.radio.si_scale = v,
                    "si_exponent" => n.radio.si_exponent = v,
                    _ => n.target_detection_prob = v,
                }
            }
            Kind::Count => {
                let v: u64 = raw.parse().map_err(|_| bad())?;
                let u = usize::try_from(v).map_err(|_| bad())?;
                match key {
                    "num_su_pairs" => n.num_su_pairs = u,
                    "contention_window" => n.mac.contention_window = u,
                    "max_contention_window" => n.mac.max_contention_window = u,
                    "fragments_per_packet" => n.mac.fragments_per_packet = u,
                    "mc_samples" => self.mc_samples = u,
                    "quadrature_nodes" => self.quadrature.nodes = u,
                    "quadrature_subdivisions" => self.quadrature.subdivisions = u,
                    _ => self.seed = v,
                }
            }
            Kind::Flag => {
                let v: bool = raw.parse().map_err(|_| bad())?;
                let o = &mut n.options;
                match key {
                    "prob_idle_uses_shift" => o.prob_idle_uses_shift = v,
                    "receiver_self_interference" => o.receiver_self_interference = v,
                    _ => o.count_first_fragment = v,
                }
            }
            Kind::FragmentCredit => {
                n.options.fragment_credit = match raw {
                    "on_transmission" => FragmentCredit::OnTransmission,
                    "on_idle_verdict" => FragmentCredit::OnIdleVerdict,
                    _ => return Err(bad()),
                };
            }
            Kind::Backend => {
                self.backend_kind = match raw {
                    "montecarlo" => BackendKind::MonteCarlo,
                    "quadrature" => BackendKind::Quadrature,
                    _ => return Err(bad()),
                };
            }
        }
        Ok(())
    }

    /// Every effective parameter as `(column, value)`, in [`KEYS`] order.
    /// Durations are reported in ms, powers in dB and frequencies in Hz.
    pub fn columns(&self) -> Vec<(String, String)> {
        KEYS.iter()
            .map(|&(key, kind)| {
                let name = match kind {
                    Kind::Duration => format!("{key}_ms"),
                    Kind::Power => format!("{key}_db"),
                    Kind::Frequency => format!("{key}_hz"),
                    _ => key.to_string(),
                };
                (name, self.value_text(key, kind))
            })
            .collect()
    }

    fn value_text(&self, key: &str, kind: Kind) -> String {
        let n = &self.network;
        match kind {
            Kind::Duration => {
                let mut copy = *n;
                fmt_num(*duration_field(&mut copy, key) * 1e3)
            }
            Kind::Power => fmt_num(linear_to_db(match key {
                "tx_power" => n.radio.tx_power,
                "max_tx_power" => n.radio.max_tx_power,
                "noise_power" => n.radio.noise_power,
                _ => n.radio.pu_received_power,
            })),
            Kind::Frequency => fmt_num(n.radio.sampling_frequency),
            Kind::Real => fmt_num(match key {
                "si_scale" => n.radio.si_scale,
                "si_exponent" => n.radio.si_exponent,
                _ => n.target_detection_prob,
            }),
            Kind::Count => match key {
                "num_su_pairs" => n.num_su_pairs.to_string(),
                "contention_window" => n.mac.contention_window.to_string(),
                "max_contention_window" => n.mac.max_contention_window.to_string(),
                "fragments_per_packet" => n.mac.fragments_per_packet.to_string(),
                "mc_samples" => self.mc_samples.to_string(),
                "quadrature_nodes" => self.quadrature.nodes.to_string(),
                "quadrature_subdivisions" => self.quadrature.subdivisions.to_string(),
                _ => self.seed.to_string(),
            },
            Kind::Flag => match key {
                "prob_idle_uses_shift" => n.options.prob_idle_uses_shift,
                "receiver_self_interference" => n.options.receiver_self_interference,
                _ => n.options.count_first_fragment,
            }
            .to_string(),
            Kind::FragmentCredit => match n.options.fragment_credit {
                FragmentCredit::OnTransmission => "on_transmission".into(),
                FragmentCredit::OnIdleVerdict => "on_idle_verdict".into(),
            },
            Kind::Backend => match self.backend_kind {
                BackendKind::MonteCarlo => "montecarlo".into(),
                BackendKind::Quadrature => "quadrature".into(),
            },
        }
    }

    /// The scenario as a file that [`Scenario::parse`] reads back unchanged.
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        for &(key, kind) in KEYS {
            let v = self.value_text(key, kind);
            let _ = match kind {
                Kind::Duration => writeln!(out, "{key} = \"{v} ms\""),
                Kind::Power => writeln!(out, "{key} = \"{v} dB\""),
                Kind::Frequency => writeln!(out, "{key} = \"{v} Hz\""),
                Kind::FragmentCredit | Kind::Backend => writeln!(out, "{key} = \"{v}\""),
                _ => writeln!(out, "{key} = {v}"),
            };
        }
        out
    }
}

/// Decimal form rounded to 12 significant digits, which hides binary
/// representation noise such as `0.019999999999999997`.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() || x == 0.0 {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{rounded}")
}

fn duration_field<'a>(n: &'a mut NetworkConfig<f64>, key: &str) -> &'a mut f64 {
    match key {
        "mean_idle" => &mut n.pu.mean_idle,
        "mean_active" => &mut n.pu.mean_active,
        "min_idle" => &mut n.pu.min_idle,
        "min_active" => &mut n.pu.min_active,
        "evacuation_time" => &mut n.pu.evacuation_time,
        "mini_slot" => &mut n.mac.mini_slot,
        "sifs" => &mut n.mac.sifs,
        "difs" => &mut n.mac.difs,
        "rts" => &mut n.mac.rts,
        "cts" => &mut n.mac.cts,
        _ => &mut n.mac.fragment_time,
    }
}

fn flatten(table: &toml::Table, prefix: &str, out: &mut Vec<(String, String, toml::Value)>) {
    for (k, v) in table {
        let path = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(t, &path, out),
            _ => out.push((path, k.clone(), v.clone())),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// `"<number> <unit>"`, with or without the space. The unit is mandatory.
fn parse_with_unit(raw: &str, units: &[(&str, f64)]) -> Option<f64> {
    units.iter().find_map(|&(unit, scale)| {
        let num = raw.strip_suffix(unit)?.trim_end();
        let v: f64 = num.parse().ok()?;
        v.is_finite().then_some(v * scale)
    })
}

/// A duration such as `"18 ms"`, `"20us"` or `"1.5 s"`, in seconds.
pub fn parse_duration(raw: &str) -> Option<f64> {
    parse_with_unit(raw.trim(), &[("ms", 1e-3), ("us", 1e-6), ("µs", 1e-6), ("s", 1.0)])
}

/// A power such as `"15 dB"` or `"31.6 lin"`, as a linear value.
pub fn parse_power(raw: &str) -> Option<f64> {
    let raw = raw.trim();
    if let Some(db) = parse_with_unit(raw, &[("dB", 1.0)]) {
        return Some(db_to_linear(db));
    }
    parse_with_unit(raw, &[("lin", 1.0)])
}
