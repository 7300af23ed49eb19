//! Configuration schema shared by the analytical model and the simulator.
//!
//! All buffer quantities are held in packets. Documents may give them either
//! in bits (`*_bits`, floored to whole packets at load time) or directly in
//! packets (`*_pkts`), but never both.

use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse config document: {0}")]
    Parse(String),
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("key `{0}` is given both in bits and in packets")]
    AmbiguousKey(String),
    #[error("key `{key}` has invalid value {value}: {reason}")]
    UnitViolation {
        key: String,
        value: f64,
        reason: &'static str,
    },
    #[error("ordering violated: {0}")]
    OrderingViolation(String),
}

/// Power drawn in each ONU mode, in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerProfile {
    pub p_on: f64,
    pub p_dz: f64,
    pub p_fs: f64,
    pub p_ds: f64,
}

/// Sleep-to-wake-up latencies and protocol timings, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingProfile {
    pub t_sw_ds: f64,
    pub t_sw_fs: f64,
    pub t_sw_dz: f64,
    /// Spacing of decision instants while asleep.
    pub t_m: f64,
    pub t_report: f64,
    pub t_guard: f64,
}

/// Per-ONU buffer and traffic parameters. Every ONU shares one of these.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnuConfig {
    /// Buffer threshold used for fill-up predictions.
    pub n_th: u32,
    /// Physical buffer size.
    pub n_sz: u32,
    /// Fixed grant per cycle.
    pub n_m: u32,
    /// Mean arrival rate in packets per second.
    pub lambda: f64,
    pub packet_bits: f64,
    /// Arrival rate that corresponds to load 1.0, in bits per second.
    pub max_rate_bps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    pub n_onus: u32,
    /// Upstream feeder rate in bits per second.
    pub link_rate: f64,
    pub onu: OnuConfig,
    pub power: PowerProfile,
    pub timing: TimingProfile,
}

/// Whole packets contained in `bits`.
pub fn packets_from_bits(bits: f64, packet_bits: f64) -> u32 {
    (bits / packet_bits).floor() as u32
}

/// Polling cycle length under fixed grants: one slot of data, REPORT and
/// guard per ONU.
pub fn cycle_time(cfg: &NetworkConfig) -> f64 {
    f64::from(cfg.n_onus) * cfg.slot_time()
}

impl NetworkConfig {
    /// The reference parameter set: 16 ONUs on a 1 Gb/s feeder, 1500 B
    /// packets, 0.48 Mb threshold, 1.2 Mb buffer, 60 kb grants, load 0.5.
    pub fn reference() -> Self {
        let packet_bits = 12_000.0;
        let mut cfg = NetworkConfig {
            n_onus: 16,
            link_rate: 1e9,
            onu: OnuConfig {
                n_th: packets_from_bits(0.48e6, packet_bits),
                n_sz: packets_from_bits(1.2e6, packet_bits),
                n_m: packets_from_bits(60e3, packet_bits),
                lambda: 0.0,
                packet_bits,
                max_rate_bps: 100e6,
            },
            power: PowerProfile {
                p_on: 3.984,
                p_dz: 2.39,
                p_fs: 1.28,
                p_ds: 0.75,
            },
            timing: TimingProfile {
                t_sw_ds: 5.125e-3,
                t_sw_fs: 125e-6,
                t_sw_dz: 1e-6,
                t_m: 0.5e-3,
                t_report: 0.512e-6,
                t_guard: 1e-6,
            },
        };
        cfg.set_load(0.5);
        cfg
    }

    /// Duration of one ONU's fixed slot: full grant, REPORT and guard.
    pub fn slot_time(&self) -> f64 {
        f64::from(self.onu.n_m) * self.packet_tx_time() + self.timing.t_report + self.timing.t_guard
    }

    pub fn packet_tx_time(&self) -> f64 {
        self.onu.packet_bits / self.link_rate
    }

    /// Offered load relative to `max_rate_bps`.
    pub fn load(&self) -> f64 {
        self.onu.lambda * self.onu.packet_bits / self.onu.max_rate_bps
    }

    pub fn set_load(&mut self, load: f64) {
        self.onu.lambda = load * self.onu.max_rate_bps / self.onu.packet_bits;
    }

    pub fn with_load(mut self, load: f64) -> Self {
        self.set_load(load);
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("network.n_onus", f64::from(self.n_onus))?;
        positive("network.link_rate_bps", self.link_rate)?;
        non_negative("onu.lambda_pps", self.onu.lambda)?;
        positive("onu.packet_bytes", self.onu.packet_bits)?;
        positive("onu.max_rate_bps", self.onu.max_rate_bps)?;
        positive("onu.n_th", f64::from(self.onu.n_th))?;
        positive("onu.n_m", f64::from(self.onu.n_m))?;
        if self.onu.n_th > self.onu.n_sz {
            return Err(ConfigError::OrderingViolation(format!(
                "n_th ({}) must not exceed n_sz ({})",
                self.onu.n_th, self.onu.n_sz
            )));
        }

        let p = &self.power;
        for (key, v) in [
            ("power.on_w", p.p_on),
            ("power.dz_w", p.p_dz),
            ("power.fs_w", p.p_fs),
            ("power.ds_w", p.p_ds),
        ] {
            positive(key, v)?;
        }
        if !(p.p_on > p.p_dz && p.p_dz > p.p_fs && p.p_fs > p.p_ds) {
            return Err(ConfigError::OrderingViolation(format!(
                "powers must satisfy on > dz > fs > ds, got {} / {} / {} / {}",
                p.p_on, p.p_dz, p.p_fs, p.p_ds
            )));
        }

        let t = &self.timing;
        for (key, v) in [
            ("timing.t_sw_ds_s", t.t_sw_ds),
            ("timing.t_sw_fs_s", t.t_sw_fs),
            ("timing.t_sw_dz_s", t.t_sw_dz),
            ("timing.t_m_s", t.t_m),
        ] {
            positive(key, v)?;
        }
        non_negative("timing.t_report_s", t.t_report)?;
        non_negative("timing.t_guard_s", t.t_guard)?;
        if !(t.t_sw_ds > t.t_sw_fs && t.t_sw_fs > t.t_sw_dz) {
            return Err(ConfigError::OrderingViolation(format!(
                "wake-up times must satisfy ds > fs > dz, got {} / {} / {}",
                t.t_sw_ds, t.t_sw_fs, t.t_sw_dz
            )));
        }
        Ok(())
    }

    /// Renders the config as a document accepted by [`load_config`]. Buffer
    /// quantities are written in packets.
    pub fn to_toml(&self) -> String {
        let mut network = Table::new();
        network.insert("n_onus".into(), Value::Integer(i64::from(self.n_onus)));
        network.insert("link_rate_bps".into(), Value::Float(self.link_rate));

        let mut onu = Table::new();
        onu.insert("lambda_pps".into(), Value::Float(self.onu.lambda));
        onu.insert(
            "packet_bytes".into(),
            Value::Float(self.onu.packet_bits / 8.0),
        );
        onu.insert("max_rate_bps".into(), Value::Float(self.onu.max_rate_bps));
        onu.insert("n_th_pkts".into(), Value::Integer(i64::from(self.onu.n_th)));
        onu.insert("n_sz_pkts".into(), Value::Integer(i64::from(self.onu.n_sz)));
        onu.insert("n_m_pkts".into(), Value::Integer(i64::from(self.onu.n_m)));

        let mut power = Table::new();
        power.insert("on_w".into(), Value::Float(self.power.p_on));
        power.insert("dz_w".into(), Value::Float(self.power.p_dz));
        power.insert("fs_w".into(), Value::Float(self.power.p_fs));
        power.insert("ds_w".into(), Value::Float(self.power.p_ds));

        let t = &self.timing;
        let mut timing = Table::new();
        for (k, v) in [
            ("t_sw_ds_s", t.t_sw_ds),
            ("t_sw_fs_s", t.t_sw_fs),
            ("t_sw_dz_s", t.t_sw_dz),
            ("t_m_s", t.t_m),
            ("t_report_s", t.t_report),
            ("t_guard_s", t.t_guard),
        ] {
            timing.insert(k.into(), Value::Float(v));
        }

        let mut doc = Table::new();
        doc.insert("network".into(), Value::Table(network));
        doc.insert("onu".into(), Value::Table(onu));
        doc.insert("power".into(), Value::Table(power));
        doc.insert("timing".into(), Value::Table(timing));
        toml::to_string(&doc).expect("config tables always serialize")
    }
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::UnitViolation {
            key: key.to_string(),
            value: v,
            reason: "must be positive",
        })
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::UnitViolation {
            key: key.to_string(),
            value: v,
            reason: "must be non-negative",
        })
    }
}

struct Doc<'a>(&'a Table);

impl Doc<'_> {
    fn lookup(&self, dotted: &str) -> Option<&Value> {
        let (section, key) = dotted.split_once('.')?;
        self.0.get(section)?.as_table()?.get(key)
    }

    fn number(&self, dotted: &str) -> Result<Option<f64>, ConfigError> {
        match self.lookup(dotted) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(other) => Err(ConfigError::Parse(format!(
                "`{dotted}` must be a number, got {other}"
            ))),
        }
    }

    fn require(&self, dotted: &str) -> Result<f64, ConfigError> {
        self.number(dotted)?
            .ok_or_else(|| ConfigError::MissingKey(dotted.to_string()))
    }

    /// A buffer quantity given as exactly one of `<base>_bits` / `<base>_pkts`.
    fn packets(&self, base: &str, packet_bits: f64) -> Result<u32, ConfigError> {
        let bits_key = format!("{base}_bits");
        let pkts_key = format!("{base}_pkts");
        match (self.number(&bits_key)?, self.number(&pkts_key)?) {
            (Some(_), Some(_)) => Err(ConfigError::AmbiguousKey(base.to_string())),
            (None, None) => Err(ConfigError::MissingKey(format!("{base}_bits|{base}_pkts"))),
            (Some(bits), None) => {
                non_negative(&bits_key, bits)?;
                Ok(packets_from_bits(bits, packet_bits))
            }
            (None, Some(pkts)) => {
                non_negative(&pkts_key, pkts)?;
                if pkts.fract() != 0.0 {
                    return Err(ConfigError::UnitViolation {
                        key: pkts_key,
                        value: pkts,
                        reason: "must be a whole number of packets",
                    });
                }
                Ok(pkts as u32)
            }
        }
    }
}

/// Parses and validates a config document (TOML with `[network]`, `[onu]`,
/// `[power]` and `[timing]` sections).
pub fn load_config(text: &str) -> Result<NetworkConfig, ConfigError> {
    let table: Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let doc = Doc(&table);

    let n_onus = doc.require("network.n_onus")?;
    positive("network.n_onus", n_onus)?;
    let packet_bytes = doc.require("onu.packet_bytes")?;
    positive("onu.packet_bytes", packet_bytes)?;
    let packet_bits = packet_bytes * 8.0;

    let cfg = NetworkConfig {
        n_onus: n_onus as u32,
        link_rate: doc.require("network.link_rate_bps")?,
        onu: OnuConfig {
            n_th: doc.packets("onu.n_th", packet_bits)?,
            n_sz: doc.packets("onu.n_sz", packet_bits)?,
            n_m: doc.packets("onu.n_m", packet_bits)?,
            lambda: doc.require("onu.lambda_pps")?,
            packet_bits,
            max_rate_bps: doc.number("onu.max_rate_bps")?.unwrap_or(100e6),
        },
        power: PowerProfile {
            p_on: doc.require("power.on_w")?,
            p_dz: doc.require("power.dz_w")?,
            p_fs: doc.require("power.fs_w")?,
            p_ds: doc.require("power.ds_w")?,
        },
        timing: TimingProfile {
            t_sw_ds: doc.require("timing.t_sw_ds_s")?,
            t_sw_fs: doc.require("timing.t_sw_fs_s")?,
            t_sw_dz: doc.require("timing.t_sw_dz_s")?,
            t_m: doc.require("timing.t_m_s")?,
            t_report: doc.require("timing.t_report_s")?,
            t_guard: doc.require("timing.t_guard_s")?,
        },
    };
    cfg.validate()?;
    Ok(cfg)
}
