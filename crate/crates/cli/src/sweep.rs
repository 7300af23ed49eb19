//! Parameter sweeps and the two fixed −25% design studies.

use crate::experiments::{analyze, simulate, summarize, SimSettings};
use crate::{create_writer, CliError, Grid};
use osmp_core::sim::PredictorKind;
use osmp_core::NetworkConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const SCENARIOS: [&str; 4] = ["analytical", "osmp", "osmp-mean", "baseline-no-mda"];

/// A sweep document:
///
/// ```toml
/// axis = "power.dz"
/// values = [1.8, 2.39]
/// scenarios = ["analytical", "osmp"]
/// seeds = [1, 2]
/// loads = [0.2, 0.5]   # optional; the default grid otherwise
/// duration = 20.0      # optional
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: String,
    pub values: Vec<f64>,
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub loads: Option<Vec<f64>>,
    #[serde(default)]
    pub duration: Option<f64>,
}

fn default_scenarios() -> Vec<String> {
    vec!["analytical".into()]
}

fn default_seeds() -> Vec<u64> {
    Grid::default().seeds
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let spec: SweepSpec =
            toml::from_str(text).map_err(|e| CliError::Usage(format!("sweep spec: {e}")))?;
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<(), CliError> {
        if self.values.is_empty() {
            return Err(CliError::Usage("sweep spec: `values` is empty".into()));
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Usage(format!(
                "sweep spec: `values` must be strictly increasing: {:?}",
                self.values
            )));
        }
        if let Some(bad) = self
            .scenarios
            .iter()
            .find(|s| !SCENARIOS.contains(&s.as_str()))
        {
            return Err(CliError::Usage(format!(
                "sweep spec: unknown scenario `{bad}` (expected one of {SCENARIOS:?})"
            )));
        }
        apply_axis(&NetworkConfig::reference(), &self.axis, self.values[0])?;
        Ok(())
    }

    fn grid(&self) -> Grid {
        let d = Grid::default();
        Grid {
            loads: self.loads.clone().unwrap_or(d.loads),
            seeds: self.seeds.clone(),
            duration: self.duration.unwrap_or(d.duration),
        }
    }
}

fn whole(axis: &str, v: f64) -> Result<u32, CliError> {
    if v >= 1.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) {
        Ok(v as u32)
    } else {
        Err(CliError::Usage(format!(
            "axis `{axis}` needs a positive whole number, got {v}"
        )))
    }
}

/// `cfg` with one parameter replaced. Axis names follow the config
/// document; the unit suffix may be left off (`power.dz` = `power.dz_w`).
pub fn apply_axis(cfg: &NetworkConfig, axis: &str, v: f64) -> Result<NetworkConfig, CliError> {
    let mut c = *cfg;
    let key = axis
        .trim_end_matches("_w")
        .trim_end_matches("_s")
        .trim_end_matches("_pkts");
    match key {
        "load" => c.set_load(v),
        "n_onus" | "network.n_onus" => c.n_onus = whole(axis, v)?,
        "n_th" | "onu.n_th" => c.onu.n_th = whole(axis, v)?,
        "n_sz" | "onu.n_sz" => c.onu.n_sz = whole(axis, v)?,
        "n_m" | "onu.n_m" => c.onu.n_m = whole(axis, v)?,
        "power.on" => c.power.p_on = v,
        "power.dz" => c.power.p_dz = v,
        "power.fs" => c.power.p_fs = v,
        "power.ds" => c.power.p_ds = v,
        "timing.t_sw_ds" => c.timing.t_sw_ds = v,
        "timing.t_sw_fs" => c.timing.t_sw_fs = v,
        "timing.t_sw_dz" => c.timing.t_sw_dz = v,
        "timing.t_m" => c.timing.t_m = v,
        "timing.t_report" => c.timing.t_report = v,
        "timing.t_guard" => c.timing.t_guard = v,
        _ => return Err(CliError::Usage(format!("unknown sweep axis `{axis}`"))),
    }
    c.validate()?;
    Ok(c)
}

fn current(cfg: &NetworkConfig, axis: &str) -> f64 {
    match axis {
        "timing.t_sw_ds" => cfg.timing.t_sw_ds,
        "timing.t_sw_fs" => cfg.timing.t_sw_fs,
        "timing.t_sw_dz" => cfg.timing.t_sw_dz,
        "power.ds" => cfg.power.p_ds,
        "power.fs" => cfg.power.p_fs,
        "power.dz" => cfg.power.p_dz,
        _ => unreachable!("study axes are fixed"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub load: f64,
    pub eta: f64,
    pub eta_std: f64,
    pub mean_delay_s: Option<f64>,
    pub drop_prob: Option<f64>,
}

fn settings(name: &str) -> SimSettings {
    let d = SimSettings::default();
    match name {
        "osmp-mean" => SimSettings {
            predictor: PredictorKind::Mean,
            ..d
        },
        "baseline-no-mda" => SimSettings { mda: false, ..d },
        _ => d,
    }
}

fn scenario_rows(
    cfg: &NetworkConfig,
    spec: &SweepSpec,
    name: &str,
) -> Result<Vec<SweepRow>, CliError> {
    let grid = spec.grid();
    let mut out = Vec::new();
    for &value in &spec.values {
        let (c, loads) = if spec.axis == "load" {
            (*cfg, vec![value])
        } else {
            (apply_axis(cfg, &spec.axis, value)?, grid.loads.clone())
        };
        if name == "analytical" {
            for a in analyze(&c, &loads)? {
                out.push(SweepRow {
                    axis: spec.axis.clone(),
                    value,
                    load: a.load,
                    eta: a.eta_analytical,
                    eta_std: 0.0,
                    mean_delay_s: None,
                    drop_prob: None,
                });
            }
        } else {
            let g = Grid {
                loads,
                ..grid.clone()
            };
            for m in summarize(&simulate(&c, &g, &settings(name))?) {
                out.push(SweepRow {
                    axis: spec.axis.clone(),
                    value,
                    load: m.load,
                    eta: m.eta,
                    eta_std: m.eta_std.unwrap_or(0.0),
                    mean_delay_s: Some(m.mean_delay_s),
                    drop_prob: Some(m.drop_prob),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    WakeTimes,
    SleepPowers,
}

impl Study {
    pub fn parameters(self) -> [&'static str; 3] {
        match self {
            Study::WakeTimes => ["timing.t_sw_ds", "timing.t_sw_fs", "timing.t_sw_dz"],
            Study::SleepPowers => ["power.ds", "power.fs", "power.dz"],
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Study::WakeTimes => "study_wake_times.csv",
            Study::SleepPowers => "study_sleep_powers.csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub parameter: String,
    pub load: f64,
    pub eta_reference: f64,
    pub eta_reduced: f64,
    pub delta: f64,
}

/// Analytical efficiency with each parameter of `study` cut by 25% in turn.
pub fn design_study(
    cfg: &NetworkConfig,
    loads: &[f64],
    study: Study,
) -> Result<Vec<StudyRow>, CliError> {
    let reference = analyze(cfg, loads)?;
    let mut out = Vec::new();
    for p in study.parameters() {
        let reduced = apply_axis(cfg, p, 0.75 * current(cfg, p))?;
        for (r, a) in reference.iter().zip(analyze(&reduced, loads)?) {
            out.push(StudyRow {
                parameter: p.into(),
                load: r.load,
                eta_reference: r.eta_analytical,
                eta_reduced: a.eta_analytical,
                delta: a.eta_analytical - r.eta_analytical,
            });
        }
    }
    Ok(out)
}

fn write<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = create_writer(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes one CSV per scenario plus the two design studies into `out_dir`;
/// returns the files written.
pub fn run_sweep(
    cfg: &NetworkConfig,
    spec: &SweepSpec,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    spec.check()?;
    let mut written = Vec::new();
    for name in &spec.scenarios {
        let path = out_dir.join(format!("{name}.csv"));
        write(&path, &scenario_rows(cfg, spec, name)?)?;
        written.push(path);
    }
    let loads = spec.grid().loads;
    for study in [Study::WakeTimes, Study::SleepPowers] {
        let path = out_dir.join(study.file_name());
        write(&path, &design_study(cfg, &loads, study)?)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_defaults_and_checks() {
        let s = SweepSpec::parse("axis = \"n_onus\"\nvalues = [16, 32]\n").unwrap();
        assert_eq!(s.scenarios, vec!["analytical".to_string()]);
        assert_eq!(s.seeds, vec![1, 2, 3, 4, 5]);
        assert!(SweepSpec::parse("axis = \"n_onus\"\nvalues = []\n").is_err());
        assert!(SweepSpec::parse("axis = \"n_onus\"\nvalues = [32, 16]\n").is_err());
        assert!(SweepSpec::parse("axis = \"colour\"\nvalues = [1]\n").is_err());
        assert!(SweepSpec::parse("axis = \"n_m\"\nvalues = [2.5]\n").is_err());
        assert!(
            SweepSpec::parse("axis = \"load\"\nvalues = [0.1]\nscenarios = [\"x\"]\n").is_err()
        );
    }

    #[test]
    fn axis_names_accept_unit_suffixes() {
        let cfg = NetworkConfig::reference();
        assert_eq!(apply_axis(&cfg, "power.dz_w", 2.0).unwrap().power.p_dz, 2.0);
        assert_eq!(
            apply_axis(&cfg, "timing.t_sw_fs_s", 1e-4)
                .unwrap()
                .timing
                .t_sw_fs,
            1e-4
        );
        assert_eq!(
            apply_axis(&cfg, "onu.n_th_pkts", 20.0).unwrap().onu.n_th,
            20
        );
        assert!(apply_axis(&cfg, "power.dz", 5.0).is_err());
    }
}
