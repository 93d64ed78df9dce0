use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer};
use serde::Deserialize;

use crate::basis::check_valley_radius;
use crate::flux::{FluxExperiment, FluxSchedule, GaugeFunction, ScheduleShape};
use crate::hamiltonian::default_delta;
use crate::lattice::{build_lattice, Lattice, TubeGeometry};
use crate::specflow::EngineOptions;
use crate::{Error, Result};

/// Either the literal string `"auto"` or a value.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum AutoOr<T> {
    #[default]
    Auto,
    Value(T),
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for AutoOr<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw<T> {
            Text(String),
            Value(T),
        }
        match Raw::<T>::deserialize(d)? {
            Raw::Text(s) if s == "auto" => Ok(AutoOr::Auto),
            Raw::Text(s) => Err(de::Error::custom(format!(
                "expected \"auto\" or a number, got \"{s}\""
            ))),
            Raw::Value(v) => Ok(AutoOr::Value(v)),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    /// Nearest-neighbour distance; defaults to 1 unless `L` is given.
    #[serde(default)]
    pub a: Option<f64>,
    /// Axial length; sets `a = L/(3M)`.
    #[serde(default, rename = "L")]
    pub length: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    #[default]
    Linear,
    Smoothstep,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum GaugeKind {
    #[default]
    Zero,
    Sine,
}

fn default_epsilon() -> f64 {
    0.3
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeConfig {
    #[serde(default)]
    pub kind: GaugeKind,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

impl Default for GaugeConfig {
    fn default() -> Self {
        GaugeConfig {
            kind: GaugeKind::Zero,
            epsilon: default_epsilon(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxConfig {
    pub q_final: f64,
    #[serde(default)]
    pub schedule: ScheduleKind,
    #[serde(default)]
    pub gauge: GaugeConfig,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValleyConfig {
    #[serde(default)]
    pub d: AutoOr<i64>,
}

fn default_t_samples() -> usize {
    64
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    #[serde(default)]
    pub delta: AutoOr<f64>,
    #[serde(default)]
    pub margin_target: Option<f64>,
    #[serde(default = "default_t_samples")]
    pub t_samples: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            delta: AutoOr::Auto,
            margin_target: None,
            t_samples: default_t_samples(),
        }
    }
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub directory: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: None,
            formats: default_formats(),
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    pub flux: FluxConfig,
    #[serde(default)]
    pub valley: ValleyConfig,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn geometry(&self) -> Result<TubeGeometry> {
        let g = &self.geometry;
        match (g.a, g.length) {
            (Some(_), Some(_)) => Err(Error::Config(
                "geometry: give either a or L, not both".into(),
            )),
            (_, Some(len)) => TubeGeometry::with_length(g.m, g.n, len),
            (a, None) => TubeGeometry::new(g.m, g.n, a.unwrap_or(1.0)),
        }
    }

    pub fn schedule(&self) -> FluxSchedule {
        let shape = match self.flux.schedule {
            ScheduleKind::Linear => ScheduleShape::Linear,
            ScheduleKind::Smoothstep => ScheduleShape::Smoothstep,
        };
        FluxSchedule {
            q_final: self.flux.q_final,
            shape,
        }
    }

    pub fn gauge(&self) -> GaugeFunction {
        match self.flux.gauge.kind {
            GaugeKind::Zero => GaugeFunction::Zero,
            GaugeKind::Sine => GaugeFunction::Sine {
                epsilon: self.flux.gauge.epsilon,
            },
        }
    }

    /// Builds the lattice and checks cross-field feasibility.
    pub fn resolve(&self) -> Result<Experiment> {
        let geometry = self.geometry()?;
        let schedule = self.schedule();
        if !schedule.q_final.is_finite() {
            return Err(Error::Config("q_final must be finite".into()));
        }
        let q_bar = schedule.q_bar();
        let d = match self.valley.d {
            AutoOr::Value(d) => {
                check_valley_radius(d, q_bar, &geometry)?;
                Some(d)
            }
            AutoOr::Auto => {
                let smallest = q_bar.floor() as i64 + 1;
                check_valley_radius(smallest, q_bar, &geometry)?;
                None
            }
        };
        let delta = match self.engine.delta {
            AutoOr::Auto => default_delta(&geometry),
            AutoOr::Value(v) if v > 0.0 && v.is_finite() => v,
            AutoOr::Value(v) => {
                return Err(Error::Infeasible(format!("δ must be positive, got {v}")))
            }
        };
        if self.engine.t_samples == 0 {
            return Err(Error::Config("t_samples must be positive".into()));
        }
        let mut engine = EngineOptions::new(delta).with_coarse(self.engine.t_samples);
        engine.margin_target = self.engine.margin_target;
        Ok(Experiment {
            geometry,
            lattice: build_lattice(geometry)?,
            flux: FluxExperiment::new(schedule, self.gauge()),
            d,
            delta,
            engine,
            t_samples: self.engine.t_samples,
        })
    }
}

/// A validated, ready-to-run configuration.
pub struct Experiment {
    pub geometry: TubeGeometry,
    pub lattice: Lattice,
    pub flux: FluxExperiment,
    /// `None` means "auto", resolved by the tameness policy.
    pub d: Option<i64>,
    pub delta: f64,
    pub engine: EngineOptions,
    pub t_samples: usize,
}

impl fmt::Debug for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Experiment")
            .field("geometry", &self.geometry)
            .field("flux", &self.flux)
            .field("d", &self.d)
            .field("delta", &self.delta)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "geometry": {"M": 12, "N": 18, "L": 1.0},
        "flux": {"q_final": 1, "schedule": "linear", "gauge": {"kind": "sine", "epsilon": 0.3}},
        "valley": {"d": 3},
        "engine": {"delta": "auto", "t_samples": 32}
    }"#;

    #[test]
    fn parses_and_resolves() {
        let c = ExperimentConfig::from_json(BASE).unwrap();
        let e = c.resolve().unwrap();
        assert_eq!(e.d, Some(3));
        assert_eq!(e.geometry.axial_cells, 12);
        assert!((e.geometry.length() - 1.0).abs() < 1e-15);
        assert!((e.delta - default_delta(&e.geometry)).abs() < 1e-15);
        assert_eq!(e.engine.coarse_intervals, 32);
        assert!(c.output.wants("csv"));
    }

    #[test]
    fn rejects_infeasible_radius() {
        let text = BASE.replace(r#""d": 3"#, r#""d": 6"#);
        let err = ExperimentConfig::from_json(&text).unwrap().resolve().unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
        let text = BASE.replace(r#""d": 3"#, r#""d": 1"#);
        let err = ExperimentConfig::from_json(&text).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("q̄"));
    }

    #[test]
    fn auto_and_defaults() {
        let c = ExperimentConfig::from_json(
            r#"{"geometry": {"M": 4, "N": 12}, "flux": {"q_final": 2}}"#,
        )
        .unwrap();
        assert_eq!(c.valley.d, AutoOr::Auto);
        assert_eq!(c.flux.gauge.kind, GaugeKind::Zero);
        let e = c.resolve().unwrap();
        assert_eq!(e.d, None);
        assert_eq!(e.geometry.a, 1.0);
        assert!(ExperimentConfig::from_json(r#"{"geometry": {"M": 4, "N": 12}, "flux": {"q_final": 1}, "valley": {"d": "big"}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"geometry": {"M": 4, "N": 12}, "flux": {"q_final": 1}, "extra": 1}"#).is_err());
    }
}
