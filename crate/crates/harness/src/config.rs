//! Run configuration: TOML files with one section per group of settings.
//!
//! Every key is optional; missing keys take the defaults of the named
//! experiment. The fully resolved configuration is echoed into the manifest.

use std::path::Path;

use gdnls_core::evolution::Form;
use gdnls_core::{ClassExponents, Complex64, EquationSpec, Stepper};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};

pub const EXPERIMENTS: [&str; 7] = [
    "soliton_propagation",
    "picard_study",
    "smoothing_probe",
    "inequality_sweep",
    "small_time_probe",
    "convergence_study",
    "dependence_study",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: String,
    pub seed: u64,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub equation: EquationConfig,
    pub class: ClassConfig,
    pub data: DataConfig,
    pub study: StudyConfig,
    pub sweep: SweepAxes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_length: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub duration: f64,
    pub dt: f64,
    pub stepper: StepperName,
    /// Keep every `record_every`-th step in the output series.
    pub record_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepperName {
    Strang,
    Ifrk4,
}

impl StepperName {
    pub fn stepper(self) -> Stepper {
        match self {
            StepperName::Strang => Stepper::Strang,
            StepperName::Ifrk4 => Stepper::Ifrk4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StepperName::Strang => "strang",
            StepperName::Ifrk4 => "ifrk4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationConfig {
    /// `[re, im]`; absent means the sign convention determined at start-up.
    pub mu: Option<[f64; 2]>,
    pub alpha: f64,
    pub form: FormName,
    pub epsilon: f64,
    pub dealias: bool,
    /// Drop the nonlinearity entirely (convergence checks of the linear flow).
    pub linear: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormName {
    Gdnls,
    Divergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    pub m: Option<u32>,
    pub big_m: Option<u32>,
    pub k: Option<u32>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataConfig {
    Solitary {
        omega: f64,
        speed: f64,
    },
    Decay {
        c0: f64,
        m: Option<u32>,
    },
    /// Two columns `re, im` (or one real column) per node, one line per node.
    File {
        path: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub tolerance: f64,
    pub max_iter: usize,
    pub samples: usize,
    pub smoothing_k: u32,
    pub times: Vec<f64>,
    pub ladder: Vec<f64>,
    pub steppers: Vec<StepperName>,
    pub perturbations: Vec<f64>,
    /// Coefficient of the smoothing probe: `data` for `mu |u0|^a`, `bracket`
    /// for `mu <x>^-m`, `zero` for the free flow.
    pub coefficient: CoefficientKind,
    pub contraction: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientKind {
    Data,
    Bracket,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(default)]
    pub omega: Vec<f64>,
    #[serde(default)]
    pub speed: Vec<f64>,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub duration: Vec<f64>,
    #[serde(default)]
    pub points: Vec<usize>,
}

impl SweepAxes {
    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
            && self.speed.is_empty()
            && self.alpha.is_empty()
            && self.duration.is_empty()
            && self.points.is_empty()
    }
}

/// The on-disk form: every field optional, merged onto experiment defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    experiment: Option<String>,
    seed: Option<u64>,
    grid: Option<toml::Table>,
    time: Option<toml::Table>,
    equation: Option<toml::Table>,
    class: Option<toml::Table>,
    data: Option<toml::Table>,
    study: Option<toml::Table>,
    sweep: Option<toml::Table>,
}

fn overlay<T>(base: &T, patch: Option<toml::Table>, section: &'static str) -> HarnessResult<T>
where
    T: Serialize + for<'de> Deserialize<'de>,
{
    let patch = patch.unwrap_or_default();
    let mut value =
        toml::Value::try_from(base).map_err(|e| HarnessError::config(section, e.to_string()))?;
    let table = value.as_table_mut().expect("sections serialise to tables");
    for (k, v) in patch {
        table.insert(k, v);
    }
    value
        .try_into()
        .map_err(|e| HarnessError::config(section, e.to_string()))
}

impl RunConfig {
    /// Defaults for a registered experiment.
    pub fn defaults_for(experiment: &str) -> HarnessResult<Self> {
        if !EXPERIMENTS.contains(&experiment) {
            return Err(HarnessError::Usage(format!(
                "unknown experiment '{experiment}'; registered: {}",
                EXPERIMENTS.join(", ")
            )));
        }
        let decay = DataConfig::Decay { c0: 0.5, m: None };
        let mut cfg = RunConfig {
            experiment: experiment.to_string(),
            seed: 20240601,
            grid: GridConfig {
                half_length: 30.0,
                points: 2048,
            },
            time: TimeConfig {
                duration: 0.05,
                dt: 2e-4,
                stepper: StepperName::Ifrk4,
                record_every: 1,
            },
            equation: EquationConfig {
                mu: None,
                alpha: 1.0,
                form: FormName::Gdnls,
                epsilon: 0.0,
                dealias: false,
                linear: false,
            },
            class: ClassConfig::default(),
            data: decay,
            study: StudyConfig {
                tolerance: 1e-10,
                max_iter: 30,
                samples: 20,
                smoothing_k: 6,
                times: vec![1e-3, 2e-3, 4e-3, 8e-3],
                ladder: vec![0.01, 0.005, 0.0025, 0.00125],
                steppers: vec![StepperName::Strang, StepperName::Ifrk4],
                perturbations: vec![1e-3, 1e-4],
                coefficient: CoefficientKind::Data,
                contraction: true,
            },
            sweep: SweepAxes::default(),
        };
        match experiment {
            "soliton_propagation" => {
                cfg.grid = GridConfig {
                    half_length: 40.0,
                    points: 4096,
                };
                cfg.time = TimeConfig {
                    duration: 1.0,
                    dt: 1e-4,
                    stepper: StepperName::Ifrk4,
                    record_every: 100,
                };
                cfg.data = DataConfig::Solitary {
                    omega: 1.0,
                    speed: 1.0,
                };
                cfg.study.tolerance = 1e-3;
            }
            "smoothing_probe" => {
                cfg.grid.points = 1024;
                cfg.time.duration = 0.5;
                cfg.time.dt = 1e-3;
                cfg.study.coefficient = CoefficientKind::Bracket;
            }
            "inequality_sweep" => {
                cfg.grid.points = 1024;
                cfg.study.samples = 100;
            }
            "small_time_probe" => {
                cfg.grid = GridConfig {
                    half_length: 60.0,
                    points: 4096,
                };
                cfg.time.dt = 1e-4;
            }
            "convergence_study" => {
                cfg.grid = GridConfig {
                    half_length: 40.0,
                    points: 512,
                };
                cfg.time.duration = 1.0;
                cfg.data = DataConfig::Solitary {
                    omega: 1.0,
                    speed: 1.0,
                };
            }
            "dependence_study" => {
                cfg.grid.points = 1024;
                cfg.time.dt = 5e-4;
            }
            _ => {}
        }
        Ok(cfg)
    }

    /// Parses TOML text over the defaults of its `experiment` key, or of
    /// `fallback` when the file names none.
    pub fn from_toml_str(text: &str, fallback: Option<&str>) -> HarnessResult<Self> {
        let partial: PartialConfig =
            toml::from_str(text).map_err(|e| HarnessError::config("file", e.to_string()))?;
        let name = partial
            .experiment
            .clone()
            .or_else(|| fallback.map(str::to_string))
            .ok_or_else(|| HarnessError::Usage("config names no experiment".into()))?;
        let base = Self::defaults_for(&name)?;
        let data = match partial.data {
            Some(table) if !table.contains_key("kind") => {
                let mut merged = toml::Value::try_from(&base.data)
                    .map_err(|e| HarnessError::config("data", e.to_string()))?;
                let t = merged.as_table_mut().expect("table");
                for (k, v) in table {
                    t.insert(k, v);
                }
                merged
                    .try_into()
                    .map_err(|e| HarnessError::config("data", e.to_string()))?
            }
            Some(table) => toml::Value::Table(table)
                .try_into()
                .map_err(|e| HarnessError::config("data", e.to_string()))?,
            None => base.data.clone(),
        };
        let cfg = RunConfig {
            experiment: name,
            seed: partial.seed.unwrap_or(base.seed),
            grid: overlay(&base.grid, partial.grid, "grid")?,
            time: overlay(&base.time, partial.time, "time")?,
            equation: overlay(&base.equation, partial.equation, "equation")?,
            class: overlay(&base.class, partial.class, "class")?,
            data,
            study: overlay(&base.study, partial.study, "study")?,
            sweep: overlay(&base.sweep, partial.sweep, "sweep")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, fallback: Option<&str>) -> HarnessResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, fallback)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> HarnessResult<()> {
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(HarnessError::Usage(format!(
                "unknown experiment '{}'",
                self.experiment
            )));
        }
        let g = &self.grid;
        if g.half_length.is_nan()
            || g.half_length <= 0.0
            || !g.points.is_power_of_two()
            || g.points < 8
        {
            return Err(HarnessError::config(
                "grid",
                format!(
                    "need L > 0 and N a power of two >= 8, got L = {}, N = {}",
                    g.half_length, g.points
                ),
            ));
        }
        let t = &self.time;
        if !(t.duration > 0.0 && t.dt > 0.0 && t.dt <= t.duration) || t.record_every == 0 {
            return Err(HarnessError::config(
                "time",
                "need 0 < dt <= T and record_every >= 1",
            ));
        }
        if let Some([re, im]) = self.equation.mu {
            if ((re * re + im * im).sqrt() - 1.0).abs() > 1e-12 {
                return Err(HarnessError::config("equation.mu", "must have modulus 1"));
            }
        }
        if !(self.equation.alpha > 0.0 && self.equation.alpha <= 1.0) {
            return Err(HarnessError::config("equation.alpha", "must lie in (0, 1]"));
        }
        if self.experiment == "convergence_study" && self.study.ladder.len() < 3 {
            return Err(HarnessError::config(
                "study.ladder",
                "needs at least three rungs",
            ));
        }
        Ok(())
    }

    /// Exponents `(m, M, k)`: derived from alpha, then overridden.
    pub fn exponents(&self) -> HarnessResult<ClassExponents> {
        let base = ClassExponents::for_alpha(self.equation.alpha)?;
        let m = self.class.m.unwrap_or(base.m);
        let big_m = self.class.big_m.unwrap_or(base.big_m);
        let k = self.class.k.unwrap_or_else(|| base.k.max(m + big_m + 1));
        Ok(ClassExponents::new(self.equation.alpha, m, big_m, k)?)
    }

    pub fn equation_spec(&self, mu_star: Complex64) -> HarnessResult<EquationSpec> {
        let mu = self
            .equation
            .mu
            .map(|[re, im]| Complex64::new(re, im))
            .unwrap_or(mu_star);
        let form = match self.equation.form {
            FormName::Gdnls => Form::Gdnls,
            FormName::Divergence => Form::Divergence,
        };
        Ok(EquationSpec::new(mu, self.equation.alpha)?
            .with_form(form)
            .with_epsilon(self.equation.epsilon)?
            .with_dealias(self.equation.dealias))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        for name in EXPERIMENTS {
            let cfg = RunConfig::defaults_for(name).unwrap();
            cfg.validate().unwrap();
            let back = RunConfig::from_toml_str(&cfg.to_toml_string(), None).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn partial_sections_overlay_defaults() {
        let cfg = RunConfig::from_toml_str(
            "experiment = \"picard_study\"\n[grid]\npoints = 512\n[data]\nc0 = 0.25\n",
            None,
        )
        .unwrap();
        assert_eq!(cfg.grid.points, 512);
        assert_eq!(cfg.grid.half_length, 30.0);
        assert_eq!(cfg.data, DataConfig::Decay { c0: 0.25, m: None });
    }

    #[test]
    fn unknown_experiment_is_usage_error() {
        let err = RunConfig::from_toml_str("experiment = \"nope\"", None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml_str(
            "experiment = \"picard_study\"\n[grid]\nsize = 3\n",
            None
        )
        .is_err());
    }

    #[test]
    fn shipped_configs_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut seen = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "toml") {
                RunConfig::load(&path, None).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
                seen += 1;
            }
        }
        assert!(seen >= 4);
    }

    #[test]
    fn exponents_follow_alpha() {
        for (alpha, m) in [(1.0, 3), (2.0 / 3.0, 4), (0.5, 5)] {
            let mut cfg = RunConfig::defaults_for("picard_study").unwrap();
            cfg.equation.alpha = alpha;
            assert_eq!(cfg.exponents().unwrap().m, m);
        }
    }
}
