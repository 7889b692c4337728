use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geometry::{Manifold, OneForm};
use crate::maps::{builtin, MapSpec};
use crate::{Error, Result};

pub const PIPELINES: [&str; 8] = [
    "verify",
    "exponents",
    "regularity",
    "templates",
    "fh",
    "contact",
    "sugap",
    "heisenberg",
];

/// Environment variable that overrides `output.dir`.
pub const OUT_DIR_ENV: &str = "PHLAB_OUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub map: MapSection,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub forms: Forms,
    /// Overrides keyed by check name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: Output,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    #[serde(default = "default_id")]
    pub id: String,
    pub pipeline: String,
    pub seed: u64,
}

fn default_id() -> String {
    "run".into()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    /// Built-in name; mutually exclusive with `components`.
    pub name: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub manifold: Option<String>,
    pub components: Option<[String; 3]>,
    pub inverse: Option<[String; 3]>,
    #[serde(default)]
    pub volume_preserving: bool,
    pub contact_form: Option<[String; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sampling {
    pub samples: usize,
    pub steps: usize,
    pub max_period: usize,
    pub grid: usize,
    pub orbit_length: usize,
    pub eps: Vec<f64>,
    pub point: [f64; 3],
    pub family: String,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            samples: 200,
            steps: 10_000,
            max_period: 6,
            grid: 16,
            orbit_length: 1000,
            eps: vec![0.003, 0.006, 0.012, 0.024, 0.03],
            point: [0.3, 0.2, 0.1],
            family: "holonomy".into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Forms {
    /// Coefficients of `dx, dy, dz`; defaults to the map's own contact form.
    pub alpha: Option<[String; 3]>,
    /// Coefficient of `dx∧dy∧dz`; defaults to 1.
    pub volume: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: Option<PathBuf>,
    pub format: Format,
}

impl Default for Output {
    fn default() -> Self {
        Output {
            dir: None,
            format: Format::Json,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            config_error(&path, inner.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Minimal config for a pipeline on a built-in map.
    pub fn for_pipeline(pipeline: &str, map: &str, seed: u64) -> Result<Self> {
        let cfg = ExperimentConfig {
            experiment: Experiment {
                id: format!("{pipeline}-{map}"),
                pipeline: pipeline.into(),
                seed,
            },
            map: MapSection {
                name: Some(map.into()),
                ..Default::default()
            },
            sampling: Sampling::default(),
            forms: Forms::default(),
            tolerances: BTreeMap::new(),
            output: Output::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !PIPELINES.contains(&self.experiment.pipeline.as_str()) {
            return Err(config_error(
                "experiment.pipeline",
                format!("unknown pipeline `{}`", self.experiment.pipeline),
            ));
        }
        match (&self.map.name, &self.map.components) {
            (Some(_), Some(_)) => {
                return Err(config_error(
                    "map",
                    "give either `name` or `components`, not both",
                ))
            }
            (None, None) if self.experiment.pipeline != "heisenberg" => {
                return Err(config_error("map", "missing `name` or `components`"))
            }
            _ => {}
        }
        if self.sampling.samples == 0 {
            return Err(config_error("sampling.samples", "must be positive"));
        }
        if let Some(bad) = self
            .sampling
            .eps
            .iter()
            .find(|e| !(**e > 0.0 && **e <= 0.05))
        {
            return Err(config_error(
                "sampling.eps",
                format!("{bad} outside (0, 0.05]"),
            ));
        }
        self.build_map()?;
        self.alpha()?;
        Ok(())
    }

    pub fn build_map(&self) -> Result<MapSpec> {
        let m = &self.map;
        if let Some(name) = &m.name {
            let mut map = builtin(name)
                .map_err(|_| config_error("map.name", format!("unknown built-in `{name}`")))?;
            for (k, v) in &m.params {
                map = map
                    .with_param(k, *v)
                    .map_err(|e| config_error(&format!("map.params.{k}"), e.to_string()))?;
            }
            return Ok(map);
        }
        let Some(comps) = &m.components else {
            return builtin("F");
        };
        let manifold = m.manifold.as_deref().unwrap_or("torus3");
        let manifold = Manifold::parse(manifold).ok_or_else(|| {
            config_error("map.manifold", format!("unknown manifold `{manifold}`"))
        })?;
        let inverse = m
            .inverse
            .as_ref()
            .map(|i| [i[0].as_str(), i[1].as_str(), i[2].as_str()]);
        let mut map = MapSpec::from_strings(
            "custom",
            manifold,
            [&comps[0], &comps[1], &comps[2]],
            inverse,
            m.params.clone(),
        )
        .map_err(|e| config_error("map.components", e.to_string()))?
        .with_volume_preserving(m.volume_preserving);
        if let Some(c) = &m.contact_form {
            let w = OneForm::parse(&c[0], &c[1], &c[2])
                .map_err(|e| config_error("map.contact_form", e.to_string()))?;
            map = map.with_contact_form(w);
        }
        Ok(map)
    }

    /// The form from `[forms]`, else the map's own.
    pub fn alpha(&self) -> Result<Option<OneForm>> {
        match &self.forms.alpha {
            Some(a) => OneForm::parse(&a[0], &a[1], &a[2])
                .map(Some)
                .map_err(|e| config_error("forms.alpha", e.to_string())),
            None => Ok(self.build_map()?.contact_form),
        }
    }

    pub fn tolerance(&self, check: &str, default: f64) -> f64 {
        self.tolerances.get(check).copied().unwrap_or(default)
    }

    /// `output.dir`, overridden by the environment.
    pub fn out_dir(&self) -> Option<PathBuf> {
        std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .or_else(|| self.output.dir.clone())
    }
}
