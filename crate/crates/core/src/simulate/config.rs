//! Flat key-value experiment files.
//!
//! ```toml
//! preset = "ex2"          # starting point; every other key overrides it
//! seed = 7
//! repetitions = 5
//! n_min = 1000
//! n_max = 100000
//! per_decade = 12         # or give `n_grid = [..]` explicitly
//! estimators = ["projection", "krr"]
//! noise = "student_t"     # "uniform" | "normal" | "student_t"
//! noise_sd = 5.0
//! noise_df = 2.1
//! ```

use serde::Deserialize;

use super::experiment::{log_grid, EstimatorKind, ExperimentSpec, DEFAULT_PER_DECADE};
use super::laws::{CovariateLaw, NoiseLaw};
use crate::error::{Error, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    preset: Option<String>,
    example: Option<String>,
    kernel: Option<String>,
    additive: Option<bool>,
    covariate: Option<String>,
    dim: Option<usize>,
    noise: Option<String>,
    noise_sd: Option<f64>,
    noise_half_width: Option<f64>,
    noise_df: Option<f64>,
    alpha: Option<f64>,
    c: Option<f64>,
    n0: Option<usize>,
    clamp: Option<f64>,
    n_grid: Option<Vec<usize>>,
    n_min: Option<usize>,
    n_max: Option<usize>,
    per_decade: Option<usize>,
    repetitions: Option<usize>,
    mc_points: Option<usize>,
    seed: Option<u64>,
    estimators: Option<Vec<String>>,
    krr_scale: Option<f64>,
    krr_exponent: Option<f64>,
    krr_max_n: Option<usize>,
    sgd_gamma0: Option<f64>,
    sgd_max_n: Option<usize>,
    timing: Option<bool>,
}

impl ExperimentSpec {
    /// Parses a config document and applies it over its preset.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        let base_name = cfg
            .preset
            .as_deref()
            .or(cfg.example.as_deref())
            .ok_or_else(|| Error::Config("config needs a `preset` or `example` key".into()))?;
        let mut spec = ExperimentSpec::preset(base_name)?;
        if let Some(e) = &cfg.example {
            spec.example = e.parse()?;
        }
        if let Some(k) = &cfg.kernel {
            spec.kernel = k.parse()?;
        }
        if let Some(a) = cfg.additive {
            spec.additive = a;
        }
        match cfg.covariate.as_deref() {
            None => {
                if let Some(d) = cfg.dim {
                    spec.covariate = CovariateLaw::Uniform { dim: d };
                }
            }
            Some("uniform") => {
                spec.covariate = CovariateLaw::Uniform {
                    dim: cfg.dim.unwrap_or(spec.example.input_dim()),
                }
            }
            Some("tilted") => spec.covariate = CovariateLaw::Tilted,
            Some(other) => return Err(Error::Config(format!("unknown covariate law `{other}`"))),
        }
        spec.noise = noise_law(&cfg, spec.noise)?;
        if let Some(v) = cfg.alpha {
            spec.alpha = v;
        }
        if let Some(v) = cfg.c {
            spec.schedule_constant = v;
        }
        if let Some(v) = cfg.n0 {
            spec.initial_basis = v;
        }
        if let Some(v) = cfg.clamp {
            spec.clamp = v;
        }
        match (&cfg.n_grid, cfg.n_min, cfg.n_max, cfg.per_decade) {
            (Some(g), None, None, None) => spec.n_grid = g.clone(),
            (Some(_), ..) => {
                return Err(Error::Config("give either `n_grid` or `n_min`/`n_max`/`per_decade`".into()))
            }
            (None, None, None, None) => {}
            (None, lo, hi, per) => {
                let lo = lo.unwrap_or(spec.n_grid[0]);
                let hi = hi.unwrap_or(spec.max_n());
                spec.n_grid = log_grid(lo, hi, per.unwrap_or(DEFAULT_PER_DECADE));
            }
        }
        if let Some(v) = cfg.repetitions {
            spec.repetitions = v;
        }
        if let Some(v) = cfg.mc_points {
            spec.mc_points = v;
        }
        if let Some(v) = cfg.seed {
            spec.seed = v;
        }
        if let Some(list) = &cfg.estimators {
            spec.estimators = list.iter().map(|s| s.parse::<EstimatorKind>()).collect::<Result<_>>()?;
        }
        if let Some(v) = cfg.krr_scale {
            spec.krr_ridge.scale = v;
        }
        if let Some(v) = cfg.krr_exponent {
            spec.krr_ridge.exponent = v;
        }
        if let Some(v) = cfg.krr_max_n {
            spec.krr_max_n = v;
        }
        if let Some(v) = cfg.sgd_gamma0 {
            spec.sgd_gamma0 = v;
        }
        if let Some(v) = cfg.sgd_max_n {
            spec.sgd_max_n = v;
        }
        if let Some(v) = cfg.timing {
            spec.timing = v;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_toml_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

fn noise_law(cfg: &ConfigFile, current: NoiseLaw) -> Result<NoiseLaw> {
    let law = match cfg.noise.as_deref() {
        None => match current {
            NoiseLaw::Normal { sd } => NoiseLaw::Normal {
                sd: cfg.noise_sd.unwrap_or(sd),
            },
            NoiseLaw::Uniform { half_width } => NoiseLaw::Uniform {
                half_width: cfg.noise_half_width.unwrap_or(half_width),
            },
            NoiseLaw::StudentT { .. } => current,
        },
        Some("normal") => NoiseLaw::Normal {
            sd: cfg.noise_sd.unwrap_or(current.sd()),
        },
        Some("uniform") => NoiseLaw::Uniform {
            half_width: cfg
                .noise_half_width
                .unwrap_or_else(|| current.sd() * 3f64.sqrt()),
        },
        Some("student_t") => NoiseLaw::student_t_with_sd(
            cfg.noise_df.unwrap_or(2.1),
            cfg.noise_sd.unwrap_or(current.sd()),
        )?,
        Some(other) => return Err(Error::Config(format!("unknown noise law `{other}`"))),
    };
    Ok(law)
}
