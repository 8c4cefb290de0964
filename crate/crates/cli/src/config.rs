//! Run configuration: a flat `key = value` file (TOML syntax) whose entries
//! are overridden by command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use pricepref::eval::{GridAxis, PahMode, SplitMode};
use pricepref::mf::LearningSchedule;
use pricepref::{Error, EvalOptions, Result, SplitSpec, TrainConfig};
use serde::Deserialize;

/// Every key accepted in a config file. All optional; flags win.
#[derive(Debug, Clone, Default, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Interactions CSV (customer_id,item_id,action,timestamp)
    #[arg(long)]
    pub interactions: Option<PathBuf>,
    /// Catalog CSV (item_id,retail_price,price)
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Model file written by `train`
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output file or directory
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long)]
    pub seed: Option<u64>,
    /// Cut-off rank for metrics
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,

    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub max_warp_trials: Option<usize>,
    #[arg(long)]
    pub regularization: Option<f64>,
    /// adagrad | sgd
    #[arg(long, value_parser = parse_schedule)]
    pub schedule: Option<LearningSchedule>,

    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// global | per-user
    #[arg(long, value_parser = parse_split_mode)]
    pub split_mode: Option<SplitMode>,

    #[arg(long, allow_hyphen_values = true)]
    pub alpha_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta_max: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Sweep worker threads (default: number of processors)
    #[arg(long)]
    pub workers: Option<usize>,
    /// per-hit-user | literal
    #[arg(long, value_parser = parse_pah_mode)]
    pub pah_mode: Option<PahMode>,
}

fn parse_schedule(s: &str) -> std::result::Result<LearningSchedule, String> {
    match s {
        "adagrad" => Ok(LearningSchedule::Adagrad),
        "sgd" => Ok(LearningSchedule::Sgd),
        _ => Err(format!("unknown schedule '{s}' (adagrad or sgd)")),
    }
}

fn parse_split_mode(s: &str) -> std::result::Result<SplitMode, String> {
    match s {
        "global" => Ok(SplitMode::Global),
        "per-user" => Ok(SplitMode::PerUser),
        _ => Err(format!("unknown split mode '{s}' (global or per-user)")),
    }
}

fn parse_pah_mode(s: &str) -> std::result::Result<PahMode, String> {
    match s {
        "per-hit-user" => Ok(PahMode::PerHitUser),
        "literal" => Ok(PahMode::Literal),
        _ => Err(format!("unknown PAH mode '{s}' (per-hit-user or literal)")),
    }
}

macro_rules! overlay {
    ($base:ident, $over:ident, $($field:ident),* $(,)?) => {
        $( if $over.$field.is_some() { $base.$field = $over.$field.clone(); } )*
    };
}

pub fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| {
        let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() as u64 + 1);
        Error::Parse {
            path: path.to_owned(),
            line,
            message: e.message().to_owned(),
        }
    })
}

impl RunConfig {
    /// Loads `config` (if given) and applies `flags` on top.
    pub fn resolve(config: Option<&Path>, flags: &RunConfig) -> Result<RunConfig> {
        let mut base: RunConfig = match config {
            Some(path) => read_toml(path)?,
            None => RunConfig::default(),
        };
        overlay!(
            base,
            flags,
            interactions,
            catalog,
            model,
            out,
            seed,
            k,
            alpha,
            beta,
            learning_rate,
            latent_dim,
            epochs,
            max_warp_trials,
            regularization,
            schedule,
            train_fraction,
            split_mode,
            alpha_min,
            alpha_max,
            beta_min,
            beta_max,
            step,
            workers,
            pah_mode,
        );
        if base.k == Some(0) {
            return Err(Error::Validation("k must be at least 1".into()));
        }
        Ok(base)
    }

    pub fn input(&self, name: &str, value: &Option<PathBuf>) -> Result<PathBuf> {
        let path = value
            .clone()
            .ok_or_else(|| Error::Validation(format!("--{name} is required")))?;
        if !path.exists() {
            return Err(Error::Io {
                path,
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
            });
        }
        Ok(path)
    }

    pub fn train_config(&self) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            latent_dim: self.latent_dim.unwrap_or(d.latent_dim),
            epochs: self.epochs.unwrap_or(d.epochs),
            max_warp_trials: self.max_warp_trials.unwrap_or(d.max_warp_trials),
            regularization: self.regularization.unwrap_or(d.regularization),
            schedule: self.schedule.unwrap_or(d.schedule),
            seed: self.seed.unwrap_or(d.seed),
        }
    }

    pub fn split(&self) -> SplitSpec {
        let d = SplitSpec::default();
        SplitSpec {
            train_fraction: self.train_fraction.unwrap_or(d.train_fraction),
            mode: self.split_mode.unwrap_or(d.mode),
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        let d = EvalOptions::default();
        EvalOptions {
            k: self.k.unwrap_or(d.k),
            pah_mode: self.pah_mode.unwrap_or(d.pah_mode),
        }
    }

    pub fn axes(&self) -> (GridAxis, GridAxis) {
        let d = GridAxis::default();
        let step = self.step.unwrap_or(d.step);
        (
            GridAxis {
                min: self.alpha_min.unwrap_or(d.min),
                max: self.alpha_max.unwrap_or(d.max),
                step,
            },
            GridAxis {
                min: self.beta_min.unwrap_or(d.min),
                max: self.beta_max.unwrap_or(d.max),
                step,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "k = 5\nepochs = 3\nalpha = -0.5\nsplit_mode = \"per-user\"\n").unwrap();
        let flags = RunConfig {
            k: Some(7),
            ..RunConfig::default()
        };
        let cfg = RunConfig::resolve(Some(&path), &flags).unwrap();
        assert_eq!(cfg.k, Some(7));
        assert_eq!(cfg.epochs, Some(3));
        assert_eq!(cfg.alpha, Some(-0.5));
        assert_eq!(cfg.split().mode, SplitMode::PerUser);
        assert_eq!(cfg.train_config().learning_rate, 0.05);
    }

    #[test]
    fn unknown_key_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "k = 5\nbogus = 1\n").unwrap();
        match RunConfig::resolve(Some(&path), &RunConfig::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_k_is_rejected() {
        let flags = RunConfig {
            k: Some(0),
            ..RunConfig::default()
        };
        assert!(RunConfig::resolve(None, &flags).is_err());
    }
}
