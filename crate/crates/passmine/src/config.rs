//! Flat key=value run configuration shared by the CLI stages.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::discovery::MatchParams;
use crate::events::SegmentationPolicy;
use crate::preprocess::{FieldSpec, DEFAULT_STEP};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config {path}: {message}")]
    Bad { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub field: FieldSpec,
    pub policy: SegmentationPolicy,
    pub params: MatchParams,
    pub densify_step: f64,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub team_filter: Option<String>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            field: FieldSpec::default(),
            policy: SegmentationPolicy::default(),
            params: MatchParams::default(),
            densify_step: DEFAULT_STEP,
            out_dir: PathBuf::from("out"),
            jobs: 1,
            team_filter: None,
            seed: 42,
        }
    }
}

/// Parse `key = value` lines; `#` starts a comment. Unknown keys are
/// rejected so typos do not silently fall back to defaults.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Bad {
                path: path.display().to_string(),
                message: format!("line {}: expected key = value", lineno + 1),
            });
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    apply(map, path)
}

fn apply(map: HashMap<String, String>, path: &Path) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::default();
    let path_str = path.display().to_string();
    let bad = |message: String| ConfigError::Bad {
        path: path_str.clone(),
        message,
    };
    let mut explicit_band = false;
    for (key, value) in &map {
        let parse_f64 = || {
            value
                .parse::<f64>()
                .map_err(|_| bad(format!("{key}: expected a number, got {value:?}")))
        };
        let parse_usize = || {
            value
                .parse::<usize>()
                .map_err(|_| bad(format!("{key}: expected an integer, got {value:?}")))
        };
        let parse_bool = || match value.as_str() {
            "true" | "1" => Ok(true),
            "false" | "0" => Ok(false),
            _ => Err(bad(format!("{key}: expected true/false, got {value:?}"))),
        };
        match key.as_str() {
            "field.length_m" => config.field.length_m = parse_f64()?,
            "field.width_m" => config.field.width_m = parse_f64()?,
            "field.flip_rules" => {
                config.field.flip_rules = load_flip_rules(Path::new(value))?;
            }
            "densify.step" => config.densify_step = parse_f64()?,
            "segmentation.max_gap_seconds" => config.policy.max_gap_seconds = parse_f64()?,
            "segmentation.break_on_period" => config.policy.break_on_period = parse_bool()?,
            "segmentation.use_possession_id" => {
                config.policy.use_provided_possession_id = parse_bool()?
            }
            "match.local_threshold" => config.params.local_threshold = parse_f64()?,
            "match.global_threshold" => config.params.global_threshold = parse_f64()?,
            "match.min_positions" => config.params.min_positions = parse_usize()?,
            "match.max_outlier_run" => config.params.max_outlier_run = parse_usize()?,
            "match.max_outlier_fraction" => config.params.max_outlier_fraction = parse_f64()?,
            "match.max_stall" => config.params.max_stall = parse_usize()?,
            "match.self_exclusion_band" => {
                config.params.self_exclusion_band = parse_usize()?;
                explicit_band = true;
            }
            "match.dedupe_overlap" => config.params.dedupe_overlap = parse_f64()?,
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }
    if !explicit_band {
        config.params.self_exclusion_band = config.params.min_positions;
    }
    validate(&config).map_err(bad)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> Result<(), String> {
    let p = &config.params;
    if !(p.local_threshold > 0.0 && p.local_threshold <= p.global_threshold) {
        return Err("require 0 < local_threshold <= global_threshold".into());
    }
    if p.min_positions < 2 {
        return Err("min_positions must be at least 2".into());
    }
    if !(0.0..1.0).contains(&p.max_outlier_fraction) {
        return Err("max_outlier_fraction must be in [0, 1)".into());
    }
    if config.policy.max_gap_seconds <= 0.0 {
        return Err("max_gap_seconds must be positive".into());
    }
    if config.field.length_m <= 0.0 || config.field.width_m <= 0.0 {
        return Err("field dimensions must be positive".into());
    }
    if config.densify_step <= 0.0 {
        return Err("densify step must be positive".into());
    }
    Ok(())
}

/// Flip-rule table: CSV `game_id,team_id,period` with header.
pub fn load_flip_rules(
    path: &Path,
) -> Result<std::collections::HashSet<(String, String, u8)>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rules = std::collections::HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(ConfigError::Bad {
                path: path.display().to_string(),
                message: format!("line {}: expected game_id,team_id,period", lineno + 1),
            });
        }
        let period = fields[2].parse::<u8>().map_err(|_| ConfigError::Bad {
            path: path.display().to_string(),
            message: format!("line {}: bad period {:?}", lineno + 1, fields[2]),
        })?;
        rules.insert((fields[0].to_string(), fields[1].to_string(), period));
    }
    Ok(rules)
}
