use std::path::{Path, PathBuf};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::Failure;

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct Common {
    /// Space preset: H3R, HnR, H2C, H2H or CayP.
    #[arg(long)]
    pub space: Option<String>,
    /// Dimension for the HnR preset.
    #[arg(long)]
    pub n: Option<u32>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON config file (or a previous manifest); flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct PhiArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Evaluation path: ode, bessel or asym.
    #[arg(long)]
    pub path: Option<String>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct GridArgs {
    /// Upper end of the radial grid.
    #[arg(long)]
    pub radial_max: Option<f64>,
    #[arg(long)]
    pub radial_panels: Option<usize>,
    /// Upper end of the spectral grid.
    #[arg(long)]
    pub spectral_max: Option<f64>,
    #[arg(long)]
    pub spectral_panels: Option<usize>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct TransformArgs {
    /// `heat[,tau=T]` or `q=Q[,cut=C]`.
    #[arg(long)]
    pub profile: Option<String>,
    /// forward, inverse or roundtrip.
    #[arg(long)]
    pub dir: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grids: GridArgs,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct EvolveArgs {
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grids: GridArgs,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub a: Option<f64>,
    /// Sobolev exponent of the data; picks the profile `q = n/2 + s + 0.1`.
    #[arg(long)]
    pub s: Option<f64>,
    /// Explicit profile, overriding the one picked from `s`.
    #[arg(long)]
    pub profile: Option<String>,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long)]
    pub ball_panels: Option<usize>,
    #[arg(long)]
    pub spectral_max: Option<f64>,
    #[arg(long)]
    pub spectral_panels: Option<usize>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct MaximalArgs {
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    /// `default` or a semicolon-separated list of profiles.
    #[arg(long)]
    pub family: Option<String>,
    /// Number of log-spaced times in (0, 1).
    #[arg(long)]
    pub time_points: Option<usize>,
    #[arg(long)]
    pub ball_panels: Option<usize>,
    #[arg(long)]
    pub spectral_max: Option<f64>,
    #[arg(long)]
    pub spectral_panels: Option<usize>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct SchurArgs {
    #[arg(long)]
    pub a: Option<f64>,
    /// `auto` for `(a - 1)/2`, or a number.
    #[arg(long)]
    pub s: Option<String>,
    /// Number of log-spaced eta points.
    #[arg(long)]
    pub eta_points: Option<usize>,
    #[arg(long)]
    pub eta_min: Option<f64>,
    #[arg(long)]
    pub eta_max: Option<f64>,
    #[arg(long)]
    pub lambda_cut: Option<f64>,
}

/// Reads a config file. A manifest is accepted through its `inputs` object.
pub fn load(path: &Path, kind: &str) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("config {} is not valid JSON: {e}", path.display())))?;
    if let Some(inputs) = value.get("inputs") {
        value = inputs.clone();
    }
    let Value::Object(map) = &value else {
        return Err(Failure::Config(format!("config {} must be a JSON object", path.display())));
    };
    if let Some(k) = map.get("kind") {
        if k.as_str() != Some(kind) {
            return Err(Failure::Config(format!(
                "config {} is for experiment {k}, not {kind}",
                path.display()
            )));
        }
    }
    Ok(value)
}

fn drop_nulls(value: Value) -> Map<String, Value> {
    match value {
        Value::Object(map) => map.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => Map::new(),
    }
}

/// Overlays the flags on the config; flags win.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Value>) -> Result<T, Failure> {
    let mut map = config.cloned().map(drop_nulls).unwrap_or_default();
    let set = serde_json::to_value(flags).map_err(|e| Failure::Config(e.to_string()))?;
    map.extend(drop_nulls(set));
    serde_json::from_value(Value::Object(map)).map_err(|e| Failure::Config(format!("bad config value: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let config = serde_json::json!({"a": 3.0, "s": 0.4, "profile": "heat", "unrelated": 1});
        let flags = ConvergeArgs {
            a: Some(2.0),
            ..Default::default()
        };
        let merged = merge(&flags, Some(&config)).unwrap();
        assert_eq!(merged.a, Some(2.0));
        assert_eq!(merged.s, Some(0.4));
        assert_eq!(merged.profile.as_deref(), Some("heat"));
    }

    #[test]
    fn type_errors_are_config_errors() {
        let config = serde_json::json!({"a": "two"});
        assert!(matches!(
            merge(&ConvergeArgs::default(), Some(&config)),
            Err(Failure::Config(_))
        ));
    }
}
