//! Subcommand parameters. Every field is optional so that a JSON config
//! file and command-line flags can be layered; flags win.

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const CONFIG_VERSION: u64 = 1;

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessArgs {
    /// concentration, blowup or noncompact
    #[arg(long)]
    pub family: Option<String>,
    /// compactness or boundedness (concentration family only)
    #[arg(long)]
    pub regime: Option<String>,
    /// theorem_form, exact_growth or exp_minus_one
    #[arg(long)]
    pub g: Option<String>,
    /// Energy budget K (energy 2 pi K)
    #[arg(long)]
    pub k: Option<f64>,
    /// Denominator power for exact_growth
    #[arg(long)]
    pub p: Option<f64>,
    /// Exponent for exp_minus_one
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of terms
    #[arg(long)]
    pub n: Option<usize>,
    /// geometric or linear
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuArgs {
    /// Values of n = h^2, as `a..b` or a comma list
    #[arg(long)]
    pub h_sq: Option<String>,
    /// Extra indices beyond n
    #[arg(long)]
    pub padding: Option<usize>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadtmArgs {
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub h_min: Option<f64>,
    #[arg(long)]
    pub h_max: Option<f64>,
    #[arg(long)]
    pub h_step: Option<f64>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyArgs {
    /// moser, log_cap, random, near_extremizer, perturbed or file
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Cap height for log_cap
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub index: Option<u64>,
    /// Tail fraction, in (2/3, 1)
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Profile JSON for `--profile file`
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundArgs {
    /// cubic, exp_subcritical, exp_damped or power
    #[arg(long)]
    pub f: Option<String>,
    #[arg(long)]
    pub kappa0: Option<f64>,
    /// Exponent for power
    #[arg(long)]
    pub q: Option<f64>,
    /// Comma list of c values
    #[arg(long)]
    pub c_grid: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    /// exact_growth, exp_minus_one, theorem_form or mass
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the per-sample log
    #[arg(long)]
    pub samples_csv: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeArgs {
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportArgs {
    /// Directory holding run directories
    #[arg(long)]
    pub dir: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

/// Config file layout: a version tag plus one optional section per command.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: u64,
    #[serde(default)]
    pub witness: Option<Value>,
    #[serde(default)]
    pub mu: Option<Value>,
    #[serde(default)]
    pub radtm: Option<Value>,
    #[serde(default)]
    pub certify: Option<Value>,
    #[serde(default)]
    pub ground: Option<Value>,
    #[serde(default)]
    pub verify: Option<Value>,
    #[serde(default)]
    pub bridge: Option<Value>,
    #[serde(default)]
    pub report: Option<Value>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: ConfigFile = serde_json::from_str(text).map_err(|e| format!("config: {e}"))?;
        if cfg.version != CONFIG_VERSION {
            return Err(format!("config: unsupported version {} (expected {CONFIG_VERSION})", cfg.version));
        }
        Ok(cfg)
    }

    pub fn section(&self, command: &str) -> Option<&Value> {
        match command {
            "witness" => self.witness.as_ref(),
            "mu" => self.mu.as_ref(),
            "radtm" => self.radtm.as_ref(),
            "certify" => self.certify.as_ref(),
            "ground" => self.ground.as_ref(),
            "verify" => self.verify.as_ref(),
            "bridge" => self.bridge.as_ref(),
            "report" => self.report.as_ref(),
            _ => None,
        }
    }
}

/// Overlay the flags that were given on top of the file section.
pub fn layer<T: Serialize + DeserializeOwned>(flags: &T, file: Option<&Value>, command: &str) -> Result<T, String> {
    let mut merged = match file {
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err(format!("config: section `{command}` must be an object")),
        None => Map::new(),
    };
    if let Value::Object(given) = serde_json::to_value(flags).map_err(|e| e.to_string())? {
        for (k, v) in given {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| format!("config section `{command}`: {e}"))
}

/// `a..b` (inclusive) or `a,b,c`.
pub fn parse_int_list(s: &str) -> Result<Vec<usize>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| format!("bad range start in `{s}`"))?;
        let b: usize = b.trim().parse().map_err(|_| format!("bad range end in `{s}`"))?;
        if a > b {
            return Err(format!("empty range `{s}`"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("bad integer `{x}`")))
        .collect()
}

pub fn parse_float_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| format!("bad number `{x}`")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = serde_json::json!({"h_sq": "2..4", "padding": 10});
        let flags = MuArgs {
            padding: Some(30),
            ..Default::default()
        };
        let m = layer(&flags, Some(&file), "mu").unwrap();
        assert_eq!(m.h_sq.as_deref(), Some("2..4"));
        assert_eq!(m.padding, Some(30));
    }

    #[test]
    fn unknown_keys_rejected() {
        let file = serde_json::json!({"h_sq": "2..4", "bogus": 1});
        assert!(layer(&MuArgs::default(), Some(&file), "mu").is_err());
        assert!(ConfigFile::parse(r#"{"version": 1, "extra": {}}"#).is_err());
        assert!(ConfigFile::parse(r#"{"version": 2}"#).is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_int_list("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_int_list("3, 7").unwrap(), vec![3, 7]);
        assert!(parse_int_list("5..2").is_err());
        assert_eq!(parse_float_list("0.5,1,2").unwrap(), vec![0.5, 1.0, 2.0]);
    }
}
