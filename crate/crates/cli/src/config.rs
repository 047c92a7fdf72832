//! Flag and config-file parsing, resolved into a validated [`RunConfig`].

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use superharm_core::quadrature::QuadratureSpec;

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SUPERHARM_OUT";
pub const DEFAULT_OUT: &str = "superharm-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Coeffs,
    Density,
    Kernel,
    Eig,
    Verify,
    Mc,
}

/// Options shared by every subcommand. A config file uses the same keys.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    /// Stability index α in (0, 2]
    #[arg(long, global = true, conflicts_with = "m")]
    pub alpha: Option<f64>,
    /// Integer m with α = 2/m
    #[arg(long, global = true)]
    pub m: Option<u32>,
    /// Domain endpoints
    #[arg(long, global = true, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    pub interval: Option<Vec<f64>>,
    /// Interior nodes on the finest grid
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Relative quadrature tolerance
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Split multiplier M for the subordination integrals
    #[arg(long = "M", global = true)]
    #[serde(rename = "M")]
    pub split_multiplier: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory [env: SUPERHARM_OUT]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,
    /// TOML file with the same keys as the flags; flags take precedence
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Derivative order for `coeffs`
    #[arg(long, global = true)]
    pub q: Option<u32>,
    /// Density arguments
    #[arg(long, global = true, value_delimiter = ',')]
    pub s: Option<Vec<f64>>,
    /// Times
    #[arg(long, global = true, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    /// Distances |x - y|
    #[arg(long, global = true, value_delimiter = ',')]
    pub r: Option<Vec<f64>>,
    /// Laplace variables
    #[arg(long, global = true, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    /// Monte Carlo paths
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Monte Carlo time step
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Monte Carlo horizon
    #[arg(long = "t-max", global = true)]
    pub t_max: Option<f64>,
}

impl Flags {
    fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
    }

    /// Fills unset fields from `other`. `alpha` and `m` travel together so a
    /// flag for one overrides a file value for the other.
    fn or(self, other: Self) -> Self {
        let (alpha, m) = if self.alpha.is_some() || self.m.is_some() { (self.alpha, self.m) } else { (other.alpha, other.m) };
        Self {
            alpha,
            m,
            interval: self.interval.or(other.interval),
            n: self.n.or(other.n),
            tol: self.tol.or(other.tol),
            split_multiplier: self.split_multiplier.or(other.split_multiplier),
            seed: self.seed.or(other.seed),
            out: self.out.or(other.out),
            format: self.format.or(other.format),
            config: self.config,
            q: self.q.or(other.q),
            s: self.s.or(other.s),
            t: self.t.or(other.t),
            r: self.r.or(other.r),
            lambda: self.lambda.or(other.lambda),
            paths: self.paths.or(other.paths),
            dt: self.dt.or(other.dt),
            t_max: self.t_max.or(other.t_max),
        }
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSettings {
    pub paths: usize,
    pub dt: f64,
    pub t_max: f64,
    pub seed: u64,
}

/// Fully resolved configuration. Everything except the output location and
/// formats enters the config hash.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub alpha: f64,
    pub m: Option<u32>,
    /// Set when the index was given as `--m`.
    pub theorem_mode: bool,
    pub interval: [f64; 2],
    pub n: usize,
    pub quad: QuadratureSpec,
    pub q: u32,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mc: McSettings,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub formats: Vec<Format>,
}

impl RunConfig {
    /// Precedence: flags, then the config file, then `SUPERHARM_OUT` for the
    /// output directory, then built-in defaults.
    pub fn resolve(command: Command, flags: Flags, env_out: Option<PathBuf>) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(path) => Flags::load(path)?,
            None => Flags::default(),
        };
        let f = flags.or(file);
        let (alpha, m) = match (f.alpha, f.m) {
            (Some(_), Some(_)) => return Err(CliError::Usage("--alpha and --m are mutually exclusive".into())),
            (Some(a), None) => (a, derived_m(a)),
            (None, Some(m)) => {
                if m == 0 {
                    return Err(CliError::Usage("--m must be positive".into()));
                }
                (2.0 / f64::from(m), Some(m))
            }
            (None, None) => return Err(CliError::Usage("one of --alpha or --m is required".into())),
        };
        let interval = match f.interval.as_deref() {
            None => [-1.0, 1.0],
            Some([a, b]) => [*a, *b],
            Some(_) => return Err(CliError::Usage("--interval takes two endpoints".into())),
        };
        let defaults = QuadratureSpec::default();
        let quad = QuadratureSpec {
            rel_tol: f.tol.unwrap_or(defaults.rel_tol),
            split_multiplier: f.split_multiplier.unwrap_or(defaults.split_multiplier),
            ..defaults
        };
        let t_default = match command {
            Command::Kernel => vec![0.5, 1.0, 2.0],
            _ => vec![1.0],
        };
        let mut formats = f.format.unwrap_or_else(|| vec![Format::Csv, Format::Json]);
        formats.sort_by_key(|f| *f as u8);
        formats.dedup();
        let config = Self {
            command,
            alpha,
            m,
            theorem_mode: f.m.is_some(),
            interval,
            n: f.n.unwrap_or(1023),
            quad,
            q: f.q.unwrap_or(5),
            s: f.s.unwrap_or_else(|| vec![0.5, 1.0, 2.0, 5.0]),
            t: f.t.unwrap_or(t_default),
            r: f.r.unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0]),
            lambda: f.lambda.unwrap_or_else(|| vec![0.1, 1.0, 10.0]),
            mc: McSettings {
                paths: f.paths.unwrap_or(100_000),
                dt: f.dt.unwrap_or(1e-3),
                t_max: f.t_max.unwrap_or(10.0),
                seed: f.seed.unwrap_or(0),
            },
            out: f.out.or(env_out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            formats,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return bad(format!("alpha = {} is outside (0, 2]", self.alpha));
        }
        let [a, b] = self.interval;
        if !(a < b && a.is_finite() && b.is_finite()) {
            return bad(format!("interval ({a}, {b}) is not bounded and non-empty"));
        }
        if self.n < 15 {
            return bad(format!("n = {} is below 15", self.n));
        }
        self.quad.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.q > 30 {
            return bad(format!("q = {} exceeds 30", self.q));
        }
        let positive = |name: &str, v: &[f64]| {
            if v.is_empty() || v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                Err(CliError::Usage(format!("--{name} needs positive finite values")))
            } else {
                Ok(())
            }
        };
        positive("s", &self.s)?;
        positive("t", &self.t)?;
        positive("lambda", &self.lambda)?;
        if self.r.is_empty() || self.r.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return bad("--r needs non-negative finite values".into());
        }
        if self.mc.paths == 0 {
            return bad("--paths must be positive".into());
        }
        if !(self.mc.dt > 0.0 && self.mc.dt <= 1e-2) {
            return bad(format!("dt = {} is outside (0, 1e-2]", self.mc.dt));
        }
        if !(self.mc.t_max > self.mc.dt && self.mc.t_max.is_finite()) {
            return bad("--t-max must exceed dt".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, as lowercase hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn derived_m(alpha: f64) -> Option<u32> {
    let m = (2.0 / alpha).round();
    ((1.0..1e6).contains(&m) && 2.0 / m == alpha).then_some(m as u32)
}
