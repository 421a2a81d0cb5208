//! Command-line options, key-value config files and grid parsing.

use clap::{Parser, ValueEnum};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "gammaflag", version, about = "Gamma conjecture I checks for flag varieties", args_override_self = true)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[command(flatten)]
    pub run: RunConfig,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Root data, W^P, dimension, c1 pairings and the β∨ multiset.
    Describe,
    /// Spectrum of c1⋆ and the Conjecture O certificate.
    Spectra,
    /// The Schubert positive point.
    PositivePoint,
    /// Mirror critical point against E_O, with I^B values on the ℏ grid.
    Mirror,
    /// I^A against I^B on the ℏ grid.
    Integrals,
    /// Gamma class and the limit of the normalized J-function.
    Gamma,
    /// Asymptotic class membership of the integral-backed flat section.
    Asymptotics,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(clap::Args, Debug, Clone)]
pub struct RunConfig {
    /// Space label (P2, Gr24, Fl3, B2:1) or a type and rank such as A3 with --ip.
    pub label: Option<String>,
    #[arg(long)]
    pub space: Option<String>,
    /// 1-based simple roots of the Levi, comma separated; may be empty.
    #[arg(long)]
    pub ip: Option<String>,
    /// Quantum parameters q_i on the divisors.
    #[arg(long)]
    pub q: Option<String>,
    /// Mirror torus values α_i(t) on the divisors; defaults to --q.
    #[arg(long)]
    pub t: Option<String>,
    #[arg(long = "hbar-grid", alias = "hbar")]
    pub hbar_grid: Option<String>,
    #[arg(long = "s-grid")]
    pub s_grid: Option<String>,
    /// Values α∨_j(h) of the equivariant parameter.
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
    /// Series order of the quantum differential equation.
    #[arg(long)]
    pub order: Option<usize>,
    /// Tolerance of the requested check.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for two-column plot data files.
    #[arg(long = "emit-plot-data")]
    pub emit_plot_data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Key-value file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Keys accepted in config files.
pub const CONFIG_KEYS: &[&str] =
    &["space", "ip", "q", "t", "hbar-grid", "s-grid", "h", "order", "tol", "seed", "emit-plot-data", "format"];

/// Reads `key = value` lines, skipping blanks and `#` comments, into `--key=value` arguments.
pub fn config_args(text: &str) -> Result<Vec<String>, String> {
    let mut out = vec![];
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key = value", n + 1))?;
        let k = k.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&k.as_str()) {
            return Err(format!("config line {}: unknown key '{k}'", n + 1));
        }
        out.push(format!("--{k}={}", v.trim()));
    }
    Ok(out)
}

/// Splices config-file arguments in front of the command-line arguments.
pub fn expand_args(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    let mut it = args.iter().enumerate();
    while let Some((i, a)) = it.next() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = args.get(i + 1).cloned();
            it.next();
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    // Config values come first so that later command-line flags override them.
    let mut out = args[..1.min(args.len())].to_vec();
    out.extend(config_args(&text)?);
    out.extend_from_slice(&args[1.min(args.len())..]);
    Ok(out)
}

fn is_type_rank(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some('A'..='G')) && !c.as_str().is_empty() && c.all(|d| d.is_ascii_digit())
}

pub fn parse_list(name: &str, s: &str) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim())
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<f64>().map_err(|_| format!("--{name}: '{x}' is not a number")))
        .collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err(format!("--{name}: empty list"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(format!("--{name}: values must be finite"));
    }
    Ok(v)
}

impl RunConfig {
    /// The space label understood by the core library.
    pub fn label(&self) -> Result<String, String> {
        let base = self.space.clone().or_else(|| self.label.clone()).ok_or("a space is required (e.g. P1 or --space=Gr24)")?;
        match &self.ip {
            Some(ip) if !base.contains(':') => Ok(format!("{base}:{ip}")),
            Some(_) => Err("--ip conflicts with a label that already lists I_P".into()),
            // A bare type and rank such as `B3` names the full flag variety.
            None if is_type_rank(&base) => Ok(format!("{base}:")),
            None => Ok(base),
        }
    }

    pub fn tol(&self, default: f64) -> Result<f64, String> {
        match self.tol {
            Some(t) if t.is_nan() || t <= 0.0 => Err("--tol must be positive".into()),
            Some(t) => Ok(t),
            None => Ok(default),
        }
    }

    pub fn list_or(&self, name: &str, value: &Option<String>, default: Vec<f64>) -> Result<Vec<f64>, String> {
        match value {
            Some(s) => parse_list(name, s),
            None => Ok(default),
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }
}
