//! Run configuration: a flat `key = value` file, then command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use qcwork::operators::DriveProtocol;
use qcwork::semiclassical::ScanPolicy;
use qcwork::workstats::eta_grid;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum DimField {
    Fixed(usize),
    Named(String),
}

/// Keys accepted in a config file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mass: Option<f64>,
    omega: Option<f64>,
    drag_speed: Option<f64>,
    pre_duration: Option<f64>,
    duration: Option<f64>,
    beta: Option<f64>,
    hbar: Option<f64>,
    eta_min: Option<f64>,
    eta_max: Option<f64>,
    eta_count: Option<usize>,
    dim: Option<DimField>,
    steps: Option<usize>,
    samples: Option<usize>,
    seed: Option<u64>,
    hbars: Option<Vec<f64>>,
    degree: Option<usize>,
    dim_factor: Option<f64>,
    max_dim: Option<usize>,
    grid_half_width: Option<f64>,
    grid_points: Option<usize>,
    out: Option<PathBuf>,
    format: Option<Format>,
}

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default, Args)]
pub struct CommonArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta_max: Option<f64>,
    #[arg(long)]
    pub eta_count: Option<usize>,
    /// Fock dimension, or `auto`.
    #[arg(long)]
    pub dim: Option<String>,
    /// Propagator time slices over [0, τ].
    #[arg(long)]
    pub steps: Option<usize>,
    /// Monte Carlo samples.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub mass: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub drag_speed: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub pre_duration: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub duration: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub hbar: Option<f64>,
    /// Comma-separated, strictly descending ℏ ladder for scans.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub hbars: Option<Vec<f64>>,
    /// Polynomial degree of the ℏ fit.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Half-width of the square phase-space grid in scaled units.
    #[arg(long, allow_hyphen_values = true)]
    pub grid_half_width: Option<f64>,
    /// Grid points per axis.
    #[arg(long)]
    pub grid_points: Option<usize>,
}

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub protocol: DriveProtocol,
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_count: usize,
    /// `None` selects the automatic truncation.
    pub dim: Option<usize>,
    pub steps: usize,
    pub samples: usize,
    pub seed: u64,
    pub scan: ScanPolicy,
    pub grid_half_width: f64,
    pub grid_points: usize,
    pub out: PathBuf,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            protocol: DriveProtocol::fig1(),
            eta_min: -4.0,
            eta_max: 4.0,
            eta_count: 161,
            dim: None,
            steps: 1000,
            samples: 1_000_000,
            seed: 20_240_601,
            scan: ScanPolicy::default(),
            grid_half_width: 8.0,
            grid_points: 512,
            out: PathBuf::from("."),
            format: Format::Csv,
        }
    }
}

fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn parse_dim(s: &str) -> Result<Option<usize>, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    s.parse::<usize>().map(Some).map_err(|_| format!("dim must be `auto` or a positive integer, got `{s}`"))
}

impl RunConfig {
    /// Defaults, then the config file, then flags.
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut text = String::new();
        let mut source = None;
        if let Some(path) = &args.config {
            text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let file: FileConfig = toml::from_str(&text).map_err(|e| {
                let line = e
                    .span()
                    .map(|s| text[..s.start].lines().count().max(1))
                    .map(|l| format!(":{l}"))
                    .unwrap_or_default();
                CliError::Config(format!("{}{line}: {}", path.display(), e.message()))
            })?;
            cfg.apply_file(file).map_err(|(key, msg)| locate(path, &text, key, msg))?;
            source = Some(path.clone());
        }
        cfg.apply_flags(args).map_err(|(key, msg)| CliError::Config(format!("--{}: {msg}", key.replace('_', "-"))))?;
        cfg.validate().map_err(|(key, msg)| match &source {
            Some(path) if line_of(&text, key).is_some() => locate(path, &text, key, msg),
            _ => CliError::Config(format!("{key}: {msg}")),
        })?;
        Ok(cfg)
    }

    fn apply_file(&mut self, f: FileConfig) -> Result<(), (&'static str, String)> {
        let p = &mut self.protocol;
        set(&mut p.mass, f.mass);
        set(&mut p.omega, f.omega);
        set(&mut p.drag_speed, f.drag_speed);
        set(&mut p.pre_duration, f.pre_duration);
        set(&mut p.duration, f.duration);
        set(&mut p.beta, f.beta);
        set(&mut p.hbar, f.hbar);
        set(&mut self.eta_min, f.eta_min);
        set(&mut self.eta_max, f.eta_max);
        set(&mut self.eta_count, f.eta_count);
        match f.dim {
            Some(DimField::Fixed(n)) => self.dim = Some(n),
            Some(DimField::Named(s)) => self.dim = parse_dim(&s).map_err(|m| ("dim", m))?,
            None => {}
        }
        set(&mut self.steps, f.steps);
        set(&mut self.samples, f.samples);
        set(&mut self.seed, f.seed);
        set(&mut self.scan.hbars, f.hbars);
        set(&mut self.scan.degree, f.degree);
        set(&mut self.scan.dim_factor, f.dim_factor);
        set(&mut self.scan.max_dim, f.max_dim);
        set(&mut self.grid_half_width, f.grid_half_width);
        set(&mut self.grid_points, f.grid_points);
        set(&mut self.out, f.out);
        set(&mut self.format, f.format);
        Ok(())
    }

    fn apply_flags(&mut self, a: &CommonArgs) -> Result<(), (&'static str, String)> {
        let p = &mut self.protocol;
        set(&mut p.mass, a.mass);
        set(&mut p.omega, a.omega);
        set(&mut p.drag_speed, a.drag_speed);
        set(&mut p.pre_duration, a.pre_duration);
        set(&mut p.duration, a.duration);
        set(&mut p.beta, a.beta);
        set(&mut p.hbar, a.hbar);
        set(&mut self.eta_min, a.eta_min);
        set(&mut self.eta_max, a.eta_max);
        set(&mut self.eta_count, a.eta_count);
        if let Some(s) = &a.dim {
            self.dim = parse_dim(s).map_err(|m| ("dim", m))?;
        }
        set(&mut self.steps, a.steps);
        set(&mut self.samples, a.samples);
        set(&mut self.seed, a.seed);
        set(&mut self.scan.hbars, a.hbars.clone());
        set(&mut self.scan.degree, a.degree);
        set(&mut self.grid_half_width, a.grid_half_width);
        set(&mut self.grid_points, a.grid_points);
        set(&mut self.out, a.out.clone());
        set(&mut self.format, a.format);
        Ok(())
    }

    fn validate(&mut self) -> Result<(), (&'static str, String)> {
        let p = &self.protocol;
        for (key, v, min_ok) in [
            ("mass", p.mass, false),
            ("omega", p.omega, false),
            ("beta", p.beta, false),
            ("hbar", p.hbar, false),
            ("duration", p.duration, false),
            ("pre_duration", p.pre_duration, true),
        ] {
            let ok = v.is_finite() && (v > 0.0 || (min_ok && v == 0.0));
            if !ok {
                let bound = if min_ok { ">= 0" } else { "> 0" };
                return Err((key, format!("must be finite and {bound}, got {v}")));
            }
        }
        if !p.drag_speed.is_finite() {
            return Err(("drag_speed", "must be finite".into()));
        }
        if self.eta_count < 3 {
            return Err(("eta_count", format!("must be at least 3, got {}", self.eta_count)));
        }
        if !(self.eta_min.is_finite() && self.eta_max.is_finite() && self.eta_min < self.eta_max) {
            return Err(("eta_min", format!("need eta_min < eta_max, got {} and {}", self.eta_min, self.eta_max)));
        }
        if let Some(n) = self.dim {
            if n < 2 {
                return Err(("dim", format!("must be at least 2, got {n}")));
            }
        }
        if self.steps == 0 {
            return Err(("steps", "must be positive".into()));
        }
        if self.grid_points < qcwork::wigner::MIN_GRID_POINTS {
            return Err(("grid_points", format!("must be at least {}", qcwork::wigner::MIN_GRID_POINTS)));
        }
        if !(self.grid_half_width.is_finite() && self.grid_half_width > 0.0) {
            return Err(("grid_half_width", "must be finite and > 0".into()));
        }
        self.scan.steps = self.steps;
        Ok(())
    }

    pub fn etas(&self) -> Vec<f64> {
        // Validated above, so the grid cannot fail.
        eta_grid(self.eta_min, self.eta_max, self.eta_count).unwrap_or_default()
    }

    pub fn dimension(&self) -> usize {
        self.dim.unwrap_or_else(|| qcwork::operators::auto_dimension(&self.protocol))
    }

    /// `key = value` lines describing every resolved setting.
    pub fn header_lines(&self) -> Vec<(String, String)> {
        let p = &self.protocol;
        let g = |v: f64| crate::output::fmt_f64(v);
        let mut out = vec![
            ("mass", g(p.mass)),
            ("omega", g(p.omega)),
            ("drag_speed", g(p.drag_speed)),
            ("pre_duration", g(p.pre_duration)),
            ("duration", g(p.duration)),
            ("beta", g(p.beta)),
            ("hbar", g(p.hbar)),
            ("eta_min", g(self.eta_min)),
            ("eta_max", g(self.eta_max)),
            ("eta_count", self.eta_count.to_string()),
            ("dim", self.dim.map_or_else(|| format!("auto ({})", self.dimension()), |n| n.to_string())),
            ("steps", self.steps.to_string()),
            ("samples", self.samples.to_string()),
            ("seed", self.seed.to_string()),
            (
                "hbars",
                self.scan.hbars.iter().map(|&h| g(h)).collect::<Vec<_>>().join(","),
            ),
            ("degree", self.scan.degree.to_string()),
            ("dim_factor", g(self.scan.dim_factor)),
            ("max_dim", self.scan.max_dim.to_string()),
            ("grid_half_width", g(self.grid_half_width)),
            ("grid_points", self.grid_points.to_string()),
            ("format", self.format.to_string()),
        ];
        out.iter_mut().map(|(k, v)| (k.to_string(), std::mem::take(v))).collect()
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn locate(path: &Path, text: &str, key: &str, msg: String) -> CliError {
    match line_of(text, key) {
        Some(line) => CliError::Config(format!("{}:{line}: {key}: {msg}", path.display())),
        None => CliError::Config(format!("{}: {key}: {msg}", path.display())),
    }
}
