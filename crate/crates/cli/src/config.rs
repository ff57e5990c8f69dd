//! Run configuration: value grammars, the key=value config file, and the
//! merge of file values with command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use pinney::ode::{FrequencySpec, FrequencyTable, State};
use serde::Serialize;

use crate::error::CliError;

pub const DEFAULT_K: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
pub const DEFAULT_T_END: f64 = 10.0;
pub const DEFAULT_POINTS: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}', expected csv or json")),
        }
    }
}

/// Parses `const:W`, `sin:A,B,C`, `poly:c0,c1,...` or `table:PATH`.
pub fn parse_freq(s: &str) -> Result<FrequencySpec, String> {
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| format!("frequency '{s}' must look like kind:values"))?;
    match kind.trim() {
        "const" => Ok(FrequencySpec::constant(parse_f64(rest)?)),
        "sin" => match parse_list(rest)?.as_slice() {
            [a, b, c] => Ok(FrequencySpec::sinusoidal(*a, *b, *c)),
            _ => Err(format!("sin: needs three values a,b,c, got '{rest}'")),
        },
        "poly" => {
            let coeffs = parse_list(rest)?;
            if coeffs.is_empty() {
                return Err("poly: needs at least one coefficient".into());
            }
            Ok(FrequencySpec::polynomial(coeffs))
        }
        "table" => read_table(Path::new(rest.trim())),
        other => Err(format!("unknown frequency kind '{other}'")),
    }
}

/// CSV with columns `t,omega`; a non-numeric first line is a header.
fn read_table(path: &Path) -> Result<FrequencySpec, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut knots = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("{}: {e}", path.display()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(format!("{}:{line}: expected two columns t,omega", path.display()));
        }
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(t), Ok(w)) => knots.push((t, w)),
            _ if i == 0 => continue,
            _ => return Err(format!("{}:{line}: non-numeric entry", path.display())),
        }
    }
    let table = FrequencyTable::new(knots).map_err(|e| e.to_string())?;
    Ok(FrequencySpec::Tabulated { table })
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("'{}' is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{}' is not finite", s.trim()))
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_f64).collect()
}

/// Parses `t,x,v`.
pub fn parse_state(s: &str) -> Result<State, String> {
    match parse_list(s)?.as_slice() {
        [t, x, v] => Ok(State::new(*t, *x, *v)),
        _ => Err(format!("state '{s}' must be t,x,v")),
    }
}

/// Values read from a config file, keyed by name.
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    entries: BTreeMap<String, String>,
}

/// Keys accepted in a config file.
pub const FILE_KEYS: &[&str] = &[
    "k", "freq", "tol", "quad_tol", "format", "output", "seed", "t_end", "points",
];

impl FileConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("{origin}:{}: expected key = value", i + 1)))?;
            let key = key.trim().replace('-', "_");
            if !FILE_KEYS.contains(&key.as_str()) {
                return Err(CliError::config(format!("{origin}:{}: unknown key '{key}'", i + 1)));
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::config(format!("{origin}:{}: duplicate key '{key}'", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    fn get<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, CliError> {
        self.entries
            .get(key)
            .map(|v| parse(v).map_err(|e| CliError::config(format!("config key '{key}': {e}"))))
            .transpose()
    }
}

/// Options shared by every subcommand, before merging.
#[derive(Debug, Default, Clone)]
pub struct GlobalFlags {
    pub config: Option<PathBuf>,
    pub k: Option<f64>,
    pub freq: Option<FrequencySpec>,
    pub tol: Option<f64>,
    pub quad_tol: Option<f64>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub t_end: Option<f64>,
    pub points: Option<usize>,
}

/// Fully resolved settings of one run. Echoed in JSON reports.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub k: f64,
    pub freq: FrequencySpec,
    pub tol: f64,
    pub quad_tol: f64,
    /// `None` lets the command pick: CSV for trajectories, JSON otherwise.
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub t_end: f64,
    pub points: usize,
}

impl RunConfig {
    /// Flags override file values, which override defaults.
    pub fn resolve(flags: GlobalFlags) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let cfg = RunConfig {
            k: pick(flags.k, file.get("k", parse_f64)?, DEFAULT_K),
            freq: pick(flags.freq, file.get("freq", parse_freq)?, FrequencySpec::constant(1.0)),
            tol: pick(flags.tol, file.get("tol", parse_f64)?, DEFAULT_TOL),
            quad_tol: pick(flags.quad_tol, file.get("quad_tol", parse_f64)?, DEFAULT_QUAD_TOL),
            format: flags.format.or(file.get("format", |s| s.parse())?),
            output: flags.output.or(file.get("output", |s| Ok(PathBuf::from(s)))?),
            seed: pick(
                flags.seed,
                file.get("seed", |s| s.parse::<u64>().map_err(|e| e.to_string()))?,
                0,
            ),
            t_end: pick(flags.t_end, file.get("t_end", parse_f64)?, DEFAULT_T_END),
            points: pick(
                flags.points,
                file.get("points", |s| s.parse::<usize>().map_err(|e| e.to_string()))?,
                DEFAULT_POINTS,
            ),
        };
        if !(cfg.k > 0.0) {
            return Err(CliError::config(format!("k must be positive, got {}", cfg.k)));
        }
        if !(cfg.tol > 0.0) || !(cfg.quad_tol > 0.0) {
            return Err(CliError::config("tol and quad_tol must be positive"));
        }
        if cfg.points < 2 {
            return Err(CliError::config("points must be at least 2"));
        }
        Ok(cfg)
    }

    /// Uniform output grid from `t0` to `t_end`.
    pub fn grid(&self, t0: f64) -> Result<Vec<f64>, CliError> {
        if !(self.t_end > t0) {
            return Err(CliError::config(format!(
                "t_end = {} must exceed the initial time {t0}",
                self.t_end
            )));
        }
        Ok(pinney::ode::uniform_grid(t0, self.t_end, self.points))
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
