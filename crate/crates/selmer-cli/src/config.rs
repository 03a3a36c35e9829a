//! Survey configuration: defaults, then a flat `key = value` file, then
//! command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use selmer::catalog::{self, CurveSpec};
use selmer::stats::{CHECKPOINT_STEP, EPSILON_STEP};

/// Bad input from the user; exits with status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threads {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyConfig {
    pub curve: Option<String>,
    pub bound: u64,
    pub classes: Option<Vec<u64>>,
    pub checkpoint_step: u64,
    pub epsilon_grid_step: f64,
    pub output_dir: Option<PathBuf>,
    pub threads: Threads,
    /// Baseline override file, applied to the catalog before any work.
    pub overrides: Option<PathBuf>,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        Self {
            curve: None,
            bound: 10_000_000,
            classes: None,
            checkpoint_step: CHECKPOINT_STEP,
            epsilon_grid_step: EPSILON_STEP,
            output_dir: None,
            threads: Threads::Auto,
            overrides: None,
        }
    }
}

/// Flag values; `None` leaves the file or default value in place.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub curve: Option<String>,
    pub bound: Option<u64>,
    pub classes: Option<String>,
    pub step: Option<u64>,
    pub epsilon_step: Option<f64>,
    pub out: Option<PathBuf>,
    pub threads: Option<String>,
    pub overrides: Option<PathBuf>,
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> anyhow::Result<T> {
    v.parse().map_err(|_| bad(format!("{key}: cannot parse '{v}'")))
}

pub fn parse_classes(v: &str) -> anyhow::Result<Vec<u64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num("classes", s))
        .collect()
}

fn parse_threads(v: &str) -> anyhow::Result<Threads> {
    match v.trim() {
        "auto" => Ok(Threads::Auto),
        s => match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Threads::Fixed(n)),
            _ => Err(bad(format!("threads must be a positive integer or 'auto', got '{s}'"))),
        },
    }
}

impl SurveyConfig {
    pub fn set(&mut self, key: &str, value: &str) -> anyhow::Result<()> {
        let value = value.trim();
        match key {
            "curve" => self.curve = Some(value.to_string()),
            "bound" => self.bound = parse_num(key, value)?,
            "classes" => self.classes = Some(parse_classes(value)?),
            "checkpoint_step" | "step" => self.checkpoint_step = parse_num(key, value)?,
            "epsilon_grid_step" => self.epsilon_grid_step = parse_num(key, value)?,
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "threads" => self.threads = parse_threads(value)?,
            "overrides" => self.overrides = Some(PathBuf::from(value)),
            _ => return Err(bad(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn parse_file(text: &str) -> anyhow::Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected key = value, got '{raw}'", i + 1)))?;
            cfg.set(k.trim(), v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, flags: &Overrides) -> anyhow::Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| bad(format!("{}: {e}", p.display())))?;
                Self::parse_file(&text)?
            }
            None => Self::default(),
        };
        if let Some(c) = &flags.curve {
            cfg.curve = Some(c.clone());
        }
        if let Some(b) = flags.bound {
            cfg.bound = b;
        }
        if let Some(c) = &flags.classes {
            cfg.classes = Some(parse_classes(c)?);
        }
        if let Some(s) = flags.step {
            cfg.checkpoint_step = s;
        }
        if let Some(e) = flags.epsilon_step {
            cfg.epsilon_grid_step = e;
        }
        if let Some(o) = &flags.out {
            cfg.output_dir = Some(o.clone());
        }
        if let Some(t) = &flags.threads {
            cfg.threads = parse_threads(t)?;
        }
        if let Some(o) = &flags.overrides {
            cfg.overrides = Some(o.clone());
        }
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> anyhow::Result<()> {
        if self.bound == 0 {
            return Err(bad("bound must be positive"));
        }
        if self.bound >= u32::MAX as u64 {
            return Err(bad(format!("bound {} is beyond the sieve range", self.bound)));
        }
        if self.checkpoint_step == 0 {
            return Err(bad("checkpoint_step must be positive"));
        }
        if !(self.epsilon_grid_step > 0.0 && self.epsilon_grid_step.is_finite()) {
            return Err(bad("epsilon_grid_step must be positive"));
        }
        Ok(())
    }

    /// Every catalogued curve, with the override file applied.
    pub fn catalog(&self) -> anyhow::Result<Vec<CurveSpec>> {
        let mut curves = catalog::all_curves();
        if let Some(p) = &self.overrides {
            let text = std::fs::read_to_string(p).map_err(|e| bad(format!("{}: {e}", p.display())))?;
            catalog::apply_overrides(&mut curves, &text)?;
        }
        Ok(curves)
    }

    /// The configured curve; required by most commands.
    pub fn curve_spec(&self) -> anyhow::Result<CurveSpec> {
        let label = self.curve.as_deref().ok_or_else(|| bad("no curve given (--curve or 'curve =')"))?;
        self.catalog()?
            .into_iter()
            .find(|c| c.label == label)
            .ok_or_else(|| selmer::Error::NotInCatalog(label.to_string()).into())
    }

    /// The configured curve, or all of them when none is set.
    pub fn curve_specs(&self) -> anyhow::Result<Vec<CurveSpec>> {
        match &self.curve {
            Some(_) => Ok(vec![self.curve_spec()?]),
            None => self.catalog(),
        }
    }

    pub fn survey_options(&self) -> selmer::survey::SurveyOptions {
        selmer::survey::SurveyOptions {
            bound: self.bound,
            classes: self.classes.clone(),
            checkpoint_step: self.checkpoint_step,
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let cfg = SurveyConfig::parse_file(
            "# run\ncurve = 14a1\nbound = 200000\nclasses = 1, 15\nthreads = 3\ncheckpoint_step=20000 # finer\n",
        )
        .unwrap();
        assert_eq!(cfg.curve.as_deref(), Some("14a1"));
        assert_eq!(cfg.classes, Some(vec![1, 15]));
        assert_eq!(cfg.threads, Threads::Fixed(3));
        assert_eq!(cfg.checkpoint_step, 20_000);

        let dir = std::env::temp_dir().join(format!("selmer-cfg-{}", std::process::id()));
        std::fs::write(&dir, "curve = 14a1\nbound = 200000\n").unwrap();
        let flags = Overrides {
            bound: Some(50_000),
            ..Default::default()
        };
        let merged = SurveyConfig::load(Some(&dir), &flags).unwrap();
        std::fs::remove_file(&dir).unwrap();
        assert_eq!(merged.bound, 50_000);
        assert_eq!(merged.curve.as_deref(), Some("14a1"));
    }

    #[test]
    fn rejects_bad_input() {
        for text in ["bogus = 1", "bound = ten", "threads = 0", "no equals sign"] {
            let err = SurveyConfig::parse_file(text).unwrap_err();
            assert!(err.downcast_ref::<ConfigError>().is_some(), "{text}");
        }
        let flags = Overrides {
            step: Some(0),
            ..Default::default()
        };
        assert!(SurveyConfig::load(None, &flags).is_err());
    }
}
