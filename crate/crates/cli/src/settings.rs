//! Effective run settings: built-in defaults, overridden by a flat
//! `key = value` config file, overridden by CLI flags.

use anyhow::{bail, Context, Result};
use depauw_core::sde::{InitialLaw, Integrator, SdeConfig};
use depauw_core::{DepauwField, TorusPoint};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub name: String,
    pub horizon: f64,
    pub max_depth: u32,
    pub nu: f64,
    pub n_paths: usize,
    pub dt_base: f64,
    pub steps_per_stage_min: u32,
    pub seed: u64,
    pub initial: String,
    pub save_times: Vec<f64>,
    pub integrator: String,
    pub bins: usize,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            name: "run".into(),
            horizon: 1.0,
            max_depth: DepauwField::DEFAULT_MAX_DEPTH,
            nu: 0.05,
            n_paths: 10_000,
            dt_base: 1.0 / 1024.0,
            steps_per_stage_min: 8,
            seed: 0,
            initial: "uniform".into(),
            save_times: vec![1.0],
            integrator: "drift_splitting".into(),
            bins: 16,
            out_dir: PathBuf::from("."),
        }
    }
}

impl Settings {
    /// Apply one `key = value` assignment (config file line or override).
    pub fn assign(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "name" => self.name = v.to_string(),
            "horizon" => self.horizon = parse(v, "horizon")?,
            "max_depth" => self.max_depth = parse(v, "max_depth")?,
            "nu" => self.nu = parse(v, "nu")?,
            "n_paths" => self.n_paths = parse(v, "n_paths")?,
            "dt_base" => self.dt_base = parse(v, "dt_base")?,
            "steps_per_stage_min" => self.steps_per_stage_min = parse(v, "steps_per_stage_min")?,
            "seed" => self.seed = parse(v, "seed")?,
            "initial" => self.initial = v.to_string(),
            "save_times" => {
                self.save_times = v
                    .split(',')
                    .map(|s| parse(s.trim(), "save_times entry"))
                    .collect::<Result<Vec<f64>>>()?
            }
            "integrator" => self.integrator = v.to_string(),
            "bins" => self.bins = parse(v, "bins")?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    /// Load `key = value` lines; `#` starts a comment, blank lines ignored.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("{}:{}: expected key = value", path.display(), lineno + 1))?;
            self.assign(key, value)
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        }
        Ok(())
    }

    pub fn field(&self) -> Result<DepauwField> {
        DepauwField::new(self.horizon, self.max_depth).map_err(|e| anyhow::anyhow!("{e}"))
    }

    pub fn integrator(&self) -> Result<Integrator> {
        match self.integrator.as_str() {
            "drift_splitting" => Ok(Integrator::DriftSplitting),
            "euler_maruyama" => Ok(Integrator::EulerMaruyama),
            other => bail!("unknown integrator `{other}` (drift_splitting | euler_maruyama)"),
        }
    }

    pub fn initial_law(&self) -> Result<InitialLaw> {
        if self.initial == "uniform" {
            return Ok(InitialLaw::Uniform);
        }
        if let Some(rest) = self.initial.strip_prefix("point:") {
            let p = parse_point(rest)?;
            return Ok(InitialLaw::Point(p));
        }
        bail!("unknown initial law `{}` (uniform | point:x1,x2)", self.initial)
    }

    pub fn sde_config(&self) -> Result<SdeConfig> {
        let mut cfg = SdeConfig::new(self.nu, self.n_paths, self.dt_base, self.seed)
            .with_initial(self.initial_law()?)
            .with_save_times(self.save_times.clone())
            .with_integrator(self.integrator()?);
        cfg.steps_per_stage_min = self.steps_per_stage_min;
        Ok(cfg)
    }
}

pub fn parse_point(text: &str) -> Result<TorusPoint> {
    let (a, b) = text
        .split_once(',')
        .with_context(|| format!("expected x1,x2 but got `{text}`"))?;
    Ok(TorusPoint::new(
        parse(a.trim(), "x1")?,
        parse(b.trim(), "x2")?,
    ))
}

fn parse<T: std::str::FromStr>(v: &str, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| anyhow::anyhow!("invalid {what} `{v}`: {e}"))
}
