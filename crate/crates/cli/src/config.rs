use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use percolab_core::{Family, GraphSpec, McConfig};
use serde::Deserialize;

pub const SEED_ENV: &str = "PERCOLAB_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A p-grid given either as `a:b:step` or as an explicit list.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Range(String),
    List(Vec<f64>),
}

/// Every setting, all optional. Read from the JSON config file and from
/// flags; flags win.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// JSON file with any of these settings (snake_case keys).
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// P, E, D, U, Q, B, X, chi, H, beta_star, fiber_tail, fiber_mean,
    /// point_to_fiber or dimension. Comma-separated for sweeps.
    #[arg(long)]
    pub quantity: Option<String>,
    #[arg(long, value_parser = parse_family)]
    pub family: Option<Family>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub d: Option<u32>,
    #[arg(long)]
    pub p: Option<f64>,
    /// `a:b:step`, inclusive of `b`.
    #[arg(long, value_name = "A:B:STEP", value_parser = parse_grid_arg)]
    pub p_grid: Option<GridSpec>,
    /// Depth `n`, the largest depth for series, or the distance `m` for
    /// point_to_fiber.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Level `l` for X.
    #[arg(long, allow_hyphen_values = true)]
    pub level: Option<i64>,
    /// Window bottom `a` for X.
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<i64>,
    /// Window top `b` for X.
    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<i64>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub height_cap: Option<u32>,
    /// Restrict lattice coordinates to the sup-norm ball of this radius.
    #[arg(long)]
    pub lattice_bound: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Share the seed across the p-grid (monotone coupling).
    #[arg(long, action = clap::ArgAction::Set, value_name = "BOOL")]
    pub coupled: Option<bool>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Verification suite: tree-exact, mtp, backscattering, hw,
    /// series-product, point-to-fiber, supermultiplicativity, oracle or all.
    #[arg(long)]
    pub suite: Option<String>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: percolab_core::PercolabError| e.to_string())
}

fn parse_grid_arg(s: &str) -> Result<GridSpec, String> {
    parse_grid(s).map(|_| GridSpec::Range(s.to_string()))
}

/// `a:b:step` to the list `a, a+step, ...` up to `b` inclusive.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("p-grid {s:?} is not of the form a:b:step"));
    }
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("bad number {x:?} in p-grid"));
    let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(step > 0.0) {
        return Err("p-grid step must be positive".into());
    }
    let mut out = Vec::new();
    let mut i = 0u32;
    loop {
        let x = a + f64::from(i) * step;
        if x > b + 1e-9 {
            break;
        }
        out.push((x * 1e12).round() / 1e12);
        i += 1;
        if i > 100_000 {
            return Err("p-grid has more than 100000 points".into());
        }
    }
    Ok(out)
}

impl Settings {
    /// Fills unset fields from `other`.
    fn or(self, other: Settings) -> Settings {
        Settings {
            config: self.config,
            quantity: self.quantity.or(other.quantity),
            family: self.family.or(other.family),
            k: self.k.or(other.k),
            d: self.d.or(other.d),
            p: self.p.or(other.p),
            p_grid: self.p_grid.or(other.p_grid),
            n: self.n.or(other.n),
            lambda: self.lambda.or(other.lambda),
            level: self.level.or(other.level),
            lo: self.lo.or(other.lo),
            hi: self.hi.or(other.hi),
            samples: self.samples.or(other.samples),
            budget: self.budget.or(other.budget),
            height_cap: self.height_cap.or(other.height_cap),
            lattice_bound: self.lattice_bound.or(other.lattice_bound),
            seed: self.seed.or(other.seed),
            workers: self.workers.or(other.workers),
            coupled: self.coupled.or(other.coupled),
            out: self.out.or(other.out),
            format: self.format.or(other.format),
            suite: self.suite.or(other.suite),
        }
    }

    /// Flags, then the config file, then `PERCOLAB_SEED` for the seed.
    pub fn resolve(self) -> Result<Settings, String> {
        let merged = match &self.config {
            Some(path) => {
                let file = read_config(path)?;
                self.or(file)
            }
            None => self,
        };
        let mut merged = merged;
        if merged.seed.is_none() {
            if let Ok(v) = std::env::var(SEED_ENV) {
                merged.seed = Some(
                    v.trim()
                        .parse()
                        .map_err(|_| format!("{SEED_ENV}={v:?} is not an unsigned integer"))?,
                );
            }
        }
        Ok(merged)
    }

    pub fn graph(&self) -> Result<GraphSpec, String> {
        let family = self.family.unwrap_or(Family::Tree);
        let d = self.d.unwrap_or(1);
        GraphSpec::new(family, self.k.unwrap_or(3), d).map_err(|e| e.to_string())
    }

    pub fn mc(&self) -> Result<McConfig, String> {
        let mut cfg = McConfig::default();
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = self.samples {
            cfg.samples = s;
        }
        if let Some(b) = self.budget {
            cfg.budget = b;
        }
        if let Some(c) = self.height_cap {
            cfg.height_cap = c;
        }
        cfg.workers = self.workers;
        cfg.lattice_bound = self.lattice_bound;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<Vec<f64>, String> {
        let grid = match &self.p_grid {
            Some(GridSpec::Range(s)) => parse_grid(s)?,
            Some(GridSpec::List(v)) => v.clone(),
            None => match self.p {
                Some(p) => vec![p],
                None => return Err("sweep needs --p-grid (or --p)".into()),
            },
        };
        if grid.is_empty() {
            return Err("p-grid is empty".into());
        }
        for &p in &grid {
            check_p(p)?;
        }
        Ok(grid)
    }

    pub fn single_p(&self) -> Result<f64, String> {
        if self.p_grid.is_some() {
            return Err("--p-grid belongs to the sweep command; use --p".into());
        }
        let p = self.p.ok_or("missing --p")?;
        check_p(p)?;
        Ok(p)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }
}

fn check_p(p: f64) -> Result<(), String> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(format!("p must lie in [0, 1], got {p}"))
    }
}

fn read_config(path: &Path) -> Result<Settings, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.1:0.3:0.1").unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(parse_grid("0.5:0.5:0.1").unwrap(), vec![0.5]);
        assert!(parse_grid("0.5:0.4:0.1").unwrap().is_empty());
        assert!(parse_grid("0.1:0.3").is_err());
        assert!(parse_grid("0.1:0.3:0").is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let file: Settings = serde_json::from_str(r#"{"k": 4, "p": 0.3, "samples": 50, "p_grid": [0.1, 0.2]}"#).unwrap();
        let flags = Settings {
            p: Some(0.5),
            ..Default::default()
        };
        let s = flags.or(file);
        assert_eq!((s.k, s.p, s.samples), (Some(4), Some(0.5), Some(50)));
        assert_eq!(s.grid().unwrap(), vec![0.1, 0.2]);
        assert!(serde_json::from_str::<Settings>(r#"{"bogus": 1}"#).is_err());
    }
}
