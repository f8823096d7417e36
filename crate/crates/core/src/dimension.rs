//! Level-cover counts of the boundary limit set and the dimension fit.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{PercolabError, Result};
use crate::graph::{Family, GraphSpec, SlabWindow, TreeVertex};
use crate::mc::McConfig;
use crate::records::EstimateRecord;
use crate::sampler::{explore_nested_slabs, explore_with, ExploreOptions, NestedView, SampleCtx};
use crate::stats::{fit_line, LinearFit, Mean};

/// Default minimum survival rate before cover statistics are flagged.
pub const DEFAULT_SURVIVAL_FLOOR: f64 = 0.01;

/// Replicas drawn per batch while collecting survivors.
const BATCH: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverCount {
    pub n: u32,
    pub count: u64,
    pub survived: bool,
}

impl CoverCount {
    pub fn series(view: &NestedView) -> Vec<CoverCount> {
        let survived = view.survived();
        view.cover
            .iter()
            .enumerate()
            .map(|(n, &count)| CoverCount {
                n: n as u32,
                count,
                survived,
            })
            .collect()
    }
}

/// Cover counts `count(0..=n_max)` of one replica.
pub fn cover_outcome(g: &GraphSpec, p: f64, n_max: u32, cfg: &McConfig, replica: u64) -> Result<NestedView> {
    let ctx = SampleCtx::new(cfg.seed, replica, p)?;
    explore_nested_slabs(&ctx, g, &g.origin(), n_max, cfg.budget, cfg.lattice_bound)
}

/// First depth where one replica's covers fail to refine.
///
/// A depth-`(n+1)` covered vertex is entered from its parent's fiber, so
/// the parent is reached on level `-n` inside `L_{-n-1,0}`. On the tree
/// that path cannot dip below `-n` first, so the parent is covered at
/// depth `n` and `count(n+1) <= (k-1) count(n)`; both are checked exactly.
/// On product graphs only the first statement holds and is checked by
/// re-exploring `L_{-n-1,0}`.
pub fn refinement_violation(
    g: &GraphSpec,
    p: f64,
    cfg: &McConfig,
    replica: u64,
    view: &NestedView,
) -> Result<Option<u32>> {
    let k1 = u64::from(g.k() - 1);
    for n in 0..view.covered.len().saturating_sub(1) {
        let (cur, next) = (&view.covered[n], &view.covered[n + 1]);
        let depth = n as u32 + 1;
        if g.family() == Family::Tree {
            if next.len() as u64 > k1 * cur.len() as u64
                || next.iter().any(|v| cur.binary_search(&v.parent()).is_err())
            {
                return Ok(Some(depth));
            }
            continue;
        }
        if next.is_empty() {
            continue;
        }
        let ctx = SampleCtx::new(cfg.seed, replica, p)?;
        let opts = ExploreOptions::new(SlabWindow::below(depth))
            .budget(cfg.budget)
            .lattice_bound(cfg.lattice_bound);
        let slab = explore_with(&ctx, g, &g.origin(), &opts, &[])?;
        let level: BTreeSet<&TreeVertex> = slab
            .visited()
            .filter(|s| s.height() == -(n as i64))
            .map(|s| &s.tree)
            .collect();
        if next.iter().any(|v| !level.contains(&v.parent())) {
            return Ok(Some(depth));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverStats {
    pub n_max: u32,
    /// Replicas examined to collect the survivors.
    pub attempts: u64,
    pub survivors: u64,
    pub survival: Mean,
    /// Mean `count(n)` over all examined replicas.
    pub unconditional: Vec<Mean>,
    /// Mean `count(n)` over survivors to depth `n_max`.
    pub conditional: Vec<Mean>,
    /// Per-survivor counts, survivor-major.
    pub survivor_counts: Vec<Vec<u64>>,
    pub censored: u64,
    pub warning: Option<String>,
}

impl CoverStats {
    pub fn to_records(&self, g: &GraphSpec, p: f64, cfg: &McConfig) -> Vec<EstimateRecord> {
        (0..=self.n_max)
            .map(|n| {
                let mut r = EstimateRecord::new("cover_count", g, p, cfg)
                    .n(i64::from(n))
                    .window(SlabWindow::below(n))
                    .estimate(self.conditional[n as usize])
                    .censoring(self.censored, cfg.censor_threshold);
                if let Some(w) = &self.warning {
                    r.warn(w.clone());
                }
                r
            })
            .collect()
    }

    /// Mean over survivors of `sum over the depth-n cover of diam^theta`,
    /// with diameters `(k-1)^{-n}`.
    pub fn theta_sums(&self, g: &GraphSpec, theta: f64) -> Vec<Mean> {
        let k1 = f64::from(g.k() - 1);
        (0..=self.n_max as usize)
            .map(|n| self.conditional[n].scaled(k1.powf(-theta * n as f64)))
            .collect()
    }
}

/// Cover counts conditioned on survival to `n_max`, by rejection.
///
/// Replicas are drawn in index order in fixed batches; the first
/// `cfg.samples` survivors are kept, so the result depends only on the
/// seed. Stops after `max_attempts` replicas even if short of survivors.
pub fn cover_counts(
    g: &GraphSpec,
    p: f64,
    n_max: u32,
    cfg: &McConfig,
    survival_floor: f64,
    max_attempts: u64,
) -> Result<CoverStats> {
    if n_max < 2 {
        return Err(PercolabError::InvalidParameter("n_max must be >= 2".into()));
    }
    let width = n_max as usize + 1;
    let mut survivor_counts: Vec<Vec<u64>> = Vec::new();
    let mut all_counts: Vec<Vec<f64>> = vec![Vec::new(); width];
    let mut attempts = 0u64;
    let mut censored = 0u64;
    while (survivor_counts.len() as u64) < cfg.samples && attempts < max_attempts {
        let end = (attempts + BATCH).min(max_attempts);
        let views = cfg.replicate_range(attempts, end, |r| cover_outcome(g, p, n_max, cfg, r))?;
        for v in views {
            attempts += 1;
            if v.censored {
                censored += 1;
            }
            for (n, col) in all_counts.iter_mut().enumerate() {
                col.push(v.cover[n] as f64);
            }
            if v.survived() && !v.censored && (survivor_counts.len() as u64) < cfg.samples {
                survivor_counts.push(v.cover.clone());
            }
            if survivor_counts.len() as u64 == cfg.samples {
                break;
            }
        }
    }
    let survivors = survivor_counts.len() as u64;
    let survival = Mean::binomial(survivors, attempts);
    let unconditional = all_counts.iter().map(|c| Mean::of(c)).collect();
    let conditional = (0..width)
        .map(|n| {
            let col: Vec<u64> = survivor_counts.iter().map(|c| c[n]).collect();
            Mean::of_counts(&col)
        })
        .collect();
    let mut warning = None;
    if survival.value < survival_floor {
        warning = Some(format!(
            "survival rate {:.4} below floor {survival_floor}; raise samples or lower depth",
            survival.value
        ));
    }
    if survivors < cfg.samples {
        let msg = format!("only {survivors} of {} survivors after {attempts} attempts", cfg.samples);
        warning = Some(match warning {
            Some(w) => format!("{w}; {msg}"),
            None => msg,
        });
    }
    Ok(CoverStats {
        n_max,
        attempts,
        survivors,
        survival,
        unconditional,
        conditional,
        survivor_counts,
        censored,
        warning,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub value: f64,
    pub fit_error: f64,
    pub fit: LinearFit,
    pub covers: CoverStats,
}

impl DimensionEstimate {
    pub fn to_record(&self, g: &GraphSpec, p: f64, cfg: &McConfig) -> EstimateRecord {
        let mut r = EstimateRecord::new("dimension", g, p, cfg)
            .n(i64::from(self.covers.n_max))
            .window(SlabWindow::below(self.covers.n_max))
            .estimate(Mean {
                value: self.value,
                stderr: self.fit_error,
                n: self.covers.survivors,
            })
            .censoring(self.covers.censored, cfg.censor_threshold);
        if let Some(w) = &self.covers.warning {
            r.warn(w.clone());
        }
        r
    }
}

/// Slope of `log E[count(n) | survival]` against `n log(k-1)` over the upper
/// half of the depths.
pub fn dimension_from_covers(g: &GraphSpec, covers: CoverStats) -> Result<DimensionEstimate> {
    let lk = g.log_branching();
    let n_max = covers.n_max;
    let from = n_max - n_max / 2;
    let (mut xs, mut ys, mut sig) = (Vec::new(), Vec::new(), Vec::new());
    for n in from..=n_max {
        let m = covers.conditional[n as usize];
        if m.value <= 0.0 {
            continue;
        }
        xs.push(f64::from(n) * lk);
        ys.push(m.value.ln());
        sig.push(m.stderr / m.value);
    }
    let fit = fit_line(&xs, &ys, Some(&sig)).ok_or_else(|| {
        PercolabError::InvalidParameter("no surviving replicas to fit a dimension".into())
    })?;
    Ok(DimensionEstimate {
        value: fit.slope,
        fit_error: fit.slope_se,
        fit,
        covers,
    })
}

pub fn dimension_estimate(
    g: &GraphSpec,
    p: f64,
    n_max: u32,
    cfg: &McConfig,
    survival_floor: f64,
    max_attempts: u64,
) -> Result<DimensionEstimate> {
    let covers = cover_counts(g, p, n_max, cfg, survival_floor, max_attempts)?;
    dimension_from_covers(g, covers)
}

/// `log(p(k-1)) / log(k-1)`, the limit-set dimension on the tree.
pub fn hawkes_dimension(p: f64, k: u32) -> f64 {
    let k1 = f64::from(k - 1);
    (p * k1).ln() / k1.ln()
}
