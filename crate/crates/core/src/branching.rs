//! Embedded branching processes on `T x Z^d`.
//!
//! A run lives in one percolation configuration (one replica). Each
//! particle explores its own first-visit slab `L_{-N,0}(x)`; that slab
//! projects into the subtree below `pi(x)`, so particles of one generation
//! sit over distinct tree vertices and read disjoint edge sets. The runner
//! checks this structurally and counts violations instead of assuming it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{PercolabError, Result};
use crate::graph::{Family, Fiber, GraphSpec, SiteId, SlabWindow, TreeVertex};
use crate::mc::McConfig;
use crate::records::EstimateRecord;
use crate::sampler::{choice_index, explore_with, sites_by_fiber_at, ExploreOptions, SampleCtx};
use crate::stats::Mean;

pub const DEFAULT_POPULATION_CAP: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Process {
    Z,
    W,
    Y,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchingParams {
    pub family: Family,
    pub k: u32,
    pub d: u32,
    pub p: f64,
    /// Slab depth: `N` for Z, `2rN` for W, `r` for Y.
    pub depth: u32,
    pub generations: u32,
    pub h: Option<[i32; 2]>,
    pub g: Option<[i32; 2]>,
    pub seed: u64,
    pub replica: u64,
}

/// A particle of Z with the index of its parent in the previous generation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Particle {
    pub site: SiteId,
    pub parent: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchingRun {
    pub process: Process,
    pub params: BranchingParams,
    pub generation_sizes: Vec<u64>,
    pub survived: bool,
    /// Offspring count of every parent that was expanded, in order.
    #[serde(skip)]
    pub offspring: Vec<u64>,
    #[serde(skip)]
    pub lineage: Vec<Vec<Particle>>,
    #[serde(skip)]
    pub censored: bool,
    #[serde(skip)]
    pub capped: bool,
    #[serde(skip)]
    pub disjointness_violations: u64,
}

fn check_family(g: &GraphSpec) -> Result<()> {
    if g.family() == Family::Lamplighter {
        return Err(PercolabError::InvalidParameter(
            "embedded branching processes need a product graph (tree or txz)".into(),
        ));
    }
    Ok(())
}

fn lattice(v: &SiteId) -> [i32; 2] {
    match v.fiber {
        Fiber::Lattice(z) => z,
        _ => [0, 0],
    }
}

/// Hit sites on the bottom level of the first-visit slab below `x`,
/// grouped by tree vertex.
fn first_visit_hits(
    ctx: &SampleCtx,
    g: &GraphSpec,
    x: &SiteId,
    depth: u32,
    cfg: &McConfig,
) -> Result<(BTreeMap<TreeVertex, Vec<SiteId>>, bool)> {
    let opts = ExploreOptions::new(SlabWindow::below(depth))
        .budget(cfg.budget)
        .first_visit_stop(true)
        .lattice_bound(cfg.lattice_bound);
    let view = explore_with(ctx, g, x, &opts, &[])?;
    Ok((sites_by_fiber_at(&view, -i64::from(depth)), view.censored))
}

/// Simulates Z with slab depth `n` for `generations` steps.
pub fn run_z(
    g: &GraphSpec,
    p: f64,
    n: u32,
    generations: u32,
    cfg: &McConfig,
    replica: u64,
    population_cap: usize,
) -> Result<BranchingRun> {
    check_family(g)?;
    if n == 0 {
        return Err(PercolabError::InvalidParameter("slab depth N must be >= 1".into()));
    }
    let ctx = SampleCtx::new(cfg.seed, replica, p)?;
    let mut lineage: Vec<Vec<Particle>> = vec![vec![Particle {
        site: g.origin(),
        parent: 0,
    }]];
    let mut offspring = Vec::new();
    let (mut censored, mut capped, mut violations) = (false, false, 0u64);
    let mut key = Vec::with_capacity(128);
    for _ in 0..generations {
        let current = lineage.last().expect("nonempty");
        if current.is_empty() {
            break;
        }
        if current.len() > population_cap {
            capped = true;
            break;
        }
        let mut next = Vec::new();
        for (i, x) in current.iter().enumerate() {
            let (hits, cens) = first_visit_hits(&ctx, g, &x.site, n, cfg)?;
            censored |= cens;
            offspring.push(hits.len() as u64);
            for (v, sites) in hits {
                key.clear();
                x.site.write_bytes(&mut key);
                v.write_bytes(&mut key);
                let pick = choice_index(cfg.seed, replica, &key, sites.len());
                next.push(Particle {
                    site: sites[pick].clone(),
                    parent: i,
                });
            }
        }
        violations += disjointness_violations(current, &next, n);
        lineage.push(next);
    }
    let generation_sizes: Vec<u64> = lineage.iter().map(|g| g.len() as u64).collect();
    Ok(BranchingRun {
        process: Process::Z,
        params: BranchingParams {
            family: g.family(),
            k: g.k(),
            d: g.d(),
            p,
            depth: n,
            generations,
            h: None,
            g: None,
            seed: cfg.seed,
            replica,
        },
        survived: *generation_sizes.last().expect("nonempty") > 0,
        generation_sizes,
        offspring,
        lineage,
        censored,
        capped,
        disjointness_violations: violations,
    })
}

/// Children must lie exactly `depth` levels inside their parent's subtree
/// and no two may share a tree vertex.
fn disjointness_violations(parents: &[Particle], children: &[Particle], depth: u32) -> u64 {
    let mut bad = 0;
    let mut seen = BTreeSet::new();
    for c in children {
        let parent = &parents[c.parent].site.tree;
        if c.site.tree.depth_below(parent) != Some(depth) {
            bad += 1;
        }
        if !seen.insert(&c.site.tree) {
            bad += 1;
        }
    }
    bad
}

/// W from a stored Z trajectory: every `step` generations keep the
/// particles back on the origin's fiber coordinate whose ancestor `step`
/// generations earlier was kept.
pub fn w_from_z(z: &BranchingRun, step: u32) -> Result<BranchingRun> {
    if z.process != Process::Z {
        return Err(PercolabError::InvalidParameter("W is extracted from a Z run".into()));
    }
    if step == 0 {
        return Err(PercolabError::InvalidParameter("W step must be >= 1".into()));
    }
    let origin_fiber = z.lineage[0][0].site.fiber.clone();
    let mut kept: BTreeSet<usize> = BTreeSet::from([0]);
    let mut sizes = vec![1u64];
    let mut offspring = Vec::new();
    let mut gen = step as usize;
    while gen < z.lineage.len() && !kept.is_empty() {
        let mut next = BTreeSet::new();
        let mut per_parent: BTreeMap<usize, u64> = kept.iter().map(|&i| (i, 0)).collect();
        for (i, particle) in z.lineage[gen].iter().enumerate() {
            if particle.site.fiber != origin_fiber {
                continue;
            }
            let mut anc = particle.parent;
            for g in (gen - step as usize + 1..gen).rev() {
                anc = z.lineage[g][anc].parent;
            }
            if let Some(c) = per_parent.get_mut(&anc) {
                *c += 1;
                next.insert(i);
            }
        }
        offspring.extend(per_parent.values());
        sizes.push(next.len() as u64);
        kept = next;
        gen += step as usize;
    }
    let mut params = z.params.clone();
    params.depth = z.params.depth * step;
    params.generations = (z.lineage.len() as u32 - 1) / step;
    Ok(BranchingRun {
        process: Process::W,
        params,
        survived: *sizes.last().expect("nonempty") > 0,
        generation_sizes: sizes,
        offspring,
        lineage: Vec::new(),
        censored: z.censored,
        capped: z.capped,
        disjointness_violations: z.disjointness_violations,
    })
}

/// Histogram of lattice displacements of generation-1 children relative to
/// the root, pooled over runs: the empirical kernel of the projected walk.
pub fn displacement_histogram(runs: &[BranchingRun]) -> BTreeMap<[i32; 2], u64> {
    let mut hist = BTreeMap::new();
    for run in runs {
        if let Some(children) = run.lineage.get(1) {
            let root = lattice(&run.lineage[0][0].site);
            for c in children {
                let z = lattice(&c.site);
                *hist.entry([z[0] - root[0], z[1] - root[1]]).or_insert(0) += 1;
            }
        }
    }
    hist
}

/// Simulates the two-point process `Y^{h,g}` with slab depth `r`.
#[allow(clippy::too_many_arguments)]
pub fn run_y(
    g: &GraphSpec,
    p: f64,
    r: u32,
    h: [i32; 2],
    g2: [i32; 2],
    generations: u32,
    cfg: &McConfig,
    replica: u64,
    population_cap: usize,
) -> Result<BranchingRun> {
    if g.family() != Family::TreeTimesZd {
        return Err(PercolabError::InvalidParameter("Y needs a txz graph".into()));
    }
    if r == 0 {
        return Err(PercolabError::InvalidParameter("slab depth r must be >= 1".into()));
    }
    for z in [h, g2] {
        if g.d() == 1 && z[1] != 0 {
            return Err(PercolabError::InvalidParameter(
                "second lattice coordinate must be 0 when d = 1".into(),
            ));
        }
    }
    let ctx = SampleCtx::new(cfg.seed, replica, p)?;
    let mut current: Vec<TreeVertex> = vec![TreeVertex::origin()];
    let mut sizes = vec![1u64];
    let mut offspring = Vec::new();
    let (mut censored, mut capped) = (false, false);
    for _ in 0..generations {
        if current.is_empty() {
            break;
        }
        if current.len() > population_cap {
            capped = true;
            break;
        }
        let mut next = Vec::new();
        for u in &current {
            let mut reached: Vec<BTreeSet<TreeVertex>> = Vec::with_capacity(2);
            for z in [h, g2] {
                let x = SiteId {
                    tree: u.clone(),
                    fiber: Fiber::Lattice(z),
                };
                let (hits, cens) = first_visit_hits(&ctx, g, &x, r, cfg)?;
                censored |= cens;
                reached.push(
                    hits.into_iter()
                        .filter(|(_, sites)| sites.iter().any(|s| s.fiber == x.fiber))
                        .map(|(v, _)| v)
                        .collect(),
                );
            }
            let both: Vec<TreeVertex> = reached[0].intersection(&reached[1]).cloned().collect();
            offspring.push(both.len() as u64);
            next.extend(both);
        }
        sizes.push(next.len() as u64);
        current = next;
    }
    Ok(BranchingRun {
        process: Process::Y,
        params: BranchingParams {
            family: g.family(),
            k: g.k(),
            d: g.d(),
            p,
            depth: r,
            generations,
            h: Some(h),
            g: Some(g2),
            seed: cfg.seed,
            replica,
        },
        survived: *sizes.last().expect("nonempty") > 0,
        generation_sizes: sizes,
        offspring,
        lineage: Vec::new(),
        censored,
        capped,
        disjointness_violations: 0,
    })
}

/// Many independent runs (one replica each).
pub fn run_z_many(
    g: &GraphSpec,
    p: f64,
    n: u32,
    generations: u32,
    cfg: &McConfig,
    population_cap: usize,
) -> Result<Vec<BranchingRun>> {
    cfg.replicate(|r| run_z(g, p, n, generations, cfg, r, population_cap))
}

#[allow(clippy::too_many_arguments)]
pub fn run_y_many(
    g: &GraphSpec,
    p: f64,
    r: u32,
    h: [i32; 2],
    g2: [i32; 2],
    generations: u32,
    cfg: &McConfig,
    population_cap: usize,
) -> Result<Vec<BranchingRun>> {
    cfg.replicate(|rep| run_y(g, p, r, h, g2, generations, cfg, rep, population_cap))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    /// Fraction of runs alive at the horizon.
    pub fraction: Mean,
    /// `1 - q` with `q` the smallest fixed point of the empirical offspring
    /// generating function.
    pub fixed_point: f64,
    pub offspring_mean: Mean,
    /// Empirical offspring distribution, index = number of children.
    pub offspring_pmf: Vec<f64>,
}

pub fn survival_probability(runs: &[BranchingRun]) -> Result<SurvivalEstimate> {
    if runs.is_empty() {
        return Err(PercolabError::InvalidParameter("need at least one run".into()));
    }
    let alive = runs.iter().filter(|r| r.survived).count() as u64;
    let counts: Vec<u64> = runs.iter().flat_map(|r| r.offspring.iter().copied()).collect();
    let offspring_mean = Mean::of_counts(&counts);
    let max = counts.iter().copied().max().unwrap_or(0) as usize;
    let mut pmf = vec![0.0; max + 1];
    for &c in &counts {
        pmf[c as usize] += 1.0;
    }
    if !counts.is_empty() {
        for x in &mut pmf {
            *x /= counts.len() as f64;
        }
    }
    Ok(SurvivalEstimate {
        fraction: Mean::binomial(alive, runs.len() as u64),
        fixed_point: gw_survival(&pmf),
        offspring_mean,
        offspring_pmf: pmf,
    })
}

/// Survival probability of a Galton-Watson process with offspring law
/// `pmf`: `1 - q`, `q` the smallest fixed point of the generating function.
pub fn gw_survival(pmf: &[f64]) -> f64 {
    let mean: f64 = pmf.iter().enumerate().map(|(j, w)| j as f64 * w).sum();
    if pmf.is_empty() || mean <= 1.0 + 1e-12 {
        return if pmf.get(1).is_some_and(|&w| w >= 1.0 - 1e-15) { 1.0 } else { 0.0 };
    }
    let f = |s: f64| pmf.iter().rev().fold(0.0, |acc, &w| acc * s + w);
    let mut q = 0.0;
    for _ in 0..100_000 {
        let next = f(q);
        if (next - q).abs() < 1e-15 {
            q = next;
            break;
        }
        q = next;
    }
    1.0 - q
}

/// Mean over surviving runs and generations of `size(t+1)/size(t)`.
pub fn growth_ratio(runs: &[BranchingRun]) -> Mean {
    let mut ratios = Vec::new();
    for run in runs.iter().filter(|r| r.survived) {
        for w in run.generation_sizes.windows(2) {
            if w[0] > 0 {
                ratios.push(w[1] as f64 / w[0] as f64);
            }
        }
    }
    Mean::of(&ratios)
}

/// Whether the first-visit slab below the origin reaches the fiber of the
/// fixed depth-`n` descendant. Returns `(hit, censored)`.
pub fn first_visit_fiber_outcome(
    g: &GraphSpec,
    p: f64,
    n: u32,
    cfg: &McConfig,
    replica: u64,
) -> Result<(bool, bool)> {
    let ctx = SampleCtx::new(cfg.seed, replica, p)?;
    let target = g.descendant_fiber_representative(&g.origin(), n, 0)?.tree;
    let (hits, censored) = first_visit_hits(&ctx, g, &g.origin(), n, cfg)?;
    Ok((hits.contains_key(&target), censored))
}

/// Probability of the event that the origin reaches a fixed depth-`n`
/// fiber by a path meeting level `-n` only at its end.
pub fn estimate_first_visit_fiber(g: &GraphSpec, p: f64, n: u32, cfg: &McConfig) -> Result<EstimateRecord> {
    if n == 0 {
        return Err(PercolabError::InvalidParameter("depth must be >= 1".into()));
    }
    let outs = cfg.replicate(|r| first_visit_fiber_outcome(g, p, n, cfg, r))?;
    let hits = outs.iter().filter(|o| o.0).count() as u64;
    let censored = outs.iter().filter(|o| o.1).count() as u64;
    Ok(EstimateRecord::new("B", g, p, cfg)
        .n(i64::from(n))
        .window(SlabWindow::below(n))
        .estimate(Mean::binomial(hits, outs.len() as u64))
        .censoring(censored, cfg.censor_threshold))
}
