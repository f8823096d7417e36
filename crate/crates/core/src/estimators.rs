//! Monte-Carlo estimators for slab crossing, level counts, tilted sums and
//! fiber quantities.
//!
//! Each estimator has a per-replica `*_outcome` function. Outcomes are pure
//! functions of `(seed, replica, p)`, so outcomes at two values of `p` with
//! the same seed come from coupled configurations.

use serde::{Deserialize, Serialize};

use crate::error::{PercolabError, Result};
use crate::graph::{GraphSpec, SiteId, SlabWindow, TreeVertex};
use crate::mc::McConfig;
use crate::records::{EstimateRecord, SeriesRecord};
use crate::sampler::{explore_nested_slabs, explore_with, ExploreOptions, FiberIntersection, SampleCtx};
use crate::stats::{fit_line, LinearFit, Mean};

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(PercolabError::InvalidParameter(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn opts(cfg: &McConfig, window: SlabWindow) -> ExploreOptions {
    ExploreOptions::new(window)
        .budget(cfg.budget)
        .lattice_bound(cfg.lattice_bound)
}

fn mean_record(
    quantity: &str,
    g: &GraphSpec,
    p: f64,
    cfg: &McConfig,
    values: &[f64],
    censored: u64,
) -> EstimateRecord {
    EstimateRecord::new(quantity, g, p, cfg)
        .estimate(Mean::of(values))
        .censoring(censored, cfg.censor_threshold)
}

fn indicator_record(
    quantity: &str,
    g: &GraphSpec,
    p: f64,
    cfg: &McConfig,
    hits: &[bool],
    censored: u64,
) -> EstimateRecord {
    let successes = hits.iter().filter(|&&h| h).count() as u64;
    EstimateRecord::new(quantity, g, p, cfg)
        .estimate(Mean::binomial(successes, hits.len() as u64))
        .censoring(censored, cfg.censor_threshold)
}

/// One replica of the slab `L_{-n,0}` below the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlabOutcome {
    /// Some site over the fixed target fiber is reached.
    pub hit: bool,
    /// Sites reached over the target fiber.
    pub target_sites: u64,
    /// Sites reached on level `-n`, all fibers together.
    pub floor_sites: u64,
    pub censored: bool,
}

fn slab_target(g: &GraphSpec, n: u32) -> Result<TreeVertex> {
    Ok(g.descendant_fiber_representative(&g.origin(), n, 0)?.tree)
}

pub fn slab_outcome(g: &GraphSpec, p: f64, n: u32, cfg: &McConfig, replica: u64) -> Result<SlabOutcome> {
    let ctx = SampleCtx::new(cfg.seed, replica, p)?;
    let target = slab_target(g, n)?;
    let view = explore_with(
        &ctx,
        g,
        &g.origin(),
        &opts(cfg, SlabWindow::below(n)),
        std::slice::from_ref(&target),
    )?;
    let target_sites = view.fiber_hits[&target];
    Ok(SlabOutcome {
        hit: target_sites > 0,
        target_sites,
        floor_sites: view.count_at(-i64::from(n)),
        censored: view.censored,
    })
}

/// Outcomes for every depth `0..=n_max` from one nested exploration; equal
/// to `slab_outcome` at each depth for the same replica.
pub fn slab_outcome_series(
    g: &GraphSpec,
    p: f64,
    n_max: u32,
    cfg: &McConfig,
    replica: u64,
) -> Result<Vec<SlabOutcome>> {
    let ctx = SampleCtx::new(cfg.seed, replica, p)?;
    let view = explore_nested_slabs(&ctx, g, &g.origin(), n_max, cfg.budget, cfg.lattice_bound)?;
    // censoring taints the stage where it happened and everything after
    let censored_from = view.censored_at.unwrap_or(n_max + 1);
    (0..=n_max)
        .map(|n| {
            let target = slab_target(g, n)?;
            let target_sites = view.sites_over(n, &target);
            Ok(SlabOutcome {
                hit: target_sites > 0,
                target_sites,
                floor_sites: view.floor_sites(n),
                censored: n >= censored_from,
            })
        })
        .collect()
}

/// `P_p(n)`, `E_p(n)` and `D_p(n)` from shared explorations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabCrossing {
    pub p: EstimateRecord,
    pub e: EstimateRecord,
    pub d: EstimateRecord,
}

fn crossing_records(g: &GraphSpec, p: f64, n: u32, cfg: &McConfig, outs: &[SlabOutcome]) -> SlabCrossing {
    let censored = outs.iter().filter(|o| o.censored).count() as u64;
    let hits: Vec<bool> = outs.iter().map(|o| o.hit).collect();
    let target: Vec<f64> = outs.iter().map(|o| o.target_sites as f64).collect();
    let floor: Vec<f64> = outs.iter().map(|o| o.floor_sites as f64).collect();
    let w = SlabWindow::below(n);
    let n = i64::from(n);
    SlabCrossing {
        p: indicator_record("P", g, p, cfg, &hits, censored).n(n).window(w),
        e: mean_record("E", g, p, cfg, &target, censored).n(n).window(w),
        d: mean_record("D", g, p, cfg, &floor, censored).n(n).window(w),
    }
}

pub fn slab_crossing(g: &GraphSpec, p: f64, n: u32, cfg: &McConfig) -> Result<SlabCrossing> {
    check_p(p)?;
    let outs = cfg.replicate(|r| slab_outcome(g, p, n, cfg, r))?;
    Ok(crossing_records(g, p, n, cfg, &outs))
}

/// `slab_crossing` for all `n <= n_max` with one exploration per replica.
/// Values at different `n` are correlated.
pub fn slab_crossing_series(g: &GraphSpec, p: f64, n_max: u32, cfg: &McConfig) -> Result<Vec<SlabCrossing>> {
    check_p(p)?;
    let outs = cfg.replicate(|r| slab_outcome_series(g, p, n_max, cfg, r))?;
    Ok((0..=n_max)
        .map(|n| {
            let col: Vec<SlabOutcome> = outs.iter().map(|o| o[n as usize]).collect();
            crossing_records(g, p, n, cfg, &col)
        })
        .collect())
}

/// `P_p(n)`: probability that the target fiber is reached inside `L_{-n,0}`.
pub fn estimate_p(g: &GraphSpec, p: f64, n: u32, cfg: &McConfig) -> Result<EstimateRecord> {
    Ok(slab_crossing(g, p, n, cfg)?.p)
}

/// `E_p(n)`: expected number of target-fiber sites reached inside `L_{-n,0}`.
pub fn estimate_e(g: &GraphSpec, p: f64, n: u32, cfg: &McConfig) -> Result<EstimateRecord> {
    Ok(slab_crossing(g, p, n, cfg)?.e)
}

/// Whether the first-visit exploration of `L_{-n,0}` reaches the target
/// site (same fiber coordinate as the origin). Returns `(hit, censored)`.
pub fn first_visit_outcome(g: &GraphSpec, p: f64, n: u32, cfg: &McConfig, replica: u64) -> Result<(bool, bool)> {
    if n == 0 {
        return Err(PercolabError::InvalidParameter("first-visit depth must be >= 1".into()));
    }
    let ctx = SampleCtx::new(cfg.seed, replica, p)?;
    let origin = g.origin();
    let target = g.descendant_fiber_representative(&origin, n, 0)?;
    let o = opts(cfg, SlabWindow::below(n)).first_visit_stop(true);
    let view = explore_with(&ctx, g, &origin, &o, &[])?;
    Ok((view.contains(&target), view.censored))
}

/// `Q_p(n)`: the target site is reached by a path meeting level `-n` only
/// at its end.
pub fn estimate_q(g: &GraphSpec, p: f64, n: u32, cfg: &McConfig) -> Result<EstimateRecord> {
    check_p(p)?;
    let outs = cfg.replicate(|r| first_visit_outcome(g, p, n, cfg, r))?;
    let hits: Vec<bool> = outs.iter().map(|o| o.0).collect();
    let censored = outs.iter().filter(|o| o.1).count() as u64;
    Ok(indicator_record("Q", g, p, cfg, &hits, censored)
        .n(i64::from(n))
        .window(SlabWindow::below(n)))
}

/// Per-level site counts of the origin's cluster in `window`, indexed by
/// `h - window.lo()`.
pub fn level_outcome(
    g: &GraphSpec,
    p: f64,
    window: SlabWindow,
    cfg: &McConfig,
    replica: u64,
) -> Result<(Vec<u64>, bool)> {
    let ctx = SampleCtx::new(cfg.seed, replica, p)?;
    let view = explore_with(&ctx, g, &g.origin(), &opts(cfg, window), &[])?;
    let counts = (window.lo()..=window.hi()).map(|h| view.count_at(h)).collect();
    Ok((counts, view.censored))
}

/// Mean level counts `E X_l^{a,b}` for every `l` of one window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelProfile {
    pub window: SlabWindow,
    pub means: Vec<Mean>,
    /// Per-replica counts, replica-major.
    pub counts: Vec<Vec<u64>>,
    pub censored: u64,
}

impl LevelProfile {
    pub fn at(&self, l: i64) -> Option<Mean> {
        if !self.window.contains(l) {
            return None;
        }
        Some(self.means[(l - self.window.lo()) as usize])
    }

    pub fn samples(&self) -> u64 {
        self.counts.len() as u64
    }

    /// Mean and error of `sum_l w(l) X_l` computed per replica.
    pub fn weighted_sum(&self, weight: impl Fn(i64) -> f64) -> Mean {
        let lo = self.window.lo();
        let per: Vec<f64> = self
            .counts
            .iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .map(|(i, &x)| weight(lo + i as i64) * x as f64)
                    .sum()
            })
            .collect();
        Mean::of(&per)
    }
}

pub fn level_profile(g: &GraphSpec, p: f64, window: SlabWindow, cfg: &McConfig) -> Result<LevelProfile> {
    check_p(p)?;
    if !window.contains(0) {
        return Err(PercolabError::InvalidParameter(format!(
            "window [{}, {}] must contain 0",
            window.lo(),
            window.hi()
        )));
    }
    let outs = cfg.replicate(|r| level_outcome(g, p, window, cfg, r))?;
    let censored = outs.iter().filter(|o| o.1).count() as u64;
    let counts: Vec<Vec<u64>> = outs.into_iter().map(|o| o.0).collect();
    let means = (0..window.len())
        .map(|i| {
            let col: Vec<u64> = counts.iter().map(|c| c[i]).collect();
            Mean::of_counts(&col)
        })
        .collect();
    Ok(LevelProfile {
        window,
        means,
        counts,
        censored,
    })
}

/// `E X_l^{a,b}`: level-`l` sites connected to the origin inside `L_{a,b}`.
pub fn estimate_x(g: &GraphSpec, p: f64, l: i64, a: i64, b: i64, cfg: &McConfig) -> Result<EstimateRecord> {
    if !(a <= l && l <= b) || a > 0 || b < 0 {
        return Err(PercolabError::InvalidParameter(format!(
            "need a <= l <= b and a <= 0 <= b, got l={l}, a={a}, b={b}"
        )));
    }
    let window = SlabWindow::new(a, b)?;
    let prof = level_profile(g, p, window, cfg)?;
    Ok(EstimateRecord::new("X", g, p, cfg)
        .n(l)
        .window(window)
        .estimate(prof.at(l).expect("l inside window"))
        .censoring(prof.censored, cfg.censor_threshold))
}

fn tilt(g: &GraphSpec, lambda: f64) -> impl Fn(i64) -> f64 {
    let base = f64::from(g.k() - 1);
    move |l| base.powf(lambda * l as f64)
}

/// Truncated `chi_{p,lambda}`: `sum_{|l| <= cap} (k-1)^{lambda l} X_l` inside
/// `L_{-cap,cap}`. A lower-biased estimate of the full sum.
pub fn estimate_chi(g: &GraphSpec, p: f64, lambda: f64, cap: u32, cfg: &McConfig) -> Result<EstimateRecord> {
    if cap == 0 {
        return Err(PercolabError::InvalidParameter("height cap must be >= 1".into()));
    }
    let prof = level_profile(g, p, SlabWindow::capped(cap), cfg)?;
    Ok(chi_from_profile(g, p, lambda, cfg, &prof))
}

pub fn chi_from_profile(g: &GraphSpec, p: f64, lambda: f64, cfg: &McConfig, prof: &LevelProfile) -> EstimateRecord {
    let mut rec = EstimateRecord::new("chi", g, p, cfg)
        .lambda(lambda)
        .window(prof.window)
        .height_cap(prof.window.hi() as u32)
        .estimate(prof.weighted_sum(tilt(g, lambda)))
        .censoring(prof.censored, cfg.censor_threshold);
    rec.warn("truncated to the height cap; biased low");
    rec
}

/// Truncated half-space sum `H_{p,lambda} = sum_{n=0}^{cap} (k-1)^{-lambda n}
/// X_{-n}^{-cap,0}`.
pub fn estimate_h(g: &GraphSpec, p: f64, lambda: f64, cap: u32, cfg: &McConfig) -> Result<EstimateRecord> {
    let prof = level_profile(g, p, SlabWindow::below(cap), cfg)?;
    Ok(h_from_profile(g, p, lambda, cfg, &prof))
}

pub fn h_from_profile(g: &GraphSpec, p: f64, lambda: f64, cfg: &McConfig, prof: &LevelProfile) -> EstimateRecord {
    EstimateRecord::new("H", g, p, cfg)
        .lambda(lambda)
        .window(prof.window)
        .height_cap((-prof.window.lo()) as u32)
        .estimate(prof.weighted_sum(tilt(g, lambda)))
        .censoring(prof.censored, cfg.censor_threshold)
}

/// Finite-depth decay exponent of `P_p(n)` in units of `log(k-1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaStar {
    /// `-log P(n) / (n log(k-1))` per depth (depths with `P = 0` omitted).
    pub series: SeriesRecord,
    /// The `P(n)` estimates behind the series, all depths.
    pub probabilities: Vec<EstimateRecord>,
    /// `min_n -log(p P(n)) / (n log(k-1))`, an upper bound on the limit.
    pub fekete_bound: Option<f64>,
    /// Slope of `-log P(n)` against `n log(k-1)` over the upper half of depths.
    pub fit: Option<LinearFit>,
    pub excluded: Vec<u32>,
}

impl BetaStar {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    /// Series plus summary rows (`beta_star_fekete`, `beta_star_fit`).
    pub fn to_records(&self, g: &GraphSpec, p: f64, cfg: &McConfig) -> Vec<EstimateRecord> {
        let mut out = self.series.records.clone();
        let samples = cfg.samples;
        if let Some(b) = self.fekete_bound {
            let mut r = EstimateRecord::new("beta_star_fekete", g, p, cfg);
            r.value = b;
            r.n_samples = samples;
            out.push(r);
        }
        if let Some(f) = self.fit {
            let mut r = EstimateRecord::new("beta_star_fit", g, p, cfg);
            r.value = f.slope;
            r.stderr = f.slope_se;
            r.n_samples = samples;
            out.push(r);
        }
        out
    }
}

/// Each depth uses an independent sub-stream so the fitted points are
/// independent.
pub fn estimate_beta_star(g: &GraphSpec, p: f64, n_max: u32, cfg: &McConfig) -> Result<BetaStar> {
    if n_max < 2 {
        return Err(PercolabError::InvalidParameter("n_max must be >= 2".into()));
    }
    check_p(p)?;
    let lk = g.log_branching();
    let mut probabilities = Vec::new();
    for n in 1..=n_max {
        let sub = cfg.substream("beta_star", u64::from(n));
        let mut rec = estimate_p(g, p, n, &sub)?;
        rec.seed = cfg.seed;
        probabilities.push(rec);
    }
    beta_star_from_probabilities(g, p, lk, cfg, probabilities)
}

pub fn beta_star_from_probabilities(
    g: &GraphSpec,
    p: f64,
    lk: f64,
    cfg: &McConfig,
    probabilities: Vec<EstimateRecord>,
) -> Result<BetaStar> {
    let n_max = probabilities.iter().filter_map(|r| r.n).max().unwrap_or(0);
    let mut series = Vec::new();
    let mut excluded = Vec::new();
    let mut fekete: Option<f64> = None;
    let (mut xs, mut ys, mut sig) = (Vec::new(), Vec::new(), Vec::new());
    let fit_from = n_max - n_max / 2;
    for rec in &probabilities {
        let n = rec.n.expect("depth set");
        if n == 0 {
            continue;
        }
        if rec.value <= 0.0 {
            excluded.push(n as u32);
            continue;
        }
        let nl = n as f64 * lk;
        let mut r = EstimateRecord::new("beta_star", g, p, cfg)
            .n(n)
            .estimate(Mean {
                value: -rec.value.ln() / nl,
                stderr: rec.stderr / rec.value / nl,
                n: rec.n_samples,
            });
        r.window_lo = rec.window_lo;
        r.window_hi = rec.window_hi;
        r.censor_rate = rec.censor_rate;
        r.warning = rec.warning.clone();
        series.push(r);
        if p > 0.0 {
            let f = -(p * rec.value).ln() / nl;
            fekete = Some(fekete.map_or(f, |b: f64| b.min(f)));
        }
        if n >= fit_from {
            xs.push(nl);
            ys.push(-rec.value.ln());
            sig.push(rec.stderr / rec.value);
        }
    }
    let mut series = SeriesRecord::new("beta_star", series)?;
    if !excluded.is_empty() {
        for r in &mut series.records {
            r.warn(format!("depths with zero estimate excluded: {excluded:?}"));
        }
    }
    Ok(BetaStar {
        series,
        probabilities,
        fekete_bound: fekete,
        fit: fit_line(&xs, &ys, Some(&sig)),
        excluded,
    })
}

/// `D_p(n)` measured downward, `U_p(n)` from it by the transport identity,
/// and `U_p(n)` measured upward on an independent stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DownUp {
    pub d: EstimateRecord,
    pub e: EstimateRecord,
    pub u_transport: EstimateRecord,
    pub u_direct: EstimateRecord,
}

pub fn estimate_d_u(g: &GraphSpec, p: f64, n: u32, cfg: &McConfig) -> Result<DownUp> {
    let crossing = slab_crossing(g, p, n, cfg)?;
    let scale = f64::from(g.k() - 1).powi(-(n as i32));
    let mut u_transport = crossing.d.clone();
    u_transport.quantity = "U".into();
    u_transport.value *= scale;
    u_transport.stderr *= scale;
    u_transport.warn("from D by the transport identity");

    let sub = cfg.substream("U", u64::from(n));
    let window = SlabWindow::new(0, i64::from(n))?;
    let prof = level_profile(g, p, window, &sub)?;
    let mut u_direct = EstimateRecord::new("U", g, p, &sub)
        .n(i64::from(n))
        .window(window)
        .estimate(prof.at(i64::from(n)).expect("n in window"))
        .censoring(prof.censored, cfg.censor_threshold);
    u_direct.seed = cfg.seed;
    Ok(DownUp {
        d: crossing.d,
        e: crossing.e,
        u_transport,
        u_direct,
    })
}

/// Whether the fiber over the same-height vertex at tree distance `m` is
/// reached inside `L_{-cap,cap}`. Returns `(hit, censored)`.
pub fn point_to_fiber_outcome(
    g: &GraphSpec,
    p: f64,
    m: u32,
    cfg: &McConfig,
    replica: u64,
) -> Result<(bool, bool)> {
    let origin = g.origin();
    let target = g.same_height_target(&origin.tree, m)?;
    if m == 0 {
        return Ok((true, false));
    }
    let ctx = SampleCtx::new(cfg.seed, replica, p)?;
    let view = explore_with(
        &ctx,
        g,
        &origin,
        &opts(cfg, SlabWindow::capped(cfg.height_cap)),
        std::slice::from_ref(&target),
    )?;
    Ok((view.fiber_hits[&target] > 0, view.censored))
}

pub fn estimate_point_to_fiber(g: &GraphSpec, p: f64, m: u32, cfg: &McConfig) -> Result<EstimateRecord> {
    check_p(p)?;
    let outs = cfg.replicate(|r| point_to_fiber_outcome(g, p, m, cfg, r))?;
    let hits: Vec<bool> = outs.iter().map(|o| o.0).collect();
    let censored = outs.iter().filter(|o| o.1).count() as u64;
    Ok(indicator_record("point_to_fiber", g, p, cfg, &hits, censored)
        .n(i64::from(m))
        .window(SlabWindow::capped(cfg.height_cap))
        .height_cap(cfg.height_cap))
}

pub fn fiber_count_outcome(g: &GraphSpec, p: f64, cfg: &McConfig, replica: u64) -> Result<FiberIntersection> {
    let ctx = SampleCtx::new(cfg.seed, replica, p)?;
    let o = opts(cfg, SlabWindow::capped(cfg.height_cap));
    let origin = g.origin();
    let view = explore_with(&ctx, g, &origin, &o, std::slice::from_ref(&origin.tree))?;
    Ok(FiberIntersection {
        count: view.fiber_hits[&origin.tree],
        censored: view.censored,
    })
}

/// Minimum number of samples with `count >= n` for `n` to enter the tail fit.
pub const TAIL_FIT_MIN_EXCEEDANCES: u64 = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberTail {
    /// `E|K_o ∩ [o]|` inside the height cap.
    pub mean: EstimateRecord,
    /// `P(|K_o ∩ [o]| >= n)` for `n = 1..=max+1`.
    pub tail: Vec<EstimateRecord>,
    /// Line through `(n, log tail(n))` over `n >= 2` with enough exceedances.
    pub fit: Option<LinearFit>,
    /// Fitted decay rate `-slope`.
    pub rate: Option<f64>,
    pub t_stat: Option<f64>,
    pub warning: Option<String>,
}

pub fn estimate_fiber_tail(g: &GraphSpec, p: f64, cfg: &McConfig) -> Result<FiberTail> {
    check_p(p)?;
    if p >= 1.0 {
        return Err(PercolabError::InvalidParameter("fiber tail needs p < 1".into()));
    }
    let outs = cfg.replicate(|r| fiber_count_outcome(g, p, cfg, r))?;
    let counts: Vec<u64> = outs.iter().map(|o| o.count).collect();
    let censored = outs.iter().filter(|o| o.censored).count() as u64;
    let samples = counts.len() as u64;
    let mean = EstimateRecord::new("fiber_mean", g, p, cfg)
        .window(SlabWindow::capped(cfg.height_cap))
        .height_cap(cfg.height_cap)
        .estimate(Mean::of_counts(&counts))
        .censoring(censored, cfg.censor_threshold);

    let max = counts.iter().copied().max().unwrap_or(1);
    let mut hist = vec![0u64; max as usize + 2];
    for &c in &counts {
        hist[c as usize] += 1;
    }
    // exceed[n] = #{count >= n}
    let mut exceed = vec![0u64; hist.len() + 1];
    for n in (0..hist.len()).rev() {
        exceed[n] = exceed[n + 1] + hist[n];
    }
    let mut tail = Vec::new();
    let (mut xs, mut ys, mut sig) = (Vec::new(), Vec::new(), Vec::new());
    for n in 1..=max + 1 {
        let e = exceed[n as usize];
        let m = Mean::binomial(e, samples);
        tail.push(
            EstimateRecord::new("fiber_tail", g, p, cfg)
                .n(n as i64)
                .height_cap(cfg.height_cap)
                .estimate(m)
                .censoring(censored, cfg.censor_threshold),
        );
        if n >= 2 && e >= TAIL_FIT_MIN_EXCEEDANCES && e < samples {
            xs.push(n as f64);
            ys.push(m.value.ln());
            sig.push(m.stderr / m.value);
        }
    }
    let mut warning = None;
    let fit = if mean.censor_rate > cfg.censor_threshold {
        warning = Some("excessive censoring; no fit".to_string());
        None
    } else {
        let f = fit_line(&xs, &ys, Some(&sig));
        if f.is_none() {
            warning = Some("fewer than two tail points with enough exceedances".to_string());
        }
        f
    };
    let rate = fit.map(|f| -f.slope);
    let t_stat = fit.map(|f| -f.slope / f.slope_se);
    Ok(FiberTail {
        mean,
        tail,
        fit,
        rate,
        t_stat,
        warning,
    })
}

/// `E|K_o ∩ [o]|` inside the height cap.
pub fn estimate_fiber_mean(g: &GraphSpec, p: f64, cfg: &McConfig) -> Result<EstimateRecord> {
    check_p(p)?;
    let outs = cfg.replicate(|r| fiber_count_outcome(g, p, cfg, r))?;
    let counts: Vec<u64> = outs.iter().map(|o| o.count).collect();
    let censored = outs.iter().filter(|o| o.censored).count() as u64;
    Ok(EstimateRecord::new("fiber_mean", g, p, cfg)
        .window(SlabWindow::capped(cfg.height_cap))
        .height_cap(cfg.height_cap)
        .estimate(Mean::of_counts(&counts))
        .censoring(censored, cfg.censor_threshold))
}

/// Site used as the fixed target of `estimate_q`.
pub fn first_visit_target(g: &GraphSpec, n: u32) -> Result<SiteId> {
    g.descendant_fiber_representative(&g.origin(), n, 0)
}
