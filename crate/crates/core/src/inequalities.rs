//! Numerical checks of the inequalities and identities between the slab
//! quantities, each producing a machine-readable verdict.
//!
//! Truncation direction per check:
//! - MTP: both sides use the same finite windows, so the identity is exact.
//! - Backscattering: the fiber intersection is counted inside the height
//!   cap, so the left side is biased low (conservative).
//! - Hammersley-Welsh and the half-space product: both sides are truncated
//!   sums and therefore both biased low; the verdict is indicative only.
//! - Point-to-fiber: truncation lowers the probabilities, most at large `m`,
//!   which can only raise the fitted rate.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{PercolabError, Result};
use crate::estimators::{
    chi_from_profile, estimate_chi, estimate_fiber_mean, estimate_p, estimate_point_to_fiber,
    estimate_x, h_from_profile, level_profile, slab_crossing, slab_crossing_series,
    TAIL_FIT_MIN_EXCEEDANCES,
};
use crate::graph::{Family, GraphSpec, SlabWindow};
use crate::mc::McConfig;
use crate::oracle::{
    exact_connectivity, exact_connectivity_rational, rational, tree_chi_closed, tree_h_closed, tree_level_count_exact,
    truncated_slab_instance, Instance, SlabTarget, DEFAULT_STATE_LIMIT,
};
use crate::stats::{combine_errors, fit_line, product_stderr, LinearFit, Mean};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub params: serde_json::Value,
    pub lhs: f64,
    pub rhs: f64,
    pub sigma: f64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckReport {
    fn new(check: &str, params: serde_json::Value, lhs: f64, rhs: f64, sigma: f64, verdict: Verdict) -> Self {
        Self {
            check: check.to_string(),
            params,
            lhs,
            rhs,
            sigma,
            verdict,
            note: None,
        }
    }

    fn note(mut self, msg: impl Into<String>) -> Self {
        let msg = msg.into();
        self.note = Some(match self.note.take() {
            Some(prev) => format!("{prev}; {msg}"),
            None => msg,
        });
        self
    }

    fn inconclusive(mut self, why: impl Into<String>) -> Self {
        self.verdict = Verdict::Inconclusive;
        self.note(why)
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Allowed deviation in standard errors.
    pub sigmas: f64,
    /// Below this many replicas a check is inconclusive.
    pub min_samples: u64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            sigmas: 3.0,
            min_samples: 100,
        }
    }
}

fn verdict_le(lhs: f64, rhs: f64, sigma: f64, tol: &Tolerance) -> Verdict {
    if lhs <= rhs + tol.sigmas * sigma {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn verdict_eq(lhs: f64, rhs: f64, sigma: f64, tol: &Tolerance) -> Verdict {
    if (lhs - rhs).abs() <= tol.sigmas * sigma {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn underpowered(cfg: &McConfig, tol: &Tolerance) -> bool {
    cfg.samples < tol.min_samples
}

fn with_censoring(mut report: CheckReport, rates: &[(&str, f64)], cfg: &McConfig) -> CheckReport {
    for (what, rate) in rates {
        if *rate > cfg.censor_threshold {
            report = report.note(format!("{what} censor rate {rate:.4} above {}", cfg.censor_threshold));
            if report.verdict == Verdict::Fail {
                report.verdict = Verdict::Inconclusive;
            }
        }
    }
    report
}

/// `E X_l^{a,b} = (k-1)^{-l} E X_{-l}^{a-l,b-l}`, both sides estimated on
/// independent streams.
pub fn check_mtp(
    g: &GraphSpec,
    p: f64,
    cases: &[(i64, i64, i64)],
    cfg: &McConfig,
    tol: &Tolerance,
) -> Result<Vec<CheckReport>> {
    let k1 = f64::from(g.k() - 1);
    cases
        .iter()
        .enumerate()
        .map(|(i, &(l, a, b))| {
            let left = estimate_x(g, p, l, a, b, &cfg.substream("mtp_lhs", i as u64))?;
            let right = estimate_x(g, p, -l, a - l, b - l, &cfg.substream("mtp_rhs", i as u64))?;
            let scale = k1.powi(-(l as i32));
            let rm = right.mean().scaled(scale);
            let sigma = combine_errors(&[left.stderr, rm.stderr]);
            let params = json!({"family": g.family(), "k": g.k(), "d": g.d(), "p": p, "l": l, "a": a, "b": b, "samples": cfg.samples, "seed": cfg.seed});
            let mut rep = CheckReport::new("mtp", params, left.value, rm.value, sigma, verdict_eq(left.value, rm.value, sigma, tol));
            if underpowered(cfg, tol) {
                rep = rep.inconclusive("too few samples");
            }
            Ok(with_censoring(rep, &[("lhs", left.censor_rate), ("rhs", right.censor_rate)], cfg))
        })
        .collect()
}

/// The MTP identity on the tree with closed forms in exact arithmetic.
pub fn check_mtp_tree_exact(k: u32, p: &BigRational, cases: &[(i64, i64, i64)]) -> Vec<CheckReport> {
    cases
        .iter()
        .map(|&(l, a, b)| {
            let lhs = tree_level_count_exact(p, k, l, a, b);
            let scale = num_traits::pow(BigRational::from_integer((k - 1).into()), l.unsigned_abs() as usize);
            let rhs = tree_level_count_exact(p, k, -l, a - l, b - l);
            let rhs = if l >= 0 { rhs / scale } else { rhs * scale };
            let verdict = if lhs == rhs { Verdict::Pass } else { Verdict::Fail };
            CheckReport::new(
                "mtp_tree_exact",
                json!({"k": k, "p": p.to_string(), "l": l, "a": a, "b": b}),
                to_f64(&lhs),
                to_f64(&rhs),
                0.0,
                verdict,
            )
        })
        .collect()
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `E|K_o ∩ [o]| >= p^3 (k-1)^{n+1} P(n) E(n)` on the lamplighter graph.
pub fn check_backscattering_ll(g: &GraphSpec, p: f64, n: u32, cfg: &McConfig, tol: &Tolerance) -> Result<CheckReport> {
    if g.family() != Family::Lamplighter {
        return Err(PercolabError::InvalidParameter("backscattering check needs the ll family".into()));
    }
    let lhs = estimate_fiber_mean(g, p, &cfg.substream("backscatter_lhs", 0))?;
    let pn = slab_crossing(g, p, n, &cfg.substream("backscatter_p", u64::from(n)))?.p;
    let en = slab_crossing(g, p, n, &cfg.substream("backscatter_e", u64::from(n)))?.e;
    let c = p.powi(3) * f64::from(g.k() - 1).powi(n as i32 + 1);
    let (pm, em) = (pn.mean(), en.mean());
    let rhs = c * pm.value * em.value;
    let rhs_se = c * product_stderr(&[pm, em]);
    let sigma = combine_errors(&[lhs.stderr, rhs_se]);
    let params = json!({"family": g.family(), "k": g.k(), "p": p, "n": n, "samples": cfg.samples, "seed": cfg.seed, "height_cap": cfg.height_cap});
    let verdict = verdict_le(rhs, lhs.value, sigma, tol);
    let mut rep = CheckReport::new("backscattering_ll", params, lhs.value, rhs, sigma, verdict)
        .note("lhs counted inside the height cap (biased low)");
    if underpowered(cfg, tol) {
        rep = rep.inconclusive("too few samples");
    }
    Ok(with_censoring(
        rep,
        &[("lhs", lhs.censor_rate), ("P", pn.censor_rate), ("E", en.censor_rate)],
        cfg,
    ))
}

/// Whether the last terms of a nonnegative series are still growing.
fn tail_growing(terms: &[f64]) -> bool {
    match terms {
        [.., a, b] => *b > 0.0 && *b >= *a,
        _ => false,
    }
}

/// `chi_{p,1/2} <= (E|K_o ∩ [o]|)^2 exp[2 sum_{n=0}^{N} (k-1)^{-n/2} D(n)]`.
pub fn check_hammersley_welsh(
    g: &GraphSpec,
    p: f64,
    n_max: u32,
    cap: u32,
    cfg: &McConfig,
    tol: &Tolerance,
) -> Result<CheckReport> {
    let chi = estimate_chi(g, p, 0.5, cap, &cfg.substream("hw_chi", 0))?;
    let fiber = estimate_fiber_mean(g, p, &cfg.substream("hw_fiber", 0).with_height_cap(cap))?;
    let series = slab_crossing_series(g, p, n_max, &cfg.substream("hw_d", 0))?;
    let k1 = f64::from(g.k() - 1);
    let terms: Vec<f64> = series
        .iter()
        .enumerate()
        .map(|(n, s)| k1.powf(-(n as f64) / 2.0) * s.d.value)
        .collect();
    let s: f64 = terms.iter().sum();
    // nested depths are positively correlated: add errors linearly
    let s_se: f64 = series
        .iter()
        .enumerate()
        .map(|(n, x)| k1.powf(-(n as f64) / 2.0) * x.d.stderr)
        .sum();
    let m = fiber.value;
    let rhs = m * m * (2.0 * s).exp();
    let rel_m = if m > 0.0 { 2.0 * fiber.stderr / m } else { 0.0 };
    let rhs_se = rhs * combine_errors(&[rel_m, 2.0 * s_se]);
    let sigma = combine_errors(&[chi.stderr, rhs_se]);
    let params = json!({"family": g.family(), "k": g.k(), "d": g.d(), "p": p, "n_max": n_max, "height_cap": cap, "samples": cfg.samples, "seed": cfg.seed});
    let mut rep = CheckReport::new("hammersley_welsh", params, chi.value, rhs, sigma, verdict_le(chi.value, rhs, sigma, tol))
        .note("both sides truncated (biased low); indicative, not rigorous");
    if tail_growing(&terms) {
        rep = rep.inconclusive("D-series partial sums still growing: regime p >= p_t suspected");
    } else if underpowered(cfg, tol) {
        rep = rep.inconclusive("too few samples");
    }
    let d_censor = series.iter().map(|s| s.d.censor_rate).fold(0.0, f64::max);
    Ok(with_censoring(
        rep,
        &[("chi", chi.censor_rate), ("fiber", fiber.censor_rate), ("D", d_censor)],
        cfg,
    ))
}

/// `chi_{p,lambda} <= H_{p,lambda} H_{p,1-lambda}` with truncated sums.
pub fn check_series_product(
    g: &GraphSpec,
    p: f64,
    lambda: f64,
    cap: u32,
    cfg: &McConfig,
    tol: &Tolerance,
) -> Result<CheckReport> {
    if cap == 0 {
        return Err(PercolabError::InvalidParameter("height cap must be >= 1".into()));
    }
    let full_cfg = cfg.substream("sp_chi", 0);
    let full = level_profile(g, p, SlabWindow::capped(cap), &full_cfg)?;
    let chi = chi_from_profile(g, p, lambda, &full_cfg, &full);
    let half_cfg = cfg.substream("sp_h", 0);
    let half = level_profile(g, p, SlabWindow::new(-i64::from(cap), 0)?, &half_cfg)?;
    let h1 = h_from_profile(g, p, lambda, &half_cfg, &half);
    let h2 = h_from_profile(g, p, 1.0 - lambda, &half_cfg, &half);
    let rhs = h1.value * h2.value;
    // same replicas on both factors: relative errors add linearly
    let rel = |r: &crate::records::EstimateRecord| if r.value > 0.0 { r.stderr / r.value } else { 0.0 };
    let rhs_se = rhs * (rel(&h1) + rel(&h2));
    let sigma = combine_errors(&[chi.stderr, rhs_se]);
    let params = json!({"family": g.family(), "k": g.k(), "d": g.d(), "p": p, "lambda": lambda, "height_cap": cap, "samples": cfg.samples, "seed": cfg.seed});
    let mut rep = CheckReport::new("series_product", params, chi.value, rhs, sigma, verdict_le(chi.value, rhs, sigma, tol))
        .note("both sides truncated (biased low); indicative, not rigorous");
    let k1 = f64::from(g.k() - 1);
    let h_terms: Vec<f64> = (0..=cap)
        .map(|n| k1.powf(-0.5 * f64::from(n)) * half.at(-i64::from(n)).map_or(0.0, |m| m.value))
        .collect();
    if tail_growing(&h_terms) {
        rep = rep.inconclusive("half-space partial sums still growing: regime p >= p_t suspected");
    } else if underpowered(cfg, tol) {
        rep = rep.inconclusive("too few samples");
    }
    Ok(with_censoring(rep, &[("chi", chi.censor_rate), ("H", h1.censor_rate)], cfg))
}

/// Exponential decay of the point-to-fiber probability in the tree distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `(m, estimate)` for even `m` in `2..=m_max`.
    pub points: Vec<(u32, Mean)>,
    pub fit: Option<LinearFit>,
    /// `-slope` of `ln P` against `m`.
    pub rate: Option<f64>,
    pub rate_se: Option<f64>,
    /// Decades of decay spanned by the fitted points.
    pub decades: f64,
    pub censor_rate: f64,
}

pub fn point_to_fiber_decay(g: &GraphSpec, p: f64, m_max: u32, cfg: &McConfig) -> Result<DecayFit> {
    let mut points = Vec::new();
    let mut censor_rate: f64 = 0.0;
    for m in (2..=m_max).step_by(2) {
        let r = estimate_point_to_fiber(g, p, m, &cfg.substream("point_to_fiber", u64::from(m)))?;
        censor_rate = censor_rate.max(r.censor_rate);
        points.push((m, r.mean()));
    }
    let usable: Vec<&(u32, Mean)> = points
        .iter()
        .filter(|(_, e)| (e.value * e.n as f64).round() >= TAIL_FIT_MIN_EXCEEDANCES as f64 && e.value < 1.0)
        .collect();
    let xs: Vec<f64> = usable.iter().map(|(m, _)| f64::from(*m)).collect();
    let ys: Vec<f64> = usable.iter().map(|(_, e)| e.value.ln()).collect();
    let sig: Vec<f64> = usable.iter().map(|(_, e)| e.stderr / e.value).collect();
    let fit = fit_line(&xs, &ys, Some(&sig));
    let decades = match (ys.first(), ys.last()) {
        (Some(a), Some(b)) => (a - b) / std::f64::consts::LN_10,
        _ => 0.0,
    };
    Ok(DecayFit {
        points,
        rate: fit.map(|f| -f.slope),
        rate_se: fit.map(|f| f.slope_se),
        fit,
        decades,
        censor_rate,
    })
}

/// Fitted decay rate at least `(1/2) log(k-1)` minus one fit error.
pub fn check_point_to_fiber_rate(g: &GraphSpec, p: f64, m_max: u32, cfg: &McConfig, tol: &Tolerance) -> Result<(CheckReport, DecayFit)> {
    if m_max < 2 {
        return Err(PercolabError::InvalidParameter("m_max must be >= 2".into()));
    }
    let decay = point_to_fiber_decay(g, p, m_max, cfg)?;
    let bound = 0.5 * f64::from(g.k() - 1).ln();
    let params = json!({"family": g.family(), "k": g.k(), "d": g.d(), "p": p, "m_max": m_max, "height_cap": cfg.height_cap, "samples": cfg.samples, "seed": cfg.seed});
    let all_zero = decay.points.iter().all(|(_, e)| e.value == 0.0);
    let rep = match (decay.rate, decay.rate_se) {
        _ if all_zero => CheckReport::new("point_to_fiber_rate", params, f64::INFINITY, bound, 0.0, Verdict::Pass)
            .note("no connections beyond m = 0: rate is infinite"),
        (Some(rate), Some(se)) => {
            let verdict = if rate >= bound - se { Verdict::Pass } else { Verdict::Fail };
            let mut r = CheckReport::new("point_to_fiber_rate", params, rate, bound, se, verdict);
            if decay.decades < 1.0 {
                r = r.inconclusive(format!("only {:.2} decades of decay", decay.decades));
            }
            r
        }
        _ => CheckReport::new("point_to_fiber_rate", params, f64::NAN, bound, f64::NAN, Verdict::Inconclusive)
            .note("fewer than two distances with enough hits"),
    };
    let mut rep = with_censoring(rep, &[("point_to_fiber", decay.censor_rate)], cfg);
    if underpowered(cfg, tol) && rep.verdict != Verdict::Pass {
        rep = rep.inconclusive("too few samples");
    }
    Ok((rep, decay))
}

/// `P(n+m+1) >= p P(n) P(m)` from Monte-Carlo on independent streams.
pub fn check_supermultiplicativity(
    g: &GraphSpec,
    p: f64,
    n: u32,
    m: u32,
    cfg: &McConfig,
    tol: &Tolerance,
) -> Result<CheckReport> {
    let est = |depth: u32| -> Result<crate::records::EstimateRecord> {
        estimate_p(g, p, depth, &cfg.substream("supermult", u64::from(depth)))
    };
    let lhs = est(n + m + 1)?;
    let (pn, pm) = (est(n)?.mean(), est(m)?.mean());
    let rhs = p * pn.value * pm.value;
    let rhs_se = p * if n == m {
        2.0 * pn.value * pn.stderr
    } else {
        product_stderr(&[pn, pm])
    };
    let sigma = combine_errors(&[lhs.stderr, rhs_se]);
    let params = json!({"family": g.family(), "k": g.k(), "d": g.d(), "p": p, "n": n, "m": m, "samples": cfg.samples, "seed": cfg.seed});
    let mut rep = CheckReport::new("supermultiplicativity", params, lhs.value, rhs, sigma, verdict_le(rhs, lhs.value, sigma, tol));
    if underpowered(cfg, tol) {
        rep = rep.inconclusive("too few samples");
    }
    Ok(with_censoring(rep, &[("P", lhs.censor_rate)], cfg))
}

/// The same inequality on slabs with fibers truncated to `[-w, w]^d`,
/// in exact rational arithmetic.
pub fn check_supermultiplicativity_exact(g: &GraphSpec, w: u32, n: u32, m: u32, p: &BigRational) -> Result<CheckReport> {
    let value = |depth: u32| -> Result<BigRational> {
        if depth == 0 {
            return Ok(BigRational::one());
        }
        let inst = truncated_slab_instance(g, depth, w, SlabTarget::Fiber)?;
        exact_connectivity_rational(&inst, p, DEFAULT_STATE_LIMIT)
    };
    let lhs = value(n + m + 1)?;
    let rhs = p.clone() * value(n)? * value(m)?;
    let verdict = if lhs >= rhs { Verdict::Pass } else { Verdict::Fail };
    Ok(CheckReport::new(
        "supermultiplicativity_exact",
        json!({"family": g.family(), "k": g.k(), "d": g.d(), "p": p.to_string(), "n": n, "m": m, "w": w}),
        to_f64(&lhs),
        to_f64(&rhs),
        0.0,
        verdict,
    ))
}

/// Monte-Carlo connectivity of an instance against its exact value, with
/// the binomial error of the exact probability.
pub fn check_oracle_instance(name: &str, inst: &Instance, p: f64, cfg: &McConfig, tol: &Tolerance) -> Result<CheckReport> {
    let exact: f64 = exact_connectivity(inst, &p, DEFAULT_STATE_LIMIT)?;
    let hits = cfg.replicate(|r| inst.sample(cfg.seed, r, p))?;
    let mc = Mean::binomial(hits.iter().filter(|&&h| h).count() as u64, hits.len() as u64);
    let sigma = (exact * (1.0 - exact) / cfg.samples as f64).sqrt();
    let params = json!({"instance": name, "edges": inst.edges.len(), "p": p, "samples": cfg.samples, "seed": cfg.seed});
    let mut rep = CheckReport::new("oracle", params, mc.value, exact, sigma, verdict_eq(mc.value, exact, sigma, tol));
    if underpowered(cfg, tol) {
        rep = rep.inconclusive("too few samples");
    }
    Ok(rep)
}

/// The fixed set of small instances used by the oracle gate.
pub fn oracle_instances() -> Result<Vec<(String, Instance)>> {
    let tree3 = GraphSpec::tree(3)?;
    let tree4 = GraphSpec::tree(4)?;
    let txz = GraphSpec::tree_times_zd(3, 1)?;
    let ll = GraphSpec::lamplighter(3)?;
    let spec: [(&str, &GraphSpec, u32, u32, SlabTarget); 10] = [
        ("tree k=3 n=1", &tree3, 1, 0, SlabTarget::Fiber),
        ("tree k=3 n=3", &tree3, 3, 0, SlabTarget::Fiber),
        ("tree k=4 n=2", &tree4, 2, 0, SlabTarget::Fiber),
        ("txz k=3 d=1 n=1 w=0", &txz, 1, 0, SlabTarget::Fiber),
        ("txz k=3 d=1 n=1 w=1", &txz, 1, 1, SlabTarget::Fiber),
        ("txz k=3 d=1 n=1 w=2", &txz, 1, 2, SlabTarget::Fiber),
        ("txz k=3 d=1 n=1 w=1 first-visit", &txz, 1, 1, SlabTarget::FirstVisitSite),
        ("txz k=3 d=1 n=2 w=1 first-visit", &txz, 2, 1, SlabTarget::FirstVisitSite),
        ("ll k=3 n=1", &ll, 1, 0, SlabTarget::Fiber),
        ("ll k=3 n=1 first-visit", &ll, 1, 0, SlabTarget::FirstVisitSite),
    ];
    spec.into_iter()
        .map(|(name, g, n, w, t)| Ok((name.to_string(), truncated_slab_instance(g, n, w, t)?)))
        .collect()
}

/// Checks on the tree with closed forms in place of Monte-Carlo values.
/// Rational where the quantities are rational, otherwise plain comparisons
/// of the closed forms; no statistical slack either way.
pub fn tree_exact_suite(k: u32, p: f64) -> Result<Vec<CheckReport>> {
    if k < 3 {
        return Err(PercolabError::InvalidParameter("k must be >= 3".into()));
    }
    let pr = rational(p)?;
    let mut out = check_mtp_tree_exact(k, &pr, &[(1, 0, 1), (1, -2, 3), (2, -1, 4), (2, 0, 5), (-1, -3, 2)]);

    for (n, m) in [(1u32, 1u32), (1, 2), (2, 2), (3, 4)] {
        let lhs = num_traits::pow(pr.clone(), (n + m + 1) as usize);
        let rhs = pr.clone() * num_traits::pow(pr.clone(), n as usize) * num_traits::pow(pr.clone(), m as usize);
        out.push(CheckReport::new(
            "supermultiplicativity_tree_exact",
            json!({"k": k, "p": p, "n": n, "m": m}),
            to_f64(&lhs),
            to_f64(&rhs),
            0.0,
            if lhs >= rhs { Verdict::Pass } else { Verdict::Fail },
        ));
    }

    // D(n) = (k-1)^n E(n) and U(n) = E(n) with E(n) = p^n
    for n in 0..6u32 {
        let e = num_traits::pow(pr.clone(), n as usize);
        let d = tree_level_count_exact(&pr, k, -i64::from(n), -i64::from(n), 0);
        let u = tree_level_count_exact(&pr, k, i64::from(n), 0, i64::from(n));
        let kn = num_traits::pow(BigRational::from_integer((k - 1).into()), n as usize);
        let ok = d == kn * e.clone() && u == e;
        out.push(CheckReport::new(
            "down_up_tree_exact",
            json!({"k": k, "p": p, "n": n}),
            to_f64(&d),
            to_f64(&e),
            0.0,
            if ok { Verdict::Pass } else { Verdict::Fail },
        ));
    }

    let k1 = f64::from(k - 1);
    let chi = tree_chi_closed(p, k, 0.5);
    let params = json!({"k": k, "p": p});
    if chi.is_finite() {
        let b = p * k1.sqrt();
        // E|K ∩ [o]| = 1 and sum_n (k-1)^{-n/2} ((k-1) p)^n = 1 / (1 - p sqrt(k-1))
        let rhs = (2.0 / (1.0 - b)).exp();
        out.push(CheckReport::new("hammersley_welsh_tree_exact", params.clone(), chi, rhs, 0.0, verdict_le(chi, rhs, 0.0, &Tolerance::default())));
        for lambda in [0.5, 0.3, 0.7] {
            let lhs = tree_chi_closed(p, k, lambda);
            let rhs = tree_h_closed(p, k, lambda) * tree_h_closed(p, k, 1.0 - lambda);
            let rep = CheckReport::new(
                "series_product_tree_exact",
                json!({"k": k, "p": p, "lambda": lambda}),
                lhs,
                rhs,
                0.0,
                verdict_le(lhs, rhs, 0.0, &Tolerance::default()),
            );
            out.push(if lhs.is_finite() && rhs.is_finite() {
                rep
            } else {
                rep.inconclusive("series diverge at this p")
            });
        }
    } else {
        out.push(
            CheckReport::new("hammersley_welsh_tree_exact", params.clone(), chi, f64::INFINITY, 0.0, Verdict::Inconclusive)
                .note("p >= p_t on the tree: both sides infinite"),
        );
    }

    // P(o <-> [y]) = p^m at distance m, so the decay rate is -ln p
    let rate = -p.ln();
    let bound = 0.5 * k1.ln();
    let rep = CheckReport::new("point_to_fiber_rate_tree_exact", params.clone(), rate, bound, 0.0, if rate >= bound { Verdict::Pass } else { Verdict::Fail });
    out.push(if chi.is_finite() {
        rep
    } else {
        rep.inconclusive("decay bound only claimed below p_t")
    });

    // 1 - beta* equals the Hawkes dimension on the tree
    if p * k1 > 1.0 {
        let n = 10.0;
        let beta = -(p.powf(n)).ln() / (n * k1.ln());
        let hawkes = (p * k1).ln() / k1.ln();
        let diff = (1.0 - beta - hawkes).abs();
        out.push(CheckReport::new(
            "beta_dimension_identity_tree",
            params,
            1.0 - beta,
            hawkes,
            0.0,
            if diff <= 1e-12 { Verdict::Pass } else { Verdict::Fail },
        ));
    }
    Ok(out)
}
