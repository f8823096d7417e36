use percolab_core::branching::estimate_first_visit_fiber;
use percolab_core::dimension::{dimension_estimate, DEFAULT_SURVIVAL_FLOOR};
use percolab_core::estimators::{
    estimate_beta_star, estimate_chi, estimate_d_u, estimate_fiber_mean, estimate_fiber_tail, estimate_h,
    estimate_point_to_fiber, estimate_q, estimate_x, slab_crossing,
};
use percolab_core::inequalities::{
    check_backscattering_ll, check_hammersley_welsh, check_mtp, check_oracle_instance, check_point_to_fiber_rate,
    check_series_product, check_supermultiplicativity, check_supermultiplicativity_exact, oracle_instances,
    tree_exact_suite, CheckReport, Tolerance,
};
use percolab_core::mc::derive_seed;
use percolab_core::oracle::rational;
use percolab_core::{EstimateRecord, Family, GraphSpec, McConfig, PercolabError};

use crate::config::Settings;

/// Failure of a command: usage problems exit 1.
#[derive(Debug)]
pub struct Usage(pub String);

impl From<String> for Usage {
    fn from(s: String) -> Self {
        Usage(s)
    }
}

impl From<&str> for Usage {
    fn from(s: &str) -> Self {
        Usage(s.to_string())
    }
}

impl From<PercolabError> for Usage {
    fn from(e: PercolabError) -> Self {
        Usage(e.to_string())
    }
}

pub const QUANTITIES: &[&str] = &[
    "P", "E", "D", "U", "Q", "B", "X", "chi", "H", "beta_star", "fiber_tail", "fiber_mean", "point_to_fiber",
    "dimension",
];

fn need_n(s: &Settings, q: &str) -> Result<u32, Usage> {
    s.n.ok_or_else(|| Usage(format!("quantity {q} needs --n")))
}

/// Records for one quantity at one `p`.
pub fn estimate(s: &Settings, quantity: &str, g: &GraphSpec, p: f64, cfg: &McConfig) -> Result<Vec<EstimateRecord>, Usage> {
    let lambda = s.lambda.unwrap_or(0.5);
    let recs = match quantity {
        "P" | "E" | "D" => {
            let c = slab_crossing(g, p, need_n(s, quantity)?, cfg)?;
            vec![match quantity {
                "P" => c.p,
                "E" => c.e,
                _ => c.d,
            }]
        }
        "U" => {
            let du = estimate_d_u(g, p, need_n(s, quantity)?, cfg)?;
            vec![du.u_direct, du.u_transport]
        }
        "Q" => vec![estimate_q(g, p, need_n(s, quantity)?, cfg)?],
        "B" => vec![estimate_first_visit_fiber(g, p, need_n(s, quantity)?, cfg)?],
        "X" => {
            let l = s.level.ok_or("quantity X needs --level")?;
            let a = s.lo.ok_or("quantity X needs --lo")?;
            let b = s.hi.ok_or("quantity X needs --hi")?;
            vec![estimate_x(g, p, l, a, b, cfg)?]
        }
        "chi" => vec![estimate_chi(g, p, lambda, cfg.height_cap, cfg)?],
        "H" => vec![estimate_h(g, p, lambda, cfg.height_cap, cfg)?],
        "beta_star" => estimate_beta_star(g, p, need_n(s, quantity)?, cfg)?.to_records(g, p, cfg),
        "fiber_tail" => {
            let t = estimate_fiber_tail(g, p, cfg)?;
            let mut out = vec![t.mean.clone()];
            out.extend(t.tail.iter().cloned());
            if let Some(fit) = t.fit {
                let mut r = EstimateRecord::new("fiber_tail_rate", g, p, cfg).height_cap(cfg.height_cap);
                r.value = -fit.slope;
                r.stderr = fit.slope_se;
                r.n_samples = cfg.samples;
                out.push(r);
            }
            if let Some(w) = &t.warning {
                if let Some(first) = out.first_mut() {
                    first.warn(w.clone());
                }
            }
            out
        }
        "fiber_mean" => vec![estimate_fiber_mean(g, p, cfg)?],
        "point_to_fiber" => vec![estimate_point_to_fiber(g, p, need_n(s, quantity)?, cfg)?],
        "dimension" => {
            let n = need_n(s, quantity)?;
            let max_attempts = (cfg.samples as f64 / DEFAULT_SURVIVAL_FLOOR).ceil() as u64;
            let est = dimension_estimate(g, p, n, cfg, DEFAULT_SURVIVAL_FLOOR, max_attempts)?;
            vec![est.to_record(g, p, cfg)]
        }
        other => {
            return Err(Usage(format!(
                "unknown quantity {other:?} (expected one of {})",
                QUANTITIES.join(", ")
            )))
        }
    };
    Ok(recs)
}

fn quantities(s: &Settings) -> Result<Vec<String>, Usage> {
    let q = s.quantity.as_deref().ok_or("missing --quantity")?;
    let list: Vec<String> = q.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect();
    if list.is_empty() {
        return Err("empty --quantity".into());
    }
    Ok(list)
}

pub fn cmd_estimate(s: &Settings) -> Result<Vec<EstimateRecord>, Usage> {
    let g = s.graph()?;
    let cfg = s.mc()?;
    let p = s.single_p()?;
    let mut out = Vec::new();
    for q in quantities(s)? {
        out.extend(estimate(s, &q, &g, p, &cfg)?);
    }
    Ok(out)
}

/// One block of records per `(p, quantity)`. Coupled sweeps reuse the seed
/// for every `p`; uncoupled ones derive a seed per grid index.
pub fn cmd_sweep(s: &Settings) -> Result<Vec<EstimateRecord>, Usage> {
    let g = s.graph()?;
    let base = s.mc()?;
    let grid = s.grid()?;
    let qs = quantities(s)?;
    let coupled = s.coupled.unwrap_or(true);
    let mut out = Vec::new();
    for (i, &p) in grid.iter().enumerate() {
        let cfg = if coupled {
            base.clone()
        } else {
            base.clone().with_seed(derive_seed(base.seed, "sweep", i as u64))
        };
        for q in &qs {
            out.extend(estimate(s, q, &g, p, &cfg)?);
        }
    }
    Ok(out)
}

pub const SUITES: &[&str] = &[
    "tree-exact",
    "mtp",
    "backscattering",
    "hw",
    "series-product",
    "point-to-fiber",
    "supermultiplicativity",
    "oracle",
];

fn graph_or(s: &Settings, family: Family, k: u32, d: u32) -> Result<GraphSpec, Usage> {
    let family = s.family.unwrap_or(family);
    Ok(GraphSpec::new(family, s.k.unwrap_or(k), s.d.unwrap_or(d))?)
}

fn families(s: &Settings) -> Result<Vec<GraphSpec>, Usage> {
    let k = s.k.unwrap_or(3);
    match s.family {
        Some(f) => Ok(vec![GraphSpec::new(f, k, s.d.unwrap_or(1))?]),
        None => Ok(vec![
            GraphSpec::tree(k)?,
            GraphSpec::tree_times_zd(k, s.d.unwrap_or(1))?,
            GraphSpec::lamplighter(k)?,
        ]),
    }
}

pub fn run_suite(s: &Settings, suite: &str, cfg: &McConfig) -> Result<Vec<CheckReport>, Usage> {
    let tol = Tolerance::default();
    let mut out = Vec::new();
    match suite {
        "tree-exact" => {
            let k = s.k.unwrap_or(3);
            let ps = match s.p {
                Some(p) => vec![p],
                None => vec![0.1, 0.3, 0.5, 0.6],
            };
            for p in ps {
                out.extend(tree_exact_suite(k, p)?);
            }
        }
        "mtp" => {
            let p = s.p.unwrap_or(0.2);
            let cases = match (s.level, s.lo, s.hi) {
                (Some(l), Some(a), Some(b)) => vec![(l, a, b)],
                _ => vec![(1, -2, 2), (2, -2, 3)],
            };
            for g in families(s)? {
                out.extend(check_mtp(&g, p, &cases, cfg, &tol)?);
            }
        }
        "backscattering" => {
            let g = GraphSpec::lamplighter(s.k.unwrap_or(3))?;
            let p = s.p.unwrap_or(0.25);
            let ns: Vec<u32> = match s.n {
                Some(n) => vec![n],
                None => vec![0, 1, 2],
            };
            for n in ns {
                out.push(check_backscattering_ll(&g, p, n, cfg, &tol)?);
            }
        }
        "hw" => {
            let g = graph_or(s, Family::TreeTimesZd, 3, 1)?;
            let p = s.p.unwrap_or(0.2);
            let cap = s.height_cap.unwrap_or(12);
            out.push(check_hammersley_welsh(&g, p, s.n.unwrap_or(8), cap, cfg, &tol)?);
        }
        "series-product" => {
            let g = graph_or(s, Family::TreeTimesZd, 3, 1)?;
            let p = s.p.unwrap_or(0.2);
            let cap = s.height_cap.unwrap_or(12);
            let lambdas = match s.lambda {
                Some(l) => vec![l],
                None => vec![0.5, 0.3],
            };
            for l in lambdas {
                out.push(check_series_product(&g, p, l, cap, cfg, &tol)?);
            }
        }
        "point-to-fiber" => {
            let g = graph_or(s, Family::Tree, 3, 1)?;
            let p = s.p.unwrap_or(if g.family() == Family::Tree { 0.6 } else { 0.15 });
            let m_max = s.n.unwrap_or(8);
            // unique paths on the tree: a cap of m/2 loses nothing
            let cap = s.height_cap.unwrap_or(if g.family() == Family::Tree { m_max.div_ceil(2) } else { 16 });
            let cfg = cfg.clone().with_height_cap(cap);
            out.push(check_point_to_fiber_rate(&g, p, m_max, &cfg, &tol)?.0);
        }
        "supermultiplicativity" => {
            let g = graph_or(s, Family::TreeTimesZd, 3, 1)?;
            let p = s.p.unwrap_or(0.3);
            let exact_p = rational(p)?;
            for (n, m) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
                if g.family() != Family::Lamplighter {
                    out.push(check_supermultiplicativity_exact(&g, 1, n, m, &exact_p)?);
                }
                out.push(check_supermultiplicativity(&g, p, n, m, cfg, &tol)?);
            }
        }
        "oracle" => {
            let p = s.p.unwrap_or(0.5);
            for (name, inst) in oracle_instances()? {
                out.push(check_oracle_instance(&name, &inst, p, cfg, &tol)?);
            }
        }
        other => {
            return Err(Usage(format!(
                "unknown suite {other:?} (expected all or one of {})",
                SUITES.join(", ")
            )))
        }
    }
    Ok(out)
}

pub fn cmd_verify(s: &Settings) -> Result<Vec<CheckReport>, Usage> {
    let cfg = s.mc()?;
    let suite = s.suite.as_deref().unwrap_or("all");
    if suite == "all" {
        let mut out = Vec::new();
        for name in SUITES {
            out.extend(run_suite(s, name, &cfg)?);
        }
        Ok(out)
    } else {
        run_suite(s, suite, &cfg)
    }
}
