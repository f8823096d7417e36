//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test --release -p percolab-core --test acceptance` runs all ten;
//! `-- 3 6` runs a subset.

use std::collections::HashMap;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use percolab_core::branching::{first_visit_fiber_outcome, run_z};
use percolab_core::dimension::{cover_outcome, dimension_estimate};
use percolab_core::estimators::{
    estimate_beta_star, fiber_count_outcome, first_visit_outcome, level_outcome, point_to_fiber_outcome,
    slab_crossing, slab_crossing_series, slab_outcome, slab_outcome_series,
};
use percolab_core::inequalities::{
    check_backscattering_ll, check_hammersley_welsh, check_mtp, check_mtp_tree_exact, check_oracle_instance,
    check_point_to_fiber_rate, check_series_product, check_supermultiplicativity, check_supermultiplicativity_exact,
    oracle_instances, point_to_fiber_decay, CheckReport,
};
use percolab_core::oracle::{
    exact_connectivity, exact_connectivity_rational, tree_chi_closed, tree_h_closed, tree_level_count_exact,
    truncated_slab_instance, SlabTarget, DEFAULT_STATE_LIMIT,
};
use percolab_core::records::write_json;
use percolab_core::{Family, GraphSpec, Instance, McConfig, SlabWindow, Tolerance, Verdict};

const SEED: u64 = 20_240_601;

struct Log {
    lines: Vec<String>,
    ok: bool,
}

impl Log {
    fn new() -> Self {
        Self { lines: Vec::new(), ok: true }
    }

    fn line(&mut self, s: impl Into<String>) {
        let s = s.into();
        println!("    {s}");
        self.lines.push(s);
    }

    fn expect(&mut self, cond: bool, s: impl Into<String>) {
        let s = s.into();
        self.line(format!("{} {s}", if cond { "ok  " } else { "FAIL" }));
        self.ok &= cond;
    }

    fn report(&mut self, r: &CheckReport) {
        let pass = r.verdict == Verdict::Pass;
        let note = r.note.as_deref().map(|n| format!(" [{n}]")).unwrap_or_default();
        self.expect(
            pass,
            format!("{} {}: lhs {:.6e} rhs {:.6e} sigma {:.3e} {:?}{note}", r.check, r.params, r.lhs, r.rhs, r.sigma, r.verdict),
        );
    }
}

fn q(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn f(x: &BigRational) -> f64 {
    x.to_f64().unwrap()
}

// ---------------------------------------------------------------- oracles

/// `E X_l^{a,b}` on the k-regular tree: go up `u` steps, then down
/// `u - l` steps avoiding the edge just used.
fn tree_x(p: &BigRational, k: u32, l: i64, a: i64, b: i64) -> BigRational {
    if !(a <= 0 && 0 <= b && a <= l && l <= b) {
        return BigRational::zero();
    }
    let k1 = BigRational::from_integer(BigInt::from(k - 1));
    let mut total = BigRational::zero();
    for u in l.max(0)..=b {
        let down = u - l;
        let count = if u == 0 {
            num_traits::pow(k1.clone(), down as usize)
        } else if down == 0 {
            BigRational::one()
        } else {
            BigRational::from_integer(BigInt::from(k - 2)) * num_traits::pow(k1.clone(), (down - 1) as usize)
        };
        total += count * num_traits::pow(p.clone(), (2 * u - l) as usize);
    }
    total
}

/// `sum_y p^{d(o,y)} (k-1)^{lambda h(y)}` summed path by path.
fn tree_chi_sum(p: f64, k: u32, lambda: f64, terms: i32) -> f64 {
    let k1 = f64::from(k - 1);
    let mut s = 0.0;
    for u in 0..terms {
        for j in 0..terms {
            let count = match (u, j) {
                (0, _) => k1.powi(j),
                (_, 0) => 1.0,
                _ => f64::from(k - 2) * k1.powi(j - 1),
            };
            s += count * p.powi(u + j) * k1.powf(lambda * f64::from(u - j));
        }
    }
    s
}

/// `sum_{n >= 0} (k-1)^{-lambda n} E X_{-n}^{-inf,0}`; below the origin
/// every vertex is a descendant.
fn tree_h_sum(p: f64, k: u32, lambda: f64, terms: i32) -> f64 {
    let k1 = f64::from(k - 1);
    (0..terms).map(|n| k1.powf(-lambda * f64::from(n)) * (k1 * p).powi(n)).sum()
}

/// Source-to-target-set connection probability by recursive edge factoring:
/// each edge is contracted (open) or deleted (closed) until the source meets
/// a target or is cut off. Works on numerators over `den^edges` for
/// `p = num/den`, memoised on the vertex partition.
fn factoring(inst: &Instance, p: &BigRational) -> BigRational {
    let mut comp: Vec<usize> = (0..inst.n_vertices).collect();
    for &t in &inst.targets {
        relabel(&mut comp, t, inst.targets[0]);
    }
    let mut f = Factoring {
        inst,
        num: p.numer().clone(),
        rest: p.denom() - p.numer(),
        den_pows: (0..=inst.edges.len()).map(|i| num_traits::pow(p.denom().clone(), i)).collect(),
        memo: HashMap::new(),
        last_use: (0..inst.n_vertices)
            .map(|v| inst.edges.iter().rposition(|&(a, b)| a == v || b == v).unwrap_or(0))
            .collect(),
    };
    let top = f.rec(0, comp);
    BigRational::new(top, f.den_pows[inst.edges.len()].clone())
}

fn relabel(comp: &mut [usize], from_vertex: usize, to_vertex: usize) {
    let (a, b) = (comp[from_vertex], comp[to_vertex]);
    if a != b {
        for c in comp.iter_mut() {
            if *c == a {
                *c = b;
            }
        }
    }
}

/// Labels of the vertices that still have edges to process, renumbered
/// with the source component first and the target component second.
fn canonical(inst: &Instance, last_use: &[usize], next: usize, comp: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    map.insert(comp[inst.source], 0);
    map.entry(comp[inst.targets[0]]).or_insert(1);
    (0..comp.len())
        .filter(|&v| last_use[v] >= next)
        .map(|v| {
            let fresh = map.len();
            *map.entry(comp[v]).or_insert(fresh)
        })
        .collect()
}

struct Factoring<'a> {
    inst: &'a Instance,
    num: BigInt,
    rest: BigInt,
    den_pows: Vec<BigInt>,
    memo: HashMap<(usize, Vec<usize>), BigInt>,
    last_use: Vec<usize>,
}

impl Factoring<'_> {
    /// Numerator over `den^(edges - next)`.
    fn rec(&mut self, next: usize, comp: Vec<usize>) -> BigInt {
        let inst = self.inst;
        let remaining = inst.edges.len() - next;
        let s = comp[inst.source];
        let t = comp[inst.targets[0]];
        if s == t {
            return self.den_pows[remaining].clone();
        }
        let mut seen = vec![false; inst.n_vertices];
        seen[s] = true;
        let mut changed = true;
        while changed {
            changed = false;
            for &(u, v) in &inst.edges[next..] {
                let (cu, cv) = (comp[u], comp[v]);
                if seen[cu] != seen[cv] {
                    seen[cu] = true;
                    seen[cv] = true;
                    changed = true;
                }
            }
        }
        if !seen[t] {
            return BigInt::zero();
        }
        let key = (next, canonical(inst, &self.last_use, next, &comp));
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let comp = &comp;
        let (u, v) = inst.edges[next];
        let out = if comp[u] == comp[v] {
            let skip = self.rec(next + 1, comp.clone());
            skip * &self.den_pows[1]
        } else {
            let mut merged = comp.clone();
            relabel(&mut merged, u, v);
            let open = self.rec(next + 1, merged);
            let closed = self.rec(next + 1, comp.clone());
            &self.num * open + &self.rest * closed
        };
        self.memo.insert(key, out.clone());
        out
    }
}

// ---------------------------------------------------------------- criteria

fn z_score(value: f64, stderr: f64, want: f64) -> f64 {
    if stderr > 0.0 {
        (value - want).abs() / stderr
    } else if value == want {
        0.0
    } else {
        f64::INFINITY
    }
}

fn c1(log: &mut Log) {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut cells = 0;
    let mut flagged = Vec::new();
    for k in [3u32, 4] {
        let g = GraphSpec::tree(k).unwrap();
        for p in [0.3, 0.5, 0.8] {
            let t = Instant::now();
            let cfg = McConfig::new(SEED, 100_000).substream("c1", u64::from(k) * 10 + (p * 10.0) as u64);
            let series = slab_crossing_series(&g, p, 8, &cfg).unwrap();
            let mut cell_worst: f64 = 0.0;
            let mut bad = Vec::new();
            for (n, s) in series.iter().enumerate() {
                let n = n as i32;
                let want = [p.powi(n), p.powi(n), (f64::from(k - 1) * p).powi(n)];
                for (rec, w) in [&s.p, &s.e, &s.d].into_iter().zip(want) {
                    let z = z_score(rec.value, rec.stderr, w);
                    cell_worst = cell_worst.max(z);
                    if z > 3.0 {
                        bad.push(format!("{}({n}) = {:.5} vs {w:.5} ({z:.2} se)", rec.quantity, rec.value));
                        flagged.push((k, p, n as u32));
                    }
                    assert_eq!(rec.n_samples, 100_000);
                    cells += 1;
                }
            }
            worst = worst.max(cell_worst);
            log.expect(
                bad.is_empty(),
                format!("k={k} p={p}: n=0..8, max |z| = {cell_worst:.2}, {:.1}s {}", t.elapsed().as_secs_f64(), bad.join("; ")),
            );
        }
    }
    let secs = start.elapsed().as_secs_f64();
    log.expect(secs < 300.0, format!("{cells} comparisons, max |z| = {worst:.2}, total {secs:.1}s (limit 300s, {} core(s))", cores()));
    if !flagged.is_empty() {
        // diagnostics only: the verdict above stands
        let bonferroni = 4.30;
        log.line(format!(
            "analysis: {cells} correlated comparisons at 3 se; max |z| {worst:.2} is {} the Bonferroni bound {bonferroni} (two-sided 0.27% family-wise)",
            if worst <= bonferroni { "within" } else { "beyond" }
        ));
        flagged.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1 && a.2 == b.2);
        for (k, p, n) in flagged {
            let g = GraphSpec::tree(k).unwrap();
            let want = p.powi(n as i32);
            let zs: Vec<String> = (0..5)
                .map(|i| {
                    let cfg = McConfig::new(SEED, 100_000).substream("c1_recheck", i);
                    let r = slab_crossing(&g, p, n, &cfg).unwrap().p;
                    format!("{:+.2}", (r.value - want) / r.stderr)
                })
                .collect();
            log.line(format!("analysis: k={k} p={p} P({n}) on 5 fresh streams, z = {}", zs.join(" ")));
        }
    }
}

fn cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn c2(log: &mut Log) {
    let g = GraphSpec::tree(3).unwrap();
    for p in [0.7, 0.85] {
        let cfg = McConfig::new(SEED, 10_000).substream("c2", (p * 100.0) as u64);
        let dim = dimension_estimate(&g, p, 12, &cfg, 0.01, 1_000_000).unwrap();
        let hawkes = (2.0 * p).ln() / 2f64.ln();
        log.line(format!(
            "p={p}: {} survivors of {} attempts",
            dim.covers.survivors, dim.covers.attempts
        ));
        log.expect(dim.covers.survivors == 10_000, "10^4 surviving replicas");
        log.expect(
            (dim.value - hawkes).abs() <= 0.05,
            format!("dimension {:.4} ± {:.4} vs log(2p)/log 2 = {hawkes:.4} (tol 0.05)", dim.value, dim.fit_error),
        );
        let beta = estimate_beta_star(&g, p, 12, &cfg.substream("beta", 0)).unwrap();
        let fit = beta.fit.unwrap();
        let sigma = dim.fit_error.hypot(fit.slope_se);
        let sum = dim.value + fit.slope;
        log.expect(
            (sum - 1.0).abs() <= 3.0 * sigma,
            format!("dimension + beta* = {:.4} + {:.4} = {sum:.4}, |sum - 1| <= 3 x {sigma:.4}", dim.value, fit.slope),
        );
    }
}

fn c3(log: &mut Log) {
    let tol = Tolerance::default();
    let cases = [(1, -2, 2), (2, -2, 3)];
    for g in [
        GraphSpec::tree(3).unwrap(),
        GraphSpec::tree_times_zd(3, 1).unwrap(),
        GraphSpec::lamplighter(3).unwrap(),
    ] {
        for p in [0.1, 0.2] {
            let cfg = McConfig::new(SEED, 100_000).substream("c3", (p * 10.0) as u64);
            for r in check_mtp(&g, p, &cases, &cfg, &tol).unwrap() {
                log.report(&r);
            }
        }
    }
    let exact_cases = [(1, -2, 2), (2, -2, 3), (1, 0, 1), (2, -1, 4), (-1, -3, 2), (3, -4, 6)];
    for p in [q(1, 10), q(1, 5)] {
        for r in check_mtp_tree_exact(3, &p, &exact_cases) {
            log.report(&r);
        }
        let mut agree = true;
        for &(l, a, b) in &exact_cases {
            agree &= tree_level_count_exact(&p, 3, l, a, b) == tree_x(&p, 3, l, a, b);
            agree &= tree_level_count_exact(&p, 3, -l, a - l, b - l) == tree_x(&p, 3, -l, a - l, b - l);
            let lhs = tree_x(&p, 3, l, a, b);
            let scale = num_traits::pow(q(2, 1), l.unsigned_abs() as usize);
            let rhs = tree_x(&p, 3, -l, a - l, b - l);
            let rhs = if l >= 0 { rhs / scale } else { rhs * scale };
            agree &= lhs == rhs;
        }
        log.expect(agree, format!("p={p}: path-count oracle equals the closed forms and satisfies the identity exactly"));
    }
}

fn c4(log: &mut Log) {
    let g = GraphSpec::tree_times_zd(3, 1).unwrap();
    let t = Instant::now();
    for depth in 1..=2 {
        let inst = truncated_slab_instance(&g, depth, 1, SlabTarget::Fiber).unwrap();
        let p = q(3, 10);
        let dp = exact_connectivity_rational(&inst, &p, DEFAULT_STATE_LIMIT).unwrap();
        let fac = factoring(&inst, &p);
        log.expect(dp == fac, format!("depth {depth} w=1 ({} edges): DP = factoring = {dp}", inst.edges.len()));
    }
    log.line(format!("factoring cross-check {:.1}s", t.elapsed().as_secs_f64()));
    let t = Instant::now();
    for p in [q(1, 10), q(3, 10), q(1, 2), q(7, 10), q(9, 10)] {
        for n in 1..=2 {
            for m in 1..=2 {
                log.report(&check_supermultiplicativity_exact(&g, 1, n, m, &p).unwrap());
            }
        }
    }
    log.line(format!("exact rational checks {:.1}s", t.elapsed().as_secs_f64()));
    let t = Instant::now();
    let tol = Tolerance::default();
    let cfg = McConfig::new(SEED, 50_000).substream("c4", 0);
    for n in 1..=4 {
        for m in 1..=4 {
            log.report(&check_supermultiplicativity(&g, 0.3, n, m, &cfg, &tol).unwrap());
        }
    }
    log.line(format!("Monte-Carlo checks {:.1}s", t.elapsed().as_secs_f64()));
}

/// Per replica and estimator, the raw outcome at each grid point; the
/// replica is skipped for that estimator if any grid point was censored.
struct Monotone {
    name: String,
    compared: u64,
    skipped: u64,
    violations: u64,
}

fn monotone(name: &str, grid: &[f64], replicas: u64, outcome: impl Fn(f64, u64) -> (Vec<u64>, bool) + Sync) -> Monotone {
    let cfg = McConfig::new(SEED, replicas);
    let per = cfg
        .replicate(|r| -> percolab_core::Result<(u64, bool)> {
            let runs: Vec<(Vec<u64>, bool)> = grid.iter().map(|&p| outcome(p, r)).collect();
            if runs.iter().any(|(_, c)| *c) {
                return Ok((0, true));
            }
            let mut bad = 0;
            for w in runs.windows(2) {
                assert_eq!(w[0].0.len(), w[1].0.len());
                bad += w[0].0.iter().zip(&w[1].0).filter(|(a, b)| a > b).count() as u64;
            }
            Ok((bad, false))
        })
        .unwrap();
    Monotone {
        name: name.to_string(),
        compared: per.iter().filter(|x| !x.1).count() as u64,
        skipped: per.iter().filter(|x| x.1).count() as u64,
        violations: per.iter().map(|x| x.0).sum(),
    }
}

fn c5(log: &mut Log) {
    let replicas = 10_000;
    let cfg = McConfig::new(SEED, replicas).with_height_cap(8).with_budget(50_000);
    let mut results = Vec::new();
    for g in [
        GraphSpec::tree(3).unwrap(),
        GraphSpec::tree_times_zd(3, 1).unwrap(),
        GraphSpec::tree_times_zd(3, 2).unwrap(),
        GraphSpec::lamplighter(3).unwrap(),
    ] {
        let tag = format!("{} d={}", g.family().as_str(), g.d());
        // T x Z^2 percolates far below 0.3
        let grid = if g.d() == 2 { [0.04, 0.07, 0.1, 0.13, 0.16] } else { [0.1, 0.15, 0.2, 0.25, 0.3] };
        log.line(format!("{tag}: grid {grid:?}"));
        let (g, c, grid) = (&g, &cfg, &grid);
        results.push(monotone(&format!("{tag} slab P/E/floor n=4"), grid, replicas, |p, r| {
            let o = slab_outcome(g, p, 4, c, r).unwrap();
            (vec![o.hit as u64, o.target_sites, o.floor_sites], o.censored)
        }));
        results.push(monotone(&format!("{tag} nested slabs n<=4"), grid, replicas, |p, r| {
            let os = slab_outcome_series(g, p, 4, c, r).unwrap();
            let cens = os.iter().any(|o| o.censored);
            (os.iter().flat_map(|o| [o.hit as u64, o.target_sites, o.floor_sites]).collect(), cens)
        }));
        results.push(monotone(&format!("{tag} first-visit Q n=3"), grid, replicas, |p, r| {
            let (hit, cens) = first_visit_outcome(g, p, 3, c, r).unwrap();
            (vec![hit as u64], cens)
        }));
        results.push(monotone(&format!("{tag} level counts [-3,3]"), grid, replicas, |p, r| {
            level_outcome(g, p, SlabWindow::new(-3, 3).unwrap(), c, r).unwrap()
        }));
        results.push(monotone(&format!("{tag} point-to-fiber m=2,4"), grid, replicas, |p, r| {
            let a = point_to_fiber_outcome(g, p, 2, c, r).unwrap();
            let b = point_to_fiber_outcome(g, p, 4, c, r).unwrap();
            (vec![a.0 as u64, b.0 as u64], a.1 || b.1)
        }));
        results.push(monotone(&format!("{tag} fiber intersection"), grid, replicas, |p, r| {
            let x = fiber_count_outcome(g, p, c, r).unwrap();
            (vec![x.count], x.censored)
        }));
        results.push(monotone(&format!("{tag} dimension covers n<=4"), grid, replicas, |p, r| {
            let v = cover_outcome(g, p, 4, c, r).unwrap();
            (v.cover.clone(), v.censored)
        }));
        if g.family() != Family::Lamplighter {
            results.push(monotone(&format!("{tag} first-visit fiber B n=3"), grid, replicas, |p, r| {
                let (hit, cens) = first_visit_fiber_outcome(g, p, 3, c, r).unwrap();
                (vec![hit as u64], cens)
            }));
            results.push(monotone(&format!("{tag} branching Z first generation N=2"), grid, replicas, |p, r| {
                let z = run_z(g, p, 2, 1, c, r, 1000).unwrap();
                (vec![z.generation_sizes[1]], z.censored)
            }));
        }
    }
    let grid = &[0.1, 0.15, 0.2, 0.25, 0.3];
    for (name, inst) in oracle_instances().unwrap() {
        let inst = &inst;
        results.push(monotone(&format!("instance {name}"), grid, replicas, |p, r| {
            (vec![inst.sample(SEED, r, p).unwrap() as u64], false)
        }));
    }
    for m in &results {
        log.expect(
            m.violations == 0 && m.compared + m.skipped == replicas,
            format!("{}: {} replicas compared, {} censored skipped, {} violations", m.name, m.compared, m.skipped, m.violations),
        );
    }
    let total: u64 = results.iter().map(|m| m.violations).sum();
    log.line(format!("{} estimator and family combinations, {total} violations", results.len()));
}

fn c6(log: &mut Log) {
    let tol = Tolerance::default();
    let insts = oracle_instances().unwrap();
    log.expect(insts.len() >= 10, format!("{} instances", insts.len()));
    log.expect(insts.iter().all(|(_, i)| i.edges.len() <= 30), "every instance has <= 30 edges");
    log.expect(insts.iter().any(|(n, _)| n.starts_with("ll k=3 n=1")), "includes a depth-1 lamplighter slab at k=3");
    log.expect(insts.iter().filter(|(n, _)| n.starts_with("txz")).count() >= 3, "includes >= 3 tree x Z truncations");
    let p = 0.5;
    let mut all4 = true;
    for (i, (name, inst)) in insts.iter().enumerate() {
        let exact = f(&factoring(inst, &q(1, 2)));
        let dp: f64 = exact_connectivity(inst, &p, DEFAULT_STATE_LIMIT).unwrap();
        log.expect((dp - exact).abs() < 1e-12, format!("{name}: DP {dp:.12} = factoring {exact:.12}"));
        let cfg = McConfig::new(SEED, 1_000_000).substream("c6", i as u64);
        let r = check_oracle_instance(name, inst, p, &cfg, &tol).unwrap();
        let z = (r.lhs - r.rhs) / r.sigma;
        all4 &= z.abs() <= 4.0;
        log.report(&r);
        log.line(format!("  z = {z:+.2}"));
    }
    log.expect(all4, "all instances within 4 sigma simultaneously");
}

fn c7(log: &mut Log) {
    let g = GraphSpec::lamplighter(3).unwrap();
    let tol = Tolerance::default();
    for p in [0.15, 0.25] {
        let cfg = McConfig::new(SEED, 100_000).substream("c7", (p * 100.0) as u64);
        for n in 0..=2 {
            let r = check_backscattering_ll(&g, p, n, &cfg, &tol).unwrap();
            log.report(&r);
        }
        let two_p3 = 2.0 * p.powi(3);
        let r0 = check_backscattering_ll(&g, p, 0, &cfg, &tol).unwrap();
        log.expect(
            r0.lhs - 3.0 * r0.sigma > two_p3,
            format!("n=0 against the literal 2p^3 = {two_p3:.6}: lhs {:.4}", r0.lhs),
        );
        // at n=0 the target fiber is the origin's: the lamp switch at o
        // lies on level 0, so E(0) = 1 + p and RHS = 2p^3 (1 + p)
        let e0 = slab_crossing(&g, p, 0, &cfg.substream("backscatter_e", 0)).unwrap().e;
        log.line(format!(
            "E(0) = {:.4} ± {:.4}, z = {:+.2} against 1 + p; RHS(0) / 2p^3 = {:.4}",
            e0.value,
            e0.stderr,
            (e0.value - 1.0 - p) / e0.stderr,
            r0.rhs / two_p3
        ));
    }
}

fn c8(log: &mut Log) {
    let tol = Tolerance::default();
    for g in [GraphSpec::tree_times_zd(3, 1).unwrap(), GraphSpec::lamplighter(3).unwrap()] {
        for p in [0.1, 0.2] {
            let cfg = McConfig::new(SEED, 100_000).substream("c8", (p * 10.0) as u64);
            log.report(&check_hammersley_welsh(&g, p, 8, 12, &cfg, &tol).unwrap());
            log.report(&check_series_product(&g, p, 0.5, 12, &cfg, &tol).unwrap());
        }
    }
    let k = 3;
    let k1 = f64::from(k - 1);
    for p in [0.1, 0.2] {
        let chi = tree_chi_sum(p, k, 0.5, 400);
        let closed = tree_chi_closed(p, k, 0.5);
        log.expect((chi - closed).abs() < 1e-9 * chi, format!("tree p={p}: chi summed {chi:.12} = closed form {closed:.12}"));
        // E|K ∩ [o]| = 1 on the tree and D(n) = ((k-1)p)^n
        let d_sum: f64 = (0..400).map(|n| k1.powf(-0.5 * f64::from(n)) * (k1 * p).powi(n)).sum();
        let hw = (2.0 * d_sum).exp();
        log.expect(chi <= hw, format!("tree p={p}: chi {chi:.6} <= {hw:.6} (zero tolerance)"));
        for lambda in [0.5, 0.3, 0.7] {
            let lhs = tree_chi_sum(p, k, lambda, 400);
            let (h1, h2) = (tree_h_sum(p, k, lambda, 400), tree_h_sum(p, k, 1.0 - lambda, 400));
            let agree = (h1 - tree_h_closed(p, k, lambda)).abs() < 1e-9 * h1;
            log.expect(
                agree && lhs <= h1 * h2,
                format!("tree p={p} lambda={lambda}: chi {lambda} = {lhs:.6} <= H H = {:.6} (zero tolerance)", h1 * h2),
            );
        }
    }
}

fn c9(log: &mut Log) {
    let tol = Tolerance::default();
    let tree = GraphSpec::tree(3).unwrap();
    let p = 0.6;
    // paths to the fiber at distance m stay within m/2 levels of the start
    let cfg = McConfig::new(SEED, 100_000).substream("c9", 0).with_height_cap(6);
    let fit = point_to_fiber_decay(&tree, p, 12, &cfg).unwrap();
    let (rate, se) = (fit.rate.unwrap(), fit.rate_se.unwrap());
    let exact = -p.ln();
    log.expect(
        (rate - exact).abs() <= 3.0 * se,
        format!("tree p=0.6: rate {rate:.4} ± {se:.4} vs -log p = {exact:.4} (3 x fit error), {:.2} decades", fit.decades),
    );
    let half = 0.5 * 2f64.ln();
    log.expect(rate > half, format!("tree p=0.6: rate {rate:.4} > (1/2)log 2 = {half:.4}"));
    let txz = GraphSpec::tree_times_zd(3, 1).unwrap();
    let cfg = McConfig::new(SEED, 100_000).substream("c9", 1).with_height_cap(16);
    let (r, fit) = check_point_to_fiber_rate(&txz, 0.15, 8, &cfg, &tol).unwrap();
    let pts: Vec<String> = fit.points.iter().map(|(m, e)| format!("m={m}: {:.2e}", e.value)).collect();
    log.line(format!("txz p=0.15 points {}", pts.join(", ")));
    log.report(&r);
}

fn c10(log: &mut Log) {
    let g = GraphSpec::tree_times_zd(3, 1).unwrap();
    let cfg = McConfig::new(SEED, 1_000_000);
    let t = Instant::now();
    let s = slab_crossing(&g, 0.2, 6, &cfg).unwrap();
    let secs = t.elapsed().as_secs_f64();
    log.expect(
        secs < 60.0,
        format!(
            "10^6 depth-6 explorations (k=3, d=1, p=0.2) in {secs:.2}s on {} core(s); P = {:.5}, censored {}",
            cores(),
            s.p.value,
            s.p.censor_rate
        ),
    );
    let render = |workers: usize| {
        let cfg = McConfig::new(SEED, 100_000).with_workers(Some(workers));
        let s = slab_crossing(&g, 0.2, 6, &cfg).unwrap();
        let mut buf = Vec::new();
        write_json(&mut buf, &[s.p, s.e, s.d]).unwrap();
        buf
    };
    let base = render(1);
    for w in [2, 4, 8] {
        log.expect(render(w) == base, format!("workers={w} output byte-identical to workers=1 ({} bytes)", base.len()));
    }
}

fn main() {
    type Criterion = (u32, &'static str, fn(&mut Log));
    let criteria: [Criterion; 10] = [
        (1, "tree exactness of P, E, D", c1),
        (2, "Hawkes dimension and dimension + beta* = 1", c2),
        (3, "tilted mass-transport identity", c3),
        (4, "supermultiplicativity", c4),
        (5, "monotone coupling", c5),
        (6, "exact-oracle gate", c6),
        (7, "lamplighter backscattering", c7),
        (8, "Hammersley-Welsh chain", c8),
        (9, "point-to-fiber decay", c9),
        (10, "performance and worker determinism", c10),
    ];
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.trim_start_matches(['C', 'c']).parse().ok())
        .collect();
    let mut summary = Vec::new();
    for (id, title, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        println!("criterion {id}: {title}");
        let mut log = Log::new();
        let t = Instant::now();
        run(&mut log);
        let line = format!(
            "{} criterion {id}: {title} ({:.1}s)",
            if log.ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
        println!("{line}\n");
        summary.push((log.ok, line));
    }
    println!("acceptance summary");
    for (_, line) in &summary {
        println!("{line}");
    }
    if summary.iter().any(|(ok, _)| !ok) {
        std::process::exit(1);
    }
}
