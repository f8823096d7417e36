//! Exact values for validation: closed forms on the tree and connection
//! probabilities of small explicit graphs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Zero};
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{PercolabError, Result};
use crate::graph::{EdgeKey, EdgeKind, Family, Fiber, GraphSpec, SiteId, TreeVertex};
use crate::sampler::edge_uniform;

/// Edge limit of [`exact_connectivity_small`].
pub const SMALL_EDGE_LIMIT: usize = 30;

/// Default state limit of [`exact_connectivity`].
pub const DEFAULT_STATE_LIMIT: usize = 2_000_000;

/// `p^n`: the tree has a unique path to each descendant fiber.
pub fn tree_path_probability(p: f64, n: u32) -> f64 {
    p.powi(n as i32)
}

pub fn tree_path_probability_exact(p: &BigRational, n: u32) -> BigRational {
    num_traits::pow(p.clone(), n as usize)
}

/// Probability that the origin reaches generation `n` below it on the tree:
/// `q_0 = 1`, `q_n = 1 - (1 - p q_{n-1})^{k-1}`.
pub fn tree_reach_level(p: f64, k: u32, n: u32) -> f64 {
    let mut q = 1.0;
    for _ in 0..n {
        q = 1.0 - (1.0 - p * q).powi(k as i32 - 1);
    }
    q
}

/// Number of tree vertices reached from the origin by `u` steps up then
/// `m` steps down without backtracking.
fn tree_path_count(k: u32, u: u32, m: u32) -> u128 {
    let k1 = u128::from(k - 1);
    match (u, m) {
        (_, 0) => 1,
        (0, m) => k1.pow(m),
        (_, m) => u128::from(k - 2) * k1.pow(m - 1),
    }
}

/// `sum_x P(o <-> x) (k-1)^{lambda h(o,x)}` over tree vertices at path length
/// `u + m <= cap`. Non-decreasing in `cap`.
pub fn tree_chi_tilted(p: f64, k: u32, lambda: f64, cap: u32) -> f64 {
    let k1 = f64::from(k - 1);
    let mut total = 0.0;
    for u in 0..=cap {
        for m in 0..=cap - u {
            let count = tree_path_count(k, u, m) as f64;
            total += count * p.powi((u + m) as i32) * k1.powf(lambda * (f64::from(u) - f64::from(m)));
        }
    }
    total
}

/// `sum_{|l| <= cap} (k-1)^{lambda l} E X_l^{-cap,cap}` on the tree: the exact
/// counterpart of the truncated Monte-Carlo susceptibility.
pub fn tree_chi_window(p: f64, k: u32, lambda: f64, cap: u32) -> f64 {
    let k1 = f64::from(k - 1);
    let cap = i64::from(cap);
    (-cap..=cap)
        .map(|l| k1.powf(lambda * l as f64) * tree_level_count(p, k, l, -cap, cap))
        .sum()
}

/// Untruncated tree susceptibility, finite iff `p (k-1)^lambda < 1` and
/// `p (k-1)^{1-lambda} < 1`.
pub fn tree_chi_closed(p: f64, k: u32, lambda: f64) -> f64 {
    let k1 = f64::from(k - 1);
    let a = p * k1.powf(lambda);
    let b = p * k1.powf(1.0 - lambda);
    if a >= 1.0 || b >= 1.0 {
        return f64::INFINITY;
    }
    1.0 / (1.0 - b) + a / (1.0 - a) + (f64::from(k) - 2.0) / k1 * a / (1.0 - a) * b / (1.0 - b)
}

/// Untruncated tree half-space sum `1 / (1 - p (k-1)^{1-lambda})`.
pub fn tree_h_closed(p: f64, k: u32, lambda: f64) -> f64 {
    let b = p * f64::from(k - 1).powf(1.0 - lambda);
    if b >= 1.0 {
        f64::INFINITY
    } else {
        1.0 / (1.0 - b)
    }
}

/// Truncated half-space sum `sum_{n=0}^{cap} (k-1)^{-lambda n} E X_{-n}^{-cap,0}`.
pub fn tree_h_window(p: f64, k: u32, lambda: f64, cap: u32) -> f64 {
    let b = p * f64::from(k - 1).powf(1.0 - lambda);
    (0..=cap).map(|n| b.powi(n as i32)).sum()
}

/// `E X_l^{a,b}` on the tree.
pub fn tree_level_count(p: f64, k: u32, l: i64, a: i64, b: i64) -> f64 {
    tree_level_terms(k, l, a, b)
        .map(|(count, len)| count as f64 * p.powi(len as i32))
        .sum()
}

/// `E X_l^{a,b}` on the tree in exact arithmetic.
pub fn tree_level_count_exact(p: &BigRational, k: u32, l: i64, a: i64, b: i64) -> BigRational {
    tree_level_terms(k, l, a, b).fold(BigRational::zero(), |acc, (count, len)| {
        acc + BigRational::from_integer(BigInt::from(count)) * num_traits::pow(p.clone(), len as usize)
    })
}

/// `(number of vertices, path length)` groups for level `l` inside `[a, b]`:
/// up `u` steps with `max(0, l) <= u <= b`, then down `u - l`.
fn tree_level_terms(k: u32, l: i64, a: i64, b: i64) -> impl Iterator<Item = (u128, u32)> {
    let valid = a <= l && l <= b && a <= 0 && b >= 0;
    let lo = l.max(0);
    let hi = if valid { b } else { lo - 1 };
    (lo..=hi).map(move |u| {
        let m = (u - l) as u32;
        (tree_path_count(k, u as u32, m), u as u32 + m)
    })
}

/// Explicit finite graph with a source and a target set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize)>,
    /// Identity of each edge in the infinite graph, when materialised from one.
    #[serde(skip)]
    pub edge_keys: Option<Vec<EdgeKey>>,
    pub source: usize,
    pub targets: Vec<usize>,
}

impl Instance {
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize)>, source: usize, targets: Vec<usize>) -> Result<Self> {
        let inst = Self {
            n_vertices,
            edges,
            edge_keys: None,
            source,
            targets,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |v: usize| {
            if v >= self.n_vertices {
                Err(PercolabError::IndexOutOfRange {
                    index: v as u128,
                    bound: self.n_vertices as u128,
                })
            } else {
                Ok(())
            }
        };
        check(self.source)?;
        if self.targets.is_empty() {
            return Err(PercolabError::MalformedInput("instance has no targets".into()));
        }
        for &t in &self.targets {
            check(t)?;
        }
        for &(u, v) in &self.edges {
            check(u)?;
            check(v)?;
        }
        if let Some(keys) = &self.edge_keys {
            if keys.len() != self.edges.len() {
                return Err(PercolabError::MalformedInput("edge key count mismatch".into()));
            }
        }
        Ok(())
    }

    /// Text form: header lines `vertices N`, `source S`, `targets T1 T2 ...`,
    /// then one `u v` line per edge. Blank lines and `#` comments are ignored.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices {}", self.n_vertices);
        let _ = writeln!(s, "source {}", self.source);
        let targets: Vec<String> = self.targets.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(s, "targets {}", targets.join(" "));
        for (u, v) in &self.edges {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (mut n, mut source, mut targets) = (None, None, None);
        let mut edges = Vec::new();
        let bad = |line: usize, msg: &str| PercolabError::MalformedInput(format!("line {line}: {msg}"));
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().expect("nonempty line");
            let nums = |it: std::str::SplitWhitespace| -> Result<Vec<usize>> {
                it.map(|x| x.parse::<usize>().map_err(|_| bad(i + 1, &format!("bad integer {x:?}"))))
                    .collect()
            };
            match head {
                "vertices" => n = nums(parts)?.first().copied(),
                "source" => source = nums(parts)?.first().copied(),
                "targets" => targets = Some(nums(parts)?),
                _ => {
                    let u = head.parse::<usize>().map_err(|_| bad(i + 1, &format!("unknown line {line:?}")))?;
                    let rest = nums(parts)?;
                    if rest.len() != 1 {
                        return Err(bad(i + 1, "edge lines need exactly two vertices"));
                    }
                    edges.push((u, rest[0]));
                }
            }
        }
        Self::new(
            n.ok_or_else(|| PercolabError::MalformedInput("missing 'vertices' line".into()))?,
            edges,
            source.ok_or_else(|| PercolabError::MalformedInput("missing 'source' line".into()))?,
            targets.ok_or_else(|| PercolabError::MalformedInput("missing 'targets' line".into()))?,
        )
    }

    /// Whether the source reaches a target using the edges with `open[i]`.
    pub fn connected_with(&self, open: impl Fn(usize) -> bool) -> bool {
        let mut uf = UnionFind::new(self.n_vertices);
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            if open(i) {
                uf.union(u, v);
            }
        }
        let s = uf.find(self.source);
        self.targets.iter().any(|&t| uf.find(t) == s)
    }

    /// Monte-Carlo replica using the hashed randomness of the underlying
    /// infinite graph (requires edge keys).
    pub fn sample(&self, seed: u64, replica: u64, p: f64) -> Result<bool> {
        let keys = self
            .edge_keys
            .as_ref()
            .ok_or_else(|| PercolabError::InvalidParameter("instance has no edge keys".into()))?;
        Ok(self.connected_with(|i| edge_uniform(seed, replica, &keys[i]) < p))
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

const S_LABEL: u8 = 0;
const T_LABEL: u8 = 1;

/// Relabels non-terminal components `2, 3, ...` by first appearance.
fn canonical(labels: &mut [u8]) {
    let mut map = [u8::MAX; 256];
    let mut next = 2u8;
    for l in labels.iter_mut() {
        if *l < 2 {
            continue;
        }
        if map[*l as usize] == u8::MAX {
            map[*l as usize] = next;
            next += 1;
        }
        *l = map[*l as usize];
    }
}

/// Probability that the source is joined to the target set, each edge open
/// independently with probability `p`.
///
/// Edges are processed in order with the connectivity of the current
/// frontier (vertices with both processed and unprocessed edges) as state,
/// i.e. deletion-contraction with memoisation on frontier partitions. The
/// source's and targets' components carry reserved labels; when they merge
/// the mass is a success, and when one leaves the frontier it is a failure.
/// Fails with `TooLarge` when more than `state_limit` states are live.
pub fn exact_connectivity<T>(inst: &Instance, p: &T, state_limit: usize) -> Result<T>
where
    T: Clone + Num,
{
    let ar = Plain {
        p: p.clone(),
        q: T::one() - p.clone(),
    };
    Ok(frontier_dp(inst, &ar, state_limit)?.0)
}

/// [`exact_connectivity`] in exact arithmetic. With `p = a/b` every weight
/// after `i` edges is an integer over `b^i`, so the recursion runs on
/// integers and divides once at the end.
pub fn exact_connectivity_rational(inst: &Instance, p: &BigRational, state_limit: usize) -> Result<BigRational> {
    if *p < BigRational::zero() || *p > BigRational::from_integer(1.into()) {
        return Err(PercolabError::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    let ar = Scaled {
        a: p.numer().clone(),
        c: p.denom() - p.numer(),
        b: p.denom().clone(),
    };
    let (mass, edges) = frontier_dp(inst, &ar, state_limit)?;
    Ok(BigRational::new(mass, num_traits::pow(ar.b, edges)))
}

/// Weights carried through the frontier recursion.
trait Arith {
    type W: Clone;
    fn one(&self) -> Self::W;
    fn zero(&self) -> Self::W;
    fn is_zero(&self, w: &Self::W) -> bool;
    fn add(&self, a: Self::W, b: Self::W) -> Self::W;
    fn open(&self, w: &Self::W) -> Self::W;
    fn closed(&self, w: &Self::W) -> Self::W;
    /// Rescales finished mass by one more edge.
    fn carry(&self, w: Self::W) -> Self::W;
}

struct Plain<T> {
    p: T,
    q: T,
}

impl<T: Clone + Num> Arith for Plain<T> {
    type W = T;
    fn one(&self) -> T {
        T::one()
    }
    fn zero(&self) -> T {
        T::zero()
    }
    fn is_zero(&self, w: &T) -> bool {
        w.is_zero()
    }
    fn add(&self, a: T, b: T) -> T {
        a + b
    }
    fn open(&self, w: &T) -> T {
        w.clone() * self.p.clone()
    }
    fn closed(&self, w: &T) -> T {
        w.clone() * self.q.clone()
    }
    fn carry(&self, w: T) -> T {
        w
    }
}

struct Scaled {
    a: BigInt,
    c: BigInt,
    b: BigInt,
}

impl Arith for Scaled {
    type W = BigInt;
    fn one(&self) -> BigInt {
        BigInt::from(1)
    }
    fn zero(&self) -> BigInt {
        BigInt::zero()
    }
    fn is_zero(&self, w: &BigInt) -> bool {
        w.is_zero()
    }
    fn add(&self, a: BigInt, b: BigInt) -> BigInt {
        a + b
    }
    fn open(&self, w: &BigInt) -> BigInt {
        w * &self.a
    }
    fn closed(&self, w: &BigInt) -> BigInt {
        w * &self.c
    }
    fn carry(&self, w: BigInt) -> BigInt {
        w * &self.b
    }
}

/// Success mass and the number of edges it is scaled by.
fn frontier_dp<A: Arith>(inst: &Instance, ar: &A, state_limit: usize) -> Result<(A::W, usize)> {
    inst.validate()?;
    let is_target = {
        let mut v = vec![false; inst.n_vertices];
        for &t in &inst.targets {
            v[t] = true;
        }
        v
    };
    if is_target[inst.source] {
        return Ok((ar.one(), 0));
    }
    let label_of = |v: usize| -> Option<u8> {
        if v == inst.source {
            Some(S_LABEL)
        } else if is_target[v] {
            Some(T_LABEL)
        } else {
            None
        }
    };
    // targets act as one vertex: drop loops within the merged terminal sets
    let edges: Vec<(usize, usize)> = inst
        .edges
        .iter()
        .copied()
        .filter(|&(u, v)| u != v && !(is_target[u] && is_target[v]))
        .collect();
    let mut last_use = vec![usize::MAX; inst.n_vertices];
    let mut last_target_entry = 0;
    for (i, &(u, v)) in edges.iter().enumerate() {
        for w in [u, v] {
            if is_target[w] && last_use[w] == usize::MAX {
                last_target_entry = i;
            }
            last_use[w] = i;
        }
    }
    if last_use[inst.source] == usize::MAX {
        return Ok((ar.zero(), 0));
    }

    let mut frontier: Vec<usize> = Vec::new();
    let mut states: FxHashMap<Vec<u8>, A::W> = FxHashMap::default();
    states.insert(Vec::new(), ar.one());
    let mut success = ar.zero();
    let mut fresh_slot: Vec<usize> = Vec::new();

    for (i, &(u, v)) in edges.iter().enumerate() {
        fresh_slot.clear();
        for w in [u, v] {
            if !frontier.contains(&w) {
                frontier.push(w);
                fresh_slot.push(w);
            }
        }
        let iu = frontier.iter().position(|&w| w == u).expect("on frontier");
        let iv = frontier.iter().position(|&w| w == v).expect("on frontier");
        let leaving: Vec<usize> = frontier
            .iter()
            .enumerate()
            .filter(|(_, &w)| last_use[w] == i)
            .map(|(j, _)| j)
            .collect();

        success = ar.carry(success);
        let mut next: FxHashMap<Vec<u8>, A::W> = FxHashMap::default();
        for (state, prob) in states.drain() {
            let mut base = state;
            for &w in &fresh_slot {
                base.push(label_of(w).unwrap_or(200));
            }
            if fresh_slot.len() == 2 && base[base.len() - 2] >= 2 && base[base.len() - 1] >= 2 {
                // two fresh non-terminals are distinct components
                let n = base.len();
                base[n - 1] = 201;
            }
            // closed edge
            let targets_pending = i < last_target_entry;
            push_state(ar, &mut next, base.clone(), &leaving, targets_pending, ar.closed(&prob));
            // open edge
            let (a, b) = (base[iu], base[iv]);
            if (a == S_LABEL && b == T_LABEL) || (a == T_LABEL && b == S_LABEL) {
                success = ar.add(success, ar.open(&prob));
                continue;
            }
            let (keep, drop) = if a <= b { (a, b) } else { (b, a) };
            let mut merged = base;
            for l in merged.iter_mut() {
                if *l == drop {
                    *l = keep;
                }
            }
            push_state(ar, &mut next, merged, &leaving, targets_pending, ar.open(&prob));
        }
        for &j in leaving.iter().rev() {
            frontier.remove(j);
        }
        if next.len() > state_limit {
            return Err(PercolabError::TooLarge {
                what: "frontier states",
                actual: next.len(),
                limit: state_limit,
            });
        }
        states = next;
    }
    Ok((success, edges.len()))
}

fn push_state<A: Arith>(
    ar: &A,
    next: &mut FxHashMap<Vec<u8>, A::W>,
    mut state: Vec<u8>,
    leaving: &[usize],
    targets_pending: bool,
    prob: A::W,
) {
    if ar.is_zero(&prob) {
        return;
    }
    for &j in leaving.iter().rev() {
        let l = state.remove(j);
        let dead = match l {
            S_LABEL => true,
            T_LABEL => !targets_pending,
            _ => false,
        };
        if dead && !state.contains(&l) {
            // the source or target component can no longer grow
            return;
        }
    }
    canonical(&mut state);
    match next.remove(&state) {
        Some(acc) => {
            next.insert(state, ar.add(acc, prob));
        }
        None => {
            next.insert(state, prob);
        }
    }
}

/// [`exact_connectivity`] restricted to at most [`SMALL_EDGE_LIMIT`] edges.
pub fn exact_connectivity_small<T: Clone + Num>(inst: &Instance, p: &T) -> Result<T> {
    if inst.edges.len() > SMALL_EDGE_LIMIT {
        return Err(PercolabError::TooLarge {
            what: "edges",
            actual: inst.edges.len(),
            limit: SMALL_EDGE_LIMIT,
        });
    }
    exact_connectivity(inst, p, DEFAULT_STATE_LIMIT)
}

/// Exhaustive enumeration over all `2^E` configurations.
pub fn brute_force_connectivity(inst: &Instance, p: f64) -> Result<f64> {
    if inst.edges.len() > 24 {
        return Err(PercolabError::TooLarge {
            what: "edges",
            actual: inst.edges.len(),
            limit: 24,
        });
    }
    let e = inst.edges.len();
    let mut total = 0.0;
    for mask in 0u64..(1u64 << e) {
        if inst.connected_with(|i| mask >> i & 1 == 1) {
            let k = mask.count_ones() as i32;
            total += p.powi(k) * (1.0 - p).powi(e as i32 - k);
        }
    }
    Ok(total)
}

/// The decimal value `p` was written as (shortest round-trip form), so
/// `0.3` becomes `3/10` rather than its binary approximation.
pub fn rational(p: f64) -> Result<BigRational> {
    if !p.is_finite() {
        return Err(PercolabError::InvalidParameter(format!("{p} is not finite")));
    }
    let text = format!("{:e}", p.abs());
    let (mantissa, exp) = text.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits: BigInt = format!("{int}{frac}").parse().expect("decimal digits");
    let shift = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if shift >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, shift as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-shift) as usize))
    };
    if p < 0.0 {
        r = -r;
    }
    Ok(r)
}

/// What the materialised slab connects the source to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SlabTarget {
    /// Every site over the fixed depth-`n` descendant.
    Fiber,
    /// The single site over that descendant with the origin's fiber
    /// coordinate; bottom-level lateral edges are dropped so paths meet
    /// the bottom level only at their end.
    FirstVisitSite,
}

/// The slab `L_{-n,0}` below the origin with fibers truncated: lattice
/// coordinates to `[-w, w]^d`, lamps to the tree vertices of the slab.
///
/// Edges are listed subtree by subtree (post-order) so the frontier of
/// [`exact_connectivity`] stays small.
pub fn truncated_slab_instance(g: &GraphSpec, n: u32, w: u32, target: SlabTarget) -> Result<Instance> {
    let k = g.k();
    let mut tree_order: Vec<TreeVertex> = Vec::new();
    post_order(&TreeVertex::origin(), k, n, &mut tree_order);
    let fibers: Vec<Fiber> = match g.family() {
        Family::Tree => vec![Fiber::None],
        Family::TreeTimesZd => {
            let w = w as i32;
            let mut out = Vec::new();
            if g.d() == 1 {
                for x in -w..=w {
                    out.push(Fiber::Lattice([x, 0]));
                }
            } else {
                for x in -w..=w {
                    for y in -w..=w {
                        out.push(Fiber::Lattice([x, y]));
                    }
                }
            }
            out
        }
        Family::Lamplighter => {
            let mut region = tree_order.clone();
            region.sort();
            let m = region.len();
            if m > 16 {
                return Err(PercolabError::TooLarge {
                    what: "lamp region",
                    actual: m,
                    limit: 16,
                });
            }
            (0u32..1 << m)
                .map(|mask| {
                    Fiber::Lamps(
                        (0..m)
                            .filter(|i| mask >> i & 1 == 1)
                            .map(|i| region[i].clone())
                            .collect(),
                    )
                })
                .collect()
        }
    };

    let mut index: BTreeMap<SiteId, usize> = BTreeMap::new();
    for t in &tree_order {
        for f in &fibers {
            let id = index.len();
            index.insert(
                SiteId {
                    tree: t.clone(),
                    fiber: f.clone(),
                },
                id,
            );
        }
    }
    let bottom = -i64::from(n);
    let mut edges = Vec::new();
    let mut keys = Vec::new();
    let mut add = |a: &SiteId, b: &SiteId, kind: EdgeKind, edges: &mut Vec<(usize, usize)>| {
        if let (Some(&ia), Some(&ib)) = (index.get(a), index.get(b)) {
            edges.push((ia, ib));
            keys.push(EdgeKey::new(a, b, kind));
        }
    };
    for t in &tree_order {
        let lateral = !(target == SlabTarget::FirstVisitSite && t.height() == bottom);
        for f in &fibers {
            let site = SiteId {
                tree: t.clone(),
                fiber: f.clone(),
            };
            for (nb, kind) in g.neighbors(&site)? {
                match kind {
                    EdgeKind::Tree => {
                        // each tree edge once, from its lower end
                        if !t.descent().is_empty() && nb.tree == t.parent() {
                            add(&site, &nb, kind, &mut edges);
                        }
                    }
                    _ => {
                        if lateral && site < nb {
                            add(&site, &nb, kind, &mut edges);
                        }
                    }
                }
            }
        }
    }
    let origin = g.origin();
    let target_tree = origin.tree.descendant(k, n, 0)?;
    let origin_fiber = origin.fiber.clone();
    let targets: Vec<usize> = index
        .iter()
        .filter(|(s, _)| {
            s.tree == target_tree && (target == SlabTarget::Fiber || s.fiber == origin_fiber)
        })
        .map(|(_, &i)| i)
        .collect();
    let source = *index.get(&origin).ok_or_else(|| {
        PercolabError::InvalidParameter("origin outside the truncated fiber window".into())
    })?;
    let mut inst = Instance::new(index.len(), edges, source, targets)?;
    inst.edge_keys = Some(keys);
    Ok(inst)
}

fn post_order(v: &TreeVertex, k: u32, depth: u32, out: &mut Vec<TreeVertex>) {
    if depth > 0 {
        for c in v.children(k) {
            post_order(&c, k, depth - 1, out);
        }
    }
    out.push(v.clone());
}
