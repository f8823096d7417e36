//! The three graph families, in coordinates adapted to a fixed end of the tree.
//!
//! A tree vertex is written as `(up_steps, descent_word)`: climb `up_steps`
//! edges from the origin towards the fixed end, then descend along the word.
//! The ancestor line `a_0 = o, a_1, a_2, ...` is never entered by a descent:
//! when `up_steps >= 1` the first digit indexes the `k - 2` children of
//! `a_{up_steps}` other than `a_{up_steps - 1}`. Every vertex has exactly one
//! such representation, so structural equality is vertex equality.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{PercolabError, Result};

pub type Word = SmallVec<[u8; 16]>;

const ANCESTOR_SYMBOL: u8 = u8::MAX;

#[derive(Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TreeVertex {
    up_steps: u32,
    descent: Word,
}

impl Clone for TreeVertex {
    // the derived clone goes through the generic iterator path
    fn clone(&self) -> Self {
        Self::from_parts(self.up_steps, Word::from_slice(&self.descent))
    }
}

impl TreeVertex {
    pub fn origin() -> Self {
        Self {
            up_steps: 0,
            descent: Word::new(),
        }
    }

    /// Builds a vertex from raw coordinates, rejecting non-canonical words.
    pub fn new(up_steps: u32, descent: &[u8], k: u32) -> Result<Self> {
        let v = Self {
            up_steps,
            descent: Word::from_slice(descent),
        };
        v.validate(k)?;
        Ok(v)
    }

    pub(crate) fn from_parts(up_steps: u32, descent: Word) -> Self {
        Self { up_steps, descent }
    }

    pub fn up_steps(&self) -> u32 {
        self.up_steps
    }

    pub fn descent(&self) -> &[u8] {
        &self.descent
    }

    pub fn validate(&self, k: u32) -> Result<()> {
        for (i, &digit) in self.descent.iter().enumerate() {
            let bound = if i == 0 && self.up_steps >= 1 { k - 2 } else { k - 1 };
            if u32::from(digit) >= bound {
                return Err(PercolabError::MalformedInput(format!(
                    "descent digit {digit} at position {i} must be < {bound} for k = {k}"
                )));
            }
        }
        Ok(())
    }

    /// Height relative to the origin: steps towards the end minus steps away.
    #[inline]
    pub fn height(&self) -> i64 {
        i64::from(self.up_steps) - self.descent.len() as i64
    }

    /// The unique neighbour one level up.
    pub fn parent(&self) -> Self {
        if self.descent.is_empty() {
            Self::from_parts(self.up_steps + 1, Word::new())
        } else {
            let len = self.descent.len() - 1;
            Self::from_parts(self.up_steps, Word::from_slice(&self.descent[..len]))
        }
    }

    pub fn ancestor(&self, generations: u32) -> Self {
        let mut v = self.clone();
        for _ in 0..generations {
            v = v.parent();
        }
        v
    }

    /// The `k - 1` neighbours one level down, in canonical order.
    pub fn children(&self, k: u32) -> Vec<Self> {
        (0..k - 1).map(|i| self.child(k, i)).collect()
    }

    /// Child number `i` in canonical order (`i < k - 1`).
    pub fn child(&self, k: u32, i: u32) -> Self {
        debug_assert!(i < k - 1);
        if self.descent.is_empty() && self.up_steps >= 1 {
            if i == 0 {
                Self::from_parts(self.up_steps - 1, Word::new())
            } else {
                let mut w = Word::new();
                w.push((i - 1) as u8);
                Self::from_parts(self.up_steps, w)
            }
        } else {
            let mut w = Word::from_slice(&self.descent);
            w.push(i as u8);
            Self::from_parts(self.up_steps, w)
        }
    }

    /// Descendant number `index` among the `(k-1)^n` generation-`n`
    /// descendants, digits read most significant first.
    pub fn descendant(&self, k: u32, n: u32, index: u128) -> Result<Self> {
        let branching = u128::from(k - 1);
        let bound = branching
            .checked_pow(n)
            .ok_or_else(|| PercolabError::InvalidParameter(format!("(k-1)^{n} overflows")))?;
        if index >= bound {
            return Err(PercolabError::IndexOutOfRange { index, bound });
        }
        let mut digits = vec![0u32; n as usize];
        let mut rest = index;
        for slot in digits.iter_mut().rev() {
            *slot = (rest % branching) as u32;
            rest /= branching;
        }
        let mut v = self.clone();
        for d in digits {
            v = v.child(k, d);
        }
        Ok(v)
    }

    /// Path from `a_top` down to this vertex, with the ancestor-line child
    /// written as a reserved symbol. Requires `top >= up_steps`.
    fn symbols_from(&self, top: u32) -> Vec<u8> {
        let mut s = vec![ANCESTOR_SYMBOL; (top - self.up_steps) as usize];
        s.extend_from_slice(&self.descent);
        s
    }

    /// Graph distance in the tree.
    pub fn distance(&self, other: &Self) -> u64 {
        let top = self.up_steps.max(other.up_steps);
        let a = self.symbols_from(top);
        let b = other.symbols_from(top);
        let common = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
        (a.len() - common + b.len() - common) as u64
    }

    /// `Some(depth)` when `self` lies `depth` generations below `ancestor`.
    pub fn depth_below(&self, ancestor: &Self) -> Option<u32> {
        let gap = ancestor.height() - self.height();
        if gap < 0 {
            return None;
        }
        (self.ancestor(gap as u32) == *ancestor).then_some(gap as u32)
    }

    pub(crate) fn write_bytes(&self, buf: &mut Vec<u8>) {
        buf.extend_from_slice(&self.up_steps.to_le_bytes());
        buf.extend_from_slice(&(self.descent.len() as u16).to_le_bytes());
        buf.extend_from_slice(&self.descent);
    }
}

impl fmt::Display for TreeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "^{}", self.up_steps)?;
        if !self.descent.is_empty() {
            f.write_str(":")?;
            for d in &self.descent {
                write!(f, "{d}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "tree", alias = "Tree")]
    Tree,
    #[serde(rename = "txz", alias = "TreeTimesZd")]
    TreeTimesZd,
    #[serde(rename = "ll", alias = "Lamplighter")]
    Lamplighter,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Tree => "tree",
            Family::TreeTimesZd => "txz",
            Family::Lamplighter => "ll",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = PercolabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" | "Tree" => Ok(Family::Tree),
            "txz" | "TreeTimesZd" => Ok(Family::TreeTimesZd),
            "ll" | "Lamplighter" => Ok(Family::Lamplighter),
            other => Err(PercolabError::MalformedInput(format!(
                "unknown family {other:?} (expected tree, txz or ll)"
            ))),
        }
    }
}

#[derive(Deserialize)]
struct RawGraphSpec {
    family: Family,
    k: u32,
    #[serde(default)]
    d: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGraphSpec")]
pub struct GraphSpec {
    family: Family,
    k: u32,
    d: u32,
}

impl TryFrom<RawGraphSpec> for GraphSpec {
    type Error = PercolabError;

    fn try_from(raw: RawGraphSpec) -> Result<Self> {
        GraphSpec::new(raw.family, raw.k, raw.d)
    }
}

impl GraphSpec {
    /// `d` is ignored (and stored as 0) unless the family is `TreeTimesZd`.
    pub fn new(family: Family, k: u32, d: u32) -> Result<Self> {
        if k < 3 {
            return Err(PercolabError::InvalidParameter(format!(
                "tree degree k must be >= 3, got {k}"
            )));
        }
        if k > 200 {
            return Err(PercolabError::InvalidParameter(format!(
                "tree degree k = {k} is above the supported maximum 200"
            )));
        }
        let d = match family {
            Family::TreeTimesZd => {
                if !(1..=2).contains(&d) {
                    return Err(PercolabError::InvalidParameter(format!(
                        "lattice dimension d must be 1 or 2, got {d}"
                    )));
                }
                d
            }
            _ => 0,
        };
        Ok(Self { family, k, d })
    }

    pub fn tree(k: u32) -> Result<Self> {
        Self::new(Family::Tree, k, 0)
    }

    pub fn tree_times_zd(k: u32, d: u32) -> Result<Self> {
        Self::new(Family::TreeTimesZd, k, d)
    }

    pub fn lamplighter(k: u32) -> Result<Self> {
        Self::new(Family::Lamplighter, k, 0)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn degree(&self) -> u32 {
        match self.family {
            Family::Tree => self.k,
            Family::TreeTimesZd => self.k + 2 * self.d,
            Family::Lamplighter => self.k + 1,
        }
    }

    /// `ln(k - 1)`, the unit in which heights are converted to exponents.
    pub fn log_branching(&self) -> f64 {
        f64::from(self.k - 1).ln()
    }

    pub fn origin(&self) -> SiteId {
        let fiber = match self.family {
            Family::Tree => Fiber::None,
            Family::TreeTimesZd => Fiber::Lattice([0, 0]),
            Family::Lamplighter => Fiber::Lamps(Vec::new()),
        };
        SiteId {
            tree: TreeVertex::origin(),
            fiber,
        }
    }

    pub fn validate_site(&self, v: &SiteId) -> Result<()> {
        v.tree.validate(self.k)?;
        match (&v.fiber, self.family) {
            (Fiber::None, Family::Tree) => Ok(()),
            (Fiber::Lattice(z), Family::TreeTimesZd) => {
                if self.d == 1 && z[1] != 0 {
                    return Err(PercolabError::MalformedInput(
                        "second lattice coordinate must be 0 when d = 1".into(),
                    ));
                }
                Ok(())
            }
            (Fiber::Lamps(lamps), Family::Lamplighter) => {
                for lamp in lamps {
                    lamp.validate(self.k)?;
                }
                if lamps.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(PercolabError::MalformedInput(
                        "lamp set must be strictly sorted".into(),
                    ));
                }
                Ok(())
            }
            _ => Err(PercolabError::MalformedInput(format!(
                "fiber coordinate does not match family {}",
                self.family
            ))),
        }
    }

    /// Graph neighbours of `v` together with the kind of connecting edge.
    pub fn neighbors(&self, v: &SiteId) -> Result<Vec<(SiteId, EdgeKind)>> {
        self.validate_site(v)?;
        let mut out = Vec::with_capacity(self.degree() as usize);
        self.neighbors_into(v, &mut out);
        Ok(out)
    }

    /// Unchecked neighbour enumeration into a reusable buffer.
    pub(crate) fn neighbors_into(&self, v: &SiteId, out: &mut Vec<(SiteId, EdgeKind)>) {
        out.clear();
        out.push((
            SiteId {
                tree: v.tree.parent(),
                fiber: v.fiber.clone(),
            },
            EdgeKind::Tree,
        ));
        let k = self.k;
        for i in 0..k - 1 {
            out.push((
                SiteId {
                    tree: v.tree.child(k, i),
                    fiber: v.fiber.clone(),
                },
                EdgeKind::Tree,
            ));
        }
        match &v.fiber {
            Fiber::None => {}
            Fiber::Lattice(z) => {
                for axis in 0..self.d as usize {
                    for step in [-1, 1] {
                        let mut w = *z;
                        w[axis] += step;
                        out.push((
                            SiteId {
                                tree: v.tree.clone(),
                                fiber: Fiber::Lattice(w),
                            },
                            EdgeKind::Lattice,
                        ));
                    }
                }
            }
            Fiber::Lamps(lamps) => {
                let mut flipped = lamps.clone();
                match flipped.binary_search(&v.tree) {
                    Ok(i) => {
                        flipped.remove(i);
                    }
                    Err(i) => flipped.insert(i, v.tree.clone()),
                }
                out.push((
                    SiteId {
                        tree: v.tree.clone(),
                        fiber: Fiber::Lamps(flipped),
                    },
                    EdgeKind::LampFlip,
                ));
            }
        }
    }

    /// `h(pi(u), pi(v))`: the height of `v` seen from `u`.
    pub fn height_between(&self, u: &SiteId, v: &SiteId) -> i64 {
        v.tree.height() - u.tree.height()
    }

    /// Modular function `(k-1)^{h(u,v)}` as an exact rational.
    pub fn modular(&self, u: &SiteId, v: &SiteId) -> BigRational {
        let h = self.height_between(u, v);
        let base = BigInt::from(self.k - 1);
        let power: BigInt = Pow::pow(&base, h.unsigned_abs());
        if h >= 0 {
            BigRational::from_integer(power)
        } else {
            BigRational::new(BigInt::one(), power)
        }
    }

    pub fn modular_f64(&self, u: &SiteId, v: &SiteId) -> f64 {
        f64::from(self.k - 1).powi(self.height_between(u, v) as i32)
    }

    /// The site over generation-`n` descendant number `index` of `pi(base)`
    /// carrying the same fiber coordinate as `base`.
    pub fn descendant_fiber_representative(
        &self,
        base: &SiteId,
        n: u32,
        index: u128,
    ) -> Result<SiteId> {
        self.validate_site(base)?;
        Ok(SiteId {
            tree: base.tree.descendant(self.k, n, index)?,
            fiber: base.fiber.clone(),
        })
    }

    /// Number of generation-`n` descendants, `(k-1)^n`.
    pub fn descendant_count(&self, n: u32) -> u128 {
        u128::from(self.k - 1).pow(n)
    }

    /// Tree vertex at distance `m` from `pi(base)` at the same height: up
    /// `m/2` steps, then down `m/2` steps avoiding the way back.
    pub fn same_height_target(&self, base: &TreeVertex, m: u32) -> Result<TreeVertex> {
        if !m.is_multiple_of(2) {
            return Err(PercolabError::InvalidParameter(format!(
                "same-height targets need an even tree distance, got {m}"
            )));
        }
        let half = m / 2;
        let mut v = base.ancestor(half);
        if half == 0 {
            return Ok(v);
        }
        // first step down must leave the branch that contains base
        let back = base.ancestor(half - 1);
        let first = (0..self.k - 1)
            .map(|i| v.child(self.k, i))
            .find(|c| *c != back)
            .expect("k >= 3 leaves a second child");
        v = first;
        for _ in 1..half {
            v = v.child(self.k, 0);
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Fiber {
    None,
    /// Point of Z^d; unused coordinates are 0.
    Lattice([i32; 2]),
    /// Sorted set of lit lamps.
    Lamps(Vec<TreeVertex>),
}

impl Fiber {
    fn write_bytes(&self, buf: &mut Vec<u8>) {
        match self {
            Fiber::None => buf.push(0),
            Fiber::Lattice(z) => {
                buf.push(1);
                buf.extend_from_slice(&z[0].to_le_bytes());
                buf.extend_from_slice(&z[1].to_le_bytes());
            }
            Fiber::Lamps(lamps) => {
                buf.push(2);
                buf.extend_from_slice(&(lamps.len() as u32).to_le_bytes());
                for lamp in lamps {
                    lamp.write_bytes(buf);
                }
            }
        }
    }

    /// Sup-norm of a lattice coordinate; 0 for other fibers.
    pub fn lattice_norm(&self) -> u32 {
        match self {
            Fiber::Lattice(z) => z[0].unsigned_abs().max(z[1].unsigned_abs()),
            _ => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SiteId {
    pub tree: TreeVertex,
    pub fiber: Fiber,
}

impl SiteId {
    pub fn height(&self) -> i64 {
        self.tree.height()
    }

    /// Self-delimiting byte encoding; injective on sites.
    pub fn write_bytes(&self, buf: &mut Vec<u8>) {
        self.tree.write_bytes(buf);
        self.fiber.write_bytes(buf);
    }

    pub fn same_fiber(&self, other: &SiteId) -> bool {
        self.tree == other.tree
    }
}

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tree)?;
        match &self.fiber {
            Fiber::None => Ok(()),
            Fiber::Lattice(z) => write!(f, "@({},{})", z[0], z[1]),
            Fiber::Lamps(lamps) => {
                f.write_str("@{")?;
                for (i, l) in lamps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{l}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    Tree,
    Lattice,
    LampFlip,
}

impl EdgeKind {
    fn tag(self) -> u8 {
        match self {
            EdgeKind::Tree => 0,
            EdgeKind::Lattice => 1,
            EdgeKind::LampFlip => 2,
        }
    }
}

/// Canonical byte identity of an undirected edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey {
    bytes: Vec<u8>,
}

impl EdgeKey {
    pub fn new(u: &SiteId, v: &SiteId, kind: EdgeKind) -> Self {
        let mut bytes = Vec::with_capacity(48);
        write_edge_bytes(u, v, kind, &mut bytes);
        Self { bytes }
    }

    #[cfg(test)]
    pub(crate) fn from_bytes(bytes: Vec<u8>) -> Self {
        Self { bytes }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

/// Appends the canonical encoding of edge `{u, v}` to `buf`.
pub fn write_edge_bytes(u: &SiteId, v: &SiteId, kind: EdgeKind, buf: &mut Vec<u8>) {
    let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
    buf.push(kind.tag());
    lo.write_bytes(buf);
    hi.write_bytes(buf);
}

/// Heights `[lo, hi]` relative to a base site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlabWindow {
    lo: i64,
    hi: i64,
}

impl SlabWindow {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(PercolabError::MalformedInput(format!(
                "slab window [{lo}, {hi}] has lo > hi"
            )));
        }
        if lo > 0 {
            return Err(PercolabError::MalformedInput(format!(
                "slab window lower end {lo} must be <= 0"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// `L_{-n,0}`.
    pub fn below(n: u32) -> Self {
        Self {
            lo: -i64::from(n),
            hi: 0,
        }
    }

    /// `L_{-cap,cap}`, the finite stand-in for the whole graph.
    pub fn capped(cap: u32) -> Self {
        Self {
            lo: -i64::from(cap),
            hi: i64::from(cap),
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    #[inline]
    pub fn contains(&self, h: i64) -> bool {
        self.lo <= h && h <= self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
