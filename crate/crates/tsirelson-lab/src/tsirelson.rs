//! The Tsirelson norm: iterates, limit, admissible partitions, and a
//! definition-level brute-force oracle.
//!
//! The recursion being computed is
//!
//! ```text
//! |x|_0     = sup norm of x
//! |x|_{n+1} = max( |x|_n , (1/2) max_k { sum_i |E_i x|_n : {k} <= E_1 < ... < E_k } )
//! ```
//!
//! where the `E_i` range over successive finite index sets whose first set
//! starts at index `k` or later, and `|x|_T = lim_n |x|_n` satisfies the same
//! identity with `T` on both sides.
//!
//! The engine restricts the maximization to *interval* parts: iterate norms
//! are 1-unconditional and monotone under enlarging index sets, so padding
//! each part to its hull never decreases the sum. That reduction is not
//! assumed silently — `oracle_iterate` recomputes the same values from the
//! definition with arbitrary finite-set parts, and the test suites check the
//! two agree exactly.
//!
//! Within a fixed section the maximization over interval parts collapses
//! further onto runs of support points (parts without support contribute
//! nothing and only tighten admissibility), which makes the inner
//! maximization a dynamic program over (cut position, parts used) instead of
//! an explicit enumeration.

use std::collections::HashMap;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ratvec::{IndexInterval, Rational, Vec00};

/// Largest support the brute-force oracle will accept.
pub const ORACLE_MAX_SUPPORT: usize = 8;

fn half() -> Rational {
    Rational::new(1.into(), 2.into())
}

/// A family `{k} <= E_1 < ... < E_k` of successive index intervals whose
/// first part starts at index `k` or later.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AdmissiblePartition {
    parts: Vec<IndexInterval>,
}

impl AdmissiblePartition {
    /// Validates the admissibility invariants.
    pub fn new(parts: Vec<IndexInterval>) -> Result<Self, PartitionError> {
        if parts.is_empty() {
            return Err(PartitionError::Empty);
        }
        for w in 1..parts.len() {
            if !parts[w - 1].precedes(&parts[w]) {
                return Err(PartitionError::OutOfOrder(w));
            }
        }
        let k = parts.len();
        if parts[0].lo() < k {
            return Err(PartitionError::StartsTooLow {
                lo: parts[0].lo(),
                k,
            });
        }
        Ok(AdmissiblePartition { parts })
    }

    /// Number of parts.
    pub fn k(&self) -> usize {
        self.parts.len()
    }

    pub fn parts(&self) -> &[IndexInterval] {
        &self.parts
    }
}

impl fmt::Display for AdmissiblePartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={}:", self.k())?;
        for p in &self.parts {
            write!(f, " {p}")?;
        }
        Ok(())
    }
}

impl<'de> Deserialize<'de> for AdmissiblePartition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            parts: Vec<IndexInterval>,
        }
        let r = Repr::deserialize(deserializer)?;
        AdmissiblePartition::new(r.parts).map_err(serde::de::Error::custom)
    }
}

/// Invalid admissible partition.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("admissible partition needs at least one part")]
    Empty,
    #[error("parts are not strictly successive at position {0}")]
    OutOfOrder(usize),
    #[error("first part starts at {lo} but {k} parts require a start >= {k}")]
    StartsTooLow { lo: usize, k: usize },
}

/// Enumerates every admissible family of successive non-empty subintervals
/// of `section`, for every part count `k`. The stream is finite and free of
/// duplicates; it is empty when the section cannot host any part (for
/// example `[0,0]`, since no part may touch index 0).
pub fn admissible_partitions(
    section: IndexInterval,
) -> impl Iterator<Item = AdmissiblePartition> {
    let lo = section.lo();
    let hi = section.hi();
    (1..=hi.max(1)).flat_map(move |k| {
        placements(lo.max(k), hi, k).map(|parts| AdmissiblePartition { parts })
    })
}

/// All ways to place `remaining` successive non-empty intervals inside
/// `[start, hi]`.
fn placements(
    start: usize,
    hi: usize,
    remaining: usize,
) -> Box<dyn Iterator<Item = Vec<IndexInterval>>> {
    if remaining == 0 {
        return Box::new(std::iter::once(Vec::new()));
    }
    if hi + 1 < remaining || start + remaining > hi + 1 {
        return Box::new(std::iter::empty());
    }
    // Leave room for the remaining - 1 later parts.
    let max_b = hi - (remaining - 1);
    Box::new((start..=max_b).flat_map(move |a| {
        (a..=max_b).flat_map(move |b| {
            placements(b + 1, hi, remaining - 1).map(move |mut tail| {
                tail.insert(0, IndexInterval::new(a, b).expect("a <= b"));
                tail
            })
        })
    }))
}

/// Which stage of the recursion a value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormLevel {
    Iterate(u32),
    Limit,
}

impl fmt::Display for NormLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormLevel::Iterate(n) => write!(f, "{n}"),
            NormLevel::Limit => write!(f, "limit"),
        }
    }
}

impl Serialize for NormLevel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            NormLevel::Iterate(n) => serializer.serialize_u32(*n),
            NormLevel::Limit => serializer.serialize_str("limit"),
        }
    }
}

impl<'de> Deserialize<'de> for NormLevel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = NormLevel;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative level or the string \"limit\"")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<NormLevel, E> {
                u32::try_from(v)
                    .map(NormLevel::Iterate)
                    .map_err(|_| E::custom("level out of range"))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<NormLevel, E> {
                if v == "limit" {
                    Ok(NormLevel::Limit)
                } else {
                    Err(E::custom("expected \"limit\""))
                }
            }
        }
        deserializer.deserialize_any(V)
    }
}

/// The outcome of a norm computation, with enough context to re-check it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormComputation {
    pub input: Vec00,
    pub level: NormLevel,
    pub value: Rational,
    /// For limit computations: the least `n` with `|x|_n = |x|_T`.
    pub stabilized_at: Option<u32>,
    /// A partition reproducing the value via `(1/2) sum_i |E_i x|` at the
    /// child level, present whenever the partition branch attains the max.
    pub certificate: Option<AdmissiblePartition>,
}

/// Exact value of the `n`-th norm iterate.
pub fn tsirelson_iterate(x: &Vec00, n: u32) -> NormComputation {
    let mut engine = Engine::new(x);
    let value = engine.iterate_value(n);
    let certificate = if n == 0 {
        None
    } else {
        engine.iterate_certificate(x, n, &value)
    };
    NormComputation {
        input: x.clone(),
        level: NormLevel::Iterate(n),
        value,
        stabilized_at: None,
        certificate,
    }
}

/// The iterate values `|x|_0, ..., |x|_n` in one pass.
pub fn tsirelson_iterates(x: &Vec00, n: u32) -> Vec<Rational> {
    let mut engine = Engine::new(x);
    engine.ensure_levels(n);
    (0..=n).map(|k| engine.top_level_value(k)).collect()
}

/// Exact value of the limit norm, with the stabilization level and a
/// certificate partition when one attains the max.
pub fn tsirelson_limit(x: &Vec00) -> NormComputation {
    let mut engine = Engine::new(x);
    let value = engine.limit_value();
    let mut stabilized_at = 0u32;
    while engine.iterate_value(stabilized_at) != value {
        stabilized_at += 1;
        assert!(
            (stabilized_at as usize) <= engine.m() + 1,
            "iterates failed to stabilize within the support width"
        );
    }
    let certificate = engine.limit_certificate(x, &value);
    NormComputation {
        input: x.clone(),
        level: NormLevel::Limit,
        value,
        stabilized_at: Some(stabilized_at),
        certificate,
    }
}

/// Convenience accessor for the exact limit value.
pub fn tsirelson_limit_value(x: &Vec00) -> Rational {
    Engine::new(x).limit_value()
}

/// Checks the fixed-point identity at `v`: true iff
/// `v = max( sup(x), (1/2) max over partitions sum_i |E_i x|_T )`,
/// where the partition maximum is recombined here by explicit enumeration
/// over support runs (parts covering the whole support are skipped, so every
/// inner value comes from a strictly shorter section) and the inner values
/// come from fresh `tsirelson_limit` computations.
pub fn verify_fixed_point(x: &Vec00, v: &Rational) -> bool {
    if x.is_zero() {
        return v.is_zero();
    }
    let idx: Vec<usize> = x.support().collect();
    let m = idx.len();
    let mut part_value: HashMap<(usize, usize), Rational> = HashMap::new();
    let mut limit_of_run = |t: usize, u: usize, x: &Vec00, idx: &[usize]| -> Rational {
        part_value
            .entry((t, u))
            .or_insert_with(|| {
                let hull = IndexInterval::new(idx[t], idx[u]).expect("t <= u");
                tsirelson_limit_value(&x.restrict(hull))
            })
            .clone()
    };

    let mut best: Option<Rational> = None;
    let mut families: Vec<Vec<(usize, usize)>> = Vec::new();
    collect_run_families(0, m, &mut Vec::new(), &mut families);
    for family in families {
        let k = family.len();
        if k == 1 && family[0] == (0, m - 1) {
            continue; // whole-support part: not a shorter section
        }
        if idx[family[0].0] < k {
            continue; // inadmissible: first part starts below k
        }
        let mut sum = Rational::zero();
        for &(t, u) in &family {
            sum += limit_of_run(t, u, x, &idx);
        }
        if best.as_ref().map_or(true, |b| sum > *b) {
            best = Some(sum);
        }
    }
    let mut rhs = x.sup_norm();
    if let Some(b) = best {
        let cand = half() * b;
        if cand > rhs {
            rhs = cand;
        }
    }
    *v == rhs
}

/// All families of disjoint successive runs `t..=u` over `m` points.
fn collect_run_families(
    start: usize,
    m: usize,
    current: &mut Vec<(usize, usize)>,
    out: &mut Vec<Vec<(usize, usize)>>,
) {
    for t in start..m {
        for u in t..m {
            current.push((t, u));
            out.push(current.clone());
            collect_run_families(u + 1, m, current, out);
            current.pop();
        }
    }
}

/// Brute-force oracle error.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("oracle refuses support width {width} (maximum {max})")]
    SupportTooWide { width: usize, max: usize },
}

/// Recomputes `|x|_n` directly from the definition, enumerating admissible
/// families whose parts are arbitrary finite subsets of the support (not
/// just intervals). Deliberately unrelated to the interval engine; used to
/// cross-validate it.
pub fn oracle_iterate(x: &Vec00, n: u32) -> Result<Rational, OracleError> {
    let m = x.support_width();
    if m > ORACLE_MAX_SUPPORT {
        return Err(OracleError::SupportTooWide {
            width: m,
            max: ORACLE_MAX_SUPPORT,
        });
    }
    if m == 0 {
        return Ok(Rational::zero());
    }
    let mut oracle = Oracle {
        idx: x.support().collect(),
        abs: x.entries().map(|(_, c)| num_traits::Signed::abs(c)).collect(),
        memo: vec![vec![None; 1usize << m]; n as usize + 1],
        families: HashMap::new(),
    };
    let full = (1u32 << m) - 1;
    Ok(oracle.value(full, n as usize))
}

struct Oracle {
    idx: Vec<usize>,
    abs: Vec<Rational>,
    /// memo[level][mask]
    memo: Vec<Vec<Option<Rational>>>,
    /// Families of subset parts, cached per support mask.
    families: HashMap<u32, Vec<Vec<u32>>>,
}

impl Oracle {
    fn value(&mut self, mask: u32, level: usize) -> Rational {
        if let Some(v) = &self.memo[level][mask as usize] {
            return v.clone();
        }
        let v = if level == 0 {
            self.sup(mask)
        } else {
            let mut best = self.value(mask, level - 1);
            let families = self.families_of(mask);
            for family in families {
                let k = family.len();
                let first_raw = self.idx[family[0].trailing_zeros() as usize];
                if first_raw < k {
                    continue;
                }
                let mut sum = Rational::zero();
                for part in &family {
                    sum += self.value(*part, level - 1);
                }
                let cand = half() * sum;
                if cand > best {
                    best = cand;
                }
            }
            best
        };
        self.memo[level][mask as usize] = Some(v.clone());
        v
    }

    fn sup(&self, mask: u32) -> Rational {
        let mut best = Rational::zero();
        let mut bits = mask;
        while bits != 0 {
            let p = bits.trailing_zeros() as usize;
            if self.abs[p] > best {
                best = self.abs[p].clone();
            }
            bits &= bits - 1;
        }
        best
    }

    fn families_of(&mut self, mask: u32) -> Vec<Vec<u32>> {
        if let Some(f) = self.families.get(&mask) {
            return f.clone();
        }
        let positions: Vec<usize> = (0..32).filter(|p| mask & (1 << p) != 0).collect();
        let mut out = Vec::new();
        let mut parts = Vec::new();
        walk_subset_families(&positions, 0, &mut parts, false, &mut out);
        self.families.insert(mask, out.clone());
        out
    }
}

/// Enumerates every family of successive non-empty subsets of `positions`.
/// At each position the walk may skip it, add it to the currently open part
/// (holes inside a part are allowed; skipping does not close it), or close
/// the open part and start a new one. Each family arises from exactly one
/// choice sequence.
fn walk_subset_families(
    positions: &[usize],
    at: usize,
    parts: &mut Vec<u32>,
    open: bool,
    out: &mut Vec<Vec<u32>>,
) {
    if at == positions.len() {
        if !parts.is_empty() {
            out.push(parts.clone());
        }
        return;
    }
    let bit = 1u32 << positions[at];
    // skip this position
    walk_subset_families(positions, at + 1, parts, open, out);
    // add it to the open part
    if open {
        *parts.last_mut().expect("open part exists") |= bit;
        walk_subset_families(positions, at + 1, parts, true, out);
        *parts.last_mut().expect("open part exists") &= !bit;
    }
    // start a new part with it
    parts.push(bit);
    walk_subset_families(positions, at + 1, parts, true, out);
    parts.pop();
}

type Square = Vec<Vec<Rational>>;

/// Interval dynamic program over the support points of one vector.
///
/// Values are indexed by runs `i..=j` of support points; the table entry is
/// the norm of the restriction to the hull of that run. Iterate tables are
/// built level by level; the limit table is built by increasing run width,
/// which is well-founded because the single whole-run part is discarded
/// (it contributes half its own value, never more than the value itself).
struct Engine {
    idx: Vec<usize>,
    sup: Square,
    levels: Vec<Square>,
    limit: Option<Square>,
}

impl Engine {
    fn new(x: &Vec00) -> Self {
        let idx: Vec<usize> = x.support().collect();
        let abs: Vec<Rational> = x
            .entries()
            .map(|(_, c)| num_traits::Signed::abs(c))
            .collect();
        let m = idx.len();
        let mut sup = vec![vec![Rational::zero(); m]; m];
        for i in 0..m {
            let mut running = abs[i].clone();
            sup[i][i] = running.clone();
            for j in i + 1..m {
                if abs[j] > running {
                    running = abs[j].clone();
                }
                sup[i][j] = running.clone();
            }
        }
        Engine {
            idx,
            sup,
            levels: Vec::new(),
            limit: None,
        }
    }

    fn m(&self) -> usize {
        self.idx.len()
    }

    fn top_level_value(&self, n: u32) -> Rational {
        let m = self.m();
        if m == 0 {
            return Rational::zero();
        }
        self.levels[n as usize][0][m - 1].clone()
    }

    fn iterate_value(&mut self, n: u32) -> Rational {
        self.ensure_levels(n);
        self.top_level_value(n)
    }

    fn ensure_levels(&mut self, n: u32) {
        if self.levels.is_empty() {
            self.levels.push(self.sup.clone());
        }
        while self.levels.len() <= n as usize {
            let prev = self.levels.last().expect("level 0 exists");
            let next = self.next_level(prev);
            self.levels.push(next);
        }
    }

    fn next_level(&self, prev: &Square) -> Square {
        let m = self.m();
        let mut next = prev.clone();
        for i in 0..m {
            for j in i..m {
                if let Some(best) = best_family_value(prev, &self.idx, i, j, false) {
                    let cand = half() * best;
                    if cand > next[i][j] {
                        next[i][j] = cand;
                    }
                }
            }
        }
        next
    }

    fn limit_value(&mut self) -> Rational {
        self.ensure_limit();
        let m = self.m();
        if m == 0 {
            return Rational::zero();
        }
        self.limit.as_ref().expect("limit table built")[0][m - 1].clone()
    }

    fn ensure_limit(&mut self) {
        if self.limit.is_some() {
            return;
        }
        let m = self.m();
        // Width-1 runs carry no admissible family besides the discarded
        // whole-run part, so they equal their sup entry.
        let mut lim = self.sup.clone();
        for w in 2..=m {
            for i in 0..=(m - w) {
                let j = i + w - 1;
                if let Some(best) = best_family_value(&lim, &self.idx, i, j, true) {
                    let cand = half() * best;
                    if cand > lim[i][j] {
                        lim[i][j] = cand;
                    }
                }
            }
        }
        self.limit = Some(lim);
    }

    /// Certificate for the top-level iterate value, when the partition
    /// branch attains it.
    fn iterate_certificate(
        &mut self,
        x: &Vec00,
        n: u32,
        value: &Rational,
    ) -> Option<AdmissiblePartition> {
        let m = self.m();
        if m == 0 || n == 0 {
            return None;
        }
        self.ensure_levels(n - 1);
        let child = &self.levels[(n - 1) as usize];
        let (best, parts) = best_family_certificate(child, &self.idx, 0, m - 1, false)?;
        if half() * best != *value {
            return None;
        }
        let _ = x;
        Some(self.parts_to_partition(&parts))
    }

    /// Certificate for the limit value, when the partition branch attains it.
    fn limit_certificate(&mut self, x: &Vec00, value: &Rational) -> Option<AdmissiblePartition> {
        let m = self.m();
        if m == 0 {
            return None;
        }
        self.ensure_limit();
        let table = self.limit.as_ref().expect("limit table built");
        let (best, parts) = best_family_certificate(table, &self.idx, 0, m - 1, true)?;
        if half() * best != *value {
            return None;
        }
        let _ = x;
        Some(self.parts_to_partition(&parts))
    }

    fn parts_to_partition(&self, parts: &[(usize, usize)]) -> AdmissiblePartition {
        let intervals = parts
            .iter()
            .map(|&(t, u)| IndexInterval::new(self.idx[t], self.idx[u]).expect("t <= u"))
            .collect();
        AdmissiblePartition::new(intervals).expect("engine families are admissible")
    }
}

/// Best value of `sum_i child[part_i]` over admissible families of support
/// runs inside `i..=j`; `None` when no admissible family exists.
///
/// `exclude_full` drops the single part covering all of `i..=j` (used by the
/// limit recursion for well-foundedness).
fn best_family_value(
    child: &Square,
    idx: &[usize],
    i: usize,
    j: usize,
    exclude_full: bool,
) -> Option<Rational> {
    let mut best: Option<Rational> = None;
    let mut consider = |cand: Rational| {
        if best.as_ref().map_or(true, |b| cand > *b) {
            best = Some(cand);
        }
    };
    // k = 1: a single part anywhere at raw index >= 1.
    for t in i..=j {
        if idx[t] < 1 {
            continue;
        }
        for u in t..=j {
            if exclude_full && t == i && u == j {
                continue;
            }
            consider(child[t][u].clone());
        }
    }
    // k >= 2 parts via the cut-position DP.
    let n_pts = j - i + 1;
    if n_pts >= 2 {
        let f = family_table(child, i, j);
        for k in 2..=n_pts {
            match entry_position(idx, i, j, k) {
                Some(t0) => {
                    if let Some(v) = &f[k][t0 - i] {
                        consider(v.clone());
                    }
                }
                None => break, // raw indices are sorted: larger k cannot enter
            }
        }
    }
    best
}

/// `f[c][p]`: best sum of exactly `c` successive run-parts among the points
/// `(i+p)..=j`; `f[c][n_pts]` is the empty suffix. `None` means infeasible.
fn family_table(child: &Square, i: usize, j: usize) -> Vec<Vec<Option<Rational>>> {
    let n_pts = j - i + 1;
    let mut f: Vec<Vec<Option<Rational>>> = vec![vec![None; n_pts + 1]; n_pts + 1];
    for p in 0..=n_pts {
        f[0][p] = Some(Rational::zero());
    }
    for c in 1..=n_pts {
        for p in (0..n_pts).rev() {
            let t = i + p;
            let mut cur = f[c][p + 1].clone(); // skip point t
            for u in t..=j {
                if let Some(rest) = &f[c - 1][u - i + 1] {
                    let cand = &child[t][u] + rest;
                    if cur.as_ref().map_or(true, |b| cand > *b) {
                        cur = Some(cand);
                    }
                }
            }
            f[c][p] = cur;
        }
    }
    f
}

/// First point position in `i..=j` whose raw index admits being the start of
/// the first of `k` parts.
fn entry_position(idx: &[usize], i: usize, j: usize, k: usize) -> Option<usize> {
    (i..=j).find(|&t| idx[t] >= k)
}

/// Like [`best_family_value`] but also reconstructs one attaining family,
/// deterministically: smallest part count first, then earliest starts and
/// shortest parts.
fn best_family_certificate(
    child: &Square,
    idx: &[usize],
    i: usize,
    j: usize,
    exclude_full: bool,
) -> Option<(Rational, Vec<(usize, usize)>)> {
    let best = best_family_value(child, idx, i, j, exclude_full)?;

    // k = 1 first.
    for t in i..=j {
        if idx[t] < 1 {
            continue;
        }
        for u in t..=j {
            if exclude_full && t == i && u == j {
                continue;
            }
            if child[t][u] == best {
                return Some((best, vec![(t, u)]));
            }
        }
    }

    let n_pts = j - i + 1;
    let f = family_table(child, i, j);
    for k in 2..=n_pts {
        let Some(t0) = entry_position(idx, i, j, k) else {
            break;
        };
        if f[k][t0 - i].as_ref() != Some(&best) {
            continue;
        }
        // Traceback: prefer taking a part at the current point over
        // skipping, and the shortest attaining part first.
        let mut parts = Vec::with_capacity(k);
        let mut c = k;
        let mut p = t0 - i;
        while c > 0 {
            let t = i + p;
            let target = f[c][p].as_ref().expect("attaining state is feasible");
            let mut took = false;
            for u in t..=j {
                if let Some(rest) = &f[c - 1][u - i + 1] {
                    if &child[t][u] + rest == *target {
                        parts.push((t, u));
                        p = u - i + 1;
                        c -= 1;
                        took = true;
                        break;
                    }
                }
            }
            if !took {
                p += 1;
            }
        }
        return Some((best, parts));
    }
    None
}
