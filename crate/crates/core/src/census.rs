//! Census of rooted labelled trees by rooted subtree count.
//!
//! `x(k, g)` is the number of pairs `(T, v)`, `T` a labelled tree on `[k]`
//! and `v` one of its vertices, with `g(T, v) = g`. Removing the root splits
//! `(T, v)` into rooted subtrees whose sizes form a partition of `k - 1`, and
//! `g(T, v) = 1 + ∏ g_i`. Summing over partitions `a_1 <= … <= a_m` of `k - 1`
//! and over the `g`-values of the parts gives
//!
//! ```text
//! x(k, 1 + ∏ g_i) += k! / (∏ n_j! ∏ a_i!) · ∏ x(a_i, g_i)
//! ```
//!
//! where `n_j` are the multiplicities of equal parts. The weight is an integer
//! (`k` root labels times the number of set partitions of the remaining
//! `k - 1` labels into blocks of the given sizes), so the whole table is
//! built with exact integer arithmetic. For each partition the inner sum is a
//! multiplicative convolution of the rows `x(a_i, ·)`, and consecutive
//! partitions in lexicographic order share their prefix convolutions.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use rug::ops::Pow;
use rug::Integer;

use crate::directed::DirectedReal;
use crate::error::{Error, Result};
use crate::subtree::rooted_count;
use crate::tree::prufer_decode_slice;

/// `g` never exceeds `2^(k-1) + 1`, which fits a `u64` up to this size.
pub const MAX_K: usize = 64;

/// Largest size the exhaustive oracle accepts.
pub const EXHAUSTIVE_MAX_K: usize = 8;

const FORMAT_HEADER: &str = "# gcount v1";

/// Exact `x(k, g)` for `k = 1..=k_max`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GCountTable {
    rows: Vec<BTreeMap<u64, Integer>>,
}

impl GCountTable {
    /// The table for `K = 1`: the single rooted tree on one vertex has `g = 2`.
    pub fn base() -> Self {
        GCountTable {
            rows: vec![BTreeMap::from([(2u64, Integer::from(1))])],
        }
    }

    pub fn k_max(&self) -> usize {
        self.rows.len()
    }

    /// The row `g ↦ x(k, g)`; panics if `k` is outside `1..=k_max`.
    pub fn row(&self, k: usize) -> &BTreeMap<u64, Integer> {
        &self.rows[k - 1]
    }

    pub fn get(&self, k: usize, g: u64) -> Option<&Integer> {
        self.rows.get(k.wrapping_sub(1))?.get(&g)
    }

    /// `Σ_g x(k, g)`, which must equal `k^(k-1)`.
    pub fn mass(&self, k: usize) -> Integer {
        self.row(k).values().sum()
    }

    pub fn entry_count(&self) -> usize {
        self.rows.iter().map(BTreeMap::len).sum()
    }

    /// Drops every size above `k`.
    pub fn truncated(&self, k: usize) -> Self {
        GCountTable {
            rows: self.rows[..k.min(self.rows.len())].to_vec(),
        }
    }

    fn check_range(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.k_max() {
            Err(Error::invalid(format!("k = {k} outside the computed range 1..={}", self.k_max())))
        } else {
            Ok(())
        }
    }

    /// Checks the mass identity and the support bounds `k + 1 <= g <= 2^(k-1) + 1`.
    pub fn validate(&self) -> Result<()> {
        for k in 1..=self.k_max() {
            let expect = rooted_tree_count(k);
            if self.mass(k) != expect {
                return Err(Error::invalid(format!("row k = {k} sums to {}, expected {expect}", self.mass(k))));
            }
            let (lo, hi) = g_support(k);
            if let Some((&g, _)) = self.row(k).iter().find(|(&g, x)| g < lo || g > hi || **x <= 0) {
                return Err(Error::invalid(format!("row k = {k} has an invalid entry at g = {g}")));
            }
        }
        Ok(())
    }

    /// Extends the table to `k_max`, calling `checkpoint` after each completed size.
    pub fn extend_to<F>(mut self, k_max: usize, budget: &Budget, mut checkpoint: F) -> Result<Self>
    where
        F: FnMut(&GCountTable) -> Result<()>,
    {
        if k_max == 0 || k_max > MAX_K {
            return Err(Error::invalid(format!("K must be in 1..={MAX_K}, got {k_max}")));
        }
        let started = Instant::now();
        while self.k_max() < k_max {
            if let Some(limit) = budget.wall_clock {
                if started.elapsed() > limit {
                    return Err(Error::Budget {
                        reason: format!("wall-clock limit of {limit:?} reached"),
                        partial: Box::new(self),
                    });
                }
            }
            let k = self.k_max() + 1;
            let row = self.next_row();
            self.rows.push(row);
            checkpoint(&self)?;
            if let Some(limit) = budget.max_entries {
                if self.entry_count() > limit && self.k_max() < k_max {
                    return Err(Error::Budget {
                        reason: format!("{} table entries after k = {k} exceed the limit of {limit}", self.entry_count()),
                        partial: Box::new(self),
                    });
                }
            }
        }
        Ok(self)
    }

    fn next_row(&self) -> BTreeMap<u64, Integer> {
        let k = self.k_max() + 1;
        let rest = k - 1;
        let factorials: Vec<Integer> = (0..=k as u32).map(|i| Integer::from(Integer::factorial(i))).collect();
        // One task per smallest part; merged in that order, so the result is
        // independent of scheduling (it is exact anyway).
        let chunks: Vec<HashMap<u64, Integer>> = (1..=rest)
            .into_par_iter()
            .filter(|&first| first == rest || rest - first >= first)
            .map(|first| self.partition_chunk(k, first, &factorials))
            .collect();
        let mut row = BTreeMap::new();
        for chunk in chunks {
            for (g, x) in chunk {
                *row.entry(g).or_insert_with(Integer::new) += x;
            }
        }
        row
    }

    // Contributions of all partitions of k - 1 whose smallest part is `first`.
    fn partition_chunk(&self, k: usize, first: usize, fact: &[Integer]) -> HashMap<u64, Integer> {
        let mut acc: HashMap<u64, Integer> = HashMap::new();
        // prefix[i] is the convolution of the rows of the first i parts.
        let mut prefix: Vec<Vec<(u64, Integer)>> = vec![vec![(1, Integer::from(1))]];
        let mut previous: Vec<usize> = Vec::new();
        for partition in Partitions::with_smallest_part(k - 1, first) {
            let parts = partition.parts();
            let common = previous.iter().zip(parts).take_while(|(a, b)| a == b).count();
            prefix.truncate(common + 1);
            for &a in &parts[common..] {
                let next = convolve(prefix.last().unwrap(), self.row(a));
                prefix.push(next);
            }
            let weight = partition_weight(k, &partition, fact);
            for (prod, count) in prefix.last().unwrap() {
                let g = prod.checked_add(1).expect("g fits in u64 for k <= MAX_K");
                *acc.entry(g).or_default() += Integer::from(&weight * count);
            }
            previous.clear();
            previous.extend_from_slice(parts);
        }
        acc
    }
}

/// `k^(k-1)`, the number of rooted labelled trees on `k` vertices.
pub fn rooted_tree_count(k: usize) -> Integer {
    Integer::from(k).pow(k as u32 - 1)
}

/// Support of row `k`: `(k + 1, 2^(k-1) + 1)`, or `(2, 2)` for `k = 1`.
pub fn g_support(k: usize) -> (u64, u64) {
    if k == 1 {
        (2, 2)
    } else {
        (k as u64 + 1, (1u64 << (k - 1)) + 1)
    }
}

fn convolve(lhs: &[(u64, Integer)], rhs: &BTreeMap<u64, Integer>) -> Vec<(u64, Integer)> {
    let mut out: HashMap<u64, Integer> = HashMap::with_capacity(lhs.len() * rhs.len());
    for (g1, x1) in lhs {
        for (g2, x2) in rhs {
            let g = g1.checked_mul(*g2).expect("g fits in u64 for k <= MAX_K");
            *out.entry(g).or_default() += Integer::from(x1 * x2);
        }
    }
    let mut out: Vec<_> = out.into_iter().collect();
    out.sort_unstable_by_key(|(g, _)| *g);
    out
}

/// `k! / (∏ n_j! ∏ a_i!)`, asserting that the division is exact.
fn partition_weight(k: usize, partition: &Partition, fact: &[Integer]) -> Integer {
    let mut den = Integer::from(1);
    for &a in partition.parts() {
        den *= &fact[a];
    }
    for n in partition.block_lengths() {
        den *= &fact[n];
    }
    let (q, r) = fact[k].clone().div_rem(den);
    assert_eq!(r, 0, "partition weight is not integral");
    q
}

/// Limits for [`compute_tables_with`]. `None` means unlimited.
#[derive(Clone, Debug, Default)]
pub struct Budget {
    pub wall_clock: Option<Duration>,
    pub max_entries: Option<usize>,
}

/// The census up to `k_max` by partition convolution.
pub fn compute_tables(k_max: usize) -> Result<GCountTable> {
    compute_tables_with(k_max, &Budget::default())
}

pub fn compute_tables_with(k_max: usize, budget: &Budget) -> Result<GCountTable> {
    GCountTable::base().extend_to(k_max, budget, |_| Ok(()))
}

/// A partition of an integer into non-decreasing parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// Lengths of the maximal runs of equal parts.
    pub fn block_lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.parts.chunk_by(|a, b| a == b).map(<[usize]>::len)
    }
}

/// Partitions of `total` as non-decreasing sequences, in lexicographic order.
#[derive(Clone, Debug)]
pub struct Partitions {
    current: Option<Vec<usize>>,
    smallest: Option<usize>,
}

impl Partitions {
    /// All partitions of `total >= 1`.
    pub fn new(total: usize) -> Self {
        assert!(total >= 1, "partitions of zero are not enumerated");
        Partitions {
            current: Some(vec![1; total]),
            smallest: None,
        }
    }

    /// The partitions of `total` whose smallest part is exactly `smallest`
    /// (a contiguous run of the lexicographic order).
    pub fn with_smallest_part(total: usize, smallest: usize) -> Self {
        let valid = smallest >= 1 && (smallest == total || total >= 2 * smallest);
        let current = valid.then(|| {
            let mut parts = Vec::new();
            let mut left = total;
            while left >= 2 * smallest {
                parts.push(smallest);
                left -= smallest;
            }
            parts.push(left);
            parts
        });
        Partitions {
            current,
            smallest: Some(smallest),
        }
    }

    fn successor(parts: &[usize]) -> Option<Vec<usize>> {
        if parts.len() < 2 {
            return None;
        }
        let mut next = parts[..parts.len() - 1].to_vec();
        let last = parts[parts.len() - 1];
        let x = next[next.len() - 1] + 1;
        *next.last_mut().unwrap() = x;
        let mut left = last - 1;
        if left < x {
            *next.last_mut().unwrap() += left;
        } else {
            while left >= 2 * x {
                next.push(x);
                left -= x;
            }
            next.push(left);
        }
        Some(next)
    }
}

impl Iterator for Partitions {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        let parts = self.current.take()?;
        self.current = Self::successor(&parts).filter(|p| self.smallest.is_none_or(|s| p[0] == s));
        Some(Partition { parts })
    }
}

/// Oracle census: decode every Prüfer code on `k` vertices (and smaller),
/// root each tree at every vertex and histogram `g`. `k <= 8`.
pub fn exhaustive_tables(k_max: usize) -> Result<GCountTable> {
    if k_max == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k_max > EXHAUSTIVE_MAX_K {
        return Err(Error::SizeLimit {
            what: "exhaustive census size",
            value: k_max,
            max: EXHAUSTIVE_MAX_K,
        });
    }
    let mut rows = vec![exhaustive_row(1)];
    for k in 2..=k_max {
        rows.push(exhaustive_row(k));
    }
    Ok(GCountTable { rows })
}

fn exhaustive_row(k: usize) -> BTreeMap<u64, Integer> {
    if k == 1 {
        let t = crate::tree::LabelledTree::singleton();
        let g = rooted_count(&t, 1).unwrap().0.to_u64().unwrap();
        return BTreeMap::from([(g, Integer::from(1))]);
    }
    let codes = (k as u64).pow(k as u32 - 2);
    let hist = (0..codes)
        .into_par_iter()
        .fold(BTreeMap::<u64, u64>::new, |mut hist, index| {
            let mut code = Vec::with_capacity(k - 2);
            let mut rem = index;
            for _ in 0..k - 2 {
                code.push((rem % k as u64) as usize + 1);
                rem /= k as u64;
            }
            let tree = prufer_decode_slice(&code).expect("valid code");
            for v in 1..=k {
                let g = rooted_count(&tree, v).unwrap().0.to_u64().unwrap();
                *hist.entry(g).or_insert(0) += 1;
            }
            hist
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (g, c) in b {
                *a.entry(g).or_insert(0) += c;
            }
            a
        });
    hist.into_iter().map(|(g, c)| (g, Integer::from(c))).collect()
}

/// Enclosure of `Σ_g x(k, g) · ln g`.
pub fn log_g_moment(table: &GCountTable, k: usize, prec: u32) -> Result<DirectedReal> {
    table.check_range(k)?;
    let mut sum = DirectedReal::zero(prec);
    for (&g, x) in table.row(k) {
        let term = DirectedReal::from_u64(prec, g).ln().mul_integer(x);
        sum.add_assign(&term);
    }
    Ok(sum)
}

/// Geometric mean over all `k^(k-1)` rooted trees of `g / (g - 1)`.
pub fn multiplier(table: &GCountTable, k: usize, prec: u32) -> Result<DirectedReal> {
    table.check_range(k)?;
    let mut sum = DirectedReal::zero(prec);
    for (&g, x) in table.row(k) {
        // ln(g / (g - 1)) = ln_1p(1 / (g - 1)), without cancellation
        let inv = DirectedReal::from_ratio(prec, &Integer::from(1), &Integer::from(g - 1));
        sum.add_assign(&inv.ln_1p().mul_integer(x));
    }
    let count = rooted_tree_count(k);
    Ok(sum.div(&DirectedReal::from_integer(prec, &count)).exp())
}

/// Writes the table as `# gcount v1 K=<K>` followed by `k,g,x` lines in (k, g) order.
pub fn save_tables(table: &GCountTable, path: &Path) -> Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut out = BufWriter::new(fs::File::create(&tmp)?);
        writeln!(out, "{FORMAT_HEADER} K={}", table.k_max())?;
        for k in 1..=table.k_max() {
            for (g, x) in table.row(k) {
                writeln!(out, "{k},{g},{x}")?;
            }
        }
        out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads a table written by [`save_tables`], validating order, ranges and
/// per-size mass. Errors name the offending line.
pub fn load_tables(path: &Path) -> Result<GCountTable> {
    let text = fs::read_to_string(path)?;
    parse_tables(&text, path)
}

fn parse_tables(text: &str, path: &Path) -> Result<GCountTable> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let k_max: usize = header
        .strip_prefix(FORMAT_HEADER)
        .and_then(|rest| rest.trim().strip_prefix("K="))
        .and_then(|k| k.parse().ok())
        .filter(|&k| (1..=MAX_K).contains(&k))
        .ok_or_else(|| err(1, format!("expected `{FORMAT_HEADER} K=<K>`, got {header:?}")))?;

    let mut rows: Vec<BTreeMap<u64, Integer>> = vec![BTreeMap::new(); k_max];
    let mut last: Option<(usize, u64)> = None;
    let mut last_line = 1;
    let close_row = |k: usize, rows: &[BTreeMap<u64, Integer>], line: usize| -> Result<()> {
        let mass: Integer = rows[k - 1].values().sum();
        let expect = rooted_tree_count(k);
        if mass != expect {
            return Err(err(line, format!("row k = {k} sums to {mass}, expected {expect} (truncated or corrupt file?)")));
        }
        Ok(())
    };
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parsed = match fields.as_slice() {
            [k, g, x] => k.parse::<usize>().ok().zip(g.parse::<u64>().ok()).zip(x.parse::<Integer>().ok()),
            _ => None,
        };
        let ((k, g), x) = parsed.ok_or_else(|| err(no, format!("expected `k,g,x`, got {line:?}")))?;
        if k == 0 || k > k_max {
            return Err(err(no, format!("k = {k} outside 1..={k_max}")));
        }
        let (lo, hi) = g_support(k);
        if g < lo || g > hi || x <= 0 {
            return Err(err(no, format!("entry ({k}, {g}) = {x} is outside the valid support")));
        }
        if let Some((pk, pg)) = last {
            if (k, g) <= (pk, pg) {
                return Err(err(no, format!("entry ({k}, {g}) is out of order")));
            }
            for done in pk..k {
                close_row(done, &rows, no - 1)?;
            }
        } else {
            for done in 1..k {
                close_row(done, &rows, no - 1)?;
            }
        }
        rows[k - 1].insert(g, x);
        last = Some((k, g));
        last_line = no;
    }
    let first_open = last.map_or(1, |(k, _)| k);
    for k in first_open..=k_max {
        close_row(k, &rows, last_line)?;
    }
    Ok(GCountTable { rows })
}
