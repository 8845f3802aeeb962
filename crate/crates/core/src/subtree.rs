//! Subtree counts on concrete trees.
//!
//! A *subtree* is a non-empty vertex set inducing a connected subgraph; the
//! singletons count. The rooted count `g(T, v)` is the number of subtrees
//! containing `v` plus one for the empty tree, so that
//! `g(T, v) = 1 + ∏ g(S(T, v, w), w)` over the neighbours `w` of `v`.

use rug::float::Round;
use rug::{Assign, Float, Integer};

use crate::error::{Error, Result};
use crate::tree::LabelledTree;

/// Mantissa bits used by [`log_total_count`].
pub const DEFAULT_LOG_PRECISION: u32 = 64;

/// Largest tree accepted by [`brute_force_count`].
pub const BRUTE_FORCE_MAX_N: usize = 20;

/// `g(T, v)`: subtrees containing `v`, plus the empty tree.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RootedSubtreeCount(pub Integer);

/// `c(T)`: number of non-empty subtrees.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SubtreeCount(pub Integer);

impl SubtreeCount {
    /// Natural logarithm, correctly rounded to `prec` bits.
    pub fn ln(&self, prec: u32) -> Float {
        Float::with_val(prec, &self.0).ln()
    }
}

/// Exact `g(T, v)` by an iterative post-order pass, so path-shaped trees of
/// any length are fine.
pub fn rooted_count(tree: &LabelledTree, v: usize) -> Result<RootedSubtreeCount> {
    tree.check_vertex(v)?;
    let bfs = tree.bfs(v);
    let mut g: Vec<Integer> = vec![Integer::from(1); tree.n() + 1];
    for &u in bfs.order.iter().rev() {
        // g[u] holds the product over u's children at this point.
        g[u] += 1;
        let p = bfs.parent[u];
        if p != 0 {
            let child = std::mem::take(&mut g[u]);
            g[p] *= child;
        }
    }
    Ok(RootedSubtreeCount(std::mem::take(&mut g[v])))
}

/// Exact `c(T)`. Roots the tree at vertex 1; `d(v) = ∏ (1 + d(w))` over the
/// children is the number of subtrees whose vertex nearest the root is `v`.
pub fn total_count(tree: &LabelledTree) -> SubtreeCount {
    let bfs = tree.bfs(1);
    let mut d: Vec<Integer> = vec![Integer::from(1); tree.n() + 1];
    let mut total = Integer::new();
    for &u in bfs.order.iter().rev() {
        total += &d[u];
        let p = bfs.parent[u];
        if p != 0 {
            let factor = Integer::from(&d[u] + 1u32);
            d[p] *= factor;
        }
    }
    SubtreeCount(total)
}

/// `ln c(T)` with relative error at most `2^-40`, at the default precision.
pub fn log_total_count(tree: &LabelledTree) -> Float {
    log_total_count_with_precision(tree, DEFAULT_LOG_PRECISION)
}

/// Mantissa bits actually used for a tree on `n` vertices when `requested`
/// bits are asked for. Grows with `n` so that the `2^-40` relative bound holds
/// at every size.
pub fn working_precision(n: usize, requested: u32) -> u32 {
    // about 3n roundings, each of relative size 2^-p, perturb c; that is an
    // absolute error of 3n·2^-p on ln c, and ln c >= ln 3 > 1 once n >= 2.
    let ops = 3 * n.max(1) as u64;
    let needed = 44 + (u64::BITS - ops.leading_zeros());
    requested.max(needed)
}

/// The same recursion as [`total_count`] carried in binary floating point
/// with an wide exponent range, then one logarithm at the end. Every
/// intermediate is a positive product or sum, so rounding errors stay
/// relative and never cancel.
pub fn log_total_count_with_precision(tree: &LabelledTree, prec: u32) -> Float {
    let prec = working_precision(tree.n(), prec);
    let bfs = tree.bfs(1);
    let mut d: Vec<Float> = vec![Float::with_val(prec, 1); tree.n() + 1];
    let mut total = Float::with_val(prec, 0);
    let mut factor = Float::new(prec);
    for &u in bfs.order.iter().rev() {
        total += &d[u];
        let p = bfs.parent[u];
        if p != 0 {
            factor.assign(&d[u] + 1u32);
            d[p] *= &factor;
        }
    }
    total.ln_round(Round::Nearest);
    total
}

fn neighbour_masks(tree: &LabelledTree) -> Vec<u32> {
    (1..=tree.n())
        .map(|v| tree.neighbours(v).iter().fold(0u32, |m, &w| m | 1 << (w - 1)))
        .collect()
}

fn is_connected(mask: u32, nbr: &[u32]) -> bool {
    let start = mask & mask.wrapping_neg();
    let mut seen = start;
    let mut frontier = start;
    while frontier != 0 {
        let bit = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let fresh = nbr[bit] & mask & !seen;
        seen |= fresh;
        frontier |= fresh;
    }
    seen == mask
}

fn brute_force_masks(tree: &LabelledTree) -> Result<impl Iterator<Item = u32>> {
    let n = tree.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::SizeLimit {
            what: "brute-force tree size",
            value: n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let nbr = neighbour_masks(tree);
    Ok((1u32..1 << n).filter(move |&m| is_connected(m, &nbr)))
}

/// Test oracle: tries every non-empty vertex subset. `n <= 20`.
pub fn brute_force_count(tree: &LabelledTree) -> Result<SubtreeCount> {
    Ok(SubtreeCount(Integer::from(brute_force_masks(tree)?.count())))
}

/// Test oracle: number of subtrees that contain `v`. `n <= 20`.
pub fn brute_force_count_containing(tree: &LabelledTree, v: usize) -> Result<u64> {
    tree.check_vertex(v)?;
    let bit = 1u32 << (v - 1);
    Ok(brute_force_masks(tree)?.filter(|m| m & bit != 0).count() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::random_tree;

    #[test]
    fn rooted_examples() {
        let k1 = LabelledTree::singleton();
        assert_eq!(rooted_count(&k1, 1).unwrap().0, 2);
        let star = LabelledTree::star(5, 1).unwrap();
        assert_eq!(rooted_count(&star, 1).unwrap().0, 17);
        let p3 = LabelledTree::path(3).unwrap();
        assert_eq!(rooted_count(&p3, 1).unwrap().0, 4);
        assert_eq!(rooted_count(&p3, 2).unwrap().0, 5);
        assert_eq!(rooted_count(&p3, 3).unwrap().0, 4);
        assert!(rooted_count(&p3, 4).is_err());
        assert!(rooted_count(&p3, 0).is_err());
    }

    #[test]
    fn total_examples() {
        assert_eq!(total_count(&LabelledTree::path(3).unwrap()).0, 6);
        assert_eq!(total_count(&LabelledTree::singleton()).0, 1);
        for n in 1..40usize {
            assert_eq!(total_count(&LabelledTree::path(n).unwrap()).0, n * (n + 1) / 2);
        }
        for n in 2..=12u32 {
            let star = LabelledTree::star(n as usize, n as usize).unwrap();
            let expect = brute_force_count(&star).unwrap().0.clone();
            assert_eq!(total_count(&star).0, expect);
            assert_eq!(expect, (Integer::from(1) << (n - 1)) + (n - 1));
        }
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(brute_force_count(&LabelledTree::path(4).unwrap()).unwrap().0, 10);
        assert_eq!(brute_force_count(&LabelledTree::star(4, 2).unwrap()).unwrap().0, 11);
        assert_eq!(brute_force_count(&LabelledTree::singleton()).unwrap().0, 1);
        let big = LabelledTree::path(21).unwrap();
        assert!(matches!(brute_force_count(&big), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn log_examples() {
        let p3 = LabelledTree::path(3).unwrap();
        let got = log_total_count(&p3).to_f64();
        assert!((got - 6f64.ln()).abs() <= 6f64.ln() * 2f64.powi(-40));
        assert_eq!(log_total_count(&LabelledTree::singleton()).to_f64(), 0.0);
    }

    #[test]
    fn log_matches_exact_on_large_random_tree() {
        let t = random_tree(2048, 3).unwrap();
        let exact = total_count(&t).ln(256);
        let approx = log_total_count(&t);
        let rel = Float::with_val(256, &exact - &approx).abs() / &exact;
        assert!(rel < 2f64.powi(-40), "relative error {rel}");
    }

    #[test]
    fn long_path_has_no_depth_limit() {
        let n = 1_000_000;
        let path = LabelledTree::path(n).unwrap();
        assert_eq!(rooted_count(&path, 1).unwrap().0, n + 1);
        assert_eq!(rooted_count(&path, n / 2).unwrap().0, (n / 2) * (n / 2 + 1) + 1);
        assert_eq!(total_count(&path).0, Integer::from(n) * (n + 1) / 2);
    }

    #[test]
    fn root_choice_does_not_change_total() {
        // Relabelling moves a different vertex into position 1, i.e. changes
        // the root total_count uses.
        let t = random_tree(40, 8).unwrap();
        let base = total_count(&t);
        for shift in 1..40 {
            let relabel = |v: usize| (v - 1 + shift) % 40 + 1;
            let edges: Vec<_> = t.edges().map(|(u, v)| (relabel(u), relabel(v))).collect();
            let moved = LabelledTree::from_edges(40, &edges).unwrap();
            assert_eq!(total_count(&moved), base);
        }
    }
}
