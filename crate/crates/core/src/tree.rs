//! Labelled trees on `1..=n`, the Prüfer bijection and tree generators.
//!
//! Labels are 1-based everywhere, in the API and in the text format.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// A tree on the vertex set `1..=n`, stored as sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelledTree {
    n: usize,
    // adjacency of vertex v lives in adj[offsets[v - 1]..offsets[v]]
    offsets: Vec<usize>,
    adj: Vec<usize>,
}

impl LabelledTree {
    /// Builds a tree from an edge list, checking that it really is a tree.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("a tree needs at least one vertex"));
        }
        if edges.len() != n - 1 {
            return Err(Error::invalid(format!(
                "a tree on {n} vertices has {} edges, got {}",
                n - 1,
                edges.len()
            )));
        }
        for &(u, v) in edges {
            if u == 0 || v == 0 || u > n || v > n {
                return Err(Error::invalid(format!("edge {u}-{v} has a label outside 1..={n}")));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at vertex {u}")));
            }
        }
        let tree = Self::build(n, edges);
        for v in 1..=n {
            if tree.neighbours(v).windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid(format!("duplicate edge at vertex {v}")));
            }
        }
        if tree.bfs(1).order.len() != n {
            return Err(Error::invalid("edge list is not connected"));
        }
        Ok(tree)
    }

    // Caller guarantees the edges form a tree.
    fn build(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, v) in edges {
            offsets[u] += 1;
            offsets[v] += 1;
        }
        for i in 1..=n {
            offsets[i] += offsets[i - 1];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![0usize; 2 * edges.len()];
        for &(u, v) in edges {
            adj[fill[u - 1]] = v;
            fill[u - 1] += 1;
            adj[fill[v - 1]] = u;
            fill[v - 1] += 1;
        }
        for v in 0..n {
            adj[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        LabelledTree { n, offsets, adj }
    }

    /// The single-vertex tree.
    pub fn singleton() -> Self {
        Self::build(1, &[])
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|v| (v, v + 1)).collect();
        Self::from_edges(n, &edges)
    }

    /// Star with the given centre and all other labels as leaves.
    pub fn star(n: usize, centre: usize) -> Result<Self> {
        if centre == 0 || centre > n {
            return Err(Error::invalid(format!("centre {centre} outside 1..={n}")));
        }
        let edges: Vec<_> = (1..=n).filter(|&v| v != centre).map(|v| (centre, v)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[self.offsets[v - 1]..self.offsets[v]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v] - self.offsets[v - 1]
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..=self.n).flat_map(move |u| {
            self.neighbours(u).iter().filter(move |&&v| u < v).map(move |&v| (u, v))
        })
    }

    pub(crate) fn check_vertex(&self, v: usize) -> Result<()> {
        if v == 0 || v > self.n {
            Err(Error::invalid(format!("vertex {v} outside 1..={}", self.n)))
        } else {
            Ok(())
        }
    }

    /// Breadth-first order from `root` with parent pointers (`parent[root] = 0`).
    /// Both vectors are indexed by label; index 0 is unused in `parent`.
    pub fn bfs(&self, root: usize) -> Bfs {
        let mut parent = vec![usize::MAX; self.n + 1];
        let mut order = Vec::with_capacity(self.n);
        parent[root] = 0;
        order.push(root);
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &w in self.neighbours(v) {
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    order.push(w);
                }
            }
        }
        Bfs { order, parent }
    }
}

/// Breadth-first traversal of a tree: visiting order and parent of every vertex.
#[derive(Clone, Debug)]
pub struct Bfs {
    pub order: Vec<usize>,
    pub parent: Vec<usize>,
}

impl fmt::Display for LabelledTree {
    /// Text format: `n` on the first line, then one `u v` line per edge with `u < v`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.n)?;
        for (u, v) in self.edges() {
            writeln!(f, "{u} {v}")?;
        }
        Ok(())
    }
}

impl FromStr for LabelledTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| Error::invalid("empty tree text"))?;
        let n: usize = first
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("line 1: bad vertex count {first:?}")))?;
        let mut edges = Vec::with_capacity(n.saturating_sub(1));
        for (idx, line) in lines {
            let mut parts = line.split_whitespace().map(str::parse::<usize>);
            match (parts.next(), parts.next(), parts.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) if u < v => edges.push((u, v)),
                _ => {
                    return Err(Error::invalid(format!(
                        "line {}: expected `u v` with u < v, got {line:?}",
                        idx + 1
                    )))
                }
            }
        }
        LabelledTree::from_edges(n, &edges)
    }
}

/// A Prüfer code for a tree on `n ≥ 2` vertices: `n - 2` labels from `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PruferCode {
    n: usize,
    code: Vec<usize>,
}

impl PruferCode {
    pub fn new(n: usize, code: Vec<usize>) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("Prüfer codes need n >= 2, got {n}")));
        }
        if code.len() != n - 2 {
            return Err(Error::invalid(format!(
                "code length must be n - 2 = {}, got {}",
                n - 2,
                code.len()
            )));
        }
        if let Some(&bad) = code.iter().find(|&&x| x == 0 || x > n) {
            return Err(Error::invalid(format!("code entry {bad} outside 1..={n}")));
        }
        Ok(PruferCode { n, code })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.code
    }
}

/// Repeatedly removes the smallest-labelled leaf and records its neighbour.
/// Linear time: a finger scans labels upwards, and a neighbour that becomes a
/// leaf below the finger is taken immediately.
pub fn prufer_encode(tree: &LabelledTree) -> Result<PruferCode> {
    let n = tree.n();
    if n < 2 {
        return Err(Error::invalid("Prüfer encoding needs n >= 2"));
    }
    // Rooting at n gives each removed leaf's surviving neighbour: n is never removed.
    let parent = tree.bfs(n).parent;
    let mut degree: Vec<usize> = (0..=n).map(|v| if v == 0 { 0 } else { tree.degree(v) }).collect();
    let mut code = Vec::with_capacity(n - 2);
    let mut finger = (1..=n).find(|&v| degree[v] == 1).expect("a tree has a leaf");
    let mut leaf = finger;
    for _ in 0..n - 2 {
        let next = parent[leaf];
        code.push(next);
        degree[leaf] = 0;
        degree[next] -= 1;
        if degree[next] == 1 && next < finger {
            leaf = next;
        } else {
            finger += 1;
            while degree[finger] != 1 {
                finger += 1;
            }
            leaf = finger;
        }
    }
    Ok(PruferCode { n, code })
}

/// Inverse of [`prufer_encode`], linear time.
pub fn prufer_decode(code: &PruferCode) -> LabelledTree {
    let n = code.n;
    let mut degree = vec![1usize; n + 1];
    degree[0] = 0;
    for &x in &code.code {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut finger = (1..=n).find(|&v| degree[v] == 1).expect("some label is absent from the code");
    let mut leaf = finger;
    for &x in &code.code {
        edges.push((leaf, x));
        degree[leaf] = 0;
        degree[x] -= 1;
        if degree[x] == 1 && x < finger {
            leaf = x;
        } else {
            finger += 1;
            while degree[finger] != 1 {
                finger += 1;
            }
            leaf = finger;
        }
    }
    edges.push((leaf, n));
    LabelledTree::build(n, &edges)
}

/// Decodes a raw label sequence; the length fixes `n = len + 2`.
pub fn prufer_decode_slice(code: &[usize]) -> Result<LabelledTree> {
    Ok(prufer_decode(&PruferCode::new(code.len() + 2, code.to_vec())?))
}

/// Uniform random labelled tree: `n - 2` i.i.d. uniform labels, then decode.
pub fn random_tree(n: usize, seed: u64) -> Result<LabelledTree> {
    random_tree_with(n, &mut rng::seeded(seed))
}

pub fn random_tree_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<LabelledTree> {
    if n < 2 {
        return Err(Error::invalid(format!("random trees need n >= 2, got {n}")));
    }
    let code: Vec<usize> = (0..n - 2).map(|_| rng.random_range(1..=n)).collect();
    Ok(prufer_decode(&PruferCode { n, code }))
}

/// Number of vertices of each degree.
pub fn degree_histogram(tree: &LabelledTree) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for v in 1..=tree.n() {
        *hist.entry(tree.degree(v)).or_insert(0) += 1;
    }
    hist
}

/// A tree-realizable degree sequence, kept in non-increasing order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSequence {
    degrees: Vec<usize>,
}

impl DegreeSequence {
    /// Accepts the degrees in any order and sorts them non-increasingly.
    /// The sort is stable, so equal degrees keep their input order.
    pub fn new(mut degrees: Vec<usize>) -> Result<Self> {
        let n = degrees.len();
        if n < 2 {
            return Err(Error::invalid("degree sequences need n >= 2"));
        }
        if degrees.contains(&0) {
            return Err(Error::invalid("every vertex of a tree has degree >= 1"));
        }
        let sum: usize = degrees.iter().sum();
        if sum != 2 * (n - 1) {
            return Err(Error::invalid(format!(
                "degree sum must be 2(n - 1) = {}, got {sum}",
                2 * (n - 1)
            )));
        }
        degrees.sort_by(|a, b| b.cmp(a));
        Ok(DegreeSequence { degrees })
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.degrees
    }
}

/// Greedy breadth-first tree: the root takes the largest degree, and each
/// vertex, in BFS order, receives the next-largest unassigned degrees as its
/// children. Labels are assigned in BFS order starting from 1.
pub fn greedy_tree_from_degree_sequence(seq: &DegreeSequence) -> Result<LabelledTree> {
    let d = &seq.degrees;
    let n = d.len();
    let mut edges = Vec::with_capacity(n - 1);
    let mut queue = VecDeque::from([1usize]);
    let mut next = 2usize;
    while let Some(v) = queue.pop_front() {
        let children = if v == 1 { d[0] } else { d[v - 1] - 1 };
        for _ in 0..children {
            if next > n {
                return Err(Error::invalid("degree sequence is not realizable as a tree"));
            }
            edges.push((v, next));
            queue.push_back(next);
            next += 1;
        }
    }
    if next != n + 1 {
        return Err(Error::invalid("degree sequence is not realizable as a tree"));
    }
    Ok(LabelledTree::build(n, &edges))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge_set(t: &LabelledTree) -> Vec<(usize, usize)> {
        t.edges().collect()
    }

    #[test]
    fn encode_examples() {
        let path = LabelledTree::path(3).unwrap();
        assert_eq!(prufer_encode(&path).unwrap().as_slice(), &[2]);
        let edge = LabelledTree::path(2).unwrap();
        assert!(prufer_encode(&edge).unwrap().as_slice().is_empty());
        let star = LabelledTree::star(3, 3).unwrap();
        assert_eq!(prufer_encode(&star).unwrap().as_slice(), &[3]);
        assert!(prufer_encode(&LabelledTree::singleton()).is_err());
    }

    #[test]
    fn encode_matches_naive_leaf_removal() {
        // Direct smallest-leaf removal as an independent check of the finger scan.
        fn naive(t: &LabelledTree) -> Vec<usize> {
            let n = t.n();
            let mut alive = vec![true; n + 1];
            let mut deg: Vec<usize> = (0..=n).map(|v| if v == 0 { 0 } else { t.degree(v) }).collect();
            let mut out = Vec::new();
            for _ in 0..n - 2 {
                let leaf = (1..=n).find(|&v| alive[v] && deg[v] == 1).unwrap();
                let nb = *t.neighbours(leaf).iter().find(|&&w| alive[w]).unwrap();
                out.push(nb);
                alive[leaf] = false;
                deg[nb] -= 1;
            }
            out
        }
        for seed in 0..50 {
            let t = random_tree(2 + (seed as usize % 30), seed).unwrap();
            assert_eq!(prufer_encode(&t).unwrap().as_slice(), naive(&t).as_slice());
        }
    }

    #[test]
    fn decode_examples() {
        let t = prufer_decode_slice(&[]).unwrap();
        assert_eq!(edge_set(&t), vec![(1, 2)]);
        let t = prufer_decode_slice(&[3]).unwrap();
        assert_eq!(edge_set(&t), vec![(1, 3), (2, 3)]);
        assert!(prufer_decode_slice(&[4]).is_err());
        assert!(prufer_decode_slice(&[0, 1]).is_err());
        let code = vec![3, 7, 1, 1, 10, 2, 9, 9];
        let t = prufer_decode_slice(&code).unwrap();
        assert_eq!(prufer_encode(&t).unwrap().as_slice(), code.as_slice());
    }

    #[test]
    fn random_tree_basics() {
        assert_eq!(edge_set(&random_tree(2, 123).unwrap()), vec![(1, 2)]);
        assert_eq!(random_tree(5, 9).unwrap(), random_tree(5, 9).unwrap());
        assert!(random_tree(1, 0).is_err());
        let t = random_tree(10_000, 42).unwrap();
        let leaves = degree_histogram(&t)[&1] as f64 / 1e4;
        assert!((0.34..=0.40).contains(&leaves), "leaf fraction {leaves}");
    }

    #[test]
    fn histogram_examples() {
        let h = degree_histogram(&LabelledTree::path(3).unwrap());
        assert_eq!(h, BTreeMap::from([(1, 2), (2, 1)]));
        let h = degree_histogram(&LabelledTree::star(5, 1).unwrap());
        assert_eq!(h, BTreeMap::from([(1, 4), (4, 1)]));
    }

    #[test]
    fn histogram_matches_code_multiplicities() {
        let t = random_tree(300, 5).unwrap();
        let code = prufer_encode(&t).unwrap();
        for v in 1..=300 {
            let occurrences = code.as_slice().iter().filter(|&&x| x == v).count();
            assert_eq!(t.degree(v), occurrences + 1);
        }
    }

    #[test]
    fn greedy_examples() {
        let star = greedy_tree_from_degree_sequence(&DegreeSequence::new(vec![4, 1, 1, 1, 1]).unwrap()).unwrap();
        assert_eq!(degree_histogram(&star), BTreeMap::from([(1, 4), (4, 1)]));
        let star4 = greedy_tree_from_degree_sequence(&DegreeSequence::new(vec![3, 1, 1, 1]).unwrap()).unwrap();
        assert_eq!(edge_set(&star4), vec![(1, 2), (1, 3), (1, 4)]);
        let path = greedy_tree_from_degree_sequence(&DegreeSequence::new(vec![2, 2, 2, 1, 1]).unwrap()).unwrap();
        assert_eq!(degree_histogram(&path), BTreeMap::from([(1, 2), (2, 3)]));
        assert_eq!(edge_set(&path), vec![(1, 2), (1, 3), (2, 4), (3, 5)]);
    }

    #[test]
    fn greedy_rejects_unrealizable() {
        assert!(DegreeSequence::new(vec![2, 2, 1]).is_err());
        assert!(DegreeSequence::new(vec![3, 1, 1, 0, 1]).is_err());
        assert!(DegreeSequence::new(vec![1]).is_err());
    }

    #[test]
    fn greedy_accepts_unsorted_input() {
        let seq = DegreeSequence::new(vec![1, 3, 1, 2, 1]).unwrap();
        assert_eq!(seq.as_slice(), &[3, 2, 1, 1, 1]);
        let t = greedy_tree_from_degree_sequence(&seq).unwrap();
        assert_eq!(t.degree(1), 3);
        assert_eq!(t.degree(2), 2);
    }

    #[test]
    fn text_format() {
        let t = prufer_decode_slice(&[4, 4, 2]).unwrap();
        let text = t.to_string();
        assert_eq!(text, "5\n1 4\n2 4\n2 5\n3 4\n");
        assert_eq!(text.parse::<LabelledTree>().unwrap(), t);
        assert_eq!("1\n".parse::<LabelledTree>().unwrap(), LabelledTree::singleton());
        assert!("3\n1 2\n".parse::<LabelledTree>().is_err());
        assert!("3\n2 1\n1 3\n".parse::<LabelledTree>().is_err());
        assert!("4\n1 2\n1 2\n3 4\n".parse::<LabelledTree>().is_err());
        assert!("4\n1 2\n2 3\n1 3\n".parse::<LabelledTree>().is_err());
    }
}
