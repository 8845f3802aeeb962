//! `subtrees verify`: deterministic consistency suites plus one statistical check.

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::bail;
use subtree_core::asymptotics::{f_closed, f_recurrence_all, identity_check, DensityTable};
use subtree_core::census::{compute_tables, exhaustive_tables, load_tables};
use subtree_core::montecarlo::empirical_densities;
use subtree_core::subtree::{brute_force_count, total_count};
use subtree_core::tree::{prufer_decode_slice, prufer_encode, random_tree, LabelledTree};

type Outcome = Result<(), String>;

fn identities() -> Outcome {
    match (2..=25).find(|&b| !identity_check(b)) {
        Some(b) => Err(format!("fails at b = {b}")),
        None => Ok(()),
    }
}

fn census_oracle(k: usize) -> Outcome {
    let fast = compute_tables(k).map_err(|e| e.to_string())?;
    let slow = exhaustive_tables(k).map_err(|e| e.to_string())?;
    match (1..=k).find(|&kk| fast.row(kk) != slow.row(kk)) {
        Some(kk) => Err(format!("rows differ at k = {kk}")),
        None => Ok(()),
    }
}

fn density_mass() -> Outcome {
    for k_max in 1..=12 {
        let mass = DensityTable::new(k_max, 256).map_err(|e| e.to_string())?.total_mass();
        if !mass.contains_u64(1) {
            return Err(format!("K = {k_max}: mass {mass}"));
        }
    }
    Ok(())
}

fn closed_vs_recurrence() -> Outcome {
    for k_max in 1..=12 {
        let rec = f_recurrence_all(k_max, 256).map_err(|e| e.to_string())?;
        for (i, r) in rec.iter().enumerate() {
            let closed = f_closed(k_max, i + 1, 256).map_err(|e| e.to_string())?;
            if !closed.overlaps(r) {
                return Err(format!("K = {k_max}, k = {}", i + 1));
            }
        }
    }
    Ok(())
}

fn prufer_and_cayley() -> Outcome {
    for n in 2..=5usize {
        let mut trees = BTreeSet::new();
        let codes = n.pow(n as u32 - 2);
        for index in 0..codes {
            let mut code = Vec::with_capacity(n - 2);
            let mut rem = index;
            for _ in 0..n - 2 {
                code.push(rem % n + 1);
                rem /= n;
            }
            let tree = prufer_decode_slice(&code).map_err(|e| e.to_string())?;
            let back = prufer_encode(&tree).map_err(|e| e.to_string())?;
            if back.as_slice() != code.as_slice() {
                return Err(format!("round trip fails for {code:?}"));
            }
            trees.insert(tree.edges().collect::<Vec<_>>());
        }
        if trees.len() != codes {
            return Err(format!("n = {n}: {} distinct trees from {codes} codes", trees.len()));
        }
        let all_edges: Vec<(usize, usize)> = (1..=n).flat_map(|u| (u + 1..=n).map(move |v| (u, v))).collect();
        let spanning = (0u32..1 << all_edges.len())
            .filter(|m| m.count_ones() as usize == n - 1)
            .filter(|&m| {
                let edges: Vec<_> = (0..all_edges.len()).filter(|i| m >> i & 1 == 1).map(|i| all_edges[i]).collect();
                LabelledTree::from_edges(n, &edges).is_ok()
            })
            .count();
        if spanning != codes {
            return Err(format!("n = {n}: {spanning} spanning trees, expected {codes}"));
        }
    }
    Ok(())
}

fn subtree_oracle() -> Outcome {
    for seed in 0..200u64 {
        let n = 2 + (seed % 13) as usize;
        let tree = random_tree(n, seed).map_err(|e| e.to_string())?;
        let brute = brute_force_count(&tree).map_err(|e| e.to_string())?;
        if total_count(&tree) != brute {
            return Err(format!("n = {n}, seed = {seed}"));
        }
    }
    Ok(())
}

fn table_file(path: &Path) -> Outcome {
    let table = load_tables(path).map_err(|e| e.to_string())?;
    table.validate().map_err(|e| e.to_string())?;
    let fresh = compute_tables(table.k_max()).map_err(|e| e.to_string())?;
    if fresh != table {
        return Err("differs from a fresh computation".into());
    }
    Ok(())
}

fn report(name: &str, outcome: Outcome) -> bool {
    match outcome {
        Ok(()) => {
            println!("{name}: PASS");
            true
        }
        Err(why) => {
            println!("{name}: FAIL ({why})");
            false
        }
    }
}

pub fn run(oracle_k: usize, table: Option<&Path>) -> anyhow::Result<()> {
    let mut ok = true;
    ok &= report("identities b≤25", identities());
    ok &= report(&format!("census vs exhaustive k≤{oracle_k}"), census_oracle(oracle_k));
    ok &= report("density mass K≤12", density_mass());
    ok &= report("closed form vs recurrence K≤12", closed_vs_recurrence());
    ok &= report("Prüfer round trip and Cayley n≤5", prufer_and_cayley());
    ok &= report("subtree DP vs brute force", subtree_oracle());
    if let Some(path) = table {
        ok &= report(&format!("table file {}", path.display()), table_file(path));
    }

    // statistical: reported, never fails the run
    match empirical_densities(20_000, 3, 10, 0) {
        Ok(cmp) => {
            let worst = cmp.z_scores().into_iter().fold(0.0, f64::max);
            let verdict = if worst < 4.0 { "PASS" } else { "WARN" };
            println!("trimming densities K=3 (statistical): {verdict} (max |z| = {worst:.2})");
        }
        Err(e) => println!("trimming densities K=3 (statistical): WARN ({e})"),
    }
    if !ok {
        bail!("verification failed");
    }
    Ok(())
}
