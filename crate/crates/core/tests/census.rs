use subtree_core::census::{compute_tables, g_support, load_tables, rooted_tree_count, save_tables, Budget};
use subtree_core::rug::Integer;
use subtree_core::Error;

fn factorial(k: u32) -> Integer {
    Integer::from(Integer::factorial(k))
}

#[test]
fn extreme_rows_are_paths_and_stars() {
    // smallest g: a path rooted at an end (k! of them); largest: a star rooted at its centre
    let table = compute_tables(12).unwrap();
    for k in 3..=12usize {
        let (lo, hi) = g_support(k);
        let row = table.row(k);
        assert_eq!(row.keys().next(), Some(&lo));
        assert_eq!(row.keys().last(), Some(&hi));
        assert_eq!(row[&lo], factorial(k as u32));
        assert_eq!(row[&hi], k);
        assert_eq!(table.mass(k), rooted_tree_count(k));
    }
}

#[test]
fn checkpoint_file_resumes_to_the_same_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gcount.csv");
    let budget = Budget {
        max_entries: Some(30),
        ..Budget::default()
    };
    let err = subtree_core::census::GCountTable::base()
        .extend_to(9, &budget, |t| save_tables(t, &path))
        .unwrap_err();
    let Error::Budget { partial, .. } = err else {
        panic!("expected a budget error");
    };
    let saved = load_tables(&path).unwrap();
    assert_eq!(saved, *partial);
    let resumed = saved.extend_to(9, &Budget::default(), |t| save_tables(t, &path)).unwrap();
    assert_eq!(resumed, compute_tables(9).unwrap());
    assert_eq!(load_tables(&path).unwrap(), resumed);
}

#[test]
fn load_reports_the_offending_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "# gcount v1 K=2\n1,2,1\n2,3,two\n").unwrap();
    let err = load_tables(&path).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }));
    assert!(err.to_string().contains("bad.csv:3:"), "{err}");
    assert!(matches!(load_tables(&dir.path().join("missing.csv")), Err(Error::Io(_))));
}
