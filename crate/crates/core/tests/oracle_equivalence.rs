mod oracle;

use std::collections::BTreeSet;

use oracle::{brute_key, brute_pair_key, permutations, to_table};
use ybenum::enumerate::{enumerate_cycle_sets, enumerate_non_involutive, enumerate_racks, Kind, SearchConfig, SymmetryMode};

#[test]
fn cycle_sets_match_naive_enumeration() {
    for n in 1..=4 {
        let perms = permutations(n);
        let expected = oracle::cycle_set_classes(n);
        let got = enumerate_cycle_sets(&SearchConfig::new(n, Kind::CycleSet)).unwrap().items;
        let keys: BTreeSet<_> = got.iter().map(|m| brute_key(&to_table(m.matrix().cells(), n), &perms)).collect();
        assert_eq!(got.len(), keys.len(), "n={n}: engine output has isomorphic duplicates");
        assert_eq!(keys, expected, "n={n}");
    }
}

#[test]
fn racks_match_naive_enumeration() {
    for n in 1..=4 {
        let perms = permutations(n);
        let expected = oracle::rack_classes(n);
        let got = enumerate_racks(&SearchConfig::new(n, Kind::Rack)).unwrap().items;
        let keys: BTreeSet<_> = got.iter().map(|r| brute_key(&to_table(r.matrix().cells(), n), &perms)).collect();
        assert_eq!(got.len(), keys.len());
        assert_eq!(keys, expected, "n={n}");
    }
}

#[test]
fn skew_cycle_sets_match_naive_enumeration() {
    for n in 2..=4 {
        for quandles in [false, true] {
            let perms = permutations(n);
            let expected = oracle::non_involutive_classes(n, quandles);
            for mode in [SymmetryMode::Auto, SymmetryMode::None] {
                let cfg = SearchConfig::new(n, Kind::SkewOverRack).symmetry(mode);
                let got = enumerate_non_involutive(&cfg, quandles).unwrap().items;
                let keys: BTreeSet<_> = got
                    .iter()
                    .map(|s| {
                        let r = to_table(s.rack().matrix().cells(), n);
                        let m = to_table(s.m().cells(), n);
                        brute_pair_key(&r, &m, &perms)
                    })
                    .collect();
                assert_eq!(got.len(), keys.len());
                assert_eq!(keys, expected, "n={n} quandles={quandles} mode={mode:?}");
            }
        }
    }
}

#[test]
fn naive_checkers_agree_with_library_on_all_small_tables() {
    use ybenum::tables::{check_cycle_set, check_rack, Matrix};
    let n = 3;
    let ps = permutations(n);
    for a in &ps {
        for b in &ps {
            for c in &ps {
                let t = vec![a.clone(), b.clone(), c.clone()];
                let cells: Vec<u8> = t.iter().flatten().map(|&v| v as u8).collect();
                let m = Matrix::from_cells(n, cells).unwrap();
                assert_eq!(oracle::is_cycle_set(&t), check_cycle_set(&m).is_ok());
                assert_eq!(oracle::is_rack(&t), check_rack(&m).is_ok());
            }
        }
    }
}
