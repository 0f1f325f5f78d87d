use std::sync::OnceLock;

use proptest::prelude::*;

use ybenum::canon::{act, canonical_form, canonical_form_skew};
use ybenum::enumerate::{enumerate_cycle_sets, enumerate_non_involutive, enumerate_racks, Kind, SearchConfig};
use ybenum::perm::{compose, Centralizer, Permutation};
use ybenum::props::{classify_cycle_set, classify_solution};
use ybenum::store::{write_dataset, DatasetHeader, DatasetKind, DatasetReader, Record};
use ybenum::tables::{check_cycle_set, check_rack, check_skew_cycle_set, CycleSetTable, Matrix, RackTable, SkewCycleSet};
use ybenum::yb::{
    cycle_set_to_solution, is_involutive, skew_cycle_set_to_solution, solution_to_cycle_set, solution_to_skew_cycle_set,
    verify_ybe,
};

const CASES: u32 = 10_000;

fn cycle_sets() -> &'static Vec<CycleSetTable> {
    static DB: OnceLock<Vec<CycleSetTable>> = OnceLock::new();
    DB.get_or_init(|| {
        (1..=6)
            .flat_map(|n| enumerate_cycle_sets(&SearchConfig::new(n, Kind::CycleSet)).unwrap().items)
            .collect()
    })
}

fn racks() -> &'static Vec<RackTable> {
    static DB: OnceLock<Vec<RackTable>> = OnceLock::new();
    DB.get_or_init(|| {
        (1..=6)
            .flat_map(|n| enumerate_racks(&SearchConfig::new(n, Kind::Rack)).unwrap().items)
            .collect()
    })
}

fn skew_sets() -> &'static Vec<SkewCycleSet> {
    static DB: OnceLock<Vec<SkewCycleSet>> = OnceLock::new();
    DB.get_or_init(|| {
        (2..=4)
            .flat_map(|n| {
                enumerate_non_involutive(&SearchConfig::new(n, Kind::SkewOverRack), false)
                    .unwrap()
                    .items
            })
            .collect()
    })
}

fn perm_of(n: usize) -> impl Strategy<Value = Permutation> {
    Just((0..n as u8).collect::<Vec<u8>>())
        .prop_shuffle()
        .prop_map(|v| Permutation::from_images(v).unwrap())
}

/// A database entry together with a random relabeling of matching size.
fn relabeled<T: Clone + std::fmt::Debug + 'static>(
    db: &'static [T],
    size: fn(&T) -> usize,
) -> impl Strategy<Value = (T, Permutation)> {
    (0..db.len()).prop_flat_map(move |i| {
        let t = db[i].clone();
        let n = size(&t);
        (Just(t), perm_of(n))
    })
}

fn act_skew(s: &SkewCycleSet, g: &Permutation) -> SkewCycleSet {
    SkewCycleSet::new(act(s.m(), g).unwrap(), act(s.rack().matrix(), g).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn action_law_on_arbitrary_tables(
        (cells, g, h) in (1usize..=7).prop_flat_map(|n| (
            proptest::collection::vec(0..n as u8, n * n),
            perm_of(n),
            perm_of(n),
        ))
    ) {
        let n = g.len();
        let m = Matrix::from_cells(n, cells).unwrap();
        let lhs = act(&act(&m, &g).unwrap(), &h).unwrap();
        let rhs = act(&m, &compose(&g, &h).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(act(&m, &Permutation::identity(n)).unwrap(), m);
    }

    #[test]
    fn cycle_set_round_trip_and_orbit_invariance((m, g) in relabeled(cycle_sets(), CycleSetTable::n)) {
        let moved = CycleSetTable::new(act(m.matrix(), &g).unwrap());
        prop_assert!(moved.is_ok(), "relabeling broke the axioms");
        let moved = moved.unwrap();
        let s = cycle_set_to_solution(&moved);
        prop_assert!(verify_ybe(&s).is_ok());
        prop_assert!(is_involutive(&s));
        prop_assert_eq!(solution_to_cycle_set(&s).unwrap(), moved.clone());
        let sk = solution_to_skew_cycle_set(&s).unwrap();
        prop_assert!(sk.is_classical());
        prop_assert_eq!(sk.m(), moved.matrix());
        for x in 0..s.n() {
            prop_assert_eq!(moved.matrix().get(x, x), s.tau(x).inverse().apply(x));
        }
        prop_assert_eq!(canonical_form(moved.matrix()).unwrap(), canonical_form(m.matrix()).unwrap());
    }

    #[test]
    fn skew_round_trip_and_orbit_invariance((sc, g) in relabeled(skew_sets(), SkewCycleSet::n)) {
        let moved = act_skew(&sc, &g);
        prop_assert!(check_skew_cycle_set(moved.m(), moved.rack().matrix()).is_ok());
        let s = skew_cycle_set_to_solution(&moved);
        prop_assert!(verify_ybe(&s).is_ok());
        prop_assert!(!is_involutive(&s));
        prop_assert_eq!(solution_to_skew_cycle_set(&s).unwrap(), moved.clone());
        prop_assert_eq!(
            canonical_form_skew(moved.rack().matrix(), moved.m()).unwrap(),
            canonical_form_skew(sc.rack().matrix(), sc.m()).unwrap()
        );
    }

    #[test]
    fn rack_orbit_invariance((r, g) in relabeled(racks(), RackTable::n)) {
        let moved = act(r.matrix(), &g).unwrap();
        prop_assert!(check_rack(&moved).is_ok());
        prop_assert_eq!(canonical_form(&moved).unwrap(), canonical_form(r.matrix()).unwrap());
    }

    #[test]
    fn classification_is_isomorphism_invariant((m, g) in relabeled(cycle_sets(), CycleSetTable::n)) {
        let moved = CycleSetTable::new(act(m.matrix(), &g).unwrap()).unwrap();
        prop_assert_eq!(classify_cycle_set(&moved), classify_cycle_set(&m));
        let via_solution = classify_solution(&cycle_set_to_solution(&m));
        prop_assert_eq!(via_solution, classify_cycle_set(&m));
    }

    #[test]
    fn skew_classification_is_isomorphism_invariant((sc, g) in relabeled(skew_sets(), SkewCycleSet::n)) {
        let a = classify_solution(&skew_cycle_set_to_solution(&sc));
        let b = classify_solution(&skew_cycle_set_to_solution(&act_skew(&sc, &g)));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn store_write_read_identity(
        picks in proptest::collection::vec((0usize..4, any::<proptest::sample::Index>()), 0..6),
        n in 2usize..=4,
    ) {
        // one kind per file; the first pick decides it
        let kind = picks.first().map_or(0, |p| p.0);
        let records: Vec<Record> = match kind {
            0 => {
                let pool: Vec<_> = cycle_sets().iter().filter(|m| m.n() == n).collect();
                picks.iter().map(|(_, i)| Record::CycleSet((*i.get(&pool)).clone())).collect()
            }
            1 => {
                let pool: Vec<_> = racks().iter().filter(|r| r.n() == n).collect();
                picks.iter().map(|(_, i)| Record::Rack((*i.get(&pool)).clone())).collect()
            }
            2 => {
                let pool: Vec<_> = skew_sets().iter().filter(|s| s.n() == n).collect();
                picks.iter().map(|(_, i)| Record::Skew((*i.get(&pool)).clone())).collect()
            }
            _ => {
                let pool: Vec<_> = skew_sets().iter().filter(|s| s.n() == n).collect();
                picks
                    .iter()
                    .map(|(_, i)| Record::Solution(skew_cycle_set_to_solution(i.get::<&SkewCycleSet>(&pool))))
                    .collect()
            }
        };
        let dk = [DatasetKind::CycleSet, DatasetKind::Rack, DatasetKind::SkewCycleSet, DatasetKind::Solution][kind];
        let header = DatasetHeader::new(dk, n).with_count(records.len() as u64).with_producer("property test");
        let mut buf = Vec::new();
        prop_assert_eq!(write_dataset(&mut buf, &header, &records).unwrap(), records.len() as u64);
        let reader = DatasetReader::new(&buf[..], true).unwrap();
        prop_assert_eq!(reader.header(), &header);
        let back: Vec<Record> = reader.collect::<Result<_, _>>().unwrap();
        prop_assert_eq!(back, records);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn centralizer_elements_commute_and_count(t in (1usize..=7).prop_flat_map(perm_of)) {
        let c = Centralizer::new(&t);
        let mut count = 0u128;
        for g in c.iter() {
            prop_assert!(g.commutes_with(&t));
            let conj = compose(&compose(&g, &t).unwrap(), &g.inverse()).unwrap();
            prop_assert_eq!(&conj, &t);
            count += 1;
        }
        prop_assert_eq!(count, c.order());
        prop_assert_eq!(count, t.cycle_type().centralizer_order());
    }

    #[test]
    fn check_cycle_set_matches_solution_side(rows in (1usize..=4).prop_flat_map(|n| proptest::collection::vec(perm_of(n), n))) {
        let n = rows.len();
        let cells: Vec<u8> = rows.iter().flat_map(|p| p.images().to_vec()).collect();
        let m = Matrix::from_cells(n, cells).unwrap();
        let ok = check_cycle_set(&m).is_ok();
        // build the would-be solution directly from τ_x = φ_x⁻¹
        let tau: Vec<Permutation> = rows.iter().map(|p| p.inverse()).collect();
        let sigma: Vec<Permutation> = (0..n)
            .map(|x| {
                let imgs: Vec<usize> = (0..n).map(|y| m.get(tau[y].apply(x), y) + 1).collect();
                Permutation::from_one_based(&imgs)
            })
            .filter_map(Result::ok)
            .collect();
        let solution_ok = sigma.len() == n
            && m.diagonal_permutation().is_some()
            && ybenum::yb::SolutionMap::new(sigma, tau)
                .map(|s| verify_ybe(&s).is_ok() && is_involutive(&s))
                .unwrap_or(false);
        prop_assert_eq!(ok, solution_ok);
    }
}
