//! Structural predicates on cycle sets and solutions: square-free,
//! permutation group and indecomposability, retraction, multipermutation
//! level, irretractability, biquandles and Gateva–Ivanova counterexamples.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::perm::Permutation;
use crate::tables::{check_cycle_set, is_quandle, CycleSetTable, Matrix, Violation};
use crate::yb::{is_involutive, solution_to_cycle_set, solution_to_skew_cycle_set, SolutionMap};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PropsError {
    /// The induced operation on row classes depends on representatives.
    #[error("retraction is not well defined: classes of {x} and {y} give different products")]
    RetractNotWellDefined { x: usize, y: usize },
    #[error("retraction is not a cycle set: {0}")]
    RetractInvalid(Violation),
}

pub fn is_square_free(m: &CycleSetTable) -> bool {
    let mat = m.matrix();
    (0..mat.n()).all(|i| mat.get(i, i) == i)
}

/// A permutation group given by generators; orbits are eager, the order is
/// computed on demand by closure.
#[derive(Debug, Clone)]
pub struct PermutationGroup {
    n: usize,
    generators: Vec<Permutation>,
    orbits: Vec<Vec<usize>>,
}

impl PermutationGroup {
    pub fn new(n: usize, generators: Vec<Permutation>) -> Self {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for g in &generators {
            for x in 0..n {
                let (a, b) = (find(&mut parent, x), find(&mut parent, g.apply(x)));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut orbits: Vec<Vec<usize>> = Vec::new();
        let mut index = vec![usize::MAX; n];
        for x in 0..n {
            let root = find(&mut parent, x);
            if index[root] == usize::MAX {
                index[root] = orbits.len();
                orbits.push(Vec::new());
            }
            orbits[index[root]].push(x);
        }
        let generators = generators.into_iter().filter(|g| !g.is_identity()).collect();
        PermutationGroup { n, generators, orbits }
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    /// Orbits of `{0..n}`, each sorted, ordered by least element.
    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    pub fn is_transitive(&self) -> bool {
        self.orbits.len() <= 1
    }

    pub fn order(&self) -> u64 {
        let id: Vec<u8> = (0..self.n as u8).collect();
        let mut seen: HashSet<Vec<u8>> = HashSet::new();
        seen.insert(id.clone());
        let mut stack = vec![id];
        while let Some(p) = stack.pop() {
            for g in &self.generators {
                let q: Vec<u8> = p.iter().map(|&x| g.images()[x as usize]).collect();
                if seen.insert(q.clone()) {
                    stack.push(q);
                }
            }
        }
        seen.len() as u64
    }
}

/// The group generated by the row maps `φ_x` (equivalently by the `τ_x`).
pub fn permutation_group(m: &CycleSetTable) -> PermutationGroup {
    PermutationGroup::new(m.n(), (0..m.n()).map(|i| m.phi(i)).collect())
}

pub fn is_indecomposable(m: &CycleSetTable) -> bool {
    permutation_group(m).is_transitive()
}

/// Row classes: `class[x]` numbers the distinct rows in order of first
/// appearance.
fn row_classes(mat: &Matrix) -> (Vec<usize>, Vec<usize>) {
    let n = mat.n();
    let mut class = vec![usize::MAX; n];
    let mut reps = Vec::new();
    for x in 0..n {
        if class[x] != usize::MAX {
            continue;
        }
        class[x] = reps.len();
        let id = reps.len();
        for (y, c) in class.iter_mut().enumerate().skip(x + 1) {
            if *c == usize::MAX && mat.row(x) == mat.row(y) {
                *c = id;
            }
        }
        reps.push(x);
    }
    (class, reps)
}

/// The induced cycle set on classes of equal rows.
pub fn retract(m: &CycleSetTable) -> Result<CycleSetTable, PropsError> {
    let mat = m.matrix();
    let n = mat.n();
    let (class, reps) = row_classes(mat);
    if reps.len() == n {
        return Ok(m.clone());
    }
    let k = reps.len();
    let mut cells = vec![0u8; k * k];
    for x in 0..n {
        for y in 0..n {
            let c = class[mat.get(x, y)] as u8;
            let at = class[x] * k + class[y];
            if x == reps[class[x]] && y == reps[class[y]] {
                cells[at] = c;
            }
        }
    }
    for x in 0..n {
        for y in 0..n {
            if cells[class[x] * k + class[y]] as usize != class[mat.get(x, y)] {
                return Err(PropsError::RetractNotWellDefined { x: x + 1, y: y + 1 });
            }
        }
    }
    let induced = Matrix::from_cells_unchecked(k, cells);
    check_cycle_set(&induced).map_err(PropsError::RetractInvalid)?;
    Ok(CycleSetTable::new_unchecked(induced))
}

pub fn is_irretractable(m: &CycleSetTable) -> bool {
    row_classes(m.matrix()).1.len() == m.n()
}

/// Number of retractions needed to reach one element; `None` when the
/// sequence stalls at a larger irretractable cycle set.
pub fn multipermutation_level(m: &CycleSetTable) -> Option<usize> {
    let mut cur = m.clone();
    let mut level = 0;
    while cur.n() > 1 {
        let next = retract(&cur).expect("retraction of a valid cycle set");
        if next.n() == cur.n() {
            return None;
        }
        cur = next;
        level += 1;
    }
    Some(level)
}

/// Square-free, irretractable and of size at least 2.
pub fn is_gi_counterexample(m: &CycleSetTable) -> bool {
    m.n() >= 2 && is_square_free(m) && is_irretractable(m)
}

/// Positions of the Gateva–Ivanova counterexamples in a database.
pub fn gi_counterexamples(db: &[CycleSetTable]) -> Vec<usize> {
    db.iter()
        .enumerate()
        .filter(|(_, m)| is_gi_counterexample(m))
        .map(|(i, _)| i)
        .collect()
}

/// True iff the associated rack is a quandle.
pub fn is_biquandle(s: &SolutionMap) -> bool {
    solution_to_skew_cycle_set(s)
        .map(|sc| is_quandle(sc.rack()))
        .unwrap_or(false)
}

/// One line of classification output per record.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClassificationRecord {
    pub n: usize,
    pub involutive: bool,
    pub square_free: bool,
    pub indecomposable: bool,
    /// Only meaningful for involutive solutions; false otherwise.
    pub irretractable: bool,
    /// Only computed for involutive solutions.
    pub multipermutation_level: Option<usize>,
    pub biquandle: bool,
    pub gi_counterexample: bool,
    pub permutation_group_order: u64,
}

pub fn classify_cycle_set(m: &CycleSetTable) -> ClassificationRecord {
    let group = permutation_group(m);
    ClassificationRecord {
        n: m.n(),
        involutive: true,
        square_free: is_square_free(m),
        indecomposable: group.is_transitive(),
        irretractable: is_irretractable(m),
        multipermutation_level: multipermutation_level(m),
        biquandle: true,
        gi_counterexample: is_gi_counterexample(m),
        permutation_group_order: group.order(),
    }
}

/// Classifies any solution. Non-involutive solutions use the group
/// generated by all `σ_x` and `τ_x`, and square-free means `r(x,x) = (x,x)`.
pub fn classify_solution(s: &SolutionMap) -> ClassificationRecord {
    if is_involutive(s) {
        let m = solution_to_cycle_set(s).expect("involutive solution");
        return classify_cycle_set(&m);
    }
    let n = s.n();
    let gens: Vec<Permutation> = s.sigmas().iter().chain(s.taus()).cloned().collect();
    let group = PermutationGroup::new(n, gens);
    ClassificationRecord {
        n,
        involutive: false,
        square_free: (0..n).all(|x| s.apply(x, x) == (x, x)),
        indecomposable: group.is_transitive(),
        irretractable: false,
        multipermutation_level: None,
        biquandle: is_biquandle(s),
        gi_counterexample: false,
        permutation_group_order: group.order(),
    }
}

impl fmt::Display for ClassificationRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = |v: bool| if v { 1 } else { 0 };
        write!(
            f,
            "n={} involutive={} square_free={} indecomposable={} irretractable={} mp_level={} biquandle={} gi={} group_order={}",
            self.n,
            b(self.involutive),
            b(self.square_free),
            b(self.indecomposable),
            b(self.irretractable),
            self.multipermutation_level.map_or("none".to_string(), |l| l.to_string()),
            b(self.biquandle),
            b(self.gi_counterexample),
            self.permutation_group_order
        )
    }
}

/// Counts over a database.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Summary {
    pub solutions: u64,
    pub involutive: u64,
    pub square_free: u64,
    pub indecomposable: u64,
    pub multipermutation: u64,
    pub irretractable: u64,
    pub indecomposable_multipermutation: u64,
    pub biquandles: u64,
    pub non_involutive_biquandles: u64,
    pub gi_counterexamples: u64,
}

impl Summary {
    pub fn add(&mut self, r: &ClassificationRecord) {
        let c = |v: bool| v as u64;
        self.solutions += 1;
        self.involutive += c(r.involutive);
        self.square_free += c(r.square_free);
        self.indecomposable += c(r.indecomposable);
        self.multipermutation += c(r.multipermutation_level.is_some());
        self.irretractable += c(r.irretractable);
        self.indecomposable_multipermutation += c(r.indecomposable && r.multipermutation_level.is_some());
        self.biquandles += c(r.biquandle);
        self.non_involutive_biquandles += c(r.biquandle && !r.involutive);
        self.gi_counterexamples += c(r.gi_counterexample);
    }

    pub fn merge(&mut self, o: &Summary) {
        self.solutions += o.solutions;
        self.involutive += o.involutive;
        self.square_free += o.square_free;
        self.indecomposable += o.indecomposable;
        self.multipermutation += o.multipermutation;
        self.irretractable += o.irretractable;
        self.indecomposable_multipermutation += o.indecomposable_multipermutation;
        self.biquandles += o.biquandles;
        self.non_involutive_biquandles += o.non_involutive_biquandles;
        self.gi_counterexamples += o.gi_counterexamples;
    }
}

impl<'a> FromIterator<&'a ClassificationRecord> for Summary {
    fn from_iter<I: IntoIterator<Item = &'a ClassificationRecord>>(iter: I) -> Self {
        let mut s = Summary::default();
        for r in iter {
            s.add(r);
        }
        s
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = [
            ("solutions", self.solutions),
            ("involutive", self.involutive),
            ("square-free", self.square_free),
            ("indecomposable", self.indecomposable),
            ("multipermutation", self.multipermutation),
            ("irretractable", self.irretractable),
            ("indecomposable-multipermutation", self.indecomposable_multipermutation),
            ("biquandles", self.biquandles),
            ("non-involutive-biquandles", self.non_involutive_biquandles),
            ("gi-counterexamples", self.gi_counterexamples),
        ];
        for (name, v) in rows {
            writeln!(f, "{name} {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::yb::{cycle_set_to_solution, fixtures};

    fn cs(rows: &[&[usize]]) -> CycleSetTable {
        CycleSetTable::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn trivial_cycle_set() {
        let t = CycleSetTable::trivial(4);
        assert!(is_square_free(&t));
        let g = permutation_group(&t);
        assert_eq!(g.order(), 1);
        assert_eq!(g.orbits().len(), 4);
        assert_eq!(retract(&t).unwrap().n(), 1);
        assert_eq!(multipermutation_level(&t), Some(1));
        assert!(!is_irretractable(&t));
        assert_eq!(multipermutation_level(&CycleSetTable::trivial(1)), Some(0));
    }

    #[test]
    fn size_two_swap() {
        let m = cs(&[&[2, 1], &[2, 1]]);
        assert_eq!(permutation_group(&m).order(), 2);
        assert!(is_indecomposable(&m));
        assert!(!is_square_free(&m));
        assert_eq!(multipermutation_level(&m), Some(1));
    }

    #[test]
    fn fixtures_are_indecomposable_multipermutation() {
        for s in [fixtures::eight_cycle_solution(), fixtures::double_four_cycle_solution()] {
            let m = solution_to_cycle_set(&s).unwrap();
            assert!(is_indecomposable(&m));
            assert!(multipermutation_level(&m).is_some());
            assert_eq!(retract(&m).unwrap().n(), 4);
        }
    }

    #[test]
    fn involutive_solutions_are_biquandles() {
        let s = cycle_set_to_solution(&cs(&[&[2, 1], &[2, 1]]));
        assert!(is_biquandle(&s));
        assert!(classify_solution(&s).biquandle);
    }

    #[test]
    fn summary_lines() {
        let recs = [classify_cycle_set(&CycleSetTable::trivial(2)), classify_cycle_set(&cs(&[&[2, 1], &[2, 1]]))];
        let s: Summary = recs.iter().collect();
        assert_eq!(s.solutions, 2);
        assert_eq!(s.square_free, 1);
        assert!(s.to_string().starts_with("solutions 2\n"));
    }
}
