//! Explicit solutions `r(x,y) = (σ_x(y), τ_y(x))`, the braid-relation
//! check, and the translations to and from (skew) cycle sets.
//!
//! With `x·y = τ_x⁻¹(y)` and `y*x = z ⟺ y·z = x` (so `y*x = τ_y(x)`):
//!
//! * cycle set → solution: `r(x,y) = ((y*x)·y, y*x)`;
//! * skew cycle set → solution: `r(x,y) = ((y*x)·((y*x)▷y), y*x)`;
//! * solution → rack: `x▷y = τ_x σ_{τ_y⁻¹(x)}(y)`.

use std::fmt;

use thiserror::Error;

use crate::perm::Permutation;
use crate::tables::{CycleSetTable, Matrix, SkewCycleSet, Violation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum YbError {
    #[error("sigma has {sigma} maps and tau has {tau}, on a set of size {n}")]
    SizeMismatch { n: usize, sigma: usize, tau: usize },
    #[error("solution is not involutive")]
    NotInvolutive,
    #[error("not a solution: {0}")]
    NotASolution(YbeFailure),
    #[error("derived table is invalid: {0}")]
    InvalidTable(Violation),
}

/// Why [`verify_ybe`] rejected a map. Points are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YbeFailure {
    /// `r(a) = r(b)` for the two listed pairs.
    NotBijective { first: (usize, usize), second: (usize, usize) },
    /// The braid relation fails on `(x, y, z)`.
    Braid { x: usize, y: usize, z: usize },
}

impl fmt::Display for YbeFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            YbeFailure::NotBijective { first, second } => {
                write!(f, "r{first:?} = r{second:?}, r is not bijective")
            }
            YbeFailure::Braid { x, y, z } => write!(f, "braid relation fails at ({x},{y},{z})"),
        }
    }
}

/// A non-degenerate map `r(x,y) = (σ_x(y), τ_y(x))` on `{1..n}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SolutionMap {
    sigma: Vec<Permutation>,
    tau: Vec<Permutation>,
}

impl SolutionMap {
    pub fn new(sigma: Vec<Permutation>, tau: Vec<Permutation>) -> Result<Self, YbError> {
        let n = sigma.len();
        if tau.len() != n || sigma.iter().chain(&tau).any(|p| p.len() != n) {
            return Err(YbError::SizeMismatch {
                n,
                sigma: sigma.len(),
                tau: tau.len(),
            });
        }
        Ok(SolutionMap { sigma, tau })
    }

    /// `r(x,y) = (y,x)`.
    pub fn flip(n: usize) -> Self {
        SolutionMap {
            sigma: vec![Permutation::identity(n); n],
            tau: vec![Permutation::identity(n); n],
        }
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self, x: usize) -> &Permutation {
        &self.sigma[x]
    }

    pub fn tau(&self, y: usize) -> &Permutation {
        &self.tau[y]
    }

    pub fn sigmas(&self) -> &[Permutation] {
        &self.sigma
    }

    pub fn taus(&self) -> &[Permutation] {
        &self.tau
    }

    #[inline]
    pub fn apply(&self, x: usize, y: usize) -> (usize, usize) {
        (self.sigma[x].apply(y), self.tau[y].apply(x))
    }
}

/// Checks that `r` is a bijection of `X×X` satisfying the braid relation
/// `(r×id)(id×r)(r×id) = (id×r)(r×id)(id×r)` on every triple.
pub fn verify_ybe(s: &SolutionMap) -> Result<(), YbeFailure> {
    let n = s.n();
    let mut preimage = vec![usize::MAX; n * n];
    for x in 0..n {
        for y in 0..n {
            let (u, v) = s.apply(x, y);
            let slot = &mut preimage[u * n + v];
            if *slot != usize::MAX {
                return Err(YbeFailure::NotBijective {
                    first: (*slot / n + 1, *slot % n + 1),
                    second: (x + 1, y + 1),
                });
            }
            *slot = x * n + y;
        }
    }
    for x in 0..n {
        for y in 0..n {
            let (a0, b0) = s.apply(x, y);
            for z in 0..n {
                let (b1, c1) = s.apply(b0, z);
                let (a1, b2) = s.apply(a0, b1);
                let lhs = (a1, b2, c1);

                let (q0, r0) = s.apply(y, z);
                let (p1, q1) = s.apply(x, q0);
                let (q2, r1) = s.apply(q1, r0);
                let rhs = (p1, q2, r1);
                if lhs != rhs {
                    return Err(YbeFailure::Braid {
                        x: x + 1,
                        y: y + 1,
                        z: z + 1,
                    });
                }
            }
        }
    }
    Ok(())
}

/// `r² = id`.
pub fn is_involutive(s: &SolutionMap) -> bool {
    let n = s.n();
    (0..n).all(|x| {
        (0..n).all(|y| {
            let (u, v) = s.apply(x, y);
            s.apply(u, v) == (x, y)
        })
    })
}

fn row_inverses(m: &Matrix) -> Vec<u8> {
    let n = m.n();
    let mut inv = vec![0u8; n * n];
    for i in 0..n {
        for j in 0..n {
            inv[i * n + m.get(i, j)] = j as u8;
        }
    }
    inv
}

/// The involutive solution of a cycle set: `τ_x = φ_x⁻¹`,
/// `σ_x(y) = τ_y(x)·y`.
pub fn cycle_set_to_solution(m: &CycleSetTable) -> SolutionMap {
    let mat = m.matrix();
    let n = mat.n();
    let star = row_inverses(mat);
    let tau: Vec<Permutation> = (0..n)
        .map(|y| Permutation::from_images_unchecked(star[y * n..(y + 1) * n].to_vec()))
        .collect();
    let sigma = (0..n)
        .map(|x| {
            let images = (0..n)
                .map(|y| mat.get(star[y * n + x] as usize, y) as u8)
                .collect();
            Permutation::from_images_unchecked(images)
        })
        .collect();
    SolutionMap { sigma, tau }
}

fn tau_inverse_table(s: &SolutionMap) -> Matrix {
    let n = s.n();
    let cells = s
        .tau
        .iter()
        .flat_map(|t| t.inverse().images().to_vec())
        .collect();
    Matrix::from_cells_unchecked(n, cells)
}

/// `x·y = τ_x⁻¹(y)`; only defined for involutive solutions.
pub fn solution_to_cycle_set(s: &SolutionMap) -> Result<CycleSetTable, YbError> {
    if !is_involutive(s) {
        return Err(YbError::NotInvolutive);
    }
    CycleSetTable::new(tau_inverse_table(s)).map_err(YbError::InvalidTable)
}

/// The skew cycle set `(x·y = τ_x⁻¹(y), x▷y = τ_x σ_{τ_y⁻¹(x)}(y))`.
pub fn solution_to_skew_cycle_set(s: &SolutionMap) -> Result<SkewCycleSet, YbError> {
    let n = s.n();
    let m = tau_inverse_table(s);
    let mut r = Vec::with_capacity(n * n);
    for x in 0..n {
        for y in 0..n {
            let w = m.get(y, x);
            r.push(s.tau[x].apply(s.sigma[w].apply(y)) as u8);
        }
    }
    let r = Matrix::from_cells_unchecked(n, r);
    SkewCycleSet::new(m, r).map_err(YbError::InvalidTable)
}

/// `r(x,y) = (z·(z▷y), z)` with `z = y*x`.
pub fn skew_cycle_set_to_solution(sc: &SkewCycleSet) -> SolutionMap {
    let mat = sc.m();
    let rack = sc.rack().matrix();
    let n = mat.n();
    let star = row_inverses(mat);
    let tau: Vec<Permutation> = (0..n)
        .map(|y| Permutation::from_images_unchecked(star[y * n..(y + 1) * n].to_vec()))
        .collect();
    let sigma = (0..n)
        .map(|x| {
            let images = (0..n)
                .map(|y| {
                    let z = star[y * n + x] as usize;
                    mat.get(z, rack.get(z, y)) as u8
                })
                .collect();
            Permutation::from_images_unchecked(images)
        })
        .collect();
    SolutionMap { sigma, tau }
}

/// Two size-8 indecomposable involutive multipermutation solutions, given
/// by their σ and τ maps with `σ_x = σ_{x+4}` and `τ_x = τ_{x+4}`.
pub mod fixtures {
    use super::SolutionMap;
    use crate::perm::Permutation;

    fn build(sigma: [&str; 4], tau: [&str; 4]) -> SolutionMap {
        let parse = |s: &str| Permutation::parse_cycles(s, 8).expect("fixture cycle notation");
        let sigma = (0..8).map(|x| parse(sigma[x % 4])).collect();
        let tau = (0..8).map(|x| parse(tau[x % 4])).collect();
        SolutionMap::new(sigma, tau).expect("fixture sizes")
    }

    /// Every σ_x and τ_x is an 8-cycle.
    pub fn eight_cycle_solution() -> SolutionMap {
        build(
            ["(16345278)", "(12745638)", "(12385674)", "(16785234)"],
            ["(18365472)", "(14765832)", "(14325876)", "(18725436)"],
        )
    }

    /// Every σ_x and τ_x is a product of two 4-cycles.
    pub fn double_four_cycle_solution() -> SolutionMap {
        build(
            ["(1278)(3456)", "(1238)(4567)", "(1234)(5678)", "(1678)(2345)"],
            ["(1832)(4765)", "(1432)(5876)", "(1876)(2543)", "(1872)(3654)"],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::{is_quandle, RackTable};

    #[test]
    fn flip_is_an_involutive_solution() {
        for n in 1..6 {
            let f = SolutionMap::flip(n);
            assert_eq!(verify_ybe(&f), Ok(()));
            assert!(is_involutive(&f));
        }
    }

    #[test]
    fn fixtures_are_involutive_solutions() {
        for s in [fixtures::eight_cycle_solution(), fixtures::double_four_cycle_solution()] {
            assert_eq!(verify_ybe(&s), Ok(()));
            assert!(is_involutive(&s));
            let sc = solution_to_skew_cycle_set(&s).unwrap();
            assert!(sc.rack().is_trivial());
            assert_eq!(sc.m(), solution_to_cycle_set(&s).unwrap().matrix());
        }
    }

    #[test]
    fn shift_map_fails_with_witness() {
        // r(x,y) = (y, τ_y(x)) with τ_1 = (1 2 3) and the other τ trivial
        let n = 3;
        let shift = Permutation::parse_cycles("(1 2 3)", n).unwrap();
        let mut tau = vec![Permutation::identity(n); n];
        tau[0] = shift;
        let s = SolutionMap::new(vec![Permutation::identity(n); n], tau).unwrap();
        match verify_ybe(&s) {
            Err(YbeFailure::Braid { x, y, z }) => {
                let r = |a: usize, b: usize| (b, if b == 1 { a % 3 + 1 } else { a });
                let (a, b) = r(x, y);
                let (b, c) = r(b, z);
                let (a, b) = r(a, b);
                let (q, rr) = r(y, z);
                let (p, q) = r(x, q);
                let (q, rr) = r(q, rr);
                assert_ne!((a, b, c), (p, q, rr));
            }
            other => panic!("expected a braid failure, got {other:?}"),
        }
    }

    #[test]
    fn non_bijective_map_is_rejected() {
        // σ_1 = τ_1 = (1 2), σ_2 = τ_2 = id: r(1,1) = (2,2) = r(2,2)
        let n = 2;
        let id = Permutation::identity(n);
        let sw = Permutation::parse_cycles("(1 2)", n).unwrap();
        let s = SolutionMap::new(vec![sw.clone(), id.clone()], vec![sw, id]).unwrap();
        assert!(matches!(verify_ybe(&s), Err(YbeFailure::NotBijective { .. })));
    }

    #[test]
    fn trivial_cycle_set_gives_flip() {
        for n in 1..5 {
            assert_eq!(cycle_set_to_solution(&CycleSetTable::trivial(n)), SolutionMap::flip(n));
            let sc = solution_to_skew_cycle_set(&SolutionMap::flip(n)).unwrap();
            assert!(sc.m().is_trivial() && sc.rack().is_trivial());
        }
    }

    #[test]
    fn size_two_cycle_set_round_trip() {
        let m = CycleSetTable::from_rows(&[vec![2, 1], vec![2, 1]]).unwrap();
        let s = cycle_set_to_solution(&m);
        assert_eq!(verify_ybe(&s), Ok(()));
        assert!(is_involutive(&s));
        assert_eq!(solution_to_cycle_set(&s).unwrap(), m);
    }

    #[test]
    fn non_involutive_size_two() {
        // rack i▷j = (1 2)(j); with m = trivial this is the solution
        // r(x,y) = (s(y), x) for the swap s.
        let rack = RackTable::from_rows(&[vec![2, 1], vec![2, 1]]).unwrap();
        assert!(!is_quandle(&rack));
        let sc = SkewCycleSet::new(Matrix::trivial(2), rack.matrix().clone()).unwrap();
        let s = skew_cycle_set_to_solution(&sc);
        assert_eq!(verify_ybe(&s), Ok(()));
        assert!(!is_involutive(&s));
        assert_eq!(solution_to_skew_cycle_set(&s).unwrap(), sc);
        assert_eq!(solution_to_cycle_set(&s), Err(YbError::NotInvolutive));
    }

    #[test]
    fn diagonal_is_the_t_map() {
        let s = fixtures::eight_cycle_solution();
        let m = solution_to_cycle_set(&s).unwrap();
        for x in 0..8 {
            assert_eq!(m.matrix().get(x, x), s.tau(x).inverse().apply(x));
        }
    }
}
