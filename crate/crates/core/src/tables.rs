//! Dense `n×n` operation tables and the axiom checkers for cycle sets,
//! racks and skew cycle sets.
//!
//! Entries are stored 0-based, one byte each, row-major. Constructors take
//! either 0-based cells or 1-based rows; anything outside `{1..n}` is a
//! [`TableError::Malformed`], which is kept apart from axiom failures.

use std::fmt;

use thiserror::Error;

use crate::perm::{Permutation, MAX_DEGREE};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableError {
    #[error("malformed table: {0}")]
    Malformed(String),
    #[error("{0}")]
    Axiom(Violation),
}

/// Which constraint failed, numbered in the order the checkers test them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// (1) some row has a repeated entry
    RowBijective,
    /// (2) the diagonal has a repeated entry
    DiagonalBijective,
    /// (3) `(i·j)·(i·k) = (j·i)·(j·k)`
    CycleSetLaw,
    /// (3) `i▷(j▷k) = (i▷j)▷(i▷k)`
    SelfDistributive,
    /// (3) `(i·(i▷j))·(i·k) = (j·i)·(j·k)`
    SkewCycleLaw,
    /// (4) `i·(j▷k) = (i·j)▷(i·k)`
    SkewHomomorphism,
}

impl Constraint {
    pub fn number(self) -> u8 {
        match self {
            Constraint::RowBijective => 1,
            Constraint::DiagonalBijective => 2,
            Constraint::CycleSetLaw | Constraint::SelfDistributive | Constraint::SkewCycleLaw => 3,
            Constraint::SkewHomomorphism => 4,
        }
    }
}

/// A failed constraint with a witness. `witness` is 1-based; for the row
/// and diagonal constraints it holds `(row, col, col')` resp. `(i, i', 0)`
/// naming the clashing positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub constraint: Constraint,
    pub witness: [usize; 3],
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [i, j, k] = self.witness;
        write!(
            f,
            "constraint ({}) {:?} violated at ({i},{j},{k})",
            self.constraint.number(),
            self.constraint
        )
    }
}

impl std::error::Error for Violation {}

fn violation(constraint: Constraint, i: usize, j: usize, k: usize) -> Violation {
    Violation {
        constraint,
        witness: [i + 1, j + 1, k + 1],
    }
}

/// A square table over `{0..n}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matrix {
    n: usize,
    cells: Vec<u8>,
}

impl Matrix {
    pub fn from_cells(n: usize, cells: Vec<u8>) -> Result<Self, TableError> {
        if n > MAX_DEGREE {
            return Err(TableError::Malformed(format!("size {n} too large")));
        }
        if cells.len() != n * n {
            return Err(TableError::Malformed(format!(
                "expected {} entries, found {}",
                n * n,
                cells.len()
            )));
        }
        if let Some(pos) = cells.iter().position(|&v| v as usize >= n) {
            return Err(TableError::Malformed(format!(
                "entry at ({},{}) outside 1..{n}",
                pos / n + 1,
                pos % n + 1
            )));
        }
        Ok(Matrix { n, cells })
    }

    /// Builds a table from 1-based rows.
    pub fn from_rows(rows: &[Vec<usize>]) -> Result<Self, TableError> {
        let n = rows.len();
        let mut cells = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(TableError::Malformed(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if v == 0 || v > n {
                    return Err(TableError::Malformed(format!(
                        "entry at ({},{}) is {v}, outside 1..{n}",
                        i + 1,
                        j + 1
                    )));
                }
                cells.push((v - 1) as u8);
            }
        }
        Self::from_cells(n, cells)
    }

    pub(crate) fn from_cells_unchecked(n: usize, cells: Vec<u8>) -> Self {
        debug_assert_eq!(cells.len(), n * n);
        Matrix { n, cells }
    }

    /// `m[i][j] = j`: every row is the identity.
    pub fn trivial(n: usize) -> Self {
        let cells = (0..n).flat_map(|_| 0..n as u8).collect();
        Matrix { n, cells }
    }

    /// The table whose rows are the given permutations.
    pub fn from_row_permutations(rows: &[Permutation]) -> Result<Self, TableError> {
        let n = rows.len();
        if rows.iter().any(|p| p.len() != n) {
            return Err(TableError::Malformed("row permutation of wrong degree".into()));
        }
        let cells = rows.iter().flat_map(|p| p.images().iter().copied()).collect();
        Self::from_cells(n, cells)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> usize {
        self.cells[i * self.n + j] as usize
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.cells[i * self.n..(i + 1) * self.n]
    }

    pub fn rows_one_based(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|&v| v as usize + 1).collect())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<u8> {
        (0..self.n).map(|i| self.cells[i * self.n + i]).collect()
    }

    /// The diagonal map `i ↦ m[i][i]`, if it is a bijection.
    pub fn diagonal_permutation(&self) -> Option<Permutation> {
        Permutation::from_images(self.diagonal()).ok()
    }

    /// Row `i` as a permutation, if it is one.
    pub fn row_permutation(&self, i: usize) -> Option<Permutation> {
        Permutation::from_images(self.row(i).to_vec()).ok()
    }

    pub fn is_trivial(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.get(i, j) == j))
    }

    fn check_rows(&self) -> Result<(), Violation> {
        let n = self.n;
        for i in 0..n {
            let mut seen = vec![usize::MAX; n];
            for j in 0..n {
                let v = self.get(i, j);
                if seen[v] != usize::MAX {
                    return Err(violation(Constraint::RowBijective, i, seen[v], j));
                }
                seen[v] = j;
            }
        }
        Ok(())
    }

    fn check_diagonal(&self) -> Result<(), Violation> {
        let n = self.n;
        let mut seen = vec![usize::MAX; n];
        for i in 0..n {
            let v = self.get(i, i);
            if seen[v] != usize::MAX {
                return Err(Violation {
                    constraint: Constraint::DiagonalBijective,
                    witness: [seen[v] + 1, i + 1, 0],
                });
            }
            seen[v] = i;
        }
        Ok(())
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix{:?}", self.rows_one_based())
    }
}

impl fmt::Display for Matrix {
    /// The record layout used by the dataset files: one line per row.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            for j in 0..self.n {
                if j > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{}", self.get(i, j) + 1)?;
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}

/// Checks constraints (1)–(3) of a cycle set table.
pub fn check_cycle_set(m: &Matrix) -> Result<(), Violation> {
    m.check_rows()?;
    m.check_diagonal()?;
    let n = m.n;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (a, c) = (m.get(i, j), m.get(j, i));
            for k in 0..n {
                if m.get(a, m.get(i, k)) != m.get(c, m.get(j, k)) {
                    return Err(violation(Constraint::CycleSetLaw, i, j, k));
                }
            }
        }
    }
    Ok(())
}

/// Checks constraints (1)–(3) of a rack table.
pub fn check_rack(r: &Matrix) -> Result<(), Violation> {
    r.check_rows()?;
    r.check_diagonal()?;
    let n = r.n;
    for i in 0..n {
        for j in 0..n {
            let a = r.get(i, j);
            for k in 0..n {
                if r.get(i, r.get(j, k)) != r.get(a, r.get(i, k)) {
                    return Err(violation(Constraint::SelfDistributive, i, j, k));
                }
            }
        }
    }
    Ok(())
}

/// Checks the skew cycle set constraints for `m` over the rack `r`.
///
/// The rack is validated first; a bad rack is reported without looking at
/// `m`. Constraint (3) is the identity `(x·(x▷y))·(x·z) = (y·x)·(y·z)`.
pub fn check_skew_cycle_set(m: &Matrix, r: &Matrix) -> Result<(), Violation> {
    check_rack(r)?;
    if m.n != r.n {
        return Err(Violation {
            constraint: Constraint::RowBijective,
            witness: [m.n, r.n, 0],
        });
    }
    m.check_rows()?;
    m.check_diagonal()?;
    let n = m.n;
    for i in 0..n {
        for j in 0..n {
            let left = m.get(i, r.get(i, j));
            let right = m.get(j, i);
            for k in 0..n {
                if m.get(left, m.get(i, k)) != m.get(right, m.get(j, k)) {
                    return Err(violation(Constraint::SkewCycleLaw, i, j, k));
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let a = m.get(i, j);
            for k in 0..n {
                if m.get(i, r.get(j, k)) != r.get(a, m.get(i, k)) {
                    return Err(violation(Constraint::SkewHomomorphism, i, j, k));
                }
            }
        }
    }
    Ok(())
}

/// A validated cycle set: `m[i][j] = i·j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycleSetTable(Matrix);

impl CycleSetTable {
    pub fn new(m: Matrix) -> Result<Self, Violation> {
        check_cycle_set(&m)?;
        Ok(CycleSetTable(m))
    }

    pub fn from_rows(rows: &[Vec<usize>]) -> Result<Self, TableError> {
        Self::new(Matrix::from_rows(rows)?).map_err(TableError::Axiom)
    }

    /// Skips validation entirely, for data already known to be valid.
    pub fn from_trusted(m: Matrix) -> Self {
        CycleSetTable(m)
    }

    pub(crate) fn new_unchecked(m: Matrix) -> Self {
        debug_assert!(check_cycle_set(&m).is_ok());
        CycleSetTable(m)
    }

    /// The cycle set with every `φ_i` the identity.
    pub fn trivial(n: usize) -> Self {
        CycleSetTable(Matrix::trivial(n))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    /// `φ_i : y ↦ i·y`.
    pub fn phi(&self, i: usize) -> Permutation {
        Permutation::from_images_unchecked(self.0.row(i).to_vec())
    }

    /// The diagonal map `T : x ↦ x·x`.
    pub fn t_map(&self) -> Permutation {
        Permutation::from_images_unchecked(self.0.diagonal())
    }
}

/// A validated rack: `r[i][j] = i▷j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RackTable(Matrix);

impl RackTable {
    pub fn new(r: Matrix) -> Result<Self, Violation> {
        check_rack(&r)?;
        Ok(RackTable(r))
    }

    pub fn from_rows(rows: &[Vec<usize>]) -> Result<Self, TableError> {
        Self::new(Matrix::from_rows(rows)?).map_err(TableError::Axiom)
    }

    /// Skips validation entirely, for data already known to be valid.
    pub fn from_trusted(r: Matrix) -> Self {
        RackTable(r)
    }

    pub(crate) fn new_unchecked(r: Matrix) -> Self {
        debug_assert!(check_rack(&r).is_ok());
        RackTable(r)
    }

    /// `i▷j = j`.
    pub fn trivial(n: usize) -> Self {
        RackTable(Matrix::trivial(n))
    }

    /// The dihedral quandle on `Z/n`: `i▷j = 2i − j`.
    pub fn dihedral(n: usize) -> Self {
        let cells = (0..n)
            .flat_map(|i| (0..n).map(move |j| ((2 * i + n - j) % n.max(1)) as u8))
            .collect();
        RackTable(Matrix::from_cells_unchecked(n, cells))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn is_trivial(&self) -> bool {
        self.0.is_trivial()
    }
}

pub fn is_quandle(r: &RackTable) -> bool {
    (0..r.n()).all(|i| r.0.get(i, i) == i)
}

/// The pair `(·, ▷)` of a skew cycle set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SkewCycleSet {
    r: RackTable,
    m: Matrix,
}

impl SkewCycleSet {
    pub fn new(m: Matrix, r: Matrix) -> Result<Self, Violation> {
        check_skew_cycle_set(&m, &r)?;
        Ok(SkewCycleSet {
            r: RackTable(r),
            m,
        })
    }

    /// Skips validation entirely, for data already known to be valid.
    pub fn from_trusted(m: Matrix, r: Matrix) -> Self {
        SkewCycleSet { r: RackTable(r), m }
    }

    pub(crate) fn new_unchecked(m: Matrix, r: Matrix) -> Self {
        debug_assert!(check_skew_cycle_set(&m, &r).is_ok());
        SkewCycleSet {
            r: RackTable(r),
            m,
        }
    }

    /// The `·` table.
    pub fn m(&self) -> &Matrix {
        &self.m
    }

    pub fn rack(&self) -> &RackTable {
        &self.r
    }

    pub fn n(&self) -> usize {
        self.m.n
    }

    /// True iff the rack is trivial, i.e. the pair is a classical cycle set.
    pub fn is_classical(&self) -> bool {
        self.r.is_trivial()
    }
}
