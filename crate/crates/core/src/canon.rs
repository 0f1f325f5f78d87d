//! The relabeling action `(M^g)[i][j] = g⁻¹(M[g(i)][g(j)])`, lex-leader
//! tests, canonical forms and isomorphism.
//!
//! The action is a right action: `(M^g)^h = M^(g∘h)` where `(g∘h)(x) = g(h(x))`.
//! Lexicographic order always compares flattened row-major sequences.

use std::cmp::Ordering;

use thiserror::Error;

use crate::perm::{Centralizer, CycleType, Permutation};
use crate::tables::{Matrix, RackTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CanonError {
    #[error("size mismatch: table of size {table} and permutation of degree {perm}")]
    SizeMismatch { table: usize, perm: usize },
    #[error("diagonal of the table is not a permutation")]
    DiagonalNotPermutation,
}

/// Isomorphism-class key: two tables (or tuples of tables acted on
/// simultaneously) are isomorphic iff their keys are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabeledOrbitKey {
    /// Cycle type of the diagonal that drove the canonical relabeling.
    pub diag_class: CycleType,
    /// The lex-minimal relabeled tables, in input order.
    pub canon: Vec<Matrix>,
}

impl LabeledOrbitKey {
    pub fn matrix(&self) -> &Matrix {
        &self.canon[0]
    }
}

fn check_sizes(m: &Matrix, g: &Permutation) -> Result<(), CanonError> {
    if m.n() != g.len() {
        return Err(CanonError::SizeMismatch {
            table: m.n(),
            perm: g.len(),
        });
    }
    Ok(())
}

/// `M^g`.
pub fn act(m: &Matrix, g: &Permutation) -> Result<Matrix, CanonError> {
    check_sizes(m, g)?;
    Ok(act_raw(m, g.images(), g.inverse().images()))
}

pub(crate) fn act_raw(m: &Matrix, g: &[u8], ginv: &[u8]) -> Matrix {
    let n = m.n();
    let mut cells = Vec::with_capacity(n * n);
    for i in 0..n {
        let gi = g[i] as usize;
        for j in 0..n {
            cells.push(ginv[m.get(gi, g[j] as usize)]);
        }
    }
    Matrix::from_cells_unchecked(n, cells)
}

/// Compares `M^g` with `target` without materializing `M^g`.
#[inline]
pub(crate) fn cmp_image(m: &Matrix, g: &[u8], ginv: &[u8], target: &[u8]) -> Ordering {
    let n = m.n();
    let cells = m.cells();
    for i in 0..n {
        let row = g[i] as usize * n;
        for j in 0..n {
            let v = ginv[cells[row + g[j] as usize] as usize];
            let t = target[i * n + j];
            if v != t {
                return v.cmp(&t);
            }
        }
    }
    Ordering::Equal
}

/// Same as [`cmp_image`] over a tuple of tables, compared as their
/// concatenation.
fn cmp_image_tuple(ms: &[Matrix], g: &[u8], ginv: &[u8], target: &[Matrix]) -> Ordering {
    for (m, t) in ms.iter().zip(target) {
        match cmp_image(m, g, ginv, t.cells()) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// True iff `m ≤lex m^g` for every `g` in `symmetries`.
pub fn is_lex_min(m: &Matrix, symmetries: &[Permutation]) -> bool {
    symmetries.iter().all(|g| {
        g.len() == m.n() && cmp_image(m, g.images(), g.inverse().images(), m.cells()) != Ordering::Less
    })
}

/// A `γ` with `γ⁻¹ T γ = T₁`, where `T₁` is the class representative of
/// `T`'s cycle type: the `t`-th point of each cycle of `T₁` goes to the
/// `t`-th point of a cycle of `T` of the same length.
pub fn conjugator_to_representative(t: &Permutation) -> Permutation {
    let n = t.len();
    let mut cycles = t.cycles();
    cycles.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    let mut gamma = vec![0u8; n];
    let mut start = 0;
    for c in cycles {
        for (offset, &x) in c.iter().enumerate() {
            gamma[start + offset] = x as u8;
        }
        start += c.len();
    }
    Permutation::from_images_unchecked(gamma)
}

/// Canonical form of a single table whose diagonal is a permutation.
pub fn canonical_form(m: &Matrix) -> Result<LabeledOrbitKey, CanonError> {
    canonical_form_tuple(std::slice::from_ref(m), 0)
}

/// Canonical form of tables acted on simultaneously. The diagonal of
/// `tables[driver]` is conjugated to its class representative `T₁`; the
/// result is the lex-least image over the coset `γ·C(T₁)`, which covers
/// every relabeling that sends that diagonal to `T₁`.
pub fn canonical_form_tuple(tables: &[Matrix], driver: usize) -> Result<LabeledOrbitKey, CanonError> {
    let n = tables[0].n();
    if let Some(bad) = tables.iter().find(|m| m.n() != n) {
        return Err(CanonError::SizeMismatch {
            table: bad.n(),
            perm: n,
        });
    }
    let t = tables[driver]
        .diagonal_permutation()
        .ok_or(CanonError::DiagonalNotPermutation)?;
    let gamma = conjugator_to_representative(&t);
    let ginv = gamma.inverse();
    let base: Vec<Matrix> = tables
        .iter()
        .map(|m| act_raw(m, gamma.images(), ginv.images()))
        .collect();
    let t1 = t.cycle_type().representative();
    let group = Centralizer::new(&t1);
    let mut best = base.clone();
    let mut iter = group.iter();
    let mut g = vec![0u8; n];
    let mut gi = vec![0u8; n];
    while iter.next_into(&mut g) {
        for (x, &y) in g.iter().enumerate() {
            gi[y as usize] = x as u8;
        }
        if cmp_image_tuple(&base, &g, &gi, &best) == Ordering::Less {
            best = base.iter().map(|m| act_raw(m, &g, &gi)).collect();
        }
    }
    Ok(LabeledOrbitKey {
        diag_class: t.cycle_type(),
        canon: best,
    })
}

/// Canonical key of a skew pair, acting on `(R, M)` at once. The diagonal
/// with the smaller centralizer drives the relabeling; the choice depends
/// only on cycle types, so it is relabeling-invariant.
pub fn canonical_form_skew(r: &Matrix, m: &Matrix) -> Result<LabeledOrbitKey, CanonError> {
    let order = |x: &Matrix| {
        x.diagonal_permutation()
            .map(|p| p.cycle_type().centralizer_order())
            .ok_or(CanonError::DiagonalNotPermutation)
    };
    let driver = if order(r)? <= order(m)? { 0 } else { 1 };
    canonical_form_tuple(&[r.clone(), m.clone()], driver)
}

pub fn are_isomorphic(a: &Matrix, b: &Matrix) -> Result<bool, CanonError> {
    if a.n() != b.n() {
        return Err(CanonError::SizeMismatch {
            table: a.n(),
            perm: b.n(),
        });
    }
    Ok(canonical_form(a)? == canonical_form(b)?)
}

/// Every `g` with `R^g = R`, found by extending partial maps point by
/// point and checking `g(i▷j) = g(i)▷g(j)` as soon as all three points are
/// mapped. Sorted, identity included.
pub fn rack_automorphisms(r: &RackTable) -> Vec<Permutation> {
    let m = r.matrix();
    let n = m.n();
    let mut img = vec![u8::MAX; n];
    let mut used = vec![false; n];
    let mut out = Vec::new();
    extend_automorphism(m, 0, &mut img, &mut used, &mut out);
    out.sort();
    out
}

fn extend_automorphism(m: &Matrix, k: usize, img: &mut [u8], used: &mut [bool], out: &mut Vec<Permutation>) {
    let n = m.n();
    if k == n {
        out.push(Permutation::from_images_unchecked(img.to_vec()));
        return;
    }
    for v in 0..n {
        if used[v] {
            continue;
        }
        img[k] = v as u8;
        used[v] = true;
        if consistent_with(m, k, img) {
            extend_automorphism(m, k + 1, img, used, out);
        }
        used[v] = false;
        img[k] = u8::MAX;
    }
}

/// Checks every product `i▷j = p` with `max(i, j, p) = k`; all smaller
/// triples were checked at earlier depths.
fn consistent_with(m: &Matrix, k: usize, img: &[u8]) -> bool {
    for i in 0..=k {
        for j in 0..=k {
            let prod = m.get(i, j);
            if prod > k || (i != k && j != k && prod != k) {
                continue;
            }
            if img[prod] as usize != m.get(img[i] as usize, img[j] as usize) {
                return false;
            }
        }
    }
    true
}
