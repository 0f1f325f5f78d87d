//! Naive reference enumerators: every table built from rows that are
//! permutations, checked against the axioms written out directly, and
//! deduplicated by minimizing over all `n!` relabelings. Nothing here uses
//! the library's checkers, propagation or canonical forms.

#![allow(dead_code)]

use std::collections::BTreeSet;

pub type Table = Vec<Vec<usize>>;

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    heap(n, &mut cur, &mut out);
    out.sort();
    out
}

fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(a.clone());
        return;
    }
    for i in 0..k {
        heap(k - 1, a, out);
        if k.is_multiple_of(2) {
            a.swap(i, k - 1);
        } else {
            a.swap(0, k - 1);
        }
    }
}

fn diagonal_is_bijective(m: &Table) -> bool {
    let n = m.len();
    let mut seen = vec![false; n];
    for (i, row) in m.iter().enumerate() {
        if seen[row[i]] {
            return false;
        }
        seen[row[i]] = true;
    }
    true
}

pub fn is_cycle_set(m: &Table) -> bool {
    let n = m.len();
    diagonal_is_bijective(m)
        && (0..n).all(|i| {
            (0..n).all(|j| (0..n).all(|k| m[m[i][j]][m[i][k]] == m[m[j][i]][m[j][k]]))
        })
}

pub fn is_rack(r: &Table) -> bool {
    let n = r.len();
    diagonal_is_bijective(r)
        && (0..n).all(|i| {
            (0..n).all(|j| (0..n).all(|k| r[i][r[j][k]] == r[r[i][j]][r[i][k]]))
        })
}

pub fn is_skew(m: &Table, r: &Table) -> bool {
    let n = m.len();
    diagonal_is_bijective(m)
        && (0..n).all(|i| {
            (0..n).all(|j| {
                (0..n).all(|k| {
                    m[m[i][r[i][j]]][m[i][k]] == m[m[j][i]][m[j][k]] && m[i][r[j][k]] == r[m[i][j]][m[i][k]]
                })
            })
        })
}

/// `g⁻¹(M[g(i)][g(j)])`, written from the definition.
pub fn relabel(m: &Table, g: &[usize]) -> Table {
    let n = m.len();
    let mut ginv = vec![0; n];
    for (x, &y) in g.iter().enumerate() {
        ginv[y] = x;
    }
    (0..n).map(|i| (0..n).map(|j| ginv[m[g[i]][g[j]]]).collect()).collect()
}

pub fn brute_key(m: &Table, perms: &[Vec<usize>]) -> Table {
    perms.iter().map(|g| relabel(m, g)).min().unwrap()
}

pub fn brute_pair_key(r: &Table, m: &Table, perms: &[Vec<usize>]) -> (Table, Table) {
    perms.iter().map(|g| (relabel(r, g), relabel(m, g))).min().unwrap()
}

/// Every table whose rows are permutations, streamed to `f`.
fn for_each_row_table(n: usize, f: &mut dyn FnMut(&Table)) {
    let ps = permutations(n);
    let mut t: Table = vec![Vec::new(); n];
    fn go(i: usize, ps: &[Vec<usize>], t: &mut Table, f: &mut dyn FnMut(&Table)) {
        if i == t.len() {
            f(t);
            return;
        }
        for p in ps {
            t[i] = p.clone();
            go(i + 1, ps, t, f);
        }
    }
    go(0, &ps, &mut t, f);
}

pub fn cycle_set_classes(n: usize) -> BTreeSet<Table> {
    let perms = permutations(n);
    let mut out = BTreeSet::new();
    for_each_row_table(n, &mut |m| {
        if is_cycle_set(m) {
            out.insert(brute_key(m, &perms));
        }
    });
    out
}

pub fn all_racks(n: usize) -> Vec<Table> {
    let mut out = Vec::new();
    for_each_row_table(n, &mut |r| {
        if is_rack(r) {
            out.push(r.clone());
        }
    });
    out
}

pub fn rack_classes(n: usize) -> BTreeSet<Table> {
    let perms = permutations(n);
    all_racks(n).iter().map(|r| brute_key(r, &perms)).collect()
}

pub fn is_trivial(r: &Table) -> bool {
    r.iter().all(|row| row.iter().enumerate().all(|(j, &v)| j == v))
}

pub fn is_quandle(r: &Table) -> bool {
    r.iter().enumerate().all(|(i, row)| row[i] == i)
}

/// Classes of skew pairs over non-trivial racks (optionally quandles only).
pub fn non_involutive_classes(n: usize, quandles_only: bool) -> BTreeSet<(Table, Table)> {
    let perms = permutations(n);
    let mut out = BTreeSet::new();
    // one rack per class suffices: every pair is isomorphic to one over a
    // class representative
    for r in rack_classes(n) {
        if is_trivial(&r) || (quandles_only && !is_quandle(&r)) {
            continue;
        }
        for_each_row_table(n, &mut |m| {
            if is_skew(m, &r) {
                out.insert(brute_pair_key(&r, m, &perms));
            }
        });
    }
    out
}

pub fn to_table(cells: &[u8], n: usize) -> Table {
    cells.chunks(n).map(|row| row.iter().map(|&v| v as usize).collect()).collect()
}
