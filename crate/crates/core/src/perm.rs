//! Permutations of `{1..n}`, cycle types, centralizers and support filtering.
//!
//! Internally every permutation stores 0-based images in a `Vec<u8>`; all
//! text interfaces (cycle notation, `one_based`) speak 1-based points.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Largest supported degree. Points are stored as `u8`.
pub const MAX_DEGREE: usize = 255;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PermError {
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("images do not form a bijection of {{1..{0}}}")]
    NotBijection(usize),
    #[error("degree {0} exceeds the supported maximum")]
    TooLarge(usize),
    #[error("cannot parse cycle notation: {0}")]
    Parse(String),
}

/// A bijection of `{0..n}` (printed as `{1..n}`).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<u8>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_DEGREE);
        Permutation {
            images: (0..n as u8).collect(),
        }
    }

    /// Builds a permutation from 0-based images.
    pub fn from_images(images: Vec<u8>) -> Result<Self, PermError> {
        let n = images.len();
        if n > MAX_DEGREE {
            return Err(PermError::TooLarge(n));
        }
        let mut seen = vec![false; n];
        for &x in &images {
            let x = x as usize;
            if x >= n || seen[x] {
                return Err(PermError::NotBijection(n));
            }
            seen[x] = true;
        }
        Ok(Permutation { images })
    }

    /// Builds a permutation from 1-based images, `images[i-1] = p(i)`.
    pub fn from_one_based(images: &[usize]) -> Result<Self, PermError> {
        let n = images.len();
        let raw = images
            .iter()
            .map(|&x| {
                if x == 0 || x > n {
                    Err(PermError::NotBijection(n))
                } else {
                    Ok((x - 1) as u8)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_images(raw)
    }

    /// Skips validation; callers guarantee `images` is a bijection.
    pub(crate) fn from_images_unchecked(images: Vec<u8>) -> Self {
        debug_assert!(Self::from_images(images.clone()).is_ok());
        Permutation { images }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.images[x] as usize
    }

    pub fn images(&self) -> &[u8] {
        &self.images
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.images.iter().map(|&x| x as usize + 1).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| i == x as usize)
    }

    /// Number of moved points.
    pub fn support_len(&self) -> usize {
        self.images
            .iter()
            .enumerate()
            .filter(|&(i, &x)| i != x as usize)
            .count()
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u8; self.len()];
        for (i, &x) in self.images.iter().enumerate() {
            inv[x as usize] = i as u8;
        }
        Permutation { images: inv }
    }

    /// `self ∘ other`, i.e. `x ↦ self(other(x))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation, PermError> {
        if self.len() != other.len() {
            return Err(PermError::SizeMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(Permutation {
            images: other.images.iter().map(|&x| self.images[x as usize]).collect(),
        })
    }

    pub fn commutes_with(&self, other: &Permutation) -> bool {
        self.len() == other.len()
            && (0..self.len()).all(|x| self.apply(other.apply(x)) == other.apply(self.apply(x)))
    }

    /// All cycles, including fixed points, each starting at its least
    /// element, ordered by that element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                cycle.push(x);
                x = self.apply(x);
            }
            out.push(cycle);
        }
        out
    }

    pub fn cycle_type(&self) -> CycleType {
        CycleType::new(self.cycles().iter().map(Vec::len).collect())
    }

    /// Parses cycle notation over `{1..n}`: `"id"`, `"()"`, `"(1 2 7 8)(3 4 5 6)"`,
    /// `"(1,2)(3,4)"`, or the compact digit form `"(16345278)"` where each
    /// character is one base-36 point (so `a` is 10).
    pub fn parse_cycles(text: &str, n: usize) -> Result<Permutation, PermError> {
        if n > MAX_DEGREE {
            return Err(PermError::TooLarge(n));
        }
        let text = text.trim();
        let mut images: Vec<u8> = (0..n as u8).collect();
        if text.is_empty() || text == "id" || text == "()" {
            return Ok(Permutation { images });
        }
        let mut seen = vec![false; n];
        let mut rest = text;
        while !rest.is_empty() {
            rest = rest.trim_start();
            if rest.is_empty() {
                break;
            }
            let body_start = rest
                .strip_prefix('(')
                .ok_or_else(|| PermError::Parse(format!("expected '(' in {text:?}")))?;
            let close = body_start
                .find(')')
                .ok_or_else(|| PermError::Parse(format!("unbalanced parentheses in {text:?}")))?;
            let body = body_start[..close].trim();
            rest = &body_start[close + 1..];
            let points = parse_cycle_body(body)?;
            for &p in &points {
                if p == 0 || p > n {
                    return Err(PermError::Parse(format!("point {p} outside 1..{n}")));
                }
                if seen[p - 1] {
                    return Err(PermError::Parse(format!("point {p} repeated")));
                }
                seen[p - 1] = true;
            }
            for (idx, &p) in points.iter().enumerate() {
                let next = points[(idx + 1) % points.len()];
                images[p - 1] = (next - 1) as u8;
            }
        }
        Ok(Permutation { images })
    }
}

fn parse_cycle_body(body: &str) -> Result<Vec<usize>, PermError> {
    if body.is_empty() {
        return Ok(Vec::new());
    }
    let separated = body.contains(|c: char| c.is_whitespace() || c == ',');
    if separated {
        body.split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| PermError::Parse(format!("bad point {s:?}")))
            })
            .collect()
    } else {
        body.chars()
            .map(|c| {
                c.to_digit(36)
                    .map(|d| d as usize)
                    .ok_or_else(|| PermError::Parse(format!("bad point {c:?}")))
            })
            .collect()
    }
}

impl fmt::Display for Permutation {
    /// Cycle notation with 1-based points; `id` for the identity.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut any = false;
        for cycle in self.cycles().into_iter().filter(|c| c.len() > 1) {
            any = true;
            write!(f, "(")?;
            for (i, x) in cycle.iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", x + 1)?;
            }
            write!(f, ")")?;
        }
        if !any {
            write!(f, "id")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation[{}; {}]", self.len(), self)
    }
}

pub fn compose(a: &Permutation, b: &Permutation) -> Result<Permutation, PermError> {
    a.compose(b)
}

pub fn inverse(a: &Permutation) -> Permutation {
    a.inverse()
}

/// A partition of `n` given as cycle lengths, sorted descending.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CycleType(Vec<usize>);

impl CycleType {
    pub fn new(mut parts: Vec<usize>) -> Self {
        parts.retain(|&p| p > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        CycleType(parts)
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    /// `(length, multiplicity)` pairs, longest first.
    pub fn multiplicities(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &p in &self.0 {
            match out.last_mut() {
                Some((len, m)) if *len == p => *m += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }

    /// `∏ i^{m_i} m_i!`, the order of the centralizer of any permutation of
    /// this type.
    pub fn centralizer_order(&self) -> u128 {
        self.multiplicities()
            .into_iter()
            .map(|(len, m)| (len as u128).pow(m as u32) * factorial(m))
            .product()
    }

    /// Consecutive-integer cycles, longest first: `(3,2)` gives `(1 2 3)(4 5)`.
    pub fn representative(&self) -> Permutation {
        let n = self.degree();
        let mut images: Vec<u8> = (0..n as u8).collect();
        let mut start = 0;
        for &len in &self.0 {
            for t in 0..len {
                images[start + t] = (start + (t + 1) % len) as u8;
            }
            start += len;
        }
        Permutation { images }
    }
}

/// Orders partitions descending-lexicographically, so `(n)` comes first and
/// `(1,…,1)` last.
impl Ord for CycleType {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.cmp(&self.0)
    }
}

impl PartialOrd for CycleType {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn factorial(m: usize) -> u128 {
    (1..=m as u128).product()
}

/// All partitions of `n`, `(n)` first.
pub fn partitions(n: usize) -> Vec<CycleType> {
    fn go(remaining: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<CycleType>) {
        if remaining == 0 {
            out.push(CycleType(prefix.clone()));
            return;
        }
        for part in (1..=remaining.min(max)).rev() {
            prefix.push(part);
            go(remaining - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

/// One representative per conjugacy class of `Sym_n`, in [`partitions`] order.
pub fn class_representatives(n: usize) -> Vec<Permutation> {
    partitions(n).iter().map(CycleType::representative).collect()
}

/// Cycles of one common length inside a centralizer description.
#[derive(Clone, Debug)]
struct LengthBlock {
    len: usize,
    cycles: Vec<Vec<u8>>,
}

/// The centralizer `C(T)` of a permutation in `Sym_n`.
///
/// Elements are never materialized up front: an element is determined by a
/// rearrangement of the equal-length cycles of `T` and a rotation offset per
/// cycle, and [`Centralizer::iter`] walks those choices as an odometer.
#[derive(Clone, Debug)]
pub struct Centralizer {
    t: Permutation,
    blocks: Vec<LengthBlock>,
}

impl Centralizer {
    pub fn new(t: &Permutation) -> Self {
        let mut cycles = t.cycles();
        cycles.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        let mut blocks: Vec<LengthBlock> = Vec::new();
        for c in cycles {
            let c: Vec<u8> = c.into_iter().map(|x| x as u8).collect();
            match blocks.last_mut() {
                Some(b) if b.len == c.len() => b.cycles.push(c),
                _ => blocks.push(LengthBlock {
                    len: c.len(),
                    cycles: vec![c],
                }),
            }
        }
        Centralizer {
            t: t.clone(),
            blocks,
        }
    }

    /// The full symmetric group, as the centralizer of the identity.
    pub fn symmetric(n: usize) -> Self {
        Self::new(&Permutation::identity(n))
    }

    pub fn degree(&self) -> usize {
        self.t.len()
    }

    pub fn element(&self) -> &Permutation {
        &self.t
    }

    pub fn order(&self) -> u128 {
        self.t.cycle_type().centralizer_order()
    }

    pub fn contains(&self, g: &Permutation) -> bool {
        g.commutes_with(&self.t)
    }

    /// Per length block: one rotation of the first cycle, and when there are
    /// several cycles a transposition and a full cycle of the blocks.
    pub fn generators(&self) -> Vec<Permutation> {
        let n = self.degree();
        let mut gens = Vec::new();
        for block in &self.blocks {
            let m = block.cycles.len();
            if block.len > 1 {
                let mut img: Vec<u8> = (0..n as u8).collect();
                let c = &block.cycles[0];
                for t in 0..block.len {
                    img[c[t] as usize] = c[(t + 1) % block.len];
                }
                gens.push(Permutation { images: img });
            }
            if m >= 2 {
                gens.push(self.block_permutation(block, |i| if i < 2 { 1 - i } else { i }));
            }
            if m >= 3 {
                gens.push(self.block_permutation(block, |i| (i + 1) % m));
            }
        }
        gens
    }

    fn block_permutation(&self, block: &LengthBlock, sigma: impl Fn(usize) -> usize) -> Permutation {
        let mut img: Vec<u8> = (0..self.degree() as u8).collect();
        for (i, c) in block.cycles.iter().enumerate() {
            let target = &block.cycles[sigma(i)];
            for t in 0..block.len {
                img[c[t] as usize] = target[t];
            }
        }
        Permutation { images: img }
    }

    pub fn iter(&self) -> CentralizerIter<'_> {
        CentralizerIter {
            group: self,
            arrangement: self
                .blocks
                .iter()
                .map(|b| (0..b.cycles.len()).collect())
                .collect(),
            shifts: self.blocks.iter().map(|b| vec![0; b.cycles.len()]).collect(),
            done: false,
        }
    }
}

/// Lazy walk over every element of a [`Centralizer`], identity first.
pub struct CentralizerIter<'a> {
    group: &'a Centralizer,
    arrangement: Vec<Vec<usize>>,
    shifts: Vec<Vec<usize>>,
    done: bool,
}

impl CentralizerIter<'_> {
    /// Writes the next element into `out` (length `n`) without allocating.
    pub fn next_into(&mut self, out: &mut [u8]) -> bool {
        if self.done {
            return false;
        }
        for (b, block) in self.group.blocks.iter().enumerate() {
            let arr = &self.arrangement[b];
            let sh = &self.shifts[b];
            for (i, c) in block.cycles.iter().enumerate() {
                let target = &block.cycles[arr[i]];
                for t in 0..block.len {
                    out[c[t] as usize] = target[(t + sh[i]) % block.len];
                }
            }
        }
        self.advance();
        true
    }

    fn advance(&mut self) {
        for (b, block) in self.group.blocks.iter().enumerate() {
            for s in self.shifts[b].iter_mut() {
                *s += 1;
                if *s < block.len {
                    return;
                }
                *s = 0;
            }
            if next_permutation(&mut self.arrangement[b]) {
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for CentralizerIter<'_> {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let mut buf = vec![0u8; self.group.degree()];
        self.next_into(&mut buf).then_some(Permutation { images: buf })
    }
}

/// Advances to the next lexicographic arrangement; on the last one, resets
/// to sorted order and returns false.
fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        a.reverse();
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Default `k` for [`support_filter`].
pub const DEFAULT_SUPPORT: usize = 3;

/// Elements of `group` moving at most `k` points, together with a generating
/// set of `group`; identity excluded, duplicates removed, sorted.
pub fn support_filter(group: &Centralizer, k: usize) -> Vec<Permutation> {
    let n = group.degree();
    let mut out: BTreeSet<Permutation> = group.generators().into_iter().collect();

    let candidates: u128 = (2..=k.min(n))
        .map(|s| binomial(n, s) * derangements(s))
        .sum();
    if candidates >= group.order() {
        out.extend(group.iter().filter(|g| g.support_len() <= k));
    } else {
        for s in 2..=k.min(n) {
            for_each_subset(n, s, &mut |points| {
                for_each_derangement(points, &mut |images| {
                    let mut img: Vec<u8> = (0..n as u8).collect();
                    for (&p, &q) in points.iter().zip(images) {
                        img[p] = q as u8;
                    }
                    let g = Permutation { images: img };
                    if group.contains(&g) {
                        out.insert(g);
                    }
                });
            });
        }
    }
    out.into_iter().filter(|g| !g.is_identity()).collect()
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k as u128).fold(1, |acc, i| acc * (n as u128 - i) / (i + 1))
}

fn derangements(s: usize) -> u128 {
    let (mut a, mut b) = (0u128, 1u128);
    for i in 1..=s as u128 {
        let c = (i - 1) * (a + b);
        a = b;
        b = c;
    }
    b
}

fn for_each_subset(n: usize, s: usize, f: &mut dyn FnMut(&[usize])) {
    fn go(start: usize, n: usize, s: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == s {
            f(cur);
            return;
        }
        for x in start..n {
            cur.push(x);
            go(x + 1, n, s, cur, f);
            cur.pop();
        }
    }
    go(0, n, s, &mut Vec::with_capacity(s), f);
}

fn for_each_derangement(points: &[usize], f: &mut dyn FnMut(&[usize])) {
    fn go(
        idx: usize,
        points: &[usize],
        used: &mut Vec<bool>,
        cur: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]),
    ) {
        if idx == points.len() {
            f(cur);
            return;
        }
        for (j, &q) in points.iter().enumerate() {
            if used[j] || j == idx {
                continue;
            }
            used[j] = true;
            cur.push(q);
            go(idx + 1, points, used, cur, f);
            cur.pop();
            used[j] = false;
        }
    }
    go(0, points, &mut vec![false; points.len()], &mut Vec::new(), f);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str, n: usize) -> Permutation {
        Permutation::parse_cycles(s, n).unwrap()
    }

    #[test]
    fn compose_examples() {
        assert!(p("(1 2)", 3).compose(&p("(1 2)", 3)).unwrap().is_identity());
        assert_eq!(p("(1 2 3)", 3).compose(&Permutation::identity(3)).unwrap(), p("(1 2 3)", 3));
        // a(b(x)) with a=(12), b=(13): 1->3->3, 3->1->2, 2->2->1
        let c = p("(1 2)", 3).compose(&p("(1 3)", 3)).unwrap();
        assert_eq!(c.one_based(), vec![3, 1, 2]);
        assert_eq!(c, p("(1 3 2)", 3));
    }

    #[test]
    fn compose_size_mismatch() {
        let err = Permutation::identity(2).compose(&Permutation::identity(3));
        assert_eq!(err, Err(PermError::SizeMismatch { left: 2, right: 3 }));
    }

    #[test]
    fn inverse_examples() {
        assert!(Permutation::identity(4).inverse().is_identity());
        assert_eq!(p("(1 2)", 4).inverse(), p("(1 2)", 4));
        assert_eq!(p("(1 2 3)", 3).inverse(), p("(1 3 2)", 3));
    }

    #[test]
    fn parse_and_print() {
        let q = p("(1 2 7 8)(3 4 5 6)", 8);
        assert_eq!(q.to_string(), "(1 2 7 8)(3 4 5 6)");
        assert_eq!(p("(1278)(3456)", 8), q);
        assert_eq!(p("(1,2,7,8)(3,4,5,6)", 8), q);
        assert_eq!(p("id", 5).to_string(), "id");
        assert_eq!(p("(123456789a)", 10).apply(9), 0);
        assert!(Permutation::parse_cycles("(1 2", 3).is_err());
        assert!(Permutation::parse_cycles("(1 4)", 3).is_err());
        assert!(Permutation::parse_cycles("(1 2)(2 3)", 3).is_err());
    }

    #[test]
    fn from_images_rejects_non_bijections() {
        assert!(Permutation::from_images(vec![0, 0]).is_err());
        assert!(Permutation::from_one_based(&[1, 3]).is_err());
        assert!(Permutation::from_one_based(&[2, 1]).is_ok());
    }

    #[test]
    fn partition_counts() {
        let expected = [1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77];
        for (n, &count) in (1..=12).zip(expected.iter()) {
            assert_eq!(class_representatives(n).len(), count, "p({n})");
        }
        assert_eq!(class_representatives(1), vec![Permutation::identity(1)]);
    }

    #[test]
    fn representative_convention() {
        let ct = CycleType::new(vec![2, 3]);
        assert_eq!(ct.representative(), p("(1 2 3)(4 5)", 5));
        assert_eq!(ct.representative().cycle_type(), ct);
        assert_eq!(partitions(3)[0], CycleType::new(vec![3]));
        assert_eq!(partitions(3)[2], CycleType::new(vec![1, 1, 1]));
    }

    #[test]
    fn centralizer_orders() {
        assert_eq!(Centralizer::symmetric(3).order(), 6);
        let c = Centralizer::new(&p("(1 2)", 3));
        assert_eq!(c.order(), 2);
        let elems: Vec<_> = c.iter().collect();
        assert_eq!(elems, vec![Permutation::identity(3), p("(1 2)", 3)]);
        assert_eq!(Centralizer::new(&p("(123456789)", 9)).order(), 9);
    }

    #[test]
    fn centralizer_brute_force_sym4() {
        // Every element of Sym_4 commuting with T, counted by brute force.
        let all: Vec<Permutation> = Centralizer::symmetric(4).iter().collect();
        assert_eq!(all.len(), 24);
        for t in &all {
            let c = Centralizer::new(t);
            let brute: BTreeSet<_> = all.iter().filter(|g| g.commutes_with(t)).cloned().collect();
            let lazy: BTreeSet<_> = c.iter().collect();
            assert_eq!(brute, lazy, "centralizer of {t}");
            assert_eq!(c.order(), brute.len() as u128);
        }
    }

    #[test]
    fn support_filter_examples() {
        let s3 = support_filter(&Centralizer::symmetric(3), 2);
        let transpositions: Vec<_> = ["(1 2)", "(1 3)", "(2 3)"].iter().map(|s| p(s, 3)).collect();
        for t in &transpositions {
            assert!(s3.contains(t));
        }
        // Sym_3 generators here are (1 2) and the 3-cycle of blocks (1 2 3).
        assert!(s3.iter().all(|g| g.support_len() <= 2 || Centralizer::symmetric(3).generators().contains(g)));

        let nine = Centralizer::new(&p("(123456789)", 9));
        assert_eq!(support_filter(&nine, 3), nine.generators());
        assert_eq!(nine.generators().len(), 1);

        let trivial = Centralizer::new(&Permutation::identity(1));
        assert_eq!(trivial.order(), 1);
        assert!(support_filter(&trivial, 3).is_empty());
    }

    #[test]
    fn derangement_numbers() {
        assert_eq!((0..6).map(derangements).collect::<Vec<_>>(), vec![1, 0, 1, 2, 9, 44]);
    }
}
