//! Finite groups as explicit multiplication tables.
//!
//! Elements are indices `0..|G|` with the identity pinned at index `0`.
//! Supported families: cyclic `Z_n`, dihedral `D_n` (order `2n`), symmetric
//! `S_n` for `n ≤ 5`, the quaternion group `Q_8`, and binary direct products.
//! [`TupleIndex`] flattens tuples in `G^k` row-major (first coordinate most
//! significant), which fixes the layout of every function table in the crate.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Soft cap on group order; the dense `O(|G|³)` validation and the norm
/// solvers are meant for desk-scale groups.
pub const MAX_ORDER: usize = 200;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GroupDescriptor {
    Cyclic { n: usize },
    Dihedral { n: usize },
    Symmetric { n: usize },
    Quaternion8,
    Product { factors: Vec<GroupDescriptor> },
}

impl std::fmt::Display for GroupDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GroupDescriptor::Cyclic { n } => write!(f, "cyclic({n})"),
            GroupDescriptor::Dihedral { n } => write!(f, "dihedral({n})"),
            GroupDescriptor::Symmetric { n } => write!(f, "symmetric({n})"),
            GroupDescriptor::Quaternion8 => write!(f, "quaternion8"),
            GroupDescriptor::Product { factors } => {
                write!(f, "product(")?;
                for (i, d) in factors.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{d}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl GroupDescriptor {
    /// Parses short aliases used on the command line (`c6`, `d4`, `s3`, `q8`),
    /// falling back to the JSON descriptor encoding.
    pub fn parse(s: &str) -> Result<GroupDescriptor> {
        let t = s.trim();
        if t.starts_with('{') {
            return serde_json::from_str(t)
                .map_err(|e| Error::UnsupportedDescriptor(format!("{t}: {e}")));
        }
        let (family, digits) = t.split_at(t.find(|c: char| c.is_ascii_digit()).unwrap_or(t.len()));
        let n: Option<usize> = digits.parse().ok();
        match (family, n) {
            ("c", Some(n)) => Ok(GroupDescriptor::Cyclic { n }),
            ("d", Some(n)) => Ok(GroupDescriptor::Dihedral { n }),
            ("s", Some(n)) => Ok(GroupDescriptor::Symmetric { n }),
            ("q", Some(8)) => Ok(GroupDescriptor::Quaternion8),
            _ => Err(Error::UnsupportedDescriptor(t.to_string())),
        }
    }
}

/// A finite group given by its full multiplication table.
#[derive(Clone, Debug)]
pub struct FiniteGroup {
    descriptor: GroupDescriptor,
    order: usize,
    mul: Vec<usize>,
    inv: Vec<usize>,
}

impl FiniteGroup {
    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.descriptor
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        0
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order + b]
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    /// Product `x₁ x₂ ⋯ x_k` (identity for the empty tuple).
    pub fn prod(&self, xs: &[usize]) -> usize {
        xs.iter().fold(0, |acc, &x| self.mul(acc, x))
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order
    }

    /// Structural equality: same descriptor, hence same table.
    pub fn same_group(&self, other: &FiniteGroup) -> bool {
        self.descriptor == other.descriptor
    }

    /// Conjugacy classes as sorted element lists, sorted by minimal element.
    pub fn conjugacy_classes(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.order];
        let mut classes = Vec::new();
        for x in 0..self.order {
            if seen[x] {
                continue;
            }
            let mut class: Vec<usize> = self
                .elements()
                .map(|g| self.mul(self.mul(g, x), self.inv(g)))
                .collect();
            class.sort_unstable();
            class.dedup();
            for &y in &class {
                seen[y] = true;
            }
            classes.push(class);
        }
        classes
    }
}

/// Builds the multiplication table for `descriptor` and validates the group
/// axioms on it (identity at index 0, Latin-square rows and columns, full
/// associativity, two-sided inverses).
pub fn build_group(descriptor: &GroupDescriptor) -> Result<FiniteGroup> {
    let (order, mul) = raw_table(descriptor)?;
    if order == 0 {
        return Err(Error::UnsupportedDescriptor(format!(
            "{descriptor}: empty group"
        )));
    }
    if order > MAX_ORDER {
        return Err(Error::UnsupportedDescriptor(format!(
            "{descriptor}: order {order} exceeds the soft limit {MAX_ORDER}"
        )));
    }

    let at = |a: usize, b: usize| mul[a * order + b];
    for a in 0..order {
        if at(0, a) != a || at(a, 0) != a {
            return Err(Error::UnsupportedDescriptor(format!(
                "{descriptor}: index 0 is not a two-sided identity"
            )));
        }
    }
    for a in 0..order {
        let mut row = vec![false; order];
        let mut col = vec![false; order];
        for b in 0..order {
            row[at(a, b)] = true;
            col[at(b, a)] = true;
        }
        if row.iter().any(|&v| !v) || col.iter().any(|&v| !v) {
            return Err(Error::UnsupportedDescriptor(format!(
                "{descriptor}: table is not a Latin square at row/col {a}"
            )));
        }
    }
    for a in 0..order {
        for b in 0..order {
            for c in 0..order {
                if at(at(a, b), c) != at(a, at(b, c)) {
                    return Err(Error::UnsupportedDescriptor(format!(
                        "{descriptor}: associativity fails at ({a},{b},{c})"
                    )));
                }
            }
        }
    }

    let mut inv = vec![usize::MAX; order];
    for (a, slot) in inv.iter_mut().enumerate() {
        for b in 0..order {
            if at(a, b) == 0 && at(b, a) == 0 {
                *slot = b;
                break;
            }
        }
        if *slot == usize::MAX {
            return Err(Error::UnsupportedDescriptor(format!(
                "{descriptor}: element {a} has no two-sided inverse"
            )));
        }
    }

    Ok(FiniteGroup {
        descriptor: descriptor.clone(),
        order,
        mul,
        inv,
    })
}

fn raw_table(descriptor: &GroupDescriptor) -> Result<(usize, Vec<usize>)> {
    match descriptor {
        GroupDescriptor::Cyclic { n } => {
            let n = *n;
            if n == 0 {
                return Err(Error::UnsupportedDescriptor("cyclic(0)".into()));
            }
            let mut mul = vec![0; n * n];
            for a in 0..n {
                for b in 0..n {
                    mul[a * n + b] = (a + b) % n;
                }
            }
            Ok((n, mul))
        }
        GroupDescriptor::Dihedral { n } => {
            // Element (k, j) = rotation^k · reflection^j at index j*n + k, so
            // (0,0) sits at 0. (k₁,j₁)(k₂,j₂) = (k₁ + (−1)^{j₁} k₂ mod n, j₁+j₂ mod 2).
            let n = *n;
            if n == 0 {
                return Err(Error::UnsupportedDescriptor("dihedral(0)".into()));
            }
            let order = 2 * n;
            let idx = |k: usize, j: usize| j * n + k;
            let mut mul = vec![0; order * order];
            for j1 in 0..2 {
                for k1 in 0..n {
                    for j2 in 0..2 {
                        for k2 in 0..n {
                            let k = if j1 == 0 {
                                (k1 + k2) % n
                            } else {
                                (k1 + n - k2 % n) % n
                            };
                            mul[idx(k1, j1) * order + idx(k2, j2)] = idx(k, (j1 + j2) % 2);
                        }
                    }
                }
            }
            Ok((order, mul))
        }
        GroupDescriptor::Symmetric { n } => {
            let n = *n;
            if n == 0 || n > 5 {
                return Err(Error::UnsupportedDescriptor(format!(
                    "symmetric({n}): supported for 1 ≤ n ≤ 5"
                )));
            }
            // Permutations in one-line notation, enumerated lexicographically;
            // the identity is lexicographically first. (στ)(i) = σ(τ(i)).
            let perms = lex_permutations(n);
            let order = perms.len();
            let rank = |p: &[u8]| -> usize {
                perms.binary_search_by(|q| q.as_slice().cmp(p)).unwrap()
            };
            let mut mul = vec![0; order * order];
            let mut composed = vec![0u8; n];
            for (a, pa) in perms.iter().enumerate() {
                for (b, pb) in perms.iter().enumerate() {
                    for i in 0..n {
                        composed[i] = pa[pb[i] as usize];
                    }
                    mul[a * order + b] = rank(&composed);
                }
            }
            Ok((order, mul))
        }
        GroupDescriptor::Quaternion8 => {
            // Index s*4 + a with sign s ∈ {0,1} and axis a ∈ {1, i, j, k}:
            // order 1, i, j, k, −1, −i, −j, −k.
            let axis_mul = |a: usize, b: usize| -> (usize, usize) {
                match (a, b) {
                    (0, x) => (0, x),
                    (x, 0) => (0, x),
                    (1, 1) | (2, 2) | (3, 3) => (1, 0),
                    (1, 2) => (0, 3),
                    (2, 1) => (1, 3),
                    (2, 3) => (0, 1),
                    (3, 2) => (1, 1),
                    (3, 1) => (0, 2),
                    (1, 3) => (1, 2),
                    _ => unreachable!(),
                }
            };
            let order = 8;
            let mut mul = vec![0; order * order];
            for s1 in 0..2 {
                for a1 in 0..4 {
                    for s2 in 0..2 {
                        for a2 in 0..4 {
                            let (sp, ap) = axis_mul(a1, a2);
                            let s = (s1 + s2 + sp) % 2;
                            mul[(s1 * 4 + a1) * order + (s2 * 4 + a2)] = s * 4 + ap;
                        }
                    }
                }
            }
            Ok((order, mul))
        }
        GroupDescriptor::Product { factors } => {
            if factors.len() != 2 {
                return Err(Error::UnsupportedDescriptor(format!(
                    "product expects exactly 2 factors, got {}",
                    factors.len()
                )));
            }
            let g1 = build_group(&factors[0])?;
            let g2 = build_group(&factors[1])?;
            let (n1, n2) = (g1.order(), g2.order());
            let order = n1 * n2;
            let mut mul = vec![0; order * order];
            for a1 in 0..n1 {
                for a2 in 0..n2 {
                    for b1 in 0..n1 {
                        for b2 in 0..n2 {
                            let a = a1 * n2 + a2;
                            let b = b1 * n2 + b2;
                            mul[a * order + b] = g1.mul(a1, b1) * n2 + g2.mul(a2, b2);
                        }
                    }
                }
            }
            Ok((order, mul))
        }
    }
}

fn lex_permutations(n: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut current: Vec<u8> = (0..n as u8).collect();
    loop {
        out.push(current.clone());
        // next_permutation in lexicographic order
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}

/// Row-major flattening of tuples in `G^k`: the first coordinate is the most
/// significant digit base `|G|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TupleIndex {
    order: usize,
    arity: usize,
}

impl TupleIndex {
    pub fn new(order: usize, arity: usize) -> TupleIndex {
        TupleIndex { order, arity }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// `|G|^k`, the table length.
    pub fn len(&self) -> usize {
        self.order.pow(self.arity as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self, tuple: &[usize]) -> Result<usize> {
        if tuple.len() != self.arity {
            return Err(Error::ArityMismatch(format!(
                "tuple has {} coordinates, index expects {}",
                tuple.len(),
                self.arity
            )));
        }
        let mut flat = 0;
        for &x in tuple {
            if x >= self.order {
                return Err(Error::IndexOutOfRange(format!(
                    "coordinate {x} in a group of order {}",
                    self.order
                )));
            }
            flat = flat * self.order + x;
        }
        Ok(flat)
    }

    pub fn from_flat(&self, mut flat: usize) -> Result<Vec<usize>> {
        if flat >= self.len() {
            return Err(Error::IndexOutOfRange(format!(
                "flat index {flat} in a table of length {}",
                self.len()
            )));
        }
        let mut tuple = vec![0; self.arity];
        for slot in tuple.iter_mut().rev() {
            *slot = flat % self.order;
            flat /= self.order;
        }
        Ok(tuple)
    }

    /// Iterates all tuples in flat order.
    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.len()).map(move |i| self.from_flat(i).unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(d: GroupDescriptor) -> FiniteGroup {
        build_group(&d).unwrap()
    }

    #[test]
    fn cyclic_table() {
        let g = group(GroupDescriptor::Cyclic { n: 6 });
        assert_eq!(g.order(), 6);
        assert_eq!(g.mul(4, 5), 3);
        assert_eq!(g.inv(2), 4);
        assert_eq!(g.identity(), 0);
    }

    #[test]
    fn dihedral_relations() {
        // r = (1,0), s = (0,1): s r s⁻¹ = r⁻¹ and s² = e.
        let g = group(GroupDescriptor::Dihedral { n: 4 });
        assert_eq!(g.order(), 8);
        let r = 1;
        let s = 4;
        assert_eq!(g.mul(s, s), 0);
        let srs = g.mul(g.mul(s, r), g.inv(s));
        assert_eq!(srs, g.inv(r));
        // r has order 4
        assert_eq!(g.prod(&[r, r, r, r]), 0);
        assert_ne!(g.prod(&[r, r]), 0);
    }

    #[test]
    fn symmetric_orders_and_parity() {
        for (n, fact) in [(1, 1), (2, 2), (3, 6), (4, 24), (5, 120)] {
            let g = group(GroupDescriptor::Symmetric { n });
            assert_eq!(g.order(), fact);
        }
        // S₃: identity first, transposition (0 1) is the permutation [1,0,2],
        // which is lexicographically the third one-line word: [0,1,2], [0,2,1], [1,0,2].
        let g = group(GroupDescriptor::Symmetric { n: 3 });
        let t = 2;
        assert_eq!(g.mul(t, t), 0);
    }

    #[test]
    fn symmetric_six_rejected() {
        assert!(build_group(&GroupDescriptor::Symmetric { n: 6 }).is_err());
    }

    #[test]
    fn quaternion_relations() {
        let g = group(GroupDescriptor::Quaternion8);
        let (i, j, k, minus) = (1, 2, 3, 4);
        assert_eq!(g.mul(i, i), minus);
        assert_eq!(g.mul(j, j), minus);
        assert_eq!(g.mul(i, j), k);
        assert_eq!(g.mul(j, i), g.mul(minus, k));
        assert_eq!(g.prod(&[i, i, i, i]), 0);
        assert_eq!(g.conjugacy_classes().len(), 5);
    }

    #[test]
    fn product_componentwise() {
        let d = GroupDescriptor::Product {
            factors: vec![
                GroupDescriptor::Cyclic { n: 2 },
                GroupDescriptor::Cyclic { n: 3 },
            ],
        };
        let g = group(d);
        assert_eq!(g.order(), 6);
        // (1,1)·(1,2) = (0,0), with pairs flattened as 3·first + second
        let a = 3 + 1;
        let b = 3 + 2;
        assert_eq!(g.mul(a, b), 0);
    }

    #[test]
    fn oversized_rejected() {
        assert!(build_group(&GroupDescriptor::Cyclic { n: 201 }).is_err());
        assert!(build_group(&GroupDescriptor::Cyclic { n: 200 }).is_ok());
    }

    #[test]
    fn descriptor_aliases_and_json() {
        assert_eq!(
            GroupDescriptor::parse("d4").unwrap(),
            GroupDescriptor::Dihedral { n: 4 }
        );
        assert_eq!(
            GroupDescriptor::parse("q8").unwrap(),
            GroupDescriptor::Quaternion8
        );
        let d: GroupDescriptor = serde_json::from_str(r#"{"type":"cyclic","n":4}"#).unwrap();
        assert_eq!(d, GroupDescriptor::Cyclic { n: 4 });
        let p: GroupDescriptor = serde_json::from_str(
            r#"{"type":"product","factors":[{"type":"cyclic","n":2},{"type":"quaternion8"}]}"#,
        )
        .unwrap();
        assert_eq!(build_group(&p).unwrap().order(), 16);
    }

    #[test]
    fn tuple_roundtrip_row_major() {
        let t = TupleIndex::new(3, 3);
        assert_eq!(t.len(), 27);
        assert_eq!(t.to_flat(&[1, 0, 2]).unwrap(), 11); // 1·9 + 0·3 + 2
        for flat in 0..t.len() {
            let tuple = t.from_flat(flat).unwrap();
            assert_eq!(t.to_flat(&tuple).unwrap(), flat);
        }
        assert!(t.to_flat(&[3, 0, 0]).is_err());
        assert!(t.to_flat(&[0, 0]).is_err());
        assert!(t.from_flat(27).is_err());
    }
}
