//! Elements of the Varopoulos algebra V^n(G) — the Haagerup tensor product of
//! n+1 copies of C(G) — as dense value tables with optional factorization
//! witnesses, the induced operator `T_w`, the pointwise product, the right
//! G-action, and the L¹(G)-module action.
//!
//! Every norm statement is a sandwich: sampled operator lower bounds from
//! `T_w`, a certified interval from the norm engine when one is attached, and
//! the ℓ²-column product bound of a factorization from above. Nothing here
//! asserts equality of the two sides; the tests only check the ordering.

use crate::group::{FiniteGroup, TupleIndex};
use crate::la::{self, CMat, CVec};
use crate::multifn::MultiFn;
use crate::norm::{self, HaagCertificate, OpFactorization};
use crate::{c64, cx, Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Sum of elementary tensors `w = Σ_i φ^1_i ⊗ ⋯ ⊗ φ^{n+1}_i`, stored as
/// scalar columns indexed `[position][column][group element]`.
#[derive(Clone, Debug)]
pub struct HaagFactorization {
    group: Arc<FiniteGroup>,
    columns: Vec<Vec<Vec<c64>>>,
}

impl HaagFactorization {
    pub fn new(group: Arc<FiniteGroup>, columns: Vec<Vec<Vec<c64>>>) -> Result<HaagFactorization> {
        if columns.len() < 2 {
            return Err(Error::ArityMismatch(format!(
                "factorizations need at least 2 positions, got {}",
                columns.len()
            )));
        }
        let rank = columns[0].len();
        if rank == 0 {
            return Err(Error::ShapeMismatch("factorization of rank 0".into()));
        }
        let q = group.order();
        for fam in &columns {
            if fam.len() != rank {
                return Err(Error::ShapeMismatch(format!(
                    "ragged ranks: {} vs {rank}",
                    fam.len()
                )));
            }
            if fam.iter().any(|col| col.len() != q) {
                return Err(Error::ShapeMismatch(format!(
                    "column length must equal the group order {q}"
                )));
            }
        }
        Ok(HaagFactorization { group, columns })
    }

    /// Rank-one tensor from one scalar function per position.
    pub fn elementary(group: Arc<FiniteGroup>, parts: &[Vec<c64>]) -> Result<HaagFactorization> {
        HaagFactorization::new(group, parts.iter().map(|p| vec![p.clone()]).collect())
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    /// Number of tensor positions, n+1 for an element of V^n(G).
    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn rank(&self) -> usize {
        self.columns[0].len()
    }

    pub fn columns(&self) -> &[Vec<Vec<c64>>] {
        &self.columns
    }

    /// `w(x⃗) = Σ_i Π_k φ^k_i(x_k)`.
    pub fn evaluate(&self) -> MultiFn {
        let m = self.arity();
        MultiFn::from_fn(self.group.clone(), m, |t| {
            (0..self.rank())
                .map(|i| {
                    (0..m)
                        .map(|k| self.columns[k][i][t[k]])
                        .product::<c64>()
                })
                .sum()
        })
    }

    /// `Π_k ‖Σ_i |φ^k_i|²‖_∞^{1/2}`, an upper bound for the V-norm of the
    /// evaluated function.
    pub fn bound(&self) -> f64 {
        let q = self.group.order();
        self.columns
            .iter()
            .map(|fam| {
                (0..q)
                    .map(|x| fam.iter().map(|col| col[x].norm_sqr()).sum::<f64>())
                    .fold(0.0f64, f64::max)
                    .sqrt()
            })
            .product()
    }

    /// Pointwise product: columns combine over the product index `(i, j)`, so
    /// the rank multiplies and the bound is submultiplicative.
    pub fn product(&self, other: &HaagFactorization) -> Result<HaagFactorization> {
        if !self.group.same_group(&other.group) {
            return Err(Error::GroupMismatch);
        }
        if self.arity() != other.arity() {
            return Err(Error::ArityMismatch(format!(
                "product of arities {} and {}",
                self.arity(),
                other.arity()
            )));
        }
        let q = self.group.order();
        let columns = self
            .columns
            .iter()
            .zip(&other.columns)
            .map(|(fa, fb)| {
                let mut fam = Vec::with_capacity(fa.len() * fb.len());
                for a in fa {
                    for b in fb {
                        fam.push((0..q).map(|x| a[x] * b[x]).collect());
                    }
                }
                fam
            })
            .collect();
        HaagFactorization::new(self.group.clone(), columns)
    }

    /// Right translation of every column: `φ^k_i(y) ↦ φ^k_i(yx)`. Leaves the
    /// bound unchanged, since sup norms are translation invariant.
    pub fn translate(&self, x: usize) -> HaagFactorization {
        let q = self.group.order();
        let columns = self
            .columns
            .iter()
            .map(|fam| {
                fam.iter()
                    .map(|col| (0..q).map(|y| col[self.group.mul(y, x)]).collect())
                    .collect()
            })
            .collect();
        HaagFactorization {
            group: self.group.clone(),
            columns,
        }
    }

    /// Tries to re-express the same function on fewer columns: the rank-one
    /// tensors are vectorized, a singular-value cut at `1e-12` picks the
    /// numerical rank, and a pivoted column subset is refitted. The reduction
    /// is kept only when it reproduces the values to `1e-12` and does not
    /// increase the bound; otherwise the original is returned.
    pub fn rank_reduce(&self) -> HaagFactorization {
        let r = self.rank();
        if r == 1 {
            return self.clone();
        }
        let m = self.arity();
        let idx = TupleIndex::new(self.group.order(), m);
        let len = idx.len();
        let t = CMat::from_fn(len, r, |row, i| {
            let tuple = idx.from_flat(row).unwrap();
            (0..m).map(|k| self.columns[k][i][tuple[k]]).product()
        });
        let s = la::svd_checked(&t);
        let cut = 1e-12 * s.sigma.first().copied().unwrap_or(0.0);
        let rk = s.sigma.iter().filter(|&&v| v > cut).count().max(1);
        if rk >= r {
            return self.clone();
        }

        // pivoted selection of rk independent tensor columns
        let mut work: Vec<CVec> = (0..r).map(|i| t.column(i).into_owned()).collect();
        let mut selected = Vec::with_capacity(rk);
        for _ in 0..rk {
            let (pick, _) = work
                .iter()
                .enumerate()
                .filter(|(i, _)| !selected.contains(i))
                .map(|(i, col)| (i, col.norm()))
                .fold((usize::MAX, -1.0), |acc, cur| {
                    if cur.1 > acc.1 {
                        cur
                    } else {
                        acc
                    }
                });
            if pick == usize::MAX {
                break;
            }
            selected.push(pick);
            let pivot = work[pick].clone();
            let nrm2 = pivot.norm_squared();
            if nrm2 > 0.0 {
                for (i, col) in work.iter_mut().enumerate() {
                    if !selected.contains(&i) {
                        let coef = pivot.dotc(col) / cx(nrm2, 0.0);
                        *col -= pivot.map(|e| e * coef);
                    }
                }
            }
        }
        selected.sort_unstable();

        let w_vec = CVec::from_fn(len, |row, _| {
            (0..r).map(|i| t[(row, i)]).sum()
        });
        let ts = CMat::from_fn(len, selected.len(), |row, j| t[(row, selected[j])]);
        let (coef, _) = la::lstsq_min_norm(&ts, &w_vec, 1e-12);
        let fit = la::entry_sup(&CMat::from_fn(len, 1, |row, _| {
            (0..selected.len())
                .map(|j| ts[(row, j)] * coef[j])
                .sum::<c64>()
                - w_vec[row]
        }));
        let sup = w_vec.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if fit > 1e-12 * (1.0 + sup) {
            return self.clone();
        }

        let columns: Vec<Vec<Vec<c64>>> = (0..m)
            .map(|k| {
                selected
                    .iter()
                    .enumerate()
                    .map(|(j, &i)| {
                        self.columns[k][i]
                            .iter()
                            .map(|&v| if k == 0 { v * coef[j] } else { v })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let reduced = HaagFactorization {
            group: self.group.clone(),
            columns,
        };
        if reduced.bound() <= self.bound() {
            reduced
        } else {
            self.clone()
        }
    }

    /// Operator-valued form of the same data (row, diagonals, column blocks).
    pub fn to_op(&self) -> Result<OpFactorization> {
        OpFactorization::diag_embed(&self.columns)
    }

    pub fn to_json(&self) -> HaagFactJson {
        HaagFactJson {
            arity: self.arity(),
            rank: self.rank(),
            columns: self
                .columns
                .iter()
                .map(|fam| {
                    fam.iter()
                        .map(|col| col.iter().map(|v| [v.re, v.im]).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_json(group: Arc<FiniteGroup>, json: &HaagFactJson) -> Result<HaagFactorization> {
        if json.columns.len() != json.arity {
            return Err(Error::ShapeMismatch(format!(
                "arity {} against {} column families",
                json.arity,
                json.columns.len()
            )));
        }
        if json.columns.iter().any(|fam| fam.len() != json.rank) {
            return Err(Error::ShapeMismatch(format!(
                "declared rank {} does not match the column data",
                json.rank
            )));
        }
        let columns = json
            .columns
            .iter()
            .map(|fam| {
                fam.iter()
                    .map(|col| col.iter().map(|[re, im]| cx(*re, *im)).collect())
                    .collect()
            })
            .collect();
        HaagFactorization::new(group, columns)
    }
}

/// Serialization form: positions × columns × group elements, `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HaagFactJson {
    pub arity: usize,
    pub rank: usize,
    pub columns: Vec<Vec<Vec<[f64; 2]>>>,
}

/// An element of V^n(G): dense values on `G^{n+1}`, optionally accompanied by
/// a factorization witness (which must reproduce the values) and a norm
/// certificate.
#[derive(Clone, Debug)]
pub struct VFn {
    values: MultiFn,
    factorization: Option<HaagFactorization>,
    certificate: Option<HaagCertificate>,
}

/// Largest deviation a factorization may have from the dense values it claims
/// to represent.
pub const FACTORIZATION_TOL: f64 = 1e-10;

impl VFn {
    pub fn new(values: MultiFn) -> Result<VFn> {
        if values.arity() < 2 {
            return Err(Error::ArityMismatch(format!(
                "V-elements live on G^(n+1) with n ≥ 1, got arity {}",
                values.arity()
            )));
        }
        Ok(VFn {
            values,
            factorization: None,
            certificate: None,
        })
    }

    pub fn with_factorization(values: MultiFn, fact: HaagFactorization) -> Result<VFn> {
        let mut out = VFn::new(values)?;
        if !fact.group().same_group(out.values.group()) {
            return Err(Error::GroupMismatch);
        }
        if fact.arity() != out.values.arity() {
            return Err(Error::ArityMismatch(format!(
                "factorization arity {} against values on G^{}",
                fact.arity(),
                out.values.arity()
            )));
        }
        let dev = fact.evaluate().max_deviation(&out.values)?;
        if dev > FACTORIZATION_TOL {
            return Err(Error::ShapeMismatch(format!(
                "factorization misses the values by {dev:.3e}"
            )));
        }
        out.factorization = Some(fact);
        Ok(out)
    }

    pub fn attach_certificate(mut self, cert: HaagCertificate) -> VFn {
        self.certificate = Some(cert);
        self
    }

    pub fn values(&self) -> &MultiFn {
        &self.values
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        self.values.group()
    }

    /// Number of tensor positions, n+1.
    pub fn arity(&self) -> usize {
        self.values.arity()
    }

    pub fn factorization(&self) -> Option<&HaagFactorization> {
        self.factorization.as_ref()
    }

    pub fn certificate(&self) -> Option<&HaagCertificate> {
        self.certificate.as_ref()
    }
}

/// The operator `T_w(S⃗) = Σ_i M_{φ^1_i} S₁ M_{φ^2_i} ⋯ S_n M_{φ^{n+1}_i}`
/// computed structurally from a factorization. Agrees with
/// `norm::multi_schur_apply` on the evaluated function.
pub fn t_w_apply(fact: &HaagFactorization, ops: &[CMat]) -> Result<CMat> {
    let q = fact.group().order();
    if ops.len() + 1 != fact.arity() {
        return Err(Error::ArityMismatch(format!(
            "{} operators against a factorization of arity {}",
            ops.len(),
            fact.arity()
        )));
    }
    for s in ops {
        if s.nrows() != q || s.ncols() != q {
            return Err(Error::ShapeMismatch(format!(
                "operator {}×{} on a group of order {q}",
                s.nrows(),
                s.ncols()
            )));
        }
    }
    let mut out = CMat::zeros(q, q);
    for i in 0..fact.rank() {
        let mut acc = CMat::from_fn(q, q, |a, b| {
            if a == b {
                fact.columns()[0][i][a]
            } else {
                cx(0.0, 0.0)
            }
        });
        for (k, s) in ops.iter().enumerate() {
            acc *= s;
            let col = &fact.columns()[k + 1][i];
            for b in 0..q {
                for a in 0..q {
                    acc[(a, b)] *= col[b];
                }
            }
        }
        out += acc;
    }
    Ok(out)
}

/// Certified sampled lower bound for `‖T_w‖` over the shared contraction
/// family (all translation tuples, then random contractions).
pub fn t_w_norm_lower(fact: &HaagFactorization, seed: u64, samples: usize) -> Result<f64> {
    let slots = fact.arity() - 1;
    let tuples = norm::contraction_tuples(fact.group(), slots, seed, samples);
    let vals = crate::parallel_map(tuples.len(), |i| {
        t_w_apply(fact, &tuples[i]).map(|m| la::op_norm_bounds(&m).0)
    });
    let mut best = 0.0f64;
    for v in vals {
        best = best.max(v?);
    }
    Ok(best)
}

fn translate_op(fact: &OpFactorization, group: &FiniteGroup, x: usize) -> OpFactorization {
    let q = group.order();
    OpFactorization {
        factors: fact
            .factors
            .iter()
            .map(|fx| (0..q).map(|y| fx[group.mul(y, x)].clone()).collect())
            .collect(),
    }
}

/// Right diagonal action `(x·ω)(x₁,…,x_{n+1}) = ω(x₁x,…,x_{n+1}x)`. The
/// factorization translates column by column with the bound unchanged, and a
/// certificate survives because its witness translates the same way.
pub fn translate(x: usize, w: &VFn) -> Result<VFn> {
    let group = w.group().clone();
    if x >= group.order() {
        return Err(Error::IndexOutOfRange(format!(
            "element {x} in a group of order {}",
            group.order()
        )));
    }
    let values = MultiFn::from_fn(group.clone(), w.arity(), |t| {
        let shifted: Vec<usize> = t.iter().map(|&y| group.mul(y, x)).collect();
        w.values().at(&shifted).unwrap()
    });
    let mut out = match w.factorization() {
        Some(fact) => VFn::with_factorization(values, fact.translate(x))?,
        None => VFn::new(values)?,
    };
    if let Some(cert) = w.certificate() {
        let mut moved = cert.clone();
        moved.witness = translate_op(&cert.witness, &group, x);
        out.certificate = Some(moved);
    }
    Ok(out)
}

/// L¹-module action `f·ω = (1/|G|) Σ_x f(x) (x·ω)`. Terms with `f(x) = 0`
/// are skipped, so `|G|δ_e` acts as the identity bit for bit. When `ω`
/// carries a factorization, the translated column families concatenate with
/// the leading position scaled by the coefficients.
pub fn module_action(f: &MultiFn, w: &VFn) -> Result<VFn> {
    if !f.group().same_group(w.group()) {
        return Err(Error::GroupMismatch);
    }
    if f.arity() != 1 {
        return Err(Error::ArityMismatch(format!(
            "module action needs an arity-1 function, got {}",
            f.arity()
        )));
    }
    let group = w.group().clone();
    let q = group.order();
    let m = w.arity();
    let inv_q = 1.0 / q as f64;

    let mut acc = MultiFn::zero(group.clone(), m);
    let mut terms: Vec<(usize, c64)> = Vec::new();
    for x in 0..q {
        let coef = f.at_flat(x) * cx(inv_q, 0.0);
        if coef.norm() == 0.0 {
            continue;
        }
        terms.push((x, coef));
        let translated = MultiFn::from_fn(group.clone(), m, |t| {
            let shifted: Vec<usize> = t.iter().map(|&y| group.mul(y, x)).collect();
            w.values().at(&shifted).unwrap()
        });
        acc = acc.add(&translated.scale(coef)).unwrap();
    }

    let fact = match w.factorization() {
        Some(base) if !terms.is_empty() => {
            let mut columns: Vec<Vec<Vec<c64>>> = vec![Vec::new(); m];
            for &(x, coef) in &terms {
                let shifted = base.translate(x);
                for (k, fam) in shifted.columns().iter().enumerate() {
                    for col in fam {
                        if k == 0 {
                            columns[k].push(col.iter().map(|&v| v * coef).collect());
                        } else {
                            columns[k].push(col.clone());
                        }
                    }
                }
            }
            Some(HaagFactorization::new(group.clone(), columns)?)
        }
        Some(_) => {
            // f ≡ 0: the zero function still has a rank-one witness
            Some(HaagFactorization::new(
                group.clone(),
                vec![vec![vec![cx(0.0, 0.0); q]]; m],
            )?)
        }
        None => None,
    };
    match fact {
        Some(fact) => VFn::with_factorization(acc, fact),
        None => VFn::new(acc),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{build_group, GroupDescriptor};
    use crate::norm::SolveOpts;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(n: usize) -> Arc<FiniteGroup> {
        Arc::new(build_group(&GroupDescriptor::Cyclic { n }).unwrap())
    }

    fn random_fact(
        group: &Arc<FiniteGroup>,
        arity: usize,
        rank: usize,
        rng: &mut ChaCha8Rng,
    ) -> HaagFactorization {
        let q = group.order();
        let columns = (0..arity)
            .map(|_| {
                (0..rank)
                    .map(|_| (0..q).map(|_| la::randn_c(rng)).collect())
                    .collect()
            })
            .collect();
        HaagFactorization::new(group.clone(), columns).unwrap()
    }

    #[test]
    fn evaluate_and_bound_closed_forms() {
        let z2 = c(2);
        // rank-1 all-ones: constant one, bound exactly 1
        let ones = HaagFactorization::elementary(
            z2.clone(),
            &[vec![cx(1.0, 0.0); 2], vec![cx(1.0, 0.0); 2]],
        )
        .unwrap();
        assert!(ones
            .evaluate()
            .bit_eq(&MultiFn::constant(z2.clone(), 2, cx(1.0, 0.0))));
        assert_eq!(ones.bound(), 1.0);

        // δ_e ⊗ δ_e: indicator of (e, e), bound exactly 1
        let de = vec![cx(1.0, 0.0), cx(0.0, 0.0)];
        let dd = HaagFactorization::elementary(z2.clone(), &[de.clone(), de]).unwrap();
        assert!(dd
            .evaluate()
            .bit_eq(&MultiFn::delta(z2.clone(), &[0, 0]).unwrap()));
        assert_eq!(dd.bound(), 1.0);

        // cancelling rank-2 sum: the zero function
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a: Vec<c64> = (0..2).map(|_| la::randn_c(&mut rng)).collect();
        let b: Vec<c64> = (0..2).map(|_| la::randn_c(&mut rng)).collect();
        let neg: Vec<c64> = a.iter().map(|v| -v).collect();
        let cancel = HaagFactorization::new(
            z2.clone(),
            vec![vec![a, neg], vec![b.clone(), b]],
        )
        .unwrap();
        assert!(cancel.evaluate().sup_norm() < 1e-14);

        // scaling one column family scales the bound by |c|
        let scaled = HaagFactorization::elementary(
            z2,
            &[vec![cx(-3.0, 0.0); 2], vec![cx(1.0, 0.0); 2]],
        )
        .unwrap();
        assert!((scaled.bound() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let g = c(3);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let fact = random_fact(&g, 3, 2, &mut rng);
        let json = fact.to_json();
        assert_eq!(json.arity, 3);
        assert_eq!(json.rank, 2);
        let back = HaagFactorization::from_json(g, &json).unwrap();
        assert!(back.evaluate().bit_eq(&fact.evaluate()));
        let text = serde_json::to_string(&json).unwrap();
        let parsed: HaagFactJson = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&parsed).unwrap(), text);
    }

    #[test]
    fn product_multiplies_values_and_ranks() {
        let g = c(3);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let f1 = random_fact(&g, 2, 2, &mut rng);
        let f2 = random_fact(&g, 2, 3, &mut rng);
        let prod = f1.product(&f2).unwrap();
        assert_eq!(prod.rank(), 6);
        let expect = f1.evaluate().mul(&f2.evaluate()).unwrap();
        assert!(prod.evaluate().max_deviation(&expect).unwrap() < 1e-12);
        assert!(prod.bound() <= f1.bound() * f2.bound() + 1e-12);

        // the all-ones rank-1 tensor is a unit for the product
        let ones = HaagFactorization::elementary(
            g,
            &[vec![cx(1.0, 0.0); 3], vec![cx(1.0, 0.0); 3]],
        )
        .unwrap();
        let unit = f1.product(&ones).unwrap();
        assert!(unit.evaluate().max_deviation(&f1.evaluate()).unwrap() < 1e-14);
        assert!((unit.bound() - f1.bound()).abs() < 1e-12);

        // commutative in evaluated values
        let flipped = f2.product(&f1).unwrap();
        assert!(flipped
            .evaluate()
            .max_deviation(&prod.evaluate())
            .unwrap()
            < 1e-12);
    }

    #[test]
    fn product_certified_norm_is_submultiplicative() {
        let opts = SolveOpts {
            seed: 23,
            ..SolveOpts::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for (order, arity) in [(2usize, 2usize), (3, 2), (2, 3)] {
            let g = c(order);
            let f1 = random_fact(&g, arity, 2, &mut rng);
            let f2 = random_fact(&g, arity, 2, &mut rng);
            let prod = f1.product(&f2).unwrap();
            let seeded = SolveOpts {
                seed_factorization: Some(prod.to_op().unwrap()),
                ..opts.clone()
            };
            let cert = norm::haagerup_norm(&prod.evaluate(), &seeded).unwrap();
            assert!(
                cert.upper <= f1.bound() * f2.bound() + 1e-9,
                "upper {} vs bound product {}",
                cert.upper,
                f1.bound() * f2.bound()
            );
        }
    }

    #[test]
    fn rank_reduction_collapses_cancelling_sums() {
        let z2 = c(2);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let a: Vec<c64> = (0..2).map(|_| la::randn_c(&mut rng)).collect();
        let b: Vec<c64> = (0..2).map(|_| la::randn_c(&mut rng)).collect();
        let neg: Vec<c64> = a.iter().map(|v| -v).collect();
        let cancel =
            HaagFactorization::new(z2, vec![vec![a, neg], vec![b.clone(), b]]).unwrap();
        let reduced = cancel.rank_reduce();
        assert!(reduced.rank() < cancel.rank());
        assert!(reduced.evaluate().sup_norm() < 1e-13);
        assert!(reduced.bound() <= cancel.bound());

        // an honest rank-2 function is left alone
        let g = c(3);
        let full = random_fact(&g, 2, 2, &mut rng);
        let same = full.rank_reduce();
        assert_eq!(same.rank(), 2);
        assert!(same.evaluate().bit_eq(&full.evaluate()));
    }

    #[test]
    fn t_w_apply_matches_the_multilinear_schur_action() {
        let g = c(3);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for arity in [2usize, 3] {
            let fact = random_fact(&g, arity, 2, &mut rng);
            let w = fact.evaluate();
            for _ in 0..4 {
                let ops: Vec<CMat> = (0..arity - 1)
                    .map(|_| la::randn_cmat(3, 3, &mut rng))
                    .collect();
                let structural = t_w_apply(&fact, &ops).unwrap();
                let dense = norm::multi_schur_apply(&w, &ops).unwrap();
                assert!(la::entry_sup(&(&structural - &dense)) < 1e-12);
            }
        }
    }

    #[test]
    fn t_w_on_translations_reads_off_point_values() {
        let z2 = c(2);
        let de = vec![cx(1.0, 0.0), cx(0.0, 0.0)];
        let dd = HaagFactorization::elementary(z2.clone(), &[de.clone(), de]).unwrap();
        let lam = crate::repr::regular_rep(&z2);
        // λ(s) for s ≠ e has zero (e, e) entry, so T_w kills it
        let killed = t_w_apply(&dd, std::slice::from_ref(&lam[1])).unwrap();
        assert!(la::entry_sup(&killed) < 1e-15);
        // the identity keeps exactly the (e, e) matrix unit
        let kept = t_w_apply(&dd, std::slice::from_ref(&lam[0])).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let expect = if a == 0 && b == 0 { 1.0 } else { 0.0 };
                assert!((kept[(a, b)] - cx(expect, 0.0)).norm() < 1e-15);
            }
        }

        // n = 1 with S = identity is the multiplication operator M_{φψ}
        let g = c(3);
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let phi: Vec<c64> = (0..3).map(|_| la::randn_c(&mut rng)).collect();
        let psi: Vec<c64> = (0..3).map(|_| la::randn_c(&mut rng)).collect();
        let fact = HaagFactorization::elementary(g, &[phi.clone(), psi.clone()]).unwrap();
        let id = CMat::identity(3, 3);
        let out = t_w_apply(&fact, std::slice::from_ref(&id)).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let expect = if a == b { phi[a] * psi[a] } else { cx(0.0, 0.0) };
                assert!((out[(a, b)] - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn sampled_lower_stays_under_the_factorization_bound() {
        let g = c(3);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for arity in [2usize, 3] {
            let fact = random_fact(&g, arity, 2, &mut rng);
            let lower = t_w_norm_lower(&fact, 43, 8).unwrap();
            assert!(
                lower <= fact.bound() + 1e-9,
                "lower {lower} vs bound {}",
                fact.bound()
            );
        }
        // constant one reaches its bound through identity contractions
        let ones = HaagFactorization::elementary(
            g,
            &[vec![cx(1.0, 0.0); 3], vec![cx(1.0, 0.0); 3]],
        )
        .unwrap();
        let lower = t_w_norm_lower(&ones, 47, 4).unwrap();
        assert!(((1.0 - 1e-9)..=(1.0 + 1e-9)).contains(&lower));
    }

    #[test]
    fn full_sandwich_with_the_norm_engine() {
        let g = c(2);
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let fact = random_fact(&g, 2, 2, &mut rng);
        let w = VFn::with_factorization(fact.evaluate(), fact.clone()).unwrap();
        let cert = norm::haagerup_norm(w.values(), &SolveOpts::default()).unwrap();
        let sampled = t_w_norm_lower(&fact, 59, 8).unwrap();
        assert!(sampled <= cert.lower + 1e-9);
        assert!(cert.lower <= cert.upper + 1e-12);
        assert!(cert.upper <= fact.bound() + 1e-9);
    }

    #[test]
    fn translation_acts_by_isometries() {
        let g = c(6);
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let fact = random_fact(&g, 2, 2, &mut rng);
        let w = VFn::with_factorization(fact.evaluate(), fact.clone()).unwrap();

        for x in 0..6 {
            let moved = translate(x, &w).unwrap();
            for (flat, tuple) in w.values().tuple_index().iter().enumerate() {
                let shifted: Vec<usize> = tuple.iter().map(|&y| g.mul(y, x)).collect();
                assert_eq!(
                    moved.values().at_flat(flat),
                    w.values().at(&shifted).unwrap()
                );
            }
            assert_eq!(moved.factorization().unwrap().bound(), fact.bound());
        }

        // identity element leaves everything bit-identical
        let same = translate(0, &w).unwrap();
        assert!(same.values().bit_eq(w.values()));

        // action law: x·(y·ω) = (xy)·ω
        let x = 2;
        let y = 5;
        let lhs = translate(x, &translate(y, &w).unwrap()).unwrap();
        let rhs = translate(g.mul(x, y), &w).unwrap();
        assert!(lhs.values().bit_eq(rhs.values()));
    }

    #[test]
    fn translation_moves_the_certificate_witness() {
        let g = c(2);
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let fact = random_fact(&g, 2, 2, &mut rng);
        let cert = norm::haagerup_norm(&fact.evaluate(), &SolveOpts::default()).unwrap();
        let residual_before = cert.witness_residual;
        let w = VFn::with_factorization(fact.evaluate(), fact)
            .unwrap()
            .attach_certificate(cert);
        let moved = translate(1, &w).unwrap();
        let moved_cert = moved.certificate().unwrap();
        let check = moved_cert.witness.residual_sup(moved.values()).unwrap();
        assert!(check <= residual_before + 1e-12);
        assert_eq!(moved_cert.lower, w.certificate().unwrap().lower);
        assert_eq!(moved_cert.upper, w.certificate().unwrap().upper);
    }

    #[test]
    fn module_action_oracles() {
        let g = c(3);
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let fact = random_fact(&g, 2, 2, &mut rng);
        let w = VFn::with_factorization(fact.evaluate(), fact).unwrap();

        // |G|δ_e is the identity, bit for bit
        let approx_id = MultiFn::delta(g.clone(), &[0]).unwrap().scale(cx(3.0, 0.0));
        let same = module_action(&approx_id, &w).unwrap();
        assert!(same.values().bit_eq(w.values()));

        // zero annihilates
        let zero = MultiFn::zero(g.clone(), 1);
        let killed = module_action(&zero, &w).unwrap();
        assert!(killed.values().sup_norm() == 0.0);
        assert_eq!(killed.factorization().unwrap().bound(), 0.0);

        // general f: direct average of translates, with a consistent witness
        let f = MultiFn::random(g.clone(), 1, &mut rng);
        let acted = module_action(&f, &w).unwrap();
        let expect = MultiFn::from_fn(g.clone(), 2, |t| {
            (0..3)
                .map(|x| {
                    let shifted: Vec<usize> = t.iter().map(|&y| g.mul(y, x)).collect();
                    f.at_flat(x) * w.values().at(&shifted).unwrap() / cx(3.0, 0.0)
                })
                .sum()
        });
        assert!(acted.values().max_deviation(&expect).unwrap() < 1e-13);
        let fact_dev = acted
            .factorization()
            .unwrap()
            .evaluate()
            .max_deviation(acted.values())
            .unwrap();
        assert!(fact_dev <= FACTORIZATION_TOL);

        // linear in f
        let f2 = MultiFn::random(g.clone(), 1, &mut rng);
        let sum = module_action(&f.add(&f2).unwrap(), &w).unwrap();
        let part1 = module_action(&f, &w).unwrap();
        let part2 = module_action(&f2, &w).unwrap();
        let split = part1.values().add(part2.values()).unwrap();
        assert!(sum.values().max_deviation(&split).unwrap() < 1e-13);
    }

    #[test]
    fn constructors_reject_inconsistent_data() {
        let g = c(2);
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let fact = random_fact(&g, 2, 1, &mut rng);
        let mut wrong = fact.evaluate();
        wrong.values_mut()[0] += cx(1.0, 0.0);
        assert!(VFn::with_factorization(wrong, fact.clone()).is_err());

        let other = c(3);
        let mismatch = random_fact(&other, 2, 1, &mut rng);
        assert!(VFn::with_factorization(fact.evaluate(), mismatch).is_err());

        assert!(HaagFactorization::new(g.clone(), vec![vec![vec![cx(1.0, 0.0); 2]]]).is_err());
        assert!(HaagFactorization::new(
            g,
            vec![vec![vec![cx(1.0, 0.0); 3]], vec![vec![cx(1.0, 0.0); 3]]],
        )
        .is_err());
    }
}
