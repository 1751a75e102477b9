//! Transfer between A^n(G) and the invariant part of V^n(G): the orbit
//! average `P`, the pullback `N` along `θ(x⃗) = (x₁x₂⁻¹, …, x_nx_{n+1}⁻¹)`,
//! its inverse, the composite `Q = N⁻¹∘P`, and the set, ideal, dual, and
//! matrix-component constructions that ride on them.
//!
//! Exactness discipline: `P` computes one value per right-diagonal orbit and
//! shares it across the orbit (an orbit whose values already agree passes
//! through untouched), while `N` and `N⁻¹` are pure reindexings. Invariance,
//! idempotence, and the `Q∘N = id` round trip therefore hold at the bit
//! level, and the ideal and submodule correspondences reduce to exact
//! support bookkeeping.

use crate::fourier::{witness_op_construction, AFn, AFnCertificate};
use crate::group::{FiniteGroup, TupleIndex};
use crate::la::CMat;
use crate::multifn::MultiFn;
use crate::norm::HaagCertificate;
use crate::repr::{GroupDual, Irrep};
use crate::varopoulos::{HaagFactorization, VFn};
use crate::{c64, cx, Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// `θ(x₁,…,x_{m}) = (x₁x₂⁻¹, …, x_{m-1}x_m⁻¹)`, one coordinate shorter.
pub fn theta_tuple(group: &FiniteGroup, tuple: &[usize]) -> Result<Vec<usize>> {
    if tuple.len() < 2 {
        return Err(Error::ArityMismatch(format!(
            "θ needs at least two coordinates, got {}",
            tuple.len()
        )));
    }
    let q = group.order();
    if let Some(&bad) = tuple.iter().find(|&&t| t >= q) {
        return Err(Error::IndexOutOfRange(format!(
            "coordinate {bad} on a group of order {q}"
        )));
    }
    Ok((0..tuple.len() - 1)
        .map(|k| group.mul(tuple[k], group.inv(tuple[k + 1])))
        .collect())
}

/// The unique point of `θ⁻¹(target)` whose last coordinate is `t`:
/// `(y₁⋯y_n t, y₂⋯y_n t, …, y_n t, t)`. Coordinates must be valid.
pub fn theta_fiber(group: &FiniteGroup, target: &[usize], t: usize) -> Vec<usize> {
    let n = target.len();
    let mut points = vec![0usize; n + 1];
    points[n] = t;
    for k in (0..n).rev() {
        points[k] = group.mul(target[k], points[k + 1]);
    }
    points
}

/// Flat indices of the right-diagonal orbit of `(head, e)`, listed as
/// `(head·x, x)` for `x` in group order. Every orbit appears exactly once
/// as `head` ranges over `G^{m-1}`.
fn orbit_flats(group: &FiniteGroup, idx: &TupleIndex, head: &[usize]) -> Vec<usize> {
    let q = group.order();
    let m = head.len() + 1;
    let mut member = vec![0usize; m];
    (0..q)
        .map(|x| {
            for (k, &h) in head.iter().enumerate() {
                member[k] = group.mul(h, x);
            }
            member[m - 1] = x;
            idx.to_flat(&member).unwrap()
        })
        .collect()
}

/// Contractive projection onto the right-diagonal invariants:
/// `P(ω)(x⃗) = (1/|G|) Σ_x ω(x₁x, …, x_{m}x)`.
///
/// Each orbit is averaged once at its canonical representative (last
/// coordinate `e`) and the result is shared across the orbit; an orbit whose
/// values already agree is passed through without arithmetic. Both choices
/// are needed for `P∘P = P` and the invariance test to hold bit for bit.
/// A factorization on the input is carried along as the `1/|G|`-weighted
/// concatenation of its translates when it still matches the averaged
/// values within the factorization tolerance.
pub fn p_map(w: &VFn) -> VFn {
    let group = w.group().clone();
    let q = group.order();
    let m = w.arity();
    let idx = TupleIndex::new(q, m);
    let head_idx = TupleIndex::new(q, m - 1);
    let inv_q = 1.0 / q as f64;

    let mut values = vec![cx(0.0, 0.0); idx.len()];
    for head in head_idx.iter() {
        let flats = orbit_flats(&group, &idx, &head);
        let orbit: Vec<c64> = flats.iter().map(|&f| w.values().at_flat(f)).collect();
        let first = orbit[0];
        let avg = if orbit.iter().all(|&v| v == first) {
            first
        } else {
            orbit.iter().sum::<c64>() * inv_q
        };
        for &f in &flats {
            values[f] = avg;
        }
    }
    let averaged = MultiFn::new(group.clone(), m, values).unwrap();

    match w.factorization() {
        Some(base) => {
            let mut columns: Vec<Vec<Vec<c64>>> = vec![Vec::new(); m];
            for x in 0..q {
                let shifted = base.translate(x);
                for (k, fam) in shifted.columns().iter().enumerate() {
                    for col in fam {
                        if k == 0 {
                            columns[k].push(col.iter().map(|&v| v * inv_q).collect());
                        } else {
                            columns[k].push(col.clone());
                        }
                    }
                }
            }
            let fact = HaagFactorization::new(group, columns).unwrap();
            VFn::with_factorization(averaged.clone(), fact)
                .unwrap_or_else(|_| VFn::new(averaged).unwrap())
        }
        None => VFn::new(averaged).unwrap(),
    }
}

/// Sup over orbits of the deviation from the orbit's first value; zero
/// exactly when `ω` is right-diagonal invariant.
pub fn invariance_defect(w: &VFn) -> f64 {
    let group = w.group();
    let idx = TupleIndex::new(group.order(), w.arity());
    let head_idx = TupleIndex::new(group.order(), w.arity() - 1);
    let mut defect = 0.0f64;
    for head in head_idx.iter() {
        let flats = orbit_flats(group, &idx, &head);
        let first = w.values().at_flat(flats[0]);
        for &f in &flats[1..] {
            defect = defect.max((w.values().at_flat(f) - first).norm());
        }
    }
    defect
}

pub fn is_invariant(w: &VFn) -> bool {
    invariance_defect(w) == 0.0
}

fn n_values(u: &AFn) -> MultiFn {
    let group = u.group().clone();
    MultiFn::from_fn(group.clone(), u.arity() + 1, |t| {
        u.fun().at(&theta_tuple(&group, t).unwrap()).unwrap()
    })
}

/// The pullback `N(u)(x⃗) = u(x₁x₂⁻¹, …, x_nx_{n+1}⁻¹)`: a bit-exact
/// reindexing, invariant by construction since `θ` is constant on orbits.
pub fn n_map(u: &AFn) -> VFn {
    VFn::new(n_values(u)).unwrap()
}

/// `N` with the witness data attached. The scalar-column factorization is
/// the coefficient expansion of the witness pair over the group-element
/// basis — `φ⁰_m(x) = (1/|G|)·conj(g(xm))`, interior columns ≡ 1,
/// `φ^n_m(x) = f(xm)` — concatenated with one point-mass chain per declared
/// residual entry, so it evaluates to `N(u)` itself. The certificate reuses
/// the operator construction: its upper bound is the witness value
/// `‖f‖₂‖g‖₂` plus the certified residual bound, and the lower bound
/// transfers from the A^n certificate along the isometry.
pub fn n_map_certified(u: &AFn, cert: &AFnCertificate) -> Result<VFn> {
    let group = u.group().clone();
    let q = group.order();
    let n = u.arity();
    let wit = &cert.witness;
    if wit.f.len() != q || wit.g.len() != q {
        return Err(Error::ShapeMismatch(format!(
            "witness vectors of length {}, {} on a group of order {q}",
            wit.f.len(),
            wit.g.len()
        )));
    }
    if !wit.residual.group().same_group(&group) {
        return Err(Error::GroupMismatch);
    }
    if wit.residual.arity() != n {
        return Err(Error::ArityMismatch(format!(
            "residual of arity {} for a function of arity {n}",
            wit.residual.arity()
        )));
    }

    let inv_q = 1.0 / q as f64;
    let mut columns: Vec<Vec<Vec<c64>>> = vec![Vec::new(); n + 1];
    for m in 0..q {
        for (k, fam) in columns.iter_mut().enumerate() {
            let col: Vec<c64> = (0..q)
                .map(|x| {
                    if k == 0 {
                        wit.g[group.mul(x, m)].conj() * inv_q
                    } else if k == n {
                        wit.f[group.mul(x, m)]
                    } else {
                        cx(1.0, 0.0)
                    }
                })
                .collect();
            fam.push(col);
        }
    }
    let ridx = wit.residual.tuple_index();
    for flat in wit.residual.support(0.0) {
        let v = wit.residual.at_flat(flat);
        let y = ridx.from_flat(flat)?;
        let amp = v.norm().sqrt();
        let phase = v / v.norm();
        for t in 0..q {
            let points = theta_fiber(&group, &y, t);
            for (k, fam) in columns.iter_mut().enumerate() {
                let mut col = vec![cx(0.0, 0.0); q];
                col[points[k]] = if k == 0 {
                    phase * amp
                } else if k == n {
                    cx(amp, 0.0)
                } else {
                    cx(1.0, 0.0)
                };
                fam.push(col);
            }
        }
    }
    let fact = HaagFactorization::new(group.clone(), columns)?;

    let values = n_values(u);
    let (op, value) = witness_op_construction(&group, &wit.f, &wit.g, &wit.residual)?;
    let witness_residual = op.residual_sup(&values)?;
    let bond = op.max_bond();
    let haag = HaagCertificate {
        lower: cert.lower,
        upper: value.max(cert.lower),
        witness: op,
        witness_residual,
        bond,
        slices_checked: 0,
        samples_checked: 0,
        flag: None,
        method: "n-transfer",
    };
    Ok(VFn::with_factorization(values, fact)?.attach_certificate(haag))
}

/// Inverse of the pullback on exactly invariant functions:
/// `u(y⃗) = ω(e, y₁⁻¹, y₂⁻¹y₁⁻¹, …, y_n⁻¹⋯y₁⁻¹)`, again a pure reindexing.
pub fn n_inverse(w: &VFn) -> Result<AFn> {
    let defect = invariance_defect(w);
    if defect != 0.0 {
        return Err(Error::NotInvariant(defect));
    }
    let group = w.group().clone();
    let n = w.arity() - 1;
    let values = MultiFn::from_fn(group.clone(), n, |y| {
        let mut z = vec![0usize; n + 1];
        for k in 0..n {
            z[k + 1] = group.mul(group.inv(y[k]), z[k]);
        }
        w.values().at(&z).unwrap()
    });
    Ok(AFn::new(values).unwrap())
}

/// `Q = N⁻¹∘P`, which works out to the fiber average
/// `Q(ω)(y⃗) = (1/|G|) Σ_{θ(z⃗)=y⃗} ω(z⃗)`. Composing the two exact stages
/// makes `Q∘N` the identity bit for bit.
pub fn q_map(w: &VFn) -> AFn {
    n_inverse(&p_map(w)).expect("the orbit average is invariant by construction")
}

/// Adjoint of `N` under the normalized bilinear pairings: the
/// `|G|^n × |G|^{n+1}` matrix with entry `1/|G|` at `(y⃗, z⃗)` exactly when
/// `θ(z⃗) = y⃗`. The same matrix computes `Q` on functions, and `|G|` times
/// its transpose computes `N`.
pub fn n_adjoint_matrix(group: &Arc<FiniteGroup>, n: usize) -> CMat {
    let q = group.order();
    let yidx = TupleIndex::new(q, n);
    let zidx = TupleIndex::new(q, n + 1);
    let mut mat = CMat::zeros(yidx.len(), zidx.len());
    for (zflat, z) in zidx.iter().enumerate() {
        let y = theta_tuple(group, &z).unwrap();
        mat[(yidx.to_flat(&y).unwrap(), zflat)] = cx(1.0 / q as f64, 0.0);
    }
    mat
}

/// The `|G|^{n+1}`-square matrix of `P`: `(1/|G|) Σ_x` (right diagonal
/// translation). It is symmetric, so `P` is its own adjoint under the
/// normalized pairing.
pub fn p_matrix(group: &Arc<FiniteGroup>, n: usize) -> CMat {
    let q = group.order();
    let idx = TupleIndex::new(q, n + 1);
    let mut mat = CMat::zeros(idx.len(), idx.len());
    for (flat, t) in idx.iter().enumerate() {
        for x in 0..q {
            let shifted: Vec<usize> = t.iter().map(|&a| group.mul(a, x)).collect();
            mat[(flat, idx.to_flat(&shifted).unwrap())] += cx(1.0 / q as f64, 0.0);
        }
    }
    mat
}

/// A functional on A^n(G) (arity `n`) or V^n(G) (arity `n+1`) represented by
/// a function under the normalized bilinear pairing
/// `⟨u, T⟩ = (1/|G|^k) Σ_x⃗ u(x⃗) t(x⃗)` — no conjugation, so the module
/// action of the algebra is the pointwise product of representatives.
#[derive(Clone, Debug)]
pub struct DualElement {
    rep: MultiFn,
}

impl DualElement {
    pub fn new(rep: MultiFn) -> DualElement {
        DualElement { rep }
    }

    pub fn rep(&self) -> &MultiFn {
        &self.rep
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        self.rep.group()
    }

    pub fn arity(&self) -> usize {
        self.rep.arity()
    }

    /// Flat indices where the representative is exactly nonzero.
    pub fn support(&self) -> Vec<usize> {
        self.rep.support(0.0)
    }

    /// `⟨u, T⟩ = (1/|G|^k) Σ u·t`.
    pub fn pair(&self, u: &MultiFn) -> Result<c64> {
        if !u.group().same_group(self.rep.group()) {
            return Err(Error::GroupMismatch);
        }
        if u.arity() != self.rep.arity() {
            return Err(Error::ArityMismatch(format!(
                "pairing arity {} against arity {}",
                u.arity(),
                self.rep.arity()
            )));
        }
        let scale = (self.rep.group().order() as f64)
            .powi(self.rep.arity() as i32)
            .recip();
        let sum: c64 = u
            .values()
            .iter()
            .zip(self.rep.values())
            .map(|(&a, &b)| a * b)
            .sum();
        Ok(sum * scale)
    }

    /// `(u·T)` has representative `u·t`; supports intersect.
    pub fn module_act(&self, f: &MultiFn) -> Result<DualElement> {
        Ok(DualElement::new(f.mul(&self.rep)?))
    }
}

/// `(S)∘N` as a functional on A^n(G): the representative is the θ-fiber
/// average of `s` — the same average `Q` applies to functions — matching
/// the explicit adjoint matrix of `N`.
pub fn dual_along_n(s: &DualElement) -> Result<DualElement> {
    let w = VFn::new(s.rep().clone())?;
    Ok(DualElement::new(q_map(&w).into_fun()))
}

/// `(T)∘(N⁻¹∘P)` as a functional on V^n(G): the representative is the exact
/// θ pullback `t∘θ`, i.e. `|G|·(adjoint matrix)ᵀ` applied to `t`.
pub fn dual_along_q(t: &DualElement) -> Result<DualElement> {
    let u = AFn::new(t.rep().clone())?;
    Ok(DualElement::new(n_values(&u)))
}

/// Max deviation, over the point-mass basis of A^n(G), between the two
/// functionals `ω·(T∘N⁻¹∘P)∘N` and `(N⁻¹P^nω)·T`.
pub fn lemma51_check(w: &VFn, t: &DualElement) -> Result<f64> {
    if !w.group().same_group(t.group()) {
        return Err(Error::GroupMismatch);
    }
    if t.arity() + 1 != w.arity() {
        return Err(Error::ArityMismatch(format!(
            "dual of arity {} against a function of arity {}",
            t.arity(),
            w.arity()
        )));
    }
    let lhs = dual_along_n(&dual_along_q(t)?.module_act(w.values())?)?;
    let rhs = t.module_act(q_map(w).fun())?;
    let group = w.group().clone();
    let idx = TupleIndex::new(group.order(), t.arity());
    let mut dev = 0.0f64;
    for flat in 0..idx.len() {
        let basis = MultiFn::delta(group.clone(), &idx.from_flat(flat)?)?;
        dev = dev.max((lhs.pair(&basis)? - rhs.pair(&basis)?).norm());
    }
    Ok(dev)
}

/// A subset of a tuple power `G^k`, stored as sorted, deduplicated flat
/// indices.
#[derive(Clone, Debug)]
pub struct ClosedSet {
    group: Arc<FiniteGroup>,
    arity: usize,
    flats: Vec<usize>,
}

impl ClosedSet {
    pub fn new(group: Arc<FiniteGroup>, arity: usize, tuples: &[Vec<usize>]) -> Result<ClosedSet> {
        let idx = TupleIndex::new(group.order(), arity);
        let mut flats = tuples
            .iter()
            .map(|t| {
                if t.len() != arity {
                    return Err(Error::ArityMismatch(format!(
                        "tuple of length {} in a set of arity {arity}",
                        t.len()
                    )));
                }
                idx.to_flat(t)
            })
            .collect::<Result<Vec<_>>>()?;
        flats.sort_unstable();
        flats.dedup();
        Ok(ClosedSet {
            group,
            arity,
            flats,
        })
    }

    pub fn from_flats(
        group: Arc<FiniteGroup>,
        arity: usize,
        mut flats: Vec<usize>,
    ) -> Result<ClosedSet> {
        let total = TupleIndex::new(group.order(), arity).len();
        if let Some(&bad) = flats.iter().find(|&&f| f >= total) {
            return Err(Error::IndexOutOfRange(format!(
                "flat index {bad} in a set of {total} tuples"
            )));
        }
        flats.sort_unstable();
        flats.dedup();
        Ok(ClosedSet {
            group,
            arity,
            flats,
        })
    }

    pub fn empty(group: Arc<FiniteGroup>, arity: usize) -> ClosedSet {
        ClosedSet {
            group,
            arity,
            flats: Vec::new(),
        }
    }

    pub fn full(group: Arc<FiniteGroup>, arity: usize) -> ClosedSet {
        let total = TupleIndex::new(group.order(), arity).len();
        ClosedSet {
            group,
            arity,
            flats: (0..total).collect(),
        }
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn flats(&self) -> &[usize] {
        &self.flats
    }

    pub fn len(&self) -> usize {
        self.flats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flats.is_empty()
    }

    pub fn contains(&self, flat: usize) -> bool {
        self.flats.binary_search(&flat).is_ok()
    }

    pub fn tuples(&self) -> Vec<Vec<usize>> {
        let idx = TupleIndex::new(self.group.order(), self.arity);
        self.flats
            .iter()
            .map(|&f| idx.from_flat(f).unwrap())
            .collect()
    }

    /// Flat indices outside the set, in order.
    pub fn complement(&self) -> Vec<usize> {
        let total = TupleIndex::new(self.group.order(), self.arity).len();
        (0..total).filter(|&f| !self.contains(f)).collect()
    }

    /// The characteristic function of the set.
    pub fn indicator(&self) -> MultiFn {
        let total = TupleIndex::new(self.group.order(), self.arity).len();
        let mut values = vec![cx(0.0, 0.0); total];
        for &f in &self.flats {
            values[f] = cx(1.0, 0.0);
        }
        MultiFn::new(self.group.clone(), self.arity, values).unwrap()
    }

    pub fn to_json(&self) -> ClosedSetJson {
        ClosedSetJson {
            arity: self.arity,
            tuples: self.tuples(),
        }
    }

    pub fn from_json(group: Arc<FiniteGroup>, json: &ClosedSetJson) -> Result<ClosedSet> {
        ClosedSet::new(group, json.arity, &json.tuples)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClosedSetJson {
    pub arity: usize,
    pub tuples: Vec<Vec<usize>>,
}

/// `E* = θ⁻¹(E) ⊆ G^{k+1}`: the disjoint union of the `|G|`-point θ-fibers
/// over `E`, so `|E*| = |E|·|G|`.
pub fn e_star(e: &ClosedSet) -> ClosedSet {
    let group = e.group().clone();
    let q = group.order();
    let idx = TupleIndex::new(q, e.arity());
    let out_idx = TupleIndex::new(q, e.arity() + 1);
    let mut flats = Vec::with_capacity(e.len() * q);
    for &f in e.flats() {
        let y = idx.from_flat(f).unwrap();
        for t in 0..q {
            flats.push(out_idx.to_flat(&theta_fiber(&group, &y, t)).unwrap());
        }
    }
    ClosedSet::from_flats(group, e.arity() + 1, flats).unwrap()
}

/// The classical ideal variants attached to a zero set. On a finite group
/// they have the same members; `contains` still computes each kind by its
/// own definition so the collapse stays a checked fact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdealKind {
    /// `I(E)`: vanishing pointwise on `E`.
    Vanishing,
    /// `j(E)`: support disjoint from `E` (every support here is compact).
    DisjointSupport,
    /// `J(E)`: closure of `j(E)`; trivial in finite dimension.
    DisjointSupportClosure,
}

/// An ideal of A^n(G) or V^n(G) cut out by a zero set, with its point-mass
/// basis.
#[derive(Clone, Debug)]
pub struct Ideal {
    zero_set: ClosedSet,
    kind: IdealKind,
}

impl Ideal {
    pub fn new(zero_set: ClosedSet, kind: IdealKind) -> Ideal {
        Ideal { zero_set, kind }
    }

    pub fn zero_set(&self) -> &ClosedSet {
        &self.zero_set
    }

    pub fn kind(&self) -> IdealKind {
        self.kind
    }

    fn check(&self, u: &MultiFn) -> Result<()> {
        if !u.group().same_group(self.zero_set.group()) {
            return Err(Error::GroupMismatch);
        }
        if u.arity() != self.zero_set.arity() {
            return Err(Error::ArityMismatch(format!(
                "function of arity {} against a zero set of arity {}",
                u.arity(),
                self.zero_set.arity()
            )));
        }
        Ok(())
    }

    /// Membership by the defining property of the kind (exact zeros).
    pub fn contains(&self, u: &MultiFn) -> Result<bool> {
        self.check(u)?;
        Ok(match self.kind {
            IdealKind::Vanishing => self
                .zero_set
                .flats()
                .iter()
                .all(|&f| u.at_flat(f).norm() == 0.0),
            IdealKind::DisjointSupport | IdealKind::DisjointSupportClosure => u
                .support(0.0)
                .iter()
                .all(|&f| !self.zero_set.contains(f)),
        })
    }

    /// Largest mass of `u` on the zero set.
    pub fn deviation(&self, u: &MultiFn) -> Result<f64> {
        self.check(u)?;
        Ok(self
            .zero_set
            .flats()
            .iter()
            .map(|&f| u.at_flat(f).norm())
            .fold(0.0, f64::max))
    }

    /// Point masses off the zero set span the ideal.
    pub fn basis(&self) -> Vec<usize> {
        self.zero_set.complement()
    }

    pub fn dim(&self) -> usize {
        let total = TupleIndex::new(self.zero_set.group().order(), self.zero_set.arity()).len();
        total - self.zero_set.len()
    }
}

/// Membership of `u` in `I_A(E)` against membership of `N(u)` in
/// `I_V(E*)`, with the deviations and the support identity
/// `supp(N u) ∩ E* = θ⁻¹(supp u ∩ E)` that witness the equivalence.
#[derive(Clone, Debug)]
pub struct IdealTransferReport {
    pub in_ideal_a: bool,
    pub in_ideal_v: bool,
    pub max_on_e: f64,
    pub max_on_e_star: f64,
    pub support_transferred: bool,
}

pub fn ideal_transfer_check(u: &AFn, e: &ClosedSet) -> Result<IdealTransferReport> {
    if !u.group().same_group(e.group()) {
        return Err(Error::GroupMismatch);
    }
    if u.arity() != e.arity() {
        return Err(Error::ArityMismatch(format!(
            "function of arity {} against a set of arity {}",
            u.arity(),
            e.arity()
        )));
    }
    let group = u.group().clone();
    let q = group.order();
    let star = e_star(e);
    let nu = n_map(u);
    let ideal_a = Ideal::new(e.clone(), IdealKind::Vanishing);
    let ideal_v = Ideal::new(star.clone(), IdealKind::Vanishing);
    let in_ideal_a = ideal_a.contains(u.fun())?;
    let in_ideal_v = ideal_v.contains(nu.values())?;
    let max_on_e = ideal_a.deviation(u.fun())?;
    let max_on_e_star = ideal_v.deviation(nu.values())?;

    let lhs: Vec<usize> = nu
        .values()
        .support(0.0)
        .into_iter()
        .filter(|&f| star.contains(f))
        .collect();
    let e_idx = TupleIndex::new(q, e.arity());
    let star_idx = TupleIndex::new(q, e.arity() + 1);
    let mut rhs = Vec::new();
    for f in u.fun().support(0.0) {
        if e.contains(f) {
            let y = e_idx.from_flat(f)?;
            for t in 0..q {
                rhs.push(star_idx.to_flat(&theta_fiber(&group, &y, t))?);
            }
        }
    }
    rhs.sort_unstable();

    Ok(IdealTransferReport {
        in_ideal_a,
        in_ideal_v,
        max_on_e,
        max_on_e_star,
        support_transferred: lhs == rhs,
    })
}

/// Support of `X_{V^n}`, the support of its return trip `(X_{V^n})_{A^n}`,
/// and the largest mass a functional from `X` leaks outside the transferred
/// support on the way back — zero exactly when the round trip closes.
#[derive(Clone, Debug)]
pub struct SubmoduleTransfer {
    pub transferred: ClosedSet,
    pub roundtrip: ClosedSet,
    pub max_leak: f64,
}

/// `X ↦ X_{V^n} = {S : (ω·S)∘N ∈ X for all ω}` by intersecting kernels over
/// the point-mass bases, then back down to `(X_{V^n})_{A^n}` the same way.
pub fn submodule_transfer(x_support: &ClosedSet) -> Result<SubmoduleTransfer> {
    let n = x_support.arity();
    if n == 0 {
        return Err(Error::ArityMismatch(
            "submodule support needs arity at least one".into(),
        ));
    }
    let group = x_support.group().clone();
    let q = group.order();
    let vidx = TupleIndex::new(q, n + 1);
    let aidx = TupleIndex::new(q, n);

    let mut kept = Vec::new();
    for z in 0..vidx.len() {
        let s = DualElement::new(MultiFn::delta(group.clone(), &vidx.from_flat(z)?)?);
        let mut leak = 0.0f64;
        for w in 0..vidx.len() {
            let omega = MultiFn::delta(group.clone(), &vidx.from_flat(w)?)?;
            let acted = s.module_act(&omega)?;
            if acted.support().is_empty() {
                continue;
            }
            let down = dual_along_n(&acted)?;
            for y in 0..aidx.len() {
                if !x_support.contains(y) {
                    leak = leak.max(down.rep().at_flat(y).norm());
                }
            }
        }
        if leak == 0.0 {
            kept.push(z);
        }
    }
    let transferred = ClosedSet::from_flats(group.clone(), n + 1, kept)?;

    let mut kept_back = Vec::new();
    let mut max_leak = 0.0f64;
    for y in 0..aidx.len() {
        let t = DualElement::new(MultiFn::delta(group.clone(), &aidx.from_flat(y)?)?);
        let mut leak = 0.0f64;
        for p in 0..aidx.len() {
            let u = MultiFn::delta(group.clone(), &aidx.from_flat(p)?)?;
            let acted = t.module_act(&u)?;
            if acted.support().is_empty() {
                continue;
            }
            let up = dual_along_q(&acted)?;
            for z in 0..vidx.len() {
                if !transferred.contains(z) {
                    leak = leak.max(up.rep().at_flat(z).norm());
                }
            }
        }
        if leak == 0.0 {
            kept_back.push(y);
        }
        if x_support.contains(y) {
            max_leak = max_leak.max(leak);
        }
    }
    let roundtrip = ClosedSet::from_flats(group, n, kept_back)?;

    Ok(SubmoduleTransfer {
        transferred,
        roundtrip,
        max_leak,
    })
}

/// Matrix components of `ω` against an irrep:
/// `ω^π(x⃗) = (1/|G|) Σ_x ω(x⃗·x) π(x)` and the invariant form
/// `ω̃^π(x⃗) = π(x₁) ω^π(x⃗)`. The invariant form is stored once per
/// right-diagonal orbit, so its invariance is bit-exact, and `ω^π` is always
/// read back through the exact reconstruction `π(x₁)^* ω̃^π(x⃗)`.
#[derive(Clone, Debug)]
pub struct OmegaPi {
    group: Arc<FiniteGroup>,
    arity: usize,
    dim: usize,
    mats: Vec<CMat>,
    tilde: Vec<CMat>,
}

impl OmegaPi {
    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn first_coordinate(&self, flat: usize) -> usize {
        let stride = TupleIndex::new(self.group.order(), self.arity - 1).len();
        flat / stride
    }

    /// `ω̃^π` at a flat tuple index.
    pub fn tilde_at(&self, flat: usize) -> &CMat {
        &self.tilde[flat]
    }

    /// `ω^π(x⃗) = π(x₁)^* ω̃^π(x⃗)`.
    pub fn omega_at(&self, flat: usize) -> CMat {
        self.mats[self.first_coordinate(flat)].adjoint() * &self.tilde[flat]
    }

    /// Entry `(i,j)` of `ω̃^π` as an element of V^n(G); exactly invariant.
    pub fn tilde_entry(&self, i: usize, j: usize) -> Result<VFn> {
        if i >= self.dim || j >= self.dim {
            return Err(Error::IndexOutOfRange(format!(
                "entry ({i},{j}) of a {0}×{0} component",
                self.dim
            )));
        }
        let values = MultiFn::new(
            self.group.clone(),
            self.arity,
            self.tilde.iter().map(|m| m[(i, j)]).collect(),
        )?;
        VFn::new(values)
    }

    /// Entry `(i,j)` of the reconstructed `ω^π`.
    pub fn omega_entry(&self, i: usize, j: usize) -> Result<MultiFn> {
        if i >= self.dim || j >= self.dim {
            return Err(Error::IndexOutOfRange(format!(
                "entry ({i},{j}) of a {0}×{0} component",
                self.dim
            )));
        }
        let values = (0..self.tilde.len())
            .map(|f| self.omega_at(f)[(i, j)])
            .collect();
        MultiFn::new(self.group.clone(), self.arity, values)
    }
}

/// Builds the matrix components of `ω` against `π`. A constant orbit under
/// an exactly trivial irrep passes its value through untouched, matching the
/// orbit average bit for bit.
pub fn omega_pi(w: &VFn, pi: &Irrep) -> Result<OmegaPi> {
    let group = w.group().clone();
    let q = group.order();
    if pi.matrices.len() != q {
        return Err(Error::ShapeMismatch(format!(
            "{} representation matrices on a group of order {q}",
            pi.matrices.len()
        )));
    }
    if pi.dim == 0
        || pi
            .matrices
            .iter()
            .any(|m| m.nrows() != pi.dim || m.ncols() != pi.dim)
    {
        return Err(Error::ShapeMismatch(format!(
            "representation matrices do not all have the declared dimension {}",
            pi.dim
        )));
    }
    let m = w.arity();
    let idx = TupleIndex::new(q, m);
    let head_idx = TupleIndex::new(q, m - 1);
    let inv_q = 1.0 / q as f64;
    let trivial = pi.dim == 1 && (0..q).all(|x| pi.mat(x)[(0, 0)] == cx(1.0, 0.0));

    let mut tilde = vec![CMat::zeros(pi.dim, pi.dim); idx.len()];
    for head in head_idx.iter() {
        let flats = orbit_flats(&group, &idx, &head);
        let orbit: Vec<c64> = flats.iter().map(|&f| w.values().at_flat(f)).collect();
        let first = orbit[0];
        let component = if trivial && orbit.iter().all(|&v| v == first) {
            CMat::from_element(1, 1, first)
        } else {
            let mut acc = CMat::zeros(pi.dim, pi.dim);
            for (x, &v) in orbit.iter().enumerate() {
                acc += pi.mat(x) * v;
            }
            acc * cx(inv_q, 0.0)
        };
        let invariant = if trivial {
            component
        } else {
            pi.mat(head[0]) * component
        };
        for &f in &flats {
            tilde[f] = invariant.clone();
        }
    }
    Ok(OmegaPi {
        group,
        arity: m,
        dim: pi.dim,
        mats: pi.matrices.clone(),
        tilde,
    })
}

/// `Σ_π d_π tr(π(x₁)^* ω̃^π(x⃗))` over the whole dual, which recovers `ω`
/// at the dual's numerical accuracy.
pub fn omega_pi_resynthesis(w: &VFn, dual: &GroupDual) -> Result<MultiFn> {
    if !dual.group().same_group(w.group()) {
        return Err(Error::GroupMismatch);
    }
    let group = w.group().clone();
    let total = TupleIndex::new(group.order(), w.arity()).len();
    let mut values = vec![cx(0.0, 0.0); total];
    for irrep in dual.irreps() {
        let comp = omega_pi(w, irrep)?;
        let weight = cx(irrep.dim as f64, 0.0);
        for (flat, acc) in values.iter_mut().enumerate() {
            *acc += weight * comp.omega_at(flat).trace();
        }
    }
    MultiFn::new(group, w.arity(), values)
}

/// The canonical identity witnesses for a zero set: `u = 1 − χ_E` acts as
/// the identity on `I_A(E)`, its transfer `N(u) = 1 − χ_{E*}` on
/// `I_V(E*)`, and the `Q`-pullback of the starred ideal's basis lands back
/// in `j_A(E)`, each checked exactly.
#[derive(Clone, Debug)]
pub struct DitkinReport {
    /// Sup over the `I_A(E)` point-mass basis of `‖u·v − v‖_∞`.
    pub forward_max_dev: f64,
    /// Sup over the `I_V(E*)` point-mass basis of `‖N(u)·ω − ω‖_∞`.
    pub transferred_max_dev: f64,
    /// Sup over the same basis of `|Q(ω)|` on `E`.
    pub pullback_max_on_e: f64,
    /// `N(1 − χ_E)` and `1 − χ_{E*}` agree bit for bit.
    pub reindex_exact: bool,
}

pub fn ditkin_transfer(e: &ClosedSet) -> Result<(AFn, VFn, DitkinReport)> {
    let n = e.arity();
    if n == 0 {
        return Err(Error::ArityMismatch(
            "a Ditkin zero set needs arity at least one".into(),
        ));
    }
    let group = e.group().clone();
    let star = e_star(e);

    let one_minus = |set: &ClosedSet| {
        let total = TupleIndex::new(group.order(), set.arity()).len();
        let mut values = vec![cx(1.0, 0.0); total];
        for &f in set.flats() {
            values[f] = cx(0.0, 0.0);
        }
        MultiFn::new(group.clone(), set.arity(), values).unwrap()
    };
    let u = AFn::new(one_minus(e))?;
    let nu = n_map(&u);
    let reindex_exact = nu.values().bit_eq(&one_minus(&star));

    let mut forward_max_dev = 0.0f64;
    for &t in &e.complement() {
        let idx = TupleIndex::new(group.order(), n);
        let v = MultiFn::delta(group.clone(), &idx.from_flat(t)?)?;
        forward_max_dev = forward_max_dev.max(u.fun().mul(&v)?.sub(&v)?.sup_norm());
    }

    let mut transferred_max_dev = 0.0f64;
    let mut pullback_max_on_e = 0.0f64;
    let star_idx = TupleIndex::new(group.order(), n + 1);
    for &z in &star.complement() {
        let omega = MultiFn::delta(group.clone(), &star_idx.from_flat(z)?)?;
        transferred_max_dev =
            transferred_max_dev.max(nu.values().mul(&omega)?.sub(&omega)?.sup_norm());
        let pulled = q_map(&VFn::new(omega)?);
        for &f in e.flats() {
            pullback_max_on_e = pullback_max_on_e.max(pulled.fun().at_flat(f).norm());
        }
    }

    Ok((
        u,
        nu,
        DitkinReport {
            forward_max_dev,
            transferred_max_dev,
            pullback_max_on_e,
            reindex_exact,
        },
    ))
}
