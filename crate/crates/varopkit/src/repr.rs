//! Numerical unitary dual of a finite group and the Fourier transform pair.
//!
//! The dual is computed from the left regular representation
//! `λ(x)δ_g = δ_{xg}` by randomized commutant averaging: a random Hermitian
//! matrix is averaged over the representation, its eigenspaces split the
//! carrier space into invariant subspaces, and subspaces are recursed until
//! the restricted character has norm one. Restricting through orthonormal
//! bases keeps every irrep unitary for free.
//!
//! Conventions, used verbatim by every downstream module:
//!
//! - `û(π) = (1/|G|) Σ_x u(x) π(x)^*`
//! - `u(x) = Σ_π d_π tr(û(π) π(x))`
//! - Parseval: `⟨u, v⟩ = Σ_π d_π tr(û(π) v̂(π)^*)` for the normalized pairing.

use crate::group::FiniteGroup;
use crate::la::{self, CMat, CVec};
use crate::multifn::MultiFn;
use crate::{c64, cx, Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// `‖χ‖² − 1` threshold below which a restricted representation is accepted
/// as irreducible.
pub const IRREDUCIBLE_TOL: f64 = 1e-6;
/// Eigenvalue gap that separates clusters of the averaged Hermitian.
const CLUSTER_GAP: f64 = 1e-8;
/// Characters closer than this (sup over the group) denote equivalent irreps.
const CHARACTER_MATCH_TOL: f64 = 1e-6;
/// Random restarts before conceding an eigenvalue-clustering failure.
const SPLIT_RESTARTS: usize = 5;

/// One unitary irreducible representation: a matrix per group element.
#[derive(Clone, Debug)]
pub struct Irrep {
    pub dim: usize,
    pub matrices: Vec<CMat>,
    pub character: Vec<c64>,
}

impl Irrep {
    pub fn mat(&self, x: usize) -> &CMat {
        &self.matrices[x]
    }
}

/// The full dual: one representative per equivalence class, ordered by
/// dimension and then lexicographically by character.
#[derive(Clone, Debug)]
pub struct GroupDual {
    group: Arc<FiniteGroup>,
    irreps: Vec<Irrep>,
    seed: u64,
}

impl GroupDual {
    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn irreps(&self) -> &[Irrep] {
        &self.irreps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.irreps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.irreps.is_empty()
    }

    /// Index of the trivial representation.
    pub fn trivial_index(&self) -> usize {
        self.irreps
            .iter()
            .position(|p| {
                p.dim == 1 && p.character.iter().all(|c| (c - cx(1.0, 0.0)).norm() < 1e-8)
            })
            .expect("dual always contains the trivial representation")
    }
}

/// Left regular representation: permutation matrices
/// `(λ(x))_{t,m} = [t = x·m]`.
pub fn regular_rep(group: &FiniteGroup) -> Vec<CMat> {
    let n = group.order();
    (0..n)
        .map(|x| {
            let mut m = CMat::zeros(n, n);
            for g in 0..n {
                m[(group.mul(x, g), g)] = cx(1.0, 0.0);
            }
            m
        })
        .collect()
}

/// Left translation `(λ(x)f)(y) = f(x⁻¹ y)` of a one-variable function.
pub fn left_translate(f: &MultiFn, x: usize) -> Result<MultiFn> {
    if f.arity() != 1 {
        return Err(Error::ArityMismatch(format!(
            "left_translate expects arity 1, got {}",
            f.arity()
        )));
    }
    let g = f.group().clone();
    let xi = g.inv(x);
    Ok(MultiFn::from_fn(g.clone(), 1, |t| {
        f.at_flat(g.mul(xi, t[0]))
    }))
}

/// `(1/|G|) Σ_x f(x) λ(x)`, the regular representation of a density.
pub fn lambda_avg(f: &MultiFn) -> Result<CMat> {
    if f.arity() != 1 {
        return Err(Error::ArityMismatch(format!(
            "lambda_avg expects arity 1, got {}",
            f.arity()
        )));
    }
    let g = f.group();
    let n = g.order();
    let mut m = CMat::zeros(n, n);
    for x in 0..n {
        let w = f.at_flat(x) / cx(n as f64, 0.0);
        if w.norm() == 0.0 {
            continue;
        }
        for t in 0..n {
            m[(g.mul(x, t), t)] += w;
        }
    }
    Ok(m)
}

/// Computes the unitary dual. Deterministic given `seed`; fails with
/// [`Error::NumericalDegeneracy`] only if repeated random averaging cannot
/// separate an invariant subspace.
pub fn compute_dual(group: &Arc<FiniteGroup>, seed: u64) -> Result<GroupDual> {
    let n = group.order();
    let lambda = regular_rep(group);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7661726f706b6974);
    let mut found: Vec<Irrep> = Vec::new();
    split_subspace(group, &lambda, CMat::identity(n, n), &mut rng, &mut found)?;

    // The regular representation contains each class d_π times; keep one
    // representative per character.
    let mut classes: Vec<Irrep> = Vec::new();
    for cand in found {
        let duplicate = classes.iter().any(|kept| {
            kept.dim == cand.dim
                && kept
                    .character
                    .iter()
                    .zip(&cand.character)
                    .all(|(a, b)| (a - b).norm() < CHARACTER_MATCH_TOL)
        });
        if !duplicate {
            classes.push(cand);
        }
    }

    classes.sort_by(|a, b| {
        a.dim.cmp(&b.dim).then_with(|| {
            for (ca, cb) in a.character.iter().zip(&b.character) {
                // characters are accurate to ~1e-12; snap to a coarse grid so
                // the order cannot flip between runs
                let ra = (ca.re * 1e8).round();
                let rb = (cb.re * 1e8).round();
                if ra != rb {
                    return ra.total_cmp(&rb);
                }
                let ia = (ca.im * 1e8).round();
                let ib = (cb.im * 1e8).round();
                if ia != ib {
                    return ia.total_cmp(&ib);
                }
            }
            std::cmp::Ordering::Equal
        })
    });

    let sum_sq: usize = classes.iter().map(|p| p.dim * p.dim).sum();
    if sum_sq != n {
        return Err(Error::NumericalDegeneracy(SPLIT_RESTARTS));
    }

    Ok(GroupDual {
        group: group.clone(),
        irreps: classes,
        seed,
    })
}

fn split_subspace(
    group: &Arc<FiniteGroup>,
    lambda: &[CMat],
    basis: CMat,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<Irrep>,
) -> Result<()> {
    let n = group.order() as f64;
    let d = basis.ncols();
    let restricted: Vec<CMat> = lambda.iter().map(|l| basis.adjoint() * l * &basis).collect();
    let character: Vec<c64> = restricted.iter().map(|m| m.trace()).collect();
    let chi_norm2 = character.iter().map(|c| c.norm_sqr()).sum::<f64>() / n;
    if (chi_norm2 - 1.0).abs() < IRREDUCIBLE_TOL {
        out.push(Irrep {
            dim: d,
            matrices: restricted,
            character,
        });
        return Ok(());
    }

    for _ in 0..SPLIT_RESTARTS {
        let h0 = la::randn_cmat(d, d, rng);
        let h0 = (&h0 + h0.adjoint()).scale(0.5);
        let mut avg = CMat::zeros(d, d);
        for m in &restricted {
            avg += m * &h0 * m.adjoint();
        }
        avg /= cx(n, 0.0);
        let (vals, vecs) = la::hermitian_eigen(&avg);

        let mut cluster_bounds = vec![0];
        for i in 1..vals.len() {
            if vals[i] - vals[i - 1] > CLUSTER_GAP {
                cluster_bounds.push(i);
            }
        }
        cluster_bounds.push(vals.len());
        if cluster_bounds.len() <= 2 {
            continue; // single cluster: this H separated nothing, redraw
        }
        for w in cluster_bounds.windows(2) {
            let (start, end) = (w[0], w[1]);
            let sub = vecs.columns(start, end - start).into_owned();
            split_subspace(group, lambda, &basis * sub, rng, out)?;
        }
        return Ok(());
    }
    Err(Error::NumericalDegeneracy(SPLIT_RESTARTS))
}

/// Largest deviation of the dual from exact unitarity and multiplicativity:
/// `max(‖π(x)π(x)^* − I‖, ‖π(x)π(y) − π(xy)‖)` over all irreps, in sup norm
/// of matrix entries.
pub fn dual_residual(dual: &GroupDual) -> f64 {
    let g = dual.group();
    let mut worst = 0.0f64;
    for p in dual.irreps() {
        let eye = CMat::identity(p.dim, p.dim);
        for x in g.elements() {
            let dev = la::entry_sup(&(p.mat(x) * p.mat(x).adjoint() - &eye));
            worst = worst.max(dev);
            for y in g.elements() {
                let dev = la::entry_sup(&(p.mat(x) * p.mat(y) - p.mat(g.mul(x, y))));
                worst = worst.max(dev);
            }
        }
    }
    worst
}

/// Largest deviation from the Schur orthogonality relations
/// `(1/|G|) Σ_x π_{ij}(x) conj(σ_{kl}(x)) = δ_{πσ} δ_{ik} δ_{jl} / d_π`.
pub fn schur_orthogonality_residual(dual: &GroupDual) -> f64 {
    let g = dual.group();
    let n = g.order() as f64;
    let mut worst = 0.0f64;
    for (a, pa) in dual.irreps().iter().enumerate() {
        for (b, pb) in dual.irreps().iter().enumerate() {
            for i in 0..pa.dim {
                for j in 0..pa.dim {
                    for k in 0..pb.dim {
                        for l in 0..pb.dim {
                            let mut s = cx(0.0, 0.0);
                            for x in g.elements() {
                                s += pa.mat(x)[(i, j)] * pb.mat(x)[(k, l)].conj();
                            }
                            s /= cx(n, 0.0);
                            let target = if a == b && i == k && j == l {
                                cx(1.0 / pa.dim as f64, 0.0)
                            } else {
                                cx(0.0, 0.0)
                            };
                            worst = worst.max((s - target).norm());
                        }
                    }
                }
            }
        }
    }
    worst
}

/// `û(π) = (1/|G|) Σ_x u(x) π(x)^*`.
pub fn fourier_coefficient(u: &MultiFn, irrep: &Irrep) -> Result<CMat> {
    if u.arity() != 1 {
        return Err(Error::ArityMismatch(format!(
            "fourier_coefficient expects arity 1, got {}",
            u.arity()
        )));
    }
    let n = u.group().order();
    let mut m = CMat::zeros(irrep.dim, irrep.dim);
    for x in 0..n {
        let w = u.at_flat(x);
        if w.norm() == 0.0 {
            continue;
        }
        m += irrep.mat(x).adjoint().scale_complex(w);
    }
    Ok(m / cx(n as f64, 0.0))
}

/// `(1/|G|) Σ_x u(x) π(x)` — the un-starred average, used when solving for
/// witnesses.
pub fn rep_average(u: &MultiFn, irrep: &Irrep) -> Result<CMat> {
    if u.arity() != 1 {
        return Err(Error::ArityMismatch(format!(
            "rep_average expects arity 1, got {}",
            u.arity()
        )));
    }
    let n = u.group().order();
    let mut m = CMat::zeros(irrep.dim, irrep.dim);
    for x in 0..n {
        let w = u.at_flat(x);
        if w.norm() == 0.0 {
            continue;
        }
        m += irrep.mat(x).scale_complex(w);
    }
    Ok(m / cx(n as f64, 0.0))
}

pub fn fourier_transform(u: &MultiFn, dual: &GroupDual) -> Result<Vec<CMat>> {
    if !u.group().same_group(dual.group()) {
        return Err(Error::GroupMismatch);
    }
    dual.irreps()
        .iter()
        .map(|p| fourier_coefficient(u, p))
        .collect()
}

/// `u(x) = Σ_π d_π tr(û(π) π(x))`.
pub fn inverse_fourier(coeffs: &[CMat], dual: &GroupDual) -> Result<MultiFn> {
    if coeffs.len() != dual.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} coefficient blocks for {} irreps",
            coeffs.len(),
            dual.len()
        )));
    }
    for (c, p) in coeffs.iter().zip(dual.irreps()) {
        if c.nrows() != p.dim || c.ncols() != p.dim {
            return Err(Error::ShapeMismatch(format!(
                "coefficient block {}×{} for an irrep of dimension {}",
                c.nrows(),
                c.ncols(),
                p.dim
            )));
        }
    }
    let g = dual.group().clone();
    Ok(MultiFn::from_fn(g, 1, |t| {
        let x = t[0];
        let mut s = cx(0.0, 0.0);
        for (c, p) in coeffs.iter().zip(dual.irreps()) {
            s += (c * p.mat(x)).trace() * cx(p.dim as f64, 0.0);
        }
        s
    }))
}

/// Spectral projection onto the irreps listed in `keep`: all other Fourier
/// blocks are zeroed and the function resynthesized.
pub fn project_band(u: &MultiFn, dual: &GroupDual, keep: &[usize]) -> Result<MultiFn> {
    for &i in keep {
        if i >= dual.len() {
            return Err(Error::BadDualIndex(i, dual.len()));
        }
    }
    let mut coeffs = fourier_transform(u, dual)?;
    for (i, c) in coeffs.iter_mut().enumerate() {
        if !keep.contains(&i) {
            c.fill(cx(0.0, 0.0));
        }
    }
    inverse_fourier(&coeffs, dual)
}

/// Matrix coefficient `x ↦ ⟨π(x)u, v⟩ = v^H π(x) u`.
pub fn coefficient_function(
    group: &Arc<FiniteGroup>,
    irrep: &Irrep,
    u: &CVec,
    v: &CVec,
) -> Result<MultiFn> {
    if u.len() != irrep.dim || v.len() != irrep.dim {
        return Err(Error::ShapeMismatch(format!(
            "coefficient vectors of length {}/{} for an irrep of dimension {}",
            u.len(),
            v.len(),
            irrep.dim
        )));
    }
    Ok(MultiFn::from_fn(group.clone(), 1, |t| {
        (v.adjoint() * irrep.mat(t[0]) * u)[(0, 0)]
    }))
}

trait ScaleComplex {
    fn scale_complex(&self, w: c64) -> CMat;
}

impl ScaleComplex for CMat {
    fn scale_complex(&self, w: c64) -> CMat {
        self.map(|e| e * w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{build_group, GroupDescriptor};
    use crate::multifn::haar_pair;
    use rand::SeedableRng;

    fn dual_of(d: GroupDescriptor) -> GroupDual {
        let g = Arc::new(build_group(&d).unwrap());
        compute_dual(&g, 0).unwrap()
    }

    fn dims(dual: &GroupDual) -> Vec<usize> {
        dual.irreps().iter().map(|p| p.dim).collect()
    }

    #[test]
    fn regular_rep_permutes_deltas() {
        let g = build_group(&GroupDescriptor::Symmetric { n: 3 }).unwrap();
        let lam = regular_rep(&g);
        for x in g.elements() {
            for m in g.elements() {
                for t in g.elements() {
                    let expect = if t == g.mul(x, m) { 1.0 } else { 0.0 };
                    assert_eq!(lam[x][(t, m)], cx(expect, 0.0));
                }
            }
        }
        // homomorphism
        for x in g.elements() {
            for y in g.elements() {
                assert_eq!(&lam[x] * &lam[y], lam[g.mul(x, y)]);
            }
        }
    }

    #[test]
    fn known_irrep_dimensions() {
        assert_eq!(dims(&dual_of(GroupDescriptor::Cyclic { n: 4 })), [1, 1, 1, 1]);
        assert_eq!(dims(&dual_of(GroupDescriptor::Symmetric { n: 3 })), [1, 1, 2]);
        assert_eq!(
            dims(&dual_of(GroupDescriptor::Dihedral { n: 4 })),
            [1, 1, 1, 1, 2]
        );
        assert_eq!(
            dims(&dual_of(GroupDescriptor::Quaternion8)),
            [1, 1, 1, 1, 2]
        );
        assert_eq!(
            dims(&dual_of(GroupDescriptor::Symmetric { n: 4 })),
            [1, 1, 2, 3, 3]
        );
    }

    #[test]
    fn class_count_and_peter_weyl() {
        for d in [
            GroupDescriptor::Cyclic { n: 6 },
            GroupDescriptor::Dihedral { n: 4 },
            GroupDescriptor::Quaternion8,
            GroupDescriptor::Symmetric { n: 4 },
            GroupDescriptor::Product {
                factors: vec![
                    GroupDescriptor::Cyclic { n: 2 },
                    GroupDescriptor::Symmetric { n: 3 },
                ],
            },
        ] {
            let g = Arc::new(build_group(&d).unwrap());
            let dual = compute_dual(&g, 0).unwrap();
            let sum_sq: usize = dual.irreps().iter().map(|p| p.dim.pow(2)).sum();
            assert_eq!(sum_sq, g.order(), "{d}");
            assert_eq!(dual.len(), g.conjugacy_classes().len(), "{d}");
            assert!(dual_residual(&dual) < 1e-10, "{d}");
        }
    }

    #[test]
    fn character_orthonormality() {
        let dual = dual_of(GroupDescriptor::Quaternion8);
        let n = dual.group().order() as f64;
        for (a, pa) in dual.irreps().iter().enumerate() {
            for (b, pb) in dual.irreps().iter().enumerate() {
                let mut s = cx(0.0, 0.0);
                for x in 0..dual.group().order() {
                    s += pa.character[x] * pb.character[x].conj();
                }
                s /= cx(n, 0.0);
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((s - cx(target, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn schur_orthogonality_small_groups() {
        for d in [
            GroupDescriptor::Symmetric { n: 3 },
            GroupDescriptor::Quaternion8,
        ] {
            assert!(schur_orthogonality_residual(&dual_of(d)) < 1e-8);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let g = Arc::new(build_group(&GroupDescriptor::Dihedral { n: 3 }).unwrap());
        let d1 = compute_dual(&g, 42).unwrap();
        let d2 = compute_dual(&g, 42).unwrap();
        for (p, q) in d1.irreps().iter().zip(d2.irreps()) {
            assert_eq!(p.dim, q.dim);
            for (a, b) in p.matrices.iter().zip(&q.matrices) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn fourier_roundtrip_and_parseval() {
        let g = Arc::new(build_group(&GroupDescriptor::Symmetric { n: 3 }).unwrap());
        let dual = compute_dual(&g, 0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let u = MultiFn::random(g.clone(), 1, &mut rng);
        let v = MultiFn::random(g.clone(), 1, &mut rng);

        let hat = fourier_transform(&u, &dual).unwrap();
        let back = inverse_fourier(&hat, &dual).unwrap();
        assert!(u.max_deviation(&back).unwrap() < 1e-12);

        let vhat = fourier_transform(&v, &dual).unwrap();
        let mut pairing = cx(0.0, 0.0);
        for ((a, b), p) in hat.iter().zip(&vhat).zip(dual.irreps()) {
            pairing += (a * b.adjoint()).trace() * cx(p.dim as f64, 0.0);
        }
        assert!((pairing - haar_pair(&u, &v).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn translate_twists_by_adjoint() {
        let g = Arc::new(build_group(&GroupDescriptor::Quaternion8).unwrap());
        let dual = compute_dual(&g, 0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let u = MultiFn::random(g.clone(), 1, &mut rng);
        let x = 3;
        let shifted = left_translate(&u, x).unwrap();
        for p in dual.irreps() {
            let lhs = fourier_coefficient(&shifted, p).unwrap();
            let rhs = fourier_coefficient(&u, p).unwrap() * p.mat(x).adjoint();
            assert!(la::fro_dist(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn delta_at_identity_transforms_to_scaled_identity() {
        let g = Arc::new(build_group(&GroupDescriptor::Dihedral { n: 4 }).unwrap());
        let dual = compute_dual(&g, 0).unwrap();
        let de = MultiFn::delta(g.clone(), &[0]).unwrap();
        for p in dual.irreps() {
            let hat = fourier_coefficient(&de, p).unwrap();
            let expect = CMat::identity(p.dim, p.dim) / cx(g.order() as f64, 0.0);
            assert!(la::fro_dist(&hat, &expect) < 1e-14);
        }
    }

    #[test]
    fn trivial_band_projection_is_the_mean() {
        let g = Arc::new(build_group(&GroupDescriptor::Symmetric { n: 3 }).unwrap());
        let dual = compute_dual(&g, 0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let u = MultiFn::random(g.clone(), 1, &mut rng);
        let t = dual.trivial_index();
        let proj = project_band(&u, &dual, &[t]).unwrap();
        let mean: c64 = u.values().iter().sum::<c64>() / cx(g.order() as f64, 0.0);
        for &v in proj.values() {
            assert!((v - mean).norm() < 1e-12);
        }
        let all: Vec<usize> = (0..dual.len()).collect();
        let full = project_band(&u, &dual, &all).unwrap();
        assert!(u.max_deviation(&full).unwrap() < 1e-12);
        assert!(matches!(
            project_band(&u, &dual, &[99]),
            Err(Error::BadDualIndex(99, _))
        ));
    }

    #[test]
    fn coefficient_functions_span_translates() {
        let g = Arc::new(build_group(&GroupDescriptor::Symmetric { n: 3 }).unwrap());
        let dual = compute_dual(&g, 0).unwrap();
        let p = &dual.irreps()[2];
        let e0 = CVec::from_fn(p.dim, |i, _| if i == 0 { cx(1.0, 0.0) } else { cx(0.0, 0.0) });
        let e1 = CVec::from_fn(p.dim, |i, _| if i == 1 { cx(1.0, 0.0) } else { cx(0.0, 0.0) });
        let f = coefficient_function(&g, p, &e0, &e1).unwrap();
        for x in g.elements() {
            assert_eq!(f.at_flat(x), p.mat(x)[(1, 0)]);
        }
    }
}
