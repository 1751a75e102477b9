//! Dense complex linear algebra helpers shared by the solvers.
//!
//! nalgebra's complex SVD can silently converge to a wrong decomposition on
//! exactly degenerate inputs (repeated singular values produced by highly
//! symmetric matrices). Everything here therefore goes through
//! [`svd_checked`], which validates the reconstruction residual and factor
//! orthonormality, retries with a tiny deterministic perturbation when the
//! check fails, and reports the final residuals. Certificate code uses those
//! residuals to widen bounds by a provably sufficient slack instead of
//! trusting the decomposition blindly.

use crate::{c64, cx};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub type CMat = DMatrix<c64>;
pub type CVec = DVector<c64>;

/// Standard complex Gaussian: real and imaginary parts `N(0, 1/2)`, so
/// `E|z|² = 1`.
pub fn randn_c(rng: &mut impl Rng) -> c64 {
    // Box–Muller; avoids a distributions dependency for one primitive.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (-u1.ln()).sqrt();
    cx(r * u2.cos(), r * u2.sin())
}

pub fn randn_cvec(n: usize, rng: &mut impl Rng) -> CVec {
    CVec::from_fn(n, |_, _| randn_c(rng))
}

pub fn randn_cmat(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| randn_c(rng))
}

/// Haar-ish random unitary: QR of a Gaussian matrix with the phase fixed so
/// the result is deterministic in the input.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> CMat {
    let qr = randn_cmat(n, n, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / cx(d.norm(), 0.0);
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Deterministic full-entry perturbation used to break exact degeneracies.
fn jitter(rows: usize, cols: usize, scale: f64, salt: u64) -> CMat {
    let mut state = salt
        .wrapping_mul(0x9E3779B97F4A7C15)
        .wrapping_add(0x243F6A8885A308D3);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * scale
    };
    CMat::from_fn(rows, cols, |_, _| cx(next(), next()))
}

/// A validated singular value decomposition `M ≈ U diag(σ) Vᵗ` with `σ`
/// descending. `resid` and `orth` measure, against the *original* input, how
/// far the returned factors are from an exact decomposition; [`Self::delta_f`]
/// turns them into a Frobenius bound usable for sound norm slack.
pub struct SvdChecked {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub vt: CMat,
    /// `‖U diag(σ) Vᵗ − M‖_F`
    pub resid: f64,
    /// `‖UʰU − I‖_F + ‖VᵗVᵗʰ − I‖_F`
    pub orth: f64,
}

impl SvdChecked {
    /// Frobenius distance from `M` to the nearest matrix that has *exactly*
    /// the returned singular values: `σ` are the exact singular values of some
    /// `M̃` with `‖M − M̃‖_F ≤ delta_f()`.
    pub fn delta_f(&self) -> f64 {
        let sigma1 = self.sigma.first().copied().unwrap_or(0.0);
        self.resid + 1.1 * sigma1 * self.orth
    }

    /// Certified `[lo, hi]` enclosure of the operator norm of the input.
    pub fn op_bounds(&self) -> (f64, f64) {
        let sigma1 = self.sigma.first().copied().unwrap_or(0.0);
        let d = self.delta_f();
        ((sigma1 - d).max(0.0), sigma1 + d)
    }

    /// Certified `[lo, hi]` enclosure of the trace norm of the input.
    pub fn trace_bounds(&self) -> (f64, f64) {
        let total: f64 = self.sigma.iter().sum();
        let d = (self.sigma.len() as f64).sqrt() * self.delta_f();
        ((total - d).max(0.0), total + d)
    }
}

/// SVD with validation and deterministic-jitter retries. Always returns the
/// attempt with the smallest reconstruction residual.
pub fn svd_checked(m: &CMat) -> SvdChecked {
    let (rows, cols) = (m.nrows(), m.ncols());
    let k = rows.min(cols);
    if rows == 0 || cols == 0 {
        return SvdChecked {
            u: CMat::zeros(rows, 0),
            sigma: Vec::new(),
            vt: CMat::zeros(0, cols),
            resid: 0.0,
            orth: 0.0,
        };
    }
    let fro = m.norm();
    let accept_resid = 1e-11 * (1.0 + fro);
    let mut best: Option<SvdChecked> = None;
    for attempt in 0..5u32 {
        let probe = if attempt == 0 {
            m.clone()
        } else {
            let scale = fro.max(f64::MIN_POSITIVE) * 1e-13 * 3f64.powi(attempt as i32 - 1);
            m + jitter(rows, cols, scale, attempt as u64)
        };
        let svd = probe.svd(true, true);
        let u = svd.u.expect("svd requested u");
        let vt = svd.v_t.expect("svd requested v_t");
        let mut sigma: Vec<f64> = svd.singular_values.iter().copied().collect();

        // nalgebra sorts descending; enforce it defensively
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
        let (u, vt) = if order.iter().enumerate().any(|(i, &o)| i != o) {
            let pu = CMat::from_fn(rows, k, |r, c| u[(r, order[c])]);
            let pv = CMat::from_fn(k, cols, |r, c| vt[(order[r], c)]);
            sigma = order.iter().map(|&o| sigma[o]).collect();
            (pu, pv)
        } else {
            (u, vt)
        };

        let sd = CMat::from_fn(k, k, |i, j| if i == j { cx(sigma[i], 0.0) } else { cx(0.0, 0.0) });
        let resid = (&u * &sd * &vt - m).norm();
        let orth = (u.adjoint() * &u - CMat::identity(k, k)).norm()
            + (&vt * vt.adjoint() - CMat::identity(k, k)).norm();
        let cand = SvdChecked {
            u,
            sigma,
            vt,
            resid,
            orth,
        };
        let ok = cand.resid <= accept_resid && cand.orth <= 1e-10;
        let better = best
            .as_ref()
            .map(|b| cand.resid + fro * cand.orth < b.resid + fro * b.orth)
            .unwrap_or(true);
        if better {
            best = Some(cand);
        }
        if ok {
            break;
        }
    }
    best.unwrap()
}

/// `M = U diag(σ) Vʰ` with `σ` descending (validated, see [`svd_checked`]).
pub fn svd_parts(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let s = svd_checked(m);
    (s.u, s.sigma, s.vt)
}

/// Certified enclosure of the operator norm.
pub fn op_norm_bounds(m: &CMat) -> (f64, f64) {
    svd_checked(m).op_bounds()
}

/// Best available point value of the operator norm (use [`op_norm_bounds`]
/// when the direction of the error matters).
pub fn op_norm(m: &CMat) -> f64 {
    svd_checked(m).sigma.first().copied().unwrap_or(0.0)
}

/// Certified enclosure of the trace norm.
pub fn trace_norm_bounds(m: &CMat) -> (f64, f64) {
    svd_checked(m).trace_bounds()
}

pub fn trace_norm(m: &CMat) -> f64 {
    svd_checked(m).sigma.iter().sum()
}

/// Eigen-decomposition of a (numerically) Hermitian matrix; the input is
/// symmetrized first. Returns eigenvalues ascending with matching columns,
/// validated the same way as [`svd_checked`].
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()).scale(0.5);
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let fro = h.norm();
    let accept = 1e-10 * (1.0 + fro);
    let mut best: Option<(Vec<f64>, CMat, f64)> = None;
    for attempt in 0..5u32 {
        let probe = if attempt == 0 {
            h.clone()
        } else {
            let scale = fro.max(f64::MIN_POSITIVE) * 1e-13 * 3f64.powi(attempt as i32 - 1);
            let e = jitter(n, n, scale, 0x4845_5247 + attempt as u64);
            &h + (&e + e.adjoint()).scale(0.5)
        };
        let eig = nalgebra::SymmetricEigen::new(probe);
        let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = CMat::from_fn(n, idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
        let lam = CMat::from_fn(n, n, |i, j| if i == j { cx(vals[i], 0.0) } else { cx(0.0, 0.0) });
        let resid = (&h * &vecs - &vecs * &lam).norm()
            + (vecs.adjoint() * &vecs - CMat::identity(n, n)).norm() * fro;
        let better = best.as_ref().map(|(_, _, r)| resid < *r).unwrap_or(true);
        if better {
            best = Some((vals, vecs, resid));
        }
        if resid <= accept {
            break;
        }
    }
    let (vals, vecs, _) = best.unwrap();
    (vals, vecs)
}

/// Singular values below `rcond · σ_max` are treated as zero.
///
/// Minimum-norm solution of `min ‖Ax − b‖₂`. Returns `(x, ‖Ax − b‖₂)`.
pub fn lstsq_min_norm(a: &CMat, b: &CVec, rcond: f64) -> (CVec, f64) {
    if a.ncols() == 0 {
        let res = b.norm();
        return (CVec::zeros(0), res);
    }
    if a.nrows() == 0 {
        return (CVec::zeros(a.ncols()), 0.0);
    }
    let (u, sigma, vt) = svd_parts(a);
    let cutoff = rcond * sigma.first().copied().unwrap_or(0.0);
    let ub = u.adjoint() * b;
    let mut y = CVec::zeros(sigma.len());
    for (i, &s) in sigma.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            y[i] = ub[i] / cx(s, 0.0);
        }
    }
    let x = vt.adjoint() * y;
    let res = (a * &x - b).norm();
    (x, res)
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    let mut rho = 0;
    for (i, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if s - t > 0.0 {
            rho = i + 1;
            theta = t;
        }
    }
    if rho == 0 {
        return vec![1.0 / n as f64; n];
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Frobenius distance `‖A − B‖_F`.
pub fn fro_dist(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm()
}

/// Largest entry modulus `max |m_{ij}|`.
pub fn entry_sup(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn svd_reconstructs_and_sorts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = randn_cmat(5, 3, &mut rng);
        let (u, sigma, vt) = svd_parts(&m);
        for w in sigma.windows(2) {
            assert!(w[0] >= w[1]);
        }
        let rebuilt = &u * CMat::from_fn(sigma.len(), sigma.len(), |r, c| {
            if r == c {
                cx(sigma[r], 0.0)
            } else {
                cx(0.0, 0.0)
            }
        }) * &vt;
        assert!(fro_dist(&m, &rebuilt) < 1e-12);
        // U and V have orthonormal columns
        assert!(fro_dist(&(u.adjoint() * &u), &CMat::identity(3, 3)) < 1e-12);
        assert!(fro_dist(&(&vt * vt.adjoint()), &CMat::identity(3, 3)) < 1e-12);
    }

    #[test]
    fn svd_survives_exact_degeneracy() {
        // constant matrices trip nalgebra's with-vectors SVD; the checked
        // wrapper must recover the rank-one decomposition
        for m in 2..=8 {
            let j = CMat::from_element(m, m, cx(0.2, 0.0));
            let s = svd_checked(&j);
            assert!(s.resid < 1e-10, "m={m} resid {}", s.resid);
            assert!((s.sigma[0] - 0.2 * m as f64).abs() < 1e-9, "m={m}");
            let (lo, hi) = s.trace_bounds();
            assert!(lo <= 0.2 * m as f64 + 1e-9 && hi >= 0.2 * m as f64 - 1e-9);
            assert!(hi - lo < 1e-8);
        }
    }

    #[test]
    fn norms_on_known_matrices() {
        let m = CMat::from_row_slice(2, 2, &[cx(1.0, 0.0), cx(1.0, 0.0), cx(1.0, 0.0), cx(-1.0, 0.0)]);
        // singular values of [[1,1],[1,−1]] are (√2, √2)
        assert!((op_norm(&m) - 2f64.sqrt()).abs() < 1e-12);
        assert!((trace_norm(&m) - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        let (lo, hi) = op_norm_bounds(&m);
        assert!(lo <= 2f64.sqrt() && 2f64.sqrt() <= hi);
        assert!(hi - lo < 1e-10);
    }

    #[test]
    fn hermitian_eigen_matches_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = randn_cmat(4, 4, &mut rng);
        let h = &a + a.adjoint();
        let (vals, vecs) = hermitian_eigen(&h);
        for w in vals.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for (j, &val) in vals.iter().enumerate() {
            let v = vecs.column(j).into_owned();
            let hv = &h * &v;
            assert!((hv - v.scale(val)).norm() < 1e-10);
        }
        // degenerate input: the all-ones Hermitian matrix
        let ones = CMat::from_element(6, 6, cx(1.0, 0.0));
        let (vals, vecs) = hermitian_eigen(&ones);
        assert!((vals[5] - 6.0).abs() < 1e-9);
        assert!(fro_dist(&(vecs.adjoint() * &vecs), &CMat::identity(6, 6)) < 1e-9);
    }

    #[test]
    fn min_norm_least_squares() {
        // Rank-deficient system: A = [[1,0,0],[1,0,0]], b = (1,1): solutions
        // x = (1, s, t); minimum norm picks s = t = 0.
        let a = CMat::from_row_slice(
            2,
            3,
            &[
                cx(1.0, 0.0),
                cx(0.0, 0.0),
                cx(0.0, 0.0),
                cx(1.0, 0.0),
                cx(0.0, 0.0),
                cx(0.0, 0.0),
            ],
        );
        let b = CVec::from_vec(vec![cx(1.0, 0.0), cx(1.0, 0.0)]);
        let (x, res) = lstsq_min_norm(&a, &b, 1e-12);
        assert!(res < 1e-11);
        assert!((x[0] - cx(1.0, 0.0)).norm() < 1e-11);
        assert!(x[1].norm() < 1e-11 && x[2].norm() < 1e-11);
    }

    #[test]
    fn unitary_is_unitary_and_deterministic() {
        let u1 = random_unitary(6, &mut ChaCha8Rng::seed_from_u64(9));
        let u2 = random_unitary(6, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(u1, u2);
        assert!(fro_dist(&(u1.adjoint() * &u1), &CMat::identity(6, 6)) < 1e-12);
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.4, 0.3, 0.3]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[0] - 0.4).abs() < 1e-12);
        let q = project_simplex(&[2.0, -1.0]);
        assert!((q[0] - 1.0).abs() < 1e-12);
        assert!(q[1].abs() < 1e-12);
        assert!(q.iter().all(|&x| x >= 0.0));
    }
}
