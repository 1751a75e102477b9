//! Multidimensional Fourier and Varopoulos algebras on finite groups.
//!
//! Everything is computed over explicit multiplication tables with normalized
//! Haar measure `1/|G|`. The crate provides:
//!
//! - finite groups as tables, tuple indexing over `G^k`, Haar pairings ([`group`], [`multifn`]);
//! - the numerical unitary dual and the Fourier transform pair
//!   `û(π) = (1/|G|) Σ_x u(x) π(x)^*`, `u(x) = Σ_π d_π tr(û(π) π(x))` ([`repr`]);
//! - Fourier-algebra norms `‖u‖_A = Σ_π d_π ‖û(π)‖_{S¹}` and variational
//!   certificates for the multidimensional algebra `A^n(G)` ([`fourier`]);
//! - Haagerup-style factorizations of functions on `G^{n+1}` and the associated
//!   multilinear Schur multipliers ([`varopoulos`]);
//! - a self-contained certified engine for Schur-multiplier and multi-factor
//!   Haagerup norms, and the `φ_v` operator calculus ([`norm`]);
//! - the transfer maps `P^n`, `N^n`, `Q^n` between `A^n(G)` and the invariant
//!   part of `V^n(G)`, with ideal/synthesis bookkeeping ([`transfer`]);
//! - reproducible check suites behind the `varopkit` CLI ([`report`]).

pub mod group;
pub mod la;
pub mod multifn;
pub mod repr;

pub mod fourier;
pub mod norm;
pub mod transfer;
pub mod varopoulos;

pub mod report;

use thiserror::Error;

/// Complex double-precision scalar used throughout.
#[allow(non_camel_case_types)]
pub type c64 = num_complex::Complex<f64>;

/// Shorthand for `c64::new`.
#[inline]
pub fn cx(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported group descriptor: {0}")]
    UnsupportedDescriptor(String),
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("tuple index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("operands live over different groups")]
    GroupMismatch,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dual index {0} out of range ({1} irreps)")]
    BadDualIndex(usize, usize),
    #[error("eigenvalue clustering failed after {0} restarts")]
    NumericalDegeneracy(usize),
    #[error("operator dimensions do not chain: {0}")]
    DimMismatch(String),
    #[error("witness system infeasible: {0}")]
    Infeasible(String),
    #[error("factor {0} has zero operator norm")]
    ZeroFactor(usize),
    #[error("function is not invariant under the diagonal right action (max deviation {0:.3e})")]
    NotInvariant(f64),
    #[error("invalid input: {0}")]
    BadInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Worker-thread cap: `VAROPKIT_THREADS` if set, otherwise the machine's
/// available parallelism.
pub fn thread_cap() -> usize {
    std::env::var("VAROPKIT_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Runs `job(i)` for `i in 0..count` on up to [`thread_cap`] worker threads and
/// returns the results in index order. Each job must be deterministic given its
/// index; the merge order makes the output independent of scheduling.
pub fn parallel_map<T, F>(count: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = thread_cap().min(count.max(1));
    if workers <= 1 || count <= 1 {
        return (0..count).map(job).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    let slots_mx = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let out = job(i);
                slots_mx.lock().unwrap()[i] = Some(out);
            });
        }
    });
    slots.into_iter().map(|s| s.unwrap()).collect()
}
