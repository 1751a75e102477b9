//! Named check suites over the transfer machinery and a serialization layer
//! for norm certificates, shared by the command-line front end and the
//! acceptance harness. Every tolerance is pinned here as a constant, each
//! suite reports one deviation-vs-bound line per statement, and rendering is
//! deterministic: a fixed seed and configuration reproduce the output byte
//! for byte.

use crate::fourier::{a_norm_exact, a_norm_variational, AFn, AFnCertificate};
use crate::group::{FiniteGroup, TupleIndex};
use crate::la::CMat;
use crate::multifn::MultiFn;
use crate::norm::{haagerup_norm, CertFlag, HaagCertificate, SchurCertificate, SolveOpts};
use crate::repr::{compute_dual, regular_rep};
use crate::transfer::{
    ditkin_transfer, e_star, ideal_transfer_check, invariance_defect, lemma51_check, n_inverse,
    n_map, n_map_certified, omega_pi, omega_pi_resynthesis, p_map, q_map, submodule_transfer,
    ClosedSet, DualElement,
};
use crate::varopoulos::{t_w_apply, VFn};
use crate::{c64, cx, Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::sync::Arc;

/// Closed-form trace-norm oracle vs the Schur certificate at arity one.
pub const ISOMETRY_EXACT_TOL: f64 = 1e-5;
/// Slack allowed between certified intervals that must overlap, and for
/// contractivity comparisons made at certificate level.
pub const CERT_OVERLAP_TOL: f64 = 1e-6;
/// Transferred upper bound vs the value of the witness it was built from.
pub const TRANSFER_UPPER_SLACK: f64 = 1e-9;
/// A carried factorization must re-evaluate to the function it certifies.
pub const FACTORIZATION_EVAL_TOL: f64 = 1e-10;
/// Deviation cap for the module identity over the point-mass basis.
pub const LEMMA51_TOL: f64 = 1e-10;
/// Deviation cap for the multiplier symbol identity on translation tuples.
pub const MULTIPLIER_TOL: f64 = 1e-10;
/// Recovery of a function from its matrix components over the numeric dual.
pub const RESYNTHESIS_TOL: f64 = 1e-8;

/// One named statement with its worst observed deviation and the bound it
/// must stay under. Exact statements carry bound `0.0`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub pass: bool,
    pub deviation: f64,
    pub bound: f64,
    pub detail: String,
}

fn item(name: &str, deviation: f64, bound: f64, detail: String) -> CheckItem {
    CheckItem {
        name: name.to_string(),
        pass: deviation <= bound,
        deviation,
        bound,
        detail,
    }
}

/// The outcome of one suite on one group and arity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub group: String,
    pub arity: usize,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckItem>,
}

fn finish(suite: &str, group: &FiniteGroup, n: usize, seed: u64, checks: Vec<CheckItem>) -> SuiteReport {
    SuiteReport {
        suite: suite.to_string(),
        group: group.descriptor().to_string(),
        arity: n,
        seed,
        passed: checks.iter().all(|c| c.pass),
        checks,
    }
}

/// Distance from `x` to the interval `[lo, hi]`.
fn interval_gap(x: f64, lo: f64, hi: f64) -> f64 {
    (lo - x).max(x - hi).max(0.0)
}

/// The pullback is an isometry onto the invariant functions: cross-checks
/// the closed-form oracle at arity one, interval overlap at higher arity,
/// the witness carried by the certified transfer, and contractivity of the
/// fiber-average retraction — all at certificate level.
pub fn suite_isometry(group: &Arc<FiniteGroup>, n: usize, opts: &SolveOpts) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x49534f);
    let dual = compute_dual(group, opts.seed)?;
    let mut checks = Vec::new();

    if n == 1 {
        let trials = 5;
        let mut dev = 0.0f64;
        for _ in 0..trials {
            let u = AFn::new(MultiFn::random(group.clone(), 1, &mut rng))?;
            let exact = a_norm_exact(&u, &dual)?;
            let hc = haagerup_norm(n_map(&u).values(), opts)?;
            dev = dev.max(interval_gap(exact, hc.lower, hc.upper));
        }
        checks.push(item(
            "closed-form-cross-oracle",
            dev,
            ISOMETRY_EXACT_TOL,
            format!("trace-norm value inside the two-factor certificate, {trials} random functions"),
        ));
    }

    let trials = 3;
    let mut overlap = 0.0f64;
    let mut upper_slack = 0.0f64;
    let mut eval_dev = 0.0f64;
    for _ in 0..trials {
        let u = AFn::new(MultiFn::random(group.clone(), n, &mut rng))?;
        let ac = a_norm_variational(&u, &dual, opts)?;
        let hc = haagerup_norm(n_map(&u).values(), opts)?;
        overlap = overlap.max((ac.lower - hc.upper).max(hc.lower - ac.upper).max(0.0));
        let nu = n_map_certified(&u, &ac)?;
        let carried = nu.certificate().expect("certified transfer carries a certificate");
        upper_slack = upper_slack.max(carried.upper - ac.witness.value());
        let fact = nu.factorization().expect("certified transfer carries a factorization");
        eval_dev = eval_dev.max(fact.evaluate().max_deviation(nu.values())?);
    }
    checks.push(item(
        "certificate-overlap",
        overlap,
        CERT_OVERLAP_TOL,
        format!("variational and multi-factor intervals intersect, {trials} random functions"),
    ));
    checks.push(item(
        "transfer-upper-bound",
        upper_slack.max(0.0),
        TRANSFER_UPPER_SLACK,
        "transferred certificate stays at the witness value".to_string(),
    ));
    checks.push(item(
        "transfer-factorization",
        eval_dev,
        FACTORIZATION_EVAL_TOL,
        "carried factorization re-evaluates to the transferred function".to_string(),
    ));

    let mut contract = 0.0f64;
    for _ in 0..trials {
        let w = VFn::new(MultiFn::random(group.clone(), n + 1, &mut rng))?;
        let hc = haagerup_norm(w.values(), opts)?;
        let ac = a_norm_variational(&q_map(&w), &dual, opts)?;
        contract = contract.max((ac.lower - hc.upper).max(0.0));
    }
    checks.push(item(
        "retraction-contractive",
        contract,
        CERT_OVERLAP_TOL,
        format!("fiber average does not increase the certified norm, {trials} random functions"),
    ));

    Ok(finish("isometry", group, n, opts.seed, checks))
}

/// The module identity relating the two dual transports over the point-mass
/// basis, including the exact fixed point at the constant function.
pub fn suite_lemma51(group: &Arc<FiniteGroup>, n: usize, opts: &SolveOpts) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x4c3531);
    let mut checks = Vec::new();

    let ones = VFn::new(MultiFn::constant(group.clone(), n + 1, cx(1.0, 0.0)))?;
    let mut dev = 0.0f64;
    for _ in 0..3 {
        let t = DualElement::new(MultiFn::random(group.clone(), n, &mut rng));
        dev = dev.max(lemma51_check(&ones, &t)?);
    }
    checks.push(item(
        "unit-fixed-point",
        dev,
        0.0,
        "both transports agree exactly on the constant function".to_string(),
    ));

    let trials = 5;
    let mut dev = 0.0f64;
    for _ in 0..trials {
        let w = VFn::new(MultiFn::random(group.clone(), n + 1, &mut rng))?;
        let t = DualElement::new(MultiFn::random(group.clone(), n, &mut rng));
        dev = dev.max(lemma51_check(&w, &t)?);
    }
    checks.push(item(
        "random-pairs",
        dev,
        LEMMA51_TOL,
        format!("{trials} random function/functional pairs"),
    ));

    let idx = TupleIndex::new(group.order(), n);
    let flats: Vec<usize> = if idx.len() <= 16 {
        (0..idx.len()).collect()
    } else {
        (0..idx.len()).collect::<Vec<_>>().choose_multiple(&mut rng, 8).copied().collect()
    };
    let mut dev = 0.0f64;
    for &f in &flats {
        let t = DualElement::new(MultiFn::delta(group.clone(), &idx.from_flat(f)?)?);
        let w = VFn::new(MultiFn::random(group.clone(), n + 1, &mut rng))?;
        dev = dev.max(lemma51_check(&w, &t)?);
    }
    checks.push(item(
        "point-mass-duals",
        dev,
        LEMMA51_TOL,
        format!("{} point-mass functionals against random functions", flats.len()),
    ));

    Ok(finish("lemma51", group, n, opts.seed, checks))
}

/// The structural transfer statements: exact round trips, idempotence of the
/// orbit average, the multiplier symbol identity, ideal membership, the
/// submodule support correspondence, and matrix-component synthesis.
pub fn suite_transfer(group: &Arc<FiniteGroup>, n: usize, opts: &SolveOpts) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x545246);
    let mut checks = Vec::new();
    let trials = 5;

    let mut dev = 0.0f64;
    for _ in 0..trials {
        let u = AFn::new(MultiFn::random(group.clone(), n, &mut rng))?;
        dev = dev.max(q_map(&n_map(&u)).fun().max_deviation(u.fun())?);
    }
    checks.push(item(
        "pullback-roundtrip",
        dev,
        0.0,
        format!("fiber average after pullback is the identity, {trials} random functions"),
    ));

    let mut dev = 0.0f64;
    for _ in 0..trials {
        let u = AFn::new(MultiFn::random(group.clone(), n, &mut rng))?;
        dev = dev.max(n_inverse(&n_map(&u))?.fun().max_deviation(u.fun())?);
        let w = p_map(&VFn::new(MultiFn::random(group.clone(), n + 1, &mut rng))?);
        dev = dev.max(n_map(&n_inverse(&w)?).values().max_deviation(w.values())?);
    }
    checks.push(item(
        "inverse-roundtrip",
        dev,
        0.0,
        format!("pullback and its inverse cancel both ways, {trials} random functions"),
    ));

    let mut dev = 0.0f64;
    for _ in 0..trials {
        let w = VFn::new(MultiFn::random(group.clone(), n + 1, &mut rng))?;
        let p = p_map(&w);
        dev = dev.max(invariance_defect(&p));
        dev = dev.max(p_map(&p).values().max_deviation(p.values())?);
    }
    checks.push(item(
        "projection-idempotent",
        dev,
        0.0,
        format!("orbit average is invariant and idempotent, {trials} random functions"),
    ));

    let dual = compute_dual(group, opts.seed)?;
    let u = AFn::new(MultiFn::random(group.clone(), n, &mut rng))?;
    let cert = a_norm_variational(&u, &dual, opts)?;
    let nu = n_map_certified(&u, &cert)?;
    let fact = nu.factorization().expect("certified transfer carries a factorization");
    let lambdas = regular_rep(group);
    let mut dev = 0.0f64;
    for tuple in TupleIndex::new(group.order(), n).iter() {
        let ops: Vec<CMat> = tuple.iter().map(|&x| lambdas[x].clone()).collect();
        let got = t_w_apply(fact, &ops)?;
        let expect = &lambdas[group.prod(&tuple)] * u.fun().at(&tuple)?;
        dev = dev.max((got - expect).map(|v| v.norm()).max());
    }
    checks.push(item(
        "multiplier-symbol",
        dev,
        MULTIPLIER_TOL,
        "transferred multiplier acts on translation tuples by the symbol".to_string(),
    ));

    let total = TupleIndex::new(group.order(), n).len();
    let all: Vec<usize> = (0..total).collect();
    let mut failures = 0usize;
    for trial in 0..6 {
        let size = (trial * total) / 6;
        let picked: Vec<usize> = all.choose_multiple(&mut rng, size).copied().collect();
        let e = ClosedSet::from_flats(group.clone(), n, picked)?;
        let mut fun = MultiFn::random(group.clone(), n, &mut rng);
        if trial % 2 == 0 {
            for &f in e.flats() {
                fun.values_mut()[f] = cx(0.0, 0.0);
            }
        }
        let report = ideal_transfer_check(&AFn::new(fun)?, &e)?;
        if report.in_ideal_a != report.in_ideal_v
            || !report.support_transferred
            || report.max_on_e != report.max_on_e_star
        {
            failures += 1;
        }
    }
    checks.push(item(
        "ideal-membership",
        failures as f64,
        0.0,
        "vanishing transfers exactly in both directions, 6 random zero sets".to_string(),
    ));

    let mut dev = 0.0f64;
    for trial in 0..2 {
        let size = ((trial + 1) * total) / 3;
        let picked: Vec<usize> = all.choose_multiple(&mut rng, size).copied().collect();
        let x = ClosedSet::from_flats(group.clone(), n, picked)?;
        let moved = submodule_transfer(&x)?;
        dev = dev.max(moved.max_leak);
        if moved.transferred.flats() != e_star(&x).flats() || moved.roundtrip.flats() != x.flats() {
            dev = dev.max(1.0);
        }
    }
    checks.push(item(
        "submodule-roundtrip",
        dev,
        0.0,
        "support correspondence closes in both directions, 2 random supports".to_string(),
    ));

    let w = VFn::new(MultiFn::random(group.clone(), n + 1, &mut rng))?;
    let mut inv_dev = 0.0f64;
    for irrep in dual.irreps() {
        let comp = omega_pi(&w, irrep)?;
        for i in 0..irrep.dim {
            for j in 0..irrep.dim {
                inv_dev = inv_dev.max(invariance_defect(&comp.tilde_entry(i, j)?));
            }
        }
    }
    checks.push(item(
        "component-invariance",
        inv_dev,
        0.0,
        "matrix components are exactly invariant for every irrep".to_string(),
    ));
    let resynth = omega_pi_resynthesis(&w, &dual)?;
    checks.push(item(
        "component-resynthesis",
        resynth.max_deviation(w.values())?,
        RESYNTHESIS_TOL,
        "dimension-weighted traces of the components recover the function".to_string(),
    ));

    Ok(finish("transfer", group, n, opts.seed, checks))
}

/// The identity witnesses attached to zero sets act as identities on their
/// ideals on both sides of the transfer, exactly.
pub fn suite_ditkin(group: &Arc<FiniteGroup>, n: usize, opts: &SolveOpts) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x444b4e);
    let total = TupleIndex::new(group.order(), n).len();
    let all: Vec<usize> = (0..total).collect();

    let mut sets = vec![
        ClosedSet::empty(group.clone(), n),
        ClosedSet::new(group.clone(), n, &[vec![0; n]])?,
    ];
    for _ in 0..3 {
        let picked: Vec<usize> = all.choose_multiple(&mut rng, total / 2).copied().collect();
        sets.push(ClosedSet::from_flats(group.clone(), n, picked)?);
    }

    let mut forward = 0.0f64;
    let mut transferred = 0.0f64;
    let mut pullback = 0.0f64;
    let mut reindex_failures = 0usize;
    for e in &sets {
        let (_, _, report) = ditkin_transfer(e)?;
        forward = forward.max(report.forward_max_dev);
        transferred = transferred.max(report.transferred_max_dev);
        pullback = pullback.max(report.pullback_max_on_e);
        if !report.reindex_exact {
            reindex_failures += 1;
        }
    }
    let detail = format!("{} zero sets including the empty set and the identity tuple", sets.len());
    let checks = vec![
        item("identity-on-ideal", forward, 0.0, detail.clone()),
        item("transferred-identity", transferred, 0.0, detail.clone()),
        item("pullback-vanishes", pullback, 0.0, detail.clone()),
        item(
            "witness-reindex",
            reindex_failures as f64,
            0.0,
            "transferred witness equals the starred witness bit for bit".to_string(),
        ),
    ];

    Ok(finish("ditkin", group, n, opts.seed, checks))
}

pub const SUITE_NAMES: [&str; 4] = ["isometry", "lemma51", "transfer", "ditkin"];

/// Runs one named suite, or all of them in declaration order for `"all"`.
pub fn run_suite(
    name: &str,
    group: &Arc<FiniteGroup>,
    n: usize,
    opts: &SolveOpts,
) -> Result<Vec<SuiteReport>> {
    match name {
        "isometry" => Ok(vec![suite_isometry(group, n, opts)?]),
        "lemma51" => Ok(vec![suite_lemma51(group, n, opts)?]),
        "transfer" => Ok(vec![suite_transfer(group, n, opts)?]),
        "ditkin" => Ok(vec![suite_ditkin(group, n, opts)?]),
        "all" => SUITE_NAMES
            .iter()
            .map(|s| Ok(run_suite(s, group, n, opts)?.remove(0)))
            .collect(),
        other => Err(Error::BadInput(format!(
            "unknown suite '{other}' (expected isometry, lemma51, transfer, ditkin, or all)"
        ))),
    }
}

/// Serialized norm certificate: the witness pair appears for the variational
/// target, bond and slice counts for the operator targets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormReport {
    pub lower: f64,
    pub upper: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessJson>,
    pub method: String,
    pub restarts: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bond: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slices_checked: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flag: Option<CertFlag>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessJson {
    pub f: Vec<[f64; 2]>,
    pub g: Vec<[f64; 2]>,
}

fn pairs(v: &[c64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

impl NormReport {
    pub fn from_fourier(cert: &AFnCertificate) -> NormReport {
        NormReport {
            lower: cert.lower,
            upper: cert.upper,
            witness: Some(WitnessJson {
                f: pairs(cert.witness.f.as_slice()),
                g: pairs(cert.witness.g.as_slice()),
            }),
            method: cert.method.to_string(),
            restarts: cert.restarts,
            seed: cert.seed,
            bond: None,
            slices_checked: None,
            flag: None,
        }
    }

    pub fn from_haagerup(cert: &HaagCertificate, opts: &SolveOpts) -> NormReport {
        NormReport {
            lower: cert.lower,
            upper: cert.upper,
            witness: None,
            method: cert.method.to_string(),
            restarts: opts.restarts,
            seed: opts.seed,
            bond: Some(cert.bond),
            slices_checked: Some(cert.slices_checked),
            flag: cert.flag,
        }
    }

    pub fn from_schur(cert: &SchurCertificate, opts: &SolveOpts) -> NormReport {
        NormReport {
            lower: cert.lower,
            upper: cert.upper,
            witness: None,
            method: "schur-dual".to_string(),
            restarts: opts.restarts,
            seed: opts.seed,
            bond: Some(1),
            slices_checked: Some(cert.iterations),
            flag: cert.flag,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

pub fn render_suites_json(reports: &[SuiteReport]) -> String {
    let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
    s.push('\n');
    s
}

pub fn render_suites_csv(reports: &[SuiteReport]) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["suite", "group", "arity", "seed", "check", "pass", "deviation", "bound", "detail"])
        .expect("csv header");
    for r in reports {
        for c in &r.checks {
            wtr.write_record([
                r.suite.as_str(),
                r.group.as_str(),
                &r.arity.to_string(),
                &r.seed.to_string(),
                c.name.as_str(),
                if c.pass { "pass" } else { "fail" },
                &format!("{:.3e}", c.deviation),
                &format!("{:.3e}", c.bound),
                c.detail.as_str(),
            ])
            .expect("csv row");
        }
    }
    String::from_utf8(wtr.into_inner().expect("csv flush")).expect("csv is utf-8")
}

pub fn render_suites_text(reports: &[SuiteReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(
            out,
            "suite {} on {} (arity {}, seed {}): {}",
            r.suite, r.group, r.arity, r.seed, verdict
        );
        for c in &r.checks {
            let _ = writeln!(
                out,
                "  [{}] {:<26} deviation {:>10.3e}  bound {:>10.3e}  {}",
                if c.pass { "ok" } else { "FAIL" },
                c.name,
                c.deviation,
                c.bound,
                c.detail
            );
        }
    }
    out
}

pub fn render_norm_json(report: &NormReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn render_norm_csv(report: &NormReport) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["lower", "upper", "width", "method", "restarts", "seed", "bond", "slices_checked", "flag"])
        .expect("csv header");
    wtr.write_record([
        &format!("{:.12e}", report.lower),
        &format!("{:.12e}", report.upper),
        &format!("{:.3e}", report.width()),
        &report.method,
        &report.restarts.to_string(),
        &report.seed.to_string(),
        &report.bond.map(|b| b.to_string()).unwrap_or_default(),
        &report.slices_checked.map(|s| s.to_string()).unwrap_or_default(),
        &report.flag.map(|f| format!("{f:?}")).unwrap_or_default(),
    ])
    .expect("csv row");
    String::from_utf8(wtr.into_inner().expect("csv flush")).expect("csv is utf-8")
}

pub fn render_norm_text(report: &NormReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "norm in [{:.10}, {:.10}]  width {:.3e}  method {}",
        report.lower,
        report.upper,
        report.width(),
        report.method
    );
    let _ = writeln!(out, "restarts {}  seed {}", report.restarts, report.seed);
    if let (Some(bond), Some(slices)) = (report.bond, report.slices_checked) {
        let _ = writeln!(out, "bond {bond}  slices checked {slices}");
    }
    if let Some(flag) = report.flag {
        let _ = writeln!(out, "flag: {flag:?}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{build_group, GroupDescriptor};

    fn c(n: usize) -> Arc<FiniteGroup> {
        Arc::new(build_group(&GroupDescriptor::Cyclic { n }).unwrap())
    }

    fn quick_opts(seed: u64) -> SolveOpts {
        SolveOpts {
            seed,
            restarts: 4,
            bond_cap: 4,
            samples: 8,
            ..SolveOpts::default()
        }
    }

    #[test]
    fn all_suites_pass_on_a_small_group() {
        let g = c(2);
        let opts = quick_opts(7);
        let reports = run_suite("all", &g, 1, &opts).unwrap();
        assert_eq!(reports.len(), 4);
        for r in &reports {
            assert!(
                r.passed,
                "suite {} failed:\n{}",
                r.suite,
                render_suites_text(std::slice::from_ref(r))
            );
            assert_eq!(r.group, "cyclic(2)");
            assert_eq!(r.seed, 7);
        }
        let names: Vec<&str> = reports.iter().map(|r| r.suite.as_str()).collect();
        assert_eq!(names, SUITE_NAMES);
    }

    #[test]
    fn reports_are_reproducible_byte_for_byte() {
        let g = c(3);
        let opts = quick_opts(11);
        let a = run_suite("lemma51", &g, 1, &opts).unwrap();
        let b = run_suite("lemma51", &g, 1, &opts).unwrap();
        assert_eq!(render_suites_json(&a), render_suites_json(&b));
        assert_eq!(render_suites_csv(&a), render_suites_csv(&b));
        let other = run_suite("lemma51", &g, 1, &quick_opts(12)).unwrap();
        assert_ne!(render_suites_json(&a), render_suites_json(&other));
    }

    #[test]
    fn unknown_suites_are_rejected() {
        let g = c(2);
        match run_suite("spectral", &g, 1, &quick_opts(0)) {
            Err(Error::BadInput(msg)) => assert!(msg.contains("spectral")),
            other => panic!("expected BadInput, got {other:?}"),
        }
    }

    #[test]
    fn norm_reports_follow_the_documented_schema() {
        use crate::fourier::a_norm_variational;
        let g = c(2);
        let opts = quick_opts(3);
        let dual = compute_dual(&g, 3).unwrap();
        let u = AFn::new(MultiFn::delta(g.clone(), &[0]).unwrap()).unwrap();
        let cert = a_norm_variational(&u, &dual, &opts).unwrap();
        let report = NormReport::from_fourier(&cert);
        let json: serde_json::Value = serde_json::from_str(&render_norm_json(&report)).unwrap();
        for key in ["lower", "upper", "witness", "method", "restarts", "seed"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert!(json["witness"].get("f").is_some());
        assert!(json.get("bond").is_none());

        let w = n_map(&u);
        let haag = haagerup_norm(w.values(), &opts).unwrap();
        let report = NormReport::from_haagerup(&haag, &opts);
        let json: serde_json::Value = serde_json::from_str(&render_norm_json(&report)).unwrap();
        assert!(json.get("bond").is_some());
        assert!(json.get("slices_checked").is_some());
        assert!(json.get("witness").is_none());

        let csv_text = render_norm_csv(&report);
        assert_eq!(csv_text.lines().count(), 2);
        assert!(csv_text.starts_with("lower,upper,width,method"));
    }
}
