//! Validation suites: each criterion recomputes known values and invariants
//! with fresh random instances and reports the worst deviation per check.

use std::f64::consts::PI;

use rand::SeedableRng;
use resbench_core::conic::ConicSolver;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use resbench_core::channel::max_fidelity_channel;
use resbench_core::distillation::{
    constant_overlap_check, exact_distillation_possible, fidelity_bounds, g_value, gme_values, golden_search, golden_target,
    optimal_distillation_channel, pure_g_decomposition,
};
use resbench_core::monotones::{d_h, d_h_min_over, d_h_min_over_bisection, max_free_overlap, r_max, r_min, r_std, Domain, Extended};
use resbench_core::random::{random_density, random_pure};
use resbench_core::theory::{asymmetry_golden_state, TheoryDescriptor};
use resbench_core::{BlockStructure, DensityOperator, HermitianOperator, PureStateVector, Result};
use serde::Serialize;

use crate::solver::{RecordingSolver, SolveLog};

pub const SUITES: &[&str] = &["all", "golden", "affine-exact", "appendixB", "appendixC", "appendixD", "appendixE", "nogo", "yield", "solver"];

pub const CRITERIA: &[(u32, &str)] = &[
    (1, "golden-state robustness values and two-qubit overlap formula"),
    (2, "constant-overlap condition"),
    (3, "maximally entangled and GHZ robustness values"),
    (4, "golden-state certificate"),
    (5, "affine exactness against the channel oracle"),
    (6, "PPT bound coincidence"),
    (7, "no exact distillation from full-rank states"),
    (8, "pure-state G-value decomposition"),
    (9, "hypothesis-testing consistency"),
    (10, "solver health"),
];

/// Criteria run by a named suite, in ascending order.
pub fn suite_criteria(suite: &str) -> Option<Vec<u32>> {
    Some(match suite {
        "all" => (1..=10).collect(),
        "appendixC" => vec![1, 2],
        "appendixD" => vec![3, 6],
        "appendixE" => vec![3],
        "golden" => vec![4],
        "affine-exact" => vec![5],
        "nogo" => vec![7],
        "appendixB" => vec![8],
        "yield" => vec![9],
        "solver" => vec![10],
        _ => return None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub criterion: u32,
    pub check: String,
    pub passed: bool,
    /// Largest observed deviation (or value, for one-sided bounds).
    pub worst: f64,
    pub tol: f64,
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub checks: Vec<Check>,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn summary_line(&self) -> String {
        match self.first_failure() {
            None => format!("criterion {}: PASS ({})", self.id, self.name),
            Some(c) => format!(
                "criterion {}: FAIL ({}): {} worst {:e} tol {:e}{}",
                self.id,
                self.name,
                c.check,
                c.worst,
                c.tol,
                c.detail.as_deref().map(|d| format!(" [{d}]")).unwrap_or_default()
            ),
        }
    }
}

struct Checks {
    criterion: u32,
    out: Vec<Check>,
}

impl Checks {
    fn new(criterion: u32) -> Self {
        Self { criterion, out: Vec::new() }
    }

    fn push(&mut self, check: &str, passed: bool, worst: f64, tol: f64, count: usize) {
        self.out.push(Check { criterion: self.criterion, check: check.to_string(), passed, worst, tol, count, detail: None });
    }

    /// Passes when every deviation is at most `tol` (NaN fails).
    fn deviations(&mut self, check: &str, tol: f64, devs: &[f64]) {
        let passed = devs.iter().all(|d| *d <= tol);
        let worst = devs.iter().copied().fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) });
        self.push(check, passed, worst, tol, devs.len());
    }

    fn close(&mut self, check: &str, tol: f64, pairs: &[(f64, f64)]) {
        let devs: Vec<f64> = pairs.iter().map(|(a, b)| (a - b).abs()).collect();
        self.deviations(check, tol, &devs);
    }

    /// Passes when every value is at most `limit`; reports the largest value.
    fn at_most(&mut self, check: &str, limit: f64, values: &[f64]) {
        let passed = values.iter().all(|v| *v <= limit);
        let worst = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.push(check, passed, worst, limit, values.len());
    }

    /// Boolean check; `worst` counts the failures.
    fn all(&mut self, check: &str, flags: &[bool]) {
        let failures = flags.iter().filter(|f| !**f).count();
        self.push(check, failures == 0, failures as f64, 0.0, flags.len());
    }

    fn finish(mut self, result: Result<()>) -> Vec<Check> {
        if let Err(e) = result {
            self.out.push(Check {
                criterion: self.criterion,
                check: "computation".to_string(),
                passed: false,
                worst: f64::NAN,
                tol: 0.0,
                count: 0,
                detail: Some(e.to_string()),
            });
        }
        self.out
    }
}

fn rng_for(seed: u64, criterion: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(u64::from(criterion)))
}

pub fn asym2q() -> TheoryDescriptor {
    TheoryDescriptor::asymmetry(BlockStructure::from_blocks(vec![vec![0], vec![1, 2], vec![3]]).expect("valid blocks")).expect("valid theory")
}

pub fn thermal(spectrum: &[f64]) -> TheoryDescriptor {
    let tau = DensityOperator::new(HermitianOperator::from_real_diagonal(spectrum)).expect("valid Gibbs state");
    TheoryDescriptor::thermal(tau).expect("valid theory")
}

pub fn coherence(d: usize) -> TheoryDescriptor {
    TheoryDescriptor::coherence(d).expect("valid theory")
}

pub fn ppt22() -> TheoryDescriptor {
    TheoryDescriptor::ppt(2, 2).expect("valid theory")
}

fn four_theories() -> Vec<TheoryDescriptor> {
    vec![coherence(3), thermal(&[2.0 / 3.0, 1.0 / 3.0]), asym2q(), ppt22()]
}

fn rmax_value(rho: &DensityOperator, t: &TheoryDescriptor, s: &RecordingSolver) -> Result<f64> {
    Ok(r_max(rho, t, s)?.value.to_f64())
}

fn rmin_value(rho: &DensityOperator, t: &TheoryDescriptor, s: &RecordingSolver) -> Result<f64> {
    Ok(r_min(rho, t, s)?.value.to_f64())
}

fn criterion1(seed: u64, s: &RecordingSolver) -> Vec<Check> {
    let mut c = Checks::new(1);
    let r = (|| {
        let t = asym2q();
        let mut pairs = Vec::new();
        for theta in [0.0, PI / 7.0, PI / 4.0] {
            pairs.push((rmin_value(&asymmetry_golden_state(theta).density(), &t, s)?, 3.0));
        }
        c.close("R_min of the golden family equals 3", 1e-6, &pairs);
        let plusplus = PureStateVector::uniform(4);
        c.close("R_min(|++>) equals 2", 1e-6, &[(rmin_value(&plusplus.density(), &t, s)?, 2.0)]);

        let mut rng = rng_for(seed, 1);
        let states: Vec<PureStateVector> = (0..100).map(|_| random_pure(4, &mut rng)).collect();
        let pairs = states
            .par_iter()
            .map(|psi| {
                let p: Vec<f64> = psi.amplitudes().iter().map(|z| z.norm_sqr()).collect();
                let formula = p[0].max(p[3]).max(p[1] + p[2]);
                Ok((max_free_overlap(&psi.density(), &t, s)?.0, formula))
            })
            .collect::<Result<Vec<_>>>()?;
        c.close("max free overlap matches max{a^2, d^2, b^2 + c^2}", 1e-6, &pairs);
        Ok(())
    })();
    c.finish(r)
}

fn criterion2(_seed: u64, s: &RecordingSolver) -> Vec<Check> {
    let mut c = Checks::new(2);
    let r = (|| {
        let golden = asymmetry_golden_state(PI / 4.0);
        c.all("golden asymmetry state at pi/4 has non-constant overlap", &[!constant_overlap_check(&golden, &asym2q(), s)?]);
        let mut flags = Vec::new();
        for d in 2..=4 {
            flags.push(constant_overlap_check(&PureStateVector::uniform(d), &coherence(d), s)?);
        }
        c.all("maximally coherent states have constant overlap", &flags);
        Ok(())
    })();
    c.finish(r)
}

fn criterion3(_seed: u64, s: &RecordingSolver) -> Vec<Check> {
    let mut c = Checks::new(3);
    let r = (|| {
        let mut pairs = Vec::new();
        for d in [2usize, 3] {
            let t = TheoryDescriptor::ppt(d, d)?;
            let psi = PureStateVector::maximally_entangled(d, d).density();
            let df = d as f64;
            pairs.push((rmax_value(&psi, &t, s)?, df));
            pairs.push((r_std(&psi, &t, s)?.value.to_f64(), df));
            pairs.push((rmin_value(&psi, &t, s)?, df));
        }
        c.close("R_max = R_s = R_min = d for maximally entangled states", 1e-6, &pairs);

        let mut pairs = Vec::new();
        let mut golden = Vec::new();
        for d in [2usize, 3] {
            let g = gme_values(&PureStateVector::ghz(d, 3), &[d, d, d])?;
            pairs.push((g.combined_r_min, d as f64));
            pairs.push((g.combined_r_max_upper, d as f64));
            golden.push(g.golden_chain);
        }
        c.close("GHZ per-cut values equal d", 1e-6, &pairs);
        c.all("GHZ states are golden across cuts", &golden);

        let t = TheoryDescriptor::ppt_mixture(vec![2, 2, 2])?;
        let ghz = PureStateVector::ghz(2, 3).density();
        c.close("three-qubit GHZ R_min over PPT mixtures equals 2", 1e-6, &[(rmin_value(&ghz, &t, s)?, 2.0)]);
        Ok(())
    })();
    c.finish(r)
}

fn criterion4(seed: u64, s: &RecordingSolver) -> Vec<Check> {
    let mut c = Checks::new(4);
    let r = (|| {
        let theories = four_theories();
        let certs =
            theories.par_iter().map(|t| golden_search(t, 20, 1e-9, seed, s)).collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(f64, f64)> = certs.iter().map(|g| (g.r_min, g.r_max)).collect();
        c.close("golden candidate has R_min = R_max", 1e-6, &pairs);

        let mut rng = rng_for(seed, 4);
        let mut order = Vec::new();
        let mut excess = Vec::new();
        for (t, cert) in theories.iter().zip(&certs) {
            let golden = cert.r_max.max(cert.r_min);
            let states: Vec<PureStateVector> = (0..200).map(|_| random_pure(t.dim(), &mut rng)).collect();
            let vals = states
                .par_iter()
                .map(|psi| {
                    let rho = psi.density();
                    Ok((rmin_value(&rho, t, s)?, rmax_value(&rho, t, s)?))
                })
                .collect::<Result<Vec<_>>>()?;
            for (lo, hi) in vals {
                order.push(lo - hi);
                excess.push(lo.max(hi) - golden);
            }
        }
        c.at_most("R_min <= R_max on random pure states", 1e-6, &order);
        c.at_most("random pure states do not exceed the golden value", 1e-6, &excess);
        Ok(())
    })();
    c.finish(r)
}

fn criterion5(seed: u64, s: &RecordingSolver) -> Vec<Check> {
    let mut c = Checks::new(5);
    let r = (|| {
        let theories =
            vec![coherence(2), coherence(3), thermal(&[2.0 / 3.0, 1.0 / 3.0]), thermal(&[0.5, 0.3, 0.2]), asym2q()];
        let mut rng = rng_for(seed, 5);
        let mut ratio = Vec::new();
        let mut achieved = Vec::new();
        let mut free = Vec::new();
        for t in &theories {
            let phi = golden_target(t, s)?;
            let rmax_phi = rmax_value(&phi.density(), t, s)?;
            let states: Vec<DensityOperator> = (0..20).map(|_| random_density(t.dim(), &mut rng)).collect();
            let rows = states
                .par_iter()
                .map(|rho| {
                    let (oracle, _) = max_fidelity_channel(rho, &phi, t, s)?;
                    let predicted = rmax_value(rho, t, s)? / rmax_phi;
                    let channel = optimal_distillation_channel(rho, t, s)?;
                    Ok(((oracle, predicted), (channel.achieved, oracle), channel.free_check.free))
                })
                .collect::<Result<Vec<_>>>()?;
            for (a, b, f) in rows {
                ratio.push(a);
                achieved.push(b);
                free.push(f);
            }
        }
        c.close("channel oracle equals R_max(rho) / R_max(phi)", 1e-5, &ratio);
        c.close("measure-and-prepare channel attains the oracle", 1e-5, &achieved);
        c.all("measure-and-prepare channels are free", &free);
        Ok(())
    })();
    c.finish(r)
}

fn criterion6(seed: u64, s: &RecordingSolver) -> Vec<Check> {
    let mut c = Checks::new(6);
    let r = (|| {
        let t = ppt22();
        let phi = PureStateVector::maximally_entangled(2, 2);
        let mut rng = rng_for(seed, 6);
        let states: Vec<DensityOperator> = (0..20).map(|_| random_density(4, &mut rng)).collect();
        let rows = states
            .par_iter()
            .map(|rho| {
                let report = fidelity_bounds(rho, &phi, &t, s)?;
                let half = rmax_value(rho, &t, s)? / 2.0;
                Ok((report.exact, (report.upper, half), (report.lower, half)))
            })
            .collect::<Result<Vec<_>>>()?;
        c.all("bounds reported exact", &rows.iter().map(|r| r.0).collect::<Vec<_>>());
        c.close("upper bound equals R_max / 2", 1e-5, &rows.iter().map(|r| r.1).collect::<Vec<_>>());
        c.close("lower bound equals R_max / 2", 1e-5, &rows.iter().map(|r| r.2).collect::<Vec<_>>());
        Ok(())
    })();
    c.finish(r)
}

fn criterion7(seed: u64, s: &RecordingSolver) -> Vec<Check> {
    let mut c = Checks::new(7);
    let r = (|| {
        let mut rng = rng_for(seed, 7);
        let mut upper = Vec::new();
        let mut blocked = Vec::new();
        for t in four_theories() {
            let k = rmin_value(&golden_target(&t, s)?.density(), &t, s)?;
            let states: Vec<DensityOperator> = (0..20).map(|_| random_density(t.dim(), &mut rng)).collect();
            let rows = states
                .par_iter()
                .map(|rho| Ok((g_value(rho, k, &t, s)?.value, !exact_distillation_possible(rho, &t, s)?.possible)))
                .collect::<Result<Vec<_>>>()?;
            for (g, b) in rows {
                upper.push(g);
                blocked.push(b);
            }
        }
        c.at_most("fidelity upper bound stays below 1", 1.0 - 1e-4, &upper);
        c.all("exact distillation ruled out", &blocked);
        Ok(())
    })();
    c.finish(r)
}

fn criterion8(seed: u64, s: &RecordingSolver) -> Vec<Check> {
    let mut c = Checks::new(8);
    let r = (|| {
        let mut rng = rng_for(seed, 8);
        let mut pairs = Vec::new();
        for d in 2..=4usize {
            let t = coherence(d);
            let mut ks = vec![1.5, 2.0, 3.0, d as f64];
            ks.dedup();
            for k in ks {
                let states: Vec<PureStateVector> = (0..50).map(|_| random_pure(d, &mut rng)).collect();
                pairs.extend(
                    states
                        .par_iter()
                        .map(|psi| {
                            let obj = pure_g_decomposition(psi, k, &t, s)?.objective;
                            Ok((obj * obj, g_value(&psi.density(), k, &t, s)?.value))
                        })
                        .collect::<Result<Vec<_>>>()?,
                );
            }
        }
        c.close("squared decomposition objective equals G", 1e-5, &pairs);
        let plus = PureStateVector::uniform(2);
        let t = coherence(2);
        let obj = pure_g_decomposition(&plus, 4.0, &t, s)?.objective;
        c.close("G(|+>; 4) = 1/2", 1e-5, &[(g_value(&plus.density(), 4.0, &t, s)?.value, 0.5), (obj * obj, 0.5)]);
        Ok(())
    })();
    c.finish(r)
}

fn finite(v: Extended) -> f64 {
    v.finite().unwrap_or(f64::INFINITY)
}

fn criterion9(seed: u64, s: &RecordingSolver) -> Vec<Check> {
    let mut c = Checks::new(9);
    let r = (|| {
        let theories = [coherence(2), coherence(3), thermal(&[2.0 / 3.0, 1.0 / 3.0]), asym2q(), ppt22()];
        let epsilons = [0.05, 0.1, 0.2, 0.3];
        let mut rng = rng_for(seed, 9);
        let mut instances = Vec::new();
        for t in &theories {
            for &eps in &epsilons {
                instances.push((t, random_density(t.dim(), &mut rng), eps));
            }
        }
        let pairs = instances
            .par_iter()
            .map(|(t, rho, eps)| {
                let direct = finite(d_h_min_over(rho, *eps, t, Domain::FreeSet, s)?.log_value);
                Ok((direct, d_h_min_over_bisection(rho, *eps, t, Domain::FreeSet, s)?))
            })
            .collect::<Result<Vec<_>>>()?;
        c.close("single program agrees with bisection over G", 1e-5, &pairs);

        // Two independent programs compared at 1e-8 need a tighter solver.
        let fine = RecordingSolver::new((s.tolerance() * 1e-2).max(1e-10));
        let gibbs = [2.0 / 3.0, 1.0 / 3.0];
        let t = thermal(&gibbs);
        let tau = HermitianOperator::from_real_diagonal(&gibbs);
        let mut pairs = Vec::new();
        for &eps in &epsilons {
            let rho = random_density(2, &mut rng);
            let over = finite(d_h_min_over(&rho, eps, &t, Domain::FreeSet, &fine)?.log_value);
            pairs.push((over, finite(d_h(&rho, &tau, eps, &fine)?)));
        }
        s.absorb(&fine);
        c.close("thermal minimum equals D_H against the Gibbs state", 1e-8, &pairs);

        let zero = DensityOperator::basis_state(2, 0);
        let half = HermitianOperator::identity(2).scale(0.5);
        c.close("D_H^1/2(|0><0| || I/2) = 2", 1e-6, &[(finite(d_h(&zero, &half, 0.5, s)?), 2.0)]);
        Ok(())
    })();
    c.finish(r)
}

/// Checks the relative gap of every optimal solve in `prior` and in an
/// `R_max` workload, and that primal and dual `R_max` values agree.
fn criterion10(seed: u64, s: &RecordingSolver, prior: &[SolveLog]) -> Vec<Check> {
    let mut c = Checks::new(10);
    let r = (|| {
        let mut rng = rng_for(seed, 10);
        let mut theories = four_theories();
        theories.push(TheoryDescriptor::ppt_mixture(vec![2, 2, 2])?);
        let mut gaps = Vec::new();
        for t in &theories {
            let states: Vec<DensityOperator> = (0..10).map(|_| random_density(t.dim(), &mut rng)).collect();
            gaps.extend(states.par_iter().map(|rho| Ok(r_max(rho, t, s)?.gap)).collect::<Result<Vec<_>>>()?);
        }
        c.deviations("R_max primal and dual agree", 1e-6, &gaps);
        Ok(())
    })();
    let mut logs = prior.to_vec();
    logs.extend(s.take_log());
    let optimal: Vec<f64> = logs
        .iter()
        .filter(|l| l.status == resbench_core::conic::SolveStatus::Optimal)
        .map(|l| l.relative_gap)
        .collect();
    let mut out = c.finish(r);
    let passed = optimal.iter().all(|g| *g <= 1e-7);
    let worst = optimal.iter().copied().fold(0.0, f64::max);
    out.insert(
        0,
        Check {
            criterion: 10,
            check: "optimal solves have relative gap <= 1e-7".to_string(),
            passed,
            worst,
            tol: 1e-7,
            count: optimal.len(),
            detail: None,
        },
    );
    out
}

fn run_one(id: u32, seed: u64, s: &RecordingSolver) -> Vec<Check> {
    match id {
        1 => criterion1(seed, s),
        2 => criterion2(seed, s),
        3 => criterion3(seed, s),
        4 => criterion4(seed, s),
        5 => criterion5(seed, s),
        6 => criterion6(seed, s),
        7 => criterion7(seed, s),
        8 => criterion8(seed, s),
        9 => criterion9(seed, s),
        _ => unreachable!("criterion 10 needs the solve logs of the others"),
    }
}

fn name_of(id: u32) -> &'static str {
    CRITERIA.iter().find(|(i, _)| *i == id).map(|(_, n)| *n).expect("known criterion")
}

/// Worker count from `RESBENCH_THREADS`, defaulting to the available parallelism.
pub fn thread_count() -> usize {
    std::env::var("RESBENCH_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs the given criteria concurrently and returns reports in ascending id order.
/// Criterion 10 runs last and also audits every solve made by the others.
pub fn run_criteria(ids: &[u32], seed: u64, solver_tol: f64) -> Vec<CriterionReport> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(thread_count()).build().expect("thread pool");
    pool.install(|| {
        let mut ids: Vec<u32> = ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let (health, others): (Vec<u32>, Vec<u32>) = ids.into_iter().partition(|id| *id == 10);
        let mut reports: Vec<(CriterionReport, Vec<SolveLog>)> = others
            .par_iter()
            .map(|&id| {
                let s = RecordingSolver::new(solver_tol);
                let checks = run_one(id, seed, &s);
                (CriterionReport { id, name: name_of(id), checks }, s.take_log())
            })
            .collect();
        if !health.is_empty() {
            let prior: Vec<SolveLog> = reports.iter().flat_map(|(_, l)| l.iter().copied()).collect();
            let s = RecordingSolver::new(solver_tol);
            reports.push((CriterionReport { id: 10, name: name_of(10), checks: criterion10(seed, &s, &prior) }, Vec::new()));
        }
        reports.into_iter().map(|(r, _)| r).collect()
    })
}
