//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Pass criterion numbers as
//! arguments to run a subset, e.g. `cargo test --release --test acceptance -- 2 7`.
//! A failing criterion is reported but only fails the process when
//! `LPTML_ACCEPTANCE_STRICT=1` is set.

mod common;

use std::sync::Arc;
use std::time::Instant;

use lptml::approx::{lptml, lptml_regularized, LptmlConfig};
use lptml::eval::{self, CvConfig, Learner, PairCounts};
use lptml::lptype::{solve_lptype, Basis, LpTypeProblem, SolverConfig};
use lptml::meb::solve_meb;
use lptml::metric::{ConstraintSet, MetricInstance, PairConstraint};
use lptml::parallel::{derive_seed, run_grid, TaskGrid};
use lptml::sdp::LinearFunctional;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use common::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn exact(inst: &MetricInstance, seed: u64) -> (Basis<DMatrix<f64>>, usize) {
    let all = inst.constraints().all_indices();
    let start = inst.initial_basis(&all).unwrap();
    let mut r = rng(seed);
    let (b, stats) = solve_lptype(inst, &all, start, SolverConfig::default(), &mut r).unwrap();
    (b, stats.recursion_depth_max as usize)
}

fn c1_feasible_exactness() -> Verdict {
    let mut r = rng(101);
    let mut zero = 0;
    let mut worst = 0.0f64;
    for k in 0..100 {
        let d = [2, 3, 4][k % 3];
        let n = r.random_range(50..=200);
        let (cs, _) = planted_instance(&mut r, d, n);
        let inst = MetricInstance::new(cs, derive_seed(1, k as u64, 0)).unwrap();
        let started = Instant::now();
        let (b, _) = exact(&inst, k as u64);
        worst = worst.max(started.elapsed().as_secs_f64());
        let all = inst.constraints().all_indices();
        if let Some(a) = &b.solution {
            if inst.count_violations(a, &all).0 == 0 {
                zero += 1;
            }
        }
    }
    verdict(
        zero == 100 && worst <= 2.0,
        format!("{zero}/100 planted instances solved with zero violations; slowest {worst:.2}s (limit 2s)"),
    )
}

fn c2_scalar_oracle() -> Verdict {
    let mut r = rng(202);
    let started = Instant::now();
    let mut ok = 0;
    let mut worst = 0.0f64;
    for k in 0..50 {
        let n = r.random_range(10..=60);
        let inst = scalar_instance(&mut r, n);
        let opt = inst.opt();
        let cs = Arc::new(inst.cs.clone());
        let cfg = LptmlConfig { t: 200, master_seed: k, ..Default::default() };
        let res = lptml(&cs.all_indices(), cs, &cfg).unwrap();
        let bound = (1.2 * opt as f64).ceil() as usize;
        if res.violations <= bound {
            ok += 1;
        }
        worst = worst.max(res.violations as f64 / opt.max(1) as f64);
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(
        ok >= 45 && secs <= 60.0,
        format!("{ok}/50 within ⌈1.2·OPT⌉ (need 45); worst ratio {worst:.3}; {secs:.1}s total (limit 60s)"),
    )
}

fn cv(ds: &eval::LabeledDataset, learner: Learner, repeats: usize, seed: u64) -> eval::EvalReport {
    eval::cross_validate(
        ds,
        &CvConfig {
            repeats,
            seed,
            learner,
            ..Default::default()
        },
    )
    .unwrap()
}

fn lptml_learner() -> Learner {
    Learner::Lptml(LptmlConfig { t: 2000, workers: 1, ..Default::default() })
}

/// The synthetic criteria average one 2-fold run over each generator seed;
/// a single draw of 100 points moves the accuracy by a few hundredths.
const GENERATOR_SEEDS: u64 = 10;

/// Mean accuracy over the generator seeds, plus the per-seed values.
fn seed_average(make: impl Fn(u64) -> eval::LabeledDataset, learner: &Learner) -> (f64, Vec<f64>) {
    let per: Vec<f64> = (0..GENERATOR_SEEDS).map(|s| cv(&make(s), learner.clone(), 1, s).accuracy_mean).collect();
    (per.iter().sum::<f64>() / per.len() as f64, per)
}

fn rounded(v: &[f64]) -> Vec<f64> {
    v.iter().map(|a| (a * 1000.0).round() / 1000.0).collect()
}

fn poisoned(seed: u64) -> eval::LabeledDataset {
    eval::poison_dataset(&eval::synth_two_gaussians_raw(seed), seed)
}

fn c3_synthetic() -> (Verdict, f64) {
    let (base, _) = seed_average(eval::synth_two_gaussians, &Learner::Identity);
    let started = Instant::now();
    let (acc, per) = seed_average(eval::synth_two_gaussians, &lptml_learner());
    let secs = started.elapsed().as_secs_f64();
    let pass = (0.58..=0.78).contains(&base) && acc >= 0.98 - 1e-12 && secs <= 600.0;
    (
        verdict(
            pass,
            format!(
                "identity 4-NN {base:.3} (band [0.58, 0.78]); LPTML {acc:.3} (need ≥ 0.98) over seeds {:?}; {secs:.1}s (limit 600s)",
                rounded(&per)
            ),
        ),
        acc,
    )
}

fn c4_poisoned(clean: Option<f64>) -> Verdict {
    let clean = clean.unwrap_or_else(|| seed_average(eval::synth_two_gaussians, &lptml_learner()).0);
    let (base, _) = seed_average(poisoned, &Learner::Identity);
    let (acc, per) = seed_average(poisoned, &lptml_learner());
    let drop = clean - acc;
    verdict(
        drop <= 0.05 + 1e-12,
        format!(
            "poisoned LPTML {acc:.3} vs clean {clean:.3}: drop {drop:.3} (limit 0.05); identity on poisoned {base:.3}; seeds {:?}",
            rounded(&per)
        ),
    )
}

fn c5_iris() -> Verdict {
    let started = Instant::now();
    let rep = cv(&eval::iris(), lptml_learner(), 10, 0);
    let secs = started.elapsed().as_secs_f64();
    verdict(
        (0.88..=0.99).contains(&rep.accuracy_mean) && secs <= 1800.0,
        format!(
            "10 executions: {:.3} ± {:.3} (band [0.88, 0.99]); {secs:.1}s (limit 1800s)",
            rep.accuracy_mean, rep.accuracy_std
        ),
    )
}

/// Random pairs in the plane with thresholds that leave both feasible
/// and infeasible subsets.
fn random_instance(seed: u64, d: usize, n: usize) -> MetricInstance {
    let mut r = rng(seed);
    let mut sims = Vec::new();
    let mut dis = Vec::new();
    for _ in 0..n {
        let p = random_points(&mut r, 1, d).remove(0);
        let q = random_points(&mut r, 1, d).remove(0);
        if r.random_bool(0.5) {
            sims.push(PairConstraint::similar(p, q).unwrap());
        } else {
            dis.push(PairConstraint::dissimilar(p, q).unwrap());
        }
    }
    MetricInstance::new(ConstraintSet::new(d, sims, dis, 10.0, 6.0).unwrap(), seed).unwrap()
}

fn value(inst: &MetricInstance, set: &[usize]) -> f64 {
    let b = inst.solution_of_basis(set).unwrap();
    if b.is_feasible() {
        b.value
    } else {
        f64::INFINITY
    }
}

fn increased(after: f64, before: f64) -> bool {
    if before.is_infinite() {
        return false;
    }
    after.is_infinite() || after > before + 1e-6 * (1.0 + before.abs())
}

fn c6_axioms() -> Verdict {
    let inst = random_instance(606, 2, 40);
    let n = inst.num_constraints();
    let mut r = rng(607);
    let all: Vec<usize> = (0..n).collect();

    let mut mono_fail = 0;
    for _ in 0..1000 {
        let mut g = all.clone();
        g.shuffle(&mut r);
        g.truncate(r.random_range(1..=12));
        let mut f = g.clone();
        f.shuffle(&mut r);
        f.truncate(r.random_range(0..=g.len()));
        let (wf, wg) = (value(&inst, &f), value(&inst, &g));
        if wf > wg + 1e-6 * (1.0 + wg.abs()) && !(wf.is_infinite() && wg.is_infinite()) {
            mono_fail += 1;
        }
    }

    let mut loc_fail = 0;
    let mut loc_live = 0;
    let mut triples = 0;
    while triples < 1000 {
        let mut g = all.clone();
        g.shuffle(&mut r);
        let rest = g.split_off(r.random_range(2..=12));
        let gb = inst.solution_of_basis(&g).unwrap();
        let Some(ag) = gb.solution.clone() else { continue };
        // active constraints support the optimum, so w(F) = w(G)
        let mut f: Vec<usize> = g.iter().copied().filter(|&c| inst.constraints().relative_residual(&ag, c) > -1e-5).collect();
        for &c in &g {
            if !f.contains(&c) && r.random_bool(0.3) {
                f.push(c);
            }
        }
        let (wf, wg) = (value(&inst, &f), gb.value);
        if (wf - wg).abs() > 1e-6 * (1.0 + wg.abs()) {
            continue;
        }
        triples += 1;
        let h = rest[r.random_range(0..rest.len())];
        let mut fh = f.clone();
        fh.push(h);
        let mut gh = g.clone();
        gh.push(h);
        if increased(value(&inst, &fh), wf) {
            loc_live += 1;
            if !increased(value(&inst, &gh), wg) {
                loc_fail += 1;
            }
        }
    }

    // basis sizes and eigenvalues of everything the solvers return
    let mut max_basis = 0;
    let mut worst_eig = f64::INFINITY;
    let mut oversize = 0;
    for k in 0..30u64 {
        let d = 2 + (k % 3) as usize;
        let inst = random_instance(700 + k, d, 60);
        let (b, _) = exact(&inst, k);
        max_basis = max_basis.max(b.len());
        if b.len() > inst.max_basis_size() {
            oversize += 1;
        }
        if let Some(a) = &b.solution {
            worst_eig = worst_eig.min(min_eigenvalue(a));
        }
        let cs = inst.shared_constraints();
        let res = lptml(&cs.all_indices(), cs, &LptmlConfig { t: 3, master_seed: k, ..Default::default() }).unwrap();
        worst_eig = worst_eig.min(min_eigenvalue(&res.best.a));
    }
    verdict(
        mono_fail == 0 && loc_fail == 0 && oversize == 0 && worst_eig >= -1e-8,
        format!(
            "monotonicity {mono_fail}/1000 failures; locality {loc_fail}/1000 failures ({loc_live} non-vacuous); \
             largest basis {max_basis} (over-size {oversize}); min eigenvalue {worst_eig:.2e}"
        ),
    )
}

fn c7_meb() -> Verdict {
    let mut r = rng(707);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let d = 2 + k % 2;
        let n = r.random_range(1..=25);
        let pts = random_points(&mut r, n, d);
        let (_, radius) = solve_meb(&pts).unwrap();
        worst = worst.max((radius - brute_force_meb(&pts)).abs());
    }
    verdict(worst <= 1e-7, format!("200 instances, largest radius error {worst:.2e} (limit 1e-7)"))
}

fn spin(seed: u64) -> u64 {
    // about 10 ms of integer work
    let mut x = seed | 1;
    for _ in 0..12_000_000u64 {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
    }
    x
}

fn c8_parallel() -> Verdict {
    let ds = eval::synth_two_gaussians(8);
    let (u, l) = eval::compute_thresholds(&ds).unwrap();
    let pairs = eval::generate_constraints(&ds, 150, 150, 8).unwrap();
    let cs = Arc::new(eval::build_constraint_set(&ds, &pairs, u, l).unwrap());
    let run = |workers| {
        let cfg = LptmlConfig {
            t: 10,
            workers,
            stop_at_zero: false,
            master_seed: 8,
            ..Default::default()
        };
        lptml(&cs.all_indices(), Arc::clone(&cs), &cfg).unwrap()
    };
    let (a, b) = (run(1), run(8));
    let strip = |g: &[lptml::approx::GridRecord]| {
        g.iter()
            .map(|r| (r.i, r.j, r.seed, r.sample_len, r.violations, r.status))
            .collect::<Vec<_>>()
    };
    let same = a.best == b.best && a.violations == b.violations && strip(&a.grid) == strip(&b.grid);

    let grid1 = TaskGrid::new(3, &[1.0; 20], 10, 1);
    let grid4 = TaskGrid::new(3, &[1.0; 20], 10, 4);
    let time = |g: &TaskGrid| {
        let started = Instant::now();
        let out: Vec<u64> = run_grid(g, |t| spin(t.seed)).unwrap().into_iter().map(|o| o.unwrap()).collect();
        (started.elapsed().as_secs_f64(), out)
    };
    let (t1, o1) = time(&grid1);
    let (t4, o4) = time(&grid4);
    let speedup = t1 / t4;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    verdict(
        same && o1 == o4 && speedup >= 1.6,
        format!(
            "workers 1 vs 8 identical: {}; 200 tasks {:.1} ms each: 1 worker {t1:.2}s, 4 workers {t4:.2}s, speedup {speedup:.2}× (need 1.6×; {cores} core(s) available)",
            same && o1 == o4,
            1000.0 * t1 / 200.0
        ),
    )
}

fn c9_dimension_trend() -> Verdict {
    let cfg = LptmlConfig {
        t: 3,
        stop_at_zero: false,
        ..Default::default()
    };
    let counts = PairCounts {
        n_sim: Some(100),
        n_dis: Some(100),
    };
    let dims: Vec<usize> = (2..=8).collect();
    let rows = eval::bench_dimensions(&eval::wine(), &dims, 3, &cfg, counts, 9).unwrap();
    let medians: Vec<f64> = rows.iter().map(|r| r.median).collect();
    let monotone = medians.windows(2).all(|w| w[1] > w[0]);
    verdict(
        monotone,
        format!(
            "median seconds for d = 2..8: {:?}",
            medians.iter().map(|m| (m * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    )
}

fn c10_regularized() -> Verdict {
    let mut r = rng(1010);
    let mut worst = 0.0f64;
    let mut ok = 0;
    let fixtures = 20;
    let started = Instant::now();
    for k in 0..fixtures {
        let n = r.random_range(10..=30);
        let inst = scalar_instance(&mut r, n);
        let c_star = inst.reg_opt(1.0);
        let cs = Arc::new(inst.cs.clone());
        let cfg = LptmlConfig { t: 20, master_seed: k, ..Default::default() };
        let res = lptml_regularized(&cs.all_indices(), cs, &cfg, 1.0, &LinearFunctional::trace(1)).unwrap();
        let cost = res.cost.unwrap();
        let ratio = cost / c_star;
        worst = worst.max(ratio);
        if ratio <= 1.2 + 1e-9 {
            ok += 1;
        }
    }
    verdict(
        ok == fixtures,
        format!(
            "{ok}/{fixtures} fixtures with cost' ≤ 1.2·c*; worst ratio {worst:.3}; {:.1}s",
            started.elapsed().as_secs_f64()
        ),
    )
}

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |k: usize| wanted.is_empty() || wanted.contains(&k);
    let names = [
        "feasible-instance exactness",
        "scalar (1+ε)-optimality against brute force",
        "synthetic recovery",
        "poisoning robustness",
        "Iris accuracy band",
        "axiom suite",
        "enclosing-ball framework check",
        "determinism and parallel speedup",
        "dimension-scaling trend",
        "regularized variant against brute force",
    ];
    let mut failed = 0;
    let mut report = |k: usize, v: Verdict, secs: f64| {
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {k:>2} {} {}: {} [{secs:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            names[k - 1],
            v.detail
        );
    };
    let mut clean = None;
    for k in 1..=10 {
        if !run(k) {
            continue;
        }
        let started = Instant::now();
        let v = match k {
            1 => c1_feasible_exactness(),
            2 => c2_scalar_oracle(),
            3 => {
                let (v, acc) = c3_synthetic();
                clean = Some(acc);
                v
            }
            4 => c4_poisoned(clean),
            5 => c5_iris(),
            6 => c6_axioms(),
            7 => c7_meb(),
            8 => c8_parallel(),
            9 => c9_dimension_trend(),
            _ => c10_regularized(),
        };
        report(k, v, started.elapsed().as_secs_f64());
    }
    println!("acceptance: {failed} criterion(s) failed");
    if failed > 0 && std::env::var("LPTML_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
