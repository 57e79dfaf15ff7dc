//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fail.

use std::process::ExitCode;
use std::time::Instant;

use num::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ndt_core::bounds::{
    assemble_ndt_lp, gap, gap_bound_class, ndt_from_ratios, ndt_lower_coded, ndt_lower_uncoded, ndt_upper,
    optimality_check,
};
use ndt_core::cachesim::simulate;
use ndt_core::dof::per_user_dof;
use ndt_core::lp::{solve, vertex_oracle, LinearProgram, LpSolution, Row, VarBounds};
use ndt_core::model::{feasible_cache_point, feasible_grid, int, ratio, CachePoint, NetworkConfig, Rational, SplitRatios};
use ndt_core::phy::{
    build_case_a, build_case_b, build_case_c_full, check_alignment, finite_n_dof, verify_over_seeds, FiniteDof,
    SchemeCase, DECODE_TOL, NEUTRALIZATION_TOL, RANK_TOL,
};
use ndt_core::regions::{closed_form_2x2, closed_form_3x3, RegionError};

type Outcome = Result<String, String>;
type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn cfg(nt: usize, nr: usize) -> NetworkConfig {
    NetworkConfig::square(nt, nr).unwrap()
}

fn pt(mu_r: Rational, mu_t: Rational) -> CachePoint {
    CachePoint::new(mu_r, mu_t).unwrap()
}

fn upper(c: &NetworkConfig, p: &CachePoint) -> Rational {
    ndt_upper(c, p).unwrap().0
}

/// First failure message, or a summary if none.
fn first_failure(fails: Vec<String>, ok: String) -> Outcome {
    match fails.into_iter().next() {
        Some(f) => Err(f),
        None => Ok(ok),
    }
}

fn closed_form_equivalence() -> Outcome {
    let step = ratio(1, 24);
    let mut fails = Vec::new();
    let mut count = 0;
    for (c, closed) in [
        (cfg(2, 2), closed_form_2x2 as fn(&CachePoint) -> Result<Rational, RegionError>),
        (cfg(3, 3), closed_form_3x3 as fn(&CachePoint) -> Result<Rational, RegionError>),
    ] {
        let grid = feasible_grid(&c, &step).unwrap();
        count += grid.len();
        fails.extend(grid.par_iter().filter_map(|p| {
            let lp = upper(&c, p);
            let cf = closed(p).ok()?;
            (lp != cf).then(|| format!("{c} at {p}: LP {lp} vs closed form {cf}"))
        }).collect::<Vec<_>>());
        fails.extend(grid.iter().filter(|p| closed(p).is_err()).map(|p| format!("{c} at {p}: unclassified")));
    }
    first_failure(fails, format!("{count} points"))
}

fn zero_receiver_cache_curve() -> Outcome {
    let c = cfg(3, 3);
    let mut fails = Vec::new();
    let mut n = 0;
    for k in 8..=24 {
        let mu_t = ratio(k, 24);
        let expected = if mu_t <= ratio(2, 3) {
            ratio(13, 6) - ratio(3, 2) * &mu_t
        } else {
            ratio(3, 2) - &mu_t / int(2)
        };
        let got = upper(&c, &pt(Rational::zero(), mu_t.clone()));
        n += 1;
        if got != expected {
            fails.push(format!("mu_t={mu_t}: {got} vs {expected}"));
        }
    }
    first_failure(fails, format!("{n} points"))
}

fn optimality_regimes() -> Outcome {
    let step = ratio(1, 12);
    let mut checked = 0;
    let mut fails = Vec::new();
    for nt in 2..=4 {
        for nr in 2..=4 {
            let c = cfg(nt, nr);
            let results: Vec<(usize, Vec<String>)> = feasible_grid(&c, &step)
                .unwrap()
                .par_iter()
                .map(|p| {
                    let mut hits = 0;
                    let mut f = Vec::new();
                    let tau = upper(&c, p);
                    if let Some(o) = optimality_check(&c, p, true) {
                        hits += 1;
                        let l1 = ndt_lower_coded(&c, p).tau;
                        if tau != o.tau_star || tau != l1 {
                            f.push(format!("{c} {p} case {}: upper {tau}, stated {}, lower {l1}", o.case.id(), o.tau_star));
                        }
                    }
                    if p.mu_r() + p.mu_t() * int(nt as u64) == Rational::one() {
                        let o = optimality_check(&c, p, false).expect("boundary point matches case 4");
                        hits += 1;
                        let l2 = ndt_lower_uncoded(&c, p).tau;
                        if tau != o.tau_star || tau != l2 {
                            f.push(format!("{c} {p} case 4: upper {tau}, stated {}, uncoded lower {l2}", o.tau_star));
                        }
                    }
                    (hits, f)
                })
                .collect();
            for (h, f) in results {
                checked += h;
                fails.extend(f);
            }
        }
    }
    first_failure(fails, format!("{checked} regime checks"))
}

/// Points of the step-1/12 grid for every `2 <= N_T, N_R <= 5`.
fn gap_grid() -> Vec<(NetworkConfig, CachePoint)> {
    let step = ratio(1, 12);
    let mut out = Vec::new();
    for nt in 2..=5 {
        for nr in 2..=5 {
            let c = cfg(nt, nr);
            out.extend(feasible_grid(&c, &step).unwrap().into_iter().map(|p| (c, p)));
        }
    }
    out
}

fn gap_bounds(grid: &[(NetworkConfig, CachePoint)]) -> Outcome {
    let fails: Vec<String> = grid
        .par_iter()
        .filter_map(|(c, p)| {
            let (g, class) = gap(c, p).unwrap();
            debug_assert_eq!(class, gap_bound_class(c, p));
            (g.value > class.bound()).then(|| format!("{c} {p}: gap {} above {:?}", g.value, class))
        })
        .collect();
    first_failure(fails, format!("{} points", grid.len()))
}

fn dof_fixtures() -> Outcome {
    let mut fails = Vec::new();
    let c = cfg(3, 3);
    for (r, t, d) in [(0, 1, ratio(3, 5)), (0, 2, ratio(6, 7)), (1, 1, ratio(6, 7)), (1, 2, ratio(1, 1)), (1, 3, ratio(1, 1))] {
        let got = per_user_dof(&c, r, t).unwrap().per_user;
        if got != d {
            fails.push(format!("3x3 d_({r},{t}) = {got}, expected {d}"));
        }
    }
    let mut n = 5;
    for nt in 2..=6 {
        for nr in 2..=6 {
            let c = cfg(nt, nr);
            let d01 = per_user_dof(&c, 0, 1).unwrap().per_user;
            let want01 = int(nt as u64) / int((nt + nr - 1) as u64);
            let d0n = per_user_dof(&c, 0, nt).unwrap().per_user;
            let want0n = (int(nt as u64) / int(nr as u64)).min(Rational::one());
            n += 2;
            if d01 != want01 {
                fails.push(format!("{nt}x{nr} d_(0,1) = {d01}, expected {want01}"));
            }
            if d0n != want0n {
                fails.push(format!("{nt}x{nr} d_(0,{nt}) = {d0n}, expected {want0n}"));
            }
        }
    }
    first_failure(fails, format!("{n} values"))
}

/// Random program with at most 8 bounded variables.
fn random_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.gen_range(1..=8);
    let small = |rng: &mut ChaCha8Rng, lo: i64, hi: i64| ratio(rng.gen_range(lo..=hi), rng.gen_range(1..=3));
    let objective = (0..n).map(|_| small(rng, -5, 5)).collect();
    let bounds = (0..n)
        .map(|_| {
            let lo = small(rng, -2, 1);
            let hi = &lo + small(rng, 0, 4);
            VarBounds::new(lo, hi)
        })
        .collect();
    let row = |rng: &mut ChaCha8Rng| Row::new((0..n).map(|_| small(rng, -3, 3)).collect(), small(rng, -4, 6));
    let eq_rows = (0..rng.gen_range(0..=2)).map(|_| row(rng)).collect();
    let le_rows = (0..rng.gen_range(0..=4)).map(|_| row(rng)).collect();
    LinearProgram {
        objective,
        eq_rows,
        le_rows,
        bounds,
    }
}

fn same_value(a: &LpSolution, b: &LpSolution) -> bool {
    match (a, b) {
        (LpSolution::Optimal { value: x, .. }, LpSolution::Optimal { value: y, .. }) => x == y,
        (LpSolution::Infeasible, LpSolution::Infeasible) => true,
        _ => false,
    }
}

fn lp_certification() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let lps: Vec<LinearProgram> = (0..200).map(|_| random_lp(&mut rng)).collect();
    let mut fails: Vec<String> = lps
        .par_iter()
        .enumerate()
        .filter_map(|(i, lp)| {
            let a = solve(lp).unwrap();
            let b = vertex_oracle(lp).unwrap();
            (!same_value(&a, &b)).then(|| format!("random LP {i}: simplex {a:?} vs oracle {b:?}"))
        })
        .collect();
    let feasible_random = lps.iter().filter(|lp| solve(lp).unwrap().is_optimal()).count();
    let step = ratio(1, 24);
    let mut instances = 0;
    for c in [cfg(2, 2), cfg(3, 3)] {
        let grid = feasible_grid(&c, &step).unwrap();
        instances += grid.len();
        fails.extend(grid.par_iter().filter_map(|p| {
            let lp = assemble_ndt_lp(&c, p).unwrap();
            let a = solve(&lp).unwrap();
            let b = vertex_oracle(&lp).unwrap();
            (!same_value(&a, &b)).then(|| format!("{c} at {p}: simplex {a:?} vs oracle {b:?}"))
        }).collect::<Vec<_>>());
    }
    first_failure(
        fails,
        format!("200 random LPs ({feasible_random} feasible), {instances} delivery-time LPs"),
    )
}

fn lower_bound_consistency(grid: &[(NetworkConfig, CachePoint)]) -> Outcome {
    let mut fails: Vec<String> = grid
        .par_iter()
        .filter_map(|(c, p)| {
            let l1 = ndt_lower_coded(c, p).tau;
            let l2 = ndt_lower_uncoded(c, p).tau;
            let u = upper(c, p);
            (!(l1 <= l2 && l2 <= u)).then(|| format!("{c} {p}: L1 {l1}, L2 {l2}, U {u}"))
        })
        .collect();
    for nt in 2..=5 {
        for nr in 2..=5 {
            let c = cfg(nt, nr);
            let l1 = ndt_lower_coded(&c, &pt(Rational::zero(), ratio(1, nt as i64))).tau;
            let want = int((nt + nr - 1) as u64) / int(nt as u64);
            if l1 != want {
                fails.push(format!("{c}: L1(0, 1/N_T) = {l1}, expected {want}"));
            }
        }
    }
    first_failure(fails, format!("{} points", grid.len()))
}

fn simulator_round_trip() -> Outcome {
    let mut samples: Vec<(NetworkConfig, CachePoint, Option<SplitRatios>)> = vec![
        (
            cfg(3, 3),
            CachePoint::frac((1, 3), (2, 3)).unwrap(),
            Some(SplitRatios::new().with(1, 2, ratio(1, 9)).unwrap()),
        ),
        (
            cfg(3, 3),
            CachePoint::frac((2, 3), (1, 3)).unwrap(),
            Some(SplitRatios::new().with(2, 1, ratio(1, 9)).unwrap()),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    while samples.len() < 20 {
        let (nt, nr) = (rng.gen_range(2..=4), rng.gen_range(2..=4));
        let c = cfg(nt, nr);
        let p = pt(ratio(rng.gen_range(0..=12), 12), ratio(rng.gen_range(0..=12), 12));
        if feasible_cache_point(&c, &p) {
            samples.push((c, p, None));
        }
    }
    let expected = [Some(ratio(2, 3)), Some(ratio(1, 3))];
    let fails: Vec<String> = samples
        .into_par_iter()
        .enumerate()
        .filter_map(|(i, (c, p, s))| {
            let sim = match simulate(&c, &p, s, i as u64) {
                Ok(sim) => sim,
                Err(e) => return Some(format!("{c} {p}: {e}")),
            };
            let exact = ndt_from_ratios(&c, &sim.ratios).unwrap();
            if !sim.decode.all_success() {
                return Some(format!("{c} {p}: decode failure"));
            }
            if sim.account.total_ndt != exact {
                return Some(format!("{c} {p}: measured {} vs {exact}", sim.account.total_ndt));
            }
            if let Some(Some(want)) = expected.get(i) {
                if exact != *want {
                    return Some(format!("{c} {p}: delivery time {exact}, expected {want}"));
                }
            }
            None
        })
        .collect();
    first_failure(fails, "20 samples".into())
}

fn phy_neutralization() -> Outcome {
    let mut fails = Vec::new();
    let (mut worst_res, mut worst_sv, mut worst_dec) = (0.0f64, f64::INFINITY, 0.0f64);
    for (c, r, t) in [(cfg(3, 3), 1, 2), (cfg(2, 2), 0, 2)] {
        let s = build_case_a(&c, r, t).unwrap();
        for v in verify_over_seeds(&c, &s, 0..20u64).unwrap() {
            worst_res = worst_res.max(v.max_neutralization_residual);
            worst_sv = worst_sv.min(v.min_singular_ratio());
            worst_dec = worst_dec.max(v.max_decode_error);
            if !v.passed() {
                fails.push(format!("{c} ({r},{t}) seed {}: {v:?}", v.seed));
            }
        }
    }
    let summary = format!(
        "residual {worst_res:.1e} < {NEUTRALIZATION_TOL:.0e}, singular ratio {worst_sv:.1e} > {RANK_TOL:.0e}, decode {worst_dec:.1e} < {DECODE_TOL:.0e}"
    );
    first_failure(fails, summary)
}

fn phy_bookkeeping() -> Outcome {
    let mut fails = Vec::new();
    let c = cfg(3, 3);
    let b = build_case_b(&c, 0, 2, 1).unwrap();
    if (b.desired_per_receiver, b.extension) != (6, 70) {
        fails.push(format!("case B (0,2) N=1: S0={}, S={}", b.desired_per_receiver, b.extension));
    }
    if let Err(e) = check_alignment(&b) {
        fails.push(format!("case B alignment membership: {e}"));
    }
    let limit = FiniteDof::new(&c, SchemeCase::B, 0, 2).unwrap().limit();
    if limit != ratio(6, 7) {
        fails.push(format!("case B limit {limit}"));
    }
    if finite_n_dof(&c, 0, 2, 1, SchemeCase::B).unwrap() != ratio(6, 70) {
        fails.push("case B finite DoF".into());
    }
    let c24 = NetworkConfig::new(2, 4, 4).unwrap();
    let full = build_case_c_full(&c24, 0).unwrap();
    let d = finite_n_dof(&c24, 0, 2, 1, SchemeCase::CFull).unwrap();
    if (full.desired_per_receiver, full.extension) != (3, 9) || d != ratio(1, 3) {
        fails.push(format!(
            "case C t=N_T 2x4 (0,2): S0={}, S={}, DoF {d}",
            full.desired_per_receiver, full.extension
        ));
    }
    first_failure(fails, "S0=6, S=70, limit 6/7; t=N_T DoF 3/9".into())
}

fn random_feasible(rng: &mut ChaCha8Rng, c: &NetworkConfig) -> CachePoint {
    loop {
        let p = pt(ratio(rng.gen_range(0..=24), 24), ratio(rng.gen_range(0..=24), 24));
        if feasible_cache_point(c, &p) {
            return p;
        }
    }
}

fn convexity_monotonicity() -> Outcome {
    let configs: Vec<NetworkConfig> = (2..=3).flat_map(|nt| (2..=4).map(move |nr| cfg(nt, nr))).collect();
    let fails: Vec<String> = configs
        .par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64((c.n_tx() * 10 + c.n_rx()) as u64);
            let mut f = Vec::new();
            for _ in 0..100 {
                let a = random_feasible(&mut rng, c);
                let b = random_feasible(&mut rng, c);
                let mid = pt((a.mu_r() + b.mu_r()) / int(2), (a.mu_t() + b.mu_t()) / int(2));
                let (ua, ub, um) = (upper(c, &a), upper(c, &b), upper(c, &mid));
                if um > (&ua + &ub) / int(2) {
                    f.push(format!("{c}: midpoint of {a} and {b} gives {um} > ({ua} + {ub})/2"));
                }
                // Componentwise-larger caches never deliver slower.
                let hi = pt(a.mu_r().max(b.mu_r()).clone(), a.mu_t().max(b.mu_t()).clone());
                let uh = upper(c, &hi);
                if uh > ua || uh > ub {
                    f.push(format!("{c}: {hi} gives {uh}, above {a} ({ua}) or {b} ({ub})"));
                }
            }
            f
        })
        .collect();
    first_failure(fails, format!("{} configs x 100 segments", configs.len()))
}

fn main() -> ExitCode {
    let grid = gap_grid();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("closed-form equivalence on the 1/24 grid (2x2, 3x3)", Box::new(closed_form_equivalence)),
        ("3x3 delivery time with empty receiver caches", Box::new(zero_receiver_cache_curve)),
        ("optimality regimes reach their stated delivery time", Box::new(optimality_regimes)),
        ("gap within its class bound on the 1/12 grid", Box::new(|| gap_bounds(&grid))),
        ("per-user DoF fixtures", Box::new(dof_fixtures)),
        ("simplex matches vertex enumeration", Box::new(lp_certification)),
        ("lower bounds ordered below the upper bound", Box::new(|| lower_bound_consistency(&grid))),
        ("cache simulator round trip", Box::new(simulator_round_trip)),
        ("PHY neutralization, rank and decoding (case A, 20 seeds)", Box::new(phy_neutralization)),
        ("PHY finite-extension bookkeeping", Box::new(phy_bookkeeping)),
        ("convexity and monotonicity of the upper bound", Box::new(convexity_monotonicity)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2}: PASS  {name} [{detail}] ({secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name}: {why} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
