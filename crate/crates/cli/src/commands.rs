use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndt_core::bounds::{gap, ndt_from_ratios, ndt_lower_coded, ndt_lower_uncoded, ndt_report, ndt_upper, GapBoundClass};
use ndt_core::cachesim::{simulate, DecodeFailure};
use ndt_core::dof::{dof_table, sum_dof, DofCase};
use ndt_core::model::{
    feasible_grid, parse_rational, CacheStateIndex, CachePoint, ModelError, NetworkConfig,
    Rational, SplitRatios,
};
use ndt_core::phy::{
    build_scheme, delivery_plan, finite_n_dof, verify_over_seeds, DeliveryPlan, FiniteDof, SchemeCase, DECODE_TOL,
    NEUTRALIZATION_TOL, RANK_TOL,
};
use ndt_core::regions::{classify_2x2, classify_3x3, closed_form_2x2, closed_form_3x3, Network};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::render::{ratios_map, sig12, write_csv, write_json, Exact, OrderedMap};

#[derive(Debug, Serialize)]
struct NetworkJson {
    n_tx: usize,
    n_rx: usize,
    n_files: usize,
}

impl From<&NetworkConfig> for NetworkJson {
    fn from(c: &NetworkConfig) -> Self {
        NetworkJson {
            n_tx: c.n_tx(),
            n_rx: c.n_rx(),
            n_files: c.n_files(),
        }
    }
}

/// Range and feasibility failures both exit as infeasible input.
pub fn cache_point(cfg: &NetworkConfig, mu_r: &Rational, mu_t: &Rational) -> Result<CachePoint, CliError> {
    let pt = CachePoint::new(mu_r.clone(), mu_t.clone()).map_err(|e| CliError::Infeasible(e.to_string()))?;
    pt.require_feasible(cfg).map_err(|e| CliError::Infeasible(e.to_string()))?;
    Ok(pt)
}

#[derive(Debug, Serialize)]
struct OptimalityJson {
    case: u8,
    tau_star: Exact,
}

#[derive(Debug, Serialize)]
struct GapBoundJson {
    class: &'static str,
    bound: Exact,
}

#[derive(Debug, Serialize)]
struct LowerArgmaxJson {
    l: usize,
    s1: usize,
    s2: usize,
}

#[derive(Debug, Serialize)]
struct ComputeJson {
    network: NetworkJson,
    mu_r: Exact,
    mu_t: Exact,
    intra_file_coding: bool,
    tau_upper: Exact,
    split_ratios: OrderedMap<Exact>,
    tau_lower_coded: Exact,
    tau_lower_uncoded: Exact,
    lower_argmax: LowerArgmaxJson,
    optimality: Option<OptimalityJson>,
    gap: Exact,
    gap_bound: GapBoundJson,
}

fn class_name(c: &GapBoundClass) -> &'static str {
    match c {
        GapBoundClass::Two => "two",
        GapBoundClass::Twelve => "twelve",
        GapBoundClass::XChannel(_) => "x_channel",
    }
}

pub fn compute(cfg: &NetworkConfig, pt: &CachePoint, intra_file_coding: bool, out: Option<&Path>) -> Result<(), CliError> {
    let r = ndt_report(cfg, pt, intra_file_coding)?;
    let (l, s1, s2) = r.lower_argmax;
    let json = ComputeJson {
        network: cfg.into(),
        mu_r: pt.mu_r().into(),
        mu_t: pt.mu_t().into(),
        intra_file_coding,
        tau_upper: (&r.tau_upper).into(),
        split_ratios: OrderedMap(ratios_map(&r.ratios)),
        tau_lower_coded: (&r.tau_lower_coded).into(),
        tau_lower_uncoded: (&r.tau_lower_uncoded).into(),
        lower_argmax: LowerArgmaxJson { l, s1, s2 },
        optimality: r.optimality.map(|o| OptimalityJson {
            case: o.case.id(),
            tau_star: (&o.tau_star).into(),
        }),
        gap: (&r.gap.value).into(),
        gap_bound: GapBoundJson {
            class: class_name(&r.gap_bound_class),
            bound: (&r.gap_bound_class.bound()).into(),
        },
    };
    Ok(write_json(&json, out)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepMode {
    Upper,
    Lower,
    Gap,
    Regions,
}

/// Region label where a closed form exists, otherwise empty.
fn region_label(cfg: &NetworkConfig, pt: &CachePoint) -> String {
    let id = match Network::of(cfg) {
        Some(Network::TwoByTwo) => classify_2x2(pt).ok(),
        Some(Network::ThreeByThree) => classify_3x3(pt).ok(),
        None => None,
    };
    id.map(|i| i.to_string()).unwrap_or_default()
}

struct SweepRow {
    mu_r: Rational,
    mu_t: Rational,
    tau_upper: Option<Rational>,
    lower: Option<(Rational, Rational)>,
    gap: Option<Rational>,
    region: Option<String>,
}

type Column = Box<dyn Fn(&SweepRow) -> Option<Rational>>;

fn sweep_row(cfg: &NetworkConfig, pt: &CachePoint, mode: SweepMode) -> Result<SweepRow, CliError> {
    let needs_upper = mode != SweepMode::Lower;
    let needs_lower = mode != SweepMode::Upper;
    let needs_gap = matches!(mode, SweepMode::Gap | SweepMode::Regions);
    Ok(SweepRow {
        mu_r: pt.mu_r().clone(),
        mu_t: pt.mu_t().clone(),
        tau_upper: needs_upper.then(|| ndt_upper(cfg, pt).map(|u| u.0)).transpose()?,
        lower: needs_lower.then(|| (ndt_lower_coded(cfg, pt).tau, ndt_lower_uncoded(cfg, pt).tau)),
        gap: needs_gap.then(|| gap(cfg, pt).map(|g| g.0.value)).transpose()?,
        region: (mode == SweepMode::Regions).then(|| region_label(cfg, pt)),
    })
}

pub fn sweep(cfg: &NetworkConfig, step: &Rational, mode: SweepMode, json: bool, out: Option<&Path>) -> Result<(), CliError> {
    let grid = feasible_grid(cfg, step)?;
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|pt| sweep_row(cfg, pt, mode))
        .collect::<Result<_, _>>()?;

    let mut columns: Vec<(&str, Column)> = vec![
        ("mu_r", Box::new(|r| Some(r.mu_r.clone()))),
        ("mu_t", Box::new(|r| Some(r.mu_t.clone()))),
    ];
    if mode != SweepMode::Lower {
        columns.push(("tau_upper", Box::new(|r| r.tau_upper.clone())));
    }
    if mode != SweepMode::Upper {
        columns.push(("tau_l1", Box::new(|r| r.lower.as_ref().map(|l| l.0.clone()))));
        columns.push(("tau_l2", Box::new(|r| r.lower.as_ref().map(|l| l.1.clone()))));
    }
    if matches!(mode, SweepMode::Gap | SweepMode::Regions) {
        columns.push(("gap", Box::new(|r| r.gap.clone())));
    }
    let values = |r: &SweepRow| -> Vec<Rational> { columns.iter().map(|(_, f)| f(r).expect("column computed")).collect() };

    if json {
        let out_rows: Vec<OrderedMap<serde_json::Value>> = rows
            .iter()
            .map(|r| {
                let mut fields: Vec<(String, serde_json::Value)> = columns
                    .iter()
                    .zip(values(r))
                    .map(|((name, _), v)| (name.to_string(), serde_json::to_value(Exact::from(&v)).expect("serializable")))
                    .collect();
                if let Some(region) = &r.region {
                    fields.push(("region".into(), region.clone().into()));
                }
                OrderedMap(fields)
            })
            .collect();
        return Ok(write_json(&out_rows, out)?);
    }

    let mut header: Vec<String> = columns.iter().map(|(n, _)| n.to_string()).collect();
    if mode == SweepMode::Regions {
        header.push("region".into());
    }
    header.extend(columns.iter().map(|(n, _)| format!("{n}_exact")));
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let v = values(r);
            let mut row: Vec<String> = v.iter().map(sig12).collect();
            if let Some(region) = &r.region {
                row.push(region.clone());
            }
            row.extend(v.iter().map(|x| x.to_string()));
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok(write_csv(&header, &table, out)?)
}

#[derive(Debug, Serialize)]
struct RegionJson {
    mu_r: Exact,
    mu_t: Exact,
    region: String,
    tau_upper: Exact,
}

/// Closed-form region map of the 2x2 or 3x3 network.
pub fn regions(cfg: &NetworkConfig, step: &Rational, json: bool, out: Option<&Path>) -> Result<(), CliError> {
    let network = Network::of(cfg)
        .ok_or_else(|| CliError::Usage(format!("region maps exist only for 2x2 and 3x3 networks, not {cfg}")))?;
    let grid = feasible_grid(cfg, step)?;
    let rows: Vec<(CachePoint, String, Rational)> = grid
        .into_iter()
        .map(|pt| {
            let (id, tau) = match network {
                Network::TwoByTwo => (classify_2x2(&pt), closed_form_2x2(&pt)),
                Network::ThreeByThree => (classify_3x3(&pt), closed_form_3x3(&pt)),
            };
            let id = id.map_err(|e| CliError::Usage(e.to_string()))?;
            let tau = tau.map_err(|e| CliError::Usage(e.to_string()))?;
            Ok((pt, id.to_string(), tau))
        })
        .collect::<Result<_, CliError>>()?;
    if json {
        let out_rows: Vec<RegionJson> = rows
            .iter()
            .map(|(pt, region, tau)| RegionJson {
                mu_r: pt.mu_r().into(),
                mu_t: pt.mu_t().into(),
                region: region.clone(),
                tau_upper: tau.into(),
            })
            .collect();
        return Ok(write_json(&out_rows, out)?);
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|(pt, region, tau)| {
            vec![
                sig12(pt.mu_r()),
                sig12(pt.mu_t()),
                region.clone(),
                sig12(tau),
                pt.mu_r().to_string(),
                pt.mu_t().to_string(),
                tau.to_string(),
            ]
        })
        .collect();
    let header = ["mu_r", "mu_t", "region", "tau_upper", "mu_r_exact", "mu_t_exact", "tau_upper_exact"];
    Ok(write_csv(&header, &table, out)?)
}

/// Reads a JSON object mapping `"r,t"` to rational strings.
pub fn read_ratios(path: &Path) -> Result<SplitRatios, CliError> {
    let text = fs::read_to_string(path)?;
    let raw: BTreeMap<String, String> =
        serde_json::from_str(&text).map_err(|e| CliError::RatiosFile(e.to_string()))?;
    let mut s = SplitRatios::new();
    for (key, value) in raw {
        let idx: CacheStateIndex = key.parse()?;
        s.set(idx, parse_rational(&value)?)?;
    }
    Ok(s)
}

#[derive(Debug, Serialize)]
struct GroupJson {
    r: usize,
    t: usize,
    messages: usize,
    messages_per_receiver: usize,
    message_bits: usize,
    group_ndt: Exact,
}

#[derive(Debug, Serialize)]
struct FailureJson {
    receiver: usize,
    file: usize,
    kind: &'static str,
    subfile: String,
}

#[derive(Debug, Serialize)]
struct SimulateJson {
    network: NetworkJson,
    mu_r: Exact,
    mu_t: Exact,
    seed: u64,
    file_size_bits: usize,
    split_ratios: OrderedMap<Exact>,
    groups: Vec<GroupJson>,
    total_ndt: Exact,
    expected_ndt: Exact,
    all_success: bool,
    failures: Vec<FailureJson>,
}

pub fn simulate_cmd(
    cfg: &NetworkConfig,
    pt: &CachePoint,
    ratios: Option<SplitRatios>,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let sim = simulate(cfg, pt, ratios, seed)?;
    let expected = ndt_from_ratios(cfg, &sim.ratios)?;
    let groups = sim
        .account
        .per_group
        .iter()
        .map(|(idx, g)| GroupJson {
            r: idx.r,
            t: idx.t,
            messages: sim.message_counts.get(idx).copied().unwrap_or(0),
            messages_per_receiver: g.messages_per_receiver,
            message_bits: g.message_bits,
            group_ndt: (&g.group_ndt).into(),
        })
        .collect();
    let failures: Vec<FailureJson> = sim
        .decode
        .receivers
        .iter()
        .filter_map(|o| {
            let (kind, key) = match o.failure.as_ref()? {
                DecodeFailure::Unrecoverable(k) => ("unrecoverable", k),
                DecodeFailure::Mismatch(k) => ("mismatch", k),
            };
            Some(FailureJson {
                receiver: o.receiver,
                file: o.file,
                kind,
                subfile: format!("{key:?}"),
            })
        })
        .collect();
    let json = SimulateJson {
        network: cfg.into(),
        mu_r: pt.mu_r().into(),
        mu_t: pt.mu_t().into(),
        seed,
        file_size_bits: sim.file_size_bits,
        split_ratios: OrderedMap(ratios_map(&sim.ratios)),
        groups,
        total_ndt: (&sim.account.total_ndt).into(),
        expected_ndt: (&expected).into(),
        all_success: sim.decode.all_success(),
        failures,
    };
    write_json(&json, out)?;
    if json.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Decode {
            failed: json.failures.len(),
            receivers: sim.decode.receivers.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CaseArg {
    /// Pick from `r + t` and `t`.
    Auto,
    A,
    B,
    CPartial,
    CFull,
}

fn resolve_case(cfg: &NetworkConfig, arg: CaseArg, r: usize, t: usize) -> SchemeCase {
    match arg {
        CaseArg::A => SchemeCase::A,
        CaseArg::B => SchemeCase::B,
        CaseArg::CPartial => SchemeCase::CPartial,
        CaseArg::CFull => SchemeCase::CFull,
        CaseArg::Auto if r + t >= cfg.n_rx() => SchemeCase::A,
        CaseArg::Auto if r + t + 1 == cfg.n_rx() => SchemeCase::B,
        CaseArg::Auto => SchemeCase::c_for(cfg, t),
    }
}

#[derive(Debug, Serialize)]
struct Tolerances {
    neutralization: f64,
    rank: f64,
    decode: f64,
}

#[derive(Debug, Serialize)]
struct VerifyJson {
    network: NetworkJson,
    case: String,
    r: usize,
    t: usize,
    n: u32,
    extension: usize,
    desired_per_receiver: usize,
    seeds: Vec<u64>,
    alignment_membership: bool,
    max_neutralization_residual: f64,
    max_alignment_error: f64,
    min_singular_ratio: f64,
    max_decode_error: f64,
    failed_seeds: Vec<u64>,
    finite_dof: Exact,
    limit_dof: Exact,
    tolerances: Tolerances,
    passed: bool,
}

pub struct VerifyArgs {
    pub r: usize,
    pub t: usize,
    pub case: CaseArg,
    pub n: u32,
    pub first_seed: u64,
    pub seeds: u64,
}

pub fn verify_phy(cfg: &NetworkConfig, a: &VerifyArgs, out: Option<&Path>) -> Result<(), CliError> {
    if a.seeds == 0 {
        return Err(CliError::Usage("need at least one seed".into()));
    }
    let case = resolve_case(cfg, a.case, a.r, a.t);
    let scheme = build_scheme(cfg, case, a.r, a.t, a.n)?;
    let seeds: Vec<u64> = (a.first_seed..a.first_seed + a.seeds).collect();
    let results = verify_over_seeds(cfg, &scheme, seeds.clone())?;
    let fold = |f: fn(&ndt_core::phy::Verification) -> f64, pick: fn(f64, f64) -> f64, init: f64| {
        results.iter().map(f).fold(init, pick)
    };
    let json = VerifyJson {
        network: cfg.into(),
        case: case.to_string(),
        r: a.r,
        t: a.t,
        n: a.n,
        extension: scheme.extension,
        desired_per_receiver: scheme.desired_per_receiver,
        seeds,
        alignment_membership: results.iter().all(|v| v.alignment_membership),
        max_neutralization_residual: fold(|v| v.max_neutralization_residual, f64::max, 0.0),
        max_alignment_error: fold(|v| v.max_alignment_error, f64::max, 0.0),
        min_singular_ratio: fold(|v| v.min_singular_ratio(), f64::min, f64::INFINITY),
        max_decode_error: fold(|v| v.max_decode_error, f64::max, 0.0),
        failed_seeds: results.iter().filter(|v| !v.passed()).map(|v| v.seed).collect(),
        finite_dof: (&finite_n_dof(cfg, a.r, a.t, a.n, case)?).into(),
        limit_dof: (&FiniteDof::new(cfg, case, a.r, a.t)?.limit()).into(),
        tolerances: Tolerances {
            neutralization: NEUTRALIZATION_TOL,
            rank: RANK_TOL,
            decode: DECODE_TOL,
        },
        passed: results.iter().all(|v| v.passed()),
    };
    write_json(&json, out)?;
    if json.passed {
        Ok(())
    } else {
        Err(CliError::PhyCheck {
            failed: json.failed_seeds.len(),
            seeds: results.len(),
        })
    }
}

fn case_name(c: DofCase) -> &'static str {
    match c {
        DofCase::Full => "full",
        DofCase::OneResidual => "one_residual",
        DofCase::SplitOrAlign => "split_or_align",
    }
}

fn plan_name(p: &DeliveryPlan) -> String {
    match p {
        DeliveryPlan::Direct(c) => format!("case {c}"),
        DeliveryPlan::ReceiverSetSplit => "receiver-set split".into(),
        DeliveryPlan::Reduced { t_prime, case } => format!("case {case} over {t_prime}-transmitter groups"),
    }
}

#[derive(Debug, Serialize)]
struct DofJson {
    r: usize,
    t: usize,
    case: &'static str,
    best_t_prime: Option<usize>,
    plan: String,
    per_user: Exact,
    sum: Exact,
}

pub fn dof_table_cmd(cfg: &NetworkConfig, json: bool, out: Option<&Path>) -> Result<(), CliError> {
    let rows: Vec<(DofJson, Rational, Rational)> = dof_table(cfg)
        .into_iter()
        .map(|e| {
            let plan = delivery_plan(cfg, e.r, e.t).map(|p| plan_name(&p.0)).unwrap_or_default();
            let sum = sum_dof(cfg, e.r, e.t).map_err(|err| CliError::Usage(err.to_string()))?;
            let row = DofJson {
                r: e.r,
                t: e.t,
                case: case_name(e.case),
                best_t_prime: e.best_t_prime,
                plan,
                per_user: (&e.per_user).into(),
                sum: (&sum).into(),
            };
            Ok((row, e.per_user, sum))
        })
        .collect::<Result<_, CliError>>()?;
    if json {
        let rows: Vec<&DofJson> = rows.iter().map(|r| &r.0).collect();
        return Ok(write_json(&rows, out)?);
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|(d, per_user, sum)| {
            vec![
                d.r.to_string(),
                d.t.to_string(),
                d.case.to_string(),
                d.best_t_prime.map(|t| t.to_string()).unwrap_or_default(),
                d.plan.clone(),
                sig12(per_user),
                sig12(sum),
                per_user.to_string(),
                sum.to_string(),
            ]
        })
        .collect();
    let header = [
        "r", "t", "case", "best_t_prime", "plan", "per_user", "sum", "per_user_exact", "sum_exact",
    ];
    Ok(write_csv(&header, &table, out)?)
}

/// Network from the shared flags; the library defaults to one file per receiver.
pub fn network(nt: usize, nr: usize, l: Option<usize>) -> Result<NetworkConfig, ModelError> {
    NetworkConfig::new(nt, nr, l.unwrap_or(nr))
}
