//! One function per subcommand: resolve the configuration, validate it,
//! run the estimators and write the outputs.

use std::path::PathBuf;

use serde::Serialize;
use spinperc::bootstrap::{flip_times, RateTable};
use spinperc::estimators::{
    covariance_decay, estimate_crossing, heatmap, lag1_autocorrelation, quenched_arm_estimate,
    rho_threshold_sample, t_threshold_sample, thinning_variance_check, Estimate,
};
use spinperc::glauber::{BoundaryCondition, GlauberParams};
use spinperc::osss::{exact_audit, monte_carlo_audit, AuditReport, EnsembleSpec, QuenchedInstance};
use spinperc::rng::replicate_seed;
use spinperc::{sample_marks, BoxRegion};

use crate::config::*;
use crate::output::{Header, Writer};
use crate::CliError;

const DEFAULT_SEED: u64 = 1;
const ESTIMATE_COLUMNS: &str = "param,beta,tau,rho_or_t,n,m,mean,stderr,replicates,seed";

pub fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    if let Some(threads) = cli.common.threads {
        set_threads(threads)?;
    }
    let common = &cli.common;
    let cfg = common.config.as_deref();
    match &cli.command {
        Command::Crossing(a) => crossing(common, merge_with_file(a, cfg)?),
        Command::Rc(a) => rc(common, merge_with_file(a, cfg)?),
        Command::Heatmap(a) => heatmap_cmd(common, merge_with_file(a, cfg)?),
        Command::Bootstrap(a) => bootstrap(common, merge_with_file(a, cfg)?),
        Command::Osss(a) => osss(common, merge_with_file(a, cfg)?),
        Command::Decay(a) => decay(common, merge_with_file(a, cfg)?),
        Command::QuenchedArm(a) => quenched_arm(common, merge_with_file(a, cfg)?),
        Command::ThinningCheck(a) => thinning(common, merge_with_file(a, cfg)?),
    }
}

#[cfg(feature = "parallel")]
fn set_threads(threads: usize) -> Result<(), CliError> {
    if threads == 0 {
        return Err(CliError::Config("--threads must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

#[cfg(not(feature = "parallel"))]
fn set_threads(threads: usize) -> Result<(), CliError> {
    if threads == 0 {
        return Err(CliError::Config("--threads must be positive".into()));
    }
    Ok(())
}

fn seed_of(common: &Common, file_seed: Option<u64>) -> u64 {
    common.seed.or(file_seed).unwrap_or(DEFAULT_SEED)
}

fn need(cond: bool, msg: impl Into<String>) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg.into()))
    }
}

fn check_rho(values: &[f64]) -> Result<(), CliError> {
    need(!values.is_empty(), "the density grid is empty")?;
    for r in values {
        need((0.0..=1.0).contains(r), format!("density {r} outside [0, 1]"))?;
    }
    Ok(())
}

fn estimate_row(param: &str, beta: &str, tau: &str, x: f64, n: u32, m: u32, e: &Estimate, seed: u64) -> String {
    format!(
        "{param},{beta},{tau},{x},{n},{m},{},{},{},{seed}",
        e.mean, e.stderr, e.replicates
    )
}

fn load_table(path: &Option<PathBuf>, epsilon: Option<f64>) -> Result<(RateTable, String), CliError> {
    match path {
        Some(p) => Ok((RateTable::load(p)?, p.display().to_string())),
        None => {
            let eps = epsilon.unwrap_or(0.1);
            Ok((RateTable::counting(eps)?, format!("counting(epsilon={eps})")))
        }
    }
}

#[derive(Serialize)]
struct CrossingResolved {
    model: String,
    beta: Option<f64>,
    tau: Option<f64>,
    k: u32,
    rho: Vec<f64>,
    t: Vec<f64>,
    table: Option<String>,
    n: u32,
    m: u32,
    replicates: u64,
}

fn crossing(common: &Common, (a, file_seed): (CrossingArgs, Option<u64>)) -> Result<Vec<PathBuf>, CliError> {
    let seed = seed_of(common, file_seed);
    let model = a.model.clone().unwrap_or_else(|| "glauber".into());
    let n = a.n.unwrap_or(8);
    let m = a.m.unwrap_or(n);
    let k = a.k.unwrap_or(1);
    let replicates = a.replicates.unwrap_or(1000);
    need(replicates >= 2, "replicates must be at least 2")?;
    match model.as_str() {
        "glauber" => {
            let params = GlauberParams::new(a.beta.unwrap_or(1.0), a.tau.unwrap_or(1.0), k)?;
            let rho = a.rho.clone().unwrap_or_else(|| vec![0.5]);
            check_rho(&rho)?;
            let resolved = CrossingResolved {
                model,
                beta: Some(params.beta),
                tau: Some(params.horizon),
                k,
                rho: rho.clone(),
                t: vec![],
                table: None,
                n,
                m,
                replicates,
            };
            let header = Header::new("crossing", seed, &resolved)?;
            let mut rows = Vec::new();
            for &r in &rho {
                let e = estimate_crossing(&params, r, n, m, replicates, seed)?;
                rows.push(estimate_row(
                    "rho",
                    &params.beta.to_string(),
                    &params.horizon.to_string(),
                    r,
                    n,
                    m,
                    &e,
                    seed,
                ));
            }
            let mut w = Writer::new(&common.out, &header)?;
            w.csv("crossing.csv", ESTIMATE_COLUMNS, &rows)?;
            Ok(w.written)
        }
        "bootstrap" => {
            let (table, table_name) = load_table(&a.rate_table, a.epsilon)?;
            let t = a.t.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0]);
            need(!t.is_empty() && t.iter().all(|x| *x >= 0.0), "times must be non-negative")?;
            let resolved = CrossingResolved {
                model,
                beta: None,
                tau: None,
                k,
                rho: vec![],
                t: t.clone(),
                table: Some(table_name),
                n,
                m,
                replicates,
            };
            let header = Header::new("crossing", seed, &resolved)?;
            let sample = t_threshold_sample(&table, n, m, k, replicates, seed)?;
            let rows: Vec<String> = t
                .iter()
                .map(|&time| {
                    let hits: Vec<bool> = sample.values.iter().map(|&s| s <= time).collect();
                    estimate_row("t", "", "", time, n, m, &Estimate::from_indicators(&hits), seed)
                })
                .collect();
            let mut w = Writer::new(&common.out, &header)?;
            w.csv("crossing.csv", ESTIMATE_COLUMNS, &rows)?;
            Ok(w.written)
        }
        other => Err(CliError::Config(format!("unknown model {other:?}; use glauber or bootstrap"))),
    }
}

#[derive(Serialize)]
struct RcResolved {
    beta: f64,
    tau: Vec<f64>,
    k: u32,
    n: u32,
    m: u32,
    replicates: u64,
}

fn rc(common: &Common, (a, file_seed): (RcArgs, Option<u64>)) -> Result<Vec<PathBuf>, CliError> {
    let seed = seed_of(common, file_seed);
    let n = a.n.unwrap_or(64);
    let r = RcResolved {
        beta: a.beta.unwrap_or(10.0),
        tau: a.tau.clone().unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0, 4.0]),
        k: a.k.unwrap_or(1),
        n,
        m: a.m.unwrap_or(n),
        replicates: a.replicates.unwrap_or(400),
    };
    need(r.replicates >= 1, "replicates must be positive")?;
    need(!r.tau.is_empty(), "the horizon grid is empty")?;
    let params: Vec<GlauberParams> = r
        .tau
        .iter()
        .map(|&t| GlauberParams::new(r.beta, t, r.k))
        .collect::<Result<_, _>>()?;
    let header = Header::new("rc", seed, &r)?;
    let mut rows = Vec::new();
    for p in &params {
        let s = rho_threshold_sample(p, r.n, r.m, r.replicates, seed)?;
        let (lo, hi) = s.median_ci();
        rows.push(format!(
            "rho_c,{},{},{},{},{},{lo},{hi},{},{seed}",
            p.beta,
            p.horizon,
            r.n,
            r.m,
            s.median(),
            r.replicates
        ));
    }
    let mut w = Writer::new(&common.out, &header)?;
    w.csv("rc.csv", "param,beta,tau,n,m,median,ci_low,ci_high,replicates,seed", &rows)?;
    Ok(w.written)
}

fn parse_bc(s: &str) -> Result<BoundaryCondition, CliError> {
    match s {
        "plus" => Ok(BoundaryCondition::AllPlus),
        "minus" => Ok(BoundaryCondition::AllMinus),
        "free" => Ok(BoundaryCondition::Free),
        other => Err(CliError::Config(format!("unknown boundary condition {other:?}; use plus, minus or free"))),
    }
}

#[derive(Serialize)]
struct HeatmapResolved {
    beta: f64,
    tau: f64,
    k: u32,
    width: u32,
    height: u32,
    bc: String,
}

fn heatmap_cmd(common: &Common, (a, file_seed): (HeatmapArgs, Option<u64>)) -> Result<Vec<PathBuf>, CliError> {
    let seed = seed_of(common, file_seed);
    let r = HeatmapResolved {
        beta: a.beta.unwrap_or(3.0),
        tau: a.tau.unwrap_or(6.0),
        k: a.k.unwrap_or(1),
        width: a.width.unwrap_or(64),
        height: a.height.unwrap_or(64),
        bc: a.bc.clone().unwrap_or_else(|| "minus".into()),
    };
    let bc = parse_bc(&r.bc)?;
    need(r.width > 0 && r.height > 0, "width and height must be positive")?;
    let params = GlauberParams::new(r.beta, r.tau, r.k)?;
    let header = Header::new("heatmap", seed, &r)?;
    let window = BoxRegion::new(spinperc::Site::new(0, 0), r.width, r.height);
    let field = heatmap(&params, bc, window, seed)?;
    let rows: Vec<String> = window
        .sites()
        .zip(field.values())
        .map(|(s, v)| format!("{},{},{v}", s.x, s.y))
        .collect();
    let summary = vec![format!(
        "{},{},{},{},{},{}",
        r.beta,
        r.tau,
        r.width,
        r.height,
        r.bc,
        lag1_autocorrelation(&field)
    )];
    let mut w = Writer::new(&common.out, &header)?;
    w.pgm("heatmap.pgm", &field)?;
    w.csv("heatmap.csv", "x,y,threshold", &rows)?;
    w.csv("heatmap_summary.csv", "beta,tau,width,height,bc,lag1_autocorrelation", &summary)?;
    Ok(w.written)
}

#[derive(Serialize)]
struct BootstrapResolved {
    table: String,
    k: u32,
    n: u32,
    m: u32,
    replicates: u64,
}

/// Margin around the box for the pathwise sandwich comparison.
const SANDWICH_MARGIN: u32 = 8;

fn bootstrap(common: &Common, (a, file_seed): (BootstrapArgs, Option<u64>)) -> Result<Vec<PathBuf>, CliError> {
    let seed = seed_of(common, file_seed);
    let (table, table_name) = load_table(&a.rate_table, a.epsilon)?;
    let n = a.n.unwrap_or(32);
    let r = BootstrapResolved {
        table: table_name,
        k: a.k.unwrap_or(1),
        n,
        m: a.m.unwrap_or(n),
        replicates: a.replicates.unwrap_or(200),
    };
    need(r.replicates >= 1 && r.k >= 1, "replicates and k must be positive")?;
    let header = Header::new("bootstrap", seed, &r)?;
    let one = RateTable::constant(1.0);
    let eps = table.epsilon();
    let low = RateTable::constant(eps);
    let sample = t_threshold_sample(&table, r.n, r.m, r.k, r.replicates, seed)?;
    let reference = t_threshold_sample(&one, r.n, r.m, r.k, r.replicates, seed)?;

    // coupled flip times on shared marks: rate 1 <= table <= constant ε
    let window = BoxRegion::crossing(r.n, r.m).expand(SANDWICH_MARGIN);
    let (mut checks, mut violations) = (0u64, 0u64);
    for rep in 0..r.replicates {
        let marks = sample_marks(window, 2.0 / eps, r.k, replicate_seed(seed, rep))?;
        let (t1, tl, te) = (flip_times(&marks, &one), flip_times(&marks, &table), flip_times(&marks, &low));
        for ((a, b), c) in t1.values().iter().zip(tl.values()).zip(te.values()) {
            checks += 1;
            violations += (a > b || b > c) as u64;
        }
    }

    let rows: Vec<String> = sample
        .values
        .iter()
        .zip(&reference.values)
        .enumerate()
        .map(|(i, (t, t1))| format!("{i},{t},{t1},{}", 1.0 - (-t1).exp()))
        .collect();
    let (lo, hi) = sample.median_ci();
    let (lo1, hi1) = reference.median_ci();
    let summary = vec![format!(
        "{},{},{},{},{},{lo},{hi},{},{lo1},{hi1},{},{},{seed},{checks},{violations}",
        r.table.replace(',', ";"),
        eps,
        r.n,
        r.m,
        sample.median(),
        reference.median(),
        1.0 - (-reference.median()).exp(),
        r.replicates,
    )];
    let mut w = Writer::new(&common.out, &header)?;
    w.csv("bootstrap_samples.csv", "replicate,t_star,t_star_rate_one,p_rate_one", &rows)?;
    w.csv(
        "bootstrap.csv",
        "table,epsilon,n,m,t_c,ci_low,ci_high,t_c_rate_one,ci_low_rate_one,ci_high_rate_one,p_c_rate_one,replicates,seed,sandwich_checks,sandwich_violations",
        &summary,
    )?;
    Ok(w.written)
}

#[derive(Serialize)]
struct OsssResolved {
    mode: String,
    beta: f64,
    tau: f64,
    k: u32,
    rho: Vec<f64>,
    n: u32,
    m: u32,
    radius: Option<u32>,
    replicates: Option<u64>,
}

fn report_json(r: &AuditReport) -> serde_json::Value {
    serde_json::json!({
        "rho": r.rho,
        "exact": r.exact,
        "replicates": r.replicates,
        "probability": r.probability,
        "probability_stderr": r.probability_stderr,
        "variance": r.variance,
        "variance_stderr": r.variance_stderr,
        "russo_lhs": r.russo_lhs,
        "russo_lhs_stderr": r.russo_lhs_stderr,
        "russo_rhs": r.russo_rhs,
        "russo_rhs_stderr": r.russo_rhs_stderr,
        "osss_lhs": r.osss_lhs,
        "osss_rhs": r.osss_rhs,
        "good_event_fraction": r.good_event_fraction,
        "max_site_revealment": r.max_site_revealment,
    })
}

fn osss(common: &Common, (a, file_seed): (OsssArgs, Option<u64>)) -> Result<Vec<PathBuf>, CliError> {
    let seed = seed_of(common, file_seed);
    let mode = a.mode.clone().unwrap_or_else(|| "exact".into());
    let exact = match mode.as_str() {
        "exact" => true,
        "mc" => false,
        other => return Err(CliError::Config(format!("unknown mode {other:?}; use exact or mc"))),
    };
    let n = a.n.unwrap_or(if exact { 2 } else { 8 });
    let r = OsssResolved {
        mode,
        beta: a.beta.unwrap_or(1.0),
        tau: a.tau.unwrap_or(if exact { 0.3 } else { 0.5 }),
        k: a.k.unwrap_or(2),
        rho: a.rho.clone().unwrap_or_else(|| vec![0.25, 0.5, 0.75]),
        n,
        m: a.m.unwrap_or(n),
        radius: a.radius,
        replicates: if exact { None } else { Some(a.replicates.unwrap_or(2000)) },
    };
    check_rho(&r.rho)?;
    let params = GlauberParams::new(r.beta, r.tau, r.k)?;
    let header = Header::new("osss", seed, &r)?;
    let reports = if exact {
        let b = BoxRegion::crossing(r.n, r.m);
        let inst = QuenchedInstance::sample(b, b, params, BoundaryCondition::AllMinus, seed)?;
        let radius = r.radius.unwrap_or_else(|| inst.default_radius());
        exact_audit(&inst, &r.rho, radius)?
    } else {
        let spec = EnsembleSpec {
            params,
            n: r.n,
            m: r.m,
            radius: r.radius,
        };
        let reps = r.replicates.unwrap_or(2000);
        need(reps >= 2, "replicates must be at least 2")?;
        r.rho
            .iter()
            .map(|&rho| monte_carlo_audit(&spec, rho, reps, seed))
            .collect::<Result<_, _>>()?
    };
    let mut rows = Vec::new();
    for rep in &reports {
        for line in rep.to_csv().lines().skip(1) {
            rows.push(format!("{},{line}", rep.rho));
        }
    }
    let mut w = Writer::new(&common.out, &header)?;
    w.csv(
        "osss.csv",
        "rho,kind,id,x,y,time,revealment,revealment_stderr,influence,influence_stderr",
        &rows,
    )?;
    w.json("osss.json", serde_json::Value::Array(reports.iter().map(report_json).collect()))?;
    Ok(w.written)
}

#[derive(Serialize)]
struct DecayResolved {
    beta: f64,
    tau: f64,
    k: u32,
    rho: f64,
    distances: Vec<u32>,
    replicates: u64,
}

fn decay(common: &Common, (a, file_seed): (DecayArgs, Option<u64>)) -> Result<Vec<PathBuf>, CliError> {
    let seed = seed_of(common, file_seed);
    let r = DecayResolved {
        beta: a.beta.unwrap_or(0.05),
        tau: a.tau.unwrap_or(5.0),
        k: a.k.unwrap_or(1),
        rho: a.rho.unwrap_or(0.5),
        distances: a.distances.clone().unwrap_or_else(|| vec![0, 1, 2, 4, 6]),
        replicates: a.replicates.unwrap_or(2000),
    };
    check_rho(&[r.rho])?;
    need(r.replicates >= 2, "replicates must be at least 2")?;
    need(!r.distances.is_empty(), "no distances given")?;
    let params = GlauberParams::new(r.beta, r.tau, r.k)?;
    let header = Header::new("decay", seed, &r)?;
    let est = covariance_decay(&params, r.rho, &r.distances, r.replicates, seed)?;
    let rows: Vec<String> = r
        .distances
        .iter()
        .zip(&est)
        .map(|(&d, e)| estimate_row("covariance", &r.beta.to_string(), &r.tau.to_string(), r.rho, d, 0, e, seed))
        .collect();
    let mut w = Writer::new(&common.out, &header)?;
    w.csv("decay.csv", ESTIMATE_COLUMNS, &rows)?;
    Ok(w.written)
}

#[derive(Serialize)]
struct ArmResolved {
    beta: f64,
    tau: f64,
    k: u32,
    rho: f64,
    inner_radius: u32,
    outer_radius: u32,
    outer: u64,
    inner: u64,
}

fn quenched_arm(common: &Common, (a, file_seed): (QuenchedArmArgs, Option<u64>)) -> Result<Vec<PathBuf>, CliError> {
    let seed = seed_of(common, file_seed);
    let r = ArmResolved {
        beta: a.beta.unwrap_or(1.0),
        tau: a.tau.unwrap_or(1.0),
        k: a.k.unwrap_or(1),
        rho: a.rho.unwrap_or(0.5),
        inner_radius: a.inner_radius.unwrap_or(1),
        outer_radius: a.outer_radius.unwrap_or(8),
        outer: a.outer.unwrap_or(50),
        inner: a.inner.unwrap_or(50),
    };
    check_rho(&[r.rho])?;
    need(r.inner_radius < r.outer_radius, "inner_radius must be below outer_radius")?;
    need(r.outer >= 2 && r.inner >= 1, "need at least 2 skeletons and 1 inner replicate")?;
    let params = GlauberParams::new(r.beta, r.tau, r.k)?;
    let header = Header::new("quenched-arm", seed, &r)?;
    let s = quenched_arm_estimate(&params, r.rho, r.inner_radius, r.outer_radius, r.outer, r.inner, seed)?;
    let rows: Vec<String> = s.quenched.iter().enumerate().map(|(i, q)| format!("{i},{q}")).collect();
    let summary = vec![format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{seed}",
        r.beta,
        r.tau,
        r.rho,
        r.inner_radius,
        r.outer_radius,
        r.outer,
        r.inner,
        s.annealed.mean,
        s.annealed.stderr,
        s.quantile(0.5),
        s.quantile(0.9),
        s.quantile(0.99),
        s.quantile(1.0),
    )];
    let mut w = Writer::new(&common.out, &header)?;
    w.csv("quenched_arm.csv", "skeleton,quenched_probability", &rows)?;
    w.csv(
        "quenched_arm_summary.csv",
        "beta,tau,rho,m,n,outer,inner,annealed_mean,annealed_stderr,q50,q90,q99,max,seed",
        &summary,
    )?;
    Ok(w.written)
}

#[derive(Serialize)]
struct ThinningResolved {
    beta: f64,
    tau: f64,
    rho: f64,
    n: u32,
    m: u32,
    k: Vec<u32>,
    outer: u64,
    inner: u64,
}

fn thinning(common: &Common, (a, file_seed): (ThinningArgs, Option<u64>)) -> Result<Vec<PathBuf>, CliError> {
    let seed = seed_of(common, file_seed);
    let n = a.n.unwrap_or(15);
    let r = ThinningResolved {
        beta: a.beta.unwrap_or(1.0),
        tau: a.tau.unwrap_or(0.5),
        rho: a.rho.unwrap_or(0.5),
        n,
        m: a.m.unwrap_or(n),
        k: a.k.clone().unwrap_or_else(|| vec![2, 8, 32]),
        outer: a.outer.unwrap_or(500),
        inner: a.inner.unwrap_or(200),
    };
    check_rho(&[r.rho])?;
    need(!r.k.is_empty() && r.k.iter().all(|&k| k >= 1), "k values must be positive")?;
    need(r.outer >= 2 && r.inner >= 1, "need at least 2 skeletons and 1 inner replicate")?;
    GlauberParams::new(r.beta, r.tau, 1)?;
    let header = Header::new("thinning-check", seed, &r)?;
    let rows: Vec<String> = thinning_variance_check(r.beta, r.tau, r.rho, r.n, r.m, &r.k, r.outer, r.inner, seed)?
        .iter()
        .map(|t| {
            format!(
                "{},{},{},{},{},{},{},{}",
                t.k,
                t.variance.mean,
                t.variance.stderr,
                t.bound,
                t.mean_z,
                r.outer,
                r.inner,
                t.within_bound(3.0)
            )
        })
        .collect();
    let mut w = Writer::new(&common.out, &header)?;
    w.csv("thinning.csv", "k,var_z,stderr,bound,mean_z,outer,inner,within_bound", &rows)?;
    Ok(w.written)
}
