use clap::{Args, Parser, Subcommand};
use hardedge::field::FieldTag;
use hardedge::fredholm::{finite_n_det, laguerre_det, limit_det, SpikedKernelParams, DEFAULT_GL_NODES};
use hardedge::io::{fmt, svg_overlay, OutputDir, RunManifest, Series};
use hardedge::limit_operators::{default_x_max, sample_lambda_r1, sample_lambda_rr, DEFAULT_CELLS};
use hardedge::matrix_models::{build_multispike, build_one_spike, smallest_eigs_multispike, smallest_eigs_one_spike};
use hardedge::mc::{par_map, with_workers};
use hardedge::pde::{solve_fk, PdeGrid, Scheme};
use hardedge::riccati::{estimate_fk, hard_to_soft_cdf, CountMode, HardDiffusionConfig, DEFAULT_STEP};
use hardedge::stats::supercritical::{dufresne_check, matrix_dufresne_check, supercritical_scalar_check};
use hardedge::stats::GofResult;
use hardedge::stochastic::sub_seed;
use hardedge::validate::{run_criterion, ValidateOptions, HARD_SOFT_GRID, N_CRITERIA};
use hardedge::Error;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "hardedge", version, about = "Spiked hard-edge eigenvalue laws by cross-validating numerical routes")]
struct Cli {
    /// Root seed; every task draws from a stream derived from (seed, task).
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "HARDEDGE_WORKERS")]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// TOML file of `key = value` parameters; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Smallest eigenvalues n·λ of the finite-n spiked model.
    FiniteN(FiniteNArgs),
    /// Riccati Monte Carlo estimates of F_k on a μ grid.
    Riccati(RiccatiArgs),
    /// Λ samples from the discretized limit operator.
    Operator(OperatorArgs),
    /// Finite-difference solve of the rank-one PDE chain F_0..F_k.
    Pde(PdeArgs),
    /// β = 2 Fredholm determinants.
    Fredholm(FredholmArgs),
    /// Rescaled hard-edge CDF against the soft-edge CDF.
    HardToSoft(HardToSoftArgs),
    /// Supercritical and Dufresne goodness-of-fit suite.
    Supercritical(SupercriticalArgs),
    /// Cross-method acceptance suite.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct FiniteNArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Spikes c_k (σ_k = c_k/n); `inf` for none. Several values select the block model.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    c: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args, Debug)]
struct RiccatiArgs {
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    c: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mu: Option<Vec<f64>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    /// `zeros` or `explosions`.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    step: Option<f64>,
}

#[derive(Args, Debug)]
struct OperatorArgs {
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    c: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    x_max: Option<f64>,
    /// SDE step of the matrix path (r > 1).
    #[arg(long, allow_negative_numbers = true)]
    step: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args, Debug)]
struct PdeArgs {
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n_mu: Option<usize>,
    #[arg(long)]
    n_c: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    mu_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c_max: Option<f64>,
    /// `implicit-euler` or `crank-nicolson`.
    #[arg(long)]
    scheme: Option<String>,
    /// Probe points `mu:c`, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    probe: Option<Vec<String>>,
}

#[derive(Args, Debug)]
struct FredholmArgs {
    #[arg(long)]
    a: Option<u32>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    c: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t: Option<Vec<f64>>,
    /// Finite-n kernel instead of the limit.
    #[arg(long)]
    n: Option<usize>,
    /// Laguerre (c → 0) kernel of rank r instead of the spiked kernel.
    #[arg(long)]
    laguerre: Option<usize>,
    /// Gauss–Legendre nodes of the largest Nyström solve.
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Args, Debug)]
struct HardToSoftArgs {
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    w: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Option<Vec<f64>>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    soft_step: Option<f64>,
}

#[derive(Args, Debug)]
struct SupercriticalArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    a: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    dufresne_mu: Option<f64>,
    #[arg(long)]
    dufresne_paths: Option<usize>,
    #[arg(long)]
    matrix_paths: Option<usize>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Reduced sample sizes.
    #[arg(long)]
    quick: bool,
    /// Criteria to run (default all).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    criteria: Option<Vec<usize>>,
}

/// Flag, then config file (`[command]` table, then top level), then default.
struct Resolver {
    table: toml::Table,
    command: &'static str,
    used: serde_json::Map<String, serde_json::Value>,
}

impl Resolver {
    fn get<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, Error> {
        let v = match flag {
            Some(v) => v,
            None => {
                let section = self.table.get(self.command).and_then(|s| s.as_table()).and_then(|t| t.get(key));
                match section.or_else(|| self.table.get(key)) {
                    Some(v) => v.clone().try_into().map_err(|e| Error::Domain(format!("config key `{key}`: {e}")))?,
                    None => default,
                }
            }
        };
        self.used.insert(key.to_string(), serde_json::to_value(&v)?);
        Ok(v)
    }
}

enum Outcome {
    Pass,
    Fail,
}

struct Ctx {
    seed: u64,
    workers: Option<usize>,
    out: OutputDir,
    res: Resolver,
    diagnostics: serde_json::Value,
}

fn parse_mode(s: &str) -> Result<CountMode, Error> {
    match s {
        "zeros" => Ok(CountMode::Zeros),
        "explosions" => Ok(CountMode::Explosions),
        _ => Err(Error::Domain(format!("mode must be `zeros` or `explosions`, got `{s}`"))),
    }
}

fn cdf_svg(ctx: &mut Ctx, name: &str, title: &str, x_label: &str, series: Vec<Series>) -> Result<(), Error> {
    ctx.out.text(name, &svg_overlay(title, x_label, &series))
}

fn finite_n(ctx: &mut Ctx, a: FiniteNArgs) -> Result<Outcome, Error> {
    let n = ctx.res.get("n", a.n, 200)?;
    let beta = ctx.res.get("beta", a.beta, 2.0)?;
    let aa = ctx.res.get("a", a.a, 0.0)?;
    let c = ctx.res.get("c", a.c, vec![f64::INFINITY])?;
    let samples = ctx.res.get("samples", a.samples, 10_000)?;
    let k = ctx.res.get("k", a.k, 1)?;
    let sigma: Vec<f64> = c.iter().map(|ck| if ck.is_infinite() { 1.0 } else { ck / n as f64 }).collect();
    let field = if c.len() > 1 { Some(FieldTag::field_from_beta(beta)?) } else { None };
    let rows: Vec<Vec<f64>> = par_map(samples, ctx.seed, |_, rng| {
        Ok(match field {
            None => smallest_eigs_one_spike(&build_one_spike(n, aa, beta, sigma[0], rng)?, k)?.eigenvalues,
            Some(f) => smallest_eigs_multispike(&build_multispike(n, aa, f, &sigma, rng)?, k)?.eigenvalues,
        })
    })
    .into_iter()
    .collect::<Result<_, Error>>()?;
    let csv: Vec<Vec<String>> = rows
        .iter()
        .enumerate()
        .flat_map(|(s, v)| v.iter().enumerate().map(move |(i, x)| vec![s.to_string(), i.to_string(), fmt(*x)]))
        .collect();
    ctx.out.csv("finite_n.csv", &["sample", "index", "n_lambda"], &csv)?;
    let mut l0: Vec<f64> = rows.iter().map(|v| v[0]).collect();
    l0.sort_by(f64::total_cmp);
    cdf_svg(ctx, "finite_n.svg", "empirical CDF of n*lambda_min", "n*lambda", vec![Series::empirical_cdf("finite n", &l0)])?;
    Ok(Outcome::Pass)
}

fn riccati(ctx: &mut Ctx, a: RiccatiArgs) -> Result<Outcome, Error> {
    let beta = ctx.res.get("beta", a.beta, 2.0)?;
    let aa = ctx.res.get("a", a.a, 0.0)?;
    let c = ctx.res.get("c", a.c, vec![f64::INFINITY])?;
    let mus = ctx.res.get("mu", a.mu, vec![0.0])?;
    let k = ctx.res.get("k", a.k, 0)?;
    let paths = ctx.res.get("paths", a.paths, 10_000)?;
    let mode = parse_mode(&ctx.res.get("mode", a.mode, "zeros".to_string())?)?;
    let step = ctx.res.get("step", a.step, DEFAULT_STEP)?;
    let mut ests = Vec::new();
    for (i, &mu) in mus.iter().enumerate() {
        let cfg = HardDiffusionConfig::new(beta, aa, mu, &c)?.with_step(step);
        let e = estimate_fk(&cfg, k, mode, paths, sub_seed(ctx.seed, &format!("mu{i}")))?;
        ests.push((mu, e));
    }
    let rows: Vec<Vec<String>> = ests
        .iter()
        .map(|(mu, e)| {
            vec![
                fmt(*mu),
                e.k.to_string(),
                fmt(e.estimate),
                fmt(e.se),
                e.n_paths.to_string(),
                e.excluded.to_string(),
                e.censored.to_string(),
            ]
        })
        .collect();
    ctx.out.csv("riccati.csv", &["mu", "k", "estimate", "se", "n_paths", "excluded", "censored"], &rows)?;
    let json: Vec<serde_json::Value> =
        ests.iter().map(|(mu, e)| serde_json::json!({"mu": mu, "estimate": e.estimate, "se": e.se, "n_paths": e.n_paths})).collect();
    println!("{}", serde_json::to_string_pretty(&json)?);
    ctx.out.json("riccati.json", &json)?;
    let pts = ests.iter().map(|(mu, e)| (*mu, e.estimate)).collect();
    cdf_svg(ctx, "riccati.svg", "Riccati estimate of F_k", "mu", vec![Series { label: format!("F_{k}"), points: pts }])?;
    ctx.diagnostics = serde_json::json!({
        "excluded": ests.iter().map(|e| e.1.excluded).sum::<usize>(),
        "censored": ests.iter().map(|e| e.1.censored).sum::<usize>(),
    });
    Ok(Outcome::Pass)
}

fn operator(ctx: &mut Ctx, a: OperatorArgs) -> Result<Outcome, Error> {
    let beta = ctx.res.get("beta", a.beta, 2.0)?;
    let aa = ctx.res.get("a", a.a, 0.0)?;
    let c = ctx.res.get("c", a.c, vec![f64::INFINITY])?;
    let samples = ctx.res.get("samples", a.samples, 1000)?;
    let cells = ctx.res.get("cells", a.cells, DEFAULT_CELLS)?;
    let x_max = ctx.res.get("x_max", a.x_max, if c.len() > 1 { 20.0 } else { default_x_max(aa) })?;
    let step = ctx.res.get("step", a.step, 2e-3)?;
    let k = ctx.res.get("k", a.k, 1)?;
    let runs: Vec<Option<Vec<f64>>> = if c.len() == 1 {
        par_map(samples, ctx.seed, |_, rng| sample_lambda_r1(beta, aa, c[0], x_max, cells, k, rng).map(Some))
    } else {
        let field = FieldTag::field_from_beta(beta)?;
        par_map(samples, ctx.seed, |_, rng| sample_lambda_rr(field, aa, &c, x_max, step, cells, k, rng))
    }
    .into_iter()
    .collect::<Result<_, Error>>()?;
    let kept: Vec<&Vec<f64>> = runs.iter().flatten().collect();
    let csv: Vec<Vec<String>> = kept
        .iter()
        .enumerate()
        .flat_map(|(s, v)| v.iter().enumerate().map(move |(i, x)| vec![s.to_string(), i.to_string(), fmt(*x)]))
        .collect();
    ctx.out.csv("operator.csv", &["sample", "index", "lambda"], &csv)?;
    let mut l0: Vec<f64> = kept.iter().map(|v| v[0]).collect();
    l0.sort_by(f64::total_cmp);
    cdf_svg(ctx, "operator.svg", "empirical CDF of Lambda_0", "Lambda", vec![Series::empirical_cdf("operator", &l0)])?;
    ctx.diagnostics = serde_json::json!({ "excluded_ill_conditioned": samples - kept.len() });
    Ok(Outcome::Pass)
}

fn pde(ctx: &mut Ctx, a: PdeArgs) -> Result<Outcome, Error> {
    let d = PdeGrid::default();
    let beta = ctx.res.get("beta", a.beta, 2.0)?;
    let aa = ctx.res.get("a", a.a, 0.0)?;
    let k = ctx.res.get("k", a.k, 0)?;
    let scheme: Scheme = ctx.res.get("scheme", a.scheme, "implicit-euler".to_string())?.parse()?;
    let grid = PdeGrid {
        n_mu: ctx.res.get("n_mu", a.n_mu, d.n_mu)?,
        n_c: ctx.res.get("n_c", a.n_c, d.n_c)?,
        mu_min: ctx.res.get("mu_min", a.mu_min, d.mu_min)?,
        mu_max: ctx.res.get("mu_max", a.mu_max, d.mu_max)?,
        c_max: ctx.res.get("c_max", a.c_max, d.c_max)?,
        scheme,
        ..d
    };
    let probes = ctx.res.get("probe", a.probe, vec!["0:1".to_string()])?;
    let chain = solve_fk(k, beta, aa, &grid)?;
    for s in &chain {
        s.write_csv(&ctx.out.path(&format!("pde_F{}.csv", s.k)))?;
        s.write_binary(&ctx.out.path(&format!("pde_F{}.bin", s.k)))?;
    }
    let mut rows = Vec::new();
    for p in &probes {
        let (mu, c) = p
            .split_once(':')
            .and_then(|(m, c)| Some((m.parse::<f64>().ok()?, c.parse::<f64>().ok()?)))
            .ok_or_else(|| Error::Domain(format!("probe must look like mu:c, got `{p}`")))?;
        for s in &chain {
            rows.push(vec![fmt(mu), fmt(c), s.k.to_string(), fmt(s.probe(mu, c)?)]);
        }
    }
    for r in &rows {
        println!("F_{}({}, {}) = {}", r[2], r[0], r[1], r[3]);
    }
    ctx.out.csv("pde_probes.csv", &["mu", "c", "k", "F"], &rows)?;
    ctx.diagnostics = serde_json::to_value(chain.iter().map(|s| &s.diagnostics).collect::<Vec<_>>())?;
    Ok(Outcome::Pass)
}

fn fredholm(ctx: &mut Ctx, a: FredholmArgs) -> Result<Outcome, Error> {
    let aa = ctx.res.get("a", a.a, 0)?;
    let c = ctx.res.get("c", a.c, vec![1.0])?;
    let ts = ctx.res.get("t", a.t, vec![0.5, 1.0, 2.0])?;
    let n = ctx.res.get("n", a.n, 0)?;
    let lag = ctx.res.get("laguerre", a.laguerre, 0)?;
    let nodes = ctx.res.get("nodes", a.nodes, DEFAULT_GL_NODES)?;
    let params = SpikedKernelParams::new(aa, &c)?;
    let mut rows = Vec::new();
    let mut flags = Vec::new();
    for &t in &ts {
        let d = if lag > 0 {
            laguerre_det(t, lag, aa)?
        } else if n > 0 {
            finite_n_det(t, &params, n, nodes)?
        } else {
            limit_det(t, &params, nodes)?
        };
        println!("t = {t}: det = {} (converged: {})", d.det, d.converged);
        flags.push(d.converged);
        rows.push(vec![fmt(t), fmt(d.det), d.converged.to_string()]);
    }
    ctx.out.csv("fredholm.csv", &["t", "det", "converged"], &rows)?;
    ctx.diagnostics = serde_json::json!({ "converged": flags });
    Ok(Outcome::Pass)
}

fn hard_to_soft(ctx: &mut Ctx, a: HardToSoftArgs) -> Result<Outcome, Error> {
    let beta = ctx.res.get("beta", a.beta, 2.0)?;
    let aa = ctx.res.get("a", a.a, 20.0)?;
    let w = ctx.res.get("w", a.w, 0.0)?;
    let grid = ctx.res.get("lambda", a.lambda, HARD_SOFT_GRID.to_vec())?;
    let paths = ctx.res.get("paths", a.paths, 10_000)?;
    let soft_step = ctx.res.get("soft_step", a.soft_step, 2e-3)?;
    let pts = hard_to_soft_cdf(beta, aa, w, &grid, paths, soft_step, ctx.seed)?;
    let rows: Vec<Vec<String>> =
        pts.iter().map(|p| vec![fmt(p.lambda), fmt(p.hard.estimate), fmt(p.hard.se), fmt(p.soft.estimate), fmt(p.soft.se)]).collect();
    ctx.out.csv("hard_to_soft.csv", &["lambda", "hard", "hard_se", "soft", "soft_se"], &rows)?;
    let sup = pts.iter().map(|p| (p.hard.estimate - p.soft.estimate).abs()).fold(0.0, f64::max);
    println!("sup |hard - soft| = {sup:.4}");
    let series = vec![
        Series { label: format!("hard, a={aa}"), points: pts.iter().map(|p| (p.lambda, p.hard.estimate)).collect() },
        Series { label: "soft".into(), points: pts.iter().map(|p| (p.lambda, p.soft.estimate)).collect() },
    ];
    cdf_svg(ctx, "hard_to_soft.svg", &format!("hard-to-soft, w = {w}"), "lambda", series)?;
    ctx.diagnostics = serde_json::json!({ "sup_diff": sup });
    Ok(Outcome::Pass)
}

fn supercritical(ctx: &mut Ctx, a: SupercriticalArgs) -> Result<Outcome, Error> {
    let betas = ctx.res.get("beta", a.beta, vec![1.0, 2.0])?;
    let aas = ctx.res.get("a", a.a, vec![0.0, 1.0])?;
    let c = ctx.res.get("c", a.c, 1e-3)?;
    let samples = ctx.res.get("samples", a.samples, 5000)?;
    let mu = ctx.res.get("dufresne_mu", a.dufresne_mu, 2.0)?;
    let dpaths = ctx.res.get("dufresne_paths", a.dufresne_paths, 100_000)?;
    let mpaths = ctx.res.get("matrix_paths", a.matrix_paths, 10_000)?;
    let seed = ctx.seed;
    let sub = |l: &str| sub_seed(seed, l);
    let mut out: Vec<GofResult> = Vec::new();
    for &b in &betas {
        for &x in &aas {
            out.push(supercritical_scalar_check(b, x, c, samples, sub(&format!("scalar/{b}/{x}")))?);
        }
    }
    out.push(dufresne_check(mu, dpaths, (20.0 / mu).max(10.0), 1e-3, sub("dufresne"))?);
    if mpaths > 0 {
        out.push(matrix_dufresne_check(2, FieldTag::Complex, 1, mpaths, sub("matrix"))?);
    }
    for g in &out {
        println!("{} {:<40} KS {:.4} (limit {}, n {})", if g.pass { "PASS" } else { "FAIL" }, g.label, g.statistic, g.threshold, g.n);
    }
    ctx.out.json("supercritical.json", &out)?;
    Ok(if out.iter().all(|g| g.pass) { Outcome::Pass } else { Outcome::Fail })
}

fn validate(ctx: &mut Ctx, a: ValidateArgs) -> Result<Outcome, Error> {
    let quick = ctx.res.get("quick", if a.quick { Some(true) } else { None }, false)?;
    let ids = ctx.res.get("criteria", a.criteria, (1..=N_CRITERIA).collect())?;
    let opts = ValidateOptions { quick, seed: ctx.seed, workers: ctx.workers };
    let mut reports = Vec::new();
    for id in ids {
        let r = run_criterion(id, &opts)?;
        println!("{}", r.line());
        reports.push(r);
    }
    let all = reports.iter().all(|r| r.pass);
    println!("{} of {} criteria passed", reports.iter().filter(|r| r.pass).count(), reports.len());
    ctx.out.json("validate.json", &reports)?;
    ctx.diagnostics = serde_json::json!({ "passed": reports.iter().filter(|r| r.pass).map(|r| r.id).collect::<Vec<_>>() });
    Ok(if all { Outcome::Pass } else { Outcome::Fail })
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    let table = match &cli.config {
        Some(p) => std::fs::read_to_string(p)?.parse::<toml::Table>().map_err(|e| Error::Domain(format!("config {}: {e}", p.display())))?,
        None => toml::Table::new(),
    };
    let name = match &cli.command {
        Command::FiniteN(_) => "finite-n",
        Command::Riccati(_) => "riccati",
        Command::Operator(_) => "operator",
        Command::Pde(_) => "pde",
        Command::Fredholm(_) => "fredholm",
        Command::HardToSoft(_) => "hard-to-soft",
        Command::Supercritical(_) => "supercritical",
        Command::Validate(_) => "validate",
    };
    let mut ctx = Ctx {
        seed: cli.seed,
        workers: cli.workers,
        out: OutputDir::create(&cli.out)?,
        res: Resolver { table, command: name, used: serde_json::Map::new() },
        diagnostics: serde_json::Value::Null,
    };
    let start = Instant::now();
    let workers = cli.workers;
    let outcome = with_workers(workers, || match cli.command {
        Command::FiniteN(a) => finite_n(&mut ctx, a),
        Command::Riccati(a) => riccati(&mut ctx, a),
        Command::Operator(a) => operator(&mut ctx, a),
        Command::Pde(a) => pde(&mut ctx, a),
        Command::Fredholm(a) => fredholm(&mut ctx, a),
        Command::HardToSoft(a) => hard_to_soft(&mut ctx, a),
        Command::Supercritical(a) => supercritical(&mut ctx, a),
        Command::Validate(a) => validate(&mut ctx, a),
    })?;
    let mut m = RunManifest::new(name, cli.seed, workers, serde_json::Value::Object(ctx.res.used));
    m.wall_seconds = start.elapsed().as_secs_f64();
    m.diagnostics = ctx.diagnostics;
    m.artifacts = ctx.out.written;
    m.write(&ctx.out.dir)?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e @ Error::Domain(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
