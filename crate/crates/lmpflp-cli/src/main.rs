mod files;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use files::{read_instance, read_solution, write_solution, Manifest};
use lmpflp::factor_lp::{
    discrete_dual, eta1_search, eta2_search, eta_general_fl, eta_general_fl_max, solve_factor, RhoEval, Variant,
};
use lmpflp::instance::{
    brute_force_kmedian, brute_force_ufl, gen_euclidean, gen_ls_counterexample, serialize_instance, CostLaw, Instance,
    Solution, MAX_ENUM_FACILITIES,
};
use lmpflp::jms::{jms_run, verify_lmp};
use lmpflp::local_search::{localsearch_jms, swap_local_search, SearchConfig, ThresholdMode};
use lmpflp::pipeline::{kmedian_solve, rho_kmed_eval, rho_kmed_refined, BoundsReport, RHO_BR};
use lmpflp::structure::{
    check_lemma_4_2, check_lemma_6_2, check_theorem_3_1, check_theorem_6_4, classify_general, classify_uniform,
    sample_opt_dagger, GeneralParams,
};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const DEFAULT_SEED: u64 = 1;

#[derive(Parser)]
#[command(name = "lmpflp", version, about = "Facility location and k-median experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an FLP instance.
    Gen(GenArgs),
    /// Run a solver on an instance.
    Solve(SolveArgs),
    /// Solve factor-revealing programs over a (q, T) grid, as CSV.
    Factor(FactorArgs),
    /// Evaluate the bound searches and factor formulas.
    Bounds(BoundsArgs),
    /// Compare two solutions and check the structural inequalities.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Euclidean,
    LsTrap,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 6)]
    m: usize,
    #[arg(long, default_value_t = 15)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// `uniform:<c>` or `range:<lo>:<hi>`.
    #[arg(long, default_value = "range:0.1:1")]
    cost: String,
    #[arg(long, env = "LMPFLP_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    delta: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Alg {
    Jms,
    #[value(name = "jms+ls")]
    JmsLs,
    Lsjms,
    Oracle,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "jms")]
    alg: Alg,
    /// Solve k-median with this many facilities instead of UFL.
    #[arg(long)]
    k: Option<usize>,
    /// Replace every opening cost by this value.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Swap width of `jms+ls`.
    #[arg(long, default_value_t = 2)]
    delta: usize,
    #[arg(long)]
    relative: bool,
    /// Also run the exact oracle and report the ratio.
    #[arg(long)]
    oracle: bool,
    /// Print the JMS event log or local-search move log.
    #[arg(long)]
    log: bool,
    #[arg(long, env = "LMPFLP_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write the solution file here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FactorArgs {
    /// Comma-separated client counts.
    #[arg(long, value_delimiter = ',', required = true)]
    q: Vec<usize>,
    /// Comma-separated caps; `inf` drops the cap.
    #[arg(long = "T", value_delimiter = ',', default_value = "inf")]
    t: Vec<String>,
    #[arg(long, default_value = "plain")]
    variant: String,
    /// Also build the dual witness at this `z`.
    #[arg(long)]
    dual_z: Option<f64>,
    #[arg(long, default_value_t = 600.0)]
    budget_seconds: f64,
    /// Skip this many grid rows (printed when a budget runs out).
    #[arg(long, default_value_t = 0)]
    resume: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Evaluate the k-median factor at `--eta2`.
    #[arg(long)]
    rho_kmed: bool,
    #[arg(long)]
    eta2: Option<f64>,
    #[arg(long, default_value_t = RHO_BR)]
    rho_br: f64,
    /// Run the η₂ search with factor programs at this q (0 for the analytic bound).
    #[arg(long)]
    eta2_q: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    beta2: f64,
    /// Run the η₁ search at these comma-separated `a`.
    #[arg(long, value_delimiter = ',')]
    eta1_a: Vec<f64>,
    /// Closed-form general-cost improvement at δ.
    #[arg(long)]
    eta_general_delta: Option<f64>,
    /// Maximum of the general-cost improvement over δ.
    #[arg(long)]
    eta_general: bool,
    /// Two-parameter factor with η₁, η₂ searched per point.
    #[arg(long)]
    refined: bool,
    #[arg(long, default_value_t = 6)]
    grid: usize,
    #[arg(long, default_value_t = 600.0)]
    budget_seconds: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Thm31,
    Lem42,
    Thm64,
    Lem62,
    Lem63,
}

#[derive(Args)]
struct AnalyzeArgs {
    instance: PathBuf,
    #[arg(long)]
    sol: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long)]
    slack: Option<f64>,
    #[arg(long, value_enum, value_delimiter = ',')]
    check: Vec<Check>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, env = "LMPFLP_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Factor(a) => cmd_factor(a),
        Cmd::Bounds(a) => cmd_bounds(a),
        Cmd::Analyze(a) => cmd_analyze(a),
    };
    match out {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn parse_law(s: &str) -> Result<CostLaw> {
    let parts: Vec<&str> = s.split(':').collect();
    Ok(match parts.as_slice() {
        ["uniform", c] => CostLaw::Uniform(c.parse()?),
        ["range", lo, hi] => CostLaw::Range(lo.parse()?, hi.parse()?),
        _ => bail!("cost law must be uniform:<c> or range:<lo>:<hi>, got {s}"),
    })
}

fn emit(out: &Option<PathBuf>, text: &str, mut manifest: Manifest, extra: &[(PathBuf, String)]) -> Result<()> {
    match out {
        None => print!("{text}"),
        Some(p) => {
            manifest.emit(p, text)?;
            for (q, t) in extra {
                manifest.emit(q, t)?;
            }
            manifest.finish(p)?;
        }
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<bool> {
    let manifest = Manifest::new(Some(a.seed));
    match a.kind {
        Kind::Euclidean => {
            let inst: Instance = gen_euclidean(a.seed, a.m, a.n, a.dim, parse_law(&a.cost)?)?;
            emit(&a.out, &serialize_instance(&inst), manifest, &[])?;
        }
        Kind::LsTrap => {
            let t: lmpflp::instance::LsTrap = gen_ls_counterexample(a.delta, a.alpha, a.beta)?;
            let ids = |v: &[usize]| v.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(" ");
            let witness = format!(
                "n={}\nx={}\ny={}\ns={}\nopt={}\nalpha={}\nbeta={}\ndelta={}\n",
                t.n,
                t.x,
                t.y,
                ids(&t.s),
                ids(&t.opt),
                a.alpha,
                a.beta,
                a.delta
            );
            let text = serialize_instance(&t.instance);
            match &a.out {
                None => print!("{text}# witness\n{}", witness.lines().map(|l| format!("# {l}\n")).collect::<String>()),
                Some(p) => {
                    let mut side = p.as_os_str().to_owned();
                    side.push(".witness.txt");
                    emit(&a.out, &text, manifest, &[(PathBuf::from(side), witness)])?;
                }
            }
        }
    }
    Ok(true)
}

fn sol_lines(s: &mut String, prefix: &str, sol: &Solution) {
    let ids: Vec<String> = sol.open.iter().map(|f| f.to_string()).collect();
    let _ = writeln!(s, "{prefix}open={}", ids.join(","));
    let _ = writeln!(s, "{prefix}k={}", sol.k());
    let _ = writeln!(s, "{prefix}facility_cost={}", sol.facility_cost);
    let _ = writeln!(s, "{prefix}connection_cost={}", sol.connection_cost);
    let _ = writeln!(s, "{prefix}cost={}", sol.cost());
}

fn cmd_solve(a: SolveArgs) -> Result<bool> {
    let mut inst = read_instance(&a.instance)?;
    if let Some(l) = a.lambda {
        inst = inst.with_costs(vec![l; inst.m()]);
    }
    let cfg = SearchConfig {
        delta: a.delta,
        eps: a.eps,
        threshold: if a.relative { ThresholdMode::Relative } else { ThresholdMode::Strict },
        seed: a.seed,
        ..SearchConfig::default()
    };
    let mut s = String::new();
    let mut ok = true;
    let sol = if let Some(k) = a.k {
        if k == 0 {
            bail!("--k must be positive");
        }
        let _ = writeln!(s, "problem=kmedian\nk_target={k}");
        if a.alg == Alg::Oracle {
            brute_force_kmedian(&inst, k)?
        } else {
            let out = kmedian_solve(&inst, k, a.eps, &cfg)?;
            let _ = writeln!(s, "source={}", out.source);
            if out.source == "trim" {
                let _ = writeln!(s, "note=greedy trim of S2 carries no approximation guarantee");
            }
            if let Some(bp) = &out.bipoint {
                let _ = writeln!(
                    s,
                    "bipoint.lambda={}\nbipoint.k1={}\nbipoint.k2={}\nbipoint.a={}\nbipoint.b={}\nbipoint.d1={}\nbipoint.d2={}\nbipoint.combined={}\nbipoint.probes={}\nbipoint.degenerate={}\nbipoint.non_monotone={}",
                    bp.lambda,
                    bp.s1.k(),
                    bp.s2.k(),
                    bp.a,
                    bp.b,
                    bp.s1.connection_cost,
                    bp.s2.connection_cost,
                    bp.combined_connection,
                    bp.probes,
                    bp.degenerate as u8,
                    bp.non_monotone
                );
            }
            out.solution
        }
    } else {
        let _ = writeln!(s, "problem=ufl");
        match a.alg {
            Alg::Oracle => brute_force_ufl(&inst, false)?.0,
            Alg::Jms => {
                let (sol, tr) = jms_run(&inst);
                let _ = writeln!(s, "dual_sum={}", tr.dual_sum());
                if a.log {
                    s += &tr.dump();
                }
                sol
            }
            Alg::JmsLs | Alg::Lsjms => {
                let (seed, _) = jms_run(&inst);
                let _ = writeln!(s, "jms_cost={}", seed.cost());
                let out = if a.alg == Alg::JmsLs {
                    swap_local_search(&inst, &seed, &cfg)?
                } else {
                    localsearch_jms(&inst, &seed, &cfg)?
                };
                let _ = writeln!(s, "moves={}\nbudget_exhausted={}", out.log.len(), out.budget_exhausted as u8);
                if a.log {
                    s += &out.log_text();
                }
                out.solution
            }
        }
    };
    sol_lines(&mut s, "", &sol);
    if a.oracle && a.alg != Alg::Oracle {
        let opt = match a.k {
            Some(k) => brute_force_kmedian(&inst, k)?,
            None => brute_force_ufl(&inst, false)?.0,
        };
        sol_lines(&mut s, "oracle.", &opt);
        let (num, den) = match a.k {
            Some(_) => (sol.connection_cost, opt.connection_cost),
            None => (sol.cost(), opt.cost()),
        };
        let _ = writeln!(s, "ratio={}", if den > 0.0 { num / den } else { 1.0 });
        if a.k.is_none() && a.alg == Alg::Jms && inst.m() <= MAX_ENUM_FACILITIES {
            let rep = verify_lmp(&inst, &sol, 2.0)?;
            let _ = writeln!(s, "lmp2={}\nlmp_worst_ratio={}", if rep.passed { "pass" } else { "fail" }, rep.worst_ratio);
            ok &= rep.passed;
        }
    }
    print!("{s}");
    if let Some(p) = &a.out {
        let mut m = Manifest::new(Some(a.seed));
        m.emit(p, &write_solution(&sol, inst.m()))?;
        m.finish(p)?;
    }
    Ok(ok)
}

fn parse_t(s: &str) -> Result<Option<f64>> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(None);
    }
    Ok(Some(s.parse().with_context(|| format!("bad T value {s}"))?))
}

fn cmd_factor(a: FactorArgs) -> Result<bool> {
    let variant = Variant::parse(&a.variant).with_context(|| format!("unknown variant {}", a.variant))?;
    let ts: Vec<Option<f64>> = a.t.iter().map(|t| parse_t(t)).collect::<Result<_>>()?;
    let grid: Vec<(usize, Option<f64>)> = a.q.iter().flat_map(|&q| ts.iter().map(move |&t| (q, t))).collect();
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs.max(1)).build()?;
    let mut csv = String::from("q,T,variant,value,solve_ms\n");
    let tname = |t: Option<f64>| t.map_or("inf".to_string(), |v| v.to_string());
    let mut done = a.resume.min(grid.len());
    // chunks of `jobs` rows so a budget check happens between chunks
    while done < grid.len() {
        if start.elapsed().as_secs_f64() > a.budget_seconds {
            let _ = writeln!(csv, "# budget exhausted; resume with --resume {done}");
            eprintln!("budget of {} s exhausted after {done} rows; resume with --resume {done}", a.budget_seconds);
            break;
        }
        let chunk = &grid[done..(done + a.jobs.max(1)).min(grid.len())];
        let rows: Vec<Result<String>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|&(q, t)| {
                    let t0 = Instant::now();
                    let (v, _, _) = solve_factor::<f64>(q, t, variant)?;
                    let mut row = format!("{q},{},{},{v},{}\n", tname(t), variant.name(), t0.elapsed().as_millis());
                    if let (Some(z), Some(tv)) = (a.dual_z, t) {
                        let t0 = Instant::now();
                        let w = discrete_dual(q, z, tv)?;
                        row += &format!("{q},{},dual,{},{}\n", tname(t), w.value, t0.elapsed().as_millis());
                    }
                    Ok(row)
                })
                .collect()
        });
        for r in rows {
            csv += &r?;
        }
        done += chunk.len();
    }
    emit(&a.out, &csv, Manifest::new(None), &[])?;
    Ok(true)
}

fn eval_for(q: usize, budget: f64) -> Result<RhoEval> {
    if q == 0 {
        return Ok(RhoEval::analytic());
    }
    // one solve at the largest grid cap estimates the cost of the whole curve
    let t0 = Instant::now();
    solve_factor::<f64>(q, Some(1.0), Variant::Plus)?;
    let estimate = t0.elapsed().as_secs_f64() * lmpflp::factor_lp::default_t_grid().len() as f64;
    if estimate > budget {
        bail!("estimated {estimate:.0} s for q = {q} exceeds --budget-seconds {budget}");
    }
    Ok(RhoEval::lp(q)?)
}

fn cmd_bounds(a: BoundsArgs) -> Result<bool> {
    let mut s = String::new();
    let mut did = false;
    if a.rho_kmed {
        let eta2 = a.eta2.context("--rho-kmed needs --eta2")?;
        let (r, w) = rho_kmed_eval(eta2, a.rho_br);
        let _ = writeln!(s, "rho_kmed={r} worst_a={w}");
        did = true;
    }
    if let Some(q) = a.eta2_q {
        let eval = eval_for(q, a.budget_seconds)?;
        let p = eta2_search(a.beta2, &eval);
        let mut eta1_by_a = Vec::new();
        for &x in &a.eta1_a {
            eta1_by_a.push((x, eta1_search(x, None, &eval)?));
        }
        let rep = BoundsReport::new(p, eta1_by_a, a.rho_br);
        let _ = writeln!(s, "q={q}\nbeta2={}\nrho_b={}", a.beta2, rep.eta2.rho_b);
        s += &rep.to_kv();
        did = true;
    } else if !a.eta1_a.is_empty() {
        let eval = RhoEval::analytic();
        for &x in &a.eta1_a {
            let p = eta1_search(x, None, &eval)?;
            let _ = writeln!(s, "eta1[a={x}]={} delta={} alpha_l={} beta_l={} eta={} t1={}", p.eta1, p.delta, p.alpha_l, p.beta_l, p.eta, p.t1);
        }
        did = true;
    }
    if let Some(d) = a.eta_general_delta {
        let _ = writeln!(s, "eta_general={}", eta_general_fl(d)?);
        did = true;
    }
    if a.eta_general {
        let (e, d) = eta_general_fl_max();
        let _ = writeln!(s, "eta_general_max={e} delta_star={d} eta_half={}", e / 2.0);
        did = true;
    }
    if a.refined {
        let eval = eval_for(a.eta2_q.unwrap_or(0), a.budget_seconds)?;
        let start = Instant::now();
        let budget = a.budget_seconds;
        let e1 = |x: f64, b1: f64| {
            if start.elapsed().as_secs_f64() > budget {
                return 0.0;
            }
            eta1_search(x, Some(b1), &eval).map_or(0.0, |p| p.eta1)
        };
        let e2 = |x: f64, b1: f64| {
            if x >= 1.0 || start.elapsed().as_secs_f64() > budget {
                return 0.0;
            }
            eta2_search(((2.0 - x * b1) / (1.0 - x)).max(0.0), &eval).eta2
        };
        let (r, x, b1) = rho_kmed_refined(&e1, &e2, a.rho_br, 0.0, a.grid);
        let timed_out = start.elapsed().as_secs_f64() > budget;
        let _ = writeln!(s, "rho_kmed_refined={r} worst_a={x} worst_beta1={b1} budget_exhausted={}", timed_out as u8);
        did = true;
    }
    if !did {
        bail!("nothing to compute; pass --rho-kmed, --eta2-q, --eta1-a, --eta-general[-delta] or --refined");
    }
    print!("{s}");
    Ok(true)
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<bool> {
    let inst = read_instance(&a.instance)?;
    let sp = read_solution(&a.sol, &inst)?;
    let opt = read_solution(&a.reference, &inst)?;
    let mut s = String::new();
    let cu = classify_uniform(&sp, &opt, a.delta);
    let p = GeneralParams::standard(a.delta);
    let cg = classify_general(&sp, &opt, &p);
    let _ = writeln!(
        s,
        "uniform.s_matched={}\nuniform.s_lonely={}\nuniform.opt_matched={}\nuniform.opt_lonely={}",
        cu.s_matched.len(),
        cu.s_lonely.len(),
        cu.opt_matched.len(),
        cu.opt_lonely.len()
    );
    let _ = writeln!(
        s,
        "general.s_matched={}\ngeneral.s_lonely={}\ngeneral.opt_matched={}\ngeneral.opt_lonely={}\ngeneral.pairs={}",
        cg.s_matched.len(),
        cg.s_lonely.len(),
        cg.opt_matched.len(),
        cg.opt_lonely.len(),
        cg.pairs.len()
    );
    let mut ok = true;
    for c in &a.check {
        let text = match c {
            Check::Thm31 => {
                let r = check_theorem_3_1(&sp, &opt, a.lambda, a.delta, a.eps, a.slack.unwrap_or(12.0));
                ok &= !r.violated;
                r.to_kv()
            }
            Check::Lem42 => {
                let r = check_lemma_4_2(&sp, &opt, a.lambda, a.delta);
                ok &= !r.violated;
                r.to_kv()
            }
            Check::Thm64 => {
                let r = check_theorem_6_4(&sp, &opt, a.delta, a.eps, a.slack.unwrap_or(4.0));
                ok &= !r.violated;
                r.to_kv()
            }
            Check::Lem62 => {
                let r = check_lemma_6_2(&inst, &sp, &opt, &p);
                ok &= !r.violated;
                r.to_kv()
            }
            Check::Lem63 => {
                let r = sample_opt_dagger(&inst, &sp, &opt, &p, a.samples, a.seed)?;
                ok &= !r.violated;
                r.to_kv()
            }
        };
        s += &text;
    }
    print!("{s}");
    Ok(ok)
}
