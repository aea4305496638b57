use lmpflp::factor_lp::*;
use lmpflp::instance::*;
use lmpflp::jms::{jms_run, verify_lmp};
use lmpflp::local_search::*;
use lmpflp::lp::lp_check_point;
use lmpflp::pipeline::*;
use lmpflp::structure::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::Command;
use std::time::Instant;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_rho_kmed() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_lmpflp"))
        .args(["bounds", "--rho-kmed", "--eta2", "0.00536", "--rho-br", "1.3371"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("exit {:?}", out.status.code()))?;
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let field = |k: &str| -> Result<f64, String> {
        text.split_whitespace()
            .find_map(|t| t.strip_prefix(k))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| format!("no {k} in {text:?}"))
    };
    let (r, a) = (field("rho_kmed=")?, field("worst_a=")?);
    ensure((r - 2.67059).abs() <= 2e-4, || format!("rho_kmed={r}"))?;
    ensure((a - 0.4955).abs() <= 5e-3, || format!("worst_a={a}"))?;
    Ok(format!("rho_kmed={r:.6} worst_a={a:.6}"))
}

fn c2_general_fl() -> Outcome {
    let v = eta_general_fl(0.05).map_err(|e| e.to_string())?;
    ensure((4.3e-7..=4.7e-7).contains(&v), || format!("eta(0.05)={v:e}"))?;
    let (best, d) = eta_general_fl_max();
    ensure(best / 2.0 >= 2.25e-7, || format!("half max {:e}", best / 2.0))?;
    Ok(format!("eta(0.05)={v:.4e} half_max={:.4e} at delta={d:.4}", best / 2.0))
}

fn c3_ceiling() -> Outcome {
    let mut worst: f64 = 0.0;
    for q in [2, 5, 10, 20, 40, 60] {
        let (v, _) = opt_jms(q, None).map_err(|e| e.to_string())?;
        ensure(v <= 2.0 + 1e-6, || format!("opt_jms({q},inf)={v}"))?;
        worst = worst.max(v);
    }
    Ok(format!("max opt_jms(q,inf)={worst:.9}"))
}

fn c4_sandwich() -> Outcome {
    let mut min_gap = f64::INFINITY;
    for t in [0.5, 1.0, 2.0, 5.0, 10.0, 50.0] {
        let (b, _) = analytic_bound(t);
        let cor = 2.0 - 1.0 / (4.0 * (7.0 + 3.0 * t));
        ensure(b <= cor + 1e-9, || format!("T={t}: analytic {b} > corollary {cor}"))?;
        for q in [5, 10, 20, 40] {
            let (v, _) = opt_jms(q, Some(t)).map_err(|e| e.to_string())?;
            ensure(v <= b + 1e-6, || format!("q={q} T={t}: lp {v} > analytic {b}"))?;
            min_gap = min_gap.min(b - v);
        }
    }
    Ok(format!("min analytic-lp gap={min_gap:.3e}"))
}

fn c5_transforms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let q = rng.gen_range(2..=8);
        let c = rng.gen_range(1..=3);
        let t = [0.5, 1.0, 2.0, 5.0, 10.0][rng.gen_range(0..5)];
        let err = |e: FactorError| format!("q={q} c={c} T={t}: {e}");
        let (v, p) = opt_jms(q, Some(t)).map_err(err)?;
        let lifted = lift_solution(&p, c, 1e-9).map_err(err)?;
        let (lp, map) = build_lp(c * q, Some(t), Variant::Plain).map_err(err)?;
        ensure(lp_check_point(&lp, &lifted.to_vector(&map), 1e-9).passed, || format!("lift infeasible q={q} c={c} T={t}"))?;
        ensure((lifted.objective() - v).abs() <= 1e-9, || format!("lift objective moved q={q} c={c}"))?;
        let (vc, pc) = opt_jms(c * q, Some(t)).map_err(err)?;
        let agg = aggregate_solution(&pc, c, 1e-9).map_err(err)?;
        let (lp, map) = build_lp(q, Some(t), Variant::Plus).map_err(err)?;
        ensure(lp_check_point(&lp, &agg.to_vector(&map), 1e-9).passed, || format!("aggregate infeasible q={q} c={c} T={t}"))?;
        ensure((agg.objective() - vc).abs() <= 1e-9, || format!("aggregate objective moved q={q} c={c}"))?;
        ensure(v <= vc + 1e-7, || format!("opt_jms({q})={v} > opt_jms({})={vc}", c * q))?;
        let (vp, _) = opt_plus(q, Some(t)).map_err(err)?;
        ensure(vp >= vc - 1e-7, || format!("opt_plus({q})={vp} < opt_jms({})={vc}", c * q))?;
    }
    Ok("20 triples".into())
}

fn c6_dual_witness() -> Outcome {
    let mut min_slack = f64::INFINITY;
    for d in 0..=4 {
        for t in [1.0, 5.0] {
            let w = discrete_dual(12, d as f64 / 12.0, t).map_err(|e| format!("z={d}/12 T={t}: {e}"))?;
            let (v, _) = opt_jms(12, Some(t)).map_err(|e| e.to_string())?;
            ensure(w.value >= v - 1e-6, || format!("z={d}/12 T={t}: dual {} < lp {v}", w.value))?;
            min_slack = min_slack.min(w.value - v);
        }
    }
    Ok(format!("min dual-lp slack={min_slack:.3e}"))
}

fn c7_lmp2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let m = rng.gen_range(1..=8);
        let n = rng.gen_range(1..=20);
        let law = if i % 2 == 0 {
            CostLaw::Uniform(rng.gen_range(0.0..1.5))
        } else {
            let lo = rng.gen_range(0.0..0.5);
            CostLaw::Range(lo, lo + rng.gen_range(0.0..2.0))
        };
        let inst: Instance = gen_euclidean(rng.gen(), m, n, 2, law).map_err(|e| e.to_string())?;
        let (sol, tr) = jms_run(&inst);
        let rep = verify_lmp(&inst, &sol, 2.0).map_err(|e| e.to_string())?;
        ensure(rep.passed, || format!("instance {i}: ratio {}", rep.worst_ratio))?;
        ensure(sol.cost() <= tr.dual_sum() + 1e-9, || format!("instance {i}: cost above dual sum"))?;
        worst = worst.max(rep.worst_ratio);
    }
    Ok(format!("200 instances, worst ratio={worst:.4}"))
}

fn c8_trap() -> Outcome {
    let mut notes = Vec::new();
    for delta in [1, 2] {
        let t: LsTrap = gen_ls_counterexample(delta, 1.0, 1.0).map_err(|e| e.to_string())?;
        let s = t.instance.evaluate(&t.s).map_err(|e| e.to_string())?;
        let opt = t.instance.evaluate(&t.opt).map_err(|e| e.to_string())?;
        let cfg = SearchConfig { delta, ..SearchConfig::default() };
        let mv = is_local_opt(&t.instance, &s, &cfg, MoveFamily::Swap).map_err(|e| e.to_string())?;
        ensure(mv.is_none(), || format!("delta={delta}: {{f0}} has an improving swap"))?;
        ensure(opt.cost() < s.cost(), || format!("delta={delta}: OPT not cheaper"))?;
        ensure(opt.connection_cost == 0.0, || format!("delta={delta}: d(OPT)={}", opt.connection_cost))?;
        let out = localsearch_jms(&t.instance, &s, &cfg).map_err(|e| e.to_string())?;
        let escaped = out.solution.cost() < s.cost();
        if t.y < 1.0 {
            ensure(escaped, || format!("delta={delta}: no escape at y={}", t.y))?;
        }
        notes.push(format!("delta={delta} y={} escaped={escaped}", t.y));
    }
    Ok(notes.join(", "))
}

fn c9_diagnostics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut n42 = 0;
    for i in 0..50 {
        let m = rng.gen_range(3..=8);
        let n = rng.gen_range(6..=18);
        let lambda = rng.gen_range(0.05..0.6);
        let inst: Instance = gen_euclidean(rng.gen(), m, n, 2, CostLaw::Uniform(lambda)).map_err(|e| e.to_string())?;
        let (seed, _) = jms_run(&inst);
        let sp = swap_local_search(&inst, &seed, &SearchConfig::default()).map_err(|e| e.to_string())?.solution;
        let delta = rng.gen_range(0.05..=0.5);
        for k in 1..sp.k() {
            let opt = brute_force_kmedian(&inst, k).map_err(|e| e.to_string())?;
            let r = check_theorem_3_1(&sp, &opt, lambda, delta, 0.5, 12.0);
            ensure(!r.violated, || format!("uniform {i} k={k}: thm31 margin {}", r.margin))?;
            let r = check_lemma_4_2(&sp, &opt, lambda, delta);
            ensure(!r.violated, || format!("uniform {i} k={k}: lem42 margin {}", r.margin))?;
            n42 += 1;
        }
    }
    let mut sampled = 0;
    for i in 0..50 {
        let m = rng.gen_range(3..=8);
        let n = rng.gen_range(6..=16);
        let inst: Instance = gen_euclidean(rng.gen(), m, n, 2, CostLaw::Range(0.02, 0.8)).map_err(|e| e.to_string())?;
        let (seed, _) = jms_run(&inst);
        let sp = localsearch_jms(&inst, &seed, &SearchConfig::default()).map_err(|e| e.to_string())?.solution;
        let (opt, _) = brute_force_ufl(&inst, false).map_err(|e| e.to_string())?;
        let delta = rng.gen_range(0.02..=0.25);
        let r = check_theorem_6_4(&sp, &opt, delta, 0.5, 4.0);
        ensure(!r.violated, || format!("general {i}: thm64 margin {}", r.margin))?;
        let p = GeneralParams::standard(delta);
        let r = check_lemma_6_2(&inst, &sp, &opt, &p);
        ensure(!r.violated, || format!("general {i}: lem62 margin {}", r.margin))?;
        // lonely OPT facilities are rare against the UFL optimum; a k-median reference exercises the sampler
        let kref = brute_force_kmedian(&inst, rng.gen_range(2..=m.min(6))).map_err(|e| e.to_string())?;
        let d = sample_opt_dagger(&inst, &sp, &kref, &GeneralParams::standard(0.1), 10_000, i as u64)
            .map_err(|e| e.to_string())?;
        ensure(!d.violated, || format!("general {i}: lem63 {}", d.to_kv().replace('\n', " ")))?;
        if d.samples > 0 {
            sampled += 1;
        }
    }
    Ok(format!("{n42} (instance, k) pairs with |S'|>k; 50 general instances; {sampled} sampler runs"))
}

fn c10_eta2() -> Outcome {
    let a = eta2_search(2.0, &RhoEval::analytic());
    let mut vals = Vec::new();
    for q in [10, 20, 40] {
        let eval = RhoEval::lp(q).map_err(|e| e.to_string())?;
        vals.push((q, eta2_search(2.0, &eval).eta2));
    }
    let listing = vals.iter().map(|(q, v)| format!("q={q}:{v:.3e}")).collect::<Vec<_>>().join(" ");
    ensure(a.eta2 > 0.0, || format!("analytic eta2={}", a.eta2))?;
    ensure(vals.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-6), || format!("not monotone: {listing}"))?;
    // values at solver-noise level are not evidence of positivity
    ensure(vals.iter().all(|&(_, v)| v > 1e-9), || format!("lp-mode eta2 not positive: {listing}; analytic={:.3e}", a.eta2))?;
    Ok(format!("{listing}; analytic={:.3e}", a.eta2))
}

fn c11_bipoint() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = SearchConfig { delta: 1, ..SearchConfig::default() };
    let eps = 0.05;
    let mut worst: f64 = 0.0;
    for i in 0..30 {
        let m = rng.gen_range(5..=12);
        let n = rng.gen_range(4..=18);
        let k = rng.gen_range(1..=4);
        let inst: Instance = gen_euclidean(rng.gen(), m, n, 2, CostLaw::Uniform(0.0)).map_err(|e| e.to_string())?;
        let bp = bipoint_search(&inst, k, eps, &cfg).map_err(|e| e.to_string())?;
        let opt = brute_force_kmedian(&inst, k).map_err(|e| e.to_string())?.connection_cost;
        ensure(bp.combined_connection <= (2.0 + eps) * opt + 1e-9, || {
            format!("instance {i}: {} > (2+eps)*{opt}", bp.combined_connection)
        })?;
        if opt > 0.0 {
            worst = worst.max(bp.combined_connection / opt);
        }
    }
    Ok(format!("30 instances, worst combined/opt={worst:.4}"))
}

fn c12_cost_scaling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let cfg = SearchConfig::default();
    let mut bracketed = 0;
    for i in 0..20 {
        let m = rng.gen_range(3..=8);
        let n = rng.gen_range(4..=14);
        let inst: Instance = gen_euclidean(rng.gen(), m, n, 2, CostLaw::Range(0.05, 1.5)).map_err(|e| e.to_string())?;
        let (opt, _) = brute_force_ufl(&inst, false).map_err(|e| e.to_string())?;
        let cs = cost_scaling_lmp(&inst, 0.5, opt.facility_cost, &cfg).map_err(|e| e.to_string())?;
        let rhs = cs.lambda * opt.facility_cost + 2.0 * opt.connection_cost;
        ensure(cs.scaled_mix() <= rhs + 1e-9 * rhs.max(1.0), || format!("instance {i}: {} > {rhs}", cs.scaled_mix()))?;
        if cs.branch == ScalingBranch::Bracketed {
            bracketed += 1;
        }
    }
    Ok(format!("20 instances, {bracketed} bracketed"))
}

fn main() {
    let criteria: [(u32, &str, f64, fn() -> Outcome); 12] = [
        (1, "rho_kmed reproduction", 1.0, c1_rho_kmed),
        (2, "general-FL constant", 1.0, c2_general_fl),
        (3, "factor-LP ceiling", 120.0, c3_ceiling),
        (4, "analytic-vs-LP sandwich", 300.0, c4_sandwich),
        (5, "transform round-trips", 180.0, c5_transforms),
        (6, "dual witness", 120.0, c6_dual_witness),
        (7, "LMP-2 property suite", 120.0, c7_lmp2),
        (8, "local-search pathology", 30.0, c8_trap),
        (9, "diagnostic inequalities", 900.0, c9_diagnostics),
        (10, "eta2 positivity and trend", 1200.0, c10_eta2),
        (11, "bipoint guarantee", 300.0, c11_bipoint),
        (12, "cost-scaling LMP", 300.0, c12_cost_scaling),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let t0 = Instant::now();
        let res = f();
        let secs = t0.elapsed().as_secs_f64();
        let (ok, detail) = match res {
            Ok(d) if secs <= limit => (true, d),
            Ok(d) => (false, format!("{d}; took {secs:.1}s over the {limit}s limit")),
            Err(e) => (false, e),
        };
        failed += !ok as u32;
        println!("criterion {id:>2} {name}: {} [{secs:.2}s / {limit}s] {detail}", if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {failed} failing");
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
