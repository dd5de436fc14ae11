use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};

use zosadom_core::config::{build_graph_spec, build_problem, Experiment, RunConfig, WARMUP_ROUNDS};
use zosadom_core::harness::{budget_zo, compare_topologies, BudgetInput, TopologyRun};
use zosadom_core::objectives::{reference_minimizer, ReferenceSolution};
use zosadom_core::rng::{streams, StreamKey};
use zosadom_core::sadom::{derive_hyperparameters, run as run_sadom, Hyperparameters, RunOptions, StopRule};
use zosadom_core::topology::{multi_gossip_chi, multi_gossip_rounds, warmup_chi, GraphKind, GraphSequence, GraphSequenceSpec};
use zosadom_core::zeroth_order::{bias_bound, estimator_stats, variance_bound_with, NoiseKind, OracleConfig, Scheme};

use crate::{emit, ensure};

fn load(config: &Path, overrides: &[String]) -> Result<RunConfig> {
    RunConfig::load(config, overrides).with_context(|| format!("loading {}", config.display()))
}

fn load_reference(path: Option<&Path>) -> Result<Option<ReferenceSolution>> {
    let Some(p) = path else { return Ok(None) };
    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    let r = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
    Ok(Some(r))
}

pub fn run(config: &Path, overrides: &[String], output: Option<PathBuf>, reference: Option<&Path>) -> Result<ExitCode> {
    let cfg = load(config, overrides)?;
    let exp = Experiment::build_with_reference(&cfg, load_reference(reference)?)?;
    let mut seq = GraphSequence::new(exp.graph.clone())?;
    let out = run_sadom(&exp.spec, &exp.hp, &mut seq, &exp.oracle, &exp.reference, &cfg.stop, &exp.options)?;
    let mut log = out.log;
    log.comments = exp.comments();
    let dest = output.or_else(|| cfg.output.clone());
    emit(dest.as_deref(), &log.to_csv_string())?;
    let last = log.last().expect("initial row is always present");
    eprintln!(
        "iterations={} comm={} oracle={} criterion={:.6e} gap={:.6e} converged={}",
        last.iter, last.comm, last.oracle, last.criterion, last.gap, out.converged
    );
    Ok(if out.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

pub fn graph_info(config: &Path, overrides: &[String], rounds: u64) -> Result<ExitCode> {
    let cfg = load(config, overrides)?;
    let spec = build_graph_spec(&cfg.graph, cfg.nodes, cfg.seed)?;
    let mut seq = GraphSequence::new(spec.clone())?;
    let step = spec.reseed_period.max(1);
    let mut text = String::from("round,edges,lambda_max,lambda_min_plus,chi_local\n");
    let mut chis = Vec::new();
    for q in 0..rounds.max(1) {
        let (g, w) = seq.round(q * step)?;
        writeln!(
            text,
            "{},{},{:.16e},{:.16e},{:.16e}",
            q * step,
            g.edge_count(),
            w.lambda_max,
            w.lambda_min_plus,
            w.chi_local
        )?;
        chis.push(w.chi_local);
    }
    let max = chis.iter().copied().fold(f64::MIN, f64::max);
    let min = chis.iter().copied().fold(f64::MAX, f64::min);
    let mean = chis.iter().sum::<f64>() / chis.len() as f64;
    writeln!(text, "# kind={:?} n={} radius={} rounds={}", spec.kind, spec.n, spec.radius, chis.len())?;
    writeln!(text, "# chi_max={max:.6} chi_mean={mean:.6} chi_min={min:.6}")?;
    emit(None, &text)?;
    Ok(ExitCode::SUCCESS)
}

pub fn reference(config: &Path, overrides: &[String], output: &Path) -> Result<ExitCode> {
    let cfg = load(config, overrides)?;
    let spec = build_problem(&cfg.problem, cfg.nodes, cfg.seed)?;
    let r = reference_minimizer(&spec, cfg.reference_tol)?;
    emit(Some(output), &serde_json::to_string_pretty(&r)?)?;
    eprintln!(
        "f_star={:.16e} residual={:.3e} iterations={} written to {}",
        r.f_star,
        r.residual,
        r.iterations,
        output.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn verify_gossip(config: &Path, overrides: &[String], rounds: u64, samples: usize) -> Result<ExitCode> {
    let cfg = load(config, overrides)?;
    let spec = build_graph_spec(&cfg.graph, cfg.nodes, cfg.seed)?;
    let mut seq = GraphSequence::new(spec.clone())?;
    let step = spec.reseed_period.max(1);
    let mut problems = Vec::new();
    for q in 0..rounds.max(1) {
        let (g, w) = seq.round(q * step)?;
        let key = StreamKey::new(cfg.seed, streams::VERIFY).with_iter(q);
        problems.extend(w.violations(Some(&g), samples, key).into_iter().map(|v| format!("round {}: {v}", q * step)));
    }
    for p in &problems {
        println!("{p}");
    }
    println!("checked {} rounds, {} violation(s)", rounds.max(1), problems.len());
    if problems.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: gossip contract violated in {} check(s)", problems.len());
        Ok(ExitCode::from(1))
    }
}

pub fn verify_oracle(config: &Path, overrides: &[String], samples: usize, output: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = load(config, overrides)?;
    ensure(samples >= 2, || "need at least two samples".into())?;
    let gamma = cfg.oracle.gamma;
    ensure(gamma > 0.0, || format!("verify-oracle needs oracle.gamma > 0, got {gamma}"))?;
    let spec = build_problem(&cfg.problem, cfg.nodes, cfg.seed)?;
    let x = cfg.x0.clone().unwrap_or_else(|| vec![0.0; spec.d]);
    ensure(x.len() == spec.d, || format!("x0 has length {}, expected {}", x.len(), spec.d))?;
    let f = &spec.nodes[0];
    let radius = x.iter().map(|t| t * t).sum::<f64>().sqrt() + gamma;
    let (m2, g) = (f.lipschitz_value(radius), f.value_bound(radius));

    let mut text = String::from("scheme,d,gamma,delta_tilde,second_moment,bound,bias,bias_bound\n");
    let mut failures = Vec::new();
    for scheme in [Scheme::Tpf, Scheme::OpfSingle, Scheme::OpfDouble] {
        let noisy = OracleConfig {
            scheme,
            batch: 1,
            ..cfg.oracle.clone()
        };
        let clean = noisy.clone().with_noise(NoiseKind::Zero, 0.0);
        let bound = variance_bound_with(&noisy, spec.d, Some(m2), Some(g))?;
        let clean_stats = estimator_stats(f, &x, &clean, samples, &vec![0.0; spec.d])?;
        // common random numbers: the difference to the noiseless mean is the noise bias
        let st = estimator_stats(f, &x, &noisy, samples, &clean_stats.mean)?;
        let b_bound = bias_bound(&noisy, spec.d);
        writeln!(
            text,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            scheme.name(),
            spec.d,
            gamma,
            noisy.noise_bound,
            st.second_moment,
            bound,
            st.bias_norm,
            b_bound
        )?;
        if st.second_moment > bound + 3.0 * st.second_moment_std_err {
            failures.push(format!("{} second moment {:.3e} > {bound:.3e}", scheme.name(), st.second_moment));
        }
        if st.bias_norm > b_bound + 3.0 * st.mean_std_err + 1e-12 {
            failures.push(format!("{} bias {:.3e} > {b_bound:.3e}", scheme.name(), st.bias_norm));
        }
    }
    emit(output.as_deref(), &text)?;
    if failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("error: estimator bound exceeded: {}", failures.join("; "));
        Ok(ExitCode::from(1))
    }
}

pub fn budget(config: &Path, overrides: &[String]) -> Result<ExitCode> {
    let cfg = load(config, overrides)?;
    let Some(epsilon) = cfg.stop.epsilon else {
        bail!("budget needs stop.epsilon");
    };
    let exp = Experiment::build(&cfg)?;
    let mut seq = GraphSequence::new(exp.graph.clone())?;
    let first = run_sadom(&exp.spec, &exp.hp, &mut seq, &exp.oracle, &exp.reference, &StopRule::iterations(0), &exp.options)?;
    let row = &first.log.rows[0];
    let m2 = exp.spec.lipschitz_value.context("problem has no value Lipschitz constant")?;
    let report = budget_zo(&BudgetInput {
        epsilon,
        mu: exp.spec.mu,
        m2,
        d: exp.spec.d,
        chi: exp.chi,
        batch: exp.oracle.batch,
        scheme: exp.oracle.scheme,
        g: exp.spec.value_bound,
        nodes: exp.spec.n,
        c0_hat: row.psi_x + row.psi_yz,
        multi_gossip: cfg.multi_gossip,
    })?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

pub fn compare(
    config: &Path,
    overrides: &[String],
    relative_gaps: &[f64],
    beta_scale: Option<f64>,
    reference: Option<&Path>,
) -> Result<ExitCode> {
    let cfg = load(config, overrides)?;
    ensure(!relative_gaps.is_empty(), || "need at least one relative gap".into())?;
    let exp = Experiment::build_with_reference(&cfg, load_reference(reference)?)?;
    let alt = GraphSequenceSpec {
        seed: cfg.seed,
        ..GraphSequenceSpec::new(GraphKind::RingStarAlternating, cfg.nodes)
    };
    let chi_alt = warmup_chi(&alt, WARMUP_ROUNDS, 1.0)?;
    let (mu, l) = (exp.spec.mu, exp.l.max(exp.spec.mu));
    let beta = match beta_scale {
        Some(s) => Some(s / (2.0 * l)),
        None => cfg.hp_overrides.beta,
    };
    let mut summaries = Vec::new();
    for (name, graph, chi) in [("configured", exp.graph.clone(), exp.chi), ("ring_star", alt, chi_alt)] {
        let rounds = if cfg.multi_gossip { multi_gossip_rounds(chi) } else { 1 };
        let opts = RunOptions {
            gossip_rounds: rounds,
            ..exp.options.clone()
        };
        let hp_for = |c: f64| -> zosadom_core::Result<Hyperparameters> {
            let c_eff = if rounds > 1 { multi_gossip_chi(c, rounds) } else { c };
            Ok(derive_hyperparameters(mu, l, c_eff, beta)?)
        };
        let runs = [TopologyRun {
            name: name.into(),
            graph,
            chi,
        }];
        let mut s = compare_topologies(&exp.spec, &exp.reference, &exp.oracle, &runs, relative_gaps, cfg.stop.max_iters, &opts, hp_for)?;
        summaries.append(&mut s);
    }
    if let Some(out) = &cfg.output {
        for s in &summaries {
            let stem = out.file_stem().and_then(|t| t.to_str()).unwrap_or("compare");
            let path = out.with_file_name(format!("{stem}.{}.csv", s.topology));
            emit(Some(&path), &s.log.to_csv_string())?;
        }
    }
    println!("{}", serde_json::to_string_pretty(&summaries)?);
    Ok(ExitCode::SUCCESS)
}
