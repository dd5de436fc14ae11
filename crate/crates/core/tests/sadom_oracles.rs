use nalgebra::{DMatrix, DVector};

use zosadom_core::config::{Experiment, RunConfig};
use zosadom_core::harness::MetricsLog;
use zosadom_core::objectives::{reference_minimizer, ProblemSpec};
use zosadom_core::sadom::{derive_hyperparameters, lyapunov, run, sadom_step, SaddlePoint, SadomError, SadomState, StopRule};
use zosadom_core::topology::{gossip_from_graph, Graph, GraphSequence};
use zosadom_core::StackedVector;

fn dense(v: &StackedVector) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

fn stacked(n: usize, d: usize, v: &DVector<f64>) -> StackedVector {
    StackedVector::from_flat(n, d, v.as_slice().to_vec())
}

/// Lines 4–13 written out with dense `W ⊗ I_d` and a joint linear solve of
/// the two implicit lines.
#[test]
fn step_matches_dense_transcription() {
    let (n, d) = (2, 2);
    let spec = ProblemSpec::quadratic_suite(n, d, 1.0, 5.0, 11).unwrap();
    let hp = derive_hyperparameters(1.0, 5.0, 1.0, None).unwrap();
    let g2 = Graph::complete(2);
    let w = gossip_from_graph(&g2).unwrap();
    let wk = w.matrix().kronecker(&DMatrix::<f64>::identity(d, d));
    let nd = n * d;

    let x0 = StackedVector::from_flat(n, d, vec![0.3, -1.0, 2.0, 0.5]);
    let y0 = StackedVector::from_flat(n, d, vec![0.1, 0.2, -0.4, 0.7]);
    let z0 = StackedVector::from_flat(n, d, vec![0.6, -0.2, 0.0, 0.0]).project_zero_sum();
    let m0 = StackedVector::from_flat(n, d, vec![-0.3, 0.1, 0.9, 0.4]);
    let mut state = SadomState::from_parts(x0.clone(), y0.clone(), z0.clone(), m0.clone()).unwrap();

    let (mut x, mut y, mut z, mut m) = (dense(&x0), dense(&y0), dense(&z0), dense(&m0));
    let (mut xf, mut yf, mut zf) = (x.clone(), y.clone(), z.clone());
    let eye = DMatrix::<f64>::identity(nd, nd);
    let mut lhs = DMatrix::<f64>::zeros(2 * nd, 2 * nd);
    lhs.view_mut((0, 0), (nd, nd)).copy_from(&(&eye * (1.0 + hp.eta * hp.alpha)));
    lhs.view_mut((0, nd), (nd, nd)).copy_from(&(&eye * -hp.eta));
    lhs.view_mut((nd, 0), (nd, nd)).copy_from(&(&eye * hp.theta));
    lhs.view_mut((nd, nd), (nd, nd)).copy_from(&(&eye * (1.0 + hp.theta * hp.beta)));
    let lu = lhs.lu();

    for _ in 0..50 {
        let xg = &x * hp.tau1 + &xf * (1.0 - hp.tau1);
        let g = dense(&spec.stacked_gradient(&stacked(n, d, &xg)));
        let yg = &y * hp.vartheta1 + &yf * (1.0 - hp.vartheta1);
        let zg = &z * hp.vartheta1 + &zf * (1.0 - hp.vartheta1);
        // x' + ηα x' − η y' = x + ηα x_g − η(g − ν x_g)
        // y' + θβ y' + θ x' = y + θβ(g − ν x_g) − θ ν⁻¹(y_g + z_g)
        let mut rhs = DVector::<f64>::zeros(2 * nd);
        rhs.rows_mut(0, nd)
            .copy_from(&(&x + &xg * (hp.eta * hp.alpha) - (&g - &xg * hp.nu) * hp.eta));
        rhs.rows_mut(nd, nd)
            .copy_from(&(&y + (&g - &xg * hp.nu) * (hp.theta * hp.beta) - (&yg + &zg) * (hp.theta / hp.nu)));
        let sol = lu.solve(&rhs).unwrap();
        let (x1, y1) = (sol.rows(0, nd).into_owned(), sol.rows(nd, nd).into_owned());
        let xf1 = &xg + (&x1 - &x) * hp.tau2;
        let yf1 = &yg + (&y1 - &y) * hp.vartheta2;
        let arg = (&yg + &zg) * (hp.varkappa / hp.nu) + &m;
        let z1 = &z + (&zg - &z) * (hp.varkappa * hp.pi_) - &wk * &arg;
        let m1 = &arg - &wk * &arg;
        let zf1 = &zg - &wk * (&yg + &zg) * hp.zeta;
        (x, y, z, m, xf, yf, zf) = (x1, y1, z1, m1, xf1, yf1, zf1);

        sadom_step(
            &mut state,
            &hp,
            &w,
            |xg: &StackedVector| Ok::<_, SadomError>((spec.stacked_gradient(xg), 0)),
            1,
        )
        .unwrap();
        for (a, b) in [(&state.x, &x), (&state.y, &y), (&state.z, &z), (&state.m, &m), (&state.x_f, &xf), (&state.z_f, &zf)] {
            let err = (dense(a) - b).amax();
            assert!(err <= 1e-12 * (1.0 + b.amax()), "deviation {err}");
        }
    }
}

#[test]
fn saddle_point_is_fixed() {
    let spec = ProblemSpec::quadratic_suite(5, 3, 1.0, 4.0, 2).unwrap();
    let reference = reference_minimizer(&spec, Some(1e-13)).unwrap();
    let hp = derive_hyperparameters(1.0, 4.0, 10.0, None).unwrap();
    let saddle = SaddlePoint::new(&reference, 5, hp.nu);
    let mut state = saddle.state();
    let lyap = lyapunov(&state, &hp, &saddle, &spec);
    assert!(lyap.total().abs() < 1e-20);
    let w = gossip_from_graph(&Graph::ring(5)).unwrap();
    for _ in 0..20 {
        sadom_step(
            &mut state,
            &hp,
            &w,
            |xg: &StackedVector| Ok::<_, SadomError>((spec.stacked_gradient(xg), 0)),
            1,
        )
        .unwrap();
    }
    assert!(state.x.dist_sq(&saddle.x).sqrt() < 1e-10);
    assert!(state.y.dist_sq(&saddle.y).sqrt() < 1e-10);
}

#[test]
fn z_stays_in_zero_sum_subspace() {
    let spec = ProblemSpec::quadratic_suite(6, 2, 0.5, 3.0, 9).unwrap();
    let hp = derive_hyperparameters(0.5, 3.0, 20.0, None).unwrap();
    let w = gossip_from_graph(&Graph::star(6)).unwrap();
    let x0 = StackedVector::from_flat(6, 2, (0..12).map(|i| (i as f64).sin()).collect());
    let mut state = SadomState::new(x0);
    for _ in 0..200 {
        sadom_step(
            &mut state,
            &hp,
            &w,
            |xg: &StackedVector| Ok::<_, SadomError>((spec.stacked_gradient(xg), 0)),
            3,
        )
        .unwrap();
        for v in [&state.z, &state.z_f] {
            assert!(v.block_sum().iter().all(|s| s.abs() < 1e-9), "block sum {:?}", v.block_sum());
        }
    }
}

fn ring4(max_iters: u64) -> RunConfig {
    RunConfig::from_json(&format!(
        r#"{{"problem": {{"kind": "quadratic", "d": 3, "mu": 1.0, "l": 4.0}},
            "nodes": 4, "graph": {{"kind": "ring"}}, "algorithm": "sadom",
            "stop": {{"max_iters": {max_iters}}}, "monitor_period": 50, "seed": 3}}"#
    ))
    .unwrap()
}

fn run_log(cfg: &RunConfig) -> MetricsLog {
    let exp = Experiment::build(cfg).unwrap();
    let mut seq = GraphSequence::new(exp.graph.clone()).unwrap();
    run(&exp.spec, &exp.hp, &mut seq, &exp.oracle, &exp.reference, &exp.config.stop, &exp.options)
        .unwrap()
        .log
}

#[test]
fn ring_of_four_converges_inside_envelope() {
    let exp = Experiment::build(&ring4(2000)).unwrap();
    let rho = exp.hp.contraction_factor();
    let log = run_log(&ring4(2000));
    let last = log.last().unwrap();
    assert_eq!(last.iter, 2000);
    assert!(last.dist_sq < 1e-8, "dist_sq {}", last.dist_sq);
    let psi0 = log.rows[0].psi_x + log.rows[0].psi_yz;
    for row in &log.rows {
        assert!(row.psi_x + row.psi_yz <= rho.powi(row.iter as i32) * psi0 * (1.0 + 1e-6));
    }
}

#[test]
fn zero_iterations_logs_initial_snapshot_only() {
    let exp = Experiment::build(&ring4(0)).unwrap();
    let mut seq = GraphSequence::new(exp.graph.clone()).unwrap();
    let out = run(&exp.spec, &exp.hp, &mut seq, &exp.oracle, &exp.reference, &StopRule::iterations(0), &exp.options).unwrap();
    assert_eq!(out.log.len(), 1);
    assert_eq!(out.log.rows[0].iter, 0);
    assert!(!out.converged);
    assert_eq!(out.state.k, 0);
}

#[test]
fn identical_seeds_give_identical_logs_and_csv_round_trips() {
    let a = run_log(&ring4(300));
    let b = run_log(&ring4(300));
    assert_eq!(a, b);
    let text = a.to_csv_string();
    let back = MetricsLog::parse_csv(text.as_bytes()).unwrap();
    assert_eq!(back.rows, a.rows);
    assert_eq!(back.to_csv_string(), text);
}

#[test]
fn stop_rule_on_epsilon_ends_early() {
    let mut cfg = ring4(5000);
    cfg.stop.epsilon = Some(1e-3);
    let log = run_log(&cfg);
    let last = log.last().unwrap();
    assert!(last.criterion <= 1e-3);
    assert!(last.iter < 5000);
    assert!(log.rows[..log.len() - 1].iter().all(|r| r.criterion > 1e-3));
}

#[test]
#[allow(clippy::needless_range_loop)]
fn criterion_column_recomputes_from_state() {
    let mut cfg = ring4(37);
    cfg.monitor_period = 1000;
    let exp = Experiment::build(&cfg).unwrap();
    let mut seq = GraphSequence::new(exp.graph.clone()).unwrap();
    let out = run(&exp.spec, &exp.hp, &mut seq, &exp.oracle, &exp.reference, &exp.config.stop, &exp.options).unwrap();
    let row = out.log.last().unwrap();
    assert_eq!(row.iter, 37);
    let (x, x_f) = (&out.state.x, &out.state.x_f);
    let star = &exp.reference.x_star;
    let mut dist = 0.0;
    let mut dist_f = 0.0;
    for i in 0..x.n() {
        for j in 0..x.d() {
            dist += (x.block(i)[j] - star[j]).powi(2);
            dist_f += (x_f.block(i)[j] - star[j]).powi(2);
        }
    }
    let mean: Vec<f64> = (0..x.d()).map(|j| (0..x.n()).map(|i| x_f.block(i)[j]).sum::<f64>() / x.n() as f64).collect();
    let f_mean: f64 = exp.spec.nodes.iter().map(|f| f.value(&mean)).sum();
    let mu = exp.spec.mu;
    let expected = 0.5 * mu * dist + (f_mean - exp.reference.f_star) - 0.25 * mu * dist_f;
    assert!((row.criterion - expected).abs() <= 1e-12 * (1.0 + expected.abs()), "{} vs {expected}", row.criterion);
    assert!((row.dist_sq - dist).abs() <= 1e-12 * (1.0 + dist));
}
