use std::sync::Arc;

use gtnsgdm_core::noise::{NoiseSpec, RngStream};
use gtnsgdm_core::objective::{
    claim1_instance, generate_token_dataset, partition, regression_objective, GlobalObjective, LocalObjective, Oracle,
    TUKEY_C,
};
use gtnsgdm_core::optim::{run, run_with_hook, Hyper, Method, RoundEngine};
use gtnsgdm_core::topology::{build_graph, metropolis_weights, MixingMatrix, TopologyKind};
use gtnsgdm_core::vecops::{norm, safe_normalize};
use gtnsgdm_core::Error;

const STABLE: NoiseSpec = NoiseSpec::AlphaStable {
    alpha: 1.5,
    skew: 0.5,
    scale: 1.0,
    multiplier: 1.0,
};

fn regression(n: usize, noise: NoiseSpec, method: Method, hyper: Hyper, seed: u64) -> (RoundEngine, GlobalObjective) {
    let ds = generate_token_dataset(1000, 20, seed).unwrap();
    let locals = partition(&ds, n, TUKEY_C).unwrap();
    let global = regression_objective(&ds, &locals).unwrap();
    let mixing = if n == 1 {
        MixingMatrix::averaging(1).unwrap()
    } else {
        metropolis_weights(&build_graph(TopologyKind::Ring, n).unwrap()).unwrap()
    };
    let oracles = global
        .locals()
        .iter()
        .enumerate()
        .map(|(i, l)| Oracle::new(l.clone(), noise, None, RngStream::new(seed, i as u64)).unwrap())
        .collect();
    let engine = RoundEngine::new(Arc::new(mixing), oracles, method, hyper, &[0.0; 20]).unwrap();
    (engine, global)
}

fn quadratics(centers: &[f64], mixing: MixingMatrix, method: Method, hyper: Hyper, x0: f64) -> (RoundEngine, GlobalObjective) {
    let locals: Vec<Arc<LocalObjective>> = centers.iter().map(|&c| Arc::new(LocalObjective::quadratic_scalar(c))).collect();
    let oracles = locals
        .iter()
        .enumerate()
        .map(|(i, l)| Oracle::new(l.clone(), NoiseSpec::None, None, RngStream::new(0, i as u64)).unwrap())
        .collect();
    let mean = centers.iter().sum::<f64>() / centers.len() as f64;
    let global = GlobalObjective::new(locals, vec![mean], 0.0).unwrap();
    (RoundEngine::new(Arc::new(mixing), oracles, method, hyper, &[x0]).unwrap(), global)
}

#[test]
fn tracking_conserves_the_network_mean() {
    for method in [Method::GtNsgdm, Method::GtDsgd, Method::GtAdam] {
        let hyper = Hyper {
            alpha: 0.01,
            beta: 0.9,
            ..Hyper::default()
        };
        let (mut engine, global) = regression(20, STABLE, method, hyper, 1);
        let trace = run(&mut engine, 2000, 100, &global).unwrap();
        assert!(
            trace.summary.max_tracking_gap_rel <= 1e-10,
            "{method}: {}",
            trace.summary.max_tracking_gap_rel
        );
    }
}

#[test]
fn average_step_never_exceeds_alpha() {
    let alpha = 0.02;
    let (mut engine, global) = regression(20, STABLE, Method::GtNsgdm, Hyper::default().with_alpha(alpha).with_beta(0.9), 2);
    let mut worst: f64 = 0.0;
    run_with_hook(&mut engine, 2000, 100, &global, |_, report| worst = worst.max(report.step_len)).unwrap();
    assert!(worst <= alpha + 1e-12, "largest step {worst}");
    assert!(worst > 0.0);
}

#[test]
fn single_node_moves_exactly_alpha() {
    let alpha = 0.05;
    let (mut engine, global) = regression(1, STABLE, Method::GtNsgdm, Hyper::default().with_alpha(alpha).with_beta(0.5), 3);
    let mut checked = 0;
    run_with_hook(&mut engine, 500, 50, &global, |e, report| {
        if norm(&e.states()[0].y) > 1e-30 {
            assert!((report.step_len - alpha).abs() <= 1e-12, "step {}", report.step_len);
            checked += 1;
        }
    })
    .unwrap();
    assert_eq!(checked, 500);
}

#[test]
fn single_node_matches_normalized_momentum_sgd() {
    let hyper = Hyper::default().with_alpha(0.03).with_beta(0.8);
    let (mut engine, _) = regression(1, STABLE, Method::GtNsgdm, hyper, 4);
    let (_, global) = regression(1, STABLE, Method::GtNsgdm, hyper, 4);
    let mut oracle = Oracle::new(global.locals()[0].clone(), STABLE, None, RngStream::new(4, 0)).unwrap();
    let mut x = vec![0.0; 20];
    let mut v = vec![0.0; 20];
    for _ in 0..300 {
        let g = oracle.stochastic_gradient(&x).unwrap();
        for (vk, gk) in v.iter_mut().zip(&g) {
            *vk = 0.8 * *vk + 0.2 * gk;
        }
        let dir = safe_normalize(&v);
        for (xk, d) in x.iter_mut().zip(dir) {
            *xk -= 0.03 * d;
        }
        engine.step().unwrap();
        let got = &engine.states()[0].x;
        for (a, b) in got.iter().zip(&x) {
            assert!((a - b).abs() <= 1e-14 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn vanilla_normalized_iterates_freeze_on_claim1() {
    for (n, bound) in [(2, 1.0), (4, 10.0)] {
        let inst = claim1_instance(n, bound).unwrap();
        let centers: Vec<f64> = (0..n).map(|i| if i < n / 2 { inst.a } else { inst.b }).collect();
        let (mut engine, global) = quadratics(&centers, inst.mixing.clone(), Method::VnDsgd, Hyper::default().with_alpha(0.1), inst.x0);
        let trace = run_with_hook(&mut engine, 1000, 10, &global, |e, _| {
            assert!(e.states().iter().all(|s| s.x[0].to_bits() == inst.x0.to_bits()));
        })
        .unwrap();
        assert!(trace.time_averaged_grad_norm() >= bound);
    }
}

#[test]
fn tracking_escapes_the_claim1_trap() {
    let inst = claim1_instance(2, 1.0).unwrap();
    let alpha = 0.01;
    let centers = [inst.a, inst.b];
    let (mut engine, global) = quadratics(&centers, inst.mixing.clone(), Method::GtNsgdm, Hyper::default().with_alpha(alpha), inst.x0);
    let mut first_below = None;
    run_with_hook(&mut engine, 1000, 10, &global, |e, _| {
        let g = global.gradient(&e.x_bar())[0].abs();
        if first_below.is_none() && g < 2.0 * alpha {
            first_below = Some(e.t());
        }
    })
    .unwrap();
    assert!(first_below.is_some());
}

#[test]
fn gradient_tracking_converges_on_a_ring() {
    let w = metropolis_weights(&build_graph(TopologyKind::Ring, 4).unwrap()).unwrap();
    let centers = [1.0, -3.0, 7.0, 0.5];
    let (mut engine, global) = quadratics(&centers, w, Method::GtDsgd, Hyper::default().with_alpha(0.1), 0.0);
    for _ in 0..10_000 {
        engine.step().unwrap();
    }
    for s in engine.states() {
        assert!((s.x[0] - global.reference()[0]).abs() < 1e-6);
    }
}

#[test]
fn dsgd_on_complete_graph_is_centralized_descent() {
    let centers = [2.0, -1.0, 4.0, 0.0, 5.0];
    let alpha = 0.07;
    let (mut engine, _) = quadratics(&centers, MixingMatrix::averaging(5).unwrap(), Method::Dsgd, Hyper::default().with_alpha(alpha), 10.0);
    let mean = centers.iter().sum::<f64>() / 5.0;
    let mut x: f64 = 10.0;
    for _ in 0..200 {
        engine.step().unwrap();
        x -= alpha * (x - mean);
        for s in engine.states() {
            assert!((s.x[0] - x).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn gt_adam_single_node_matches_capped_adam() {
    let hyper = Hyper {
        alpha: 0.01,
        beta1: 0.9,
        beta2: 0.99,
        g_cap: 50.0,
        eps: 1e-8,
        ..Hyper::default()
    };
    let (mut engine, _) = regression(1, NoiseSpec::Gaussian { variance: 1.0 }, Method::GtAdam, hyper, 6);
    let (_, global) = regression(1, NoiseSpec::None, Method::GtAdam, hyper, 6);
    let mut oracle = Oracle::new(global.locals()[0].clone(), NoiseSpec::Gaussian { variance: 1.0 }, None, RngStream::new(6, 0)).unwrap();
    let mut x = vec![0.0; 20];
    let mut m = [0.0; 20];
    let mut v = [0.0; 20];
    let mut g = oracle.stochastic_gradient(&x).unwrap();
    for _ in 0..200 {
        for k in 0..20 {
            m[k] = 0.9 * m[k] + 0.1 * g[k];
            v[k] = (0.99 * v[k] + 0.01 * g[k] * g[k]).min(50.0);
            x[k] -= 0.01 * m[k] / (v[k] + 1e-8).sqrt();
        }
        g = oracle.stochastic_gradient(&x).unwrap();
        engine.step().unwrap();
        for (a, b) in engine.states()[0].x.iter().zip(&x) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn runs_are_independent_of_thread_count() {
    let run_on = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let (mut engine, global) = regression(20, STABLE, Method::GtNsgdm, Hyper::default().with_beta(0.9), 8);
            run(&mut engine, 300, 10, &global).unwrap().to_csv()
        })
    };
    assert_eq!(run_on(1), run_on(4));
}

#[test]
fn every_method_runs_on_the_regression_instance() {
    for method in Method::ALL {
        let hyper = Hyper {
            alpha: 0.01,
            beta: 0.5,
            ..Hyper::default()
        };
        let (mut engine, global) = regression(8, NoiseSpec::Gaussian { variance: 1.0 }, method, hyper, 9);
        let trace = run(&mut engine, 200, 50, &global).unwrap();
        assert_eq!(trace.rows.len(), 5, "{method}");
        assert!(trace.rows.iter().all(|r| r.is_finite()), "{method}");
    }
}

#[test]
fn divergence_returns_the_partial_trace() {
    let (mut engine, global) = quadratics(&[0.0, 0.0], MixingMatrix::averaging(2).unwrap(), Method::Dsgd, Hyper::default().with_alpha(5.0), 1.0);
    match run(&mut engine, 10_000, 10, &global) {
        Err(Error::Diverged { round, trace }) => {
            assert!(trace.diverged());
            assert_eq!(trace.last().unwrap().t, round);
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn trace_csv_round_trips() {
    let (mut engine, global) = regression(4, STABLE, Method::GtNsgdm, Hyper::default().with_beta(0.9), 10);
    let trace = run(&mut engine, 100, 7, &global).unwrap();
    let text = trace.to_csv();
    let back = gtnsgdm_core::metrics::MetricsTrace::from_csv(&text).unwrap();
    assert_eq!(back.rows, trace.rows);
    assert_eq!(back.to_csv(), text);
}
