//! Rough timing of one desk-scale chain (2000 genes, 25 types, 24 samples).

use mutbayes_core::engine::{run_chain, ModelKind};
use mutbayes_core::simulator::{generate, ScenarioSpec};
use mutbayes_core::ModelConfig;

fn main() {
    let spec = ScenarioSpec::paper_scale(1).desk_scale(2000).unwrap();
    let t0 = std::time::Instant::now();
    let study = generate(&spec).unwrap();
    println!(
        "simulate: {:.2}s, total mutations {}",
        t0.elapsed().as_secs_f64(),
        study.dataset.total_count()
    );

    let config = ModelConfig {
        iterations: 20_000,
        burn_in: 10_000,
        thin: 10,
        seed: 1,
        lambda0: Some(3.68e-7),
        ..ModelConfig::default()
    };

    let t0 = std::time::Instant::now();
    let trace = run_chain(&study.dataset, &config, ModelKind::Rate).unwrap();
    println!(
        "rate chain: {:.2}s, {} records, {} clusters at end",
        t0.elapsed().as_secs_f64(),
        trace.n_records(),
        trace.records.last().unwrap().n_clusters
    );

    let t0 = std::time::Instant::now();
    let trace = run_chain(&study.dataset, &config, ModelKind::Driver).unwrap();
    let pi_mean: f64 = trace.pi_draws().iter().sum::<f64>() / trace.n_records() as f64;
    println!(
        "driver chain: {:.2}s, pi mean {:.4}, {} clusters at end",
        t0.elapsed().as_secs_f64(),
        pi_mean,
        trace.records.last().unwrap().n_clusters
    );
}
