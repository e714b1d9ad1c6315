use mutbayes_core::engine::{run_chain, ModelKind};
use mutbayes_core::simulator::{generate, ScenarioSpec};
use mutbayes_core::ModelConfig;

fn main() {
    for sigma in [0.5, 0.75, 1.0, 1.5] {
        for seed in [1u64, 2, 3] {
            let spec = ScenarioSpec::paper_scale(seed).desk_scale(2000).unwrap();
            let study = generate(&spec).unwrap();
            let data = &study.dataset;
            let zero: Vec<usize> = (0..data.n_genes())
                .filter(|&g| data.gene_count_total(g) == 0)
                .collect();
            let config = ModelConfig {
                iterations: 20_000,
                burn_in: 10_000,
                thin: 10,
                seed,
                effect_prior_sigma: sigma,
                ..ModelConfig::default()
            };
            let trace = run_chain(data, &config, ModelKind::Rate).unwrap();
            let mut zmean = 0.0;
            for r in &trace.records {
                zmean += zero.iter().map(|&g| r.lambda[g]).sum::<f64>() / zero.len() as f64;
            }
            zmean /= trace.n_records() as f64;
            println!("sigma {sigma} seed {seed}: zero-mean ratio {:.3}", zmean / 3.68e-7);
        }
    }
}
