//! Isolate the effect updates: full engine on desk data with frozen unit
//! effects vs adaptive effects, plus a look at the fitted vectors.

use mutbayes_core::engine::{run_chain, ModelKind};
use mutbayes_core::simulator::{generate, ScenarioSpec};
use mutbayes_core::ModelConfig;

fn main() {
    let spec = ScenarioSpec::paper_scale(1).desk_scale(2000).unwrap();
    let study = generate(&spec).unwrap();
    let data = &study.dataset;
    let zero: Vec<usize> = (0..data.n_genes())
        .filter(|&g| data.gene_count_total(g) == 0)
        .collect();

    for scales in [(0.0, 0.0), (0.1, 0.1)] {
        let config = ModelConfig {
            iterations: 20_000,
            burn_in: 10_000,
            thin: 10,
            seed: 1,
            proposal_scales: scales,
            ..ModelConfig::default()
        };
        let trace = run_chain(data, &config, ModelKind::Rate).unwrap();
        let mut zmean = 0.0;
        for r in &trace.records {
            zmean += zero.iter().map(|&g| r.lambda[g]).sum::<f64>() / zero.len() as f64;
        }
        zmean /= trace.n_records() as f64;
        let last = trace.records.last().unwrap();
        let mean_cl: f64 = trace.records.iter().map(|r| r.n_clusters as f64).sum::<f64>()
            / trace.n_records() as f64;
        println!(
            "scales {scales:?}: zero-mean ratio {:.3}, clusters {:.1}, gamma(last) {:.2e}",
            zmean / 3.68e-7,
            mean_cl,
            last.gamma
        );
        if scales.0 > 0.0 {
            let mut alpha_mean = vec![0.0; data.n_types()];
            let mut beta_mean = vec![0.0; data.n_samples()];
            for r in &trace.records {
                for (a, v) in alpha_mean.iter_mut().zip(&r.alpha) {
                    *a += v / trace.n_records() as f64;
                }
                for (b, v) in beta_mean.iter_mut().zip(&r.beta) {
                    *b += v / trace.n_records() as f64;
                }
            }
            let arat: Vec<String> = alpha_mean
                .iter()
                .zip(study.alpha.iter())
                .map(|(f, t)| format!("{:.2}", f / t))
                .collect();
            let brat: Vec<String> = beta_mean
                .iter()
                .zip(study.beta.iter())
                .map(|(f, t)| format!("{:.2}", f / t))
                .collect();
            println!("alpha fitted/true: {}", arat.join(" "));
            println!("beta  fitted/true: {}", brat.join(" "));
        }
    }
}
