//! Inspect the rate model's cluster structure on desk-scale data.

use mutbayes_core::engine::ModelPlugin;
use mutbayes_core::rate_model::RateModel;
use mutbayes_core::rng::stream_rng;
use mutbayes_core::simulator::{generate, ScenarioSpec};
use mutbayes_core::{ExposureCache, ModelConfig};

fn main() {
    let spec = ScenarioSpec::paper_scale(1).desk_scale(2000).unwrap();
    let study = generate(&spec).unwrap();
    let data = &study.dataset;
    let cache = ExposureCache::build(data, &vec![1.0; 25], &vec![1.0; 24]).unwrap();
    let config = ModelConfig::default();
    let mut model = RateModel::init(data, &config);
    let mut rng = stream_rng(1, "diag", 0);

    let crude = data.crude_rate();
    println!("crude rate {crude:.3e}");
    let gamma_prior = (1.0, crude);
    let mut gamma = 1.0 / crude;

    for sweep in 1..=2000u64 {
        model.sweep_genes(data, &cache, gamma, &mut rng);
        let values = model.cluster_values();
        let (shape, rate) = mutbayes_core::engine::gamma_conditional(gamma_prior, &values);
        gamma = mutbayes_core::engine::draw_gamma(shape, rate, &mut rng);

        if sweep % 400 == 0 || sweep <= 3 {
            let mut sizes: Vec<(usize, f64, f64, f64)> = Vec::new();
            for (c, cl) in model.clusters().iter().enumerate() {
                let mut sx = 0.0;
                let mut se = 0.0;
                for (g, &a) in model.assignment().iter().enumerate() {
                    if a as usize == c {
                        sx += cache.count_total(g);
                        se += cache.exposure(g);
                    }
                }
                sizes.push((cl.size, cl.value, sx, se));
            }
            sizes.sort_by(|a, b| b.0.cmp(&a.0));
            println!(
                "sweep {sweep}: gamma {gamma:.3e}, {} clusters: {:?}",
                sizes.len(),
                sizes
                    .iter()
                    .take(6)
                    .map(|(n, v, sx, se)| format!("n={n} theta={v:.2e} sx={sx} se={se:.2e}"))
                    .collect::<Vec<_>>()
            );
        }
    }
}
