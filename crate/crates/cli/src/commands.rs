//! The five batch commands: fit-rates, fit-drivers, simulate, evaluate,
//! baseline.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mutbayes_core::baselines::{
    bayes_fdr_curve, compute_baseline, rank_ascending, rank_descending, true_fdr_curve,
    write_baseline,
};
use mutbayes_core::dataset::load_dataset;
use mutbayes_core::engine::{run_chain, split_r_hat, write_trace, ModelKind, Trace};
use mutbayes_core::error::Error;
use mutbayes_core::rng::derive_seed;
use mutbayes_core::simulator::{
    self, generate, read_effects, read_truth, write_effects, write_truth, CoverageSource,
    ScenarioSpec, TierSpec,
};
use mutbayes_core::summary::{
    driver_probability_summary, mutated_drivers_per_sample, posterior_rate_summary,
    predictive_mutation_probability, write_driver_summary, write_drivers_per_sample,
    write_genome_summary, write_rate_summary,
};
use mutbayes_core::{ExposureCache, ModelConfig, MutationDataset, Result};

use crate::manifest::{hash_file, OutputDir};
use crate::{BaselineArgs, EvaluateArgs, FitArgs, SimulateArgs};

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn hash_inputs(paths: &[(&str, Option<&PathBuf>)]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (label, path) in paths {
        if let Some(path) = path {
            let hash = hash_file(path).map_err(io_err(path))?;
            out.insert(format!("{label}:{}", path.display()), hash);
        }
    }
    Ok(out)
}

fn load_fit_inputs(args: &FitArgs) -> Result<(MutationDataset, ModelConfig)> {
    let mut config = match &args.config {
        Some(path) => mutbayes_core::load_config(path)?,
        None => ModelConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(lambda0) = args.lambda0 {
        config.lambda0 = Some(lambda0);
    }
    config.validate()?;
    let data = load_dataset(&args.counts, &args.coverage, args.types.as_deref())?;
    Ok((data, config))
}

/// Run `n_chains` independent chains concurrently; chain i draws from the
/// stream (seed, "chain", i). Results come back in chain order.
fn run_chains(
    data: &MutationDataset,
    config: &ModelConfig,
    kind: ModelKind,
    n_chains: usize,
) -> Result<Vec<Trace>> {
    if n_chains == 1 {
        let chain_config = ModelConfig {
            seed: derive_seed(config.seed, "chain", 0),
            ..config.clone()
        };
        return Ok(vec![run_chain(data, &chain_config, kind)?]);
    }
    let mut results: Vec<Option<Result<Trace>>> = (0..n_chains).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for i in 0..n_chains {
            let chain_config = ModelConfig {
                seed: derive_seed(config.seed, "chain", i as u64),
                ..config.clone()
            };
            handles.push(scope.spawn(move || run_chain(data, &chain_config, kind)));
        }
        for (i, handle) in handles.into_iter().enumerate() {
            results[i] = Some(handle.join().expect("chain thread must not panic"));
        }
    });
    results.into_iter().map(|r| r.expect("filled")).collect()
}

fn pooled_trace(traces: &[Trace]) -> Trace {
    let mut pooled = traces[0].clone();
    for t in &traces[1..] {
        pooled.records.extend(t.records.iter().cloned());
    }
    pooled
}

fn trace_file_name(i: usize, n: usize) -> String {
    if n == 1 {
        "trace.tsv".to_string()
    } else {
        format!("trace_c{:02}.tsv", i + 1)
    }
}

fn write_traces(out: &mut OutputDir, traces: &[Trace]) -> Result<()> {
    for (i, trace) in traces.iter().enumerate() {
        let mut buf = Vec::new();
        write_trace(trace, &mut buf).map_err(io_err(out.path()))?;
        out.write(&trace_file_name(i, traces.len()), &buf)
            .map_err(io_err(out.path()))?;
    }
    Ok(())
}

fn write_convergence(out: &mut OutputDir, traces: &[Trace]) -> Result<()> {
    if traces.len() < 2 {
        return Ok(());
    }
    let extract = |f: &dyn Fn(&mutbayes_core::TraceRecord) -> Option<f64>| -> Vec<Vec<f64>> {
        traces
            .iter()
            .map(|t| t.records.iter().filter_map(|r| f(r)).collect())
            .collect()
    };
    let mut buf = Vec::new();
    use std::io::Write;
    writeln!(buf, "quantity\tsplit_rhat").map_err(io_err(out.path()))?;
    let quantities: Vec<(&str, Vec<Vec<f64>>)> = vec![
        ("log_likelihood", extract(&|r| Some(r.log_likelihood))),
        ("gamma", extract(&|r| Some(r.gamma))),
        ("pi", extract(&|r| r.pi)),
    ];
    for (name, chains) in quantities {
        if chains.iter().all(|c| !c.is_empty()) {
            writeln!(buf, "{name}\t{}", split_r_hat(&chains)).map_err(io_err(out.path()))?;
        }
    }
    out.write("convergence.tsv", &buf).map_err(io_err(out.path()))
}

/// Posterior mean effects, written in the effects-table format so the
/// baseline command can consume them on real data.
fn write_posterior_effects(
    out: &mut OutputDir,
    trace: &Trace,
    data: &MutationDataset,
) -> Result<()> {
    let n = trace.records.len() as f64;
    let mut alpha = vec![0.0; data.n_types()];
    let mut beta = vec![0.0; data.n_samples()];
    for r in &trace.records {
        for (a, v) in alpha.iter_mut().zip(&r.alpha) {
            *a += v / n;
        }
        for (b, v) in beta.iter_mut().zip(&r.beta) {
            *b += v / n;
        }
    }
    let mut buf = Vec::new();
    write_effects(data, &alpha, &beta, &mut buf).map_err(io_err(out.path()))?;
    out.write("effects_posterior.tsv", &buf).map_err(io_err(out.path()))
}

fn write_predictions(
    out: &mut OutputDir,
    args: &FitArgs,
    trace: &Trace,
    data: &MutationDataset,
) -> Result<()> {
    let Some(genes) = &args.predict else {
        return Ok(());
    };
    let mut buf = Vec::new();
    use std::io::Write;
    writeln!(buf, "gene\tp_mutation_new_sample").map_err(io_err(out.path()))?;
    for gene in genes.split(',').map(str::trim).filter(|g| !g.is_empty()) {
        let p = predictive_mutation_probability(trace, data, gene, args.predict_coverage)?;
        writeln!(buf, "{gene}\t{p}").map_err(io_err(out.path()))?;
    }
    out.write("predictive.tsv", &buf).map_err(io_err(out.path()))
}

pub fn cmd_fit_rates(args: &FitArgs) -> Result<()> {
    let started = std::time::Instant::now();
    let (data, config) = load_fit_inputs(args)?;
    let traces = run_chains(&data, &config, ModelKind::Rate, args.chains)?;
    let pooled = pooled_trace(&traces);

    let mut out = OutputDir::create(&args.out).map_err(io_err(&args.out))?;
    write_traces(&mut out, &traces)?;
    write_convergence(&mut out, &traces)?;

    let summary = posterior_rate_summary(&pooled)?;
    if summary.unreliable_intervals {
        eprintln!(
            "warning: only {} recorded draws; credible intervals are unreliable",
            pooled.n_records()
        );
    }
    let mut buf = Vec::new();
    write_rate_summary(&summary, &data, &mut buf).map_err(io_err(out.path()))?;
    out.write("rate_summary.tsv", &buf).map_err(io_err(out.path()))?;
    if traces.len() > 1 {
        for (i, trace) in traces.iter().enumerate() {
            let per = posterior_rate_summary(trace)?;
            let mut buf = Vec::new();
            write_rate_summary(&per, &data, &mut buf).map_err(io_err(out.path()))?;
            out.write(&format!("rate_summary_c{:02}.tsv", i + 1), &buf)
                .map_err(io_err(out.path()))?;
        }
    }
    write_posterior_effects(&mut out, &pooled, &data)?;
    write_predictions(&mut out, args, &pooled, &data)?;

    out.finish(
        "fit-rates",
        config.seed,
        config.echo(),
        hash_inputs(&[
            ("counts", Some(&args.counts)),
            ("coverage", Some(&args.coverage)),
            ("types", args.types.as_ref()),
            ("config", args.config.as_ref()),
        ])?,
        Some(data.content_summary()),
        started,
    )
    .map_err(io_err(&args.out))?;
    Ok(())
}

pub fn cmd_fit_drivers(args: &FitArgs) -> Result<()> {
    let started = std::time::Instant::now();
    let (data, config) = load_fit_inputs(args)?;
    if config.lambda0.is_none() {
        return Err(Error::config(
            "fit-drivers requires the passenger per-base rate lambda0 \
             (config key `lambda0=` or flag `--lambda0`); studies conventionally \
             supply low, intermediate and high passenger-rate estimates and \
             report results under each",
        ));
    }
    let traces = run_chains(&data, &config, ModelKind::Driver, args.chains)?;
    let pooled = pooled_trace(&traces);

    let mut out = OutputDir::create(&args.out).map_err(io_err(&args.out))?;
    write_traces(&mut out, &traces)?;
    write_convergence(&mut out, &traces)?;

    let summary = driver_probability_summary(&pooled)?;
    if summary.unreliable_intervals {
        eprintln!(
            "warning: only {} recorded draws; credible intervals are unreliable",
            pooled.n_records()
        );
    }
    let mut buf = Vec::new();
    write_driver_summary(&summary, &data, &mut buf).map_err(io_err(out.path()))?;
    out.write("driver_summary.tsv", &buf).map_err(io_err(out.path()))?;
    let mut buf = Vec::new();
    write_genome_summary(&summary.genome, &mut buf).map_err(io_err(out.path()))?;
    out.write("genome_summary.tsv", &buf).map_err(io_err(out.path()))?;
    if traces.len() > 1 {
        for (i, trace) in traces.iter().enumerate() {
            let per = driver_probability_summary(trace)?;
            let mut buf = Vec::new();
            write_driver_summary(&per, &data, &mut buf).map_err(io_err(out.path()))?;
            out.write(&format!("driver_summary_c{:02}.tsv", i + 1), &buf)
                .map_err(io_err(out.path()))?;
            let mut buf = Vec::new();
            write_genome_summary(&per.genome, &mut buf).map_err(io_err(out.path()))?;
            out.write(&format!("genome_summary_c{:02}.tsv", i + 1), &buf)
                .map_err(io_err(out.path()))?;
        }
    }

    if data.has_pooled_stages() {
        eprintln!("note: pooled stage units; drivers-per-sample table skipped");
    } else {
        let hists = mutated_drivers_per_sample(&pooled, &data)?;
        let mut buf = Vec::new();
        write_drivers_per_sample(&hists, &data, pooled.n_records(), &mut buf)
            .map_err(io_err(out.path()))?;
        out.write("drivers_per_sample.tsv", &buf).map_err(io_err(out.path()))?;
    }
    write_posterior_effects(&mut out, &pooled, &data)?;
    write_predictions(&mut out, args, &pooled, &data)?;

    out.finish(
        "fit-drivers",
        config.seed,
        config.echo(),
        hash_inputs(&[
            ("counts", Some(&args.counts)),
            ("coverage", Some(&args.coverage)),
            ("types", args.types.as_ref()),
            ("config", args.config.as_ref()),
        ])?,
        Some(data.content_summary()),
        started,
    )
    .map_err(io_err(&args.out))?;
    Ok(())
}

fn parse_tiers(text: &str) -> Result<Vec<TierSpec>> {
    text.split(',')
        .map(|part| {
            let (f, m) = part.split_once(':').ok_or_else(|| {
                Error::config(format!(
                    "tier '{part}' must be fraction:multiplier, e.g. 0.02:10"
                ))
            })?;
            Ok(TierSpec {
                fraction: f
                    .trim()
                    .parse()
                    .map_err(|_| Error::config(format!("invalid tier fraction '{f}'")))?,
                multiplier: m
                    .trim()
                    .parse()
                    .map_err(|_| Error::config(format!("invalid tier multiplier '{m}'")))?,
            })
        })
        .collect()
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let started = std::time::Instant::now();
    let mut spec = ScenarioSpec::paper_scale(args.seed);
    if let Some(g) = args.genes {
        spec.n_genes = g;
    }
    if let Some(k) = args.samples {
        spec.n_samples = k;
        spec.beta = simulator::default_beta(k);
    }
    if let Some(lambda0) = args.lambda0 {
        spec.lambda0 = lambda0;
    }
    if let Some(tiers) = &args.tiers {
        spec.driver_tiers = parse_tiers(tiers)?;
    }
    if let Some(path) = &args.coverage_from {
        spec.coverage = CoverageSource::File {
            coverage: path.clone(),
            types: args.types.clone(),
        };
    } else if let CoverageSource::Synthetic {
        median_length,
        sigma_log,
        ..
    } = &mut spec.coverage
    {
        if let Some(m) = args.median_length {
            *median_length = m;
        }
        if let Some(s) = args.sigma_log {
            *sigma_log = s;
        }
    }
    if let Some(target) = args.target_g {
        spec = spec.desk_scale(target)?;
    }
    let study = generate(&spec)?;

    let mut out = OutputDir::create(&args.out).map_err(io_err(&args.out))?;
    let mut buf = Vec::new();
    study.dataset.write_counts(&mut buf).map_err(io_err(out.path()))?;
    out.write("counts.tsv", &buf).map_err(io_err(out.path()))?;
    let mut buf = Vec::new();
    study.dataset.write_coverage(&mut buf).map_err(io_err(out.path()))?;
    out.write("coverage.tsv", &buf).map_err(io_err(out.path()))?;
    let mut buf = Vec::new();
    study.dataset.write_types(&mut buf).map_err(io_err(out.path()))?;
    out.write("types.tsv", &buf).map_err(io_err(out.path()))?;
    let mut buf = Vec::new();
    write_truth(&study.truth, &mut buf).map_err(io_err(out.path()))?;
    out.write("truth.tsv", &buf).map_err(io_err(out.path()))?;
    let mut buf = Vec::new();
    write_effects(&study.dataset, &study.alpha, &study.beta, &mut buf)
        .map_err(io_err(out.path()))?;
    out.write("effects.tsv", &buf).map_err(io_err(out.path()))?;

    out.finish(
        "simulate",
        args.seed,
        format!(
            "n_genes={}\nn_samples={}\nlambda0={}\ntiers={}\n",
            spec.n_genes,
            spec.n_samples,
            spec.lambda0,
            spec.driver_tiers
                .iter()
                .map(|t| format!("{}:{}", t.fraction, t.multiplier))
                .collect::<Vec<_>>()
                .join(",")
        ),
        hash_inputs(&[("coverage-from", args.coverage_from.as_ref())])?,
        Some(study.dataset.content_summary()),
        started,
    )
    .map_err(io_err(&args.out))?;
    Ok(())
}

pub fn cmd_baseline(args: &BaselineArgs) -> Result<()> {
    let started = std::time::Instant::now();
    if !(args.lambda0 > 0.0) {
        return Err(Error::config("lambda0 must be > 0"));
    }
    let data = load_dataset(&args.counts, &args.coverage, args.types.as_deref())?;
    let (alpha, beta) = match &args.effects {
        Some(path) => read_effects(path, &data)?,
        None => (vec![1.0; data.n_types()], vec![1.0; data.n_samples()]),
    };
    let cache = ExposureCache::build(&data, &alpha, &beta)?;
    let results = compute_baseline(&data, &cache, args.lambda0)?;

    let mut out = OutputDir::create(&args.out).map_err(io_err(&args.out))?;
    let mut buf = Vec::new();
    write_baseline(&results, &data, &mut buf).map_err(io_err(out.path()))?;
    out.write("baseline.tsv", &buf).map_err(io_err(out.path()))?;

    out.finish(
        "baseline",
        0,
        format!("lambda0={}\n", args.lambda0),
        hash_inputs(&[
            ("counts", Some(&args.counts)),
            ("coverage", Some(&args.coverage)),
            ("types", args.types.as_ref()),
            ("effects", args.effects.as_ref()),
        ])?,
        Some(data.content_summary()),
        started,
    )
    .map_err(io_err(&args.out))?;
    Ok(())
}

/// Columns read back from a driver summary table.
fn read_driver_summary(path: &Path) -> Result<Vec<(String, f64)>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if i == 0 || raw.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() < 4 {
            return Err(Error::parse(path, i + 1, "expected driver summary columns"));
        }
        let p: f64 = cols[3]
            .parse()
            .map_err(|_| Error::parse(path, i + 1, "invalid p_driver"))?;
        out.push((cols[0].to_string(), p));
    }
    Ok(out)
}

fn read_baseline_table(path: &Path) -> Result<Vec<(String, f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if i == 0 || raw.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 6 {
            return Err(Error::parse(path, i + 1, "expected baseline columns"));
        }
        let p: f64 = cols[4]
            .parse()
            .map_err(|_| Error::parse(path, i + 1, "invalid p"))?;
        let q: f64 = cols[5]
            .parse()
            .map_err(|_| Error::parse(path, i + 1, "invalid bh_q"))?;
        out.push((cols[0].to_string(), p, q));
    }
    Ok(out)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let started = std::time::Instant::now();
    let summary = read_driver_summary(&args.summary)?;
    let truth = read_truth(&args.truth)?;
    let baseline = read_baseline_table(&args.baseline)?;

    // Align gene sets; any mismatch is a hard error naming its size.
    let truth_map: BTreeMap<&str, bool> =
        truth.iter().map(|t| (t.gene.as_str(), t.is_driver)).collect();
    let summary_genes: std::collections::BTreeSet<&str> =
        summary.iter().map(|(g, _)| g.as_str()).collect();
    let truth_genes: std::collections::BTreeSet<&str> =
        truth_map.keys().cloned().collect();
    let diff = summary_genes.symmetric_difference(&truth_genes).count();
    if diff > 0 {
        return Err(Error::validation(format!(
            "gene sets of fit and truth differ in {diff} genes"
        )));
    }
    let baseline_genes: std::collections::BTreeSet<&str> =
        baseline.iter().map(|(g, _, _)| g.as_str()).collect();
    let diff = summary_genes.symmetric_difference(&baseline_genes).count();
    if diff > 0 {
        return Err(Error::validation(format!(
            "gene sets of fit and baseline differ in {diff} genes"
        )));
    }

    // Rankings: gene ids in name order for reproducible tie-breaks.
    let mut names: Vec<&str> = summary_genes.iter().cloned().collect();
    names.sort_unstable();
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let n = names.len();
    let mut p_driver = vec![0.0; n];
    for (g, p) in &summary {
        p_driver[index[g.as_str()]] = *p;
    }
    let mut p_lrt = vec![1.0; n];
    let mut bh_q = vec![1.0; n];
    for (g, p, q) in &baseline {
        p_lrt[index[g.as_str()]] = *p;
        bh_q[index[g.as_str()]] = *q;
    }
    let is_driver: Vec<bool> = names.iter().map(|g| truth_map[g]).collect();

    let ks: Vec<usize> = (1..=n).collect();
    let bayes_est = bayes_fdr_curve(&p_driver, &ks)?;
    let bayes_order = rank_descending(&p_driver);
    let bayes_true = true_fdr_curve(&bayes_order, &is_driver);
    let lrt_order = rank_ascending(&p_lrt);
    let lrt_true = true_fdr_curve(&lrt_order, &is_driver);
    let bh_curve: Vec<f64> = lrt_order.iter().map(|&g| bh_q[g]).collect();

    let mut buf = Vec::new();
    use std::io::Write;
    writeln!(buf, "k\tbayes_fdr\tbh_fdr\ttrue_fdr\ttrue_fdr_lrt").unwrap();
    for k in 1..=n {
        writeln!(
            buf,
            "{k}\t{}\t{}\t{}\t{}",
            bayes_est[k - 1],
            bh_curve[k - 1],
            bayes_true[k - 1],
            lrt_true[k - 1]
        )
        .unwrap();
    }
    let mut out = OutputDir::create(&args.out).map_err(io_err(&args.out))?;
    out.write("fdr_curves.tsv", &buf).map_err(io_err(out.path()))?;

    // Calibration report: max absolute deviation per method over the
    // evaluated range, plus the worst BH multiplicative gap where the true
    // FDR is substantial.
    let k_cap = n.min(args.max_k);
    let max_dev = |est: &[f64], truth: &[f64]| {
        (0..k_cap)
            .map(|i| (est[i] - truth[i]).abs())
            .fold(0.0f64, f64::max)
    };
    let bayes_dev = max_dev(&bayes_est, &bayes_true);
    let bh_dev = max_dev(&bh_curve, &lrt_true);
    let mut bh_factor = 0.0f64;
    for i in 0..k_cap {
        if lrt_true[i] >= 0.1 {
            let est = bh_curve[i].max(1e-12);
            bh_factor = bh_factor.max(est / lrt_true[i]).max(lrt_true[i] / est);
        }
    }
    let mut buf = Vec::new();
    writeln!(buf, "method\tmax_abs_deviation\tmax_factor_where_true_ge_0.1").unwrap();
    writeln!(buf, "bayes\t{bayes_dev}\tNA").unwrap();
    writeln!(buf, "bh\t{bh_dev}\t{bh_factor}").unwrap();
    out.write("calibration.tsv", &buf).map_err(io_err(out.path()))?;

    out.finish(
        "evaluate",
        0,
        format!("max_k={}\n", args.max_k),
        hash_inputs(&[
            ("summary", Some(&args.summary)),
            ("truth", Some(&args.truth)),
            ("baseline", Some(&args.baseline)),
        ])?,
        None,
        started,
    )
    .map_err(io_err(&args.out))?;
    Ok(())
}
