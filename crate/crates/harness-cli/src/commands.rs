//! Subcommand implementations. Each returns its stdout payload as a string
//! so tests can drive them without spawning the binary.

use crate::bundles::ParamBundle;
use crate::errors::{CliError, CliResult};
use crate::grid::{parse_grid, parse_reals};
use crate::jsonfmt::{csv_f64, json_array, json_f64, json_str};
use nano_attention::{
    make_needle_task, train_model, AttnSummaryAccum, Model, ToyModelConfig, TrainLog,
};
use reweight_core::{reweight, ModulatorParams, ReweightSpec, Scores, Temperature};
use tradeoff_metrics::{
    attention_rollout, default_reference, mean_abs, pareto_sweep, patch_similarity,
    rollout_discrepancy, score_histogram, AttentionStack, AttnMatrix, LayerAttention, MetricConfig,
    PropReport,
};

const FN_NAMES: &str = "softmax, multimax, sparsemax, entmax15, evsoftmax";

/// Resolve a function name plus its parameters into a dispatchable spec.
pub fn build_spec(
    fn_name: &str,
    tau: Option<f64>,
    params: Option<&str>,
    layer: usize,
) -> CliResult<ReweightSpec> {
    let spec = match fn_name {
        "softmax" => {
            let tau = Temperature::new(tau.unwrap_or(1.0))?;
            ReweightSpec::Softmax(tau)
        }
        "multimax" => {
            let source = params.ok_or_else(|| {
                CliError::Usage("multimax needs --params <bundle or file>".into())
            })?;
            let bundle = ParamBundle::load(source)?;
            ReweightSpec::Multimax(bundle.layer(layer)?.clone())
        }
        "sparsemax" => ReweightSpec::Sparsemax,
        "entmax15" => ReweightSpec::Entmax15,
        "evsoftmax" => ReweightSpec::EvSoftmax,
        other => {
            return Err(CliError::Usage(format!(
                "unknown function {other:?} (expected one of {FN_NAMES})"
            )))
        }
    };
    if tau.is_some() && !matches!(spec, ReweightSpec::Softmax(_)) {
        return Err(CliError::Usage("--tau only applies to softmax".into()));
    }
    if params.is_some() && !matches!(spec, ReweightSpec::Multimax(_)) {
        return Err(CliError::Usage("--params only applies to multimax".into()));
    }
    Ok(spec)
}

/// `eval`: run one reweighting function on one input vector.
pub fn cmd_eval(
    fn_name: &str,
    input: &str,
    tau: Option<f64>,
    params: Option<&str>,
    layer: usize,
) -> CliResult<String> {
    let spec = build_spec(fn_name, tau, params, layer)?;
    let x = Scores::new(parse_reals(input)?)?;
    let out = reweight(&spec, &x)?;
    Ok(format!("{{\"output\":{}}}\n", json_array(out.as_slice())))
}

/// `modulator-curve`: sigma(x) per layer of a parameter bundle over a grid.
pub fn cmd_modulator_curve(params: &str, range: &str) -> CliResult<String> {
    let bundle = ParamBundle::load(params)?;
    let grid = parse_grid(range)?;
    let mut out = String::from("x");
    for i in 1..=bundle.layers.len() {
        out.push_str(&format!(",sigma_layer_{i}"));
    }
    out.push('\n');
    for &x in &grid {
        out.push_str(&csv_f64(x));
        for p in &bundle.layers {
            out.push(',');
            out.push_str(&csv_f64(p.apply_scalar(x)));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Planar embedding of a 3-entry probability vector onto the unit triangle.
pub fn barycentric(p: &[f64]) -> (f64, f64) {
    debug_assert_eq!(p.len(), 3);
    (p[1] + p[2] / 2.0, 3f64.sqrt() / 2.0 * p[2])
}

/// `simplex-path`: trajectory of a 3-entry distribution across a knob grid.
pub fn cmd_simplex_path(
    fn_name: &str,
    input: &str,
    grid_spec: &str,
    params: Option<&str>,
    layer: usize,
) -> CliResult<String> {
    let x = parse_reals(input)?;
    if x.len() != 3 {
        return Err(CliError::Usage(format!(
            "simplex-path needs exactly 3 input entries, got {}",
            x.len()
        )));
    }
    let scores = Scores::new(x)?;
    let spec = build_spec(fn_name, None, params, layer)?;
    let grid = parse_grid(grid_spec)?;
    let mut out = String::from("knob,p1,p2,p3,bx,by\n");
    for &knob in &grid {
        let tau = Temperature::new(knob)
            .map_err(|_| CliError::Usage(format!("knob values must be positive, got {knob}")))?;
        let phi = match &spec {
            ReweightSpec::Softmax(_) => reweight(&ReweightSpec::Softmax(tau), &scores)?,
            other => {
                let scaled: Vec<f64> = scores.as_slice().iter().map(|v| v / tau.tau()).collect();
                reweight(other, &Scores::new(scaled)?)?
            }
        };
        let p = phi.as_slice();
        let (bx, by) = barycentric(p);
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            csv_f64(knob),
            csv_f64(p[0]),
            csv_f64(p[1]),
            csv_f64(p[2]),
            csv_f64(bx),
            csv_f64(by)
        ));
    }
    Ok(out)
}

/// `sweep`: multi-modality and sparsity along a knob grid.
pub fn cmd_sweep(
    fn_name: &str,
    input: &str,
    grid_spec: &str,
    epsilon: Option<f64>,
    s_ref: Option<f64>,
    params: Option<&str>,
    layer: usize,
) -> CliResult<String> {
    let spec = build_spec(fn_name, None, params, layer)?;
    let x = Scores::new(parse_reals(input)?)?;
    let grid = parse_grid(grid_spec)?;
    let eps = epsilon.unwrap_or_else(|| mean_abs(&x));
    let s = match s_ref {
        Some(v) => v,
        None => default_reference(&x)?,
    };
    let cfg = MetricConfig::new(eps, s)?;
    let points = pareto_sweep(&x, &spec, &grid, &cfg)?;
    let mut out = String::from("knob,m_score,s_score,m_vacuous,s_vacuous\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_f64(p.knob),
            csv_f64(p.m_score),
            csv_f64(p.s_score),
            u8::from(p.m_vacuous),
            u8::from(p.s_vacuous)
        ));
    }
    Ok(out)
}

fn prop_report_json(report: &PropReport) -> String {
    let mut out = String::from("{");
    out.push_str(&format!("\"seed\":{},", report.seed));
    out.push_str(&format!("\"trials\":{},", report.trials));
    out.push_str(&format!("\"all_passed\":{},", report.all_passed()));
    out.push_str("\"checks\":[");
    for (i, c) in report.checks.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!(
            "{{\"name\":{},\"trials\":{},\"violations\":{},\"vacuous\":{},\"worst_slack\":{},\"first_violation\":{}}}",
            json_str(&c.name),
            c.trials,
            c.violations,
            c.vacuous,
            json_f64(c.worst_slack),
            c.first_violation
                .as_deref()
                .map(json_str)
                .unwrap_or_else(|| "null".into()),
        ));
    }
    out.push_str("]}");
    out.push('\n');
    out
}

/// `verify-props`: run every randomized inequality suite. The report plus a
/// flag saying whether everything passed (exit 1 otherwise).
pub fn cmd_verify_props(trials: u64, seed: u64) -> CliResult<(String, bool)> {
    if trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    let report = tradeoff_metrics::run_all(trials, seed);
    Ok((prop_report_json(&report), report.all_passed()))
}

#[derive(Debug, Clone)]
pub struct TrainToyOpts {
    pub fn_name: String,
    pub steps: usize,
    pub seed: u64,
    pub lr: f64,
    pub depth: usize,
    pub heads: usize,
    pub model_dim: usize,
    pub ff_dim: usize,
    pub seq_len: usize,
    pub vocab: usize,
    pub classes: usize,
    pub relevant: usize,
    pub samples: usize,
    pub batch_size: usize,
    pub checkpoint: Option<std::path::PathBuf>,
}

impl Default for TrainToyOpts {
    fn default() -> Self {
        TrainToyOpts {
            fn_name: "softmax".into(),
            steps: 2000,
            seed: 0,
            lr: 0.2,
            depth: 2,
            heads: 2,
            model_dim: 16,
            ff_dim: 32,
            seq_len: 32,
            vocab: 64,
            classes: 4,
            relevant: 3,
            samples: 1024,
            batch_size: 16,
            checkpoint: None,
        }
    }
}

impl TrainToyOpts {
    pub fn model_config(&self) -> CliResult<ToyModelConfig> {
        // MultiMax training always starts from the identity modulator, i.e.
        // exactly at the softmax baseline.
        let reweight = if self.fn_name == "multimax" {
            ReweightSpec::multimax_identity(2)
        } else {
            build_spec(&self.fn_name, None, None, 1)?
        };
        let cfg = ToyModelConfig {
            depth: self.depth,
            heads: self.heads,
            model_dim: self.model_dim,
            ff_dim: self.ff_dim,
            seq_len: self.seq_len,
            vocab: self.vocab,
            classes: self.classes,
            reweight,
            seed: self.seed,
            batch_size: self.batch_size,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn train_log_json(log: &TrainLog) -> String {
    let mut out = String::from("{\"steps\":[");
    for (i, s) in log.steps.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!(
            "{{\"loss\":{},\"accuracy\":{}}}",
            json_f64(s.loss),
            json_f64(s.accuracy)
        ));
    }
    out.push_str("],\"final_modulator\":[");
    for (i, p) in log.final_modulator.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&modulator_json(p));
    }
    out.push_str("],\"attention_summary\":[");
    for (i, s) in log.attention_summary.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!(
            "{{\"layer\":{},\"multimodality\":{},\"sparsity\":{}}}",
            s.layer,
            json_f64(s.multimodality),
            json_f64(s.sparsity)
        ));
    }
    out.push_str(&format!(
        "],\"holdout_accuracy\":{}}}\n",
        json_f64(log.holdout_accuracy)
    ));
    out
}

fn modulator_json(p: &ModulatorParams) -> String {
    let pick = |f: fn(&reweight_core::OrderParams) -> f64| -> String {
        json_array(&p.orders().iter().map(f).collect::<Vec<_>>())
    };
    format!(
        "{{\"tb\":{},\"td\":{},\"b\":{},\"d\":{}}}",
        pick(|o| o.t_b),
        pick(|o| o.t_d),
        pick(|o| o.b),
        pick(|o| o.d)
    )
}

/// `train-toy`: train the toy classifier, print the log, optionally write a
/// checkpoint.
pub fn cmd_train_toy(opts: &TrainToyOpts) -> CliResult<String> {
    let cfg = opts.model_config()?;
    let task = make_needle_task(
        opts.seed.wrapping_add(1000),
        opts.seq_len,
        opts.relevant,
        opts.vocab,
        opts.classes,
        opts.samples,
    )?;
    let (model, log) = train_model(&cfg, &task, opts.steps, opts.lr)?;
    if let Some(path) = &opts.checkpoint {
        let json = serde_json::to_string(&model.to_checkpoint())
            .map_err(|e| CliError::Numerical(format!("cannot serialize checkpoint: {e}")))?;
        std::fs::write(path, json)?;
    }
    Ok(train_log_json(&log))
}

/// `attn-stats`: attention statistics of a trained checkpoint on a fresh
/// evaluation batch. Writes four CSV files into `out_dir` and returns a
/// small summary.
pub fn cmd_attn_stats(
    checkpoint: &std::path::Path,
    eval_seed: u64,
    samples: usize,
    relevant: usize,
    out_dir: &std::path::Path,
) -> CliResult<String> {
    let json = std::fs::read_to_string(checkpoint)
        .map_err(|e| CliError::Usage(format!("cannot read checkpoint: {e}")))?;
    let cp: nano_attention::Checkpoint = serde_json::from_str(&json)
        .map_err(|e| CliError::Usage(format!("cannot parse checkpoint: {e}")))?;
    let model = Model::from_checkpoint(&cp)?;
    let cfg = &model.cfg;
    if samples == 0 {
        return Err(CliError::Usage(
            "need at least one evaluation sample".into(),
        ));
    }
    let task = make_needle_task(
        eval_seed,
        cfg.seq_len,
        relevant,
        cfg.vocab,
        cfg.classes,
        samples,
    )?;

    std::fs::create_dir_all(out_dir)?;
    let edges = tradeoff_metrics::default_log_edges();
    let depth = cfg.depth;
    let mut layer_scores: Vec<Vec<f64>> = vec![Vec::new(); depth];
    let mut sim_sum = vec![0.0; depth];
    let mut disc_sum = vec![0.0; depth];
    let mut summaries = AttnSummaryAccum::new(depth);

    for sample in &task.samples {
        let diag = model.forward_diagnostics(&sample.tokens)?;
        summaries.add(&diag.scores, &diag.probs)?;
        let mut layers = Vec::with_capacity(depth);
        for (li, heads) in diag.probs.iter().enumerate() {
            let mut head_mats = Vec::with_capacity(heads.len());
            for h in heads {
                layer_scores[li].extend_from_slice(&h.data);
                let rows: Vec<Vec<f64>> = (0..h.rows).map(|r| h.row(r).to_vec()).collect();
                head_mats
                    .push(AttnMatrix::new(rows).map_err(|e| CliError::Numerical(e.to_string()))?);
            }
            layers.push(LayerAttention { heads: head_mats });
            let rows: Vec<Vec<f64>> = (0..diag.tokens[li].rows)
                .map(|r| diag.tokens[li].row(r).to_vec())
                .collect();
            sim_sum[li] +=
                patch_similarity(&rows).map_err(|e| CliError::Numerical(e.to_string()))?;
        }
        let stack = AttentionStack::new(layers).map_err(|e| CliError::Numerical(e.to_string()))?;
        let disc = rollout_discrepancy(&stack);
        for (acc, d) in disc_sum.iter_mut().zip(disc) {
            *acc += d;
        }
        // Keep the rollout path exercised; rows must stay stochastic.
        let _ = attention_rollout(&stack, false);
    }

    let n = task.samples.len() as f64;
    let mut hist_csv = String::from("layer,bin_lo,bin_hi,count\n");
    let mut cum_csv = String::from("layer,bin_hi,cumulative_fraction\n");
    for (li, scores) in layer_scores.iter().enumerate() {
        let h = score_histogram(scores, &edges).map_err(|e| CliError::Numerical(e.to_string()))?;
        for (bi, count) in h.counts.iter().enumerate() {
            hist_csv.push_str(&format!(
                "{},{},{},{}\n",
                li + 1,
                csv_f64(h.edges[bi]),
                csv_f64(h.edges[bi + 1]),
                count
            ));
        }
        for (bi, frac) in h.cumulative.iter().enumerate() {
            cum_csv.push_str(&format!(
                "{},{},{}\n",
                li + 1,
                csv_f64(h.edges[bi + 1]),
                csv_f64(*frac)
            ));
        }
    }
    let mut sim_csv = String::from("layer,patch_similarity\n");
    let mut disc_csv = String::from("layer,rollout_discrepancy\n");
    for li in 0..depth {
        sim_csv.push_str(&format!("{},{}\n", li + 1, csv_f64(sim_sum[li] / n)));
        disc_csv.push_str(&format!("{},{}\n", li + 1, csv_f64(disc_sum[li] / n)));
    }

    std::fs::write(out_dir.join("histogram.csv"), hist_csv)?;
    std::fs::write(out_dir.join("cumulative.csv"), cum_csv)?;
    std::fs::write(out_dir.join("patch_similarity.csv"), sim_csv)?;
    std::fs::write(out_dir.join("rollout_discrepancy.csv"), disc_csv)?;

    let mut out = String::from("{\"written\":[\"histogram.csv\",\"cumulative.csv\",\"patch_similarity.csv\",\"rollout_discrepancy.csv\"],\"attention_summary\":[");
    for (i, s) in summaries.finish().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!(
            "{{\"layer\":{},\"multimodality\":{},\"sparsity\":{}}}",
            s.layer,
            json_f64(s.multimodality),
            json_f64(s.sparsity)
        ));
    }
    out.push_str("]}\n");
    Ok(out)
}

/// Finite-difference slope of a sampled curve at the grid point nearest to
/// `at`.
pub fn fd_slope(grid: &[f64], values: &[f64], at: f64) -> Option<f64> {
    let idx = grid
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| (**a - at).abs().partial_cmp(&(**b - at).abs()).unwrap())?
        .0;
    if idx == 0 || idx + 1 >= grid.len() {
        return None;
    }
    Some((values[idx + 1] - values[idx - 1]) / (grid[idx + 1] - grid[idx - 1]))
}
