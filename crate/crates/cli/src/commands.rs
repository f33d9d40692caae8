use std::io::Write;
use std::path::{Path, PathBuf};

use leveling::data::{gen_ixor, load_table, save_table, split};
use leveling::io::write_atomic;
use leveling::network::{load, load_any, load_config, prune, save, save_pruned, train, AnyNet};
use leveling::reports::{export_heatmap, full_report, metric, MetricValue};
use leveling::{Dataset, Mat, MetricKind, Task};
use serde_json::{json, Value};

use crate::config::{shipped, RunConfig, DATA_DIR_ENV};
use crate::error::CliError;
use crate::{Command, DataArgs, EvalArgs, GenIxorArgs, HeatmapArgs, PruneArgs, ReportArgs, TrainArgs};

type Out<'a> = &'a mut dyn Write;

pub fn dispatch(command: Command, out: Out) -> Result<(), CliError> {
    match command {
        Command::GenIxor(a) => gen_ixor_cmd(a, out),
        Command::Train(a) => train_cmd(a, out),
        Command::Eval(a) => eval_cmd(a, out),
        Command::Prune(a) => prune_cmd(a, out),
        Command::Report(a) => report_cmd(a, out),
        Command::Heatmap(a) => heatmap_cmd(a, out),
    }
}

fn emit(out: Out, text: &str) -> Result<(), CliError> {
    writeln!(out, "{text}").map_err(|e| CliError::data(format!("cannot write to stdout: {e}")))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize")
}

fn gen_ixor_cmd(a: GenIxorArgs, out: Out) -> Result<(), CliError> {
    let d: Dataset = gen_ixor(a.rows, a.seed)?;
    let mut summary = json!({ "rows": d.len() });
    match &a.test_out {
        Some(test_out) => {
            let (train, test) = split(&d, a.seed)?;
            save_table(&train, &a.out)?;
            save_table(&test, test_out)?;
            summary = json!({ "train_rows": train.len(), "test_rows": test.len() });
        }
        None => save_table(&d, &a.out)?,
    }
    emit(out, &summary.to_string())
}

/// Reads `--config`, which is a file path or a shipped config name.
/// Returns the config and the directory relative paths default to.
fn read_config(name: &str) -> Result<(RunConfig, PathBuf), CliError> {
    let path = Path::new(name);
    if path.is_file() {
        let base = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        return Ok((RunConfig::read(path)?, base));
    }
    match shipped(name) {
        Some(text) => Ok((RunConfig::from_json(text)?, PathBuf::from("."))),
        None => Err(CliError::data(format!("config not found: {name}"))),
    }
}

fn absolute(p: &Path) -> Result<PathBuf, CliError> {
    std::path::absolute(p).map_err(|e| CliError::data(format!("cannot resolve {}: {e}", p.display())))
}

fn train_cmd(a: TrainArgs, out: Out) -> Result<(), CliError> {
    let (mut cfg, config_dir) = read_config(&a.config)?;
    let base = match (&a.data_dir, std::env::var_os(DATA_DIR_ENV)) {
        (Some(d), _) => d.clone(),
        (None, Some(env)) => PathBuf::from(env),
        (None, None) => config_dir,
    };
    cfg.resolve_paths(&absolute(&base)?);
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = a.lr {
        cfg.lr = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.iterations {
        cfg.iterations = v;
        // keep the default warmup proportional to the overridden length
        cfg.lambda_warmup_iters = None;
    }
    if let Some(v) = a.mode {
        cfg.mode = v.into();
    }
    cfg.apply_defaults();
    cfg.validate()?;

    let checkpoint = a
        .out
        .or_else(|| cfg.output.checkpoint.clone())
        .unwrap_or_else(|| PathBuf::from("model.json"));
    let history_path = a
        .history
        .or_else(|| cfg.output.history.clone())
        .unwrap_or_else(|| checkpoint.with_extension("history.csv"));

    let (train_set, test_set) = cfg.dataset.load(cfg.task, cfg.split_seed)?;
    if train_set.dim() != cfg.architecture[0] {
        return Err(CliError::usage(format!(
            "architecture input width {} does not match the dataset's {} features",
            cfg.architecture[0],
            train_set.dim()
        )));
    }
    let (net, history) = train(&cfg.train_config(), &train_set, Some(&test_set), cfg.hidden(), cfg.outputs())?;

    let embedded = serde_json::to_value(&cfg).expect("config serializes");
    save(&net, &checkpoint, Some(&embedded))?;
    write_atomic(&history_path, history.to_csv().as_bytes())?;

    let kind = cfg.metric.unwrap_or(MetricKind::default_for(cfg.task));
    let value = metric(kind, &leveling::network::forward_eval(&net, &test_set.features)?, &test_set.labels)?;
    let summary = json!({
        "checkpoint": checkpoint,
        "history": history_path,
        "metric": MetricValue { kind, value },
        "architecture": prune(&net)?.architecture(),
        "open_gates": net.open_gate_counts(),
    });
    emit(out, &pretty(&summary))
}

/// The config embedded in a checkpoint, if any.
fn embedded_config(model: &Path) -> Result<Option<RunConfig>, CliError> {
    match load_config(model)? {
        None => Ok(None),
        Some(v) => serde_json::from_value(v)
            .map(Some)
            .map_err(|e| CliError::data(format!("{}: embedded config: {e}", model.display()))),
    }
}

/// Evaluation rows and metric for `model`.
fn eval_rows(model: &Path, task: Task, a: &DataArgs) -> Result<(Dataset, MetricKind, Option<RunConfig>), CliError> {
    let cfg = embedded_config(model)?;
    let data = match (&a.data, &cfg) {
        (Some(path), _) => load_table(path, task)?,
        (None, Some(c)) => c.dataset.load(c.task, c.split_seed)?.1,
        (None, None) => {
            return Err(CliError::usage(format!(
                "--data is required: {} has no embedded config",
                model.display()
            )))
        }
    };
    let kind = a
        .metric
        .map(MetricKind::from)
        .or(cfg.as_ref().and_then(|c| c.metric))
        .unwrap_or(MetricKind::default_for(task));
    Ok((data, kind, cfg))
}

fn check_width(expected: usize, data: &Dataset) -> Result<(), CliError> {
    if data.dim() != expected {
        return Err(CliError::usage(format!(
            "model expects {expected} features, data has {}",
            data.dim()
        )));
    }
    Ok(())
}

fn eval_cmd(a: EvalArgs, out: Out) -> Result<(), CliError> {
    let net: AnyNet<f64> = load_any(&a.model)?;
    let (data, kind, _) = eval_rows(&a.model, net.task(), &a.data)?;
    check_width(net.input_dim(), &data)?;
    let value = metric(kind, &net.forward(&data.features)?, &data.labels)?;
    let v = json!({ "metric": MetricValue { kind, value }, "rows": data.len() });
    emit(out, &pretty(&v))
}

fn prune_cmd(a: PruneArgs, out: Out) -> Result<(), CliError> {
    let net = load::<f64>(&a.model)?;
    let pruned = prune(&net)?;
    save_pruned(&pruned, &a.out, load_config(&a.model)?.as_ref())?;
    emit(out, &pruned.architecture())
}

fn report_cmd(a: ReportArgs, out: Out) -> Result<(), CliError> {
    let net = match load_any::<f64>(&a.model)? {
        AnyNet::Full(n) => n,
        AnyNet::Pruned(_) => {
            return Err(CliError::usage(format!(
                "{} is a pruned model; report needs the unpruned checkpoint",
                a.model.display()
            )))
        }
    };
    let (data, kind, _) = eval_rows(&a.model, net.task, &a.data)?;
    check_width(net.input_dim(), &data)?;
    let mut report = full_report(&net, &data, kind)?;
    report.config = load_config(&a.model)?;
    let text = report.to_json();
    if let Some(path) = &a.out {
        write_atomic(path, format!("{text}\n").as_bytes())?;
    }
    emit(out, &text)
}

fn heatmap_cmd(a: HeatmapArgs, out: Out) -> Result<(), CliError> {
    let net = load_any::<f64>(&a.model)?;
    let layers: Vec<&Mat<f64>> = match &net {
        AnyNet::Full(n) => n.layers.iter().map(|l| &l.weights).collect(),
        AnyNet::Pruned(n) => n.layers.iter().map(|l| &l.weights).collect(),
    };
    let m = if a.weights == "head" {
        match &net {
            AnyNet::Full(n) => &n.head.weights,
            AnyNet::Pruned(n) => &n.head_weights,
        }
    } else {
        let idx: usize = a
            .weights
            .parse()
            .ok()
            .filter(|&i| i >= 1 && i <= layers.len())
            .ok_or_else(|| {
                CliError::usage(format!(
                    "--weights must be `head` or a layer index in 1..={}, got {:?}",
                    layers.len(),
                    a.weights
                ))
            })?;
        layers[idx - 1]
    };
    export_heatmap(m, &a.out, a.format.into())?;
    emit(out, &json!({ "rows": m.rows(), "cols": m.cols() }).to_string())
}
