//! Command-line front end: `train`, `explain`, `eval`, `pick` and
//! `generate-synthetic`.
//!
//! Exit codes: 0 on success, 2 for usage and input errors, 3 when an
//! experiment's accuracy gate cannot be met, 1 for anything else.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{Experiment, RunConfig, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::evaluation::{
    global_importance, run_model_selection, run_noise_experiment, run_trust_experiment, submodular_pick,
    ExplanationMatrix,
};
use crate::explainers::{explain, Explanation, Method};
use crate::graph::{inject_noise_features, save_graph, write_atomic, Graph, GraphFiles};
use crate::predictor::{accuracy, load_model, save_model, train_reference_gnn};
use crate::synthetic::generate;

#[derive(Debug, Parser)]
#[command(name = "hsic-explain", version, about = "Local HSIC Lasso explanations for graph node classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run config, or a run_manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dataset directory (edges.tsv, features.csv, labels.txt, split.json).
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the reference GNN and write model.json and metrics.json.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Explain node predictions, one JSON file per node.
    Explain {
        #[command(flatten)]
        common: Common,
        /// graphlime, lime_linear, greedy or random.
        #[arg(long)]
        method: Option<String>,
        /// Comma-separated node ids; defaults to the test nodes.
        #[arg(long, value_delimiter = ',')]
        nodes: Option<Vec<usize>>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        hops: Option<usize>,
    },
    /// Run a simulated-user experiment and write JSON and CSV reports.
    Eval {
        #[command(flatten)]
        common: Common,
        /// noise, trust or model-select.
        #[arg(long)]
        experiment: Option<String>,
        /// Comma-separated methods.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        #[arg(long)]
        rounds: Option<usize>,
    },
    /// Submodular Pick over explanations of candidate nodes.
    Pick {
        #[command(flatten)]
        common: Common,
        /// Number of instances to pick.
        #[arg(long, short = 'b')]
        budget: Option<usize>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Write the synthetic benchmark dataset.
    GenerateSynthetic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        nodes: Option<usize>,
    },
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::GateUnmet { .. } => 3,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::Bounds { .. }
        | Error::Consistency(_)
        | Error::InvalidInput(_)
        | Error::Shape { .. }
        | Error::Format(_)
        | Error::MissingLabels => 2,
        _ => 1,
    }
}

fn base_config(common: &Common) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = Some(seed);
    }
    if let Some(out) = &common.out {
        config.out = Some(out.clone());
    }
    if let Some(data) = &common.data {
        config.data.dir = Some(data.clone());
    }
    Ok(config)
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train { common, epochs } => {
            let mut config = base_config(&common)?;
            if let Some(e) = epochs {
                config.train.epochs = e;
            }
            config.resolve()?;
            cmd_train(&config)
        }
        Command::Explain { common, method, nodes, model, top_k, hops } => {
            let mut config = base_config(&common)?;
            if let Some(m) = method {
                config.explain.method = m.parse()?;
            }
            if nodes.is_some() {
                config.explain.nodes = nodes;
            }
            if model.is_some() {
                config.model = model;
            }
            if let Some(k) = top_k {
                config.explainer.top_k = k;
            }
            if let Some(h) = hops {
                config.explainer.hops = h;
            }
            config.resolve()?;
            cmd_explain(&config)
        }
        Command::Eval { common, experiment, methods, rounds } => {
            let mut config = base_config(&common)?;
            if let Some(x) = experiment {
                config.eval.experiment = Some(x.parse()?);
            }
            if let Some(ms) = methods {
                config.eval.methods = ms.iter().map(|m| m.parse()).collect::<Result<_>>()?;
            }
            if let Some(r) = rounds {
                config.eval.trust.rounds = r;
                config.eval.model_select.rounds = r;
            }
            config.resolve()?;
            cmd_eval(&config)
        }
        Command::Pick { common, budget, method, model } => {
            let mut config = base_config(&common)?;
            if budget.is_some() {
                config.pick.budget = budget;
            }
            if let Some(m) = method {
                config.pick.method = m.parse()?;
            }
            if model.is_some() {
                config.model = model;
            }
            config.resolve()?;
            cmd_pick(&config)
        }
        Command::GenerateSynthetic { common, nodes } => {
            let mut config = base_config(&common)?;
            if let Some(n) = nodes {
                config.synthetic.nodes = n;
            }
            config.resolve()?;
            cmd_generate(&config)
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn write_manifest(config: &RunConfig, command: &str) -> Result<()> {
    write_json(&config.out_dir().join(MANIFEST_FILE), &config.manifest(command)?)
}

fn model_path(config: &RunConfig) -> PathBuf {
    config.model.clone().unwrap_or_else(|| config.out_dir().join("model.json"))
}

#[derive(Serialize)]
struct Metrics {
    train_acc: f64,
    test_acc: f64,
    epochs: usize,
    seed: u64,
    final_loss: f64,
}

fn cmd_train(config: &RunConfig) -> Result<()> {
    let graph = config.load_graph()?;
    let split = config.split(&graph)?;
    let model = train_reference_gnn(&graph, &split.train_ids, &split.test_ids, &config.train)?;
    let meta = model.training().expect("trained model has metadata");
    let metrics = Metrics {
        train_acc: meta.train_accuracy,
        test_acc: accuracy(&model, &graph, &split.test_ids)?,
        epochs: meta.epochs,
        seed: meta.seed,
        final_loss: meta.final_loss,
    };
    let out = config.out_dir();
    save_model(&model, &out.join("model.json"))?;
    write_json(&out.join("metrics.json"), &metrics)?;
    write_manifest(config, "train")?;
    println!("{}", serde_json::to_string(&metrics).expect("metrics serialize"));
    Ok(())
}

fn is_node_local(e: &Error) -> bool {
    matches!(e, Error::InsufficientNeighbors { .. } | Error::DegenerateProblem(_) | Error::DegenerateFit(_))
}

fn describe(e: &Explanation, graph: &Graph) -> String {
    e.selected
        .iter()
        .zip(&e.weights)
        .map(|(&j, w)| format!("{}:{w:.4}", graph.feature_name(j)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_explain(config: &RunConfig) -> Result<()> {
    let graph = config.load_graph()?;
    let model = load_model(&model_path(config))?;
    let nodes = match &config.explain.nodes {
        Some(n) => n.clone(),
        None => config.split(&graph)?.test_ids,
    };
    let method = config.explain.method;
    let out = config.out_dir();
    let mut skipped = 0;
    println!("node\tmethod\tfeatures");
    for &v in &nodes {
        match explain(method, &model, &graph, v, &config.explainer) {
            Ok(e) => {
                let mut text = e.to_json(&graph);
                text.push('\n');
                write_atomic(&out.join(format!("explanation_{method}_{v}.json")), text.as_bytes())?;
                println!("{v}\t{method}\t{}", describe(&e, &graph));
            }
            Err(e) if is_node_local(&e) => {
                eprintln!("warning: node {v}: {e}");
                skipped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    write_manifest(config, "explain")?;
    println!("explained {} of {} nodes ({skipped} skipped)", nodes.len() - skipped, nodes.len());
    Ok(())
}

fn write_report<T: Serialize>(out: &Path, stem: &str, report: &T, csv: &str) -> Result<()> {
    write_json(&out.join(format!("{stem}.json")), report)?;
    write_atomic(&out.join(format!("{stem}.csv")), csv.as_bytes())
}

fn cmd_eval(config: &RunConfig) -> Result<()> {
    let experiment = config.eval.experiment.ok_or_else(|| {
        Error::invalid("no experiment: pass --experiment noise|trust|model-select or set eval.experiment")
    })?;
    let graph = config.load_graph()?;
    let split = config.split(&graph)?;
    let methods = &config.eval.methods;
    let out = config.out_dir();
    match experiment {
        Experiment::Noise => {
            let report = run_noise_experiment(&graph, &split, &config.train, methods, &config.eval.noise)?;
            write_report(&out, &report.file_stem(), &report, &report.to_csv()?)?;
            println!(
                "noise experiment: {} noise features, K = {}, test accuracy {:.3}",
                report.noise_count,
                report.top_k,
                report.test_accuracy.unwrap_or(f64::NAN)
            );
            println!("method\tnodes\tmean_noisy");
            for m in &report.methods {
                println!("{}\t{}\t{:.3}", m.method, m.counts.len(), m.mean);
            }
        }
        Experiment::Trust => {
            let graph = if config.eval.trust_noise_count > 0 {
                inject_noise_features(&graph, config.eval.trust_noise_count, config.seed()?)?.0
            } else {
                graph
            };
            let model = train_reference_gnn(&graph, &split.train_ids, &split.test_ids, &config.train)?;
            let report = run_trust_experiment(&graph, &model, &split.test_ids, methods, &config.eval.trust)?;
            write_report(&out, &report.file_stem(), &report, &report.to_csv()?)?;
            println!("trust experiment: {} rounds, K = {}", report.rounds, report.top_k);
            println!("method\tprecision\trecall\tf1");
            for m in &report.methods {
                println!("{}\t{:.3}\t{:.3}\t{:.3}", m.method, m.precision, m.recall, m.f1);
            }
        }
        Experiment::ModelSelect => {
            let report = run_model_selection(&graph, &split, &config.train, methods, &config.eval.model_select)?;
            write_report(&out, &report.file_stem(), &report, &report.to_csv()?)?;
            println!("model selection: {} rounds, accuracy per B", report.rounds);
            let header: Vec<String> = report.b_values.iter().map(|b| format!("B={b}")).collect();
            println!("method\t{}", header.join("\t"));
            let fmt = |xs: &[f64]| xs.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("\t");
            for m in &report.methods {
                println!("{}\t{}", m.method, fmt(&m.accuracy));
            }
            println!("random_choice\t{}", fmt(&report.random_choice));
        }
    }
    write_manifest(config, "eval")
}

#[derive(Serialize)]
struct PickOutput {
    method: Method,
    budget: usize,
    picks: Vec<usize>,
    truncated: bool,
    candidates: usize,
    seed: u64,
}

fn cmd_pick(config: &RunConfig) -> Result<()> {
    let budget = config
        .pick
        .budget
        .ok_or_else(|| Error::invalid("no budget: pass --budget or set pick.budget"))?;
    if budget == 0 {
        return Err(Error::invalid("pick budget must be at least 1"));
    }
    let graph = config.load_graph()?;
    let model = load_model(&model_path(config))?;
    let candidates = match &config.pick.candidates {
        Some(c) => c.clone(),
        None => config.split(&graph)?.test_ids,
    };
    let method = config.pick.method;
    let mut explanations = Vec::new();
    for &v in &candidates {
        match explain(method, &model, &graph, v, &config.explainer) {
            Ok(e) => explanations.push(e),
            Err(e) if is_node_local(&e) => eprintln!("warning: node {v}: {e}"),
            Err(e) => return Err(e),
        }
    }
    if explanations.is_empty() {
        return Err(Error::invalid("no candidate node could be explained"));
    }
    let d = graph.feature_count();
    let w = ExplanationMatrix::from_explanations(&explanations, d);
    let importance = global_importance(&w)?;
    let pick = submodular_pick(&w, &importance, budget)?;
    if pick.truncated {
        eprintln!("warning: budget {budget} exceeds the {} explained candidates; picked all", w.instance_ids.len());
    }
    let picks: Vec<usize> = pick.picks.iter().map(|&i| w.instance_ids[i]).collect();

    let out = config.out_dir();
    let mut w_csv = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["instance_id".to_string()];
    header.extend((0..d).map(|j| graph.feature_name(j)));
    let csv_err = |e: csv::Error| Error::invalid(format!("csv encoding failed: {e}"));
    w_csv.write_record(&header).map_err(csv_err)?;
    for (row, &id) in w.w.rows().into_iter().zip(&w.instance_ids) {
        let mut record = vec![id.to_string()];
        record.extend(row.iter().map(|x| x.to_string()));
        w_csv.write_record(&record).map_err(csv_err)?;
    }
    let w_bytes = w_csv.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    write_atomic(&out.join("pick_w.csv"), &w_bytes)?;

    let mut i_csv = csv::Writer::from_writer(Vec::new());
    i_csv.write_record(["feature_index", "name", "importance"]).map_err(csv_err)?;
    for (j, x) in importance.iter().enumerate() {
        i_csv.write_record([j.to_string(), graph.feature_name(j), x.to_string()]).map_err(csv_err)?;
    }
    let i_bytes = i_csv.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    write_atomic(&out.join("pick_importance.csv"), &i_bytes)?;

    write_json(
        &out.join("pick.json"),
        &PickOutput {
            method,
            budget,
            picks: picks.clone(),
            truncated: pick.truncated,
            candidates: w.instance_ids.len(),
            seed: config.seed()?,
        },
    )?;
    write_manifest(config, "pick")?;
    for v in picks {
        println!("{v}");
    }
    Ok(())
}

#[derive(Serialize)]
struct GroundTruth {
    informative: Vec<usize>,
    seed: u64,
}

fn cmd_generate(config: &RunConfig) -> Result<()> {
    let seed = config.seed()?;
    let data = generate(&config.synthetic, seed)?;
    let out = config.out_dir();
    save_graph(&data.graph, &GraphFiles::in_dir(&out))?;
    write_json(
        &out.join("split.json"),
        &crate::evaluation::Split { train_ids: data.train_ids.clone(), test_ids: data.test_ids.clone() },
    )?;
    write_json(&out.join("ground_truth.json"), &GroundTruth { informative: data.informative.clone(), seed })?;
    write_manifest(config, "generate-synthetic")?;
    println!(
        "wrote {} nodes, {} edges, {} features ({} informative) to {}",
        data.graph.node_count(),
        data.graph.edges().len(),
        data.graph.feature_count(),
        data.informative.len(),
        out.display()
    );
    Ok(())
}
