//! One function per subcommand. Each reads its inputs from disk, writes its artifacts into the
//! output directory and prints a short summary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use revsignal::describe::{
    invited_vs_unresponded, org_diversity, participation_rate_distribution, unresponded_summary, write_hexbin_csv,
    write_org_csv, write_rates_csv, write_violin_csv,
};
use revsignal::evaluate::{
    cliffs_delta, improvement, negative_predictive_value, out_of_sample_bootstrap, rank_scored, topk_accuracy,
    BootstrapConfig, BootstrapReport, MeasureSummary, Scored,
};
use revsignal::explain::{
    bootstrap_wald, odds_ratio_iqr, partial_effect, rank_report, write_partial_effects_csv, ScottKnottConfig,
};
use revsignal::frame::{read_frame_csv, Frame};
use revsignal::ingest::{
    fetch_changes, load_dataset, normalize, parse_timestamp, write_dataset, IngestConfig, IngestError, UreqTransport,
};
use revsignal::metrics::{
    baseline_variables, build_instances, compute_instance, proposed_variables, write_instances_csv, PatchContext,
    TemporalIndex, METRIC_NAMES,
};
use revsignal::model::{AccountId, Dataset, SubsystemRule, Timestamp};
use revsignal::prepare::{parse_bot_list, prepare as run_prepare, read_labels_csv, write_bots, write_labels_csv, BotRule};
use revsignal::splinefit::{
    build_spec, fit_spec, write_budget_table, DofPolicy, FittedModel, ModelSpec, ScreeningConfig,
};
use revsignal::synth::{generate, SynthConfig};

use crate::config::RunConfig;
use crate::{Failure, RecommendArgs, SynthArgs};

pub const DEFAULT_SEED: u64 = 1;
const TOP_K: [usize; 4] = [1, 2, 3, 5];

fn input_err<E: Display>(context: impl Display) -> impl FnOnce(E) -> Failure {
    move |e| Failure::input(format!("{context}: {e}"))
}

fn internal_err<E: Display>(context: impl Display) -> impl FnOnce(E) -> Failure {
    move |e| Failure::internal(format!("{context}: {e}"))
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("missing or unreadable input {}: {e}", path.display())))
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).map_err(internal_err(format!("cannot create {}", dir.display())))?;
    Ok(dir)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(internal_err(format!("cannot write {}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(internal_err("serialize"))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

fn write_csv_with<F>(path: &Path, f: F) -> Result<(), Failure>
where
    F: FnOnce(&mut Vec<u8>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(internal_err(format!("cannot format {}", path.display())))?;
    write_bytes(path, &buf)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn seed(cfg: &RunConfig) -> Result<u64, Failure> {
    cfg.get("seed", DEFAULT_SEED)
}

fn subsystem_rule(cfg: &RunConfig) -> Result<SubsystemRule, Failure> {
    cfg.get("subsystem_rule", SubsystemRule::Project)
}

fn load(cfg: &RunConfig) -> Result<Dataset, Failure> {
    let path = PathBuf::from(cfg.require("dataset")?);
    load_dataset(&path).map_err(|e| match e {
        IngestError::Io { .. } => Failure::input(format!("missing or unreadable input {}: {e}", path.display())),
        other => Failure::input(format!("{}: {other}", path.display())),
    })
}

fn load_bots(cfg: &RunConfig) -> Result<BTreeSet<AccountId>, Failure> {
    Ok(parse_bot_list(&read_input(&cfg.out_dir().join("bots.txt"))?))
}

fn load_index(cfg: &RunConfig, dataset: &Dataset, bots: &BTreeSet<AccountId>) -> Result<TemporalIndex, Failure> {
    TemporalIndex::build(&dataset.changes, bots, subsystem_rule(cfg)?).map_err(internal_err("history index"))
}

pub fn ingest(cfg: &RunConfig) -> Result<(), Failure> {
    let dir = out_dir(cfg)?;
    let target = dir.join("dataset.jsonl");
    if let Some(input) = cfg.raw("input") {
        let dataset = load_dataset(Path::new(input)).map_err(input_err(input))?;
        write_dataset(&target, &dataset).map_err(internal_err("write dataset"))?;
        println!("canonicalized {} changes into {}", dataset.changes.len(), target.display());
        return Ok(());
    }
    let server = cfg.require("server")?;
    let mut config = IngestConfig::new(server, cfg.require("query")?);
    config.page_size = cfg.get("page_size", config.page_size)?;
    config.start_offset = cfg.get("start", 0)?;
    config.rate_limit = cfg.get("rate_limit", config.rate_limit)?;
    if let Some(user) = cfg.raw("user") {
        let var = cfg.raw("password_env").unwrap_or("GERRIT_PASSWORD");
        let pass = std::env::var(var).map_err(|_| Failure::input(format!("password variable {var} is not set")))?;
        config.auth = Some((user.to_string(), pass));
    }
    let transport = UreqTransport::new(config.auth.clone());
    let mut dataset = Dataset::default();
    let summary = fetch_changes(&config, &transport, |raw| {
        let (change, accounts) = normalize(&raw)?;
        for acc in accounts {
            dataset
                .accounts
                .entry(acc.account_id.clone())
                .and_modify(|known| {
                    if known.email.is_empty() {
                        known.email = acc.email.clone();
                    }
                    if known.display_name.is_empty() {
                        known.display_name = acc.display_name.clone();
                    }
                })
                .or_insert(acc);
        }
        dataset.changes.push(change);
        Ok(())
    })
    .map_err(|e| match e {
        IngestError::Http { .. } => Failure::input(e.to_string()),
        other => Failure::internal(other.to_string()),
    })?;
    dataset.sort_changes();
    write_dataset(&target, &dataset).map_err(internal_err("write dataset"))?;
    // Reload so the written file is validated against the interchange schema.
    let reloaded = load_dataset(&target).map_err(internal_err("validate written dataset"))?;
    println!("fetched {} changes in {} requests into {}", reloaded.changes.len(), summary.requests, target.display());
    Ok(())
}

pub fn prepare(cfg: &RunConfig) -> Result<(), Failure> {
    let dataset = load(cfg)?;
    let known = match cfg.raw("bots") {
        Some(p) => parse_bot_list(&read_input(Path::new(p))?),
        None => BTreeSet::new(),
    };
    let prepared = run_prepare(&dataset.changes, &known, BotRule::default());
    let f = &prepared.funnel;
    println!("loaded changes         {}", f.loaded);
    println!("bot accounts           {}", f.bots);
    println!("excluded: not closed   {}", f.excluded_not_closed);
    println!("excluded: self-review  {}", f.excluded_self_reviewed);
    println!("excluded: bookkeeping  {}", f.excluded_bookkeeping);
    println!("relevant changes       {}", f.relevant);
    println!("invitations labeled    {} ({} responded, {} not)", f.labels, f.responded, f.not_responded);
    if prepared.relevant.is_empty() {
        return Err(Failure::input("no relevant changes"));
    }
    let dir = out_dir(cfg)?;
    write_csv_with(&dir.join("labels.csv"), |w| write_labels_csv(w, &prepared.labels))?;
    let mut bots = Vec::new();
    write_bots(&mut bots, &prepared.bots).map_err(internal_err("bots"))?;
    write_bytes(&dir.join("bots.txt"), &bots)?;
    let relevant = Dataset { accounts: dataset.accounts.clone(), changes: prepared.relevant.clone() };
    write_dataset(&dir.join("relevant.jsonl"), &relevant).map_err(internal_err("write relevant changes"))?;
    write_json(&dir.join("funnel.json"), &json!({ "config_hash": cfg.hash(), "funnel": f }))?;
    Ok(())
}

pub fn metrics(cfg: &RunConfig) -> Result<(), Failure> {
    let dataset = load(cfg)?;
    let bots = load_bots(cfg)?;
    let labels_path = cfg.out_dir().join("labels.csv");
    let labels = read_labels_csv(read_input(&labels_path)?.as_bytes()).map_err(input_err(labels_path.display()))?;
    let index = load_index(cfg, &dataset, &bots)?;
    let instances = build_instances(&dataset.changes, &labels, &index).map_err(input_err("metrics"))?;
    let dir = out_dir(cfg)?;
    write_csv_with(&dir.join("instances.csv"), |w| write_instances_csv(w, &instances))?;
    println!("computed {} instances over {} metrics", instances.len(), METRIC_NAMES.len());
    Ok(())
}

/// Parsed `--where column=value` with the file-name tag it implies.
struct RowFilter {
    column: String,
    value: f64,
    tag: String,
}

fn row_filter(cfg: &RunConfig) -> Result<Option<RowFilter>, Failure> {
    let Some(raw) = cfg.raw("where") else { return Ok(None) };
    let (column, value) =
        raw.split_once('=').ok_or_else(|| Failure::input(format!("--where expects column=value, got {raw:?}")))?;
    let (column, value) = (column.trim(), value.trim());
    let number = match value {
        "true" => 1.0,
        "false" => 0.0,
        v => v.parse().map_err(|_| Failure::input(format!("--where value {v:?} is not a number or boolean")))?,
    };
    let tag: String = format!(".where_{column}_{value}")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '_' || c == '-' { c } else { '_' })
        .collect();
    Ok(Some(RowFilter { column: column.to_string(), value: number, tag }))
}

fn load_frame(cfg: &RunConfig) -> Result<(Frame, String), Failure> {
    let path = cfg.path_or_out("instances", "instances.csv");
    let frame = read_frame_csv(read_input(&path)?.as_bytes()).map_err(input_err(path.display()))?;
    match row_filter(cfg)? {
        None => Ok((frame, String::new())),
        Some(f) => {
            let subset = frame.filter_eq(&f.column, f.value).map_err(input_err("--where"))?;
            if subset.nrows() == 0 {
                return Err(Failure::input(format!("no instances with {} = {}", f.column, f.value)));
            }
            Ok((subset, f.tag))
        }
    }
}

fn variable_sets(cfg: &RunConfig) -> Result<Vec<(&'static str, Vec<String>)>, Failure> {
    let proposed = ("proposed", proposed_variables());
    let baseline = ("baseline", baseline_variables());
    match cfg.raw("variables").unwrap_or("both") {
        "both" => Ok(vec![proposed, baseline]),
        "proposed" => Ok(vec![proposed]),
        "baseline" => Ok(vec![baseline]),
        other => Err(Failure::input(format!("unknown variable set {other:?} (proposed, baseline or both)"))),
    }
}

fn model_path(cfg: &RunConfig, set: &str, tag: &str) -> PathBuf {
    cfg.out_dir().join(format!("model_{set}{tag}.json"))
}

fn load_model(path: &Path) -> Result<FittedModel, Failure> {
    FittedModel::from_json(&read_input(path)?).map_err(input_err(path.display()))
}

pub fn fit(cfg: &RunConfig) -> Result<(), Failure> {
    let (frame, tag) = load_frame(cfg)?;
    let default_policy = DofPolicy::default();
    let screening = ScreeningConfig {
        cluster_threshold: cfg.get("cluster_threshold", 0.7)?,
        r2_threshold: cfg.get("r2_threshold", 0.9)?,
        priority: proposed_variables(),
        policy: DofPolicy {
            high_ratio: cfg.get("high_ratio", default_policy.high_ratio)?,
            spline_dof: cfg.get("spline_dof", default_policy.spline_dof)?,
        },
    };
    let seed = seed(cfg)?;
    let dir = out_dir(cfg)?;
    for (set, variables) in variable_sets(cfg)? {
        let (spec, report) = build_spec(&frame, &variables, &screening, seed).map_err(input_err(format!("{set} model")))?;
        let model = fit_spec(&spec, &frame).map_err(input_err(format!("{set} model")))?;
        write_bytes(&model_path(cfg, set, &tag), format!("{}\n", model.to_json()).as_bytes())?;
        write_json(
            &dir.join(format!("screening_{set}{tag}.json")),
            &json!({ "config_hash": cfg.hash(), "model": set, "filter": cfg.raw("where"), "report": report }),
        )?;
        write_csv_with(&dir.join(format!("budget_{set}{tag}.csv")), |w| write_budget_table(w, &report))?;
        println!(
            "{set}: {} instances (T={}, F={}), budget {}, {} variables using {} d.f., deviance {:.3}{}",
            frame.nrows(),
            report.true_count,
            report.false_count,
            report.budget,
            spec.variables.len(),
            spec.total_dof(),
            model.deviance,
            if model.separated { " [separation warning]" } else { "" }
        );
    }
    Ok(())
}

fn measure_json(m: &MeasureSummary) -> Value {
    json!({ "mean": m.mean, "sd": m.sd, "values": m.values })
}

fn spec_hash(spec: &ModelSpec) -> String {
    sha256_hex(serde_json::to_string(spec).expect("spec serializes").as_bytes())
}

/// Invitations grouped by change with their full-data scores.
fn grouped_scores(frame: &Frame, scores: &[f64]) -> Vec<Vec<Scored>> {
    let mut by_change: BTreeMap<&str, Vec<Scored>> = BTreeMap::new();
    for r in 0..frame.nrows() {
        let group = frame.groups.get(r).map(String::as_str).unwrap_or("");
        let reviewer = frame.members.get(r).cloned().unwrap_or_else(|| r.to_string());
        by_change.entry(group).or_default().push(Scored { reviewer, score: scores[r], responded: frame.outcome[r] });
    }
    by_change.into_values().collect()
}

fn model_evaluation(
    frame: &Frame,
    model: &FittedModel,
    report: &BootstrapReport,
    threshold: f64,
) -> Result<Value, Failure> {
    let scores = model.predict_frame(frame).map_err(input_err("score instances"))?;
    let groups = grouped_scores(frame, &scores);
    let topk: BTreeMap<String, f64> = TOP_K.iter().map(|&k| (k.to_string(), topk_accuracy(&groups, k))).collect();
    let npv = negative_predictive_value(&scores, &frame.outcome, threshold).ok();
    Ok(json!({
        "measures": {
            "auc": measure_json(&report.auc),
            "brier": measure_json(&report.brier),
            "precision": measure_json(&report.precision),
            "recall": measure_json(&report.recall),
            "f_measure": measure_json(&report.f_measure),
        },
        "iterations": report.iterations,
        "seed": report.seed,
        "threshold": report.threshold,
        "redraws": report.redraws,
        "spec_hash": spec_hash(&model.spec),
        "full_data": { "topk": topk, "npv": npv },
    }))
}

const MEASURES: [&str; 5] = ["auc", "brier", "precision", "recall", "f_measure"];

fn summary_of<'a>(r: &'a BootstrapReport, name: &str) -> &'a MeasureSummary {
    match name {
        "auc" => &r.auc,
        "brier" => &r.brier,
        "precision" => &r.precision,
        "recall" => &r.recall,
        _ => &r.f_measure,
    }
}

pub fn evaluate(cfg: &RunConfig) -> Result<(), Failure> {
    let (frame, tag) = load_frame(cfg)?;
    let boot = BootstrapConfig {
        iterations: cfg.get("iterations", 1000)?,
        seed: seed(cfg)?,
        threshold: cfg.get("threshold", 0.5)?,
    };
    let mut doc = serde_json::Map::new();
    doc.insert("config_hash".into(), json!(cfg.hash()));
    let mut reports: BTreeMap<&str, BootstrapReport> = BTreeMap::new();
    for (set, _) in variable_sets(cfg)? {
        let model = load_model(&model_path(cfg, set, &tag))?;
        let report = out_of_sample_bootstrap(&frame, &model.spec, &boot).map_err(input_err(format!("{set} bootstrap")))?;
        doc.insert(set.into(), model_evaluation(&frame, &model, &report, boot.threshold)?);
        println!(
            "{set}: AUC {:.3} ± {:.3}, Brier {:.3} ± {:.3}, F {:.3} over {} iterations",
            report.auc.mean, report.auc.sd, report.brier.mean, report.brier.sd, report.f_measure.mean, report.iterations
        );
        reports.insert(set, report);
    }
    let dir = out_dir(cfg)?;
    write_json(&dir.join(format!("evaluation{tag}.json")), &Value::Object(doc))?;

    write_csv_with(&dir.join(format!("comparison{tag}.csv")), |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["measure", "proposed", "baseline", "improvement"])?;
        for m in MEASURES {
            let p = reports.get("proposed").map(|r| summary_of(r, m).mean);
            let b = reports.get("baseline").map(|r| summary_of(r, m).mean);
            let cell = |v: Option<f64>| v.map_or_else(|| "absent".to_string(), |x| format!("{x:.6}"));
            let imp = match (p, b) {
                (Some(p), Some(b)) => improvement(p, b).map_or_else(|_| "undefined".to_string(), |x| format!("{x:.6}")),
                _ => "absent".to_string(),
            };
            out.write_record([m.to_string(), cell(p), cell(b), imp])?;
        }
        out.flush()?;
        Ok(())
    })?;

    write_csv_with(&dir.join(format!("signal{tag}.csv")), |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["variable", "cliffs_delta", "magnitude"])?;
        for name in METRIC_NAMES.iter().filter(|n| frame.index_of(n).is_some()) {
            let col = frame.column(name).expect("checked above");
            let (yes, no): (Vec<f64>, Vec<f64>) = {
                let mut yes = Vec::new();
                let mut no = Vec::new();
                for (v, &y) in col.iter().zip(&frame.outcome) {
                    if y { yes.push(*v) } else { no.push(*v) }
                }
                (yes, no)
            };
            let (delta, magnitude) = cliffs_delta(&yes, &no);
            out.write_record([name.to_string(), format!("{delta:.6}"), magnitude.to_string()])?;
        }
        out.flush()?;
        Ok(())
    })?;
    Ok(())
}

pub fn explain(cfg: &RunConfig) -> Result<(), Failure> {
    let (frame, tag) = load_frame(cfg)?;
    let set = match cfg.raw("variables") {
        Some("baseline") => "baseline",
        _ => "proposed",
    };
    let model = load_model(&model_path(cfg, set, &tag))?;
    let iterations = cfg.get("iterations", 1000)?;
    let grid_size = cfg.get("grid_size", 100)?;
    let wald = bootstrap_wald(&frame, &model.spec, iterations, seed(cfg)?).map_err(input_err("wald bootstrap"))?;
    let ranks = rank_report(&model, &wald, ScottKnottConfig::default()).map_err(input_err("ranking"))?;
    let mut odds = Vec::new();
    let mut effects = Vec::new();
    for v in model.spec.names() {
        odds.push(odds_ratio_iqr(&model, &frame, &v).map_err(input_err("odds ratio"))?);
        effects.push(partial_effect(&model, &frame, &v, grid_size).map_err(input_err("partial effect"))?);
    }
    println!("{set} model, {} bootstrap fits", iterations);
    println!("{:<24} {:>4} {:>12} {:>8} {:>11}", "variable", "rank", "mean chi2", "signif", "odds ratio");
    for e in &ranks.entries {
        let or = odds.iter().find(|o| o.variable == e.variable).map_or(1.0, |o| o.odds_ratio);
        let star = if e.significant { "***" } else { "" };
        println!("{:<24} {:>4} {:>12.2} {:>8} {:>11.3}", e.variable, e.rank, e.mean_chi2, star, or);
    }
    let dir = out_dir(cfg)?;
    write_json(
        &dir.join(format!("explain{tag}.json")),
        &json!({ "config_hash": cfg.hash(), "model": set, "ranks": ranks, "odds_ratios": odds }),
    )?;
    write_csv_with(&dir.join(format!("partial_effects{tag}.csv")), |w| write_partial_effects_csv(w, &effects))?;
    Ok(())
}

fn latest_instant(dataset: &Dataset) -> Option<Timestamp> {
    dataset
        .changes
        .iter()
        .flat_map(|c| {
            std::iter::once(c.created_at)
                .chain(c.closed_at)
                .chain(c.messages.iter().map(|m| m.timestamp))
                .chain(c.votes.iter().map(|v| v.timestamp))
        })
        .max()
}

fn as_of(cfg: &RunConfig, dataset: &Dataset) -> Result<Timestamp, Failure> {
    match cfg.raw("as_of") {
        Some(text) => parse_timestamp(text).ok_or_else(|| Failure::input(format!("invalid as_of timestamp {text:?}"))),
        None => Ok(latest_instant(dataset).map_or_else(chrono::Utc::now, |t| t + chrono::Duration::seconds(1))),
    }
}

pub fn describe(cfg: &RunConfig) -> Result<(), Failure> {
    let dataset = load(cfg)?;
    let bots = load_bots(cfg)?;
    let labels_path = cfg.out_dir().join("labels.csv");
    let labels = read_labels_csv(read_input(&labels_path)?.as_bytes()).map_err(input_err(labels_path.display()))?;
    let summary = unresponded_summary(&labels);
    let bin_width: f64 = cfg.get("bin_width", 1.0)?;
    if !(bin_width > 0.0) {
        return Err(Failure::input("bin_width must be positive"));
    }
    let (tau, bins) = match invited_vs_unresponded(&summary, bin_width) {
        Ok((t, b)) => (Some(t), b),
        Err(e) => {
            eprintln!("revsignal: Kendall tau not reported: {e}");
            (None, Vec::new())
        }
    };
    let index = load_index(cfg, &dataset, &bots)?;
    let as_of = as_of(cfg, &dataset)?;
    let rates = participation_rate_distribution(&index, as_of);
    let humans: Vec<_> = dataset.accounts.values().filter(|a| !bots.contains(&a.account_id)).cloned().collect();
    let orgs = org_diversity(&humans);

    let dir = out_dir(cfg)?;
    write_json(
        &dir.join("rq1_summary.json"),
        &json!({
            "config_hash": cfg.hash(),
            "changes": summary.changes,
            "changes_with_unresponded": summary.changes_with_unresponded,
            "proportion_with_unresponded": summary.proportion_with_unresponded,
            "median_unresponded_proportion": summary.median_unresponded_proportion,
            "changes_without_responders": summary.changes_without_responders,
            "kendall": tau,
            "participation_rate": {
                "as_of": as_of.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true),
                "reviewers": rates.reviewers.len(),
                "q1": rates.q1,
                "median": rates.median,
                "q3": rates.q3,
            },
            "organizations": orgs.len(),
        }),
    )?;
    write_csv_with(&dir.join("violin.csv"), |w| write_violin_csv(w, &summary))?;
    write_csv_with(&dir.join("hexbin.csv"), |w| write_hexbin_csv(w, &bins))?;
    write_csv_with(&dir.join("org.csv"), |w| write_org_csv(w, &orgs))?;
    write_csv_with(&dir.join("rates.csv"), |w| write_rates_csv(w, &rates))?;

    println!(
        "{} of {} changes ({:.1}%) have at least one invited reviewer who did not respond",
        summary.changes_with_unresponded,
        summary.changes,
        100.0 * summary.proportion_with_unresponded
    );
    println!("changes where nobody responded: {}", summary.changes_without_responders);
    if let Some(t) = &tau {
        println!("Kendall tau-b (invited vs unresponded): {:+.3} ({})", t.tau, t.magnitude);
    }
    println!(
        "participation rate over {} reviewers: median {:.3} (IQR {:.3}-{:.3})",
        rates.reviewers.len(),
        rates.median,
        rates.q1,
        rates.q3
    );
    Ok(())
}

pub fn recommend(cfg: &RunConfig, args: &RecommendArgs) -> Result<(), Failure> {
    let model = load_model(&cfg.path_or_out("model", "model_proposed.json"))?;
    let dataset = load(cfg)?;
    let bots = match fs::read_to_string(cfg.out_dir().join("bots.txt")) {
        Ok(text) => parse_bot_list(&text),
        Err(_) => BTreeSet::new(),
    };
    let index = load_index(cfg, &dataset, &bots)?;
    let t = as_of(cfg, &dataset)?;
    let ctx = PatchContext {
        change_id: "candidate-patch".into(),
        author: args.author.clone(),
        subsystem: args.subsystem.clone().unwrap_or_else(|| args.project.clone()),
        modules: args.modules.iter().map(|m| m.trim().to_string()).filter(|m| !m.is_empty()).collect(),
        patch_size: args.patch_size,
        created_at: t,
    };
    let mut scored = Vec::new();
    let mut cold = BTreeSet::new();
    for c in args.candidates.iter().map(|c| c.trim()).filter(|c| !c.is_empty()) {
        if !index.knows(c) {
            cold.insert(c.to_string());
        }
        let values = compute_instance(&ctx, c, false, &index).values();
        let p = model
            .predict(|name| METRIC_NAMES.iter().position(|m| *m == name).map(|i| values[i]))
            .map_err(input_err("model"))?;
        scored.push(Scored { reviewer: c.to_string(), score: p, responded: false });
    }
    if scored.is_empty() {
        return Err(Failure::input("no candidates given"));
    }
    rank_scored(&mut scored);
    println!("# estimated participation likelihood (not a guarantee)");
    println!("rank,reviewer,likelihood,status,cold_start");
    for (i, s) in scored.iter().enumerate() {
        let status = match args.min_prob {
            Some(cut) if s.score < cut => "likely unresponsive",
            _ => "recommended",
        };
        println!("{},{},{:.6},{},{}", i + 1, s.reviewer, s.score, status, cold.contains(&s.reviewer));
    }
    Ok(())
}

pub fn synth(cfg: &RunConfig, args: &SynthArgs) -> Result<(), Failure> {
    let data = generate(SynthConfig {
        changes: args.changes,
        developers: args.developers,
        seed: cfg.get("seed", SynthConfig::default().seed)?,
    });
    let target = match &args.output {
        Some(p) => p.clone(),
        None => out_dir(cfg)?.join("dataset.jsonl"),
    };
    write_dataset(&target, &data.dataset).map_err(internal_err("write dataset"))?;
    println!("wrote {} synthetic changes to {}", data.dataset.changes.len(), target.display());
    Ok(())
}
