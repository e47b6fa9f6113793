//! Configuration-driven pipeline: load, split, tune, rank, explain, measure,
//! and write every table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use crate::data::{
    dataset_stats, load_dataset, popularity_distribution, split, DatasetStats, InteractionDataset, ItemFeatureCatalog,
    PreprocessReport,
};
use crate::explainer::{ExplainerConfig, ExplanationEnsemble, Instance, LimeRs};
use crate::ranking_eval::{grid_search, rank_metrics, EvalReport, GridTrial};
use crate::recommenders::{recommend_all, train, HyperParams, ModelKind, Recommender};
use crate::stability::{per_user_max_frequencies, stability_report, StabilityReport, MAX_POSITION};
use crate::table::{exact, fixed4, Table};
use crate::{Error, Result};

mod config;

pub use config::{DatasetSpec, ExperimentConfig, ExplainerSection, GridValue, ModelSpec, SplitConfig, DATA_ROOT_ENV};

/// Counts of one dataset before and after the split.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSummary {
    pub name: String,
    pub preprocess: PreprocessReport,
    /// The whole filtered dataset.
    pub full: DatasetStats,
    /// The training view every model is fitted on.
    pub train: DatasetStats,
    pub test_transactions: usize,
    pub dropped_test_transactions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingCell {
    pub dataset: String,
    pub model: ModelKind,
    pub params: Option<HyperParams>,
    pub report: Option<EvalReport<f64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCell {
    pub dataset: String,
    pub model: ModelKind,
    pub report: Option<StabilityReport<f64>>,
    /// Users left out of `U` because no candidate could be recommended.
    pub users_without_recommendation: usize,
    pub error: Option<String>,
}

/// Everything the tables are rendered from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Reports {
    pub datasets: Vec<DatasetSummary>,
    pub ranking: Vec<RankingCell>,
    pub stability: Vec<StabilityCell>,
}

/// `key=value` record of a run, written as `manifest.txt`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    pub entries: Vec<(String, String)>,
    /// Output files, relative to the output directory.
    pub artifacts: Vec<PathBuf>,
    /// Failed cells as (cell, message).
    pub errors: Vec<(String, String)>,
}

impl RunManifest {
    fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={}", v.replace('\n', " "));
        }
        for (i, a) in self.artifacts.iter().enumerate() {
            let _ = writeln!(out, "artifact.{i}={}", a.display());
        }
        for (cell, msg) in &self.errors {
            let _ = writeln!(out, "error.{cell}={}", msg.replace('\n', " "));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub reports: Reports,
}

/// A dataset after loading, splitting and (optionally) restricting.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub name: String,
    pub train: InteractionDataset,
    pub test: InteractionDataset,
    pub catalog: ItemFeatureCatalog,
    pub summary: DatasetSummary,
}

pub fn prepare(spec: &DatasetSpec, cfg: &ExperimentConfig) -> Result<PreparedDataset> {
    let loaded = load_dataset(&spec.path, &spec.dataset_format()?)?;
    let full = dataset_stats(&loaded.dataset)?;
    let s = split(&loaded.dataset, cfg.split.ratio, cfg.split_seed())?;
    let (train, test, catalog, dropped) = if cfg.restrict_to_train_items {
        let r = s.restrict_to_train_items(&loaded.catalog)?;
        (r.split.train, r.split.test, r.catalog, r.dropped_test_transactions)
    } else {
        (s.train, s.test, loaded.catalog, 0)
    };
    let summary = DatasetSummary {
        name: spec.name.clone(),
        preprocess: loaded.report,
        full,
        train: dataset_stats(&train)?,
        test_transactions: test.transactions().len(),
        dropped_test_transactions: dropped,
    };
    Ok(PreparedDataset {
        name: spec.name.clone(),
        train,
        test,
        catalog,
        summary,
    })
}

fn with_pool<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}"))),
    }
}

/// Full pipeline: rankings for every model and stability for `explain_models`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    execute(cfg, true)
}

/// Loading, tuning and ranking only; no explanations.
pub fn eval_only(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    execute(cfg, false)
}

fn millis(t: Instant) -> u128 {
    t.elapsed().as_millis()
}

fn execute(cfg: &ExperimentConfig, explain: bool) -> Result<RunOutcome> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    with_pool(cfg.workers, || execute_in_pool(cfg, explain))?
}

fn execute_in_pool(cfg: &ExperimentConfig, explain: bool) -> Result<RunOutcome> {
    let started = Instant::now();
    let out = &cfg.output_dir;
    let metric = cfg.metric()?;
    let explainer = cfg.explainer.to_config()?;
    let mut manifest = RunManifest::default();
    let mut reports = Reports::default();
    let mut artifacts = Vec::new();

    manifest.set("mode", if explain { "run" } else { "eval-only" });
    manifest.set("root_seed", cfg.root_seed);
    manifest.set("split_seed", cfg.split_seed());
    manifest.set("explanation_seeds", format!("{:?}", cfg.explanation_seeds()));
    manifest.set("workers", rayon::current_num_threads());
    manifest.set("config", "config.resolved.toml");
    write_file(&out.join("config.resolved.toml"), &cfg.to_toml()?)?;
    artifacts.push(PathBuf::from("config.resolved.toml"));

    for spec in &cfg.datasets {
        let slug = spec.slug();
        let t = Instant::now();
        info!("loading {} from {}", spec.name, spec.path.display());
        let prep = match prepare(spec, cfg) {
            Ok(p) => p,
            Err(e) => {
                warn!("dataset {} failed: {e}", spec.name);
                manifest.errors.push((slug.clone(), e.to_string()));
                for m in &cfg.models {
                    reports.ranking.push(RankingCell {
                        dataset: spec.name.clone(),
                        model: m.kind,
                        params: None,
                        report: None,
                        error: Some(e.to_string()),
                    });
                }
                continue;
            }
        };
        manifest.set(format!("timing.{slug}.load_split_ms"), millis(t));
        manifest.set(format!("dataset.{slug}.path"), spec.path.display());
        manifest.set(format!("dataset.{slug}.format"), &spec.format);
        for (k, v) in prep.summary.preprocess.rows() {
            manifest.set(format!("dataset.{slug}.preprocess.{k}"), v);
        }
        manifest.set(
            format!("dataset.{slug}.train_transactions"),
            prep.summary.train.transactions,
        );
        manifest.set(
            format!("dataset.{slug}.test_transactions"),
            prep.summary.test_transactions,
        );
        manifest.set(
            format!("dataset.{slug}.dropped_test_transactions"),
            prep.summary.dropped_test_transactions,
        );
        let name = format!("preprocess_{slug}.csv");
        prep.summary.preprocess.write_csv(&out.join(&name))?;
        artifacts.push(PathBuf::from(name));

        for model_spec in &cfg.models {
            let kind = model_spec.kind;
            let cell = format!("{slug}.{}", kind.as_str());
            let t = Instant::now();
            let grid = model_spec.expanded_grid();
            let search = grid_search::<f64>(
                kind,
                &prep.train,
                &prep.catalog,
                &prep.test,
                &grid,
                metric,
                cfg.cutoff,
                cfg.root_seed,
            );
            let name = format!("grid_{cell_file}.csv", cell_file = cell.replace('.', "_"));
            let trials = match &search {
                Ok(s) => s.trials.clone(),
                Err(_) => Vec::new(),
            };
            write_file(&out.join(&name), &grid_table(&trials).to_csv()?)?;
            artifacts.push(PathBuf::from(name));
            manifest.set(format!("timing.{cell}.grid_ms"), millis(t));

            let ranked = search.and_then(|s| {
                let model = train::<f64>(kind, &prep.train, &prep.catalog, &s.best, cfg.root_seed)?;
                let lists = recommend_all(&model, cfg.cutoff)?;
                let report = rank_metrics(&lists, &prep.test, cfg.cutoff)?;
                Ok((s.best, model, lists, report))
            });
            let (model, lists) = match ranked {
                Ok((params, model, lists, report)) => {
                    info!(
                        "{} {}: {metric}@{} = {:.4} [{params}]",
                        spec.name,
                        kind.label(),
                        cfg.cutoff,
                        metric.value(&report)
                    );
                    manifest.set(format!("cell.{cell}.params"), &params);
                    reports.ranking.push(RankingCell {
                        dataset: spec.name.clone(),
                        model: kind,
                        params: Some(params),
                        report: Some(report),
                        error: None,
                    });
                    (model, lists)
                }
                Err(e) => {
                    warn!("{} {} failed: {e}", spec.name, kind.label());
                    manifest.errors.push((cell.clone(), e.to_string()));
                    reports.ranking.push(RankingCell {
                        dataset: spec.name.clone(),
                        model: kind,
                        params: None,
                        report: None,
                        error: Some(e.to_string()),
                    });
                    if explain && cfg.explain_models.contains(&kind) {
                        reports.stability.push(failed_stability(&spec.name, kind, &e));
                    }
                    continue;
                }
            };

            if !(explain && cfg.explain_models.contains(&kind)) {
                continue;
            }
            let t = Instant::now();
            let firsts: Vec<Instance> = lists
                .iter()
                .filter_map(|l| l.first().map(|item| Instance { user: l.user, item }))
                .take(cfg.max_explained_users.unwrap_or(usize::MAX))
                .collect();
            let without = lists.iter().filter(|l| l.first().is_none()).count();
            manifest.set(format!("cell.{cell}.users_without_recommendation"), without);
            match explain_users(&prep, &model, &firsts, &explainer, &cfg.explanation_seeds()) {
                Ok(ensembles) => {
                    let written = stability_artifacts(&prep, &ensembles, out, &cell.replace('.', "_"));
                    let report = written.and_then(|files| {
                        artifacts.extend(files);
                        stability_report::<f64, f64>(kind.label(), &spec.name, &ensembles, &prep.catalog)
                    });
                    let low_variance = ensembles
                        .iter()
                        .flat_map(|e| e.explanations())
                        .filter(|e| e.low_variance)
                        .count();
                    manifest.set(format!("cell.{cell}.low_variance_explanations"), low_variance);
                    match report {
                        Ok(r) => {
                            info!(
                                "{} {}: mu_1 = {:.4}, adherence_1 = {:.4}",
                                spec.name,
                                kind.label(),
                                r.mu[0],
                                r.adherence[0]
                            );
                            reports.stability.push(StabilityCell {
                                dataset: spec.name.clone(),
                                model: kind,
                                report: Some(r),
                                users_without_recommendation: without,
                                error: None,
                            });
                        }
                        Err(e) => {
                            manifest.errors.push((cell.clone(), e.to_string()));
                            reports.stability.push(failed_stability(&spec.name, kind, &e));
                        }
                    }
                }
                Err(e) => {
                    warn!("{} {} explanations failed: {e}", spec.name, kind.label());
                    manifest.errors.push((cell.clone(), e.to_string()));
                    reports.stability.push(failed_stability(&spec.name, kind, &e));
                }
            }
            manifest.set(format!("timing.{cell}.explain_ms"), millis(t));
        }
        reports.datasets.push(prep.summary);
    }

    artifacts.extend(render_tables(&reports, out)?);
    manifest.set("timing.total_ms", millis(started));
    manifest.artifacts = artifacts;
    manifest.artifacts.push(PathBuf::from("manifest.txt"));
    write_file(&out.join("manifest.txt"), &manifest.render())?;
    Ok(RunOutcome { manifest, reports })
}

fn failed_stability(dataset: &str, model: ModelKind, e: &Error) -> StabilityCell {
    StabilityCell {
        dataset: dataset.to_string(),
        model,
        report: None,
        users_without_recommendation: 0,
        error: Some(e.to_string()),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// One ensemble per instance, users in parallel, order preserved.
pub fn explain_users(
    prep: &PreparedDataset,
    model: &Recommender<f64>,
    instances: &[Instance],
    cfg: &ExplainerConfig<f64>,
    seeds: &[u64],
) -> Result<Vec<ExplanationEnsemble<f64>>> {
    let pop = popularity_distribution::<f64>(&prep.train)?;
    let lime = LimeRs::new(model, &prep.catalog, &pop, *cfg)?;
    instances.par_iter().map(|&x| lime.explain_ensemble(x, seeds)).collect()
}

fn stability_artifacts(
    prep: &PreparedDataset,
    ensembles: &[ExplanationEnsemble<f64>],
    out: &Path,
    cell: &str,
) -> Result<Vec<PathBuf>> {
    let explanations = format!("explanations_{cell}.csv");
    write_file(
        &out.join(&explanations),
        &explanation_table(ensembles, &prep.train, &prep.catalog).to_csv()?,
    )?;
    let maxima = format!("max_frequencies_{cell}.csv");
    let mut t = Table::new(&["user_id", "item_id", "k", "max_frequency"]);
    for k in 1..=MAX_POSITION {
        let per_user = if ensembles.is_empty() {
            Vec::new()
        } else {
            per_user_max_frequencies::<f64, f64>(ensembles, k)?
        };
        for (ens, f) in ensembles.iter().zip(per_user) {
            let x = ens.instance();
            t.push(vec![
                Some(prep.train.user_ids()[x.user].to_string()),
                Some(prep.train.item_ids()[x.item].to_string()),
                Some(k.to_string()),
                Some(exact(f)),
            ]);
        }
    }
    write_file(&out.join(&maxima), &t.to_csv()?)?;
    Ok(vec![PathBuf::from(explanations), PathBuf::from(maxima)])
}

/// `user_id, item_id, seed, rank, genre, weight` rows with external ids.
pub fn explanation_csv(
    ensembles: &[ExplanationEnsemble<f64>],
    train: &InteractionDataset,
    catalog: &ItemFeatureCatalog,
) -> Result<String> {
    explanation_table(ensembles, train, catalog).to_csv()
}

fn explanation_table(
    ensembles: &[ExplanationEnsemble<f64>],
    train: &InteractionDataset,
    catalog: &ItemFeatureCatalog,
) -> Table {
    let mut t = Table::new(&["user_id", "item_id", "seed", "rank", "genre", "weight"]);
    for ens in ensembles {
        let x = ens.instance();
        for e in ens.explanations() {
            for (rank, &(f, w)) in e.pairs().iter().enumerate() {
                t.push(vec![
                    Some(train.user_ids()[x.user].to_string()),
                    Some(train.item_ids()[x.item].to_string()),
                    Some(e.seed.to_string()),
                    Some((rank + 1).to_string()),
                    Some(catalog.feature_name(f).to_string()),
                    Some(exact(w)),
                ]);
            }
        }
    }
    t
}

fn grid_table(trials: &[GridTrial<f64>]) -> Table {
    let mut t = Table::new(&[
        "params",
        "ndcg",
        "recall",
        "hit_rate",
        "precision",
        "map",
        "mrr",
        "error",
    ]);
    for trial in trials {
        let mut row = vec![Some(trial.params.to_string())];
        match &trial.outcome {
            Ok(r) => {
                row.extend(metric_values(r).into_iter().map(|v| Some(exact(v))));
                row.push(Some(String::new()));
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(None, 6));
                row.push(Some(e.clone()));
            }
        }
        t.push(row);
    }
    t
}

fn metric_values(r: &EvalReport<f64>) -> [f64; 6] {
    [r.ndcg, r.recall, r.hit_rate, r.precision, r.map, r.mrr]
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> Option<String> {
    v.map(f)
}

/// Writes the dataset, ranking and stability tables as CSV (full precision)
/// and aligned text (4 decimals). Returns the file names written.
pub fn render_tables(reports: &Reports, out: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let mut emit = |stem: &str, csv: &Table, text: &Table| -> Result<()> {
        csv.write(Some(&out.join(format!("{stem}.csv"))), None)?;
        text.write(None, Some(&out.join(format!("{stem}.txt"))))?;
        files.push(PathBuf::from(format!("{stem}.csv")));
        files.push(PathBuf::from(format!("{stem}.txt")));
        Ok(())
    };

    let headers = ["dataset", "view", "users", "items", "transactions", "sparsity"];
    let (mut csv, mut text) = (Table::new(&headers), Table::new(&headers));
    for d in &reports.datasets {
        for (view, s) in [("full", &d.full), ("train", &d.train)] {
            let base = vec![
                Some(d.name.clone()),
                Some(view.to_string()),
                Some(s.users.to_string()),
                Some(s.items.to_string()),
                Some(s.transactions.to_string()),
            ];
            csv.push([base.clone(), vec![Some(exact(s.sparsity))]].concat());
            text.push([base, vec![Some(fixed4(s.sparsity))]].concat());
        }
    }
    emit("table1", &csv, &text)?;

    let headers = [
        "dataset",
        "model",
        "params",
        "ndcg",
        "recall",
        "hit_rate",
        "precision",
        "map",
        "mrr",
        "users",
    ];
    let (mut csv, mut text) = (Table::new(&headers), Table::new(&headers));
    for c in &reports.ranking {
        let base = vec![
            Some(c.dataset.clone()),
            Some(c.model.label().to_string()),
            c.params.as_ref().map(|p| p.to_string()),
        ];
        let values = c.report.as_ref().map(metric_values);
        let users = opt(c.report.as_ref(), |r| r.users_evaluated.to_string());
        let cells = |f: fn(f64) -> String| -> Vec<Option<String>> { (0..6).map(|i| values.map(|v| f(v[i]))).collect() };
        csv.push([base.clone(), cells(exact), vec![users.clone()]].concat());
        text.push([base, cells(fixed4), vec![users]].concat());
    }
    emit("table4", &csv, &text)?;

    let mut headers = vec!["dataset", "model", "n", "users"];
    let mu_names: Vec<String> = (1..=5).map(|k| format!("mu_{k}")).collect();
    let adh_names: Vec<String> = (1..=3).map(|k| format!("adherence_{k}")).collect();
    let skip_names: Vec<String> = (1..=5).map(|k| format!("skipped_{k}")).collect();
    headers.extend(mu_names.iter().map(String::as_str));
    headers.extend(adh_names.iter().map(String::as_str));
    headers.extend(skip_names.iter().map(String::as_str));
    headers.push("users_without_recommendation");
    let mut csv = Table::new(&headers);
    let mut t2 = Table::new(
        &[
            &["dataset", "model"][..],
            &mu_names.iter().map(String::as_str).collect::<Vec<_>>(),
        ]
        .concat(),
    );
    let mut t3 = Table::new(
        &[
            &["dataset", "model"][..],
            &adh_names.iter().map(String::as_str).collect::<Vec<_>>(),
        ]
        .concat(),
    );
    for c in &reports.stability {
        let r = c.report.as_ref();
        let base = vec![Some(c.dataset.clone()), Some(c.model.label().to_string())];
        let mu = |f: fn(f64) -> String| -> Vec<Option<String>> { (0..5).map(|k| r.map(|r| f(r.mu[k]))).collect() };
        let adh =
            |f: fn(f64) -> String| -> Vec<Option<String>> { (0..3).map(|k| r.map(|r| f(r.adherence[k]))).collect() };
        let skipped: Vec<Option<String>> = (0..5).map(|k| r.map(|r| r.skipped[k].to_string())).collect();
        csv.push(
            [
                base.clone(),
                vec![opt(r, |r| r.n.to_string()), opt(r, |r| r.users.to_string())],
                mu(exact),
                adh(exact),
                skipped,
                vec![r.map(|_| c.users_without_recommendation.to_string())],
            ]
            .concat(),
        );
        t2.push([base.clone(), mu(fixed4)].concat());
        t3.push([base, adh(fixed4)].concat());
    }
    csv.write(Some(&out.join("stability_report.csv")), None)?;
    files.push(PathBuf::from("stability_report.csv"));
    t2.write(None, Some(&out.join("table2.txt")))?;
    t3.write(None, Some(&out.join("table3.txt")))?;
    files.push(PathBuf::from("table2.txt"));
    files.push(PathBuf::from("table3.txt"));
    Ok(files)
}

/// Explanations of one (user, item) pair under every configured seed.
#[derive(Debug, Clone)]
pub struct PairExplanation {
    pub dataset: PreparedDataset,
    pub params: HyperParams,
    pub ensemble: ExplanationEnsemble<f64>,
}

impl PairExplanation {
    pub fn to_csv(&self) -> Result<String> {
        explanation_csv(
            std::slice::from_ref(&self.ensemble),
            &self.dataset.train,
            &self.dataset.catalog,
        )
    }
}

/// Explains one pair given by external ids. Without `params` the model is
/// tuned over its configured grid first.
pub fn explain_pair(
    cfg: &ExperimentConfig,
    dataset: Option<&str>,
    user_id: u64,
    item_id: u64,
    kind: ModelKind,
    params: Option<HyperParams>,
) -> Result<PairExplanation> {
    cfg.validate()?;
    with_pool(cfg.workers, || {
        let spec = match dataset {
            None => &cfg.datasets[0],
            Some(name) => cfg
                .datasets
                .iter()
                .find(|d| d.name == name || d.slug() == name)
                .ok_or_else(|| Error::Config(format!("no dataset named `{name}`")))?,
        };
        let prep = prepare(spec, cfg)?;
        let user = prep
            .train
            .user_index(user_id)
            .ok_or_else(|| Error::InvalidArgument(format!("user {user_id} is not in the training data")))?;
        let item = prep
            .train
            .item_index(item_id)
            .ok_or_else(|| Error::InvalidArgument(format!("item {item_id} is not in the training data")))?;
        let params = match params {
            Some(p) => p,
            None => {
                let grid = cfg
                    .models
                    .iter()
                    .find(|m| m.kind == kind)
                    .map_or_else(|| kind.default_grid(), |m| m.expanded_grid());
                grid_search::<f64>(
                    kind,
                    &prep.train,
                    &prep.catalog,
                    &prep.test,
                    &grid,
                    cfg.metric()?,
                    cfg.cutoff,
                    cfg.root_seed,
                )?
                .best
            }
        };
        let model = train::<f64>(kind, &prep.train, &prep.catalog, &params, cfg.root_seed)?;
        let ensemble = explain_users(
            &prep,
            &model,
            &[Instance { user, item }],
            &cfg.explainer.to_config()?,
            &cfg.explanation_seeds(),
        )?
        .pop()
        .ok_or_else(|| Error::Invariant("no ensemble produced".into()))?;
        Ok(PairExplanation {
            dataset: prep,
            params,
            ensemble,
        })
    })?
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(users: usize) -> DatasetStats {
        DatasetStats {
            users,
            items: 4,
            transactions: 6,
            sparsity: 1.0 - 6.0 / (users as f64 * 4.0),
        }
    }

    #[test]
    fn empty_reports_give_header_only_csvs() {
        let dir = tempfile::tempdir().unwrap();
        let files = render_tables(&Reports::default(), dir.path()).unwrap();
        for f in files.iter().filter(|f| f.extension().is_some_and(|e| e == "csv")) {
            let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
            assert_eq!(text.lines().count(), 1, "{}", f.display());
        }
    }

    #[test]
    fn one_cell_gives_one_row_and_missing_cells_are_marked() {
        let dir = tempfile::tempdir().unwrap();
        let reports = Reports {
            datasets: vec![DatasetSummary {
                name: "toy".into(),
                preprocess: PreprocessReport::default(),
                full: stats(3),
                train: stats(3),
                test_transactions: 0,
                dropped_test_transactions: 0,
            }],
            ranking: vec![RankingCell {
                dataset: "toy".into(),
                model: ModelKind::Vsm,
                params: None,
                report: None,
                error: Some("boom".into()),
            }],
            stability: vec![],
        };
        render_tables(&reports, dir.path()).unwrap();
        let t4 = std::fs::read_to_string(dir.path().join("table4.csv")).unwrap();
        assert_eq!(t4.lines().count(), 2);
        assert!(t4.lines().nth(1).unwrap().contains("—"));
        let t1 = std::fs::read_to_string(dir.path().join("table1.csv")).unwrap();
        let row: Vec<&str> = t1.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[5].parse::<f64>().unwrap(), stats(3).sparsity);
        let t1 = std::fs::read_to_string(dir.path().join("table1.txt")).unwrap();
        assert!(t1.contains("0.5000"));
    }

    #[test]
    fn manifest_renders_key_values() {
        let mut m = RunManifest::default();
        m.set("a", 1);
        m.set("cell.x.params", "k=10,shrink=0");
        m.artifacts.push(PathBuf::from("t.csv"));
        m.errors.push(("x".into(), "bad\nthing".into()));
        assert_eq!(
            m.render(),
            "a=1\ncell.x.params=k=10,shrink=0\nartifact.0=t.csv\nerror.x=bad thing\n"
        );
        assert_eq!(m.get("cell.x.params"), Some("k=10,shrink=0"));
    }
}
