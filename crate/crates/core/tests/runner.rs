use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use limers::recommenders::ModelKind;
use limers::runner::{self, ExperimentConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GENRES: [&str; 6] = ["Action", "Comedy", "Drama", "Horror", "Romance", "Sci-Fi"];

/// A small MovieLens-style directory: 12 users, 30 items, one item without genres.
fn write_toy_dataset(dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut movies = String::from("movieId,title,genres\n");
    for item in 1..=30 {
        let genres: Vec<&str> = if item == 30 {
            vec!["(no genres listed)"]
        } else {
            let mut g: Vec<&str> = GENRES.iter().copied().filter(|_| rng.random_bool(0.3)).collect();
            if g.is_empty() {
                g.push(GENRES[item % GENRES.len()]);
            }
            g
        };
        movies.push_str(&format!("{item},\"Movie {item}, The (2000)\",{}\n", genres.join("|")));
    }
    fs::write(dir.join("movies.csv"), movies).unwrap();

    let mut ratings = String::from("userId,movieId,rating,timestamp\n");
    for user in 1..=12 {
        let mut items: Vec<usize> = (1..=30).collect();
        for _ in 0..12 {
            // popular low ids more often
            let window = rng.random_range(8..=items.len());
            let pick = rng.random_range(0..window);
            let item = items.remove(pick);
            let rating = f64::from(rng.random_range(1..=10)) / 2.0;
            ratings.push_str(&format!("{user},{item},{rating},{}\n", 1_000_000 + user * 100 + item));
        }
    }
    fs::write(dir.join("ratings.csv"), ratings).unwrap();
}

fn toy_config(root: &Path, out: &str) -> ExperimentConfig {
    let data = root.join("toy");
    if !data.exists() {
        write_toy_dataset(&data);
    }
    let text = format!(
        r#"
output_dir = "{out}"
n_seeds = 3
cutoff = 5

[split]
ratio = 0.75
seed = 3

[[datasets]]
name = "Toy Set"
path = "{data}"
format = "movielens-csv"

[[models]]
kind = "random"

[[models]]
kind = "mostpop"

[[models]]
kind = "att-item-knn"
grid = {{ k = [5, 10], shrink = [0] }}

[[models]]
kind = "vsm"
grid = {{ aggregation = ["mean"], weighting = ["tfidf"] }}

[explainer]
samples = 150
"#,
        out = root.join(out).display(),
        data = data.display()
    );
    ExperimentConfig::from_toml(&text).unwrap()
}

fn read_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().is_some_and(|n| n != "manifest.txt"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn records(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (headers, rows)
}

#[test]
fn full_run_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = toy_config(tmp.path(), "out");
    let outcome = runner::run(&cfg).unwrap();
    assert!(outcome.manifest.errors.is_empty(), "{:?}", outcome.manifest.errors);

    let out = &cfg.output_dir;
    for name in [
        "config.resolved.toml",
        "manifest.txt",
        "preprocess_toy-set.csv",
        "grid_toy-set_att-item-knn.csv",
        "table1.csv",
        "table1.txt",
        "table4.csv",
        "table4.txt",
        "stability_report.csv",
        "table2.txt",
        "table3.txt",
        "explanations_toy-set_vsm.csv",
        "max_frequencies_toy-set_att-item-knn.csv",
    ] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    for a in &outcome.manifest.artifacts {
        assert!(out.join(a).is_file(), "artifact {} missing", a.display());
    }

    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    for key in [
        "mode=run",
        "root_seed=0",
        "split_seed=3",
        "explanation_seeds=[0, 1, 2]",
        "cell.toy-set.vsm.params=",
    ] {
        assert!(manifest.contains(key), "manifest lacks {key}");
    }
    assert!(manifest.lines().all(|l| l.contains('=')));

    let resolved = ExperimentConfig::from_toml(&fs::read_to_string(out.join("config.resolved.toml")).unwrap()).unwrap();
    assert_eq!(resolved, cfg);

    let (_, t1) = records(&out.join("table1.csv"));
    assert_eq!(t1.len(), 2);
    let train = &outcome.reports.datasets[0].train;
    assert_eq!(t1[1][1], "train");
    assert_eq!(t1[1][5].parse::<f64>().unwrap(), train.sparsity);
    assert_eq!(
        train.sparsity,
        1.0 - train.transactions as f64 / (train.users as f64 * train.items as f64)
    );

    let (headers, t4) = records(&out.join("table4.csv"));
    assert_eq!(headers[..4], ["dataset", "model", "params", "ndcg"]);
    assert_eq!(t4.len(), 4);
    for (row, cell) in t4.iter().zip(&outcome.reports.ranking) {
        assert_eq!(row[3].parse::<f64>().unwrap(), cell.report.unwrap().ndcg);
    }

    let (headers, stab) = records(&out.join("stability_report.csv"));
    assert_eq!(stab.len(), 2);
    let mu_1 = headers.iter().position(|h| h == "mu_1").unwrap();
    for (row, cell) in stab.iter().zip(&outcome.reports.stability) {
        let r = cell.report.as_ref().unwrap();
        assert_eq!(row[mu_1].parse::<f64>().unwrap(), r.mu[0]);
        assert!(r.adherence.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.mu.iter().chain(&r.adherence).all(|v| (0.0..=1.0).contains(v)));
    }

    let (headers, expl) = records(&out.join("explanations_toy-set_vsm.csv"));
    assert_eq!(headers, ["user_id", "item_id", "seed", "rank", "genre", "weight"]);
    assert!(!expl.is_empty());
    assert!(expl.iter().all(|r| GENRES.contains(&r[4].as_str())));

    let t2 = fs::read_to_string(out.join("table2.txt")).unwrap();
    assert!(t2.lines().nth(2).unwrap().starts_with("Toy Set"));
}

#[test]
fn reruns_and_worker_counts_give_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = toy_config(tmp.path(), "a");
    let mut b = toy_config(tmp.path(), "b");
    b.workers = Some(1);
    let mut c = toy_config(tmp.path(), "c");
    c.workers = Some(3);
    runner::run(&a).unwrap();
    runner::run(&b).unwrap();
    runner::run(&c).unwrap();
    let (oa, ob, oc) = (
        read_outputs(&a.output_dir),
        read_outputs(&b.output_dir),
        read_outputs(&c.output_dir),
    );
    assert_eq!(oa.keys().collect::<Vec<_>>(), ob.keys().collect::<Vec<_>>());
    for (name, bytes) in &oa {
        if name == "config.resolved.toml" {
            continue;
        }
        assert_eq!(Some(bytes), ob.get(name), "{name} differs with workers=1");
        assert_eq!(Some(bytes), oc.get(name), "{name} differs with workers=3");
    }
}

#[test]
fn a_single_seed_is_perfectly_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = toy_config(tmp.path(), "out");
    cfg.n_seeds = 1;
    let outcome = runner::run(&cfg).unwrap();
    for cell in &outcome.reports.stability {
        let r = cell.report.as_ref().unwrap();
        assert_eq!(r.n, 1);
        assert_eq!(r.mu, [1.0; 5], "{}", r.model);
    }
}

#[test]
fn root_seed_moves_the_explanation_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = toy_config(tmp.path(), "out");
    cfg.root_seed = 40;
    let outcome = runner::run(&cfg).unwrap();
    assert_eq!(outcome.manifest.get("explanation_seeds"), Some("[40, 41, 42]"));
    assert_eq!(outcome.manifest.get("split_seed"), Some("3"));
    let (_, expl) = records(&cfg.output_dir.join("explanations_toy-set_att-item-knn.csv"));
    assert!(expl.iter().all(|r| ["40", "41", "42"].contains(&r[2].as_str())));
}

#[test]
fn eval_only_skips_explanations() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = toy_config(tmp.path(), "out");
    let outcome = runner::eval_only(&cfg).unwrap();
    assert_eq!(outcome.reports.ranking.len(), 4);
    assert!(outcome.reports.stability.is_empty());
    assert_eq!(outcome.manifest.get("mode"), Some("eval-only"));
    assert!(cfg.output_dir.join("table4.csv").is_file());
    assert!(!cfg.output_dir.join("explanations_toy-set_vsm.csv").exists());
    let (_, stab) = records(&cfg.output_dir.join("stability_report.csv"));
    assert!(stab.is_empty());
}

#[test]
fn explain_pair_matches_the_full_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = toy_config(tmp.path(), "out");
    runner::run(&cfg).unwrap();
    let (headers, rows) = records(&cfg.output_dir.join("explanations_toy-set_att-item-knn.csv"));
    let (user, item): (u64, u64) = (rows[0][0].parse().unwrap(), rows[0][1].parse().unwrap());
    let expected: Vec<&Vec<String>> = rows.iter().filter(|r| r[0] == rows[0][0]).collect();

    let pair = runner::explain_pair(&cfg, Some("toy-set"), user, item, ModelKind::AttItemKnn, None).unwrap();
    assert_eq!(pair.ensemble.n(), 3);
    let text = pair.to_csv().unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), headers);
    let got: Vec<Vec<String>> = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    assert_eq!(got.iter().collect::<Vec<_>>(), expected);
}

#[test]
fn explain_pair_rejects_unknown_ids_and_datasets() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = toy_config(tmp.path(), "out");
    let params = Some("k=5,shrink=0".parse().unwrap());
    assert!(runner::explain_pair(&cfg, None, 999, 1, ModelKind::AttItemKnn, params.clone()).is_err());
    assert!(runner::explain_pair(&cfg, None, 1, 30, ModelKind::AttItemKnn, params.clone()).is_err());
    assert!(runner::explain_pair(&cfg, Some("nope"), 1, 1, ModelKind::AttItemKnn, params).is_err());
}

#[test]
fn missing_dataset_directory_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = toy_config(tmp.path(), "out");
    cfg.datasets[0].path = tmp.path().join("absent");
    let err = runner::run(&cfg).unwrap_err();
    assert!(err.to_string().contains("does not exist"), "{err}");
}

#[test]
fn load_resolves_relative_paths_against_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    write_toy_dataset(&tmp.path().join("data/toy"));
    let conf = tmp.path().join("conf");
    fs::create_dir_all(&conf).unwrap();
    let file = conf.join("exp.toml");
    fs::write(
        &file,
        "output_dir = \"../out\"\ndata_root = \"../data\"\n[[datasets]]\nname = \"Toy\"\npath = \"toy\"\nformat = \"movielens-csv\"\n",
    )
    .unwrap();
    if std::env::var_os(runner::DATA_ROOT_ENV).is_none() {
        let cfg = ExperimentConfig::load(&file).unwrap();
        assert_eq!(cfg.datasets[0].path, conf.join("../data/toy"));
        assert_eq!(cfg.output_dir, conf.join("../out"));
        cfg.validate().unwrap();
    }
}
