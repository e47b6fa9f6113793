use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Interaction, InteractionDataset, ItemFeatureCatalog};
use crate::{Error, Result};

const NO_GENRE: &str = "(no genres listed)";

/// Column map for Yahoo!-style tab-separated rating and content files.
///
/// Columns are zero-based. The defaults follow the R4 release: ratings as
/// `user, movie, rating(1-13), rating(1-5)` and the movie content file with
/// `|`-separated genres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct YahooColumns {
    pub ratings_file: String,
    pub items_file: String,
    pub user_col: usize,
    pub item_col: usize,
    pub rating_col: usize,
    pub timestamp_col: Option<usize>,
    pub item_id_col: usize,
    pub genres_col: usize,
    pub genre_separator: String,
    pub has_header: bool,
    pub rating_min: f64,
    pub rating_max: f64,
}

impl Default for YahooColumns {
    fn default() -> Self {
        Self {
            ratings_file: "ydata-ymovies-user-movie-ratings-train-v1_0.txt".into(),
            items_file: "ydata-ymovies-movie-content-descr-v1_0.txt".into(),
            user_col: 0,
            item_col: 1,
            rating_col: 3,
            timestamp_col: None,
            item_id_col: 0,
            genres_col: 8,
            genre_separator: "|".into(),
            has_header: false,
            rating_min: 1.0,
            rating_max: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetFormat {
    /// `ratings.dat` (`user::item::rating::ts`) and `movies.dat` (`id::title::genres`).
    MovielensDat,
    /// `ratings.csv` and `movies.csv` with headers.
    MovielensCsv,
    YahooTsv(YahooColumns),
}

impl DatasetFormat {
    pub fn parse(name: &str, yahoo: Option<YahooColumns>) -> Result<Self> {
        match name {
            "movielens-dat" => Ok(Self::MovielensDat),
            "movielens-csv" => Ok(Self::MovielensCsv),
            "yahoo-tsv" => Ok(Self::YahooTsv(yahoo.unwrap_or_default())),
            other => Err(Error::Config(format!("unknown dataset format `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::MovielensDat => "movielens-dat",
            Self::MovielensCsv => "movielens-csv",
            Self::YahooTsv(_) => "yahoo-tsv",
        }
    }

    pub fn rating_scale(&self) -> (f64, f64) {
        match self {
            Self::MovielensDat | Self::MovielensCsv => (0.5, 5.0),
            Self::YahooTsv(cols) => (cols.rating_min, cols.rating_max),
        }
    }
}

/// What preprocessing kept and dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PreprocessReport {
    pub raw_ratings: usize,
    pub raw_items: usize,
    pub items_without_genres: usize,
    pub rated_items_dropped: usize,
    pub ratings_dropped_no_genre: usize,
    pub ratings_dropped_unknown_item: usize,
    pub duplicate_ratings: usize,
    pub users: usize,
    pub items: usize,
    pub transactions: usize,
}

impl PreprocessReport {
    pub fn rows(&self) -> Vec<(&'static str, usize)> {
        vec![
            ("raw_ratings", self.raw_ratings),
            ("raw_items", self.raw_items),
            ("items_without_genres", self.items_without_genres),
            ("rated_items_dropped", self.rated_items_dropped),
            ("ratings_dropped_no_genre", self.ratings_dropped_no_genre),
            ("ratings_dropped_unknown_item", self.ratings_dropped_unknown_item),
            ("duplicate_ratings", self.duplicate_ratings),
            ("users", self.users),
            ("items", self.items),
            ("transactions", self.transactions),
        ]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("key,value\n");
        for (k, v) in self.rows() {
            out.push_str(&format!("{k},{v}\n"));
        }
        fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: InteractionDataset,
    pub catalog: ItemFeatureCatalog,
    pub report: PreprocessReport,
}

struct RawRating {
    user: u64,
    item: u64,
    rating: f64,
    timestamp: Option<i64>,
}

/// Loads ratings and genre metadata from the directory `path`.
///
/// Items without genres are dropped from both structures; the report counts
/// what was removed. When a (user, item) pair repeats, the last line wins.
pub fn load_dataset(path: &Path, format: &DatasetFormat) -> Result<LoadedDataset> {
    let scale = format.rating_scale();
    let (ratings, genres) = match format {
        DatasetFormat::MovielensDat => (
            read_dat_ratings(&path.join("ratings.dat"), scale)?,
            read_dat_movies(&path.join("movies.dat"))?,
        ),
        DatasetFormat::MovielensCsv => (
            read_csv_ratings(&path.join("ratings.csv"), scale)?,
            read_csv_movies(&path.join("movies.csv"))?,
        ),
        DatasetFormat::YahooTsv(cols) => (
            read_tsv_ratings(&path.join(&cols.ratings_file), cols)?,
            read_tsv_items(&path.join(&cols.items_file), cols)?,
        ),
    };
    assemble(ratings, genres)
}

fn assemble(ratings: Vec<RawRating>, genres: HashMap<u64, Vec<String>>) -> Result<LoadedDataset> {
    let mut report = PreprocessReport {
        raw_ratings: ratings.len(),
        raw_items: genres.len(),
        items_without_genres: genres.values().filter(|g| g.is_empty()).count(),
        ..Default::default()
    };

    let mut dropped_items = BTreeSet::new();
    let mut kept: BTreeMap<(u64, u64), (f64, Option<i64>)> = BTreeMap::new();
    for r in ratings {
        match genres.get(&r.item) {
            None => {
                report.ratings_dropped_unknown_item += 1;
                dropped_items.insert(r.item);
            }
            Some(g) if g.is_empty() => {
                report.ratings_dropped_no_genre += 1;
                dropped_items.insert(r.item);
            }
            Some(_) => {
                if kept.insert((r.user, r.item), (r.rating, r.timestamp)).is_some() {
                    report.duplicate_ratings += 1;
                }
            }
        }
    }
    report.rated_items_dropped = dropped_items.len();
    if kept.is_empty() {
        return Err(Error::EmptyDataset("no ratings left after genre filtering".into()));
    }

    let user_ids: Vec<u64> = kept
        .keys()
        .map(|&(u, _)| u)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let item_ids: Vec<u64> = kept
        .keys()
        .map(|&(_, i)| i)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let feature_vocab: Vec<String> = item_ids
        .iter()
        .flat_map(|i| genres[i].iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let item_features = item_ids
        .iter()
        .map(|i| {
            genres[i]
                .iter()
                .map(|g| feature_vocab.binary_search(g).expect("genre in vocabulary"))
                .collect()
        })
        .collect();

    let transactions = kept
        .into_iter()
        .map(|((u, i), (rating, timestamp))| Interaction {
            user: user_ids.binary_search(&u).expect("user in vocabulary"),
            item: item_ids.binary_search(&i).expect("item in vocabulary"),
            rating,
            timestamp,
        })
        .collect();

    let dataset = InteractionDataset::new(user_ids, item_ids, transactions)?;
    let catalog = ItemFeatureCatalog::new(feature_vocab, item_features)?;
    report.users = dataset.num_users();
    report.items = dataset.num_items();
    report.transactions = dataset.transactions().len();
    log::info!(
        "loaded {} users, {} items, {} transactions ({} rated items dropped for missing genres)",
        report.users,
        report.items,
        report.transactions,
        report.rated_items_dropped
    );
    Ok(LoadedDataset {
        dataset,
        catalog,
        report,
    })
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    // ML-1M ships latin-1 titles; only ids, ratings and genres matter here.
    Ok(String::from_utf8_lossy(&bytes).lines().map(str::to_owned).collect())
}

fn parse_err(file: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_field<T: std::str::FromStr>(file: &Path, line: u64, what: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| parse_err(file, line, format!("invalid {what} `{raw}`")))
}

fn check_scale(file: &Path, line: u64, rating: f64, (min, max): (f64, f64)) -> Result<f64> {
    if !(min..=max).contains(&rating) {
        return Err(Error::RatingOutOfScale {
            file: file.to_path_buf(),
            line,
            rating,
            min,
            max,
        });
    }
    Ok(rating)
}

fn split_genres(raw: &str, sep: &str) -> Vec<String> {
    let mut out: Vec<String> = raw
        .split(sep)
        .map(str::trim)
        .filter(|g| !g.is_empty() && *g != NO_GENRE)
        .map(str::to_owned)
        .collect();
    out.sort();
    out.dedup();
    out
}

fn rating_from_fields(
    file: &Path,
    line: u64,
    fields: &[&str],
    cols: (usize, usize, usize, Option<usize>),
    scale: (f64, f64),
) -> Result<RawRating> {
    let get = |c: usize| {
        fields
            .get(c)
            .copied()
            .ok_or_else(|| parse_err(file, line, format!("missing column {c}")))
    };
    let rating = parse_field(file, line, "rating", get(cols.2)?)?;
    Ok(RawRating {
        user: parse_field(file, line, "user id", get(cols.0)?)?,
        item: parse_field(file, line, "item id", get(cols.1)?)?,
        rating: check_scale(file, line, rating, scale)?,
        timestamp: match cols.3 {
            Some(c) => Some(parse_field(file, line, "timestamp", get(c)?)?),
            None => None,
        },
    })
}

fn read_dat_ratings(path: &Path, scale: (f64, f64)) -> Result<Vec<RawRating>> {
    let mut out = Vec::new();
    for (n, line) in read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split("::").collect();
        if fields.len() != 4 {
            return Err(parse_err(path, n as u64 + 1, "expected user::item::rating::timestamp"));
        }
        out.push(rating_from_fields(
            path,
            n as u64 + 1,
            &fields,
            (0, 1, 2, Some(3)),
            scale,
        )?);
    }
    Ok(out)
}

fn read_dat_movies(path: &Path) -> Result<HashMap<u64, Vec<String>>> {
    let mut out = HashMap::new();
    for (n, line) in read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.splitn(3, "::").collect();
        if fields.len() != 3 {
            return Err(parse_err(path, n as u64 + 1, "expected id::title::genres"));
        }
        let id = parse_field(path, n as u64 + 1, "movie id", fields[0])?;
        out.insert(id, split_genres(fields[2], "|"));
    }
    Ok(out)
}

fn csv_reader(path: &Path, delimiter: u8, has_headers: bool) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(has_headers)
        .flexible(true)
        .quoting(delimiter == b',')
        .from_reader(file))
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn read_records(path: &Path, delimiter: u8, has_headers: bool) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv_reader(path, delimiter, has_headers)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        out.push(record);
    }
    Ok(out)
}

fn read_csv_ratings(path: &Path, scale: (f64, f64)) -> Result<Vec<RawRating>> {
    read_records(path, b',', true)?
        .iter()
        .map(|r| {
            let fields: Vec<&str> = r.iter().collect();
            let ts = if fields.len() > 3 { Some(3) } else { None };
            rating_from_fields(path, record_line(r), &fields, (0, 1, 2, ts), scale)
        })
        .collect()
}

fn read_csv_movies(path: &Path) -> Result<HashMap<u64, Vec<String>>> {
    let mut out = HashMap::new();
    for r in read_records(path, b',', true)? {
        let line = record_line(&r);
        if r.len() < 3 {
            return Err(parse_err(path, line, "expected movieId,title,genres"));
        }
        let id = parse_field(path, line, "movie id", &r[0])?;
        out.insert(id, split_genres(&r[r.len() - 1], "|"));
    }
    Ok(out)
}

fn read_tsv_ratings(path: &Path, cols: &YahooColumns) -> Result<Vec<RawRating>> {
    let scale = (cols.rating_min, cols.rating_max);
    read_records(path, b'\t', cols.has_header)?
        .iter()
        .map(|r| {
            let fields: Vec<&str> = r.iter().collect();
            rating_from_fields(
                path,
                record_line(r),
                &fields,
                (cols.user_col, cols.item_col, cols.rating_col, cols.timestamp_col),
                scale,
            )
        })
        .collect()
}

fn read_tsv_items(path: &Path, cols: &YahooColumns) -> Result<HashMap<u64, Vec<String>>> {
    let mut out = HashMap::new();
    for r in read_records(path, b'\t', cols.has_header)? {
        let line = record_line(&r);
        let id = r
            .get(cols.item_id_col)
            .ok_or_else(|| parse_err(path, line, "missing item id column"))?;
        let id = parse_field(path, line, "item id", id)?;
        let genres = r.get(cols.genres_col).unwrap_or("");
        out.insert(id, split_genres(genres, &cols.genre_separator));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    #[test]
    fn single_rating_corpus() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "ratings.csv",
            "userId,movieId,rating,timestamp\n1,10,4.0,100\n",
        );
        write(
            dir.path(),
            "movies.csv",
            "movieId,title,genres\n10,\"A, The (1999)\",Drama\n",
        );
        let loaded = load_dataset(dir.path(), &DatasetFormat::MovielensCsv).unwrap();
        let stats = crate::data::dataset_stats(&loaded.dataset).unwrap();
        assert_eq!((stats.users, stats.items, stats.transactions), (1, 1, 1));
        assert_eq!(stats.sparsity, 0.0);
    }

    #[test]
    fn crafted_dat_corpus_counts() {
        let dir = tempfile::tempdir().unwrap();
        // 3 users, 4 genre-bearing items, one genre-less item, one duplicate line.
        write(
            dir.path(),
            "ratings.dat",
            "1::1::5::1\n1::2::3::2\n2::2::4::3\n2::3::1::4\n3::4::2::5\n3::5::4::6\n3::4::3::7\n",
        );
        write(
            dir.path(),
            "movies.dat",
            "1::One (1990)::Comedy\n2::Two: Part II (1991)::Action|Sci-Fi\n3::Three (1992)::Drama\n\
             4::Four (1993)::Comedy|Drama\n5::Five (1994)::(no genres listed)\n",
        );
        let loaded = load_dataset(dir.path(), &DatasetFormat::MovielensDat).unwrap();
        let ds = &loaded.dataset;
        assert_eq!(ds.user_ids(), &[1, 2, 3]);
        assert_eq!(ds.item_ids(), &[1, 2, 3, 4]);
        assert_eq!(ds.transactions().len(), 5);
        assert_eq!(loaded.report.duplicate_ratings, 1);
        assert_eq!(loaded.report.ratings_dropped_no_genre, 1);
        assert_eq!(loaded.report.rated_items_dropped, 1);
        assert_eq!(loaded.report.items_without_genres, 1);
        assert_eq!(loaded.catalog.feature_vocab(), &["Action", "Comedy", "Drama", "Sci-Fi"]);
        assert_eq!(loaded.catalog.features(1), &[0, 3]);
        // last duplicate wins
        let t = ds.transactions().iter().find(|t| t.user == 2 && t.item == 3).unwrap();
        assert_eq!((t.rating, t.timestamp), (3.0, Some(7)));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "ratings.dat", "1::1::5::1\n1::oops::3::2\n");
        write(dir.path(), "movies.dat", "1::One::Comedy\n");
        match load_dataset(dir.path(), &DatasetFormat::MovielensDat) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rating_out_of_scale() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "ratings.csv",
            "userId,movieId,rating,timestamp\n1,1,4,1\n1,2,7.5,2\n",
        );
        write(dir.path(), "movies.csv", "movieId,title,genres\n1,A,Drama\n2,B,Drama\n");
        match load_dataset(dir.path(), &DatasetFormat::MovielensCsv) {
            Err(Error::RatingOutOfScale { line, rating, .. }) => {
                assert_eq!((line, rating), (3, 7.5))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_after_filtering_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "ratings.csv", "userId,movieId,rating,timestamp\n1,1,4,1\n");
        write(
            dir.path(),
            "movies.csv",
            "movieId,title,genres\n1,A,(no genres listed)\n",
        );
        assert!(matches!(
            load_dataset(dir.path(), &DatasetFormat::MovielensCsv),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn yahoo_column_map() {
        let dir = tempfile::tempdir().unwrap();
        let cols = YahooColumns {
            ratings_file: "r.tsv".into(),
            items_file: "i.tsv".into(),
            rating_col: 2,
            genres_col: 2,
            rating_min: 1.0,
            rating_max: 13.0,
            ..Default::default()
        };
        write(dir.path(), "r.tsv", "7\t100\t13\n7\t101\t2\n8\t100\t5\n");
        write(dir.path(), "i.tsv", "100\tAlpha\tDrama|Kids\n101\tBeta\tThriller\n");
        let loaded = load_dataset(dir.path(), &DatasetFormat::YahooTsv(cols)).unwrap();
        assert_eq!(loaded.dataset.transactions().len(), 3);
        assert_eq!(loaded.catalog.feature_vocab(), &["Drama", "Kids", "Thriller"]);
    }

    #[test]
    fn loading_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "ratings.csv",
            "userId,movieId,rating,timestamp\n9,3,4,1\n2,3,1,2\n2,1,5,3\n",
        );
        write(
            dir.path(),
            "movies.csv",
            "movieId,title,genres\n1,A,Drama\n3,B,Drama|War\n",
        );
        let a = load_dataset(dir.path(), &DatasetFormat::MovielensCsv).unwrap();
        let b = load_dataset(dir.path(), &DatasetFormat::MovielensCsv).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.catalog, b.catalog);
        assert_eq!(a.dataset.user_ids(), &[2, 9]);
    }
}
