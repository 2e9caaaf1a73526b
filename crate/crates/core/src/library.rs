//! Movie knowledge library: record parsing, the feature index and
//! configuration vectors.
//!
//! The feature layout is fixed: actor block, actress block, director block,
//! writer block, genre block. Within a block features are sorted by name.
//! The four crew blocks therefore occupy `[0, C)` and genres `[C, N)`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature role. Declaration order is the block order of the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Actor,
    Actress,
    Director,
    Writer,
    Genre,
}

impl Role {
    pub const ALL: [Role; 5] = [
        Role::Actor,
        Role::Actress,
        Role::Director,
        Role::Writer,
        Role::Genre,
    ];

    pub const CREW: [Role; 4] = [Role::Actor, Role::Actress, Role::Director, Role::Writer];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Actor => "actor",
            Role::Actress => "actress",
            Role::Director => "director",
            Role::Writer => "writer",
            Role::Genre => "genre",
        }
    }

    pub fn is_crew(self) -> bool {
        self != Role::Genre
    }

    fn block(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "actor" => Ok(Role::Actor),
            "actress" => Ok(Role::Actress),
            "director" => Ok(Role::Director),
            "writer" => Ok(Role::Writer),
            "genre" => Ok(Role::Genre),
            other => Err(Error::InvalidArgument(format!("unknown role {other:?}"))),
        }
    }
}

/// A `(role, name)` pair; the identity of one coordinate of a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Feature {
    pub role: Role,
    pub name: String,
}

impl Feature {
    pub fn new(role: Role, name: impl Into<String>) -> Self {
        Self {
            role,
            name: name.into(),
        }
    }

    /// Parses `role:name`. Surrounding quotes on the name are stripped.
    pub fn parse_key(key: &str) -> Result<Self> {
        let (role, name) = key
            .split_once(':')
            .ok_or_else(|| Error::InvalidFeatureKey(key.to_string()))?;
        let role: Role = role
            .parse()
            .map_err(|_| Error::InvalidFeatureKey(key.to_string()))?;
        let name = name.trim().trim_matches('"');
        if name.is_empty() {
            return Err(Error::InvalidFeatureKey(key.to_string()));
        }
        Ok(Self::new(role, name))
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.role, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovieRecord {
    pub id: String,
    pub title: String,
    pub year: i32,
    pub genres: BTreeSet<String>,
    pub actors: BTreeSet<String>,
    pub actresses: BTreeSet<String>,
    pub writers: BTreeSet<String>,
    pub directors: BTreeSet<String>,
    pub budget: Option<f64>,
    pub gross: Option<f64>,
}

impl MovieRecord {
    pub fn names(&self, role: Role) -> &BTreeSet<String> {
        match role {
            Role::Actor => &self.actors,
            Role::Actress => &self.actresses,
            Role::Director => &self.directors,
            Role::Writer => &self.writers,
            Role::Genre => &self.genres,
        }
    }

    pub fn names_mut(&mut self, role: Role) -> &mut BTreeSet<String> {
        match role {
            Role::Actor => &mut self.actors,
            Role::Actress => &mut self.actresses,
            Role::Director => &mut self.directors,
            Role::Writer => &mut self.writers,
            Role::Genre => &mut self.genres,
        }
    }

    /// All features of the record in block order.
    pub fn features(&self) -> impl Iterator<Item = Feature> + '_ {
        Role::ALL
            .into_iter()
            .flat_map(move |role| self.names(role).iter().map(move |n| Feature::new(role, n)))
    }

    pub fn crew_len(&self) -> usize {
        Role::CREW.iter().map(|&r| self.names(r).len()).sum()
    }

    pub fn feature_count(&self) -> usize {
        self.crew_len() + self.genres.len()
    }

    /// Both budget and gross are known.
    pub fn is_trainable(&self) -> bool {
        self.budget.is_some() && self.gross.is_some()
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.genres.is_empty() {
            return Err("no genres".into());
        }
        if self.crew_len() == 0 {
            return Err("no crew members".into());
        }
        for (label, v) in [("budget", self.budget), ("gross", self.gross)] {
            if let Some(v) = v {
                if !v.is_finite() || v < 0.0 {
                    return Err(format!("{label} must be finite and non-negative, got {v}"));
                }
            }
        }
        Ok(())
    }
}

/// Wire shape of one corpus line. Role lists may be omitted; budget and
/// gross may be omitted or null.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    title: String,
    year: i32,
    genres: Vec<String>,
    #[serde(default)]
    actors: Vec<String>,
    #[serde(default)]
    actresses: Vec<String>,
    #[serde(default)]
    writers: Vec<String>,
    #[serde(default)]
    directors: Vec<String>,
    #[serde(default)]
    budget: Option<f64>,
    #[serde(default)]
    gross: Option<f64>,
}

fn name_set(names: Vec<String>) -> BTreeSet<String> {
    names
        .into_iter()
        .map(|n| n.trim().to_string())
        .filter(|n| !n.is_empty())
        .collect()
}

impl From<RawRecord> for MovieRecord {
    fn from(raw: RawRecord) -> Self {
        Self {
            id: raw.id,
            title: raw.title,
            year: raw.year,
            genres: name_set(raw.genres),
            actors: name_set(raw.actors),
            actresses: name_set(raw.actresses),
            writers: name_set(raw.writers),
            directors: name_set(raw.directors),
            budget: raw.budget,
            gross: raw.gross,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedLine {
    /// 1-based line number in the input stream.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    /// Records kept in the library, trainable or not.
    pub accepted: usize,
    /// Kept records that lack budget or gross.
    pub flagged: usize,
    pub rejected: Vec<RejectedLine>,
}

impl ParseReport {
    pub fn trainable(&self) -> usize {
        self.accepted - self.flagged
    }
}

/// Immutable corpus of movie records.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeLibrary {
    records: Vec<MovieRecord>,
    by_id: HashMap<String, usize>,
}

impl KnowledgeLibrary {
    /// Builds a library from already validated records. Duplicate ids are
    /// rejected.
    pub fn from_records(records: Vec<MovieRecord>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            r.validate()
                .map_err(|e| Error::InvalidArgument(format!("record {}: {e}", r.id)))?;
            if by_id.insert(r.id.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate id {}", r.id)));
            }
        }
        Ok(Self { records, by_id })
    }

    pub fn records(&self) -> &[MovieRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&MovieRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn trainable(&self) -> impl Iterator<Item = &MovieRecord> {
        self.records.iter().filter(|r| r.is_trainable())
    }

    /// A copy of the library without the given movie ids.
    pub fn without(&self, ids: &HashSet<&str>) -> Self {
        let records: Vec<MovieRecord> = self
            .records
            .iter()
            .filter(|r| !ids.contains(r.id.as_str()))
            .cloned()
            .collect();
        let by_id = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.clone(), i))
            .collect();
        Self { records, by_id }
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Reads a JSONL corpus. Malformed or invalid lines are reported and
/// skipped; only an input without any non-blank line is an error.
pub fn parse_library<R: BufRead>(input: R) -> Result<(KnowledgeLibrary, ParseReport)> {
    let mut report = ParseReport::default();
    let mut library = KnowledgeLibrary::default();
    let mut seen_any = false;

    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        seen_any = true;
        let reject = |reason: String| RejectedLine {
            line: line_no,
            reason,
        };
        let record: MovieRecord = match serde_json::from_str::<RawRecord>(trimmed) {
            Ok(raw) => raw.into(),
            Err(e) => {
                report.rejected.push(reject(e.to_string()));
                continue;
            }
        };
        if let Err(reason) = record.validate() {
            report.rejected.push(reject(reason));
            continue;
        }
        if library.by_id.contains_key(&record.id) {
            report
                .rejected
                .push(reject(format!("duplicate id {}", record.id)));
            continue;
        }
        report.accepted += 1;
        if !record.is_trainable() {
            report.flagged += 1;
        }
        library
            .by_id
            .insert(record.id.clone(), library.records.len());
        library.records.push(record);
    }

    if !seen_any {
        return Err(Error::EmptyLibrary);
    }
    Ok((library, report))
}

/// Bijection between features and positions `[0, N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureIndex {
    features: Vec<Feature>,
    block_sizes: [usize; 5],
}

impl FeatureIndex {
    pub fn build(lib: &KnowledgeLibrary) -> Result<Self> {
        if lib.is_empty() {
            return Err(Error::EmptyLibrary);
        }
        let mut blocks: [BTreeSet<&str>; 5] = Default::default();
        for r in lib.records() {
            for role in Role::ALL {
                blocks[role.block()].extend(r.names(role).iter().map(String::as_str));
            }
        }
        let features = Role::ALL
            .into_iter()
            .flat_map(|role| {
                blocks[role.block()]
                    .iter()
                    .map(move |n| Feature::new(role, *n))
            })
            .collect();
        Self::from_features(features)
    }

    /// Rebuilds an index from an explicit feature list, which must already be
    /// in canonical order (blocks in role order, names sorted, no duplicates).
    pub fn from_features(features: Vec<Feature>) -> Result<Self> {
        let mut block_sizes = [0usize; 5];
        for pair in features.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::InvalidArgument(format!(
                    "features out of canonical order at {} / {}",
                    pair[0], pair[1]
                )));
            }
        }
        for f in &features {
            block_sizes[f.role.block()] += 1;
        }
        Ok(Self {
            features,
            block_sizes,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, pos: usize) -> &Feature {
        &self.features[pos]
    }

    pub fn position(&self, role: Role, name: &str) -> Option<usize> {
        let range = self.block_range(role);
        self.features[range.clone()]
            .binary_search_by(|f| f.name.as_str().cmp(name))
            .ok()
            .map(|i| range.start + i)
    }

    pub fn position_of(&self, feature: &Feature) -> Option<usize> {
        self.position(feature.role, &feature.name)
    }

    /// Resolves a `role:name` key.
    pub fn resolve(&self, key: &str) -> Result<usize> {
        let f = Feature::parse_key(key)?;
        self.position(f.role, &f.name).ok_or(Error::UnknownFeature {
            role: f.role,
            name: f.name,
        })
    }

    /// Block sizes in layout order: actor, actress, director, writer, genre.
    pub fn block_sizes(&self) -> [usize; 5] {
        self.block_sizes
    }

    pub fn block_range(&self, role: Role) -> Range<usize> {
        let start: usize = self.block_sizes[..role.block()].iter().sum();
        start..start + self.block_sizes[role.block()]
    }

    pub fn crew_range(&self) -> Range<usize> {
        0..self.crew_len()
    }

    pub fn genre_range(&self) -> Range<usize> {
        self.block_range(Role::Genre)
    }

    pub fn crew_len(&self) -> usize {
        self.block_sizes[..4].iter().sum()
    }

    pub fn genre_len(&self) -> usize {
        self.block_sizes[4]
    }

    pub fn role_of(&self, pos: usize) -> Role {
        self.features[pos].role
    }

    /// Positions of all features of `movie`, sorted ascending.
    pub fn positions_of(&self, movie: &MovieRecord) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(movie.feature_count());
        for role in Role::ALL {
            for name in movie.names(role) {
                let pos = self
                    .position(role, name)
                    .ok_or_else(|| Error::UnknownFeature {
                        role,
                        name: name.clone(),
                    })?;
                out.push(pos);
            }
        }
        out.sort_unstable();
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Binary,
    Relaxed,
}

/// A point in the configuration space: binary (`{0,1}^N`) or relaxed
/// (`[0,1]^N`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigVector {
    values: Vec<f64>,
    mode: Mode,
}

impl ConfigVector {
    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
            mode: Mode::Binary,
        }
    }

    pub fn binary(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| v != 0.0 && v != 1.0)
        {
            return Err(Error::InvalidConfig {
                index,
                value,
                mode: "binary",
            });
        }
        Ok(Self {
            values,
            mode: Mode::Binary,
        })
    }

    pub fn relaxed(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| !(0.0..=1.0).contains(&v))
        {
            return Err(Error::InvalidConfig {
                index,
                value,
                mode: "relaxed",
            });
        }
        Ok(Self {
            values,
            mode: Mode::Relaxed,
        })
    }

    /// Binary vector with ones at `positions`.
    pub fn from_positions(n: usize, positions: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut values = vec![0.0; n];
        for p in positions {
            if p >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: p + 1,
                });
            }
            values[p] = 1.0;
        }
        Ok(Self {
            values,
            mode: Mode::Binary,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Positions with value 1 (binary) or above zero (relaxed).
    pub fn selected(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Binary configuration of a movie under `index`.
pub fn vectorize(movie: &MovieRecord, index: &FeatureIndex) -> Result<ConfigVector> {
    let positions = index.positions_of(movie)?;
    ConfigVector::from_positions(index.len(), positions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, actors: &[&str], directors: &[&str], genres: &[&str]) -> MovieRecord {
        MovieRecord {
            id: id.into(),
            title: id.into(),
            year: 2000,
            genres: genres.iter().map(|s| s.to_string()).collect(),
            actors: actors.iter().map(|s| s.to_string()).collect(),
            actresses: BTreeSet::new(),
            writers: BTreeSet::new(),
            directors: directors.iter().map(|s| s.to_string()).collect(),
            budget: Some(10.0),
            gross: Some(20.0),
        }
    }

    #[test]
    fn parses_single_trainable_record() {
        let line = r#"{"id":"tt0848228","title":"The Avengers","year":2012,"genres":["Action","Adventure","Sci-Fi"],"actors":["Robert Downey Jr.","Chris Evans"],"actresses":["Scarlett Johansson"],"writers":["Joss Whedon"],"directors":["Joss Whedon"],"budget":220,"gross":623.27}"#;
        let (lib, report) = parse_library(line.as_bytes()).unwrap();
        assert_eq!(lib.len(), 1);
        assert_eq!(lib.trainable().count(), 1);
        assert_eq!(report.accepted, 1);
        assert_eq!(report.flagged, 0);
        assert!(report.rejected.is_empty());
        let m = lib.get("tt0848228").unwrap();
        assert_eq!(m.gross, Some(623.27));
        assert_eq!(m.budget, Some(220.0));
    }

    #[test]
    fn empty_object_is_rejected_not_fatal() {
        let (lib, report) = parse_library("{}\n".as_bytes()).unwrap();
        assert_eq!(lib.len(), 0);
        assert_eq!(report.rejected.len(), 1);
        assert_eq!(report.rejected[0].line, 1);
    }

    #[test]
    fn missing_gross_is_flagged() {
        let input = concat!(
            r#"{"id":"a","title":"A","year":1,"genres":["X"],"actors":["p"],"budget":1,"gross":2}"#,
            "\n",
            r#"{"id":"b","title":"B","year":1,"genres":["X"],"actors":["q"],"budget":1}"#,
            "\n",
            r#"{"id":"c","title":"C","year":1,"genres":["X"],"directors":["r"],"budget":3,"gross":null}"#,
            "\n",
            r#"{"id":"d","title":"D","year":1,"genres":["Y"],"writers":["s"],"budget":3,"gross":4}"#,
            "\n",
        );
        let (lib, report) = parse_library(input.as_bytes()).unwrap();
        assert_eq!(lib.len(), 4);
        assert_eq!(report.flagged, 2);
        assert_eq!(report.trainable(), 2);
        assert_eq!(lib.trainable().count(), 2);
    }

    #[test]
    fn three_lines_one_missing_gross() {
        let input = concat!(
            r#"{"id":"a","title":"A","year":1,"genres":["X"],"actors":["p"],"budget":1,"gross":2}"#,
            "\n",
            r#"{"id":"b","title":"B","year":1,"genres":["X"],"actors":["q"],"budget":1}"#,
            "\n",
            r#"{"id":"c","title":"C","year":1,"genres":["X"],"directors":["r"],"budget":3,"gross":5}"#,
        );
        let (lib, report) = parse_library(input.as_bytes()).unwrap();
        assert_eq!(lib.trainable().count(), 2);
        assert_eq!(report.flagged, 1);
    }

    #[test]
    fn bad_lines_are_reported_with_line_numbers() {
        let input = concat!(
            "not json\n",
            "\n",
            r#"{"id":"a","title":"A","year":1,"genres":[],"actors":["p"]}"#,
            "\n",
            r#"{"id":"b","title":"B","year":1,"genres":["X"]}"#,
            "\n",
            r#"{"id":"c","title":"C","year":1,"genres":["X"],"actors":["p"],"budget":-1,"gross":1}"#,
            "\n",
            r#"{"id":"d","title":"D","year":1,"genres":["X"],"actors":["p"]}"#,
            "\n",
            r#"{"id":"d","title":"D","year":1,"genres":["X"],"actors":["p"]}"#,
            "\n",
        );
        let (lib, report) = parse_library(input.as_bytes()).unwrap();
        assert_eq!(lib.len(), 1);
        let lines: Vec<usize> = report.rejected.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![1, 3, 4, 5, 7]);
    }

    #[test]
    fn empty_stream_is_an_error() {
        assert!(matches!(
            parse_library("".as_bytes()),
            Err(Error::EmptyLibrary)
        ));
        assert!(matches!(
            parse_library("\n  \n".as_bytes()),
            Err(Error::EmptyLibrary)
        ));
    }

    #[test]
    fn index_block_sizes_and_order() {
        let mut m = record("m1", &["B", "A"], &["D"], &["Drama", "Action", "Comedy"]);
        m.actresses.insert("S".into());
        m.writers.insert("W".into());
        let lib = KnowledgeLibrary::from_records(vec![m]).unwrap();
        let index = FeatureIndex::build(&lib).unwrap();
        assert_eq!(index.len(), 8);
        assert_eq!(index.block_sizes(), [2, 1, 1, 1, 3]);
        assert_eq!(index.position(Role::Actor, "A"), Some(0));
        assert_eq!(index.position(Role::Actor, "B"), Some(1));
        assert_eq!(index.position(Role::Actress, "S"), Some(2));
        assert_eq!(index.position(Role::Director, "D"), Some(3));
        assert_eq!(index.position(Role::Writer, "W"), Some(4));
        assert_eq!(index.position(Role::Genre, "Action"), Some(5));
        assert_eq!(index.crew_range(), 0..5);
        assert_eq!(index.genre_range(), 5..8);
    }

    #[test]
    fn index_is_deterministic() {
        let line = r#"{"id":"a","title":"A","year":1,"genres":["Y","X"],"actors":["q","p"],"writers":["w"],"budget":1,"gross":2}"#;
        let (l1, _) = parse_library(line.as_bytes()).unwrap();
        let (l2, _) = parse_library(line.as_bytes()).unwrap();
        assert_eq!(
            FeatureIndex::build(&l1).unwrap(),
            FeatureIndex::build(&l2).unwrap()
        );
    }

    #[test]
    fn build_index_on_empty_library_fails() {
        assert!(FeatureIndex::build(&KnowledgeLibrary::default()).is_err());
    }

    #[test]
    fn vectorize_single_actor() {
        let mut m = record("m", &["A"], &[], &[]);
        let index = FeatureIndex::from_features(vec![
            Feature::new(Role::Actor, "A"),
            Feature::new(Role::Actor, "B"),
            Feature::new(Role::Genre, "H"),
        ])
        .unwrap();
        assert_eq!(vectorize(&m, &index).unwrap().values(), &[1.0, 0.0, 0.0]);

        m.genres.insert("G".into());
        let err = vectorize(&m, &index).unwrap_err();
        assert!(
            matches!(err, Error::UnknownFeature { role: Role::Genre, ref name } if name == "G")
        );
    }

    #[test]
    fn vectorize_full_record_is_all_ones() {
        let m = record("m", &["A", "B"], &["D"], &["G"]);
        let lib = KnowledgeLibrary::from_records(vec![m.clone()]).unwrap();
        let index = FeatureIndex::build(&lib).unwrap();
        assert!(vectorize(&m, &index)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 1.0));
    }

    #[test]
    fn same_name_in_two_roles_sets_two_entries() {
        let m = record("m", &["Joss"], &["Joss"], &["Action"]);
        let lib = KnowledgeLibrary::from_records(vec![m.clone()]).unwrap();
        let index = FeatureIndex::build(&lib).unwrap();
        let x = vectorize(&m, &index).unwrap();
        let a = index.position(Role::Actor, "Joss").unwrap();
        let d = index.position(Role::Director, "Joss").unwrap();
        assert_ne!(a, d);
        assert_eq!(x.values()[a], 1.0);
        assert_eq!(x.values()[d], 1.0);
        assert_eq!(x.values().iter().sum::<f64>(), 3.0);
    }

    #[test]
    fn feature_keys() {
        let f = Feature::parse_key("actor:\"Chris Evans\"").unwrap();
        assert_eq!(f, Feature::new(Role::Actor, "Chris Evans"));
        assert_eq!(
            Feature::parse_key("genre:Sci-Fi").unwrap().to_string(),
            "genre:Sci-Fi"
        );
        assert!(Feature::parse_key("producer:X").is_err());
        assert!(Feature::parse_key("actor:").is_err());
        assert!(Feature::parse_key("nocolon").is_err());
    }

    #[test]
    fn config_vector_domains() {
        assert!(ConfigVector::binary(vec![0.0, 1.0]).is_ok());
        assert!(ConfigVector::binary(vec![0.5]).is_err());
        assert!(ConfigVector::relaxed(vec![0.5, 1.0]).is_ok());
        assert!(ConfigVector::relaxed(vec![1.5]).is_err());
        assert!(ConfigVector::relaxed(vec![f64::NAN]).is_err());
    }
}
