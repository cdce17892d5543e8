//! In-memory corpus model.
//!
//! Records arrive either from the line-delimited files handled in [`ingest`]
//! or directly from memory (the synthetic generator). Both routes go through
//! [`CorpusIndex::build`], which validates records, interns every entity key
//! into a dense integer id, deduplicates citation edges and derives each
//! article's country set from its affiliations.

mod csr;
pub mod ingest;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use csr::Csr;

use crate::error::{Error, Result};

/// ISO-3166 alpha-2 country code.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CountryCode([u8; 2]);

impl CountryCode {
    /// Accepts exactly two ASCII uppercase letters.
    pub fn parse(s: &str) -> Option<Self> {
        match s.as_bytes() {
            &[a, b] if a.is_ascii_uppercase() && b.is_ascii_uppercase() => {
                Some(CountryCode([a, b]))
            }
            _ => None,
        }
    }

    pub fn as_str(&self) -> &str {
        // Only ASCII bytes are ever stored.
        std::str::from_utf8(&self.0).unwrap()
    }
}

impl fmt::Debug for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CountryCode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CountryCode::parse(s).ok_or_else(|| Error::Config(format!("invalid ISO-3166 code {s:?}")))
    }
}

impl TryFrom<String> for CountryCode {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CountryCode> for String {
    fn from(c: CountryCode) -> String {
        c.as_str().to_owned()
    }
}

/// Dense article id, assigned in input order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ArticleId(pub u32);

impl ArticleId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One line of `articles.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub id: String,
    pub date: NaiveDate,
    pub venue: Option<String>,
    pub fields: Vec<String>,
    pub authors: Vec<AuthorRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorRecord {
    pub a: String,
    pub orgs: Vec<String>,
}

/// One line of `citations.tsv`. The optional date column must agree with the
/// citing article's publication date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationRecord {
    pub citing: String,
    pub cited: String,
    pub date: Option<NaiveDate>,
    pub line: usize,
}

impl CitationRecord {
    pub fn new(citing: impl Into<String>, cited: impl Into<String>) -> Self {
        CitationRecord {
            citing: citing.into(),
            cited: cited.into(),
            date: None,
            line: 0,
        }
    }
}

/// One row of `orgs.tsv`. `iso2` keeps the raw text so a canonical export
/// reproduces the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrgRecord {
    pub org: String,
    pub iso2: String,
}

impl OrgRecord {
    pub fn new(org: impl Into<String>, iso2: impl Into<String>) -> Self {
        OrgRecord {
            org: org.into(),
            iso2: iso2.into(),
        }
    }
}

/// Raw records before indexing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusRecords {
    pub articles: Vec<ArticleRecord>,
    pub citations: Vec<CitationRecord>,
    pub orgs: Vec<OrgRecord>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownCitationPolicy {
    #[default]
    Drop,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestConfig {
    /// Inclusive start of the analysis window.
    pub window_start: NaiveDate,
    /// Exclusive end of the analysis window.
    pub window_end: NaiveDate,
    pub unknown_citation: UnknownCitationPolicy,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            window_start: NaiveDate::from_ymd_opt(1980, 1, 1).unwrap(),
            window_end: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            unknown_citation: UnknownCitationPolicy::Drop,
        }
    }
}

impl IngestConfig {
    pub fn in_window(&self, date: NaiveDate) -> bool {
        self.window_start <= date && date < self.window_end
    }
}

/// Counters reported after ingest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub articles_accepted: usize,
    pub articles_in_window: usize,
    pub articles_excluded_by_window: usize,
    pub articles_without_affiliation: usize,
    pub citations_read: usize,
    pub citations_rejected_unknown_article: usize,
    pub citations_rejected_self: usize,
    pub citations_duplicate: usize,
    pub edges: usize,
    pub orgs: usize,
    pub orgs_unknown_iso: usize,
    pub org_refs_unresolved: usize,
}

/// String interner handing out dense `u32` ids in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct Interner {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Interner {
    pub fn intern(&mut self, key: &str) -> u32 {
        if let Some(&id) = self.ids.get(key) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(key.to_owned());
        self.ids.insert(key.to_owned(), id);
        id
    }

    pub fn get(&self, key: &str) -> Option<u32> {
        self.ids.get(key).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Indexed article.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Article {
    pub key: String,
    pub date: NaiveDate,
    pub venue: Option<u32>,
    /// Field ids, deduplicated, in first-occurrence order.
    pub fields: Vec<u32>,
    /// `(author id, org ids)`; org ids deduplicated per authorship.
    pub authorships: Vec<(u32, Vec<u32>)>,
    /// Derived country set, sorted and deduplicated.
    pub countries: Vec<CountryCode>,
    /// Outside the analysis window; kept in the graph, skipped by panels.
    pub excluded: bool,
}

impl Article {
    pub fn year(&self) -> i32 {
        self.date.year()
    }

    pub fn org_count(&self) -> usize {
        self.authorships.iter().map(|(_, o)| o.len()).sum()
    }
}

/// Organization → country lookup, as loaded from `orgs.tsv`.
#[derive(Debug, Clone, Default)]
pub struct OrgTable {
    countries: HashMap<String, Option<CountryCode>>,
}

impl OrgTable {
    pub fn from_records(records: &[OrgRecord]) -> Self {
        let countries = records
            .iter()
            .map(|r| (r.org.clone(), CountryCode::parse(&r.iso2)))
            .collect();
        OrgTable { countries }
    }

    /// `None` for orgs that are missing or carry an unusable ISO code.
    pub fn country(&self, org: &str) -> Option<CountryCode> {
        self.countries.get(org).copied().flatten()
    }
}

/// Reduces an article's affiliations to the unique set of countries.
/// Multiple orgs (or authors) in the same country count once.
pub fn derive_countries(article: &ArticleRecord, orgs: &OrgTable) -> BTreeSet<CountryCode> {
    article
        .authors
        .iter()
        .flat_map(|a| a.orgs.iter())
        .filter_map(|o| orgs.country(o))
        .collect()
}

/// Immutable, validated corpus with dense ids and CSR adjacency.
#[derive(Debug, Clone)]
pub struct CorpusIndex {
    articles: Vec<Article>,
    article_ids: HashMap<String, ArticleId>,
    fields: Interner,
    venues: Interner,
    authors: Interner,
    orgs: Interner,
    org_records: Vec<OrgRecord>,
    /// citing → cited
    forward: Csr,
    /// cited → citing
    reverse: Csr,
    config: IngestConfig,
    summary: IngestSummary,
}

fn dedup_in_order(items: &[String]) -> Vec<&str> {
    let mut seen = BTreeSet::new();
    items
        .iter()
        .map(String::as_str)
        .filter(|s| seen.insert(*s))
        .collect()
}

impl CorpusIndex {
    /// Validates and indexes raw records.
    pub fn build(records: CorpusRecords, config: &IngestConfig) -> Result<Self> {
        let CorpusRecords {
            articles: raw_articles,
            citations,
            orgs: org_records,
        } = records;

        let mut summary = IngestSummary {
            orgs: org_records.len(),
            ..Default::default()
        };
        let mut org_seen = BTreeSet::new();
        for r in &org_records {
            if !org_seen.insert(r.org.as_str()) {
                return Err(Error::Config(format!("org {} listed twice in org table", r.org)));
            }
            if CountryCode::parse(&r.iso2).is_none() {
                summary.orgs_unknown_iso += 1;
            }
        }
        let org_table = OrgTable::from_records(&org_records);

        let mut fields = Interner::default();
        let mut venues = Interner::default();
        let mut authors = Interner::default();
        let mut orgs = Interner::default();
        for r in &org_records {
            orgs.intern(&r.org);
        }

        let mut articles = Vec::with_capacity(raw_articles.len());
        let mut article_ids = HashMap::with_capacity(raw_articles.len());
        for (i, rec) in raw_articles.iter().enumerate() {
            if let Some(problem) = article_problem(rec) {
                return Err(Error::Malformed {
                    file: "articles".into(),
                    line: i + 1,
                    message: format!("{}: {problem}", rec.id),
                });
            }
            let id = ArticleId(articles.len() as u32);
            if article_ids.insert(rec.id.clone(), id).is_some() {
                return Err(Error::DuplicateArticle(rec.id.clone()));
            }
            let field_ids = dedup_in_order(&rec.fields)
                .into_iter()
                .map(|f| fields.intern(f))
                .collect();
            let authorships = rec
                .authors
                .iter()
                .map(|a| {
                    let org_ids = dedup_in_order(&a.orgs)
                        .into_iter()
                        .map(|o| {
                            if !org_table.countries.contains_key(o) {
                                summary.org_refs_unresolved += 1;
                            }
                            orgs.intern(o)
                        })
                        .collect();
                    (authors.intern(&a.a), org_ids)
                })
                .collect();
            let countries: Vec<CountryCode> =
                derive_countries(rec, &org_table).into_iter().collect();
            let excluded = !config.in_window(rec.date);
            summary.articles_accepted += 1;
            if excluded {
                summary.articles_excluded_by_window += 1;
            } else {
                summary.articles_in_window += 1;
            }
            if countries.is_empty() {
                summary.articles_without_affiliation += 1;
            }
            articles.push(Article {
                key: rec.id.clone(),
                date: rec.date,
                venue: rec.venue.as_deref().map(|v| venues.intern(v)),
                fields: field_ids,
                authorships,
                countries,
                excluded,
            });
        }

        summary.citations_read = citations.len();
        let mut pairs = Vec::with_capacity(citations.len());
        for c in &citations {
            let (Some(&citing), Some(&cited)) =
                (article_ids.get(&c.citing), article_ids.get(&c.cited))
            else {
                if config.unknown_citation == UnknownCitationPolicy::Fail {
                    let key = if article_ids.contains_key(&c.citing) {
                        &c.cited
                    } else {
                        &c.citing
                    };
                    return Err(Error::UnknownArticle {
                        file: "citations.tsv".into(),
                        line: c.line,
                        key: key.clone(),
                    });
                }
                summary.citations_rejected_unknown_article += 1;
                continue;
            };
            if let Some(d) = c.date {
                let expected = articles[citing.index()].date;
                if d != expected {
                    return Err(Error::EdgeDateMismatch {
                        file: "citations.tsv".into(),
                        line: c.line,
                        given: d.to_string(),
                        expected: expected.to_string(),
                    });
                }
            }
            if citing == cited {
                summary.citations_rejected_self += 1;
                continue;
            }
            pairs.push((citing.0, cited.0));
        }
        pairs.par_sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        summary.citations_duplicate = before - pairs.len();
        summary.edges = pairs.len();
        if summary.citations_rejected_unknown_article > 0 {
            warn!(
                "dropped {} citations referencing unknown articles",
                summary.citations_rejected_unknown_article
            );
        }
        if summary.org_refs_unresolved > 0 || summary.orgs_unknown_iso > 0 {
            warn!(
                "{} org references unresolved, {} orgs with unusable ISO codes",
                summary.org_refs_unresolved, summary.orgs_unknown_iso
            );
        }

        let forward = Csr::from_sorted_pairs(articles.len(), &pairs);
        drop(pairs);
        let reverse = forward.transpose();

        Ok(CorpusIndex {
            articles,
            article_ids,
            fields,
            venues,
            authors,
            orgs,
            org_records,
            forward,
            reverse,
            config: config.clone(),
            summary,
        })
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    pub fn article(&self, id: ArticleId) -> &Article {
        &self.articles[id.index()]
    }

    pub fn article_id(&self, key: &str) -> Option<ArticleId> {
        self.article_ids.get(key).copied()
    }

    pub fn fields(&self) -> &Interner {
        &self.fields
    }

    pub fn venues(&self) -> &Interner {
        &self.venues
    }

    pub fn authors(&self) -> &Interner {
        &self.authors
    }

    pub fn orgs(&self) -> &Interner {
        &self.orgs
    }

    /// Citing → cited adjacency.
    pub fn forward(&self) -> &Csr {
        &self.forward
    }

    /// Cited → citing adjacency.
    pub fn reverse(&self) -> &Csr {
        &self.reverse
    }

    pub fn num_edges(&self) -> usize {
        self.forward.num_edges()
    }

    /// Edge date: the citing article's publication date.
    pub fn edge_date(&self, citing: u32) -> NaiveDate {
        self.articles[citing as usize].date
    }

    pub fn config(&self) -> &IngestConfig {
        &self.config
    }

    pub fn summary(&self) -> &IngestSummary {
        &self.summary
    }

    /// Latest publication date in the corpus (the data horizon).
    pub fn max_date(&self) -> Option<NaiveDate> {
        self.articles.iter().map(|a| a.date).max()
    }

    pub fn min_date(&self) -> Option<NaiveDate> {
        self.articles.iter().map(|a| a.date).min()
    }

    /// Reconstructs records equivalent to the indexed corpus: deduplicated
    /// fields/orgs and edges, self-citations and unknown references removed.
    pub fn to_records(&self) -> CorpusRecords {
        let articles = self
            .articles
            .iter()
            .map(|a| ArticleRecord {
                id: a.key.clone(),
                date: a.date,
                venue: a.venue.map(|v| self.venues.name(v).to_owned()),
                fields: a
                    .fields
                    .iter()
                    .map(|&f| self.fields.name(f).to_owned())
                    .collect(),
                authors: a
                    .authorships
                    .iter()
                    .map(|(au, os)| AuthorRecord {
                        a: self.authors.name(*au).to_owned(),
                        orgs: os.iter().map(|&o| self.orgs.name(o).to_owned()).collect(),
                    })
                    .collect(),
            })
            .collect();
        let citations = self
            .forward
            .iter_edges()
            .map(|(s, t)| {
                CitationRecord::new(
                    self.articles[s as usize].key.clone(),
                    self.articles[t as usize].key.clone(),
                )
            })
            .collect();
        CorpusRecords {
            articles,
            citations,
            orgs: self.org_records.clone(),
        }
    }
}

/// Structural problem with a record, if any.
pub(crate) fn article_problem(rec: &ArticleRecord) -> Option<&'static str> {
    if rec.id.is_empty() {
        Some("empty article id")
    } else if rec.fields.is_empty() {
        Some("empty field list")
    } else if rec.authors.is_empty() {
        Some("empty author list")
    } else if rec.authors.iter().any(|a| a.orgs.is_empty()) {
        Some("author without organization")
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn article(id: &str, date: &str, fields: &[&str], orgs: &[&[&str]]) -> ArticleRecord {
        ArticleRecord {
            id: id.into(),
            date: date.parse().unwrap(),
            venue: None,
            fields: fields.iter().map(|s| s.to_string()).collect(),
            authors: orgs
                .iter()
                .enumerate()
                .map(|(i, os)| AuthorRecord {
                    a: format!("{id}-a{i}"),
                    orgs: os.iter().map(|s| s.to_string()).collect(),
                })
                .collect(),
        }
    }

    fn orgs() -> Vec<OrgRecord> {
        ["US", "CN", "DE", "FR"]
            .iter()
            .flat_map(|c| (0..3).map(move |i| OrgRecord::new(format!("{c}{i}"), *c)))
            .collect()
    }

    #[test]
    fn empty_corpus() {
        let idx = CorpusIndex::build(CorpusRecords::default(), &IngestConfig::default()).unwrap();
        assert_eq!(idx.len(), 0);
        assert_eq!(idx.num_edges(), 0);
    }

    #[test]
    fn duplicate_edges_are_removed() {
        let records = CorpusRecords {
            articles: vec![
                article("A", "2000-01-01", &["AI"], &[&["US0"]]),
                article("B", "1999-01-01", &["AI"], &[&["US0"]]),
                article("C", "1998-01-01", &["AI"], &[&["US0"]]),
            ],
            citations: vec![
                CitationRecord::new("A", "B"),
                CitationRecord::new("A", "B"),
                CitationRecord::new("B", "C"),
            ],
            orgs: orgs(),
        };
        let idx = CorpusIndex::build(records, &IngestConfig::default()).unwrap();
        assert_eq!(idx.num_edges(), 2);
        assert_eq!(idx.summary().citations_duplicate, 1);
    }

    #[test]
    fn self_citations_and_unknown_targets_dropped() {
        let records = CorpusRecords {
            articles: vec![article("A", "2000-01-01", &["AI"], &[&["US0"]])],
            citations: vec![CitationRecord::new("A", "A"), CitationRecord::new("A", "Z")],
            orgs: orgs(),
        };
        let idx = CorpusIndex::build(records.clone(), &IngestConfig::default()).unwrap();
        assert_eq!(idx.num_edges(), 0);
        assert_eq!(idx.summary().citations_rejected_self, 1);
        assert_eq!(idx.summary().citations_rejected_unknown_article, 1);

        let strict = IngestConfig {
            unknown_citation: UnknownCitationPolicy::Fail,
            ..Default::default()
        };
        let err = CorpusIndex::build(records, &strict).unwrap_err();
        assert!(matches!(err, Error::UnknownArticle { ref key, .. } if key == "Z"));
    }

    #[test]
    fn explicit_edge_date_must_match() {
        let mut c = CitationRecord::new("A", "B");
        c.date = Some("2001-01-01".parse().unwrap());
        let records = CorpusRecords {
            articles: vec![
                article("A", "2000-01-01", &["AI"], &[&["US0"]]),
                article("B", "1999-01-01", &["AI"], &[&["US0"]]),
            ],
            citations: vec![c],
            orgs: orgs(),
        };
        assert!(matches!(
            CorpusIndex::build(records, &IngestConfig::default()),
            Err(Error::EdgeDateMismatch { .. })
        ));
    }

    #[test]
    fn countries_reduced_to_unique_set() {
        // two US co-authors, three Chinese, one German
        let rec = article(
            "A",
            "2000-01-01",
            &["AI"],
            &[&["US0"], &["US1"], &["CN0"], &["CN1"], &["CN2"], &["DE0"]],
        );
        let table = OrgTable::from_records(&orgs());
        let got: Vec<_> = derive_countries(&rec, &table)
            .into_iter()
            .map(|c| c.to_string())
            .collect();
        assert_eq!(got, ["CN", "DE", "US"]);
    }

    #[test]
    fn single_org_country() {
        let rec = article("A", "2000-01-01", &["AI"], &[&["FR0"]]);
        let table = OrgTable::from_records(&orgs());
        assert_eq!(
            derive_countries(&rec, &table).into_iter().collect::<Vec<_>>(),
            vec![CountryCode::parse("FR").unwrap()]
        );
    }

    #[test]
    fn unknown_orgs_leave_article_without_affiliation() {
        let mut org_records = orgs();
        org_records.push(OrgRecord::new("bad", "Z9"));
        let records = CorpusRecords {
            articles: vec![article("A", "2000-01-01", &["AI"], &[&["bad", "nowhere"]])],
            citations: vec![],
            orgs: org_records,
        };
        let idx = CorpusIndex::build(records, &IngestConfig::default()).unwrap();
        assert!(idx.articles()[0].countries.is_empty());
        assert_eq!(idx.summary().articles_without_affiliation, 1);
        assert_eq!(idx.summary().orgs_unknown_iso, 1);
        assert_eq!(idx.summary().org_refs_unresolved, 1);
    }

    #[test]
    fn many_same_country_orgs_one_country() {
        let mut org_records = orgs();
        for i in 0..10 {
            org_records.push(OrgRecord::new(format!("x{i}"), "US"));
        }
        let names: Vec<String> = (0..10).map(|i| format!("x{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let records = CorpusRecords {
            articles: vec![article("A", "2000-01-01", &["AI"], &[&refs])],
            citations: vec![],
            orgs: org_records,
        };
        let idx = CorpusIndex::build(records, &IngestConfig::default()).unwrap();
        let a = &idx.articles()[0];
        assert_eq!(a.countries.len(), 1);
        assert_eq!(a.org_count(), 10);
    }

    #[test]
    fn window_flags_but_keeps_articles() {
        let records = CorpusRecords {
            articles: vec![
                article("old", "1975-06-01", &["AI"], &[&["US0"]]),
                article("new", "2020-01-01", &["AI"], &[&["US0"]]),
                article("in", "2019-12-31", &["AI"], &[&["US0"]]),
            ],
            citations: vec![],
            orgs: orgs(),
        };
        let idx = CorpusIndex::build(records, &IngestConfig::default()).unwrap();
        assert_eq!(idx.len(), 3);
        assert_eq!(idx.summary().articles_excluded_by_window, 2);
        assert!(!idx.articles()[2].excluded);
    }

    #[test]
    fn fields_and_orgs_deduplicated() {
        let rec = article("A", "2000-01-01", &["AI", "CS", "AI"], &[&["US0", "US0", "CN0"]]);
        let records = CorpusRecords {
            articles: vec![rec],
            citations: vec![],
            orgs: orgs(),
        };
        let idx = CorpusIndex::build(records, &IngestConfig::default()).unwrap();
        let a = &idx.articles()[0];
        assert_eq!(a.fields.len(), 2);
        assert_eq!(a.authorships[0].1.len(), 2);
    }

    #[test]
    fn invalid_records_rejected() {
        let mut rec = article("A", "2000-01-01", &[], &[&["US0"]]);
        let build = |r: ArticleRecord| {
            CorpusIndex::build(
                CorpusRecords {
                    articles: vec![r],
                    ..Default::default()
                },
                &IngestConfig::default(),
            )
        };
        assert!(build(rec.clone()).is_err());
        rec.fields = vec!["AI".into()];
        rec.authors[0].orgs.clear();
        assert!(build(rec.clone()).is_err());
        rec.authors.clear();
        assert!(build(rec).is_err());
    }
}
