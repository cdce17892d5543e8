//! Article saliency: eigenvalue centrality of the citation graph as it will
//! look a fixed horizon after the evaluation cutoff.
//!
//! * [`oracle_saliency`] reads the future directly from the corpus. The walk
//!   runs over every article published up to `T + H`; only edges into
//!   articles published by `T` are kept, so later articles act purely as
//!   citing sources. The stationary mass is then restricted to articles
//!   published by `T` and renormalized.
//! * [`truncated_saliency`] is the same computation with `H = 0`.
//! * [`predict_saliency`] rescales the truncated vector with a fitted
//!   [`CohortModel`] when the corpus does not reach `T + H`.
//!
//! Mass flows from citing to cited articles; each citing article splits its
//! mass evenly over its references.

mod cohort;
mod power;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use chrono::{Months, NaiveDate};
use serde::{Deserialize, Serialize};

pub use cohort::{default_training_cutoffs, fit_cohort_model, CohortModel, MIN_BUCKET_SAMPLES};
pub use power::{chunked_sum, stationary, CentralityConfig, IterationStats, CHUNK};

use crate::corpus::{ArticleId, CorpusIndex, Csr};
use crate::error::{Error, Result};

pub const DEFAULT_HORIZON_YEARS: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SaliencyMode {
    Oracle,
    Predicted,
}

impl fmt::Display for SaliencyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SaliencyMode::Oracle => "oracle",
            SaliencyMode::Predicted => "predicted",
        })
    }
}

impl std::str::FromStr for SaliencyMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(SaliencyMode::Oracle),
            "predicted" => Ok(SaliencyMode::Predicted),
            _ => Err(Error::Config(format!("unknown saliency mode {s:?}"))),
        }
    }
}

/// Probability mass over a corpus's articles for one cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyVector {
    pub cutoff: NaiveDate,
    pub horizon_years: u32,
    pub mode: SaliencyMode,
    /// Indexed by [`ArticleId`]; zero for articles published after `cutoff`.
    pub mass: Vec<f64>,
    pub stats: IterationStats,
}

impl SaliencyVector {
    pub fn get(&self, id: ArticleId) -> f64 {
        self.mass[id.index()]
    }

    pub fn total(&self) -> f64 {
        chunked_sum(&self.mass)
    }

    /// Venue saliency: sum over the venue's articles.
    pub fn by_venue(&self, corpus: &CorpusIndex) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for (a, &m) in corpus.articles().iter().zip(&self.mass) {
            if let Some(v) = a.venue {
                *out.entry(corpus.venues().name(v).to_owned()).or_insert(0.0) += m;
            }
        }
        out
    }

    /// Author saliency: sum over the articles the author appears on.
    pub fn by_author(&self, corpus: &CorpusIndex) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for (a, &m) in corpus.articles().iter().zip(&self.mass) {
            let mut seen: Vec<u32> = a.authorships.iter().map(|(au, _)| *au).collect();
            seen.sort_unstable();
            seen.dedup();
            for au in seen {
                *out.entry(corpus.authors().name(au).to_owned()).or_insert(0.0) += m;
            }
        }
        out
    }

    /// Writes `article_id,mass,mode,cutoff`, sorted by descending mass with
    /// ties broken by id. Only articles published by the cutoff are listed.
    pub fn write_csv<W: Write>(&self, corpus: &CorpusIndex, w: W) -> Result<()> {
        let mut rows: Vec<(usize, f64)> = corpus
            .articles()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.date <= self.cutoff)
            .map(|(i, _)| (i, self.mass[i]))
            .collect();
        rows.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| corpus.articles()[a.0].key.cmp(&corpus.articles()[b.0].key))
        });
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["article_id", "mass", "mode", "cutoff"])?;
        let mode = self.mode.to_string();
        let cutoff = self.cutoff.to_string();
        for (i, m) in rows {
            out.write_record([corpus.articles()[i].key.as_str(), &m.to_string(), &mode, &cutoff])?;
        }
        out.flush().map_err(|e| Error::io("saliency.csv", e))?;
        Ok(())
    }

    pub fn save(&self, corpus: &CorpusIndex, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(corpus, std::io::BufWriter::new(f))
    }

    /// Reads a vector written by [`SaliencyVector::write_csv`].
    pub fn read_csv<R: std::io::Read>(corpus: &CorpusIndex, horizon_years: u32, r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut mass = vec![0.0; corpus.len()];
        let mut header: Option<(SaliencyMode, NaiveDate)> = None;
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let line = i + 2;
            let bad = |message: String| Error::Malformed {
                file: "saliency.csv".into(),
                line,
                message,
            };
            if row.len() != 4 {
                return Err(bad("expected 4 columns".into()));
            }
            let id = corpus
                .article_id(&row[0])
                .ok_or_else(|| bad(format!("unknown article {}", &row[0])))?;
            let m: f64 = row[1].parse().map_err(|_| bad(format!("bad mass {:?}", &row[1])))?;
            let mode: SaliencyMode = row[2].parse()?;
            let cutoff: NaiveDate = row[3].parse().map_err(|_| bad(format!("bad cutoff {:?}", &row[3])))?;
            match header {
                None => header = Some((mode, cutoff)),
                Some(h) if h != (mode, cutoff) => return Err(bad("mixed mode or cutoff".into())),
                _ => {}
            }
            mass[id.index()] = m;
        }
        let (mode, cutoff) = header.ok_or_else(|| Error::Malformed {
            file: "saliency.csv".into(),
            line: 1,
            message: "no rows".into(),
        })?;
        Ok(SaliencyVector {
            cutoff,
            horizon_years,
            mode,
            mass,
            stats: IterationStats::default(),
        })
    }

    pub fn load(corpus: &CorpusIndex, horizon_years: u32, path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(corpus, horizon_years, std::io::BufReader::new(f))
    }
}

/// `date` plus `years` calendar years (Feb 29 clamps to Feb 28).
pub fn add_years(date: NaiveDate, years: u32) -> NaiveDate {
    date.checked_add_months(Months::new(12 * years))
        .unwrap_or(NaiveDate::MAX)
}

/// Subgraph for one evaluation: walk nodes are articles published by
/// `walk_end`; edges into articles published after `cutoff` are dropped.
struct Snapshot {
    /// Walk-local index → corpus article index.
    nodes: Vec<u32>,
    incoming: Csr,
    out_degree: Vec<u32>,
}

fn snapshot(corpus: &CorpusIndex, cutoff: NaiveDate, walk_end: NaiveDate) -> Snapshot {
    let arts = corpus.articles();
    let mut local = vec![u32::MAX; arts.len()];
    let mut nodes = Vec::new();
    for (i, a) in arts.iter().enumerate() {
        if a.date <= walk_end {
            local[i] = nodes.len() as u32;
            nodes.push(i as u32);
        }
    }
    // Edge date is the citing date, so citing ∈ walk implies the edge is
    // inside the horizon.
    let fwd = corpus.forward();
    let rev = corpus.reverse();
    let out_degree: Vec<u32> = nodes
        .iter()
        .map(|&u| {
            fwd.neighbors(u)
                .iter()
                .filter(|&&v| arts[v as usize].date <= cutoff)
                .count() as u32
        })
        .collect();
    let mut pairs = Vec::new();
    for (lv, &v) in nodes.iter().enumerate() {
        if arts[v as usize].date > cutoff {
            continue;
        }
        for &u in rev.neighbors(v) {
            let lu = local[u as usize];
            if lu != u32::MAX {
                pairs.push((lv as u32, lu));
            }
        }
    }
    // rev rows are sorted by corpus id and local ids are monotone in corpus id.
    let incoming = Csr::from_sorted_pairs(nodes.len(), &pairs);
    Snapshot {
        nodes,
        incoming,
        out_degree,
    }
}

/// Centrality over the walk up to `cutoff + horizon`, restricted to articles
/// published by `cutoff` and renormalized.
fn centrality(
    corpus: &CorpusIndex,
    cutoff: NaiveDate,
    horizon_years: u32,
    cfg: &CentralityConfig,
) -> Result<(Vec<f64>, IterationStats)> {
    cfg.validate()?;
    let walk_end = add_years(cutoff, horizon_years);
    let snap = snapshot(corpus, cutoff, walk_end);
    let (x, stats) = stationary(&snap.incoming, &snap.out_degree, cfg);
    if !stats.converged {
        log::warn!(
            "centrality at {cutoff} did not converge in {} iterations (residual {:e})",
            stats.iterations,
            stats.residual
        );
    }
    let mut mass = vec![0.0; corpus.len()];
    let arts = corpus.articles();
    for (l, &i) in snap.nodes.iter().enumerate() {
        if arts[i as usize].date <= cutoff {
            mass[i as usize] = x[l];
        }
    }
    let total = chunked_sum(&mass);
    if total > 0.0 {
        mass.iter_mut().for_each(|m| *m /= total);
    }
    Ok((mass, stats))
}

/// Whether the corpus reaches `cutoff + horizon`, i.e. oracle mode is possible.
pub fn has_lookahead(corpus: &CorpusIndex, cutoff: NaiveDate, horizon_years: u32) -> bool {
    corpus
        .max_date()
        .is_some_and(|d| d >= add_years(cutoff, horizon_years))
}

/// Future centrality read directly from the corpus. The caller is
/// responsible for checking [`has_lookahead`]; without it the result is the
/// partially observed centrality.
pub fn oracle_saliency(
    corpus: &CorpusIndex,
    cutoff: NaiveDate,
    horizon_years: u32,
    cfg: &CentralityConfig,
) -> Result<SaliencyVector> {
    let (mass, stats) = centrality(corpus, cutoff, horizon_years, cfg)?;
    Ok(SaliencyVector {
        cutoff,
        horizon_years,
        mode: SaliencyMode::Oracle,
        mass,
        stats,
    })
}

/// Centrality using only edges observed by `cutoff`.
pub fn truncated_saliency(
    corpus: &CorpusIndex,
    cutoff: NaiveDate,
    cfg: &CentralityConfig,
) -> Result<SaliencyVector> {
    oracle_saliency(corpus, cutoff, 0, cfg)
}

/// Truncated centrality rescaled by the cohort model and renormalized.
pub fn predict_saliency(
    corpus: &CorpusIndex,
    cutoff: NaiveDate,
    model: &CohortModel,
    cfg: &CentralityConfig,
) -> Result<SaliencyVector> {
    let truncated = truncated_saliency(corpus, cutoff, cfg)?;
    let mut mass = truncated.mass;
    for (i, a) in corpus.articles().iter().enumerate() {
        if a.date <= cutoff {
            mass[i] *= model.multiplier_for(corpus, ArticleId(i as u32), cutoff);
        }
    }
    let total = chunked_sum(&mass);
    if total > 0.0 {
        mass.iter_mut().for_each(|m| *m /= total);
    }
    Ok(SaliencyVector {
        cutoff,
        horizon_years: model.horizon_years,
        mode: SaliencyMode::Predicted,
        mass,
        stats: truncated.stats,
    })
}

/// Oracle when the corpus has the lookahead, otherwise a cohort-model
/// prediction trained on the latest cutoffs that do. Returns the fitted model
/// (if any) and a warning when prediction was forced.
pub fn auto_saliency(
    corpus: &CorpusIndex,
    cutoff: NaiveDate,
    horizon_years: u32,
    cfg: &CentralityConfig,
    training_cutoffs: usize,
) -> Result<(SaliencyVector, Option<CohortModel>, Option<String>)> {
    if has_lookahead(corpus, cutoff, horizon_years) {
        return Ok((oracle_saliency(corpus, cutoff, horizon_years, cfg)?, None, None));
    }
    let data_end = corpus.max_date().unwrap_or(cutoff).min(cutoff);
    let cutoffs = default_training_cutoffs(corpus, data_end, horizon_years, training_cutoffs);
    let model = fit_cohort_model(corpus, &cutoffs, horizon_years, cfg)?;
    let v = predict_saliency(corpus, cutoff, &model, cfg)?;
    let warning = format!(
        "corpus ends {} before cutoff {cutoff} + {horizon_years}y; using predicted saliency",
        corpus.max_date().map(|d| d.to_string()).unwrap_or_else(|| "empty".into())
    );
    Ok((v, Some(model), Some(warning)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ArticleRecord, AuthorRecord, CitationRecord, CorpusRecords, IngestConfig, OrgRecord};

    fn art(id: &str, date: &str) -> ArticleRecord {
        ArticleRecord {
            id: id.into(),
            date: date.parse().unwrap(),
            venue: Some("V".into()),
            fields: vec!["AI".into()],
            authors: vec![AuthorRecord {
                a: format!("{id}-x"),
                orgs: vec!["o".into()],
            }],
        }
    }

    fn corpus(arts: Vec<ArticleRecord>, edges: &[(&str, &str)]) -> CorpusIndex {
        CorpusIndex::build(
            CorpusRecords {
                articles: arts,
                citations: edges.iter().map(|(a, b)| CitationRecord::new(*a, *b)).collect(),
                orgs: vec![OrgRecord::new("o", "US")],
            },
            &IngestConfig::default(),
        )
        .unwrap()
    }

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn chain_ordering() {
        let c = corpus(
            vec![art("A", "2000-01-01"), art("B", "2001-01-01"), art("C", "2002-01-01")],
            &[("B", "A"), ("C", "B")],
        );
        let v = oracle_saliency(&c, d("2010-01-01"), 5, &CentralityConfig::default()).unwrap();
        let m = |k: &str| v.get(c.article_id(k).unwrap());
        assert!(m("A") > m("B") && m("B") > m("C"));
        assert!((v.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn isolated_articles_uniform() {
        let c = corpus(
            (0..4).map(|i| art(&format!("a{i}"), "2000-05-05")).collect(),
            &[],
        );
        let v = oracle_saliency(&c, d("2000-12-31"), 5, &CentralityConfig::default()).unwrap();
        for m in &v.mass {
            assert!((m - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn only_articles_by_cutoff_carry_mass() {
        let c = corpus(
            vec![art("A", "2000-01-01"), art("B", "2003-01-01"), art("C", "2008-01-01")],
            &[("B", "A"), ("C", "B"), ("C", "A")],
        );
        let v = oracle_saliency(&c, d("2001-01-01"), 5, &CentralityConfig::default()).unwrap();
        assert_eq!(v.get(c.article_id("B").unwrap()), 0.0);
        assert_eq!(v.get(c.article_id("C").unwrap()), 0.0);
        assert!((v.get(c.article_id("A").unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn future_citers_shift_mass_within_horizon_only() {
        // X and Y are both visible at the cutoff; Z cites X two years later,
        // W cites Y ten years later (outside a 5-year horizon).
        let c = corpus(
            vec![
                art("X", "2000-01-01"),
                art("Y", "2000-01-01"),
                art("Z", "2002-01-01"),
                art("W", "2010-01-01"),
            ],
            &[("Z", "X"), ("W", "Y")],
        );
        let cfg = CentralityConfig::default();
        let t = truncated_saliency(&c, d("2000-12-31"), &cfg).unwrap();
        let o = oracle_saliency(&c, d("2000-12-31"), 5, &cfg).unwrap();
        let (x, y) = (c.article_id("X").unwrap(), c.article_id("Y").unwrap());
        assert!((t.get(x) - t.get(y)).abs() < 1e-15);
        assert!(o.get(x) > o.get(y));
        assert!((o.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grouping_by_venue_and_author() {
        let c = corpus(vec![art("A", "2000-01-01"), art("B", "2001-01-01")], &[("B", "A")]);
        let v = oracle_saliency(&c, d("2005-01-01"), 0, &CentralityConfig::default()).unwrap();
        let venues = v.by_venue(&c);
        assert!((venues["V"] - 1.0).abs() < 1e-12);
        let authors = v.by_author(&c);
        assert_eq!(authors.len(), 2);
        assert!((authors["A-x"] - v.get(c.article_id("A").unwrap())).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let c = corpus(
            vec![art("A", "2000-01-01"), art("B", "2001-01-01"), art("C", "2001-01-01"), art("D", "2009-01-01")],
            &[("B", "A"), ("C", "A"), ("C", "B")],
        );
        let v = truncated_saliency(&c, d("2005-12-31"), &CentralityConfig::default()).unwrap();
        let mut buf = Vec::new();
        v.write_csv(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("article_id,mass,mode,cutoff\nA,"));
        assert_eq!(text.lines().count(), 4);
        let back = SaliencyVector::read_csv(&c, 0, buf.as_slice()).unwrap();
        assert_eq!(back.mass, v.mass);
        assert_eq!(back.mode, SaliencyMode::Oracle);
    }

    #[test]
    fn add_years_clamps_leap_day() {
        assert_eq!(add_years(d("2016-02-29"), 5), d("2021-02-28"));
        assert_eq!(add_years(d("2014-12-31"), 5), d("2019-12-31"));
    }
}
