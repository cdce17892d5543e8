//! Line-delimited corpus files.
//!
//! * `articles.jsonl`: one JSON object per line.
//! * `citations.tsv`: `citing<TAB>cited[<TAB>date]`, no header.
//! * `orgs.tsv`: `org<TAB>iso2`, with header line `org\tiso2`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use super::{
    article_problem, ArticleRecord, CitationRecord, CorpusIndex, CorpusRecords, IngestConfig,
    OrgRecord,
};
use crate::error::{Error, Result};

pub const ARTICLES_FILE: &str = "articles.jsonl";
pub const CITATIONS_FILE: &str = "citations.tsv";
pub const ORGS_FILE: &str = "orgs.tsv";
pub const ORGS_HEADER: &str = "org\tiso2";

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Numbered, non-blank lines with trailing `\r` removed.
fn lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect()
}

pub fn parse_articles(text: &str, file: &str) -> Result<Vec<ArticleRecord>> {
    lines(text)
        .par_iter()
        .map(|&(line, l)| {
            let rec: ArticleRecord = serde_json::from_str(l).map_err(|e| Error::Malformed {
                file: file.to_owned(),
                line,
                message: e.to_string(),
            })?;
            if let Some(problem) = article_problem(&rec) {
                return Err(Error::Malformed {
                    file: file.to_owned(),
                    line,
                    message: problem.to_owned(),
                });
            }
            Ok(rec)
        })
        .collect()
}

pub fn parse_citations(text: &str, file: &str) -> Result<Vec<CitationRecord>> {
    lines(text)
        .par_iter()
        .map(|&(line, l)| {
            let malformed = |message: String| Error::Malformed {
                file: file.to_owned(),
                line,
                message,
            };
            let cols: Vec<&str> = l.split('\t').collect();
            let (citing, cited, date) = match cols.as_slice() {
                [a, b] => (*a, *b, None),
                [a, b, d] => {
                    let date = d
                        .parse()
                        .map_err(|e| malformed(format!("bad edge date {d:?}: {e}")))?;
                    (*a, *b, Some(date))
                }
                _ => {
                    return Err(malformed(format!(
                        "expected 2 or 3 tab-separated columns, found {}",
                        cols.len()
                    )))
                }
            };
            if citing.is_empty() || cited.is_empty() {
                return Err(malformed("empty article key".into()));
            }
            Ok(CitationRecord {
                citing: citing.to_owned(),
                cited: cited.to_owned(),
                date,
                line,
            })
        })
        .collect()
}

pub fn parse_orgs(text: &str, file: &str) -> Result<Vec<OrgRecord>> {
    let mut rows = lines(text).into_iter();
    match rows.next() {
        Some((_, header)) if header == ORGS_HEADER => {}
        Some((line, _)) => {
            return Err(Error::Malformed {
                file: file.to_owned(),
                line,
                message: format!("expected header {ORGS_HEADER:?}"),
            })
        }
        None => return Ok(Vec::new()),
    }
    rows.map(|(line, l)| match l.split('\t').collect::<Vec<_>>().as_slice() {
        [org, iso] if !org.is_empty() => Ok(OrgRecord::new(*org, *iso)),
        _ => Err(Error::Malformed {
            file: file.to_owned(),
            line,
            message: "expected org<TAB>iso2".into(),
        }),
    })
    .collect()
}

/// Reads the three corpus files. Parsing runs in parallel across and within files.
pub fn read_records(articles: &Path, citations: &Path, orgs: &Path) -> Result<CorpusRecords> {
    let ((a, c), o) = rayon::join(
        || {
            rayon::join(
                || read(articles).and_then(|t| parse_articles(&t, &file_label(articles))),
                || read(citations).and_then(|t| parse_citations(&t, &file_label(citations))),
            )
        },
        || read(orgs).and_then(|t| parse_orgs(&t, &file_label(orgs))),
    );
    Ok(CorpusRecords {
        articles: a?,
        citations: c?,
        orgs: o?,
    })
}

/// Reads, validates and indexes a corpus from its three files.
pub fn ingest_corpus(
    articles: &Path,
    citations: &Path,
    orgs: &Path,
    config: &IngestConfig,
) -> Result<CorpusIndex> {
    let records = read_records(articles, citations, orgs)?;
    CorpusIndex::build(records, config).map_err(|e| match e {
        Error::UnknownArticle { line, key, .. } => Error::UnknownArticle {
            file: file_label(citations),
            line,
            key,
        },
        Error::EdgeDateMismatch {
            line,
            given,
            expected,
            ..
        } => Error::EdgeDateMismatch {
            file: file_label(citations),
            line,
            given,
            expected,
        },
        Error::Malformed { line, message, .. } => Error::Malformed {
            file: file_label(articles),
            line,
            message,
        },
        other => other,
    })
}

/// Reads `articles.jsonl`, `citations.tsv` and `orgs.tsv` from one directory.
pub fn ingest_dir(dir: &Path, config: &IngestConfig) -> Result<CorpusIndex> {
    ingest_corpus(
        &dir.join(ARTICLES_FILE),
        &dir.join(CITATIONS_FILE),
        &dir.join(ORGS_FILE),
        config,
    )
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes records in the exact file formats `ingest_corpus` reads.
pub fn write_records(dir: &Path, records: &CorpusRecords) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let path = dir.join(ARTICLES_FILE);
    let mut w = create(&path)?;
    for a in &records.articles {
        serde_json::to_writer(&mut w, a)?;
        w.write_all(b"\n").map_err(io(&path))?;
    }
    w.flush().map_err(io(&path))?;

    let path = dir.join(CITATIONS_FILE);
    let mut w = create(&path)?;
    for c in &records.citations {
        match c.date {
            Some(d) => writeln!(w, "{}\t{}\t{}", c.citing, c.cited, d),
            None => writeln!(w, "{}\t{}", c.citing, c.cited),
        }
        .map_err(io(&path))?;
    }
    w.flush().map_err(io(&path))?;

    let path = dir.join(ORGS_FILE);
    let mut w = create(&path)?;
    writeln!(w, "{ORGS_HEADER}").map_err(io(&path))?;
    for o in &records.orgs {
        writeln!(w, "{}\t{}", o.org, o.iso2).map_err(io(&path))?;
    }
    w.flush().map_err(io(&path))?;
    Ok(())
}
