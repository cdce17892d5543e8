//! Mapping from a corpus's raw field keys to report fields.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};

pub const STEM_FIELDS_TSV: &str = include_str!("../data/stem_fields.tsv");

/// Name of the aggregate that [`FieldGrouping::identity`] adds over all fields.
pub const ALL_FIELDS: &str = "ALL";

/// Report field → set of raw field keys. A raw key may feed several report
/// fields (e.g. a top-level field and an aggregate over all of them).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FieldGrouping {
    groups: BTreeMap<String, BTreeSet<String>>,
}

impl FieldGrouping {
    /// Parses `report_field<TAB>raw_field` rows; a header line is optional.
    pub fn parse(text: &str) -> Result<Self> {
        let mut groups: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() || (i == 0 && line == "report_field\traw_field") {
                continue;
            }
            match line.split('\t').collect::<Vec<_>>().as_slice() {
                [report, raw] if !report.is_empty() && !raw.is_empty() => {
                    groups
                        .entry((*report).to_owned())
                        .or_default()
                        .insert((*raw).to_owned());
                }
                _ => {
                    return Err(Error::Malformed {
                        file: "fields.tsv".into(),
                        line: i + 1,
                        message: "expected report_field<TAB>raw_field".into(),
                    })
                }
            }
        }
        Ok(FieldGrouping { groups })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// The twelve top-level STEM fields plus a `STEM` aggregate.
    pub fn stem() -> Self {
        Self::parse(STEM_FIELDS_TSV).expect("bundled field grouping is valid")
    }

    /// Each corpus field as its own report field, plus [`ALL_FIELDS`].
    pub fn identity(corpus: &CorpusIndex) -> Self {
        let mut groups = BTreeMap::new();
        for name in corpus.fields().names() {
            groups.insert(name.clone(), BTreeSet::from([name.clone()]));
        }
        groups.insert(
            ALL_FIELDS.to_owned(),
            corpus.fields().names().iter().cloned().collect(),
        );
        FieldGrouping { groups }
    }

    pub fn insert(&mut self, report: &str, raw: impl IntoIterator<Item = String>) {
        self.groups.entry(report.to_owned()).or_default().extend(raw);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.groups.keys().map(String::as_str)
    }

    pub fn members(&self, report: &str) -> Option<&BTreeSet<String>> {
        self.groups.get(report)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Resolves the grouping against a corpus's interned field ids.
    pub fn resolve(&self, corpus: &CorpusIndex) -> ResolvedFields {
        let names: Vec<String> = self.groups.keys().cloned().collect();
        let mut raw_to_report = vec![Vec::new(); corpus.fields().len()];
        for (ri, raw_set) in self.groups.values().enumerate() {
            for raw in raw_set {
                if let Some(id) = corpus.fields().get(raw) {
                    raw_to_report[id as usize].push(ri as u32);
                }
            }
        }
        ResolvedFields {
            names,
            raw_to_report,
        }
    }
}

/// Grouping bound to corpus field ids.
#[derive(Debug, Clone)]
pub struct ResolvedFields {
    pub names: Vec<String>,
    /// Indexed by corpus field id: report field indices containing it.
    pub raw_to_report: Vec<Vec<u32>>,
}

impl ResolvedFields {
    /// Report fields touched by an article with the given raw field ids,
    /// sorted and deduplicated.
    pub fn report_fields_of(&self, raw: &[u32]) -> Vec<u32> {
        let mut out: Vec<u32> = raw
            .iter()
            .flat_map(|&f| self.raw_to_report[f as usize].iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stem_grouping_has_twelve_fields_and_aggregate() {
        let g = FieldGrouping::stem();
        assert_eq!(g.len(), 13);
        assert_eq!(g.members("STEM").unwrap().len(), 12);
        assert!(g.members("Materials Science").is_some());
    }

    #[test]
    fn malformed_row() {
        assert!(FieldGrouping::parse("STEM\n").is_err());
    }
}
