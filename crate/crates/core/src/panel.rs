//! Output and citation-count panels per (report field, region, year).
//!
//! Attribution is full counting: an article adds one to every (field, region)
//! cell it touches, however many authors or affiliations it has there.
//! Citation cells are keyed by the *cited* article's publication year.

use std::io::Write;
use std::ops::{AddAssign, Range};

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::aggregate::AttributionMode;
use crate::corpus::{Article, CorpusIndex, CountryCode};
use crate::error::{Error, Result};
use crate::fields::ResolvedFields;
use crate::regions::{IncomeGroup, Region, RegionTable};
use crate::saliency::CHUNK;

/// Chunks per batch in [`ordered_accumulate`]; bounds peak memory.
const BATCH: usize = 32;

/// Accumulates per-item contributions into a dense vector. Items are split
/// into fixed chunks, each folded sequentially, and chunk results are added
/// in chunk order, so floating-point sums do not depend on thread count.
pub fn ordered_accumulate<T, F>(n_items: usize, len: usize, fold: F) -> Vec<T>
where
    T: Copy + Default + AddAssign + Send + Sync,
    F: Fn(&mut [T], usize) + Sync,
{
    let mut total = vec![T::default(); len];
    let chunks: Vec<Range<usize>> = (0..n_items)
        .step_by(CHUNK)
        .map(|s| s..(s + CHUNK).min(n_items))
        .collect();
    for batch in chunks.chunks(BATCH) {
        let partials: Vec<Vec<T>> = batch
            .par_iter()
            .map(|r| {
                let mut acc = vec![T::default(); len];
                for i in r.clone() {
                    fold(&mut acc, i);
                }
                acc
            })
            .collect();
        for p in partials {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
    }
    total
}

/// Regions a panel is computed for, with a country → region lookup.
#[derive(Debug, Clone)]
pub struct RegionIndex {
    pub regions: Vec<Region>,
    lookup: std::collections::HashMap<CountryCode, Vec<u32>>,
}

impl RegionIndex {
    pub fn new(regions: Vec<Region>, table: &RegionTable, corpus: &CorpusIndex) -> Self {
        let mut countries: Vec<CountryCode> = corpus
            .articles()
            .iter()
            .flat_map(|a| a.countries.iter().copied())
            .collect();
        countries.sort_unstable();
        countries.dedup();
        let lookup = countries
            .into_iter()
            .map(|c| {
                let idx = regions
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| table.contains(r, c))
                    .map(|(i, _)| i as u32)
                    .collect();
                (c, idx)
            })
            .collect();
        RegionIndex { regions, lookup }
    }

    /// Region indices touched by an article, sorted and deduplicated.
    pub fn regions_of(&self, countries: &[CountryCode]) -> Vec<u32> {
        let mut out: Vec<u32> = countries
            .iter()
            .flat_map(|c| self.lookup.get(c).into_iter().flatten().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Region indices containing one country.
    pub fn regions_of_country(&self, c: CountryCode) -> &[u32] {
        self.lookup.get(&c).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn position(&self, r: &Region) -> Option<usize> {
        self.regions.iter().position(|x| x == r)
    }
}

/// World, the four income groups, unknown, and every table aggregate;
/// optionally each country seen in the corpus.
pub fn default_regions(table: &RegionTable, corpus: &CorpusIndex, with_countries: bool) -> Vec<Region> {
    let mut out = vec![Region::World];
    out.extend(IncomeGroup::ALL.iter().map(|&g| Region::Group(g)));
    out.push(Region::Unknown);
    out.extend(table.aggregates().keys().map(|k| Region::Aggregate(k.clone())));
    if with_countries {
        let mut cs: Vec<CountryCode> = corpus
            .articles()
            .iter()
            .flat_map(|a| a.countries.iter().copied())
            .collect();
        cs.sort_unstable();
        cs.dedup();
        out.extend(cs.into_iter().map(Region::Country));
    }
    out
}

#[derive(Debug, Clone)]
pub struct PanelSpec {
    pub regions: Vec<Region>,
    pub years: Range<i32>,
    /// Citation edges dated after this are ignored.
    pub observation_cutoff: Option<NaiveDate>,
}

/// One row of a panel.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PanelCell {
    pub field: String,
    pub region: Region,
    pub year: i32,
    pub pub_count: u64,
    pub citation_count: u64,
    pub saliency: Option<f64>,
    pub saliency_ratio: Option<f64>,
}

/// Dense panel, indexed `[field][region][year]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub fields: Vec<String>,
    pub regions: Vec<Region>,
    pub years: Range<i32>,
    pub pub_count: Vec<u64>,
    pub citation_count: Vec<u64>,
    pub saliency: Option<(AttributionMode, Vec<f64>)>,
    /// Per year: in-range articles without any resolvable affiliation.
    pub unaffiliated: Vec<u64>,
}

impl Panel {
    pub(crate) fn empty(fields: Vec<String>, regions: Vec<Region>, years: Range<i32>) -> Self {
        let n = fields.len() * regions.len() * years.len();
        let ny = years.len();
        Panel {
            fields,
            regions,
            years,
            pub_count: vec![0; n],
            citation_count: vec![0; n],
            saliency: None,
            unaffiliated: vec![0; ny],
        }
    }

    pub fn num_years(&self) -> usize {
        self.years.len()
    }

    #[inline]
    pub fn offset(&self, field: usize, region: usize, year: i32) -> usize {
        (field * self.regions.len() + region) * self.num_years() + (year - self.years.start) as usize
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f == name)
    }

    pub fn region_index(&self, r: &Region) -> Option<usize> {
        self.regions.iter().position(|x| x == r)
    }

    fn locate(&self, field: &str, region: &Region, year: i32) -> Option<usize> {
        if !self.years.contains(&year) {
            return None;
        }
        Some(self.offset(self.field_index(field)?, self.region_index(region)?, year))
    }

    pub fn pub_count(&self, field: &str, region: &Region, year: i32) -> Option<u64> {
        self.locate(field, region, year).map(|i| self.pub_count[i])
    }

    pub fn citation_count(&self, field: &str, region: &Region, year: i32) -> Option<u64> {
        self.locate(field, region, year).map(|i| self.citation_count[i])
    }

    pub fn saliency(&self, field: &str, region: &Region, year: i32) -> Option<f64> {
        let i = self.locate(field, region, year)?;
        self.saliency.as_ref().map(|(_, s)| s[i])
    }

    pub fn mode(&self) -> Option<AttributionMode> {
        self.saliency.as_ref().map(|(m, _)| *m)
    }

    /// All cells, sorted by (field, region name, year).
    pub fn cells(&self) -> Vec<PanelCell> {
        let mut region_order: Vec<usize> = (0..self.regions.len()).collect();
        region_order.sort_by_key(|&r| self.regions[r].to_string());
        let mut field_order: Vec<usize> = (0..self.fields.len()).collect();
        field_order.sort_by(|&a, &b| self.fields[a].cmp(&self.fields[b]));
        let world = self.region_index(&Region::World);
        let mut out = Vec::with_capacity(self.pub_count.len());
        for &f in &field_order {
            for &r in &region_order {
                for year in self.years.clone() {
                    let i = self.offset(f, r, year);
                    let (saliency, saliency_ratio) = match &self.saliency {
                        Some((mode, s)) => {
                            let ratio = match (mode, world) {
                                (AttributionMode::Probabilistic, Some(w)) => {
                                    let den = s[self.offset(f, w, year)];
                                    Some(if den > 0.0 { s[i] / den } else { 0.0 })
                                }
                                _ => None,
                            };
                            (Some(s[i]), ratio)
                        }
                        None => (None, None),
                    };
                    out.push(PanelCell {
                        field: self.fields[f].clone(),
                        region: self.regions[r].clone(),
                        year,
                        pub_count: self.pub_count[i],
                        citation_count: self.citation_count[i],
                        saliency,
                        saliency_ratio,
                    });
                }
            }
        }
        out
    }

    /// `field,region,year,pub_count,citation_count,saliency,saliency_ratio`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "field",
            "region",
            "year",
            "pub_count",
            "citation_count",
            "saliency",
            "saliency_ratio",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in self.cells() {
            out.write_record([
                c.field,
                c.region.to_string(),
                c.year.to_string(),
                c.pub_count.to_string(),
                c.citation_count.to_string(),
                opt(c.saliency),
                opt(c.saliency_ratio),
            ])?;
        }
        out.flush().map_err(|e| Error::io("panels.csv", e))?;
        Ok(())
    }
}

/// Per-article attribution targets shared by every panel computation.
pub(crate) struct Attribution<'a> {
    pub corpus: &'a CorpusIndex,
    pub fields: &'a ResolvedFields,
    pub regions: RegionIndex,
    pub years: Range<i32>,
}

impl<'a> Attribution<'a> {
    pub fn new(corpus: &'a CorpusIndex, table: &RegionTable, fields: &'a ResolvedFields, spec: &PanelSpec) -> Self {
        Attribution {
            corpus,
            fields,
            regions: RegionIndex::new(spec.regions.clone(), table, corpus),
            years: spec.years.clone(),
        }
    }

    pub fn panel(&self) -> Panel {
        Panel::empty(self.fields.names.clone(), self.regions.regions.clone(), self.years.clone())
    }

    /// Article in the analysis window and year range.
    pub fn counts(&self, a: &Article) -> bool {
        !a.excluded && self.years.contains(&a.year())
    }
}

fn touched_offsets(att: &Attribution, panel: &Panel, a: &Article) -> Vec<usize> {
    let fs = att.fields.report_fields_of(&a.fields);
    let rs = att.regions.regions_of(&a.countries);
    let mut out = Vec::with_capacity(fs.len() * rs.len());
    for &f in &fs {
        for &r in &rs {
            out.push(panel.offset(f as usize, r as usize, a.year()));
        }
    }
    out
}

/// Publication counts: one per touched (field, region) for the article's year.
pub fn count_output(corpus: &CorpusIndex, table: &RegionTable, fields: &ResolvedFields, spec: &PanelSpec) -> Panel {
    let att = Attribution::new(corpus, table, fields, spec);
    let mut panel = att.panel();
    fill_output(&att, &mut panel);
    panel
}

/// Citation counts: edges received by articles published in the cell's year.
pub fn count_citations(corpus: &CorpusIndex, table: &RegionTable, fields: &ResolvedFields, spec: &PanelSpec) -> Panel {
    let att = Attribution::new(corpus, table, fields, spec);
    let mut panel = att.panel();
    fill_citations(&att, &mut panel, spec.observation_cutoff);
    panel
}

/// Both count panels in one structure.
pub fn count_panels(corpus: &CorpusIndex, table: &RegionTable, fields: &ResolvedFields, spec: &PanelSpec) -> Panel {
    let att = Attribution::new(corpus, table, fields, spec);
    let mut panel = att.panel();
    fill_output(&att, &mut panel);
    fill_citations(&att, &mut panel, spec.observation_cutoff);
    panel
}

fn fill_output(att: &Attribution, panel: &mut Panel) {
    let arts = att.corpus.articles();
    let shape = &*panel;
    let counts = ordered_accumulate::<u64, _>(arts.len(), panel.pub_count.len(), |acc, i| {
        let a = &arts[i];
        if att.counts(a) {
            for o in touched_offsets(att, shape, a) {
                acc[o] += 1;
            }
        }
    });
    let years = att.years.clone();
    let unaffiliated = ordered_accumulate::<u64, _>(arts.len(), years.len(), |acc, i| {
        let a = &arts[i];
        if att.counts(a) && a.countries.is_empty() {
            acc[(a.year() - years.start) as usize] += 1;
        }
    });
    panel.pub_count = counts;
    panel.unaffiliated = unaffiliated;
}

/// In-edges of article `i` whose citing article is dated on or before `cutoff`.
pub(crate) fn citations_received(corpus: &CorpusIndex, i: usize, cutoff: Option<NaiveDate>) -> u64 {
    let rev = corpus.reverse();
    match cutoff {
        None => rev.degree(i as u32) as u64,
        Some(t) => rev
            .neighbors(i as u32)
            .iter()
            .filter(|&&u| corpus.articles()[u as usize].date <= t)
            .count() as u64,
    }
}

fn fill_citations(att: &Attribution, panel: &mut Panel, cutoff: Option<NaiveDate>) {
    let arts = att.corpus.articles();
    let shape = &*panel;
    let counts = ordered_accumulate::<u64, _>(arts.len(), panel.citation_count.len(), |acc, i| {
        let a = &arts[i];
        if !att.counts(a) {
            return;
        }
        let received = citations_received(att.corpus, i, cutoff);
        if received == 0 {
            return;
        }
        for o in touched_offsets(att, shape, a) {
            acc[o] += received;
        }
    });
    panel.citation_count = counts;
}
