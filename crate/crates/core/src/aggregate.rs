//! Marginal saliency per (field, region, year) and conditional saliency
//! ratios.
//!
//! In probabilistic mode an article's mass is split evenly over its distinct
//! (raw field, country) pairs, so summing cells over any partition of
//! field × country space gives back the total mass. In full-count mode every
//! touched (report field, region) cell receives the article's whole mass,
//! matching the counting panels.

use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};
use crate::fields::ResolvedFields;
use crate::panel::{ordered_accumulate, Attribution, Panel, PanelSpec};
use crate::regions::{Region, RegionTable};
use crate::saliency::SaliencyVector;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttributionMode {
    #[default]
    Probabilistic,
    FullCount,
}

impl fmt::Display for AttributionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttributionMode::Probabilistic => "probabilistic",
            AttributionMode::FullCount => "full-count",
        })
    }
}

impl FromStr for AttributionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "probabilistic" => Ok(AttributionMode::Probabilistic),
            "full-count" => Ok(AttributionMode::FullCount),
            _ => Err(Error::Config(format!("unknown attribution mode {s:?}"))),
        }
    }
}

/// Saliency mass attributed to each panel cell.
pub fn marginal_saliency(
    vec: &SaliencyVector,
    corpus: &CorpusIndex,
    table: &RegionTable,
    fields: &ResolvedFields,
    spec: &PanelSpec,
    mode: AttributionMode,
) -> Panel {
    let att = Attribution::new(corpus, table, fields, spec);
    let mut panel = att.panel();
    fill_saliency(&att, &mut panel, vec, mode);
    panel
}

/// Fills `panel.saliency` in place; `panel` must have been built from the
/// same corpus, fields and spec.
pub fn attach_saliency(
    panel: &mut Panel,
    vec: &SaliencyVector,
    corpus: &CorpusIndex,
    table: &RegionTable,
    fields: &ResolvedFields,
    spec: &PanelSpec,
    mode: AttributionMode,
) {
    let att = Attribution::new(corpus, table, fields, spec);
    fill_saliency(&att, panel, vec, mode);
}

fn fill_saliency(att: &Attribution, panel: &mut Panel, vec: &SaliencyVector, mode: AttributionMode) {
    let arts = att.corpus.articles();
    let shape = &*panel;
    let values = ordered_accumulate::<f64, _>(arts.len(), panel.pub_count.len(), |acc, i| {
        let a = &arts[i];
        let m = vec.mass[i];
        if !att.counts(a) || a.countries.is_empty() || m == 0.0 {
            return;
        }
        let year = a.year();
        match mode {
            AttributionMode::Probabilistic => {
                let w = m / (a.fields.len() * a.countries.len()) as f64;
                for &f in &a.fields {
                    for &c in &a.countries {
                        for &rf in &att.fields.raw_to_report[f as usize] {
                            for &r in att.regions.regions_of_country(c) {
                                acc[shape.offset(rf as usize, r as usize, year)] += w;
                            }
                        }
                    }
                }
            }
            AttributionMode::FullCount => {
                let fs = att.fields.report_fields_of(&a.fields);
                let rs = att.regions.regions_of(&a.countries);
                for &f in &fs {
                    for &r in &rs {
                        acc[shape.offset(f as usize, r as usize, year)] += m;
                    }
                }
            }
        }
    });
    panel.saliency = Some((mode, values));
}

/// Half-open range of years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Period {
    pub start: i32,
    pub end: i32,
}

impl Period {
    pub fn year(y: i32) -> Self {
        Period { start: y, end: y + 1 }
    }

    pub fn span(start: i32, end: i32) -> Self {
        Period { start, end }
    }

    pub fn years(&self) -> Range<i32> {
        self.start..self.end
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.end == self.start + 1 {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}-{}", self.start, self.end - 1)
        }
    }
}

/// Calendar decades `[1980, 1990)`, … intersected with `years`.
pub fn decades(years: Range<i32>) -> Vec<Period> {
    let mut out = Vec::new();
    if years.is_empty() {
        return out;
    }
    let mut start = years.start;
    while start < years.end {
        let next = (start.div_euclid(10) + 1) * 10;
        out.push(Period::span(start, next.min(years.end)));
        start = next;
    }
    out
}

/// One side of a ratio: (field, region, period).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellSelector {
    pub field: String,
    pub region: Region,
    pub period: Period,
}

impl CellSelector {
    pub fn new(field: &str, region: Region, period: Period) -> Self {
        CellSelector {
            field: field.to_owned(),
            region,
            period,
        }
    }
}

/// Saliency summed over a selector's period.
pub fn selected_saliency(panel: &Panel, sel: &CellSelector) -> Result<f64> {
    let (_, s) = panel
        .saliency
        .as_ref()
        .ok_or_else(|| Error::Config("panel has no saliency".into()))?;
    let f = panel
        .field_index(&sel.field)
        .ok_or_else(|| Error::Config(format!("unknown report field {:?}", sel.field)))?;
    let r = panel
        .region_index(&sel.region)
        .ok_or_else(|| Error::UnknownRegion(sel.region.to_string()))?;
    let mut total = 0.0;
    for y in sel.period.years() {
        if !panel.years.contains(&y) {
            return Err(Error::Config(format!("year {y} outside panel range")));
        }
        total += s[panel.offset(f, r, y)];
    }
    Ok(total)
}

/// Conditional saliency `s(F, C, t) / s(F, W, t)` for `C ⊆ W`. Both cells
/// must come from a probabilistic-mode panel. Zero over zero is 0.
pub fn saliency_ratio(
    numerator: &CellSelector,
    denominator: &CellSelector,
    panel: &Panel,
    table: &RegionTable,
) -> Result<f64> {
    match panel.mode() {
        Some(AttributionMode::Probabilistic) => {}
        Some(found) => {
            return Err(Error::ModeMismatch {
                expected: AttributionMode::Probabilistic.to_string(),
                found: found.to_string(),
            })
        }
        None => return Err(Error::Config("panel has no saliency".into())),
    }
    if numerator.field != denominator.field || numerator.period != denominator.period {
        return Err(Error::Config(
            "ratio numerator and denominator must share field and period".into(),
        ));
    }
    if !table.is_subset(&numerator.region, &denominator.region)? {
        return Err(Error::NotSubset {
            numerator: numerator.region.to_string(),
            denominator: denominator.region.to_string(),
        });
    }
    let num = selected_saliency(panel, numerator)?;
    let den = selected_saliency(panel, denominator)?;
    if den == 0.0 {
        return if num == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::InconsistentRatio { numerator: num })
        };
    }
    Ok(num / den)
}

/// Within-region share of full-count mass, `C ⊆ W`. Reported next to the
/// conditional ratios; it is not a probability (overlapping attribution).
pub fn full_count_share(
    numerator: &CellSelector,
    denominator: &CellSelector,
    panel: &Panel,
    table: &RegionTable,
) -> Result<f64> {
    if panel.mode() != Some(AttributionMode::FullCount) {
        return Err(Error::ModeMismatch {
            expected: AttributionMode::FullCount.to_string(),
            found: panel.mode().map(|m| m.to_string()).unwrap_or_else(|| "none".into()),
        });
    }
    if !table.is_subset(&numerator.region, &denominator.region)? {
        return Err(Error::NotSubset {
            numerator: numerator.region.to_string(),
            denominator: denominator.region.to_string(),
        });
    }
    let num = selected_saliency(panel, numerator)?;
    let den = selected_saliency(panel, denominator)?;
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub field: String,
    pub numerator_region: String,
    pub denominator_region: String,
    pub period: String,
    pub ratio: f64,
    pub mode: AttributionMode,
}

/// Ratios of every panel region contained in a strictly larger panel region
/// (world, income group or aggregate), per field and period.
pub fn ratio_report(panel: &Panel, table: &RegionTable, periods: &[Period]) -> Result<Vec<RatioRow>> {
    let mode = panel
        .mode()
        .ok_or_else(|| Error::Config("panel has no saliency".into()))?;
    let mut pairs = Vec::new();
    for num in &panel.regions {
        for den in &panel.regions {
            if num == den || matches!(den, Region::Country(_)) {
                continue;
            }
            if table.is_subset(num, den)? && !table.is_subset(den, num)? {
                pairs.push((num.clone(), den.clone()));
            }
        }
    }
    pairs.sort_by_key(|(a, b)| (a.to_string(), b.to_string()));
    let mut fields = panel.fields.clone();
    fields.sort();
    let mut rows = Vec::new();
    for field in &fields {
        for (num, den) in &pairs {
            for &period in periods {
                let n = CellSelector::new(field, num.clone(), period);
                let d = CellSelector::new(field, den.clone(), period);
                let ratio = match mode {
                    AttributionMode::Probabilistic => saliency_ratio(&n, &d, panel, table)?,
                    AttributionMode::FullCount => full_count_share(&n, &d, panel, table)?,
                };
                rows.push(RatioRow {
                    field: field.clone(),
                    numerator_region: num.to_string(),
                    denominator_region: den.to_string(),
                    period: period.to_string(),
                    ratio,
                    mode,
                });
            }
        }
    }
    Ok(rows)
}

/// `field,numerator_region,denominator_region,period,ratio,mode`.
pub fn write_ratio_csv<W: Write>(rows: &[RatioRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["field", "numerator_region", "denominator_region", "period", "ratio", "mode"])?;
    for r in rows {
        out.write_record([
            r.field.as_str(),
            &r.numerator_region,
            &r.denominator_region,
            &r.period,
            &r.ratio.to_string(),
            &r.mode.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("ratios.csv", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ArticleRecord, AuthorRecord, CorpusRecords, CountryCode, IngestConfig, OrgRecord};
    use crate::fields::FieldGrouping;
    use crate::panel::default_regions;
    use crate::regions::IncomeGroup;
    use crate::saliency::{IterationStats, SaliencyMode};
    use chrono::NaiveDate;

    fn setup(fields: &[&str], orgs: &[&str], mass: f64) -> (CorpusIndex, SaliencyVector) {
        let mut articles = vec![ArticleRecord {
            id: "A".into(),
            date: NaiveDate::from_ymd_opt(1995, 3, 3).unwrap(),
            venue: None,
            fields: fields.iter().map(|s| s.to_string()).collect(),
            authors: orgs
                .iter()
                .map(|o| AuthorRecord {
                    a: o.to_string(),
                    orgs: vec![o.to_string()],
                })
                .collect(),
        }];
        articles.push(ArticleRecord {
            id: "B".into(),
            date: NaiveDate::from_ymd_opt(1995, 3, 3).unwrap(),
            venue: None,
            fields: vec!["Other".into()],
            authors: vec![AuthorRecord {
                a: "b".into(),
                orgs: vec!["FR".into()],
            }],
        });
        let corpus = CorpusIndex::build(
            CorpusRecords {
                articles,
                citations: vec![],
                orgs: ["US", "CN", "FR"].iter().map(|c| OrgRecord::new(*c, *c)).collect(),
            },
            &IngestConfig::default(),
        )
        .unwrap();
        let vec = SaliencyVector {
            cutoff: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
            horizon_years: 5,
            mode: SaliencyMode::Oracle,
            mass: vec![mass, 1.0 - mass],
            stats: IterationStats::default(),
        };
        (corpus, vec)
    }

    fn panel(corpus: &CorpusIndex, vec: &SaliencyVector, mode: AttributionMode) -> Panel {
        let table = RegionTable::bundled();
        let fields = FieldGrouping::identity(corpus).resolve(corpus);
        let spec = PanelSpec {
            regions: default_regions(&table, corpus, true),
            years: 1990..2000,
            observation_cutoff: None,
        };
        marginal_saliency(vec, corpus, &table, &fields, &spec, mode)
    }

    fn country(s: &str) -> Region {
        Region::Country(CountryCode::parse(s).unwrap())
    }

    #[test]
    fn single_pair_gets_all_mass() {
        let (c, v) = setup(&["AI"], &["US"], 0.4);
        let p = panel(&c, &v, AttributionMode::Probabilistic);
        assert!((p.saliency("AI", &country("US"), 1995).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn split_versus_full_attribution() {
        let (c, v) = setup(&["AI", "CS"], &["US", "CN"], 0.4);
        let p = panel(&c, &v, AttributionMode::Probabilistic);
        let f = panel(&c, &v, AttributionMode::FullCount);
        for field in ["AI", "CS"] {
            for cc in ["US", "CN"] {
                assert!((p.saliency(field, &country(cc), 1995).unwrap() - 0.1).abs() < 1e-15);
                assert!((f.saliency(field, &country(cc), 1995).unwrap() - 0.4).abs() < 1e-15);
            }
        }
        // ALL aggregates both fields: probabilistic sums the pairs, full-count counts once.
        assert!((p.saliency("ALL", &Region::World, 1995).unwrap() - 1.0).abs() < 1e-15);
        assert!((f.saliency("ALL", &country("US"), 1995).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn self_conditioning_is_one() {
        let (c, v) = setup(&["AI"], &["US", "CN"], 0.4);
        let p = panel(&c, &v, AttributionMode::Probabilistic);
        let table = RegionTable::bundled();
        let s = CellSelector::new("AI", Region::World, Period::year(1995));
        assert_eq!(saliency_ratio(&s, &s, &p, &table).unwrap(), 1.0);
        let us = CellSelector::new("AI", country("US"), Period::year(1995));
        assert!((saliency_ratio(&us, &s, &p, &table).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ratio_errors() {
        let (c, v) = setup(&["AI"], &["US", "CN"], 0.4);
        let table = RegionTable::bundled();
        let p = panel(&c, &v, AttributionMode::Probabilistic);
        let hic = CellSelector::new("AI", Region::Group(IncomeGroup::High), Period::year(1995));
        let us = CellSelector::new("AI", country("US"), Period::year(1995));
        assert!(matches!(saliency_ratio(&hic, &us, &p, &table), Err(Error::NotSubset { .. })));
        let f = panel(&c, &v, AttributionMode::FullCount);
        assert!(matches!(saliency_ratio(&us, &hic, &f, &table), Err(Error::ModeMismatch { .. })));
        // zero over zero
        let z1 = CellSelector::new("AI", country("US"), Period::year(1991));
        let z2 = CellSelector::new("AI", Region::World, Period::year(1991));
        assert_eq!(saliency_ratio(&z1, &z2, &p, &table).unwrap(), 0.0);
    }

    #[test]
    fn decade_periods() {
        assert_eq!(
            decades(1980..2020),
            vec![
                Period::span(1980, 1990),
                Period::span(1990, 2000),
                Period::span(2000, 2010),
                Period::span(2010, 2020)
            ]
        );
        assert_eq!(decades(1985..1992), vec![Period::span(1985, 1990), Period::span(1990, 1992)]);
        assert_eq!(Period::span(1980, 1990).to_string(), "1980-1989");
        assert_eq!(Period::year(1995).to_string(), "1995");
    }

    #[test]
    fn ratio_report_includes_bellwethers() {
        let (c, v) = setup(&["AI"], &["US", "CN"], 0.4);
        let table = RegionTable::bundled();
        let p = panel(&c, &v, AttributionMode::Probabilistic);
        let rows = ratio_report(&p, &table, &decades(1990..2000)).unwrap();
        let find = |n: &str, d: &str| {
            rows.iter()
                .find(|r| r.field == "AI" && r.numerator_region == n && r.denominator_region == d)
                .map(|r| r.ratio)
        };
        assert_eq!(find("US", "HIC"), Some(1.0));
        assert_eq!(find("CN", "UMC"), Some(1.0));
        assert!((find("HIC", "WORLD").unwrap() - 0.5).abs() < 1e-15);
        assert!(find("WORLD", "HIC").is_none());
        let mut buf = Vec::new();
        write_ratio_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("field,numerator_region,denominator_region,period,ratio,mode\n"));
    }
}
