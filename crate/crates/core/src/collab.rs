//! Transregional collaboration counts and shares per region pair.
//!
//! An article counts toward pair (A, B) when its country set meets both A
//! and B. Author multiplicity plays no role. Impact is attributed in full
//! (full-count saliency), and shares are taken against each region's own
//! full-count totals for the same field and year.

use std::io::Write;
use std::ops::Range;

use chrono::NaiveDate;
use serde::Serialize;

use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};
use crate::fields::ResolvedFields;
use crate::panel::{citations_received, ordered_accumulate, RegionIndex};
use crate::regions::{Region, RegionTable};
use crate::saliency::SaliencyVector;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegionPair {
    pub a: Region,
    pub b: Region,
}

impl RegionPair {
    pub fn new(a: Region, b: Region) -> Self {
        RegionPair { a, b }
    }

    /// Parses `A-B` or `A:B`; names resolve through the table.
    pub fn parse(s: &str, table: &RegionTable) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .or_else(|| s.split_once('-'))
            .ok_or_else(|| Error::Config(format!("region pair {s:?} is not of the form A-B")))?;
        Ok(RegionPair::new(table.resolve(a.trim())?, table.resolve(b.trim())?))
    }
}

/// Default pairs: every unordered pair of table aggregates that do not overlap.
pub fn default_pairs(table: &RegionTable) -> Vec<RegionPair> {
    let names: Vec<&String> = table.aggregates().keys().collect();
    let mut out = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let pair = RegionPair::new(Region::Aggregate((*a).clone()), Region::Aggregate((*b).clone()));
            if table.is_disjoint(&pair.a, &pair.b).unwrap_or(false) {
                out.push(pair);
            }
        }
    }
    out
}

/// Rejects pairs whose regions overlap (including a region paired with itself).
pub fn validate_pairs(pairs: &[RegionPair], table: &RegionTable) -> Result<()> {
    for p in pairs {
        if p.a == p.b || !table.is_disjoint(&p.a, &p.b)? {
            return Err(Error::OverlappingPair {
                a: p.a.to_string(),
                b: p.b.to_string(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollabCell {
    pub field: String,
    pub region_a: String,
    pub region_b: String,
    pub year: i32,
    pub pub_count: u64,
    pub citation_count: u64,
    pub saliency: Option<f64>,
    pub share_out_a: f64,
    pub share_out_b: f64,
    pub share_imp_a: Option<f64>,
    pub share_imp_b: Option<f64>,
    pub share_cit_a: f64,
    pub share_cit_b: f64,
}

/// Counting inputs for [`collab_panels`].
#[derive(Debug, Clone)]
pub struct CollabSpec {
    pub pairs: Vec<RegionPair>,
    pub years: Range<i32>,
    pub observation_cutoff: Option<NaiveDate>,
}

fn share(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        (num / den).min(1.0)
    } else {
        0.0
    }
}

/// Cells ordered by field name, pair (input order) and year.
pub fn collab_panels(
    corpus: &CorpusIndex,
    table: &RegionTable,
    fields: &ResolvedFields,
    spec: &CollabSpec,
    vec: Option<&SaliencyVector>,
) -> Result<Vec<CollabCell>> {
    validate_pairs(&spec.pairs, table)?;
    let mut regions: Vec<Region> = Vec::new();
    let mut pair_slots = Vec::with_capacity(spec.pairs.len());
    for p in &spec.pairs {
        let mut slot = |r: &Region| match regions.iter().position(|x| x == r) {
            Some(i) => i,
            None => {
                regions.push(r.clone());
                regions.len() - 1
            }
        };
        let ia = slot(&p.a);
        let ib = slot(&p.b);
        pair_slots.push((ia as u32, ib as u32));
    }
    let index = RegionIndex::new(regions.clone(), table, corpus);
    let (nr, np) = (regions.len(), spec.pairs.len());
    let slots = nr + np;
    let ny = spec.years.len();
    let nf = fields.names.len();
    let len = nf * slots * ny;
    let offset = |f: usize, s: usize, y: i32| (f * slots + s) * ny + (y - spec.years.start) as usize;

    let arts = corpus.articles();
    let touched = |i: usize| -> Option<(Vec<u32>, Vec<usize>)> {
        let a = &arts[i];
        if a.excluded || !spec.years.contains(&a.year()) || a.countries.is_empty() {
            return None;
        }
        let rs = index.regions_of(&a.countries);
        if rs.is_empty() {
            return None;
        }
        let mut s: Vec<usize> = rs.iter().map(|&r| r as usize).collect();
        for (k, &(ia, ib)) in pair_slots.iter().enumerate() {
            if rs.binary_search(&ia).is_ok() && rs.binary_search(&ib).is_ok() {
                s.push(nr + k);
            }
        }
        Some((fields.report_fields_of(&a.fields), s))
    };

    // pub counts in [0, len), citation counts in [len, 2 len)
    let counts = ordered_accumulate::<u64, _>(arts.len(), 2 * len, |acc, i| {
        let Some((fs, ss)) = touched(i) else { return };
        let cites = citations_received(corpus, i, spec.observation_cutoff);
        let y = arts[i].year();
        for &f in &fs {
            for &s in &ss {
                let o = offset(f as usize, s, y);
                acc[o] += 1;
                acc[len + o] += cites;
            }
        }
    });
    let mass = vec.map(|v| {
        ordered_accumulate::<f64, _>(arts.len(), len, |acc, i| {
            let m = v.mass[i];
            if m == 0.0 {
                return;
            }
            let Some((fs, ss)) = touched(i) else { return };
            let y = arts[i].year();
            for &f in &fs {
                for &s in &ss {
                    acc[offset(f as usize, s, y)] += m;
                }
            }
        })
    });

    let mut order: Vec<usize> = (0..nf).collect();
    order.sort_by(|&a, &b| fields.names[a].cmp(&fields.names[b]));
    let mut out = Vec::with_capacity(nf * np * ny);
    for f in order {
        for (k, p) in spec.pairs.iter().enumerate() {
            let (ia, ib) = (pair_slots[k].0 as usize, pair_slots[k].1 as usize);
            for y in spec.years.clone() {
                let (o, oa, ob) = (offset(f, nr + k, y), offset(f, ia, y), offset(f, ib, y));
                let pc = counts[o];
                let cc = counts[len + o];
                let sal = mass.as_ref().map(|m| m[o]);
                out.push(CollabCell {
                    field: fields.names[f].clone(),
                    region_a: p.a.to_string(),
                    region_b: p.b.to_string(),
                    year: y,
                    pub_count: pc,
                    citation_count: cc,
                    saliency: sal,
                    share_out_a: share(pc as f64, counts[oa] as f64),
                    share_out_b: share(pc as f64, counts[ob] as f64),
                    share_imp_a: mass.as_ref().map(|m| share(m[o], m[oa])),
                    share_imp_b: mass.as_ref().map(|m| share(m[o], m[ob])),
                    share_cit_a: share(cc as f64, counts[len + oa] as f64),
                    share_cit_b: share(cc as f64, counts[len + ob] as f64),
                });
            }
        }
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `field,region_a,region_b,year,pub_count,saliency,share_out_a,share_out_b,share_imp_a,share_imp_b`
/// followed by the citation-based columns `citation_count,share_cit_a,share_cit_b`.
pub fn write_collab_csv<W: Write>(cells: &[CollabCell], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "field",
        "region_a",
        "region_b",
        "year",
        "pub_count",
        "saliency",
        "share_out_a",
        "share_out_b",
        "share_imp_a",
        "share_imp_b",
        "citation_count",
        "share_cit_a",
        "share_cit_b",
    ])?;
    for c in cells {
        out.write_record([
            c.field.clone(),
            c.region_a.clone(),
            c.region_b.clone(),
            c.year.to_string(),
            c.pub_count.to_string(),
            opt(c.saliency),
            c.share_out_a.to_string(),
            c.share_out_b.to_string(),
            opt(c.share_imp_a),
            opt(c.share_imp_b),
            c.citation_count.to_string(),
            c.share_cit_a.to_string(),
            c.share_cit_b.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io("collab.csv", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ArticleRecord, AuthorRecord, CorpusRecords, IngestConfig, OrgRecord};
    use crate::fields::FieldGrouping;
    use crate::regions::IncomeGroup;

    fn rec(id: &str, orgs: &[&str]) -> ArticleRecord {
        ArticleRecord {
            id: id.into(),
            date: NaiveDate::from_ymd_opt(2001, 5, 5).unwrap(),
            venue: None,
            fields: vec!["AI".into()],
            authors: orgs
                .iter()
                .enumerate()
                .map(|(i, o)| AuthorRecord {
                    a: format!("{id}-{i}"),
                    orgs: vec![o.to_string()],
                })
                .collect(),
        }
    }

    fn corpus(articles: Vec<ArticleRecord>) -> CorpusIndex {
        let orgs = ["US", "CN", "DE", "FR"].iter().map(|c| OrgRecord::new(*c, *c)).collect();
        CorpusIndex::build(
            CorpusRecords {
                articles,
                citations: vec![],
                orgs,
            },
            &IngestConfig::default(),
        )
        .unwrap()
    }

    fn agg(s: &str) -> Region {
        Region::Aggregate(s.into())
    }

    fn pairs() -> Vec<RegionPair> {
        vec![
            RegionPair::new(agg("US"), agg("EU")),
            RegionPair::new(agg("US"), agg("CN")),
            RegionPair::new(agg("EU"), agg("CN")),
        ]
    }

    fn run(c: &CorpusIndex, pairs: Vec<RegionPair>) -> Result<Vec<CollabCell>> {
        let table = RegionTable::bundled();
        let fields = FieldGrouping::identity(c).resolve(c);
        let spec = CollabSpec {
            pairs,
            years: 2000..2003,
            observation_cutoff: None,
        };
        collab_panels(c, &table, &fields, &spec, None)
    }

    fn cell<'a>(cells: &'a [CollabCell], a: &str, b: &str) -> &'a CollabCell {
        cells
            .iter()
            .find(|c| c.field == "AI" && c.region_a == a && c.region_b == b && c.year == 2001)
            .unwrap()
    }

    #[test]
    fn three_country_article_counts_once_per_pair() {
        let c = corpus(vec![rec("x", &["US", "US", "CN", "DE", "DE"])]);
        let cells = run(&c, pairs()).unwrap();
        for (a, b) in [("US", "EU"), ("US", "CN"), ("EU", "CN")] {
            assert_eq!(cell(&cells, a, b).pub_count, 1);
            assert_eq!(cell(&cells, a, b).share_out_a, 1.0);
        }
    }

    #[test]
    fn domestic_article_touches_no_pair() {
        let c = corpus(vec![rec("x", &["US"])]);
        let cells = run(&c, pairs()).unwrap();
        assert!(cells.iter().all(|c| c.pub_count == 0));
    }

    #[test]
    fn pairs_are_symmetric() {
        let c = corpus(vec![
            rec("x", &["US", "CN"]),
            rec("y", &["CN"]),
            rec("z", &["FR", "CN"]),
        ]);
        let fwd = run(&c, pairs()).unwrap();
        let rev = run(&c, pairs().into_iter().map(|p| RegionPair::new(p.b, p.a)).collect()).unwrap();
        for (f, r) in fwd.iter().zip(&rev) {
            assert_eq!(f.pub_count, r.pub_count);
            assert_eq!(f.share_out_a, r.share_out_b);
        }
        let uc = cell(&fwd, "US", "CN");
        assert_eq!(uc.pub_count, 1);
        assert_eq!(uc.share_out_a, 1.0);
        assert!((uc.share_out_b - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn overlapping_pair_is_rejected() {
        let c = corpus(vec![]);
        let bad = vec![RegionPair::new(agg("US"), Region::Group(IncomeGroup::High))];
        assert!(matches!(run(&c, bad), Err(Error::OverlappingPair { .. })));
        assert!(matches!(
            run(&c, vec![RegionPair::new(agg("US"), agg("US"))]),
            Err(Error::OverlappingPair { .. })
        ));
    }

    #[test]
    fn default_pairs_are_the_three_aggregates() {
        let t = RegionTable::bundled();
        let names: Vec<String> = default_pairs(&t)
            .iter()
            .map(|p| format!("{}-{}", p.a, p.b))
            .collect();
        assert_eq!(names, ["CN-EU", "CN-US", "EU-US"]);
        assert_eq!(RegionPair::parse("US-CN", &t).unwrap(), RegionPair::new(agg("US"), agg("CN")));
    }
}
