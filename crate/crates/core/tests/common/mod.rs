#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rescon_core::corpus::CorpusRecords;
use rescon_core::synth::{CountrySpec, CouplingSpec, FieldSpec, GeneratorConfig};
use rescon_core::{CountryCode, Region, RegionTable};

pub fn country(code: &str, n: f64) -> CountrySpec {
    CountrySpec {
        code: code.into(),
        articles_per_year: n,
        growth_per_decade: 1.0,
        fitness: 1.0,
        field_weights: None,
    }
}

/// Several countries across income groups plus one code outside the region
/// table, two fields per article half the time, and cross-country coupling.
pub fn mixed_config(seed: u64, per_year: f64) -> GeneratorConfig {
    let shares = [("US", 0.3), ("CN", 0.25), ("DE", 0.15), ("FR", 0.1), ("IN", 0.1), ("NG", 0.05), ("ZZ", 0.05)];
    GeneratorConfig {
        seed,
        start_year: 2000,
        end_year: 2010,
        countries: shares.iter().map(|(c, s)| country(c, per_year * s)).collect(),
        fields: ["AI", "Medicine", "Physics"]
            .iter()
            .map(|f| FieldSpec {
                name: f.to_string(),
                weight: 1.0,
            })
            .collect(),
        second_field_prob: 0.5,
        coupling: vec![
            CouplingSpec { from: "CN".into(), to: "US".into(), p: 0.2 },
            CouplingSpec { from: "US".into(), to: "DE".into(), p: 0.1 },
            CouplingSpec { from: "IN".into(), to: "ZZ".into(), p: 0.1 },
            CouplingSpec { from: "DE".into(), to: "FR".into(), p: 0.3 },
        ],
        accrual: vec![0.5, 1.0, 1.0, 0.8, 0.6, 0.4],
        refs_mean: 6.0,
        fitness_sigma: 0.5,
        max_authors: 4,
        ..Default::default()
    }
}

/// Article facts recomputed straight from the records.
pub struct RawArticle {
    pub year: i32,
    pub date: chrono::NaiveDate,
    pub fields: BTreeSet<String>,
    pub countries: BTreeSet<CountryCode>,
}

pub fn raw_articles(r: &CorpusRecords) -> BTreeMap<String, RawArticle> {
    use chrono::Datelike;
    let orgs: HashMap<&str, &str> = r.orgs.iter().map(|o| (o.org.as_str(), o.iso2.as_str())).collect();
    r.articles
        .iter()
        .map(|a| {
            let countries = a
                .authors
                .iter()
                .flat_map(|x| x.orgs.iter())
                .filter_map(|o| orgs.get(o.as_str()).and_then(|c| CountryCode::parse(c)))
                .collect();
            (
                a.id.clone(),
                RawArticle {
                    year: a.date.year(),
                    date: a.date,
                    fields: a.fields.iter().cloned().collect(),
                    countries,
                },
            )
        })
        .collect()
}

/// Unique, non-self edges between known articles.
pub fn raw_edges<'a>(r: &'a CorpusRecords, arts: &BTreeMap<String, RawArticle>) -> Vec<(&'a str, &'a str)> {
    let mut seen = HashSet::new();
    r.citations
        .iter()
        .filter(|c| c.citing != c.cited && arts.contains_key(&c.citing) && arts.contains_key(&c.cited))
        .map(|c| (c.citing.as_str(), c.cited.as_str()))
        .filter(|e| seen.insert(*e))
        .collect()
}

pub fn region_has(table: &RegionTable, region: &Region, c: CountryCode) -> bool {
    match region {
        Region::World => true,
        Region::Group(g) => table.classify(c) == rescon_core::regions::Classification::Group(*g),
        Region::Unknown => table.classify(c) == rescon_core::regions::Classification::Unknown,
        Region::Aggregate(name) => table.aggregate(name).is_some_and(|m| m.contains(&c)),
        Region::Country(x) => *x == c,
    }
}

pub fn touches(table: &RegionTable, region: &Region, countries: &BTreeSet<CountryCode>) -> bool {
    countries.iter().any(|&c| region_has(table, region, c))
}
