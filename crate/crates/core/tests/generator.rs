//! Statistical checks that generated corpora realize their configuration.

use std::collections::HashMap;

use chrono::Datelike;
use rescon_core::aggregate::Period;
use rescon_core::collab::{collab_panels, CollabSpec, RegionPair};
use rescon_core::panel::{count_output, PanelSpec};
use rescon_core::synth::{generate, CountrySpec, CouplingSpec, GeneratorConfig};
use rescon_core::trends::growth_rates;
use rescon_core::{CorpusIndex, FieldGrouping, IngestConfig, Region, RegionTable};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn country(code: &str, n: f64) -> CountrySpec {
    CountrySpec {
        code: code.into(),
        articles_per_year: n,
        growth_per_decade: 1.0,
        fitness: 1.0,
        field_weights: None,
    }
}

fn in_degrees(records: &rescon_core::corpus::CorpusRecords) -> HashMap<&str, u64> {
    let mut deg: HashMap<&str, u64> = records.articles.iter().map(|a| (a.id.as_str(), 0)).collect();
    for c in &records.citations {
        *deg.get_mut(c.cited.as_str()).unwrap() += 1;
    }
    deg
}

#[test]
fn no_attachment_gives_uniform_in_degree_within_cohort() {
    let cfg = GeneratorConfig {
        seed: 7,
        start_year: 2000,
        end_year: 2010,
        countries: vec![country("US", 500.0)],
        attachment_exponent: 0.0,
        accrual: vec![0.0, 1.0, 1.0, 1.0, 1.0],
        refs_mean: 10.0,
        ..Default::default()
    };
    let r = generate(&cfg).unwrap();
    assert_eq!(r.articles.len(), 5000);
    let deg = in_degrees(&r);
    for cohort in [2001, 2003] {
        let counts: Vec<f64> = r
            .articles
            .iter()
            .filter(|a| a.date.year() == cohort)
            .map(|a| deg[a.id.as_str()] as f64)
            .collect();
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / n;
        assert!(mean > 5.0);
        let stat: f64 = counts.iter().map(|c| (c - mean).powi(2) / mean).sum();
        let p = 1.0 - ChiSquared::new(n - 1.0).unwrap().cdf(stat);
        assert!(p > 0.01, "cohort {cohort}: chi2 {stat} p {p}");
    }
}

/// Mean in-degree of the top 1% of all articles over the median in-degree of
/// the first fully observed cohort.
fn tail_ratio(gamma: f64) -> f64 {
    let cfg = GeneratorConfig {
        seed: 31,
        start_year: 2000,
        end_year: 2010,
        countries: vec![country("US", 500.0)],
        attachment_exponent: gamma,
        accrual: vec![0.0, 1.0, 1.0, 1.0, 1.0],
        refs_mean: 10.0,
        fitness_sigma: 0.2,
        ..Default::default()
    };
    let r = generate(&cfg).unwrap();
    assert_eq!(r.articles.len(), 5000);
    let deg = in_degrees(&r);
    let mut cohort: Vec<u64> = r
        .articles
        .iter()
        .filter(|a| a.date.year() == 2001)
        .map(|a| deg[a.id.as_str()])
        .collect();
    cohort.sort_unstable();
    let median = cohort[cohort.len() / 2] as f64;
    let mut all: Vec<u64> = deg.values().copied().collect();
    all.sort_unstable_by(|a, b| b.cmp(a));
    let top = &all[..all.len() / 100];
    let top_mean = top.iter().sum::<u64>() as f64 / top.len() as f64;
    top_mean / median.max(1.0)
}

#[test]
fn linear_attachment_is_heavy_tailed() {
    let linear = tail_ratio(1.0);
    assert!(linear >= 10.0, "γ=1 top-1%/median {linear}");
    // same fitness dispersion without attachment stays light-tailed
    let flat = tail_ratio(0.0);
    assert!(flat < 3.0, "γ=0 top-1%/median {flat}");
}

#[test]
fn coupling_is_recovered_as_collaboration_share() {
    let cfg = GeneratorConfig {
        seed: 19,
        start_year: 1990,
        end_year: 2010,
        countries: vec![country("US", 500.0), country("CN", 500.0)],
        coupling: vec![CouplingSpec {
            from: "CN".into(),
            to: "US".into(),
            p: 0.17,
        }],
        refs_mean: 2.0,
        ..Default::default()
    };
    let records = generate(&cfg).unwrap();
    assert_eq!(records.articles.len(), 20_000);
    let corpus = CorpusIndex::build(records, &IngestConfig::default()).unwrap();
    let table = RegionTable::bundled();
    let fields = FieldGrouping::identity(&corpus).resolve(&corpus);
    let us = Region::Aggregate("US".into());
    let cn = Region::Aggregate("CN".into());
    let spec = CollabSpec {
        pairs: vec![RegionPair::new(us.clone(), cn.clone())],
        years: 1990..2010,
        observation_cutoff: None,
    };
    let cells = collab_panels(&corpus, &table, &fields, &spec, None).unwrap();
    let pair: u64 = cells.iter().filter(|c| c.field == "ALL").map(|c| c.pub_count).sum();
    let panel = count_output(
        &corpus,
        &table,
        &fields,
        &PanelSpec {
            regions: vec![us, cn.clone()],
            years: 1990..2010,
            observation_cutoff: None,
        },
    );
    let cn_total: u64 = (1990..2010).map(|y| panel.pub_count("ALL", &cn, y).unwrap()).sum();
    let share = pair as f64 / cn_total as f64;
    assert!((share - 0.17).abs() <= 0.01, "share {share}");
}

#[test]
fn decade_doubling_is_recovered_as_growth() {
    let mut us = country("US", 100.0);
    us.growth_per_decade = 2.0;
    let cfg = GeneratorConfig {
        seed: 4,
        start_year: 1980,
        end_year: 2020,
        countries: vec![us],
        refs_mean: 1.0,
        ..Default::default()
    };
    let corpus = CorpusIndex::build(generate(&cfg).unwrap(), &IngestConfig::default()).unwrap();
    let table = RegionTable::bundled();
    let fields = FieldGrouping::identity(&corpus).resolve(&corpus);
    let panel = count_output(
        &corpus,
        &table,
        &fields,
        &PanelSpec {
            regions: vec![Region::World],
            years: 1980..2020,
            observation_cutoff: None,
        },
    );
    let values: Vec<f64> = rescon_core::aggregate::decades(1980..2020)
        .iter()
        .map(|p: &Period| p.years().map(|y| panel.pub_count("ALL", &Region::World, y).unwrap() as f64).sum())
        .collect();
    for g in growth_rates(&values) {
        let g = g.unwrap();
        assert!((g - 100.0).abs() <= 5.0, "growth {g}");
    }
}
