use chrono::NaiveDate;
use criterion::{criterion_group, criterion_main, Criterion};

use rescon_bench::corpus_records;
use rescon_core::aggregate::{marginal_saliency, AttributionMode};
use rescon_core::corpus::ingest::{ingest_dir, write_records};
use rescon_core::panel::{count_panels, default_regions, PanelSpec};
use rescon_core::saliency::{oracle_saliency, truncated_saliency};
use rescon_core::{CentralityConfig, CorpusIndex, FieldGrouping, IngestConfig, RegionTable};

const PER_YEAR: f64 = 2_000.0;

fn cutoff() -> NaiveDate {
    NaiveDate::from_ymd_opt(2009, 12, 31).unwrap()
}

fn power_iteration(c: &mut Criterion) {
    let corpus = CorpusIndex::build(corpus_records(PER_YEAR), &IngestConfig::default()).unwrap();
    let cfg = CentralityConfig::default();
    let mut g = c.benchmark_group("saliency");
    g.sample_size(10);
    g.bench_function("truncated", |b| b.iter(|| truncated_saliency(&corpus, cutoff(), &cfg).unwrap()));
    g.bench_function("oracle_5y", |b| b.iter(|| oracle_saliency(&corpus, cutoff(), 5, &cfg).unwrap()));
    g.finish();
}

fn ingest(c: &mut Criterion) {
    let records = corpus_records(PER_YEAR);
    let dir = tempfile::tempdir().unwrap();
    write_records(dir.path(), &records).unwrap();
    let cfg = IngestConfig::default();
    let mut g = c.benchmark_group("ingest");
    g.sample_size(10);
    g.bench_function("in_memory", |b| b.iter(|| CorpusIndex::build(records.clone(), &cfg).unwrap()));
    g.bench_function("from_files", |b| b.iter(|| ingest_dir(dir.path(), &cfg).unwrap()));
    g.finish();
}

fn panels(c: &mut Criterion) {
    let corpus = CorpusIndex::build(corpus_records(PER_YEAR), &IngestConfig::default()).unwrap();
    let table = RegionTable::bundled();
    let fields = FieldGrouping::identity(&corpus).resolve(&corpus);
    let spec = PanelSpec {
        regions: default_regions(&table, &corpus, true),
        years: 1995..2010,
        observation_cutoff: None,
    };
    let v = oracle_saliency(&corpus, cutoff(), 5, &CentralityConfig::default()).unwrap();
    let mut g = c.benchmark_group("panels");
    g.sample_size(20);
    g.bench_function("counts", |b| b.iter(|| count_panels(&corpus, &table, &fields, &spec)));
    for mode in [AttributionMode::Probabilistic, AttributionMode::FullCount] {
        g.bench_function(format!("saliency_{mode:?}").to_lowercase(), |b| {
            b.iter(|| marginal_saliency(&v, &corpus, &table, &fields, &spec, mode))
        });
    }
    g.finish();
}

criterion_group!(benches, power_iteration, ingest, panels);
criterion_main!(benches);
