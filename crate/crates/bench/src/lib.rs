//! Fixtures shared by the benchmarks.

use rescon_core::corpus::CorpusRecords;
use rescon_core::synth::{generate, CountrySpec, CouplingSpec, GeneratorConfig};

/// A four-country corpus of roughly `per_year * 20` articles over 1995..2015.
pub fn corpus_records(per_year: f64) -> CorpusRecords {
    let mix = [("US", 0.4), ("CN", 0.3), ("DE", 0.2), ("IN", 0.1)];
    let cfg = GeneratorConfig {
        seed: 5,
        start_year: 1995,
        end_year: 2015,
        countries: mix
            .iter()
            .map(|(c, s)| CountrySpec {
                code: c.to_string(),
                articles_per_year: per_year * s,
                growth_per_decade: 1.5,
                fitness: 1.0,
                field_weights: None,
            })
            .collect(),
        coupling: vec![CouplingSpec {
            from: "CN".into(),
            to: "US".into(),
            p: 0.2,
        }],
        refs_mean: 10.0,
        ..Default::default()
    };
    generate(&cfg).expect("valid fixture config")
}
