//! Cohort-multiplier predictor for future centrality.
//!
//! For each training cutoff the truncated centrality (edges observed by the
//! cutoff) is compared with the oracle centrality `H` years later. Per
//! (primary field, age in years) bucket the model keeps the geometric mean
//! of oracle / truncated, i.e. the least-squares fit of
//! `ln oracle = ln truncated + ln m`. Buckets are divided by the `age ≥ H`
//! bucket so that mature articles keep multiplier 1 and younger cohorts are
//! scaled relative to them.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{add_years, oracle_saliency, truncated_saliency, CentralityConfig};
use crate::corpus::{ArticleId, CorpusIndex};
use crate::error::{Error, Result};

/// Buckets with fewer samples fall back to the all-fields bucket, then to 1.
pub const MIN_BUCKET_SAMPLES: usize = 30;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
struct Bucket {
    /// Sum of log ratios.
    sum: f64,
    count: usize,
}

impl Bucket {
    fn mean(&self) -> Option<f64> {
        (self.count >= MIN_BUCKET_SAMPLES).then(|| (self.sum / self.count as f64).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortModel {
    pub horizon_years: u32,
    pub training_cutoffs: Vec<NaiveDate>,
    /// Multipliers per primary field for ages `0..horizon_years`.
    pub by_field: BTreeMap<String, Vec<f64>>,
    /// All-fields multipliers for ages `0..horizon_years`.
    pub pooled: Vec<f64>,
    /// Sample counts per age (pooled), ages `0..=horizon_years`.
    pub samples: Vec<usize>,
}

impl CohortModel {
    /// Model that leaves every article unchanged.
    pub fn identity(horizon_years: u32) -> Self {
        CohortModel {
            horizon_years,
            training_cutoffs: Vec::new(),
            by_field: BTreeMap::new(),
            pooled: vec![1.0; horizon_years as usize],
            samples: vec![0; horizon_years as usize + 1],
        }
    }

    pub fn multiplier(&self, field: &str, age: u32) -> f64 {
        if age >= self.horizon_years {
            return 1.0;
        }
        self.by_field
            .get(field)
            .map(|m| m[age as usize])
            .unwrap_or(self.pooled[age as usize])
    }

    pub fn multiplier_for(&self, corpus: &CorpusIndex, id: ArticleId, cutoff: NaiveDate) -> f64 {
        let a = corpus.article(id);
        self.multiplier(corpus.fields().name(a.fields[0]), age(a.date, cutoff))
    }
}

fn age(pub_date: NaiveDate, cutoff: NaiveDate) -> u32 {
    (cutoff.year() - pub_date.year()).max(0) as u32
}

/// The `count` most recent year-end dates `D` with `D + horizon ≤ data_end`,
/// oldest first.
pub fn default_training_cutoffs(
    corpus: &CorpusIndex,
    data_end: NaiveDate,
    horizon_years: u32,
    count: usize,
) -> Vec<NaiveDate> {
    let Some(first) = corpus.min_date() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut year = data_end.year();
    while out.len() < count && year >= first.year() {
        let d = NaiveDate::from_ymd_opt(year, 12, 31).unwrap();
        if add_years(d, horizon_years) <= data_end {
            out.push(d);
        }
        year -= 1;
    }
    out.reverse();
    out
}

pub fn fit_cohort_model(
    corpus: &CorpusIndex,
    training_cutoffs: &[NaiveDate],
    horizon_years: u32,
    cfg: &CentralityConfig,
) -> Result<CohortModel> {
    let data_end = corpus.max_date();
    let usable: Vec<NaiveDate> = training_cutoffs
        .iter()
        .copied()
        .filter(|&t| data_end.is_some_and(|end| add_years(t, horizon_years) <= end))
        .collect();
    if usable.is_empty() {
        return Err(Error::NoTrainingCutoff {
            horizon: horizon_years,
        });
    }
    let h = horizon_years as usize;
    let mut field_buckets: BTreeMap<u32, Vec<Bucket>> = BTreeMap::new();
    let mut pooled = vec![Bucket::default(); h + 1];

    for &t in &usable {
        let truncated = truncated_saliency(corpus, t, cfg)?;
        let oracle = oracle_saliency(corpus, t, horizon_years, cfg)?;
        let eligible = corpus.articles().iter().filter(|a| a.date <= t).count();
        if eligible == 0 {
            continue;
        }
        let floor = 1.0 / (10.0 * eligible as f64);
        for (i, a) in corpus.articles().iter().enumerate() {
            if a.date > t || truncated.mass[i] <= floor {
                continue;
            }
            let ratio = oracle.mass[i] / truncated.mass[i];
            if !(ratio > 0.0) {
                continue;
            }
            let ratio = ratio.ln();
            let bucket = (age(a.date, t) as usize).min(h);
            let fb = field_buckets
                .entry(a.fields[0])
                .or_insert_with(|| vec![Bucket::default(); h + 1]);
            fb[bucket].sum += ratio;
            fb[bucket].count += 1;
            pooled[bucket].sum += ratio;
            pooled[bucket].count += 1;
        }
    }

    let pooled_ref = pooled[h].mean().unwrap_or(1.0);
    let pooled_mult: Vec<f64> = (0..h)
        .map(|a| pooled[a].mean().map(|r| r / pooled_ref).unwrap_or(1.0))
        .collect();
    let by_field = field_buckets
        .into_iter()
        .map(|(f, buckets)| {
            let reference = buckets[h].mean().unwrap_or(pooled_ref);
            let mult = (0..h)
                .map(|a| match buckets[a].mean() {
                    Some(r) => r / reference,
                    None => pooled_mult[a],
                })
                .collect();
            (corpus.fields().name(f).to_owned(), mult)
        })
        .collect();
    Ok(CohortModel {
        horizon_years,
        training_cutoffs: usable,
        by_field,
        pooled: pooled_mult,
        samples: pooled.iter().map(|b| b.count).collect(),
    })
}
