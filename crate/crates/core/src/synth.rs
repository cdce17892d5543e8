//! Synthetic corpus generator.
//!
//! Articles are produced year by year per lead country, dated uniformly
//! within the year and processed in date order. Each article draws a
//! Poisson number of references. A reference first picks a cited cohort
//! (age in years) with probability proportional to `accrual[age] × cohort
//! size`, then a country group within that cohort by `reputation × group
//! weight`, then an article by attachment weight
//! `(in-degree + 1)^γ × fitness`. Only strictly earlier dates are citable.
//! Output is fully determined by the configuration, seed included.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use crate::corpus::{ingest, ArticleRecord, AuthorRecord, CitationRecord, CorpusRecords, CountryCode, OrgRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountrySpec {
    pub code: String,
    /// Lead-authored articles in the first year.
    #[serde(default)]
    pub articles_per_year: f64,
    /// Output multiplier per decade (2.0 doubles every ten years).
    #[serde(default = "one")]
    pub growth_per_decade: f64,
    /// Multiplier on the attachment weight of this country's articles.
    #[serde(default = "one")]
    pub fitness: f64,
    /// Field mix weights; missing fields get weight 0, absent map means
    /// the global weights.
    #[serde(default)]
    pub field_weights: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub name: String,
    #[serde(default = "one")]
    pub weight: f64,
}

/// Probability that an article led by `from` has a co-affiliation in `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub from: String,
    pub to: String,
    pub p: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub start_year: i32,
    /// Exclusive.
    pub end_year: i32,
    pub countries: Vec<CountrySpec>,
    pub fields: Vec<FieldSpec>,
    /// Probability of a second, distinct field.
    pub second_field_prob: f64,
    pub coupling: Vec<CouplingSpec>,
    /// γ: attachment weight grows as (in-degree + 1)^γ.
    pub attachment_exponent: f64,
    /// Relative citation intensity by cited age in years, ages 0..len.
    /// Older articles are never cited.
    pub accrual: Vec<f64>,
    pub refs_mean: f64,
    pub refs_max: usize,
    /// σ of the per-article log-normal fitness.
    pub fitness_sigma: f64,
    /// Attachment multiplier for articles with more than one country.
    pub collab_bonus: f64,
    /// Country reputation weight (citations received + offset)^ρ.
    pub reputation_exponent: f64,
    /// Prior citation count every country starts with. Large values delay
    /// the divergence of reputations.
    pub reputation_offset: f64,
    pub orgs_per_country: usize,
    pub max_authors: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 1,
            start_year: 1980,
            end_year: 2020,
            countries: Vec::new(),
            fields: vec![FieldSpec {
                name: "Computer Science".into(),
                weight: 1.0,
            }],
            second_field_prob: 0.0,
            coupling: Vec::new(),
            attachment_exponent: 1.0,
            accrual: vec![1.0; 10],
            refs_mean: 10.0,
            refs_max: 50,
            fitness_sigma: 0.0,
            collab_bonus: 1.0,
            reputation_exponent: 0.0,
            reputation_offset: 1.0,
            orgs_per_country: 3,
            max_authors: 3,
        }
    }
}

impl GeneratorConfig {
    /// Parses either a bare generator table or a file with a `[generator]`
    /// section (other sections ignored).
    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Table = toml::from_str(text)?;
        let cfg = if let Some(g) = value.get("generator") {
            g.clone().try_into::<GeneratorConfig>()?
        } else {
            toml::from_str::<GeneratorConfig>(text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.end_year < self.start_year {
            return bad("end_year precedes start_year".into());
        }
        if self.fields.is_empty() {
            return bad("at least one field is required".into());
        }
        let mut seen = HashSet::new();
        for c in &self.countries {
            if CountryCode::parse(&c.code).is_none() {
                return bad(format!("country code {:?} is not two uppercase letters", c.code));
            }
            if !seen.insert(c.code.as_str()) {
                return bad(format!("country {} listed twice", c.code));
            }
            if !(c.articles_per_year >= 0.0 && c.growth_per_decade > 0.0 && c.fitness > 0.0) {
                return bad(format!("country {}: counts must be ≥ 0, growth and fitness > 0", c.code));
            }
            if let Some(w) = &c.field_weights {
                for (k, &v) in w {
                    if !self.fields.iter().any(|f| &f.name == k) || !(v >= 0.0) {
                        return bad(format!("country {}: bad field weight for {k:?}", c.code));
                    }
                }
            }
        }
        for cp in &self.coupling {
            if !seen.contains(cp.from.as_str()) || !seen.contains(cp.to.as_str()) || cp.from == cp.to {
                return bad(format!("coupling {}→{} must link two listed countries", cp.from, cp.to));
            }
            if !(0.0..=1.0).contains(&cp.p) {
                return bad(format!("coupling {}→{} probability out of [0,1]", cp.from, cp.to));
            }
        }
        let probs = [self.second_field_prob];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("second_field_prob must lie in [0,1]".into());
        }
        if self.attachment_exponent < 0.0
            || self.reputation_exponent < 0.0
            || !(self.reputation_offset > 0.0)
            || self.fitness_sigma < 0.0
            || !(self.collab_bonus > 0.0)
            || !(self.refs_mean >= 0.0)
        {
            return bad("exponents, σ and refs_mean must be ≥ 0; collab_bonus and reputation_offset > 0".into());
        }
        if self.accrual.iter().any(|&a| !(a >= 0.0)) {
            return bad("accrual weights must be ≥ 0".into());
        }
        if self.orgs_per_country == 0 || self.max_authors == 0 {
            return bad("orgs_per_country and max_authors must be ≥ 1".into());
        }
        Ok(())
    }

    /// Lead-authored articles for one country and year.
    pub fn articles_in(&self, country: &CountrySpec, year: i32) -> usize {
        let t = (year - self.start_year) as f64 / 10.0;
        (country.articles_per_year * country.growth_per_decade.powf(t)).round() as usize
    }
}

/// Prefix sums over non-negative weights with point updates.
#[derive(Debug, Clone, Default)]
struct Fenwick {
    tree: Vec<f64>,
    total: f64,
}

impl Fenwick {
    fn push(&mut self, w: f64) {
        let n = self.tree.len() + 1;
        // node n covers (n - lowbit(n), n]
        let low = n & n.wrapping_neg();
        let mut sum = w;
        let mut k = n - 1;
        while k > n - low {
            sum += self.tree[k - 1];
            k &= k - 1;
        }
        self.tree.push(sum);
        self.total += w;
    }

    fn add(&mut self, i: usize, delta: f64) {
        let mut k = i + 1;
        while k <= self.tree.len() {
            self.tree[k - 1] += delta;
            k += k & k.wrapping_neg();
        }
        self.total += delta;
    }

    /// Smallest index whose prefix sum exceeds `target`.
    fn find(&self, mut target: f64) -> usize {
        let n = self.tree.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next - 1] <= target {
                target -= self.tree[next - 1];
                pos = next;
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }
}

struct Group {
    members: Vec<u32>,
    weights: Fenwick,
}

struct Planned {
    date: NaiveDate,
    lead: usize,
}

/// Generates a corpus in memory.
pub fn generate(cfg: &GeneratorConfig) -> Result<CorpusRecords> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let nc = cfg.countries.len();
    let codes: Vec<&str> = cfg.countries.iter().map(|c| c.code.as_str()).collect();
    let index_of = |code: &str| codes.iter().position(|c| *c == code).expect("validated");

    // plan articles: dates drawn per (year, country), then sorted
    let mut plan = Vec::new();
    for year in cfg.start_year..cfg.end_year {
        let first = NaiveDate::from_ymd_opt(year, 1, 1).unwrap();
        let days = NaiveDate::from_ymd_opt(year + 1, 1, 1).unwrap().signed_duration_since(first).num_days();
        for (ci, c) in cfg.countries.iter().enumerate() {
            for _ in 0..cfg.articles_in(c, year) {
                let date = first + Duration::days(rng.random_range(0..days));
                plan.push(Planned { date, lead: ci });
            }
        }
    }
    plan.sort_by_key(|p| p.date);

    let field_weights: Vec<Vec<f64>> = cfg
        .countries
        .iter()
        .map(|c| {
            cfg.fields
                .iter()
                .map(|f| match &c.field_weights {
                    Some(m) => m.get(&f.name).copied().unwrap_or(0.0),
                    None => f.weight,
                })
                .collect()
        })
        .collect();
    let mut coupling = vec![Vec::<(usize, f64)>::new(); nc];
    for cp in &cfg.coupling {
        coupling[index_of(&cp.from)].push((index_of(&cp.to), cp.p));
    }
    for row in &mut coupling {
        let total: f64 = row.iter().map(|x| x.1).sum();
        if total > 1.0 {
            row.iter_mut().for_each(|x| x.1 /= total);
        }
    }

    let fitness_dist = LogNormal::new(0.0, cfg.fitness_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let refs_dist = if cfg.refs_mean > 0.0 {
        Some(Poisson::new(cfg.refs_mean).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };
    let years = (cfg.end_year - cfg.start_year).max(0) as usize;
    let mut groups: Vec<Vec<Group>> = (0..years)
        .map(|_| {
            (0..nc)
                .map(|_| Group {
                    members: Vec::new(),
                    weights: Fenwick::default(),
                })
                .collect()
        })
        .collect();
    let mut cohort_size = vec![0usize; years];
    let mut indegree: Vec<u32> = Vec::with_capacity(plan.len());
    let mut fitness: Vec<f64> = Vec::with_capacity(plan.len());
    // (year slot, country group, position in group)
    let mut slot: Vec<(u32, u32, u32)> = Vec::with_capacity(plan.len());
    let mut reputation = vec![0u64; nc];
    let gamma = cfg.attachment_exponent;
    let weight = |deg: u32, fit: f64| if gamma == 0.0 { fit } else { (deg as f64 + 1.0).powf(gamma) * fit };

    let mut articles = Vec::with_capacity(plan.len());
    let mut citations = Vec::new();
    let mut next_author = 0u64;
    let mut pending_from = 0usize;
    let mut chosen = Vec::new();

    for (i, p) in plan.iter().enumerate() {
        // make earlier-dated articles citable
        if i > 0 && plan[i - 1].date < p.date {
            for j in pending_from..i {
                let (y, g, _) = slot[j];
                let grp = &mut groups[y as usize][g as usize];
                grp.weights.push(weight(0, fitness[j]));
                grp.members.push(j as u32);
                slot[j].2 = (grp.members.len() - 1) as u32;
                cohort_size[y as usize] += 1;
            }
            pending_from = i;
        }

        let lead = p.lead;
        let mut countries = vec![lead];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(partner, prob) in &coupling[lead] {
            acc += prob;
            if u < acc {
                countries.push(partner);
                break;
            }
        }
        let fw = &field_weights[lead];
        let primary = pick(&mut rng, fw).unwrap_or(0);
        let mut fields = vec![cfg.fields[primary].name.clone()];
        if cfg.fields.len() > 1 && rng.random::<f64>() < cfg.second_field_prob {
            let mut w = fw.clone();
            w[primary] = 0.0;
            if let Some(k) = pick(&mut rng, &w) {
                fields.push(cfg.fields[k].name.clone());
            }
        }
        let mut authors = Vec::new();
        for &c in &countries {
            let n = rng.random_range(1..=cfg.max_authors);
            for _ in 0..n {
                let org = rng.random_range(0..cfg.orgs_per_country);
                authors.push(AuthorRecord {
                    a: format!("au{next_author}"),
                    orgs: vec![org_name(codes[c], org)],
                });
                next_author += 1;
            }
        }

        let mut fit = fitness_dist.sample(&mut rng) * cfg.countries[lead].fitness;
        if countries.len() > 1 {
            fit *= cfg.collab_bonus;
        }

        // references
        let year_slot = (p.date.year() - cfg.start_year) as usize;
        let want = refs_dist
            .as_ref()
            .map(|d| (d.sample(&mut rng) as usize).min(cfg.refs_max))
            .unwrap_or(0);
        chosen.clear();
        for _ in 0..want {
            let ages: Vec<f64> = (0..cfg.accrual.len())
                .map(|a| if a <= year_slot { cfg.accrual[a] * cohort_size[year_slot - a] as f64 } else { 0.0 })
                .collect();
            let Some(age) = pick(&mut rng, &ages) else { break };
            let cohort = year_slot - age;
            let rep: Vec<f64> = (0..nc)
                .map(|c| {
                    let r = if cfg.reputation_exponent == 0.0 {
                        1.0
                    } else {
                        (reputation[c] as f64 + cfg.reputation_offset).powf(cfg.reputation_exponent)
                    };
                    r * groups[cohort][c].weights.total.max(0.0)
                })
                .collect();
            let Some(g) = pick(&mut rng, &rep) else { continue };
            let grp = &groups[cohort][g];
            let k = grp.weights.find(rng.random::<f64>() * grp.weights.total);
            let target = grp.members[k];
            if chosen.contains(&target) {
                continue;
            }
            chosen.push(target);
            let t = target as usize;
            let before = weight(indegree[t], fitness[t]);
            indegree[t] += 1;
            let after = weight(indegree[t], fitness[t]);
            groups[cohort][g].weights.add(k, after - before);
            reputation[g] += 1;
        }
        chosen.sort_unstable();
        for &t in &chosen {
            citations.push(CitationRecord::new(article_id(i), article_id(t as usize)));
        }

        indegree.push(0);
        fitness.push(fit);
        slot.push((year_slot as u32, lead as u32, 0));
        articles.push(ArticleRecord {
            id: article_id(i),
            date: p.date,
            venue: Some(format!("venue-{}", fields[0].to_lowercase().replace(' ', "-"))),
            fields,
            authors,
        });
    }

    let orgs = codes
        .iter()
        .flat_map(|c| (0..cfg.orgs_per_country).map(move |k| OrgRecord::new(org_name(c, k), *c)))
        .collect();
    Ok(CorpusRecords {
        articles,
        citations,
        orgs,
    })
}

fn article_id(i: usize) -> String {
    format!("a{i:08}")
}

fn org_name(code: &str, k: usize) -> String {
    format!("org-{code}-{k}")
}

/// Index drawn with probability proportional to `weights`; `None` if all are 0.
fn pick<R: Rng>(rng: &mut R, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        if u < w {
            return Some(i);
        }
        u -= w;
        last = Some(i);
    }
    last
}

/// Generates and writes the three corpus files into `dir`.
pub fn generate_to_dir(cfg: &GeneratorConfig, dir: &Path) -> Result<CorpusRecords> {
    let records = generate(cfg)?;
    ingest::write_records(dir, &records)?;
    Ok(records)
}
