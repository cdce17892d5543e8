//! Run configuration: the `[analysis]` section of a scenario file, with
//! command-line flags taking precedence.

use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use rescon_core::aggregate::AttributionMode;
use rescon_core::collab::RegionPair;
use rescon_core::synth::GeneratorConfig;
use rescon_core::{CentralityConfig, CorpusIndex, Error, FieldGrouping, IngestConfig, Region, RegionTable, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Panel years as `[start, end)`; defaults to the corpus span.
    pub years: Option<[i32; 2]>,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    /// Evaluation cutoff for saliency; defaults to Dec 31 of the last panel year.
    pub cutoff: Option<NaiveDate>,
    pub horizon_years: u32,
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// `auto`, `oracle` or `predicted`.
    pub saliency_mode: String,
    pub training_cutoffs: usize,
    pub attribution: AttributionMode,
    /// Edges dated after this are left out of citation counts.
    pub observation_cutoff: Option<NaiveDate>,
    /// `identity`, `stem`, or a path to a `report_field<TAB>raw_field` file.
    pub fields: String,
    /// Report field used for whole-corpus figures; defaults to STEM or ALL.
    pub overall_field: Option<String>,
    /// Fields covered by the trend report; defaults to every report field.
    pub trend_fields: Option<Vec<String>>,
    pub regions_file: Option<PathBuf>,
    pub aggregates_file: Option<PathBuf>,
    /// Also emit one panel region per country seen in the corpus.
    pub country_regions: bool,
    /// `A-B` region pairs; defaults to all disjoint aggregate pairs.
    pub pairs: Option<Vec<String>>,
    /// `SUBJECT:GROUP`, e.g. `US:HIC`.
    pub bellwethers: Vec<String>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let ingest = IngestConfig::default();
        let cent = CentralityConfig::default();
        AnalysisConfig {
            years: None,
            window_start: ingest.window_start,
            window_end: ingest.window_end,
            cutoff: None,
            horizon_years: 5,
            damping: cent.damping,
            tolerance: cent.tolerance,
            max_iterations: cent.max_iterations,
            saliency_mode: "auto".into(),
            training_cutoffs: 5,
            attribution: AttributionMode::Probabilistic,
            observation_cutoff: None,
            fields: "identity".into(),
            overall_field: None,
            trend_fields: None,
            regions_file: None,
            aggregates_file: None,
            country_regions: true,
            pairs: None,
            bellwethers: vec!["US:HIC".into(), "CN:UMC".into()],
        }
    }
}

/// A scenario or config file: optional generator plus analysis settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub generator: Option<GeneratorConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ConfigFile = toml::from_str(&text)?;
        if let Some(g) = &cfg.generator {
            g.validate()?;
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(x) = p {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        rebase(&mut cfg.analysis.regions_file);
        rebase(&mut cfg.analysis.aggregates_file);
        if !matches!(cfg.analysis.fields.as_str(), "identity" | "stem") && Path::new(&cfg.analysis.fields).is_relative() {
            cfg.analysis.fields = base.join(&cfg.analysis.fields).to_string_lossy().into_owned();
        }
        Ok(cfg)
    }
}

impl AnalysisConfig {
    pub fn ingest(&self) -> IngestConfig {
        IngestConfig {
            window_start: self.window_start,
            window_end: self.window_end,
            ..IngestConfig::default()
        }
    }

    pub fn centrality(&self) -> Result<CentralityConfig> {
        let c = CentralityConfig {
            damping: self.damping,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn region_table(&self) -> Result<RegionTable> {
        match (&self.regions_file, &self.aggregates_file) {
            (None, None) => Ok(RegionTable::bundled()),
            (Some(r), a) => RegionTable::load(r, a.as_deref()),
            (None, Some(_)) => Err(Error::Config("aggregates_file requires regions_file".into())),
        }
    }

    pub fn grouping(&self, corpus: &CorpusIndex) -> Result<FieldGrouping> {
        match self.fields.as_str() {
            "identity" => Ok(FieldGrouping::identity(corpus)),
            "stem" => Ok(FieldGrouping::stem()),
            path => FieldGrouping::load(Path::new(path)),
        }
    }

    pub fn overall_field(&self, grouping: &FieldGrouping) -> String {
        if let Some(f) = &self.overall_field {
            return f.clone();
        }
        if grouping.members("STEM").is_some() {
            "STEM".into()
        } else {
            rescon_core::fields::ALL_FIELDS.into()
        }
    }

    /// Panel years; the corpus span within the analysis window by default.
    pub fn years(&self, corpus: &CorpusIndex) -> std::ops::Range<i32> {
        if let Some([a, b]) = self.years {
            return a..b;
        }
        let in_window = corpus.articles().iter().filter(|a| !a.excluded);
        let (mut lo, mut hi) = (i32::MAX, i32::MIN);
        for a in in_window {
            lo = lo.min(a.year());
            hi = hi.max(a.year());
        }
        if lo > hi {
            self.window_start.year()..self.window_start.year()
        } else {
            lo..hi + 1
        }
    }

    pub fn cutoff(&self, corpus: &CorpusIndex) -> NaiveDate {
        self.cutoff.unwrap_or_else(|| {
            let y = self.years(corpus).end - 1;
            NaiveDate::from_ymd_opt(y, 12, 31).unwrap_or(self.window_end)
        })
    }

    pub fn pairs(&self, table: &RegionTable) -> Result<Vec<RegionPair>> {
        match &self.pairs {
            None => Ok(rescon_core::collab::default_pairs(table)),
            Some(list) => list.iter().map(|s| RegionPair::parse(s, table)).collect(),
        }
    }

    pub fn bellwethers(&self, table: &RegionTable) -> Result<Vec<(Region, Region)>> {
        self.bellwethers
            .iter()
            .map(|s| {
                let (a, b) = s
                    .split_once(':')
                    .ok_or_else(|| Error::Config(format!("bellwether {s:?} is not SUBJECT:GROUP")))?;
                Ok((table.resolve(a)?, table.resolve(b)?))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.saliency_mode.as_str(), "auto" | "oracle" | "predicted") {
            return Err(Error::Config(format!("unknown saliency mode {:?}", self.saliency_mode)));
        }
        if let Some([a, b]) = self.years {
            if b < a {
                return Err(Error::Config(format!("years [{a}, {b}) is empty or reversed")));
            }
        }
        self.centrality()?;
        Ok(())
    }
}
