//! One function per subcommand. Stages communicate only through files in the
//! output directory.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::Serialize;

use rescon_core::aggregate::{attach_saliency, decades, ratio_report, write_ratio_csv, Period};
use rescon_core::collab::{collab_panels, write_collab_csv, CollabCell, CollabSpec};
use rescon_core::corpus::ingest::{ingest_dir, write_records, ARTICLES_FILE, CITATIONS_FILE, ORGS_FILE};
use rescon_core::fields::ResolvedFields;
use rescon_core::panel::{count_panels, default_regions, Panel, PanelSpec};
use rescon_core::saliency::{
    auto_saliency, default_training_cutoffs, fit_cohort_model, has_lookahead, oracle_saliency, predict_saliency,
};
use rescon_core::synth::{generate_to_dir, GeneratorConfig};
use rescon_core::trends::{convergence_report, plot_data, write_trends_csv};
use rescon_core::{CorpusIndex, Error, FieldGrouping, RegionTable, Result, SaliencyVector};

use crate::config::ConfigFile;
use crate::manifest::{RunManifest, StageRecord};
use crate::{Cli, Command, Format, StageArgs, SynthArgs, TrendsArgs};

/// Canonical corpus written by `ingest` and read by every later stage.
pub const INDEX_DIR: &str = "index";
pub const INGEST_SUMMARY_FILE: &str = "ingest_summary.json";
pub const SALIENCY_FILE: &str = "saliency.csv";
pub const COHORT_MODEL_FILE: &str = "cohort_model.json";
pub const PLOTS_DIR: &str = "plots";

pub fn dispatch(cli: &Cli) -> Result<()> {
    let fmt = cli.global.format;
    let seed = cli.global.seed;
    match &cli.command {
        Command::Synth(a) => synth(a, seed),
        Command::Ingest(a) => Stage::open(a, seed, fmt)?.run("ingest", ingest),
        Command::Saliency(a) => Stage::open(a, seed, fmt)?.run("saliency", saliency),
        Command::Panels(a) => Stage::open(a, seed, fmt)?.run("panels", panels),
        Command::Collab(a) => Stage::open(a, seed, fmt)?.run("collab", collab),
        Command::Trends(a) => {
            let plots = a.plot_data;
            Stage::open(&a.stage, seed, fmt)?.run("trends", |s| trends(s, plots))
        }
        Command::Pipeline(a) => pipeline(a, seed, fmt),
    }
}

/// Resolved inputs and bookkeeping shared by the analysis stages.
pub struct Stage {
    pub cfg: ConfigFile,
    pub config_path: Option<PathBuf>,
    pub input: PathBuf,
    pub out: PathBuf,
    pub format: Format,
    pub warnings: Vec<String>,
    /// Extra input files to digest into the manifest.
    pub inputs: Vec<PathBuf>,
}

impl Stage {
    pub fn open(args: &StageArgs, seed: Option<u64>, format: Format) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        if let (Some(s), Some(g)) = (seed, cfg.generator.as_mut()) {
            g.seed = s;
        }
        args.overrides.apply(&mut cfg.analysis);
        cfg.analysis.validate()?;
        fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
        Ok(Stage {
            cfg,
            config_path: args.config.clone(),
            input: args.input.clone().unwrap_or_else(|| args.out.clone()),
            out: args.out.clone(),
            format,
            warnings: Vec::new(),
            inputs: Vec::new(),
        })
    }

    fn run(mut self, name: &str, body: impl FnOnce(&mut Stage) -> Result<()>) -> Result<()> {
        let start = Instant::now();
        body(&mut self)?;
        let seconds = start.elapsed().as_secs_f64();
        info!("{name}: {seconds:.3}s");

        let mut m = RunManifest::open(&self.out);
        m.config = snapshot(&self.cfg);
        if let Some(p) = &self.config_path {
            m.add_input(p)?;
        }
        for p in [&self.cfg.analysis.regions_file, &self.cfg.analysis.aggregates_file].into_iter().flatten() {
            m.add_input(p)?;
        }
        for p in &self.inputs {
            m.add_input(p)?;
        }
        m.record_stage(StageRecord {
            name: name.into(),
            warnings: self.warnings,
            seconds,
        });
        m.save(&self.out)
    }

    fn warn(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// The index written by `ingest` under the input directory.
    pub fn corpus(&self) -> Result<CorpusIndex> {
        let dir = self.input.join(INDEX_DIR);
        for f in [ARTICLES_FILE, CITATIONS_FILE, ORGS_FILE] {
            let p = dir.join(f);
            if !p.is_file() {
                return Err(Error::MissingInput { path: p });
            }
        }
        ingest_dir(&dir, &self.cfg.analysis.ingest())
    }

    fn saliency_vector(&mut self, corpus: &CorpusIndex) -> Result<Option<SaliencyVector>> {
        let p = self.input.join(SALIENCY_FILE);
        if !p.is_file() {
            self.warn(format!("{} not found; saliency columns left empty", p.display()));
            return Ok(None);
        }
        SaliencyVector::load(corpus, self.cfg.analysis.horizon_years, &p).map(Some)
    }

    fn create(&self, name: &str) -> Result<BufWriter<fs::File>> {
        let p = self.path(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::File::create(&p).map(BufWriter::new).map_err(|e| Error::io(&p, e))
    }

    fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n").map_err(|e| Error::io(self.path(name), e))?;
        w.flush().map_err(|e| Error::io(self.path(name), e))
    }
}

/// Config as recorded in the manifest: file paths reduced to their names so
/// the manifest does not depend on where the run happened.
fn snapshot(cfg: &ConfigFile) -> serde_json::Value {
    let mut c = cfg.clone();
    let name = |p: &Path| PathBuf::from(p.file_name().unwrap_or(p.as_os_str()));
    c.analysis.regions_file = c.analysis.regions_file.as_deref().map(name);
    c.analysis.aggregates_file = c.analysis.aggregates_file.as_deref().map(name);
    if !matches!(c.analysis.fields.as_str(), "identity" | "stem") {
        c.analysis.fields = name(Path::new(&c.analysis.fields)).to_string_lossy().into_owned();
    }
    serde_json::to_value(&c).unwrap_or(serde_json::Value::Null)
}

fn synth(args: &SynthArgs, seed: Option<u64>) -> Result<()> {
    let text = fs::read_to_string(&args.config).map_err(|e| Error::io(&args.config, e))?;
    let mut gen = GeneratorConfig::from_toml(&text)?;
    if let Some(s) = seed {
        gen.seed = s;
    }
    let cfg = ConfigFile {
        generator: Some(gen),
        ..ConfigFile::default()
    };
    let stage = Stage {
        cfg,
        config_path: Some(args.config.clone()),
        input: args.out.clone(),
        out: args.out.clone(),
        format: Format::Csv,
        warnings: Vec::new(),
        inputs: Vec::new(),
    };
    stage.run("synth", write_synth)
}

fn write_synth(s: &mut Stage) -> Result<()> {
    let gen = s
        .cfg
        .generator
        .as_ref()
        .ok_or_else(|| Error::Config("config has no [generator] section".into()))?;
    let records = generate_to_dir(gen, &s.out)?;
    info!(
        "synth: {} articles, {} citations",
        records.articles.len(),
        records.citations.len()
    );
    Ok(())
}

pub fn ingest(s: &mut Stage) -> Result<()> {
    let files: Vec<PathBuf> = [ARTICLES_FILE, CITATIONS_FILE, ORGS_FILE]
        .iter()
        .map(|f| s.input.join(f))
        .collect();
    let corpus = ingest_dir(&s.input, &s.cfg.analysis.ingest())?;
    s.inputs.extend(files);
    write_records(&s.out.join(INDEX_DIR), &corpus.to_records())?;
    let summary = corpus.summary();
    s.write_json(INGEST_SUMMARY_FILE, summary)?;
    eprintln!("{}", serde_json::to_string(summary)?);
    if summary.citations_rejected_unknown_article > 0 {
        s.warn(format!(
            "{} citations reference unknown articles and were dropped",
            summary.citations_rejected_unknown_article
        ));
    }
    Ok(())
}

pub fn saliency(s: &mut Stage) -> Result<()> {
    let corpus = s.corpus()?;
    let a = &s.cfg.analysis;
    let cent = a.centrality()?;
    let cutoff = a.cutoff(&corpus);
    let h = a.horizon_years;
    let (vec, model, warning) = match a.saliency_mode.as_str() {
        "oracle" => {
            let w = (!has_lookahead(&corpus, cutoff, h))
                .then(|| format!("corpus does not reach {cutoff} + {h}y; oracle saliency is partially observed"));
            (oracle_saliency(&corpus, cutoff, h, &cent)?, None, w)
        }
        "predicted" => {
            let data_end = corpus.max_date().unwrap_or(cutoff).min(cutoff);
            let cutoffs = default_training_cutoffs(&corpus, data_end, h, a.training_cutoffs);
            let model = fit_cohort_model(&corpus, &cutoffs, h, &cent)?;
            (predict_saliency(&corpus, cutoff, &model, &cent)?, Some(model), None)
        }
        _ => auto_saliency(&corpus, cutoff, h, &cent, a.training_cutoffs)?,
    };
    if let Some(w) = warning {
        s.warn(w);
    }
    if !vec.stats.converged {
        s.warn(format!(
            "power iteration stopped after {} iterations with residual {:e}",
            vec.stats.iterations, vec.stats.residual
        ));
    }
    vec.save(&corpus, &s.path(SALIENCY_FILE))?;
    let model_path = s.path(COHORT_MODEL_FILE);
    match model {
        Some(m) => s.write_json(COHORT_MODEL_FILE, &m)?,
        None if model_path.exists() => fs::remove_file(&model_path).map_err(|e| Error::io(&model_path, e))?,
        None => {}
    }
    info!("saliency: {} mode at {cutoff}", vec.mode);
    Ok(())
}

/// Everything the report stages derive from the index and saliency vector.
pub struct Analysis {
    pub corpus: CorpusIndex,
    pub table: RegionTable,
    pub grouping: FieldGrouping,
    pub fields: ResolvedFields,
    pub spec: PanelSpec,
    pub saliency: Option<SaliencyVector>,
}

impl Analysis {
    pub fn load(s: &mut Stage) -> Result<Self> {
        let corpus = s.corpus()?;
        let a = &s.cfg.analysis;
        let table = a.region_table()?;
        let grouping = a.grouping(&corpus)?;
        let fields = grouping.resolve(&corpus);
        let spec = PanelSpec {
            regions: default_regions(&table, &corpus, a.country_regions),
            years: a.years(&corpus),
            observation_cutoff: a.observation_cutoff,
        };
        let saliency = s.saliency_vector(&corpus)?;
        Ok(Analysis {
            corpus,
            table,
            grouping,
            fields,
            spec,
            saliency,
        })
    }

    pub fn panel(&self, s: &Stage) -> Panel {
        let mut panel = count_panels(&self.corpus, &self.table, &self.fields, &self.spec);
        if let Some(v) = &self.saliency {
            attach_saliency(
                &mut panel,
                v,
                &self.corpus,
                &self.table,
                &self.fields,
                &self.spec,
                s.cfg.analysis.attribution,
            );
        }
        panel
    }

    pub fn collab(&self, s: &Stage) -> Result<Vec<CollabCell>> {
        let spec = CollabSpec {
            pairs: s.cfg.analysis.pairs(&self.table)?,
            years: self.spec.years.clone(),
            observation_cutoff: self.spec.observation_cutoff,
        };
        collab_panels(&self.corpus, &self.table, &self.fields, &spec, self.saliency.as_ref())
    }

    /// Single years followed by decades.
    pub fn ratio_periods(&self) -> Vec<Period> {
        let mut p: Vec<Period> = self.spec.years.clone().map(Period::year).collect();
        p.extend(decades(self.spec.years.clone()));
        p
    }
}

pub fn panels(s: &mut Stage) -> Result<()> {
    let an = Analysis::load(s)?;
    let panel = an.panel(s);
    if panel.unaffiliated.iter().any(|&n| n > 0) {
        let n: u64 = panel.unaffiliated.iter().sum();
        s.warn(format!("{n} articles have no resolvable affiliation and count only toward WORLD"));
    }
    let ratios = if panel.saliency.is_some() {
        ratio_report(&panel, &an.table, &an.ratio_periods())?
    } else {
        Vec::new()
    };
    match s.format {
        Format::Csv => {
            panel.write_csv(s.create("panels.csv")?)?;
            if panel.saliency.is_some() {
                write_ratio_csv(&ratios, s.create("ratios.csv")?)?;
            }
        }
        Format::Json => {
            s.write_json("panels.json", &panel.cells())?;
            if panel.saliency.is_some() {
                s.write_json("ratios.json", &ratios)?;
            }
        }
    }
    Ok(())
}

pub fn collab(s: &mut Stage) -> Result<()> {
    let an = Analysis::load(s)?;
    let cells = an.collab(s)?;
    match s.format {
        Format::Csv => write_collab_csv(&cells, s.create("collab.csv")?),
        Format::Json => s.write_json("collab.json", &cells),
    }
}

pub fn trends(s: &mut Stage, plots: bool) -> Result<()> {
    let an = Analysis::load(s)?;
    let panel = an.panel(s);
    let a = &s.cfg.analysis;
    let fields: Vec<String> = match &a.trend_fields {
        Some(f) => f.clone(),
        None => an.grouping.names().map(str::to_owned).collect(),
    };
    let periods = decades(an.spec.years.clone());
    let bellwethers = a.bellwethers(&an.table)?;
    let report = convergence_report(&panel, &an.table, &fields, &periods, &bellwethers);
    for m in report.missing.clone() {
        s.warn(format!("trend input missing: {m}"));
    }
    s.write_json("trends.json", &report)?;
    if s.format == Format::Csv {
        write_trends_csv(&report, s.create("trends.csv")?)?;
    }
    if plots {
        let collab = an.collab(s)?;
        let overall = s.cfg.analysis.overall_field(&an.grouping);
        for (name, body) in plot_data(&panel, &collab, &overall, &periods)? {
            let rel = format!("{PLOTS_DIR}/{name}");
            let mut w = s.create(&rel)?;
            w.write_all(body.as_bytes()).map_err(|e| Error::io(s.path(&rel), e))?;
            w.flush().map_err(|e| Error::io(s.path(&rel), e))?;
        }
    }
    Ok(())
}

fn pipeline(args: &TrendsArgs, seed: Option<u64>, fmt: Format) -> Result<()> {
    let a = &args.stage;
    let has_generator = match &a.config {
        Some(p) => ConfigFile::load(p)?.generator.is_some(),
        None => false,
    };
    if a.input.is_none() && has_generator {
        let config = a.config.clone().expect("generator implies config");
        synth(
            &SynthArgs {
                config,
                out: a.out.clone(),
            },
            seed,
        )?;
    }
    Stage::open(a, seed, fmt)?.run("ingest", ingest)?;
    // later stages read the index from the output directory
    let later = StageArgs {
        input: None,
        ..a.clone()
    };
    Stage::open(&later, seed, fmt)?.run("saliency", saliency)?;
    Stage::open(&later, seed, fmt)?.run("panels", panels)?;
    Stage::open(&later, seed, fmt)?.run("collab", collab)?;
    let plots = args.plot_data;
    Stage::open(&later, seed, fmt)?.run("trends", |s| trends(s, plots))
}
