use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use elex_core::cluster::GmmConfig;
use elex_core::corpus::{self, ConvertReport, MappingConfig};
use elex_core::embeddings::{similarity_histogram, EmbeddingTable};
use elex_core::expand::{best_matches, write_sweep_csv, ThetaGrid};
use elex_core::features::emotion_features_with;
use elex_core::lexicon::{normalize_word, Lexicon, LexiconFormat, LoadOptions};
use elex_core::{Error, FittedModel, EMOTIONS};

use crate::manifest;
use crate::{
    ClusterArgs, ConvertArgs, ExpandArgs, ExpansionInputs, FeaturesArgs, HistogramArgs, LexiconInput, StatsArgs,
    SweepArgs,
};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Core(Error::Io {
            path: path.to_owned(),
            source: e,
        })
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                Error::InvalidArgument(_) => EXIT_USAGE,
                Error::Numerical(_) | Error::InvalidClusterStats { .. } => EXIT_NUMERICAL,
                Error::Io { .. }
                | Error::Format { .. }
                | Error::Conflict { .. }
                | Error::DimensionMismatch { .. }
                | Error::ZeroNorm => EXIT_INPUT,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Outputs are staged in memory and only written once the whole run succeeded.
#[derive(Default)]
struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, path: &Path, bytes: Vec<u8>) {
        self.files.push((path.to_owned(), bytes));
    }

    fn paths(&self) -> Vec<&Path> {
        self.files.iter().map(|(p, _)| p.as_path()).collect()
    }

    /// Writes everything plus the manifest next to the first output.
    fn commit<C: Serialize>(
        mut self,
        command: &str,
        config: &C,
        inputs: &[&Path],
        summary: Option<serde_json::Value>,
    ) -> CliResult {
        let primary = self.files[0].0.clone();
        let bytes = manifest::render(command, config, inputs, &self.paths(), summary)?;
        self.files.push((manifest::manifest_path(&primary), bytes));
        for (path, bytes) in &self.files {
            std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
        }
        Ok(())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load_lexicon(input: &LexiconInput) -> CliResult<Lexicon> {
    let options = LoadOptions {
        keep_zero_entries: input.keep_zero_entries,
    };
    Ok(Lexicon::load(&input.lexicon, LexiconFormat::from_path(&input.lexicon), options)?)
}

fn check_dims(table: &EmbeddingTable, model: &FittedModel) -> CliResult {
    if table.dim() != model.cluster.pca.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.cluster.pca.dim(),
            found: table.dim(),
        }
        .into());
    }
    Ok(())
}

fn read_wordlist(path: &Path) -> CliResult<Vec<String>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut words = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let raw = line.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let word = normalize_word(raw).map_err(|m| Error::Format {
            origin: path.display().to_string(),
            line: idx + 1,
            message: m,
        })?;
        words.push(word);
    }
    Ok(words)
}

fn json_line<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializes");
    bytes.push(b'\n');
    bytes
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

pub fn cluster(args: &ClusterArgs) -> CliResult {
    if args.k == 0 || args.pca_dim == 0 || args.restarts == 0 {
        return Err(usage("--k, --pca-dim and --restarts must be at least 1"));
    }
    if !(args.tol >= 0.0) || !(args.reg >= 0.0) {
        return Err(usage("--tol and --reg must be non-negative"));
    }
    let lexicon = load_lexicon(&args.lexicon)?;
    let table = EmbeddingTable::load(&args.embeddings)?;
    let config = GmmConfig {
        components: args.k,
        seed: args.seed,
        tol: args.tol,
        max_iter: args.max_iter,
        reg: args.reg,
        restarts: args.restarts,
    };
    let (model, coverage) = FittedModel::fit(&table, &lexicon, args.pca_dim, &config)?;
    if !model.cluster.gmm.converged() {
        eprintln!("warning: EM did not converge within {} iterations", args.max_iter);
    }
    for (i, valid) in model.stats.validity().iter().enumerate() {
        if !valid {
            eprintln!("warning: cluster {i} has invalid similarity statistics");
        }
    }

    let mut out = Outputs::default();
    out.add(&args.out, model.to_json());
    let summary = serde_json::json!({
        "coverage": coverage,
        "converged": model.cluster.gmm.converged(),
        "iterations": model.cluster.gmm.log_likelihood_trace().len() - 1,
    });
    out.commit("cluster", args, &[&args.lexicon.lexicon, &args.embeddings], Some(summary))
}

pub fn histogram(args: &HistogramArgs) -> CliResult {
    if args.bins == 0 {
        return Err(usage("--bins must be at least 1"));
    }
    let lexicon = load_lexicon(&args.lexicon)?;
    let table = EmbeddingTable::load(&args.embeddings)?;
    let hist = similarity_histogram(&table, &lexicon, args.bins, args.include_self)?;

    let mut csv = String::from("bin_lo,bin_hi");
    for e in EMOTIONS {
        csv.push(',');
        csv.push_str(e.name());
    }
    csv.push('\n');
    let edges = hist.bin_edges();
    for b in 0..hist.bins {
        csv.push_str(&format!("{},{}", edges[b], edges[b + 1]));
        for e in EMOTIONS {
            csv.push_str(&format!(",{}", hist.counts[e.index()][b]));
        }
        csv.push('\n');
    }

    let coverage_path = args
        .coverage
        .clone()
        .unwrap_or_else(|| with_suffix(&args.out, ".coverage.json"));
    let mut out = Outputs::default();
    out.add(&args.out, csv.into_bytes());
    out.add(&coverage_path, json_line(&hist.coverage));
    out.commit("histogram", args, &[&args.lexicon.lexicon, &args.embeddings], None)
}

struct Loaded {
    lexicon: Lexicon,
    table: EmbeddingTable,
    model: FittedModel,
    candidates: Vec<String>,
}

fn load_expansion_inputs(inputs: &ExpansionInputs) -> CliResult<Loaded> {
    let lexicon = load_lexicon(&inputs.lexicon)?;
    let table = EmbeddingTable::load(&inputs.embeddings)?;
    let model = FittedModel::load(&inputs.model)?;
    check_dims(&table, &model)?;
    let candidates = read_wordlist(&inputs.candidates)?;
    Ok(Loaded {
        lexicon,
        table,
        model,
        candidates,
    })
}

fn input_paths(inputs: &ExpansionInputs) -> [&Path; 4] {
    [
        &inputs.lexicon.lexicon,
        &inputs.embeddings,
        &inputs.model,
        &inputs.candidates,
    ]
}

pub fn expand(args: &ExpandArgs) -> CliResult {
    if !(args.theta > 0.0 && args.theta < 1.0) {
        return Err(usage(format!("--theta must lie in (0, 1), got {}", args.theta)));
    }
    let l = load_expansion_inputs(&args.inputs)?;
    let matches = best_matches(&l.candidates, &l.lexicon, &l.table, &l.model.cluster, &l.model.stats)?;
    let result = matches.expand(args.theta)?;

    let mut expanded = Vec::new();
    result
        .expanded_lexicon
        .write_jsonl(&mut expanded)
        .expect("in-memory write");
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| with_suffix(&args.out, ".report.json"));

    let mut out = Outputs::default();
    out.add(&args.out, expanded);
    out.add(&report_path, json_line(&result));
    if let Some(path) = &args.merged {
        let merged = Lexicon::merge(&l.lexicon, &result.expanded_lexicon)?;
        let mut bytes = Vec::new();
        merged.write_jsonl(&mut bytes).expect("in-memory write");
        out.add(path, bytes);
    }
    let summary = serde_json::json!({ "diagnostics": result.diagnostics });
    out.commit("expand", args, &input_paths(&args.inputs), Some(summary))
}

pub fn sweep(args: &SweepArgs) -> CliResult {
    let grid = ThetaGrid::new(args.theta_min, args.theta_max, args.theta_step).map_err(|e| usage(e.to_string()))?;
    let l = load_expansion_inputs(&args.inputs)?;
    let rows = best_matches(&l.candidates, &l.lexicon, &l.table, &l.model.cluster, &l.model.stats)?.sweep(&grid);
    let mut csv = Vec::new();
    write_sweep_csv(&rows, &mut csv).expect("in-memory write");

    let mut out = Outputs::default();
    out.add(&args.out, csv);
    out.commit("sweep", args, &input_paths(&args.inputs), None)
}

#[derive(Serialize)]
struct FeatureRecord<'a> {
    id: &'a str,
    f_emo: [f64; elex_core::NUM_EMOTIONS],
    token_count: usize,
    matched_count: usize,
}

pub fn features(args: &FeaturesArgs) -> CliResult {
    let lexicon = load_lexicon(&args.lexicon)?;
    let file = File::open(&args.corpus).map_err(|e| CliError::io(&args.corpus, e))?;
    let records = corpus::read_unified(BufReader::new(file), &args.corpus.display().to_string())?;
    let lines: Vec<Vec<u8>> = records
        .par_iter()
        .map(|r| {
            let f = emotion_features_with(&r.text, &lexicon, args.mode);
            let mut line = serde_json::to_vec(&FeatureRecord {
                id: &r.id,
                f_emo: f.values,
                token_count: f.token_count,
                matched_count: f.matched_count,
            })
            .expect("serializes");
            line.push(b'\n');
            line
        })
        .collect();

    let mut out = Outputs::default();
    out.add(&args.out, lines.concat());
    out.commit("features", args, &[&args.lexicon.lexicon, &args.corpus], None)
}

pub fn corpus_convert(args: &ConvertArgs) -> CliResult {
    let mut config = if args.unified {
        MappingConfig::unified()
    } else {
        MappingConfig::for_source(args.source)
    };
    let overrides = [
        (&args.id_field, &mut config.id_field),
        (&args.topic_field, &mut config.topic_field),
        (&args.text_field, &mut config.text_field),
        (&args.label_field, &mut config.label_field),
    ];
    for (arg, field) in overrides {
        if let Some(v) = arg {
            *field = v.clone();
        }
    }

    let mut report = ConvertReport::default();
    for path in &args.inputs {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let part = corpus::convert(BufReader::new(file), &path.display().to_string(), args.source, &config)?;
        for e in &part.errors {
            eprintln!("{}:{}: {}", path.display(), e.row, e.message);
        }
        report.extend(part);
    }
    if report.all_failed() {
        return Err(Error::Format {
            origin: "corpus convert".into(),
            line: 0,
            message: format!("all {} rows failed", report.rows),
        }
        .into());
    }
    eprintln!(
        "converted {} of {} rows ({} skipped, {} errors)",
        report.records.len(),
        report.rows,
        report.skipped,
        report.errors.len()
    );

    let mut bytes = Vec::new();
    corpus::write_unified(&report.records, &mut bytes).expect("in-memory write");
    let mut out = Outputs::default();
    out.add(&args.out, bytes);
    let summary = serde_json::json!({
        "rows": report.rows,
        "records": report.records.len(),
        "skipped": report.skipped,
        "errors": report.errors,
    });
    let inputs: Vec<&Path> = args.inputs.iter().map(PathBuf::as_path).collect();
    out.commit("corpus convert", args, &inputs, Some(summary))
}

pub fn corpus_stats(args: &StatsArgs) -> CliResult {
    let file = File::open(&args.input).map_err(|e| CliError::io(&args.input, e))?;
    let records = corpus::read_unified(BufReader::new(file), &args.input.display().to_string())?;
    if records.is_empty() {
        return Err(Error::Format {
            origin: args.input.display().to_string(),
            line: 0,
            message: "corpus has no records".into(),
        }
        .into());
    }
    let stats = corpus::stats(&records)?;
    let mut out = Outputs::default();
    out.add(&args.out, json_line(&stats));
    out.commit("corpus stats", args, &[&args.input], None)
}
