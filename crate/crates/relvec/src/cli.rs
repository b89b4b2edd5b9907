//! Command-line front end: `evaluate`, `predict`, `stats`, `pca-export`, and
//! `validate` subcommands wiring files to the library.
//!
//! Exit codes: 0 on success, 1 on runtime failure (IO, malformed data, no
//! surviving queries), 2 on usage or validation errors. All randomness enters
//! through `--seed`. Relative file paths are resolved against
//! `RELVEC_DATA_DIR` when that variable is set.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::embedding::{load_embeddings, pca_2d, EmbeddingFormat, EmbeddingStore};
use crate::estimator::{Method, RelationEstimate};
use crate::eval::{
    run_evaluation, run_random_baseline, single_prediction_full, single_prediction_with_estimate,
    EvalError, EvalOptions, EvalReport, PathwayScope, Setting, SettingSpec,
};
use crate::kb::{
    kb_statistics, load_knowledge_base, restrict_pathway, EntityId, EntityKind, KnowledgeBase,
    PathwayId, RelationPair, StatsOptions,
};
use crate::validation::{validate_embedding_file, validate_kb_files, Finding};

const EXIT_OK: i32 = 0;
const EXIT_RUNTIME: i32 = 1;
const EXIT_USAGE: i32 = 2;

enum CliError {
    /// Bad flags, unknown names, invalid combinations: exit 2.
    Usage(String),
    /// IO failures, malformed data, evaluation errors: exit 1.
    Runtime(String),
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::SpecMismatch(msg) => CliError::Usage(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

macro_rules! runtime_from {
    ($($ty:ty),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Runtime(e.to_string())
            }
        })*
    };
}

runtime_from!(
    crate::embedding::EmbeddingError,
    crate::kb::KbError,
    crate::estimator::EstimatorError,
    crate::engine::EngineError,
    std::io::Error,
);

#[derive(Parser)]
#[command(
    name = "relvec",
    version,
    about = "Relation-vector estimation and analogy-based drug-gene link prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a setting (or the random baseline) and write a report
    Evaluate(EvaluateArgs),
    /// Rank the top-k candidates for one query entity
    Predict(PredictArgs),
    /// Knowledge-base statistics after vocabulary intersection
    Stats(StatsArgs),
    /// Project a token selection to 2-d coordinates
    PcaExport(PcaExportArgs),
    /// Check knowledge-base and embedding files, reporting every violation
    Validate(ValidateArgs),
}

#[derive(Args)]
struct EmbeddingArgs {
    /// Embedding file (word2vec format)
    #[arg(long)]
    embeddings: PathBuf,
    /// Embedding file format: text or binary
    #[arg(long, default_value = "text")]
    embedding_format: String,
}

impl EmbeddingArgs {
    fn format(&self) -> Result<EmbeddingFormat, CliError> {
        EmbeddingFormat::parse(&self.embedding_format).ok_or_else(|| {
            CliError::Usage(format!(
                "--embedding-format must be 'text' or 'binary', got {:?}",
                self.embedding_format
            ))
        })
    }

    fn load(&self) -> Result<EmbeddingStore, CliError> {
        let format = self.format()?;
        Ok(load_embeddings(&resolve_path(&self.embeddings), format)?)
    }
}

#[derive(Args)]
struct KbArgs {
    /// Relations TSV (header: drug<TAB>gene)
    #[arg(long)]
    relations: PathBuf,
    /// Pathway memberships TSV (header: pathway<TAB>kind<TAB>entity)
    #[arg(long)]
    pathways: Option<PathBuf>,
    /// First-appearance years TSV (header: kind<TAB>key<TAB>year)
    #[arg(long)]
    years: Option<PathBuf>,
    /// Display names TSV (header: entity<TAB>name)
    #[arg(long)]
    names: Option<PathBuf>,
}

impl KbArgs {
    fn load(&self) -> Result<KnowledgeBase, CliError> {
        Ok(load_knowledge_base(
            &resolve_path(&self.relations),
            self.pathways.as_ref().map(|p| resolve_path(p)).as_deref(),
            self.years.as_ref().map(|p| resolve_path(p)).as_deref(),
            self.names.as_ref().map(|p| resolve_path(p)).as_deref(),
        )?)
    }
}

#[derive(Args)]
struct SettingArgs {
    /// Setting name: G, P1, P2, Y1, Y2, P1Y1, P1Y2, P2Y1, P2Y2, or the
    /// reversed-direction Gp, P1p, P2p, Y1p, Y2p
    #[arg(long, default_value = "G")]
    setting: String,
    /// Slice year (required by Y settings)
    #[arg(long)]
    year: Option<i32>,
    /// Restrict to these pathway ids (default: all retained pathways)
    #[arg(long = "pathway")]
    pathway: Vec<String>,
    /// Keep pathways with at least this many related drugs
    #[arg(long, default_value_t = 2)]
    min_pathway_drugs: usize,
    /// Keep pathways with at least this many related genes
    #[arg(long, default_value_t = 2)]
    min_pathway_genes: usize,
}

impl SettingArgs {
    fn spec(&self) -> Result<SettingSpec, CliError> {
        let setting = Setting::parse_cli(&self.setting).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown setting {:?}; expected one of {}",
                self.setting,
                Setting::ALL.map(|s| s.cli_name()).join(", ")
            ))
        })?;
        let mut spec = SettingSpec::new(setting);
        spec.year = self.year;
        spec.min_related_drugs = self.min_pathway_drugs;
        spec.min_related_genes = self.min_pathway_genes;
        if !self.pathway.is_empty() {
            spec.pathways =
                PathwayScope::Explicit(self.pathway.iter().map(|p| PathwayId(p.clone())).collect());
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
}

impl OutputArgs {
    fn write(&self, content: &str) -> Result<(), CliError> {
        match &self.output {
            None => {
                print!("{content}");
                Ok(())
            }
            Some(path) => {
                let path = resolve_path(path);
                let mut f = File::create(&path)?;
                f.write_all(content.as_bytes())?;
                Ok(())
            }
        }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    embedding: EmbeddingArgs,
    #[command(flatten)]
    kb: KbArgs,
    #[command(flatten)]
    setting: SettingArgs,
    /// Relation-vector estimator: paired or naive
    #[arg(long, default_value = "paired")]
    estimator: String,
    /// Skip centering candidate embeddings by the universe mean
    #[arg(long)]
    no_centering: bool,
    /// Run the random-permutation baseline instead of an estimator
    #[arg(long)]
    baseline: bool,
    /// Baseline repeats (averaged)
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Base seed; repeat i uses seed + i
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for query evaluation (0 = all cores)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Report format: md, csv, or json
    #[arg(long, default_value = "md")]
    output_format: String,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    embedding: EmbeddingArgs,
    #[command(flatten)]
    kb: KbArgs,
    #[command(flatten)]
    setting: SettingArgs,
    /// Query entity: a prefixed id (D:... / G:...) or a display name
    #[arg(long)]
    query: String,
    /// Number of candidates to report
    #[arg(short, long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value = "paired")]
    estimator: String,
    #[arg(long)]
    no_centering: bool,
    /// Score with a previously exported relation-estimate JSON instead of
    /// recomputing one
    #[arg(long)]
    estimate_file: Option<PathBuf>,
    /// Write the relation estimate used for scoring as JSON
    #[arg(long)]
    save_estimate: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    embedding: EmbeddingArgs,
    #[command(flatten)]
    kb: KbArgs,
    /// Add the year-slice table for this year
    #[arg(long)]
    per_year: Option<i32>,
    /// Add the per-pathway aggregate table
    #[arg(long)]
    per_pathway: bool,
    #[arg(long, default_value_t = 2)]
    min_pathway_drugs: usize,
    #[arg(long, default_value_t = 2)]
    min_pathway_genes: usize,
    /// Report format: md or json
    #[arg(long, default_value = "md")]
    output_format: String,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct PcaExportArgs {
    #[command(flatten)]
    embedding: EmbeddingArgs,
    /// File with one embedding token per line
    #[arg(long)]
    tokens: PathBuf,
    /// Relations TSV; enables pair-weighted group means
    #[arg(long)]
    relations: Option<PathBuf>,
    #[arg(long)]
    pathways: Option<PathBuf>,
    #[arg(long)]
    years: Option<PathBuf>,
    #[arg(long)]
    names: Option<PathBuf>,
    /// Compute the group means over this pathway's relations
    #[arg(long)]
    pathway: Option<String>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long, default_value = "text")]
    embedding_format: String,
    #[arg(long)]
    relations: Option<PathBuf>,
    #[arg(long)]
    pathways: Option<PathBuf>,
    #[arg(long)]
    years: Option<PathBuf>,
    #[arg(long)]
    names: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

/// Prefixes relative paths with `RELVEC_DATA_DIR` when the variable is set.
fn resolve_path(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(prefix) = std::env::var("RELVEC_DATA_DIR") {
            if !prefix.is_empty() {
                return PathBuf::from(prefix).join(path);
            }
        }
    }
    path.to_path_buf()
}

fn relvec_estimate_from_json(json: &str) -> Result<RelationEstimate, CliError> {
    RelationEstimate::from_json(json)
        .map_err(|e| CliError::Runtime(format!("estimate file is not valid: {e}")))
}

fn parse_method(s: &str) -> Result<Method, CliError> {
    match s {
        "paired" => Ok(Method::Paired),
        "naive" => Ok(Method::Naive),
        other => Err(CliError::Usage(format!(
            "--estimator must be 'paired' or 'naive', got {other:?}"
        ))),
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    let result = match cli.command {
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Stats(args) => cmd_stats(args),
        Command::PcaExport(args) => cmd_pca_export(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_RUNTIME
        }
    }
}

fn render_report(report: &EvalReport, format: &str) -> Result<String, CliError> {
    match format {
        "md" => Ok(report.to_markdown()),
        "csv" => Ok(report.to_csv()),
        "json" => Ok(report.to_json()),
        other => Err(CliError::Usage(format!(
            "--output-format must be md, csv or json, got {other:?}"
        ))),
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<i32, CliError> {
    // Validate flag combinations before touching any file.
    let spec = args.setting.spec()?;
    let estimator = parse_method(&args.estimator)?;
    if args.baseline && args.repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    render_report(&EvalReport { rows: vec![] }, &args.output_format)?;

    let store = args.embedding.load()?;
    let kb = args.kb.load()?;
    let report = if args.baseline {
        run_random_baseline(&kb, &store, &spec, args.repeats, args.seed, args.workers)?
    } else {
        let options = EvalOptions {
            estimator,
            centering: !args.no_centering,
            workers: args.workers,
        };
        run_evaluation(&kb, &store, &spec, &options)?
    };
    args.out.write(&render_report(&report, &args.output_format)?)?;
    Ok(EXIT_OK)
}

/// Resolves a query string to an entity id: exact prefixed id first, then an
/// exact display-name match, otherwise a usage error with the lexically
/// closest ids and names.
fn resolve_query(kb: &KnowledgeBase, store: &EmbeddingStore, raw: &str) -> Result<EntityId, CliError> {
    if let Some(id) = kb.resolve_entity(raw) {
        return Ok(id);
    }
    let matches: Vec<EntityId> = kb
        .names()
        .iter()
        .filter(|(_, name)| name.as_str() == raw)
        .map(|(id, _)| id.clone())
        .collect();
    if matches.len() > 1 {
        return Err(CliError::Usage(format!(
            "name {raw:?} is ambiguous: {}",
            matches.iter().map(|id| id.as_str()).collect::<Vec<_>>().join(", ")
        )));
    }
    // Nearest lexical suggestions over ids and names.
    let mut candidates: Vec<(usize, String)> = kb
        .drugs()
        .iter()
        .chain(kb.genes().iter())
        .filter(|id| store.contains(id.as_str()))
        .flat_map(|id| {
            let mut forms = vec![id.as_str().to_string()];
            if let Some(name) = kb.name_of(id) {
                forms.push(name.to_string());
            }
            forms
        })
        .map(|form| (strsim::levenshtein(raw, &form), form))
        .collect();
    candidates.sort();
    candidates.dedup_by(|a, b| a.1 == b.1);
    let suggestions: Vec<String> = candidates.into_iter().take(3).map(|(_, form)| form).collect();
    Err(CliError::Usage(format!(
        "unknown query {raw:?}; closest matches: {}",
        if suggestions.is_empty() {
            "(none)".to_string()
        } else {
            suggestions.join(", ")
        }
    )))
}

fn cmd_predict(args: PredictArgs) -> Result<i32, CliError> {
    let spec = args.setting.spec()?;
    let estimator = parse_method(&args.estimator)?;
    if args.k == 0 {
        return Err(CliError::Usage("-k must be at least 1".into()));
    }

    let store = args.embedding.load()?;
    let kb = args.kb.load()?;
    let query = resolve_query(&kb, &store, &args.query)?;
    let (prediction, estimate) = match &args.estimate_file {
        Some(path) => {
            let json = std::fs::read_to_string(resolve_path(path))?;
            let estimate = relvec_estimate_from_json(&json)?;
            let prediction = single_prediction_with_estimate(
                &kb,
                &store,
                &spec,
                &query,
                args.k,
                &estimate,
                !args.no_centering,
            )?;
            (prediction, estimate)
        }
        None => single_prediction_full(
            &kb,
            &store,
            &spec,
            &query,
            args.k,
            estimator,
            !args.no_centering,
        )?,
    };
    if let Some(path) = &args.save_estimate {
        let json = estimate
            .to_json()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        std::fs::write(resolve_path(path), json + "\n")?;
    }

    let mut out = String::new();
    for (rank, (id, score)) in prediction.ordered.iter().enumerate() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.6}\n",
            kb.display(&query),
            rank + 1,
            kb.display(id),
            score
        ));
    }
    args.out.write(&out)?;
    Ok(EXIT_OK)
}

fn cmd_stats(args: StatsArgs) -> Result<i32, CliError> {
    if args.output_format != "md" && args.output_format != "json" {
        return Err(CliError::Usage(format!(
            "--output-format must be md or json, got {:?}",
            args.output_format
        )));
    }
    let store = args.embedding.load()?;
    let kb = args.kb.load()?;
    let options = StatsOptions {
        per_pathway: args.per_pathway || args.kb.pathways.is_some(),
        per_year: args.per_year,
        min_related_drugs: args.min_pathway_drugs,
        min_related_genes: args.min_pathway_genes,
    };
    let report = kb_statistics(&kb, &store, &options)?;
    let content = match args.output_format.as_str() {
        "md" => report.to_markdown(),
        _ => serde_json::to_string_pretty(&report).expect("stats serialize") + "\n",
    };
    args.out.write(&content)?;
    Ok(EXIT_OK)
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_pca_export(args: PcaExportArgs) -> Result<i32, CliError> {
    let tokens_path = resolve_path(&args.tokens);
    let file = File::open(&tokens_path)?;
    let mut tokens = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let token = line.trim();
        if !token.is_empty() {
            tokens.push(token.to_string());
        }
    }
    if tokens.len() < 3 {
        return Err(CliError::Usage(format!(
            "PCA needs at least 3 tokens, got {}",
            tokens.len()
        )));
    }

    let store = args.embedding.load()?;
    let pca = pca_2d(&store, &tokens)?;

    let kb = match &args.relations {
        Some(relations) => Some(load_knowledge_base(
            &resolve_path(relations),
            args.pathways.as_ref().map(|p| resolve_path(p)).as_deref(),
            args.years.as_ref().map(|p| resolve_path(p)).as_deref(),
            args.names.as_ref().map(|p| resolve_path(p)).as_deref(),
        )?),
        None => None,
    };

    let group_of = |token: &str| match EntityId::parse(token) {
        Ok(id) if id.kind() == EntityKind::Drug => "drug",
        Ok(_) => "gene",
        Err(_) => "",
    };

    let mut out = String::from("token,x,y,group\n");
    for point in &pca.points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            csv_field(&point.token),
            point.x,
            point.y,
            group_of(&point.token)
        ));
    }

    // Group means mirroring the relation-vector construction: pair-weighted
    // over the relations induced by the selection when a knowledge base is
    // given, plain group means otherwise.
    let selection: BTreeSet<&str> = tokens.iter().map(|s| s.as_str()).collect();
    let (drug_mean, gene_mean) = match &kb {
        Some(kb) => {
            let subset = match &args.pathway {
                Some(p) => restrict_pathway(kb, &PathwayId(p.clone()))?,
                None => kb.relation_subset(),
            };
            let induced: Vec<&RelationPair> = subset
                .pairs()
                .iter()
                .filter(|p| {
                    selection.contains(p.drug.as_str())
                        && selection.contains(p.gene.as_str())
                        && store.contains(p.drug.as_str())
                        && store.contains(p.gene.as_str())
                })
                .collect();
            if induced.is_empty() {
                (None, None)
            } else {
                let drugs = store.mean_vector(induced.iter().map(|p| p.drug.as_str()))?;
                let genes = store.mean_vector(induced.iter().map(|p| p.gene.as_str()))?;
                (Some(drugs), Some(genes))
            }
        }
        None => {
            let drugs: Vec<&str> = tokens
                .iter()
                .map(|t| t.as_str())
                .filter(|t| group_of(t) == "drug")
                .collect();
            let genes: Vec<&str> = tokens
                .iter()
                .map(|t| t.as_str())
                .filter(|t| group_of(t) == "gene")
                .collect();
            let dm = if drugs.is_empty() {
                None
            } else {
                Some(store.mean_vector(drugs.iter().copied())?)
            };
            let gm = if genes.is_empty() {
                None
            } else {
                Some(store.mean_vector(genes.iter().copied())?)
            };
            (dm, gm)
        }
    };
    if let Some(m) = drug_mean {
        let (x, y) = pca.project(&m)?;
        out.push_str(&format!("mean(drug),{x},{y},mean\n"));
    }
    if let Some(m) = gene_mean {
        let (x, y) = pca.project(&m)?;
        out.push_str(&format!("mean(gene),{x},{y},mean\n"));
    }

    args.out.write(&out)?;
    Ok(EXIT_OK)
}

fn cmd_validate(args: ValidateArgs) -> Result<i32, CliError> {
    let mut findings: Vec<Finding> = Vec::new();
    if let Some(path) = &args.embeddings {
        let format = EmbeddingFormat::parse(&args.embedding_format).ok_or_else(|| {
            CliError::Usage(format!(
                "--embedding-format must be 'text' or 'binary', got {:?}",
                args.embedding_format
            ))
        })?;
        findings.extend(validate_embedding_file(&resolve_path(path), format)?);
    }
    findings.extend(validate_kb_files(
        args.relations.as_ref().map(|p| resolve_path(p)).as_deref(),
        args.pathways.as_ref().map(|p| resolve_path(p)).as_deref(),
        args.years.as_ref().map(|p| resolve_path(p)).as_deref(),
        args.names.as_ref().map(|p| resolve_path(p)).as_deref(),
    )?);
    let content = serde_json::to_string_pretty(&findings).expect("findings serialize") + "\n";
    args.out.write(&content)?;
    Ok(if findings.is_empty() { EXIT_OK } else { EXIT_RUNTIME })
}
