//! `incidentctl`: operator command line.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |---|---|
//! | 0 | success |
//! | 1 | unexpected failure |
//! | 2 | usage error (unknown flag or subcommand) |
//! | 3 | invalid input (parse, validation, config) |
//! | 4 | file I/O |
//! | 5 | store rejected records, is corrupt or is locked |
//! | 6 | analytics precondition failed (degenerate design, unsupported k) |
//! | 7 | leakage found in redacted output |

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use incidentdb_core::anova::{two_way_anova_with_schema, AnovaSpec, Response};
use incidentdb_core::cluster::{analyze, KMeansOptions};
use incidentdb_core::confidentiality::{leakage_scan, redact_with_schema, InternalReport, RedactionPolicy};
use incidentdb_core::model::{
    read_csv, to_csv_string, to_jsonl_string, AiSystemCategory, CsvError, IncidentRecord, Schema, ValidationMode,
};
use incidentdb_core::significance::assess_record;
use incidentdb_core::synth::{synthesize, EffectShift, EffectTarget, FactorLevel, SeedSelection, SeedSet, SynthConfig};
use serde_json::json;

use crate::config::Config;
use crate::csv_io::{export_csv, import_csv, RowOutcome};
use crate::query::QueryFilter;
use crate::report::{write_report, ClusterSummary, ReportError, ReportOptions};
use crate::store::{read_snapshot, Source, Store, StoreEntry, StoreError, StoreOptions};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INVALID_INPUT: u8 = 3;
pub const EXIT_IO: u8 = 4;
pub const EXIT_STORE: u8 = 5;
pub const EXIT_ANALYTICS: u8 = 6;
pub const EXIT_LEAKAGE: u8 = 7;

#[derive(Debug, Parser)]
#[command(name = "incidentctl", version, about = "AI trading incident database operator tool")]
pub struct Cli {
    /// Config file (else $INCIDENTDB_CONFIG, else ./incidentdb.toml).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Store journal path, overriding the config.
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate records (.csv, .json or .jsonl).
    Validate {
        file: PathBuf,
        /// Accept out-of-range percents that strict mode rejects.
        #[arg(long)]
        lenient: bool,
    },
    /// Redact internal reports (a JSON object or array) into public records.
    Redact {
        input: PathBuf,
        /// Redaction policy (TOML or JSON); defaults to the config's.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = RecordFormat::Csv)]
        format: RecordFormat,
    },
    /// Print the significance verdict of each record.
    Assess { file: PathBuf },
    /// Generate a synthetic dataset from seed rows.
    Synth(SynthArgs),
    /// Append CSV rows to the store.
    Ingest {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = IngestSource::Csv)]
        source: IngestSource,
        /// Exit 5 if any row is rejected.
        #[arg(long)]
        fail_on_reject: bool,
    },
    /// Write matching store records.
    Export {
        /// `key=value` filter; repeatable.
        #[arg(long = "filter", value_name = "KEY=VALUE")]
        filters: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = RecordFormat::Csv)]
        format: RecordFormat,
    },
    /// Two-way ANOVA of an AI volume share over the store.
    Anova {
        #[arg(long, value_parser = parse_response)]
        response: Response,
        #[arg(long)]
        interaction: bool,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
    },
    /// K-means clustering with zone labelling over the store.
    Cluster {
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        n_init: usize,
        #[arg(long, value_enum, default_value_t = TableFormat::Json)]
        format: TableFormat,
    },
    /// Write term tables, centroid tables, plot data and summaries.
    Report {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        n_init: usize,
        #[arg(long)]
        interaction: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        addr: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2999)]
    pub n: usize,
    /// Output file; `.jsonl` writes JSON lines, anything else CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed rows (CSV); defaults to the four built-in sample rows.
    #[arg(long)]
    pub seeds: Option<PathBuf>,
    #[arg(long)]
    pub jitter_sigma: Option<f64>,
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    /// Draw region independently of everything else.
    #[arg(long)]
    pub region_neutral: bool,
    /// Cycle through seed rows instead of sampling them.
    #[arg(long)]
    pub round_robin: bool,
    /// `LEVEL:TARGET:SHIFT`, e.g. `ALGORITHMIC_TRADING:ai_buy:10`; repeatable.
    #[arg(long = "effect", value_parser = parse_effect)]
    pub effects: Vec<EffectShift>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecordFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IngestSource {
    Csv,
    Api,
    Synth,
}

impl From<IngestSource> for Source {
    fn from(s: IngestSource) -> Self {
        match s {
            IngestSource::Csv => Source::Csv,
            IngestSource::Api => Source::Api,
            IngestSource::Synth => Source::Synth,
        }
    }
}

fn parse_response(raw: &str) -> Result<Response, String> {
    Response::parse(raw).ok_or_else(|| format!("expected ai_buy_volume_pct or ai_sell_volume_pct, got {raw:?}"))
}

fn parse_effect(raw: &str) -> Result<EffectShift, String> {
    let parts: Vec<&str> = raw.split(':').collect();
    let [level, target, shift] = parts.as_slice() else {
        return Err(format!("expected LEVEL:TARGET:SHIFT, got {raw:?}"));
    };
    let level = match AiSystemCategory::parse(level) {
        Ok(c) => FactorLevel::AiSystemCategory(c),
        Err(_) => FactorLevel::MarketRegion(
            Schema::default().parse_region(level).map_err(|_| format!("unknown factor level {level:?}"))?,
        ),
    };
    let target = match target.trim().to_ascii_lowercase().as_str() {
        "ai_buy" | "ai_buy_volume_pct" => EffectTarget::AiBuy,
        "ai_sell" | "ai_sell_volume_pct" => EffectTarget::AiSell,
        "both" => EffectTarget::Both,
        other => return Err(format!("unknown effect target {other:?}")),
    };
    let shift: f64 = shift.trim().parse().map_err(|_| format!("shift must be a number, got {shift:?}"))?;
    Ok(EffectShift { level, target, shift })
}

/// A failure with the exit code of its class.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::new(EXIT_IO, format!("{}: {e}", path.display()))
}

fn store_err(e: StoreError) -> CliError {
    match e {
        StoreError::Io { .. } => CliError::new(EXIT_IO, e.to_string()),
        _ => CliError::new(EXIT_STORE, e.to_string()),
    }
}

fn csv_err(path: &Path, e: CsvError) -> CliError {
    match e {
        CsvError::Io(_) => CliError::new(EXIT_IO, format!("{}: {e}", path.display())),
        _ => CliError::new(EXIT_INVALID_INPUT, format!("{}: {e}", path.display())),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn is_ext(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

/// Parsed rows of a record file, numbered from 1, with per-row errors.
type Rows = Vec<(usize, Result<IncidentRecord, String>)>;

fn load_rows(path: &Path, schema: &Schema) -> Result<Rows, CliError> {
    if is_ext(path, "json") || is_ext(path, "jsonl") {
        let text = read_text(path)?;
        let values: Vec<serde_json::Value> = if is_ext(path, "jsonl") {
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(serde_json::from_str)
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::new(EXIT_INVALID_INPUT, format!("{}: {e}", path.display())))?
        } else {
            match serde_json::from_str(&text)
                .map_err(|e| CliError::new(EXIT_INVALID_INPUT, format!("{}: {e}", path.display())))?
            {
                serde_json::Value::Array(v) => v,
                v => vec![v],
            }
        };
        return Ok(values
            .into_iter()
            .enumerate()
            .map(|(i, v)| (i + 1, serde_json::from_value(v).map_err(|e| e.to_string())))
            .collect());
    }
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let rows = read_csv(schema, file).map_err(|e| csv_err(path, e))?;
    Ok(rows.into_iter().enumerate().map(|(i, r)| (i + 1, r.map_err(|e| e.reason))).collect())
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_all(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let mut out = open_output(path)?;
    let display = path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| io_err(&display, e))
}

struct Context {
    config: Config,
    schema: Schema,
    store_path: PathBuf,
}

impl Context {
    fn snapshot(&self) -> Result<Vec<StoreEntry>, CliError> {
        if !self.store_path.exists() {
            return Ok(Vec::new());
        }
        read_snapshot(&self.store_path).map_err(store_err)
    }

    fn records(&self) -> Result<Vec<IncidentRecord>, CliError> {
        Ok(self.snapshot()?.into_iter().map(|e| e.record).collect())
    }

    fn open_store(&self) -> Result<Store, CliError> {
        let opts =
            StoreOptions::from_config(&self.config).map_err(|e| CliError::new(EXIT_INVALID_INPUT, e.to_string()))?;
        Store::open(&self.store_path, opts).map_err(store_err)
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = Config::load(cli.config.as_deref()).map_err(|e| match e {
        crate::config::ConfigError::Io { .. } => CliError::new(EXIT_IO, e.to_string()),
        _ => CliError::new(EXIT_INVALID_INPUT, e.to_string()),
    })?;
    let schema = config.schema().map_err(|e| CliError::new(EXIT_INVALID_INPUT, e.to_string()))?;
    let store_path = cli.store.clone().unwrap_or_else(|| config.store_path.clone());
    let ctx = Context { config, schema, store_path };

    match cli.command {
        Command::Validate { file, lenient } => validate(&ctx, &file, lenient),
        Command::Redact { input, policy, out, format } => {
            redact(&ctx, &input, policy.as_deref(), out.as_deref(), format)
        }
        Command::Assess { file } => assess(&ctx, &file),
        Command::Synth(args) => synth(&ctx, args),
        Command::Ingest { file, source, fail_on_reject } => ingest(&ctx, &file, source.into(), fail_on_reject),
        Command::Export { filters, out, format } => export(&ctx, &filters, out.as_deref(), format),
        Command::Anova { response, interaction, format } => anova(&ctx, response, interaction, format),
        Command::Cluster { k, seed, n_init, format } => cluster(&ctx, k, seed, n_init, format),
        Command::Report { out_dir, k, seed, n_init, interaction } => {
            let opts = ReportOptions { k, seed, kmeans: KMeansOptions { n_init, ..Default::default() }, interaction };
            let records = ctx.records()?;
            let written = write_report(&records, &ctx.schema, &out_dir, &opts).map_err(|e| match e {
                ReportError::Io { .. } => CliError::new(EXIT_IO, e.to_string()),
                _ => CliError::new(EXIT_ANALYTICS, e.to_string()),
            })?;
            for p in written {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Serve { addr } => {
            let addr = addr.unwrap_or_else(|| ctx.config.server.addr.clone());
            let store = ctx.open_store()?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::new(EXIT_FAILURE, e.to_string()))?;
            rt.block_on(crate::service::serve(store, &addr))
                .map_err(|e| CliError::new(EXIT_IO, format!("serve on {addr}: {e}")))
        }
    }
}

fn validate(ctx: &Context, file: &Path, lenient: bool) -> Result<(), CliError> {
    let mode = if lenient { ValidationMode::Lenient } else { ValidationMode::Strict };
    let rows = load_rows(file, &ctx.schema)?;
    let mut bad = 0;
    for (row, parsed) in &rows {
        let problem = match parsed {
            Err(reason) => Some(reason.clone()),
            Ok(r) => {
                let report = ctx.schema.validate(r, mode);
                (!report.ok).then(|| report.to_string())
            }
        };
        if let Some(p) = problem {
            bad += 1;
            println!("row {row}: {p}");
        }
    }
    println!("{} rows, {} valid, {} invalid", rows.len(), rows.len() - bad, bad);
    if bad > 0 {
        return Err(CliError::new(EXIT_INVALID_INPUT, format!("{bad} invalid rows in {}", file.display())));
    }
    Ok(())
}

fn load_policy(ctx: &Context, path: Option<&Path>) -> Result<RedactionPolicy, CliError> {
    let Some(path) = path else { return Ok(ctx.config.redaction.clone()) };
    let text = read_text(path)?;
    let policy: RedactionPolicy = if is_ext(path, "json") {
        serde_json::from_str(&text)
            .map_err(|e| CliError::new(EXIT_INVALID_INPUT, format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| CliError::new(EXIT_INVALID_INPUT, format!("{}: {e}", path.display())))?
    };
    policy.validate().map_err(|e| CliError::new(EXIT_INVALID_INPUT, e.to_string()))?;
    Ok(policy)
}

fn redact(
    ctx: &Context,
    input: &Path,
    policy: Option<&Path>,
    out: Option<&Path>,
    format: RecordFormat,
) -> Result<(), CliError> {
    let policy = load_policy(ctx, policy)?;
    let invalid = |e: String| CliError::new(EXIT_INVALID_INPUT, format!("{}: {e}", input.display()));
    let reports: Vec<InternalReport> =
        match serde_json::from_str(&read_text(input)?).map_err(|e| invalid(e.to_string()))? {
            serde_json::Value::Array(items) => items
                .into_iter()
                .map(serde_json::from_value)
                .collect::<Result<_, _>>()
                .map_err(|e| invalid(e.to_string()))?,
            v => vec![serde_json::from_value(v).map_err(|e| invalid(e.to_string()))?],
        };
    let records = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            redact_with_schema(r, &policy, &ctx.schema).map_err(|e| invalid(format!("report {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let text = match format {
        RecordFormat::Csv => to_csv_string(&records),
        RecordFormat::Jsonl => to_jsonl_string(&records),
    };
    let findings = leakage_scan(&text, &policy);
    if !findings.is_empty() {
        for f in &findings {
            eprintln!("leak at {}: {:?} {:?}", f.location, f.kind, f.matched_text);
        }
        return Err(CliError::new(EXIT_LEAKAGE, format!("{} leakage findings; nothing written", findings.len())));
    }
    write_all(out, &text)
}

fn assess(ctx: &Context, file: &Path) -> Result<(), CliError> {
    let mut failures = 0;
    for (row, parsed) in load_rows(file, &ctx.schema)? {
        let line = match parsed {
            Ok(r) => {
                json!({ "row": row, "serial_no": r.serial_no, "verdict": assess_record(&r, &ctx.config.significance) })
            }
            Err(reason) => {
                failures += 1;
                json!({ "row": row, "error": reason })
            }
        };
        println!("{line}");
    }
    if failures > 0 {
        return Err(CliError::new(EXIT_INVALID_INPUT, format!("{failures} rows could not be parsed")));
    }
    Ok(())
}

fn synth(ctx: &Context, args: SynthArgs) -> Result<(), CliError> {
    let seeds = match &args.seeds {
        None => SeedSet::table2(),
        Some(path) => {
            let rows = load_rows(path, &ctx.schema)?;
            let records = rows
                .into_iter()
                .map(|(row, r)| r.map_err(|e| CliError::new(EXIT_INVALID_INPUT, format!("seed row {row}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            SeedSet::new(records).map_err(|e| CliError::new(EXIT_INVALID_INPUT, e.to_string()))?
        }
    };
    let defaults = SynthConfig::default();
    let cfg = SynthConfig {
        seed: args.seed,
        n: args.n,
        jitter_sigma: args.jitter_sigma.unwrap_or(defaults.jitter_sigma),
        categorical_mutation_rate: args.mutation_rate.unwrap_or(defaults.categorical_mutation_rate),
        region_neutral: args.region_neutral,
        effect_injection: args.effects,
        seed_selection: if args.round_robin { SeedSelection::RoundRobin } else { SeedSelection::Random },
        ..defaults
    };
    let records = synthesize(&seeds, &cfg).map_err(|e| CliError::new(EXIT_INVALID_INPUT, e.to_string()))?;
    let text = if is_ext(&args.out, "jsonl") { to_jsonl_string(&records) } else { to_csv_string(&records) };
    write_all(Some(&args.out), &text)?;
    log::info!("wrote {} records to {}", records.len(), args.out.display());
    Ok(())
}

fn ingest(ctx: &Context, file: &Path, source: Source, fail_on_reject: bool) -> Result<(), CliError> {
    let mut store = ctx.open_store()?;
    let torn = store.open_report().torn_bytes;
    if torn > 0 {
        log::warn!("discarded {torn} bytes of an interrupted append");
    }
    let reader: Box<dyn Read> = Box::new(File::open(file).map_err(|e| io_err(file, e))?);
    let report = import_csv(&mut store, reader, source).map_err(|e| csv_err(file, e))?;
    for o in report.rejections() {
        if let RowOutcome::Rejected { row, code, reason } = o {
            eprintln!("row {row}: {code}: {reason}");
        }
    }
    println!("{} accepted, {} rejected, store now {} records", report.accepted, report.rejected, store.len());
    if fail_on_reject && report.rejected > 0 {
        return Err(CliError::new(EXIT_STORE, format!("{} rows rejected", report.rejected)));
    }
    Ok(())
}

fn export(ctx: &Context, filters: &[String], out: Option<&Path>, format: RecordFormat) -> Result<(), CliError> {
    let pairs = filters
        .iter()
        .map(|f| {
            f.split_once('=').ok_or_else(|| CliError::new(EXIT_INVALID_INPUT, format!("filter {f:?} is not KEY=VALUE")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let filter =
        QueryFilter::from_pairs(pairs, &ctx.schema).map_err(|e| CliError::new(EXIT_INVALID_INPUT, e.to_string()))?;
    let entries = ctx.snapshot()?;
    match format {
        RecordFormat::Csv => {
            let mut w = open_output(out)?;
            let display = out.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
            export_csv(&entries, &filter, &mut w).map_err(|e| csv_err(&display, e))?;
            w.flush().map_err(|e| io_err(&display, e))
        }
        RecordFormat::Jsonl => {
            let (_, page) = filter.apply(&entries);
            write_all(out, &to_jsonl_string(page.into_iter().map(|e| &e.record)))
        }
    }
}

fn anova(ctx: &Context, response: Response, interaction: bool, format: TableFormat) -> Result<(), CliError> {
    let spec = AnovaSpec::new(response).with_interaction(interaction);
    let result = two_way_anova_with_schema(&ctx.records()?, &spec, &ctx.schema)
        .map_err(|e| CliError::new(EXIT_ANALYTICS, e.to_string()))?;
    let text = match format {
        TableFormat::Csv => result.term_table_csv(),
        TableFormat::Json => {
            serde_json::to_string_pretty(&json!({ "schema_version": crate::SCHEMA_VERSION, "result": result }))
                .expect("anova result serializes")
                + "\n"
        }
    };
    write_all(None, &text)
}

fn cluster(ctx: &Context, k: usize, seed: u64, n_init: usize, format: TableFormat) -> Result<(), CliError> {
    let opts = KMeansOptions { n_init, ..Default::default() };
    let analysis =
        analyze(&ctx.records()?, k, seed, &opts).map_err(|e| CliError::new(EXIT_ANALYTICS, e.to_string()))?;
    let text = match format {
        TableFormat::Csv => analysis.assignments_csv(),
        TableFormat::Json => {
            serde_json::to_string_pretty(&ClusterSummary::from_analysis(&analysis)).expect("summary serializes") + "\n"
        }
    };
    write_all(None, &text)
}
