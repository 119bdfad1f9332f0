use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tsqa::bundle::{load_orkgqa, Benchmark, Manifest, QType};
use tsqa::harness::{run_experiment, RunConfig, SystemKind};
use tsqa::report::{build_report, emit_report, render_grid, Format};
use tsqa::store::{collect_tables, Store};
use tsqa::tabmcq::load_tabmcq;
use tsqa::{adapter::ExternalReader, Error};
use tsqa_core::{read, LexicalReader, MatchMode, Origin, Reader, ReaderParams};

#[derive(Parser)]
#[command(
    name = "tsqa",
    version,
    about = "Question answering over verbalized tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse CSV tables and cache them with their verbalized contexts.
    Ingest {
        /// CSV files or directories containing them.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// JSON manifest with per-table `title` and `subject_column`.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value = "tsqa-store")]
        out: PathBuf,
    },
    /// Answer one question against one table.
    Ask {
        question: String,
        #[arg(long)]
        table: String,
        /// Store directory, benchmark bundle, or CSV file.
        #[arg(long, default_value = "tsqa-store")]
        bundle: PathBuf,
        #[arg(long, value_enum, default_value_t = ReaderChoice::Lexical)]
        reader: ReaderChoice,
        #[command(flatten)]
        adapter: AdapterArgs,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Run systems over a benchmark and write reports.
    Bench {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, value_enum, default_value_t = Dataset::Orkgqa)]
        dataset: Dataset,
        #[arg(long, value_delimiter = ',', default_value = "random,lucene,lexical")]
        systems: Vec<String>,
        /// Question types to keep, or `all`.
        #[arg(long, value_delimiter = ',', default_value = "all")]
        qtype: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "1,3,5,10")]
        k: Vec<usize>,
        /// Overrides each system's default match mode.
        #[arg(long = "match", value_enum)]
        match_mode: Option<MatchChoice>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_delimiter = ',', default_value = "csv,json")]
        format: Vec<String>,
        #[arg(long, default_value = "tsqa-report")]
        out: PathBuf,
        /// Include table verbalization in measured latency.
        #[arg(long)]
        time_context: bool,
        #[command(flatten)]
        adapter: AdapterArgs,
        #[command(flatten)]
        params: ParamArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReaderChoice {
    Lexical,
    External,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dataset {
    Orkgqa,
    Tabmcq,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatchChoice {
    Exact,
    Containment,
}

#[derive(Args)]
struct AdapterArgs {
    /// Command line of the reader adapter process.
    #[arg(long, env = "TSQA_ADAPTER_CMD")]
    adapter_cmd: Option<String>,
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long, default_value_t = 512)]
    max_seq_len: usize,
    #[arg(long, default_value_t = 128)]
    doc_stride: usize,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    #[arg(long, default_value_t = 15)]
    max_answer_len: usize,
    #[arg(long, default_value_t = 64)]
    max_question_len: usize,
}

impl ParamArgs {
    fn params(&self) -> ReaderParams {
        ReaderParams {
            max_seq_len: self.max_seq_len,
            doc_stride: self.doc_stride,
            top_k: self.top_k,
            max_answer_len: self.max_answer_len,
            max_question_len: self.max_question_len,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Ingest {
            paths,
            manifest,
            out,
        } => ingest(&paths, manifest.as_deref(), &out),
        Command::Ask {
            question,
            table,
            bundle,
            reader,
            adapter,
            params,
        } => ask(
            &question,
            &table,
            &bundle,
            reader,
            adapter.adapter_cmd,
            params.params(),
        ),
        Command::Bench {
            bundle,
            dataset,
            systems,
            qtype,
            k,
            match_mode,
            seed,
            workers,
            format,
            out,
            time_context,
            adapter,
            params,
        } => {
            let systems = systems
                .iter()
                .map(|s| s.parse::<SystemKind>())
                .collect::<Result<Vec<_>, _>>()?;
            let filter = parse_qtypes(&qtype)?;
            let formats = format
                .iter()
                .map(|f| f.parse::<Format>())
                .collect::<Result<Vec<_>, _>>()?;
            if k.is_empty() || k.iter().any(|&k| k == 0 || k > tsqa_core::metrics::K_MAX) {
                bail!("--k values must lie in 1..={}", tsqa_core::metrics::K_MAX);
            }
            if systems.contains(&SystemKind::External) && adapter.adapter_cmd.is_none() {
                bail!("the external system needs --adapter-cmd or TSQA_ADAPTER_CMD");
            }
            let config = RunConfig {
                params: params.params(),
                match_mode: match_mode.map(|m| match m {
                    MatchChoice::Exact => MatchMode::Exact,
                    MatchChoice::Containment => MatchMode::Containment,
                }),
                seed,
                workers,
                time_context,
                adapter_cmd: adapter.adapter_cmd,
            };
            let bench = match dataset {
                Dataset::Orkgqa => load_orkgqa(&bundle)?,
                Dataset::Tabmcq => load_tabmcq(&bundle)?,
            };
            bench_cmd(&bench, &systems, &filter, &k, &formats, &out, &config)
        }
    }
}

fn parse_qtypes(values: &[String]) -> anyhow::Result<Vec<QType>> {
    if values.iter().any(|v| v.trim().eq_ignore_ascii_case("all")) {
        return Ok(Vec::new());
    }
    Ok(values
        .iter()
        .map(|v| v.parse())
        .collect::<Result<Vec<_>, _>>()?)
}

fn ingest(paths: &[PathBuf], manifest: Option<&Path>, out: &Path) -> anyhow::Result<()> {
    let manifest = manifest.map(Manifest::read).transpose()?;
    let tables = collect_tables(paths, manifest.as_ref())?;
    let store = Store::build(tables)?;
    store
        .save(out)
        .with_context(|| format!("writing {}", out.display()))?;
    println!("{}", store.summary());
    Ok(())
}

fn ask(
    question: &str,
    table_id: &str,
    bundle: &Path,
    reader: ReaderChoice,
    adapter_cmd: Option<String>,
    params: ReaderParams,
) -> anyhow::Result<()> {
    let store = Store::open(bundle)?;
    let idx = store.table_index(table_id)?;
    let (table, ctx) = (&store.tables[idx], &store.contexts[idx]);
    let external;
    let reader: &dyn Reader = match reader {
        ReaderChoice::Lexical => &LexicalReader,
        ReaderChoice::External => {
            let Some(cmd) = adapter_cmd else {
                bail!("--reader external needs --adapter-cmd or TSQA_ADAPTER_CMD");
            };
            external = ExternalReader::spawn(&cmd, 1)?;
            &external
        }
    };
    let answers = read(question, ctx, &params, reader).map_err(Error::from)?;
    for (rank, a) in answers.iter().enumerate() {
        let provenance = match a.provenance {
            Some(Origin::Triple(i)) => {
                let t = &ctx.triples[i];
                format!(
                    "row {} column {:?}",
                    t.row + 1,
                    table.columns[t.column].name
                )
            }
            Some(Origin::Aggregate(i)) => {
                let f = &ctx.facts[i];
                format!("{:?} of column {:?}", f.kind, f.column).to_lowercase()
            }
            None => "-".to_string(),
        };
        println!("{}\t{:.4}\t{}\t{}", rank + 1, a.score, a.text, provenance);
    }
    Ok(())
}

fn bench_cmd(
    bench: &Benchmark,
    systems: &[SystemKind],
    filter: &[QType],
    ks: &[usize],
    formats: &[Format],
    out: &Path,
    config: &RunConfig,
) -> anyhow::Result<()> {
    let mut records = Vec::new();
    for &system in systems {
        log::info!("running {system}");
        records.push(run_experiment(system, bench, filter, config)?);
    }
    let report = build_report(&records, ks);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for &f in formats {
        let path = out.join(format!("report.{}", f.extension()));
        fs::write(&path, emit_report(&report, f))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    print!("{}", render_grid(&report));
    Ok(())
}
