//! `movecorpus` subcommands.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use movecorpus::bootstrap::{
    apply_reviews, build_committee, export_gold, export_silver, format_precision, prepare_iteration, simulate_loop,
    InteractiveReviewer, LoopState, MemberSelection, OracleReviewer, PoolItem, ReviewerPort,
};
use movecorpus::committee::{read_sweep_results, run_sweep, select_top_k, write_sweep_results, ComboSpec, SweepEntry};
use movecorpus::config::Config;
use movecorpus::corpus::store::{Record, Store, StoreError};
use movecorpus::ingest::{filter_multi_place, infer_media, load_document, process_document, Gazetteer};

use crate::api::{self, AppState};
use crate::workers::WorkerRegistry;

#[derive(Debug, Parser)]
#[command(name = "movecorpus", version, about = "Build a movement-statement corpus by committee bootstrapping")]
pub struct Cli {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Corpus store directory.
    #[arg(long, global = true, default_value = "store")]
    pub store: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReviewerKind {
    Interactive,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportKind {
    Gold,
    Silver,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch, extract, segment, tag and filter documents into the store.
    Ingest {
        /// Local paths or http(s) URLs.
        #[arg(long = "source", num_args = 1..)]
        sources: Vec<String>,
        /// File listing one source per line.
        #[arg(long)]
        url_list: Option<PathBuf>,
        #[arg(long)]
        gazetteer: Option<PathBuf>,
        #[arg(long)]
        min_places: Option<usize>,
    },
    /// Evaluate every grid combination on a held-out split of the corpus.
    Sweep {
        #[arg(long)]
        out: PathBuf,
    },
    /// Pick the top-k combinations from sweep results.
    Committee {
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        rule: Option<String>,
        /// Writes the selected members as JSON for `iterate --committee`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one bootstrapping round and persist its outcome.
    Iterate {
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long, value_enum, default_value = "interactive")]
        reviewer: ReviewerKind,
        /// `statement_id<TAB>1|0` per line, for the oracle reviewer.
        #[arg(long)]
        oracle_labels: Option<PathBuf>,
        /// Fixed members written by `committee --out`.
        #[arg(long)]
        committee: Option<PathBuf>,
    },
    /// Write the gold corpus or a silver corpus as NDJSON.
    Export {
        #[arg(long, value_enum)]
        kind: ExportKind,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        negative_ceiling: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the loop on synthetic data with a ground-truth reviewer.
    Simulate {
        #[arg(long, default_value_t = 8)]
        iterations: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        pool_size: Option<usize>,
        #[arg(long)]
        positive_rate: Option<f64>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        workers: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Ingest { sources, url_list, gazetteer, min_places } => {
            let mut all = sources;
            if let Some(list) = url_list {
                let text = std::fs::read_to_string(&list).with_context(|| format!("reading {}", list.display()))?;
                all.extend(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from));
            }
            let gaz = gazetteer.map(Gazetteer::load).transpose()?;
            ingest(&config, &cli.store, &all, gaz, min_places.unwrap_or(config.ingest.min_places))
        }
        Command::Sweep { out } => sweep(&config, &cli.store, &out),
        Command::Committee { sweep, k, rule, out } => {
            committee(&sweep, k.unwrap_or(config.committee.k), rule.as_deref().unwrap_or(&config.committee.rule), out.as_deref())
        }
        Command::Iterate { batch, reviewer, oracle_labels, committee } => {
            iterate(&config, &cli.store, batch, reviewer, oracle_labels.as_deref(), committee.as_deref())
        }
        Command::Export { kind, threshold, negative_ceiling, seed, out } => {
            let mut silver = config.silver.clone();
            silver.threshold = threshold.unwrap_or(silver.threshold);
            silver.negative_ceiling = negative_ceiling.unwrap_or(silver.negative_ceiling);
            silver.seed = seed.unwrap_or(silver.seed);
            let sink: Box<dyn Write> = match &out {
                Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
                None => Box::new(std::io::stdout().lock()),
            };
            let store = Store::open(&cli.store)?;
            match kind {
                ExportKind::Gold => {
                    let meta = export_gold(store.state().statements.values(), sink)?;
                    eprintln!("gold: {} statements ({} positive, {} negative)", meta.total, meta.positives, meta.negatives);
                }
                ExportKind::Silver => {
                    let resources = config.resources()?;
                    let toolkit = config.toolkit(&resources);
                    let state = LoopState::from_corpus(store.state());
                    let (committee, _) = build_committee(&state, &config.loop_config(), &toolkit, state.next_iter_num())?;
                    let pool: Vec<_> = state.pool.values().map(PoolItem::unit).collect();
                    let meta = export_silver(&committee, &pool, &silver, sink)?;
                    eprintln!("silver: {} positive, {} negative", meta.positives, meta.negatives);
                }
            }
            Ok(())
        }
        Command::Simulate { iterations, seed, pool_size, positive_rate } => {
            let mut sim = config.simulation.clone();
            sim.pool_size = pool_size.unwrap_or(sim.pool_size);
            sim.positive_rate = positive_rate.unwrap_or(sim.positive_rate);
            println!("iter\tpredicted\ttp\tfp\tP\tcorpus");
            for r in simulate_loop(&sim, iterations, seed)? {
                println!(
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    r.iter_num, r.candidates_predicted, r.tp, r.fp, r.precision_display, r.corpus_total_after
                );
            }
            Ok(())
        }
        Command::Serve { port, workers } => {
            let path = workers.or_else(|| config.service.workers.clone()).context("a worker registry is required (--workers)")?;
            let registry = WorkerRegistry::load(&path).with_context(|| format!("loading {}", path.display()))?;
            let resources = config.resources()?;
            let store = Store::open(&cli.store)?;
            let port = port.unwrap_or(config.service.port);
            let state = AppState::new(store, config, resources, registry);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(api::serve(state, port))?;
            Ok(())
        }
    }
}

fn ingest(config: &Config, store_dir: &Path, sources: &[String], gazetteer: Option<Gazetteer>, min_places: usize) -> Result<()> {
    if sources.is_empty() {
        bail!("no sources given");
    }
    let resources = config.resources()?;
    let gaz = gazetteer.as_ref().unwrap_or(&resources.gazetteer);
    let mut docs = Vec::new();
    for src in sources {
        let processed = infer_media(src)
            .and_then(|media| load_document(src, media))
            .and_then(|doc| process_document(doc, &resources.abbreviations, gaz));
        match processed {
            Ok(doc) => docs.push(doc),
            Err(e) => log::warn!("skipping {src}: {e}"),
        }
    }
    let (kept, dropped) = filter_multi_place(docs, min_places);
    let (n_kept, n_dropped) = (kept.len(), dropped.len());
    let mut store = Store::open(store_dir)?;
    let mut duplicates = 0;
    for doc in kept.into_iter().chain(dropped) {
        match store.append(Record::DocumentAdded(doc)) {
            Ok(_) => {}
            Err(StoreError::DuplicateDocument(id)) => {
                log::info!("document {id} already in the store");
                duplicates += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    store.write_snapshot()?;
    println!("filtered in: {n_kept}, filtered out: {n_dropped}, already present: {duplicates}");
    Ok(())
}

fn print_entries(entries: &[SweepEntry]) {
    let show = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
    println!("combo\tP\tR\tF\tstatus");
    for e in entries {
        let recall = e.metrics.as_ref().and_then(|m| m.recall);
        println!("{}\t{}\t{}\t{}\t{:?}", e.combo_id, show(e.precision()), show(recall), show(e.f_measure()), e.status);
    }
}

fn sweep(config: &Config, store_dir: &Path, out: &Path) -> Result<()> {
    let resources = config.resources()?;
    let toolkit = config.toolkit(&resources);
    let store = Store::open(store_dir)?;
    let units = LoopState::from_corpus(store.state()).training_units(config.iteration.undecided);
    let result = run_sweep(&units, &config.grid, &toolkit, &config.sweep)?;
    write_sweep_results(out, &result.entries)?;
    print_entries(&result.entries);
    Ok(())
}

fn committee(sweep: &Path, k: usize, rule: &str, out: Option<&Path>) -> Result<()> {
    let entries = read_sweep_results(sweep)?;
    let top = select_top_k(&entries, k)?;
    println!("rule: {rule}");
    print_entries(&top);
    if let Some(out) = out {
        let specs: Vec<ComboSpec> = top.iter().map(SweepEntry::spec).collect();
        std::fs::write(out, serde_json::to_string_pretty(&specs)?)?;
    }
    Ok(())
}

fn read_oracle(path: &Path) -> Result<HashMap<String, bool>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut truth = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, label) = line.split_once('\t').with_context(|| format!("line {}: expected id<TAB>label", i + 1))?;
        let positive = match label.trim() {
            "1" | "true" | "movement" => true,
            "0" | "false" | "not_movement" => false,
            other => bail!("line {}: unknown label {other:?}", i + 1),
        };
        truth.insert(id.to_string(), positive);
    }
    Ok(truth)
}

fn iterate(
    config: &Config,
    store_dir: &Path,
    batch: Option<usize>,
    reviewer: ReviewerKind,
    oracle_labels: Option<&Path>,
    committee: Option<&Path>,
) -> Result<()> {
    let resources = config.resources()?;
    let toolkit = config.toolkit(&resources);
    let mut cfg = config.loop_config();
    if let Some(b) = batch {
        cfg.batch_size = b;
    }
    if let Some(path) = committee {
        let members: Vec<ComboSpec> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.selection = MemberSelection::Fixed { members };
    }
    let mut reviewer: Box<dyn ReviewerPort> = match reviewer {
        ReviewerKind::Oracle => {
            let path = oracle_labels.context("--oracle-labels is required with --reviewer oracle")?;
            Box::new(OracleReviewer::new(read_oracle(path)?))
        }
        ReviewerKind::Interactive => Box::new(InteractiveReviewer::new(std::io::stdin().lock(), std::io::stderr())),
    };

    let mut store = Store::open(store_dir)?;
    let mut state = LoopState::from_corpus(store.state());
    let mut prepared = prepare_iteration(&state, &cfg, &toolkit)?;
    eprintln!(
        "iteration {}: committee [{}] predicted {} positive of {}; reviewing {}",
        prepared.iter_num,
        prepared.members.join(", "),
        prepared.predicted_positive,
        prepared.pool_size,
        prepared.queue.len()
    );
    while let Some(c) = prepared.queue.next_pending().cloned() {
        let decision = reviewer.review(&c)?;
        prepared.queue.record(&c.statement_id, decision)?;
    }
    let (record, added) = apply_reviews(&mut state, &prepared)?;
    crate::commit_iteration(&mut store, &record, added)?;
    store.write_snapshot()?;
    println!(
        "iteration {}: {} reviewed, {} confirmed, P = {}, corpus {}",
        record.iter_num,
        record.candidates_predicted,
        record.tp,
        format_precision(record.precision),
        record.corpus_total_after
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_subcommands() {
        let cli = Cli::try_parse_from(["movecorpus", "--store", "s", "iterate", "--batch", "10", "--reviewer", "oracle"]).unwrap();
        assert_eq!(cli.store, PathBuf::from("s"));
        assert!(matches!(cli.command, Command::Iterate { batch: Some(10), reviewer: ReviewerKind::Oracle, .. }));
        let cli = Cli::try_parse_from(["movecorpus", "export", "--kind", "silver", "--threshold", "0.8"]).unwrap();
        assert!(matches!(cli.command, Command::Export { kind: ExportKind::Silver, threshold: Some(t), .. } if t == 0.8));
        assert!(Cli::try_parse_from(["movecorpus", "export", "--kind", "bronze"]).is_err());
    }

    #[test]
    fn oracle_file_parses() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("o.tsv");
        std::fs::write(&p, "# id\tlabel\na:0-3\t1\nb:0-3\tnot_movement\n").unwrap();
        let t = read_oracle(&p).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t["a:0-3"]);
        assert!(!t["b:0-3"]);
        std::fs::write(&p, "a:0-3\tmaybe\n").unwrap();
        assert!(read_oracle(&p).is_err());
    }
}
