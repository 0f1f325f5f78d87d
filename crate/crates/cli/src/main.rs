use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use ybenum::enumerate::{
    enumerate_cycle_sets, enumerate_non_involutive, enumerate_racks, EnumError, Enumeration, Kind, Progress, SearchConfig,
    SearchStats, SymmetryMode,
};
use ybenum::props::Summary;
use ybenum::store::{
    canonicalize, dataset_stats, open_dataset, read_dataset, write_dataset, write_dataset_file, DatasetHeader, DatasetKind,
    Record, StoreError,
};
use ybenum::yb::{cycle_set_to_solution, skew_cycle_set_to_solution, solution_to_cycle_set, solution_to_skew_cycle_set};
use ybenum::{Permutation, SkewCycleSet};

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "ybenum", version, about = "Enumerate and classify finite set-theoretic Yang-Baxter solutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate all structures of one size up to isomorphism.
    Enumerate(EnumerateArgs),
    /// Write one classification line per record.
    Classify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summary counts of a dataset.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Re-check axioms and the braid relation on every record.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Convert between cycle sets, skew cycle sets and solutions.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        to: Target,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Are records A and B (1-based) isomorphic?
    Isomorphic {
        a: usize,
        b: usize,
        #[arg(long = "in")]
        input: PathBuf,
        /// Take record B from this file instead.
        #[arg(long = "in-b")]
        input_b: Option<PathBuf>,
    },
    /// Rewrite a dataset as canonical representatives in canonical order.
    Canon {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EnumKind {
    Cycleset,
    Rack,
    Noninvolutive,
    Biquandle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Symmetry {
    Auto,
    Full,
    Gens,
    Support3,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Solution,
    Cycleset,
    Skew,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    kind: EnumKind,
    #[arg(long)]
    n: usize,
    /// Restrict to the conjugacy class of this permutation, e.g. "(1 2 3)(4 5)".
    #[arg(long)]
    diagonal: Option<String>,
    #[arg(long, value_enum, default_value = "auto")]
    symmetry: Symmetry,
    #[arg(long, env = "YBENUM_JOBS", default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    budget_nodes: Option<u64>,
    #[arg(long)]
    budget_secs: Option<f64>,
    /// Suppress periodic progress lines.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Verify(String),
    Budget,
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Io(_) | StoreError::Header(_) => Failure::Usage(e.to_string()),
            _ => Failure::Verify(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Verify(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(EXIT_VERIFY)
        }
        Err(Failure::Budget) => ExitCode::from(EXIT_BUDGET),
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Enumerate(a) => enumerate(a),
        Command::Classify { input, out } => classify(&input, out.as_deref()),
        Command::Stats { input } => {
            let summary = dataset_stats(open_dataset(&input, true)?)?;
            print!("{summary}");
            Ok(())
        }
        Command::Verify { input } => verify(&input),
        Command::Convert { input, to, out } => convert(&input, to, out.as_deref()),
        Command::Isomorphic { a, b, input, input_b } => isomorphic(a, b, &input, input_b.as_deref()),
        Command::Canon { input, out } => {
            let (header, records) = read_dataset(&input, true)?;
            let mut h = DatasetHeader::new(header.kind, header.n);
            h.partial = header.partial;
            h.producer = header.producer;
            emit(&h, &canonicalize(&records), out.as_deref())
        }
    }
}

fn emit(header: &DatasetHeader, records: &[Record], out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => {
            write_dataset_file(p, header, records)?;
        }
        None => {
            let h = header.clone().with_count(records.len() as u64);
            write_dataset(&mut std::io::stdout().lock(), &h, records)?;
        }
    }
    Ok(())
}

fn spawn_progress(progress: Arc<Progress>, start: Instant) -> (Arc<std::sync::atomic::AtomicBool>, thread::JoinHandle<()>) {
    let stop = Arc::new(std::sync::atomic::AtomicBool::new(false));
    let flag = stop.clone();
    let handle = thread::spawn(move || {
        let mut last = Instant::now();
        while !flag.load(Ordering::Relaxed) {
            thread::sleep(Duration::from_millis(100));
            if last.elapsed() < Duration::from_secs(2) {
                continue;
            }
            last = Instant::now();
            let secs = start.elapsed().as_secs_f64();
            let nodes = progress.nodes.load(Ordering::Relaxed);
            eprintln!(
                "[{secs:.0}s] nodes={nodes} ({:.0}/s) found={} subtrees={}/{}",
                nodes as f64 / secs.max(1e-9),
                progress.found.load(Ordering::Relaxed),
                progress.tasks_done.load(Ordering::Relaxed),
                progress.tasks_total.load(Ordering::Relaxed),
            );
        }
    });
    (stop, handle)
}

fn enumerate(a: EnumerateArgs) -> Result<(), Failure> {
    let kind = match a.kind {
        EnumKind::Cycleset => Kind::CycleSet,
        EnumKind::Rack => Kind::Rack,
        EnumKind::Noninvolutive | EnumKind::Biquandle => Kind::SkewOverRack,
    };
    let mut cfg = SearchConfig::new(a.n, kind).jobs(a.jobs);
    cfg.symmetry = match a.symmetry {
        Symmetry::Auto => SymmetryMode::Auto,
        Symmetry::Full => SymmetryMode::Full,
        Symmetry::Gens => SymmetryMode::Generators,
        Symmetry::Support3 => {
            cfg.support_k = 3;
            SymmetryMode::Support
        }
        Symmetry::None => SymmetryMode::None,
    };
    if let Some(d) = &a.diagonal {
        if matches!(kind, Kind::SkewOverRack) {
            return Err(Failure::Usage("--diagonal applies to cycleset and rack searches".into()));
        }
        let p = Permutation::parse_cycles(d, a.n).map_err(|e| Failure::Usage(format!("--diagonal: {e}")))?;
        cfg.diagonal_filter = Some(vec![p.cycle_type()]);
    }
    cfg.node_budget = a.budget_nodes;
    if let Some(s) = a.budget_secs {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Failure::Usage("--budget-secs must be a non-negative number".into()));
        }
        cfg.time_budget = Some(Duration::from_secs_f64(s));
    }
    if a.n == 0 || a.n > ybenum::enumerate::MAX_SEARCH_SIZE {
        return Err(Failure::Usage(format!("--n must be in 1..={}", ybenum::enumerate::MAX_SEARCH_SIZE)));
    }
    let start = Instant::now();
    let reporter = if a.quiet {
        None
    } else {
        let p = Arc::new(Progress::default());
        cfg.progress = Some(p.clone());
        Some(spawn_progress(p, start))
    };

    fn split<T: std::fmt::Debug>(r: Result<Enumeration<T>, EnumError<T>>) -> Result<(Vec<T>, SearchStats, bool), Failure> {
        match r {
            Ok(e) => Ok((e.items, e.stats, false)),
            Err(EnumError::BudgetExceeded(e)) => Ok((e.items, e.stats, true)),
            Err(EnumError::Config(m)) => Err(Failure::Usage(m)),
        }
    }
    let (dataset_kind, records, stats, partial) = match a.kind {
        EnumKind::Cycleset => {
            let (items, s, p) = split(enumerate_cycle_sets(&cfg))?;
            (DatasetKind::CycleSet, items.into_iter().map(Record::CycleSet).collect::<Vec<_>>(), s, p)
        }
        EnumKind::Rack => {
            let (items, s, p) = split(enumerate_racks(&cfg))?;
            (DatasetKind::Rack, items.into_iter().map(Record::Rack).collect(), s, p)
        }
        EnumKind::Noninvolutive | EnumKind::Biquandle => {
            let quandles = matches!(a.kind, EnumKind::Biquandle);
            let (items, s, p) = split(enumerate_non_involutive(&cfg, quandles))?;
            (DatasetKind::SkewCycleSet, items.into_iter().map(Record::Skew).collect(), s, p)
        }
    };
    if let Some((stop, handle)) = reporter {
        stop.store(true, Ordering::Relaxed);
        let _ = handle.join();
    }

    let mut producer = format!(
        "ybenum {} enumerate --kind {} --n {}",
        env!("CARGO_PKG_VERSION"),
        a.kind.to_possible_value().unwrap().get_name(),
        a.n
    );
    if let Some(d) = &a.diagonal {
        producer.push_str(&format!(" --diagonal {d}"));
    }
    let mut header = DatasetHeader::new(dataset_kind, a.n).with_producer(producer);
    header.partial = partial;
    emit(&header, &records, a.out.as_deref())?;
    eprintln!("{stats}");
    if partial {
        eprintln!("budget exceeded: output is partial");
        return Err(Failure::Budget);
    }
    Ok(())
}

fn classify(input: &Path, out: Option<&Path>) -> Result<(), Failure> {
    use std::io::Write;
    let reader = open_dataset(input, true)?;
    if reader.header().kind == DatasetKind::Rack {
        return Err(Failure::Usage("racks carry no solution classification".into()));
    }
    let mut sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut summary = Summary::default();
    for (i, rec) in reader.enumerate() {
        let c = rec?.classify().expect("non-rack record");
        summary.add(&c);
        writeln!(sink, "{} {c}", i + 1).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    sink.flush().map_err(|e| Failure::Usage(e.to_string()))?;
    eprint!("{summary}");
    Ok(())
}

fn verify(input: &Path) -> Result<(), Failure> {
    let reader = open_dataset(input, false)?;
    let header = reader.header().clone();
    let mut count = 0u64;
    for (i, rec) in reader.enumerate() {
        let rec = rec?;
        rec.verify().map_err(|m| Failure::Verify(format!("record {}: {m}", i + 1)))?;
        count += 1;
    }
    if let Some(c) = header.count {
        if c != count {
            return Err(Failure::Verify(format!("header count={c} but {count} records present")));
        }
    }
    println!("ok {count} records");
    Ok(())
}

fn convert(input: &Path, to: Target, out: Option<&Path>) -> Result<(), Failure> {
    let (header, records) = read_dataset(input, true)?;
    let n = header.n;
    let as_solution = |r: &Record| match r {
        Record::CycleSet(m) => Ok(cycle_set_to_solution(m)),
        Record::Skew(s) => Ok(skew_cycle_set_to_solution(s)),
        Record::Solution(s) => Ok(s.clone()),
        Record::Rack(_) => Err(Failure::Usage("racks cannot be converted".into())),
    };
    let (kind, converted): (DatasetKind, Vec<Record>) = match to {
        Target::Solution => (
            DatasetKind::Solution,
            records
                .iter()
                .map(|r| as_solution(r).map(Record::Solution))
                .collect::<Result<_, _>>()?,
        ),
        Target::Skew => (
            DatasetKind::SkewCycleSet,
            records
                .iter()
                .map(|r| {
                    let s = as_solution(r)?;
                    solution_to_skew_cycle_set(&s)
                        .map(Record::Skew)
                        .map_err(|e| Failure::Verify(e.to_string()))
                })
                .collect::<Result<_, _>>()?,
        ),
        Target::Cycleset => (
            DatasetKind::CycleSet,
            records
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let s = as_solution(r)?;
                    solution_to_cycle_set(&s)
                        .map(Record::CycleSet)
                        .map_err(|e| Failure::Usage(format!("record {}: {e}", i + 1)))
                })
                .collect::<Result<_, _>>()?,
        ),
    };
    let mut h = DatasetHeader::new(kind, n);
    h.partial = header.partial;
    h.producer = header.producer;
    emit(&h, &converted, out)
}

fn isomorphic(a: usize, b: usize, input: &Path, input_b: Option<&Path>) -> Result<(), Failure> {
    let (ha, ra) = read_dataset(input, true)?;
    let (hb, rb) = match input_b {
        Some(p) => read_dataset(p, true)?,
        None => (ha.clone(), ra.clone()),
    };
    let pick = |recs: &[Record], i: usize| -> Result<Record, Failure> {
        recs.get(i.wrapping_sub(1))
            .cloned()
            .ok_or_else(|| Failure::Usage(format!("record {i} out of range 1..={}", recs.len())))
    };
    let (x, y) = (pick(&ra, a)?, pick(&rb, b)?);
    if ha.n != hb.n {
        println!("no");
        return Ok(());
    }
    // compare as skew cycle sets so that any two kinds of solution records meet
    let skew = |r: &Record| -> Option<SkewCycleSet> {
        match r {
            Record::CycleSet(m) => solution_to_skew_cycle_set(&cycle_set_to_solution(m)).ok(),
            Record::Skew(s) => Some(s.clone()),
            Record::Solution(s) => solution_to_skew_cycle_set(s).ok(),
            Record::Rack(_) => None,
        }
    };
    let same = match (&x, &y) {
        (Record::Rack(p), Record::Rack(q)) => x.canonical_key() == y.canonical_key() && p.n() == q.n(),
        _ => match (skew(&x), skew(&y)) {
            (Some(p), Some(q)) => Record::Skew(p).canonical_key() == Record::Skew(q).canonical_key(),
            _ => return Err(Failure::Usage("cannot compare a rack with a solution".into())),
        },
    };
    println!("{}", if same { "yes" } else { "no" });
    Ok(())
}
