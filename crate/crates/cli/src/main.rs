use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fkdyn::dynamics::{init_state, marginal_check, Chain, Checkpoint, CoupledState, DynamicsParams, InitRule};
use fkdyn::fk::{exact_distribution, Conditioning};
use fkdyn::harness::{read_records, run_experiment, summarize, ExperimentConfig, Statistic};
use fkdyn::interface::analyze_state;
use fkdyn::spins::{color_triple, write_spin_dump};
use fkdyn::{BoundaryCondition, BoxGeometry, BoxSpec, Error, FkParams};

#[derive(Parser)]
#[command(name = "fkdyn", version, about = "Coupled random-cluster dynamics in a lattice box")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write records, summary and checkpoints.
    Simulate(Box<SimulateArgs>),
    /// Report interface, pivotal edges and cut of a checkpoint, or
    /// re-summarize an output directory.
    Analyze(AnalyzeArgs),
    /// Compare a chain's empirical law with exact enumeration on a tiny box.
    ExactCheck(ExactArgs),
    /// Measure raw step throughput.
    Bench(BenchArgs),
    /// Print the vertices and edges of a box.
    Geometry(GeometryArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML experiment file; the built-in smoke experiment when absent.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dry_run: bool,
    #[command(flatten)]
    overrides: Overrides,
}

/// One flag per experiment field; each overrides the file.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long, help_heading = "Box")]
    dim: Option<usize>,
    #[arg(long, help_heading = "Box")]
    side: Option<f64>,
    #[arg(long, allow_hyphen_values = true, help_heading = "Box")]
    angle: Option<f64>,
    /// Rotation rows, e.g. `0.6,-0.8;0.8,0.6`.
    #[arg(long, allow_hyphen_values = true, help_heading = "Box")]
    rotation: Option<String>,
    /// Box center, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, help_heading = "Box")]
    center: Option<Vec<f64>>,
    #[arg(long, help_heading = "Box")]
    face_axis: Option<usize>,

    #[arg(short, long, help_heading = "Model", conflicts_with = "beta")]
    p: Option<f64>,
    /// Inverse temperature; sets p through the Ising dictionary.
    #[arg(long, help_heading = "Model")]
    beta: Option<f64>,
    #[arg(short, long, help_heading = "Model")]
    q: Option<f64>,
    #[arg(long, help_heading = "Model")]
    x_bc: Option<BoundaryCondition>,

    #[arg(long, help_heading = "Dynamics")]
    burn_in: Option<u64>,
    #[arg(long, help_heading = "Dynamics")]
    steps: Option<u64>,
    #[arg(long, help_heading = "Dynamics")]
    stride: Option<u64>,
    #[arg(long, help_heading = "Dynamics")]
    init: Option<InitArg>,

    #[arg(long, help_heading = "Run")]
    replicas: Option<u32>,
    #[arg(long, help_heading = "Run")]
    seed: Option<u64>,
    /// Output directory; defaults to $FKDYN_OUTPUT_DIR, then ./fkdyn-out.
    #[arg(short, long, help_heading = "Run")]
    output: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', help_heading = "Run")]
    statistics: Option<Vec<Statistic>>,
    #[arg(long, help_heading = "Run")]
    bootstrap: Option<usize>,

    #[arg(long, value_delimiter = ',', help_heading = "Statistics")]
    thresholds: Option<Vec<f64>>,
    #[arg(long, help_heading = "Statistics")]
    trim: Option<f64>,
    #[arg(long, value_delimiter = ',', help_heading = "Statistics")]
    s_grid: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',', help_heading = "Statistics")]
    ell_grid: Option<Vec<f64>>,
    #[arg(long, help_heading = "Statistics")]
    window: Option<u64>,
    #[arg(long, help_heading = "Statistics")]
    drift_ell: Option<f64>,
    #[arg(long, help_heading = "Statistics")]
    n_max: Option<usize>,
    #[arg(long, help_heading = "Statistics")]
    probe_margin: Option<f64>,
}

#[derive(Copy, Clone, ValueEnum)]
enum InitArg {
    AllClosed,
    XOpenYClosed,
}

impl From<InitArg> for InitRule {
    fn from(a: InitArg) -> Self {
        match a {
            InitArg::AllClosed => InitRule::AllClosed,
            InitArg::XOpenYClosed => InitRule::XOpenYClosed,
        }
    }
}

fn parse_rotation(s: &str) -> anyhow::Result<Vec<Vec<f64>>> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad rotation entry {x:?}")))
                .collect()
        })
        .collect()
}

impl Overrides {
    fn apply(self, cfg: &mut ExperimentConfig) -> anyhow::Result<()> {
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field { $target = v.into(); })*
            };
        }
        set! {
            dim => cfg.box_.dim,
            side => cfg.box_.side,
            angle => cfg.box_.angle,
            q => cfg.model.q,
            x_bc => cfg.model.x_bc,
            burn_in => cfg.dynamics.burn_in,
            steps => cfg.dynamics.steps,
            init => cfg.dynamics.init,
            replicas => cfg.run.replicas,
            seed => cfg.run.seed,
            statistics => cfg.run.statistics,
            bootstrap => cfg.run.bootstrap,
            thresholds => cfg.stats.thresholds,
            trim => cfg.stats.trim,
            s_grid => cfg.stats.s_grid,
            ell_grid => cfg.stats.ell_grid,
            drift_ell => cfg.stats.drift_ell,
            n_max => cfg.stats.n_max,
            probe_margin => cfg.stats.probe_margin,
        }
        if let Some(r) = self.rotation {
            cfg.box_.rotation = Some(parse_rotation(&r)?);
        }
        if self.center.is_some() {
            cfg.box_.center = self.center;
        }
        if self.face_axis.is_some() {
            cfg.box_.face_axis = self.face_axis;
        }
        if self.p.is_some() {
            cfg.model.p = self.p;
            cfg.model.beta = None;
        }
        if self.beta.is_some() {
            cfg.model.beta = self.beta;
            cfg.model.p = None;
        }
        if self.stride.is_some() {
            cfg.dynamics.stride = self.stride;
        }
        if self.output.is_some() {
            cfg.run.output = self.output;
        }
        if self.window.is_some() {
            cfg.stats.window = self.window;
        }
        Ok(())
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// A checkpoint file, or an output directory containing records.jsonl.
    path: PathBuf,
    /// Also extract the canonical minimal cut.
    #[arg(long)]
    cut: bool,
    /// Color the checkpointed pair and write the spins to this file.
    #[arg(long)]
    spins: Option<PathBuf>,
    /// Seed of the coloring coins.
    #[arg(long, default_value_t = 0)]
    color_seed: u64,
}

#[derive(Copy, Clone, ValueEnum)]
enum ChainArg {
    X,
    Y,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    side: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Option<Vec<f64>>,
    #[arg(short, long, default_value_t = 0.7)]
    p: f64,
    #[arg(short, long, default_value_t = 2.0)]
    q: f64,
    /// Which chain to check: X against its own boundary condition, Y against
    /// the conditioned top/bottom law.
    #[arg(long, value_enum, default_value_t = ChainArg::Y)]
    chain: ChainArg,
    #[arg(long, default_value = "wired")]
    x_bc: BoundaryCondition,
    #[arg(long, default_value_t = 10_000)]
    burn_in: u64,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    stride: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the exact table here.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Exit with status 2 when the distance exceeds this.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 16.0)]
    side: f64,
    #[arg(short, long, default_value_t = 0.9)]
    p: f64,
    #[arg(short, long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Time the full smoke experiment instead, writing into this directory.
    #[arg(long)]
    smoke: Option<PathBuf>,
}

#[derive(Args)]
struct GeometryArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    side: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    angle: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Option<Vec<f64>>,
}

fn build_box(dim: usize, side: f64, angle: f64, center: Option<Vec<f64>>) -> anyhow::Result<BoxGeometry> {
    let mut spec = BoxSpec::straight(dim, side);
    if angle != 0.0 {
        spec = spec.with_rotation(fkdyn::Rotation::in_plane(dim, 0, 1, angle));
    }
    if let Some(c) = center {
        spec = spec.with_center(c);
    }
    Ok(BoxGeometry::build(spec)?)
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::smoke(),
    };
    args.overrides.apply(&mut cfg)?;
    cfg.validate()?;
    if args.dry_run {
        print!("{}", cfg.to_toml_string()?);
        return Ok(());
    }
    let start = Instant::now();
    let out = run_experiment(&cfg)?;
    print!("{}", out.summary.render());
    let violations: u64 = out.diagnostics.iter().map(|d| d.violations()).sum();
    eprintln!(
        "{} records in {} ({:.1}s), {violations} invariant violations",
        out.records.len(),
        out.dir.display(),
        start.elapsed().as_secs_f64()
    );
    if let Some((r, e)) = out.failures.into_iter().next() {
        bail!("replica {r} failed: {e}");
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> anyhow::Result<()> {
    if args.path.is_dir() {
        let cfg = ExperimentConfig::from_file(&args.path.join("config.toml"))?;
        let (header, records) = read_records(&args.path.join("records.jsonl"))?;
        print!("{}", summarize(&cfg, header.box_spec.dim, &records).render());
        return Ok(());
    }
    let file = File::open(&args.path).with_context(|| format!("opening {}", args.path.display()))?;
    let cp = Checkpoint::read_from(BufReader::new(file))?;
    let geometry = BoxGeometry::build(cp.box_spec.clone())?;
    let state = CoupledState::restore(&geometry, &cp)?;
    let report = analyze_state(&state, args.cut)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(path) = args.spins {
        let mut rng = ChaCha8Rng::seed_from_u64(args.color_seed);
        let triple = color_triple(&geometry, state.x_config(), state.y_config(), &mut rng)?;
        write_spin_dump(&geometry, &triple, BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}

fn exact_check(args: ExactArgs) -> anyhow::Result<bool> {
    let geometry = build_box(args.dim, args.side, 0.0, args.center)?;
    let fk = FkParams::new(args.p, args.q)?;
    let (which, bc, cond) = match args.chain {
        ChainArg::X => (Chain::X, args.x_bc, Conditioning::None),
        ChainArg::Y => (Chain::Y, BoundaryCondition::TopBottom, Conditioning::Disconnected),
    };
    let table = exact_distribution(geometry.graph(), bc, &fk, cond)?;
    if let Some(path) = &args.table {
        table.write_records(BufWriter::new(File::create(path)?))?;
    }
    let dp = DynamicsParams::new(fk).with_x_bc(args.x_bc).with_init(InitRule::AllClosed);
    let mut state = init_state(&geometry, &dp, args.seed, 0)?;
    let start = Instant::now();
    let tv = marginal_check(&mut state, &table, which, args.burn_in, args.samples, args.stride)?;
    println!(
        "edges {} samples {} tv {tv:.5} ({:.1}s)",
        geometry.edge_count(),
        args.samples,
        start.elapsed().as_secs_f64()
    );
    Ok(args.tolerance.is_none_or(|t| tv < t))
}

fn bench(args: BenchArgs) -> anyhow::Result<()> {
    if let Some(dir) = args.smoke {
        let mut cfg = ExperimentConfig::smoke();
        cfg.run.output = Some(dir);
        let start = Instant::now();
        run_experiment(&cfg)?;
        println!("smoke experiment {:.2}s", start.elapsed().as_secs_f64());
        return Ok(());
    }
    let geometry = build_box(args.dim, args.side, 0.0, None)?;
    let dp = DynamicsParams::new(FkParams::new(args.p, args.q)?);
    let mut state = init_state(&geometry, &dp, args.seed, 0)?;
    let start = Instant::now();
    for _ in 0..args.steps {
        state.step();
    }
    let secs = start.elapsed().as_secs_f64();
    println!(
        "{} edges, {} steps in {secs:.3}s: {:.3e} steps/s",
        geometry.edge_count(),
        args.steps,
        args.steps as f64 / secs
    );
    Ok(())
}

fn geometry(args: GeometryArgs) -> anyhow::Result<()> {
    let g = build_box(args.dim, args.side, args.angle, args.center)?;
    let stdout = io::stdout();
    let mut w = stdout.lock();
    g.write_dump(&mut w)?;
    w.flush()?;
    Ok(())
}

fn is_config_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(
            c.downcast_ref::<Error>(),
            Some(Error::Config(_) | Error::Params(_) | Error::Geometry(_) | Error::NotTopBottom | Error::TooLarge(_))
        )
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(*a),
        Command::Analyze(a) => analyze(a),
        Command::ExactCheck(a) => exact_check(a).and_then(|ok| if ok { Ok(()) } else { bail!("distance above tolerance") }),
        Command::Bench(a) => bench(a),
        Command::Geometry(a) => geometry(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_config_error(&e) { 1 } else { 2 })
        }
    }
}
