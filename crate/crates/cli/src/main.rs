//! Command-line front end. Exit codes: 0 on success, 1 when a verification
//! fails, 2 on input errors.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use glauber_nm::coupling::{global_coupling, CouplingConfig, NmReference};
use glauber_nm::dynamics::{
    evolve, read_labeling, sample_update_sequence, sample_updates_with, Labeling,
};
use glauber_nm::graph::{gen_graph, parse_graph_arg};
use glauber_nm::harness::{
    self, contraction_experiment, drift_experiment, identity_growth, mixing_scaling,
    neighboring_start, verify_suite, write_block_plot, write_csv, ExperimentConfig, StepCoupling,
};
use glauber_nm::rng::{seeded, RNG_NAME};
use glauber_nm::uniformity::{eps_uniform_at, lu_radius, sample_pairs, CheckLimits};
use glauber_nm::{Error, Graph};

#[derive(Parser)]
#[command(name = "glauber-nm", version, about = "Glauber dynamics on graph colorings with coupling verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the dynamics and print the final labeling.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Initial labeling file (`n k` then n colors); greedy proper coloring by default.
        #[arg(long)]
        x0: Option<PathBuf>,
    },
    /// One coupling run with a JSON trace.
    Couple {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "y0")]
        x0: Option<PathBuf>,
        #[arg(long, requires = "x0")]
        y0: Option<PathBuf>,
    },
    /// Exhaustive and sampled bijectivity, involution and domination checks.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        replicas: Option<usize>,
    },
    /// Local-uniformity audit of a trajectory's final state.
    Uniformity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        center: usize,
        /// Ball radius; defaults to max(1, floor(Δ^0.1)).
        #[arg(long)]
        radius: Option<usize>,
    },
    /// Contraction, block-coupling, drift, growth and scaling experiments.
    Mix {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Experiment::Contraction)]
        experiment: Experiment,
        #[arg(long)]
        replicas: Option<usize>,
        /// Cycle lengths for the scaling experiment.
        #[arg(long, value_delimiter = ',', default_value = "128,256,512,1024")]
        sizes: Vec<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Graph: cycle:N, path:N, star:L, complete:N, tree:N, regular:N:D:G,
    /// girth:N:D:G, quadrangle:Q, rtree:D:DEPTH, or an edge-list file.
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; results go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Contraction,
    Block,
    BlockIdentity,
    Drift,
    Growth,
    Scaling,
}

/// Whether the command's checks held.
enum Verdict {
    Ok,
    Failed,
}

fn input(msg: impl Into<String>) -> anyhow::Error {
    Error::Input(msg.into()).into()
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                ExperimentConfig::from_json(&text)?
            }
            None => {
                let graph = self.graph.as_deref().ok_or_else(|| input("--graph or --config is required"))?;
                let k = self.k.ok_or_else(|| input("--k or --config is required"))?;
                ExperimentConfig::new(parse_graph_arg(graph)?, k)
            }
        };
        if self.config.is_some() {
            if let Some(gr) = &self.graph {
                cfg.graph = parse_graph_arg(gr)?;
            }
            if let Some(k) = self.k {
                cfg.k = k;
            }
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = Some(o.display().to_string());
        }
        Ok(cfg)
    }

    fn emit(&self, name: &str, json: &serde_json::Value, csv: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let mut buf: Vec<u8> = Vec::new();
        match self.format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut buf, json)?;
                buf.push(b'\n');
            }
            Format::Csv => csv(&mut buf)?,
        }
        match &self.out {
            Some(dir) => {
                let file = format!("{name}.{}", self.format.ext());
                harness::write_file(dir, &file, &buf)?;
                eprintln!("wrote {}", dir.join(file).display());
            }
            None => io::stdout().write_all(&buf)?,
        }
        Ok(())
    }
}

fn build_graph(cfg: &ExperimentConfig) -> Result<Graph> {
    Ok(cfg.build_graph()?)
}

fn read_lab(path: &Path) -> Result<Labeling> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_labeling(BufReader::new(f))?)
}

fn simulate(common: &Common, x0: &Option<PathBuf>) -> Result<Verdict> {
    let cfg = common.config()?;
    let g = build_graph(&cfg)?;
    let x0 = match x0 {
        Some(p) => read_lab(p)?,
        None => Labeling::greedy_proper(&g, cfg.k)?,
    };
    if x0.n() != g.n() {
        return Err(input(format!("x0 has {} vertices, graph has {}", x0.n(), g.n())));
    }
    let steps = common.steps.unwrap_or(0);
    let seq = sample_update_sequence(g.n(), x0.k(), steps, cfg.seed);
    let traj = evolve(&g, &x0, &seq, &[]);
    let fin = traj.final_state();
    let accepted = traj.acceptance_flags().iter().filter(|&&a| a).count();
    let json = serde_json::json!({
        "n": g.n(),
        "k": x0.k(),
        "seed": cfg.seed,
        "rng": RNG_NAME,
        "steps": steps,
        "accepted": accepted,
        "initial": x0.colors(),
        "final": fin.colors(),
        "proper": fin.is_proper(&g),
    });
    common.emit("simulate", &json, |w| {
        writeln!(w, "v,initial,final")?;
        for v in 0..g.n() {
            writeln!(w, "{v},{},{}", x0.get(v), fin.get(v))?;
        }
        Ok(())
    })?;
    Ok(Verdict::Ok)
}

fn couple(common: &Common, x0: &Option<PathBuf>, y0: &Option<PathBuf>) -> Result<Verdict> {
    let cfg = common.config()?;
    let g = build_graph(&cfg)?;
    let mut rng = seeded(cfg.seed);
    let (x0, y0) = match (x0, y0) {
        (Some(a), Some(b)) => (read_lab(a)?, read_lab(b)?),
        _ => {
            let sp = neighboring_start(&g, cfg.k, cfg.burn_in_steps(g.n()), &mut rng)?;
            (sp.x0, sp.y0)
        }
    };
    let steps = common.steps.unwrap_or_else(|| cfg.t_cp(g.n()));
    let seq = sample_updates_with(&mut rng, g.n(), x0.k(), steps);
    let ccfg = CouplingConfig { p_max: cfg.p_max, nm_reference: NmReference::Fixed, check: true, jerrum_only: false };
    let res = global_coupling(&g, &x0, &y0, &seq, &ccfg)?;
    let mut json = res.to_json();
    json["seed"] = cfg.seed.into();
    json["rng"] = RNG_NAME.into();
    json["steps_total"] = steps.into();
    common.emit("couple", &json, |w| {
        writeln!(w, "t,map,d_size,temp_size")?;
        for s in &res.steps {
            writeln!(w, "{},{:?},{},{}", s.t, s.map, s.d_size, s.temp_size)?;
        }
        Ok(())
    })?;
    Ok(if res.violations.is_empty() { Verdict::Ok } else { Verdict::Failed })
}

fn verify(common: &Common, replicas: Option<usize>) -> Result<Verdict> {
    let mut cfg = common.config()?;
    if let Some(r) = replicas {
        cfg.replicas = r;
    }
    let rep = verify_suite(&cfg)?;
    for c in &rep.checks {
        eprintln!(
            "{:<28} {:>7} runs {:>5} failures{}",
            c.name,
            c.runs,
            c.failures,
            c.first_counterexample.as_ref().map(|s| format!("  first: {s}")).unwrap_or_default()
        );
    }
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let mut buf = Vec::new();
    match common.format {
        Format::Json => serde_json::to_writer_pretty(&mut buf, &rep)?,
        Format::Csv => {
            writeln!(buf, "check,runs,failures,first_counterexample")?;
            for c in &rep.checks {
                let ce = c.first_counterexample.clone().unwrap_or_default().replace('"', "'");
                writeln!(buf, "{},{},{},\"{ce}\"", c.name, c.runs, c.failures)?;
            }
        }
    }
    let file = format!("verify.{}", common.format.ext());
    harness::write_file(&out, &file, &buf)?;
    eprintln!("wrote {}", out.join(file).display());
    Ok(if rep.passed() { Verdict::Ok } else { Verdict::Failed })
}

fn uniformity(common: &Common, eps: f64, center: usize, radius: Option<usize>) -> Result<Verdict> {
    let cfg = common.config()?;
    let g = build_graph(&cfg)?;
    let x0 = Labeling::greedy_proper(&g, cfg.k)?;
    let mut rng = seeded(cfg.seed);
    let steps = common.steps.unwrap_or_else(|| cfg.burn_in_steps(g.n()));
    let seq = sample_updates_with(&mut rng, g.n(), cfg.k, steps);
    let x = evolve(&g, &x0, &seq, &[]).final_state().clone();
    let limits = CheckLimits::default();
    let pairs = sample_pairs(cfg.k, limits.pair_budget, &mut rng);
    let radius = radius.unwrap_or_else(|| lu_radius(g.max_degree()));
    let rep = eps_uniform_at(&g, &x, center, radius, eps, &limits, &pairs)?;
    let mut json = rep.to_json();
    json["seed"] = cfg.seed.into();
    json["steps"] = steps.into();
    common.emit("uniformity", &json, |w| Ok(rep.write_csv(w)?))?;
    Ok(Verdict::Ok)
}

fn mix(common: &Common, experiment: Experiment, replicas: Option<usize>, sizes: &[usize]) -> Result<Verdict> {
    let mut cfg = common.config()?;
    if let Some(r) = replicas {
        cfg.replicas = r;
    }
    match experiment {
        Experiment::Contraction => {
            let rep = contraction_experiment(&cfg)?;
            common.emit("contraction", &serde_json::to_value(&rep)?, |w| Ok(write_csv(&rep.records, w)?))?;
        }
        Experiment::Block | Experiment::BlockIdentity => {
            let identity = matches!(experiment, Experiment::BlockIdentity);
            let rep = harness::block_coupling_with(&cfg, identity)?;
            if let Some(dir) = &common.out {
                let mut plot = Vec::new();
                write_block_plot(&rep, &mut plot)?;
                harness::write_file(dir, "block_plot.csv", &plot)?;
            }
            common.emit(&rep.kind.clone(), &serde_json::to_value(&rep)?, |w| Ok(write_csv(&rep.records, w)?))?;
        }
        Experiment::Drift => {
            let samples = common.steps.unwrap_or(1_000_000);
            let rep = drift_experiment(&cfg, StepCoupling::Jerrum, cfg.replicas, samples)?;
            let json = serde_json::to_value(&rep)?;
            common.emit("drift", &json, |w| {
                writeln!(w, "measured,half_width,oracle,counting_bound,relative_error")?;
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    rep.measured.mean, rep.measured.half_width, rep.oracle, rep.counting_bound, rep.relative_error
                )?;
                Ok(())
            })?;
        }
        Experiment::Growth => {
            let g = build_graph(&cfg)?;
            let pts = identity_growth(&cfg, &[g.n(), 3 * g.n()])?;
            common.emit("growth", &serde_json::to_value(&pts)?, |w| {
                writeln!(w, "t,mean,half_width,bound")?;
                for p in &pts {
                    writeln!(w, "{},{},{},{}", p.t, p.dist.mean, p.dist.half_width, p.bound)?;
                }
                Ok(())
            })?;
        }
        Experiment::Scaling => {
            let graphs = sizes
                .iter()
                .map(|&n| Ok((n, gen_graph(&glauber_nm::GraphSpec::Cycle { n }, cfg.seed)?.graph)))
                .collect::<Result<Vec<_>>>()?;
            let rep = mixing_scaling(&graphs, cfg.k, cfg.replicas, cfg.seed, 200.0)?;
            common.emit("scaling", &serde_json::to_value(&rep)?, |w| {
                writeln!(w, "n,mean,half_width,censored")?;
                for p in &rep.points {
                    writeln!(w, "{},{},{},{}", p.n, p.coalescence.mean, p.coalescence.half_width, p.censored)?;
                }
                Ok(())
            })?;
        }
    }
    Ok(Verdict::Ok)
}

fn run(cli: &Cli) -> Result<Verdict> {
    match &cli.command {
        Command::Simulate { common, x0 } => simulate(common, x0),
        Command::Couple { common, x0, y0 } => couple(common, x0, y0),
        Command::Verify { common, replicas } => verify(common, *replicas),
        Command::Uniformity { common, eps, center, radius } => uniformity(common, *eps, *center, *radius),
        Command::Mix { common, experiment, replicas, sizes } => mix(common, *experiment, *replicas, sizes),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::Failed) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
