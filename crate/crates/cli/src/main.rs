//! `morphreduce` command-line front end.

use std::collections::hash_map::RandomState;
use std::fs;
use std::hash::BuildHasher;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use morphreduce::activesubspace::{analyze, AnalysisReport, AnalysisSettings, PlotData, SampleTable};
use morphreduce::campaign::{self, Campaign, CampaignConfig};
use morphreduce::dmd::{fit, AmplitudeRule, DmdModelDocument, DmdOptions, ModeKind, RankRule, SnapshotSet};
use morphreduce::error::{Error, Result};
use morphreduce::ffd::{load_lattice, sample_parameters, SamplingScheme};
use morphreduce::geometry::{load_mesh, save_mesh, MeshFormat};
use morphreduce::rigidbody::{simulate, trajectory_csv, BodyConfig};

#[derive(Parser, Debug)]
#[command(name = "morphreduce", version, about = "Shape-parametrized design study toolkit")]
struct Cli {
    /// Seed for every random draw; a fresh one is printed when absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log filter such as `warn`, `info` or `debug`.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Free-form deformation.
    #[command(subcommand)]
    Ffd(FfdCommand),
    /// Dynamic mode decomposition.
    #[command(subcommand)]
    Dmd(DmdCommand),
    /// Active-subspace analysis.
    #[command(name = "as", subcommand)]
    As(AsCommand),
    /// Rigid-body dynamics.
    #[command(subcommand)]
    Rigidbody(RigidbodyCommand),
    /// Design-of-experiments campaigns.
    #[command(subcommand)]
    Campaign(CampaignCommand),
}

#[derive(Subcommand, Debug)]
enum FfdCommand {
    /// Deform a mesh with a bound lattice at one parameter vector.
    Deform {
        #[arg(long)]
        lattice: PathBuf,
        /// Comma-separated parameter values.
        #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
        mu: List,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw parameter vectors inside the binding bounds.
    Sample {
        #[arg(long)]
        lattice: PathBuf,
        #[arg(long, short = 'n')]
        count: usize,
        #[arg(long, value_enum, default_value_t = Scheme::LatinHypercube)]
        scheme: Scheme,
        /// CSV with header `mu_1..mu_m`; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Scheme {
    UniformRandom,
    LatinHypercube,
}

#[derive(Subcommand, Debug)]
enum DmdCommand {
    /// Fit a model to a snapshot file (`.csv` or raw `.bin`).
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        /// `N`, `energy:TAU` or `full`.
        #[arg(long, value_parser = parse_rank, default_value = "energy:0.9999999999")]
        rank: RankRule,
        #[arg(long, value_enum, default_value_t = Modes::Exact)]
        modes: Modes,
        #[arg(long, value_enum, default_value_t = Amplitudes::First)]
        amplitudes: Amplitudes,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a fitted model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated times.
        #[arg(long, value_parser = parse_list, required_unless_present = "t_end")]
        t: Option<List>,
        /// Whole time grid from the first snapshot up to this time.
        #[arg(long, conflicts_with = "t")]
        t_end: Option<f64>,
        /// CSV `t,x_1..x_n`; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Modes {
    Exact,
    Projected,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Amplitudes {
    First,
    All,
}

#[derive(Subcommand, Debug)]
enum AsCommand {
    /// Gradients, bootstrap spectrum and response surface of a sample table.
    Analyze(AsAnalyzeArgs),
}

#[derive(Args, Debug)]
struct AsAnalyzeArgs {
    /// CSV with columns `mu_1..mu_m,f[,g_1..g_m]`.
    #[arg(long = "in")]
    input: PathBuf,
    /// `lo:hi` for every input or a comma list of per-input `lo:hi`; data
    /// bounds when absent.
    #[arg(long, allow_hyphen_values = true)]
    bounds: Option<String>,
    #[arg(long, default_value_t = 100)]
    boot: usize,
    #[arg(long, default_value_t = 4)]
    degree: usize,
    #[arg(long, default_value_t = 0.75)]
    split: f64,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    #[arg(long)]
    out: PathBuf,
    /// Directory for the eigenvalue and sufficient-summary CSVs.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum RigidbodyCommand {
    /// Integrate a body described by a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum CampaignCommand {
    /// Evaluate every sample (resuming completed ones) and analyze.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-run the analysis of an existing run directory.
    Analyze {
        #[arg(long)]
        run: PathBuf,
        /// Campaign config, needed for finite-difference gradients.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Debug)]
struct List(Vec<f64>);

fn parse_list(s: &str) -> std::result::Result<List, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<std::result::Result<_, _>>()
        .map(List)
}

fn parse_rank(s: &str) -> std::result::Result<RankRule, String> {
    if s == "full" {
        return Ok(RankRule::Full);
    }
    if let Some(tau) = s.strip_prefix("energy:") {
        return tau.parse().map(RankRule::Energy).map_err(|e| format!("{e}"));
    }
    s.parse().map(RankRule::Explicit).map_err(|_| format!("`{s}` is not N, energy:TAU or full"))
}

fn parse_bounds(s: &str, m: usize) -> Result<Vec<[f64; 2]>> {
    let pairs: Vec<&str> = s.split(',').collect();
    let parse = |p: &str| -> Result<[f64; 2]> {
        let (lo, hi) = p
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("bound `{p}` is not lo:hi")))?;
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| Error::Config(format!("bound `{x}`: {e}")));
        Ok([num(lo)?, num(hi)?])
    };
    match pairs.len() {
        1 => Ok(vec![parse(pairs[0])?; m]),
        n if n == m => pairs.into_iter().map(parse).collect(),
        n => Err(Error::DimensionMismatch { expected: m, got: n }),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = RandomState::new().hash_one(std::process::id());
        info!("no --seed given, using {s}");
        eprintln!("seed: {s}");
        s
    })
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_json<S: serde::Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_output(Some(path), &text)
}

fn mesh_format(path: &Path) -> MeshFormat {
    MeshFormat::from_path(path).unwrap_or(MeshFormat::Obj)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ffd(FfdCommand::Deform { lattice, mu, input, out }) => {
            let (lat, binding) = load_lattice::<f64>(&lattice)?;
            let binding = binding.ok_or_else(|| Error::MissingField("binding".into()))?;
            let mesh = load_mesh::<f64>(&input, mesh_format(&input), true)?;
            let moved = lat.apply_parameters(&binding, &mu.0)?.deform_mesh(&mesh);
            save_mesh(&moved, &out, mesh_format(&out))
        }
        Command::Ffd(FfdCommand::Sample { lattice, count, scheme, out }) => {
            let (_, binding) = load_lattice::<f64>(&lattice)?;
            let binding = binding.ok_or_else(|| Error::MissingField("binding".into()))?;
            let scheme = match scheme {
                Scheme::UniformRandom => SamplingScheme::UniformRandom,
                Scheme::LatinHypercube => SamplingScheme::LatinHypercube,
            };
            let rows = sample_parameters(&binding, count, scheme, resolve_seed(cli.seed));
            let header: Vec<String> = (1..=binding.dimension()).map(|j| format!("mu_{j}")).collect();
            let mut text = header.join(",") + "\n";
            for r in rows {
                let cells: Vec<String> = r.iter().map(f64::to_string).collect();
                text += &(cells.join(",") + "\n");
            }
            write_output(out.as_deref(), &text)
        }
        Command::Dmd(DmdCommand::Fit {
            input,
            rank,
            modes,
            amplitudes,
            out,
        }) => {
            let binary = input.extension().is_some_and(|e| e == "bin");
            let snaps = if binary {
                SnapshotSet::<f64>::load_binary(&input)?
            } else {
                SnapshotSet::<f64>::load_csv(&input)?
            };
            let options = DmdOptions {
                rank,
                modes: match modes {
                    Modes::Exact => ModeKind::Exact,
                    Modes::Projected => ModeKind::Projected,
                },
                amplitudes: match amplitudes {
                    Amplitudes::First => AmplitudeRule::FirstSnapshot,
                    Amplitudes::All => AmplitudeRule::AllSnapshots,
                },
            };
            let model = fit(&snaps, options)?;
            info!("rank {}", model.rank());
            write_json(&out, &DmdModelDocument::from_model(&model))
        }
        Command::Dmd(DmdCommand::Predict { model, t, t_end, out }) => {
            let text = read(&model)?;
            let doc: DmdModelDocument = serde_json::from_str(&text)?;
            let m = doc.model::<f64>()?;
            let times = match (t, t_end) {
                (Some(ts), _) => ts.0,
                (None, Some(end)) => {
                    let steps = ((end - m.t0()) / m.dt() + 1e-9).floor().max(0.0) as usize;
                    (0..=steps).map(|k| m.t0() + m.dt() * k as f64).collect()
                }
                (None, None) => unreachable!("clap requires one of --t, --t-end"),
            };
            let header: Vec<String> = (1..=m.state_dim()).map(|j| format!("x_{j}")).collect();
            let mut csv = format!("t,{}\n", header.join(","));
            for time in times {
                let x = m.predict_time(time)?;
                let cells: Vec<String> = x.iter().map(f64::to_string).collect();
                csv += &format!("{time},{}\n", cells.join(","));
            }
            write_output(out.as_deref(), &csv)
        }
        Command::As(AsCommand::Analyze(args)) => {
            let text = read(&args.input)?;
            let probe = SampleTable::<f64>::parse_csv(&text, None)?;
            let table = match &args.bounds {
                Some(b) => SampleTable::parse_csv(&text, Some(parse_bounds(b, probe.dim())?))?,
                None => probe,
            };
            let settings = AnalysisSettings {
                degree: args.degree,
                split: args.split,
                n_boot: args.boot,
                seed: resolve_seed(cli.seed),
                replicates: args.replicates,
                ..Default::default()
            };
            let analysis = analyze(&table, &settings, None)?;
            write_json(&args.out, &AnalysisReport::from_analysis(&analysis))?;
            if let Some(dir) = args.plot_data {
                let mut plots = PlotData::default();
                plots.append("f", &analysis);
                plots.save(&dir)?;
            }
            Ok(())
        }
        Command::Rigidbody(RigidbodyCommand::Simulate { config, t_end, dt, out }) => {
            let text = read(&config)?;
            let body: BodyConfig = serde_json::from_str(&text)?;
            let traj = simulate(
                &body.initial_state()?,
                &body.properties()?,
                &body.loads,
                0.0,
                t_end,
                dt,
            )?;
            write_output(Some(&out), &trajectory_csv(&traj))
        }
        Command::Campaign(CampaignCommand::Run { config }) => {
            let (mut cfg, base) = CampaignConfig::load(&config)?;
            if let Some(seed) = cli.seed {
                cfg.samples.seed = seed;
                cfg.analysis.seed = seed;
            }
            let c = Campaign::prepare(cfg, &base)?;
            let results = c.run()?;
            let (report, analyses) = campaign::analyze_campaign(&results, &c.config.analysis, Some(&c))?;
            campaign::write_analysis(&c.run_dir, &report, &analyses)?;
            eprintln!(
                "{} ok, {} failed; results in {}",
                results.ok_count(),
                results.records.len() - results.ok_count(),
                c.run_dir.display()
            );
            Ok(())
        }
        Command::Campaign(CampaignCommand::Analyze { run, config }) => {
            let (manifest, results) = campaign::load_results(&run)?;
            let prepared = match config {
                Some(p) => {
                    let (cfg, base) = CampaignConfig::load(&p)?;
                    Some(Campaign::prepare(cfg, &base)?)
                }
                None => None,
            };
            let mut settings = manifest.config.analysis;
            if let Some(seed) = cli.seed {
                settings.seed = seed;
            }
            let (report, analyses) = campaign::analyze_campaign(&results, &settings, prepared.as_ref())?;
            campaign::write_analysis(&run, &report, &analyses)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: invalid_config: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.code());
            ExitCode::from(1)
        }
    }
}
