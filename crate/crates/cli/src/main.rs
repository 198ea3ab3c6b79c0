use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use log::info;

use cem_core::bench::{load_config, run_scenario, scenario_catalog, RunError, RunOptions, ScenarioConfig};
use cem_core::mesh::{build_edge_topology, parse_gmsh};

/// Output root used when `--out` is not given.
const OUT_ENV: &str = "CEM_OUT_DIR";

#[derive(Parser)]
#[command(name = "cem-bench", version, about = "Dynamic fracture benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Steps between snapshots.
    #[arg(long)]
    cadence: Option<usize>,
    /// Time step, s.
    #[arg(long)]
    dt: Option<f64>,
    /// Skip VTK snapshots.
    #[arg(long)]
    no_vtk: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a TOML file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run a builtin scenario.
    Builtin {
        name: String,
        /// Parameter override, `key=value`.
        #[arg(long = "param", value_name = "K=V")]
        params: Vec<String>,
        /// Print the configuration instead of running it.
        #[arg(long)]
        print_config: bool,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run a builtin scenario once per value of a parameter.
    Sweep {
        name: String,
        /// `key=a,b,c` for the swept parameter, `key=value` for fixed ones.
        #[arg(long = "param", value_name = "K=V[,V...]", required = true)]
        params: Vec<String>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Print statistics of a Gmsh mesh file.
    MeshInfo { file: PathBuf },
}

/// Failures mapped to exit codes: 2 for configuration, 3 for instability.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            error: e.into(),
        }
    }
}

fn config_error(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: e.into(),
    }
}

fn other(e: anyhow::Error) -> Failure {
    Failure { code: 1, error: e }
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, Vec<f64>>, Failure> {
    let mut out = BTreeMap::new();
    for p in raw {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| config_error(anyhow!("parameter `{p}` is not of the form key=value")))?;
        let values = v
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| config_error(anyhow!("parameter `{k}`: {e}")))?;
        // Accept the Greek letter for the notch offset.
        let key = if k == "γ" { "gamma" } else { k };
        out.insert(key.to_string(), values);
    }
    Ok(out)
}

fn out_root(flag: &Option<PathBuf>, name: &str) -> PathBuf {
    match flag {
        Some(p) => p.clone(),
        None => std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"))
            .join(name),
    }
}

fn apply_flags(cfg: &mut ScenarioConfig, flags: &RunFlags) -> Result<(), Failure> {
    if let Some(c) = flags.cadence {
        cfg.output.cadence = c;
    }
    if let Some(dt) = flags.dt {
        cfg.time.dt = Some(dt);
    }
    if flags.no_vtk {
        cfg.output.vtk = false;
    }
    cfg.validate().map_err(config_error)
}

fn execute(cfg: &ScenarioConfig, out: PathBuf, base: Option<&Path>) -> Result<(), Failure> {
    let result = run_scenario(
        cfg,
        &RunOptions {
            out_dir: Some(out.clone()),
            base_dir: base.map(Path::to_path_buf),
        },
    );
    let art = result?;
    let s = &art.summary;
    println!("scenario      {}", s.name);
    println!("output        {}", out.display());
    println!("steps         {} (dt = {:e} s, t = {:e} s)", s.steps, s.dt, s.end_time);
    match s.initiation_time {
        Some(t) => println!("initiation    {t:e} s"),
        None => println!("initiation    none"),
    }
    println!("crack length  {:e} m", s.crack_length);
    println!("max speed     {:.1} m/s", s.max_tip_speed);
    println!("dissipated    {:.4e} J/m", s.ledger.dissipated);
    println!("wall time     {:.2} s", s.wall_time_s);
    Ok(())
}

fn real_main(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon_threads(n)?;
    }
    match cli.command {
        Command::Run { config, flags } => {
            let mut cfg = load_config(&config).map_err(config_error)?;
            apply_flags(&mut cfg, &flags)?;
            let out = flags.out.clone().or(cfg.output.dir.clone());
            let out = out_root(&out, &cfg.name);
            execute(&cfg, out, config.parent())
        }
        Command::Builtin {
            name,
            params,
            print_config,
            flags,
        } => {
            let mut single = BTreeMap::new();
            for (k, v) in parse_params(&params)? {
                if v.len() != 1 {
                    return Err(config_error(anyhow!("parameter `{k}` takes a single value here")));
                }
                single.insert(k, v[0]);
            }
            let mut cfg = scenario_catalog(&name, &single).map_err(config_error)?;
            apply_flags(&mut cfg, &flags)?;
            if print_config {
                print!("{}", cfg.to_toml_string());
                return Ok(());
            }
            execute(&cfg, out_root(&flags.out, &name), None)
        }
        Command::Sweep { name, params, flags } => {
            let parsed = parse_params(&params)?;
            let swept: Vec<_> = parsed.iter().filter(|(_, v)| v.len() > 1).collect();
            let (key, values) = match swept.as_slice() {
                [(k, v)] => ((*k).clone(), (*v).clone()),
                [] => {
                    let (k, v) = parsed.iter().next().ok_or_else(|| config_error(anyhow!("nothing to sweep")))?;
                    (k.clone(), v.clone())
                }
                _ => return Err(config_error(anyhow!("sweep one parameter at a time"))),
            };
            let root = out_root(&flags.out, &name);
            for value in values {
                let mut p: BTreeMap<String, f64> = parsed.iter().map(|(k, v)| (k.clone(), v[0])).collect();
                p.insert(key.clone(), value);
                let mut cfg = scenario_catalog(&name, &p).map_err(config_error)?;
                apply_flags(&mut cfg, &flags)?;
                info!("sweep {key} = {value}");
                execute(&cfg, root.join(format!("{key}_{value}")), None)?;
            }
            Ok(())
        }
        Command::MeshInfo { file } => {
            let text = std::fs::read_to_string(&file)
                .with_context(|| format!("reading {}", file.display()))
                .map_err(other)?;
            let mesh = parse_gmsh(&text).map_err(config_error)?;
            let topo = build_edge_topology(&mesh).map_err(config_error)?;
            print!("{}", cem_core::bench::output::mesh_info(&mesh, &topo));
            Ok(())
        }
    }
}

fn rayon_threads(n: usize) -> Result<(), Failure> {
    cem_core::set_worker_threads(n).map_err(|e| config_error(anyhow!("--threads {n}: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
