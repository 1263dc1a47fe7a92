use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;
use tpcool::benchmarks::{self, LayerCase};
use tpcool::coupling::{run_staggered, CoupledModel};
use tpcool::output::{self, RunReport};
use tpcool::scenario::{Preset, ScenarioConfig};
use tpcool::{Error, Result, StabilizationKind};

/// Two-phase thermosyphon condenser simulator.
///
/// The log level is read from `TPCOOL_LOG` (e.g. `TPCOOL_LOG=info`).
#[derive(Parser, Debug)]
#[command(name = "tpcool", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Manufactured-solution convergence study of the 2D solver.
    Convergence2d(Convergence2d),
    /// Boundary- and interior-layer problems with the discrete maximum principle check.
    Layers2d(Layers2d),
    /// Three-segment network with a closed-form solution.
    Networktest(NetworkTest),
    /// One coupled condenser run.
    Run(RunArgs),
    /// Coupled runs over a list of inlet mass fluxes, executed concurrently.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct Convergence2d {
    /// `sg`, `upwind` or `both`.
    #[arg(long, default_value = "both")]
    stabilization: String,
    #[arg(long, value_delimiter = ',', default_values_t = benchmarks::REFERENCE_ALPHAS)]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = benchmarks::REFERENCE_NS)]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 1e-12)]
    linear_tol: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Layers2d {
    /// `boundary`, `interior` or `both`.
    #[arg(long, default_value = "both")]
    case: String,
    #[arg(long, default_value = "sg")]
    stabilization: StabilizationKind,
    #[arg(long, default_value_t = benchmarks::LAYER_N)]
    n: usize,
    #[arg(long, default_value_t = benchmarks::LAYER_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-12)]
    linear_tol: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NetworkTest {
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// Mesh sizes as powers of two: `h = 2^-k` for k in the range.
    #[arg(long, default_value_t = 4)]
    k_min: i32,
    #[arg(long, default_value_t = 10)]
    k_max: i32,
    /// Mesh size of the nodal profile dump.
    #[arg(long, default_value_t = 1.0 / 16.0)]
    profile_h: f64,
    #[arg(long, default_value_t = 1e-13)]
    linear_tol: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(short, long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Reference parameters with a shipped layout instead of a file.
    #[arg(long)]
    preset: Option<Preset>,
    /// Overrides the output directory of the scenario.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    stabilization: Option<StabilizationKind>,
    #[arg(long)]
    outer_tol: Option<f64>,
    #[arg(long)]
    outer_max_iter: Option<usize>,
    #[arg(long)]
    inner_tol: Option<f64>,
    #[arg(long)]
    linear_tol: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Inlet mass fluxes `G_tot` (kg/m²/s).
    #[arg(long, value_delimiter = ',', required = true)]
    g_tot: Vec<f64>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match (&self.config, self.preset) {
            (Some(p), _) => ScenarioConfig::from_file(p)?,
            (None, Some(p)) => ScenarioConfig::reference(p),
            (None, None) => return Err(Error::Config("give --config or --preset".into())),
        };
        let c = &mut cfg.coupling;
        if let Some(s) = self.stabilization {
            c.stabilization = s;
        }
        if let Some(v) = self.outer_tol {
            c.outer_tol = v;
        }
        if let Some(v) = self.outer_max_iter {
            c.outer_max_iter = v;
        }
        if let Some(v) = self.inner_tol {
            c.inner_2d_tol = v;
            c.inner_1d_tol = v;
        }
        if let Some(v) = self.linear_tol {
            c.linear_tol = v;
        }
        if let Some(v) = self.theta {
            c.theta = v;
        }
        if let Some(o) = &self.output {
            cfg.output.directory = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_file(dir: &Option<PathBuf>, name: &str, body: &str) -> Result<()> {
    if let Some(d) = dir {
        fs::create_dir_all(d)?;
        fs::write(d.join(name), body)?;
    }
    Ok(())
}

fn kinds(s: &str) -> Result<Vec<StabilizationKind>> {
    if s == "both" {
        return Ok(vec![StabilizationKind::ScharfetterGummel, StabilizationKind::Upwind]);
    }
    Ok(vec![s.parse()?])
}

fn convergence2d(a: &Convergence2d) -> Result<u8> {
    let mut csv = String::from("stabilization,alpha,n,h,error\n");
    let mut orders = String::from("stabilization,alpha,order\n");
    for kind in kinds(&a.stabilization)? {
        let study = benchmarks::convergence_2d(kind, &a.alphas, &a.ns, a.linear_tol)?;
        println!("{kind:?}");
        println!("{:>10} {:>5} {:>12}", "alpha", "N", "max error");
        for r in &study.rows {
            println!("{:>10.0e} {:>5} {:>12.4e}", r.alpha, r.n, r.error);
            writeln!(csv, "{kind:?},{:e},{},{:e},{:e}", r.alpha, r.n, r.h, r.error).unwrap();
        }
        for (alpha, o) in &study.orders {
            println!("  order at alpha={alpha:e}: {o:.3}");
            writeln!(orders, "{kind:?},{alpha:e},{o}").unwrap();
        }
    }
    write_file(&a.output, "convergence.csv", &csv)?;
    write_file(&a.output, "orders.csv", &orders)?;
    Ok(0)
}

fn layers2d(a: &Layers2d) -> Result<u8> {
    let cases = match a.case.as_str() {
        "both" => vec![LayerCase::Boundary, LayerCase::Interior],
        c => vec![c.parse()?],
    };
    let mut code = 0;
    for case in cases {
        let r = benchmarks::layers_2d(case, a.n, a.alpha, a.stabilization, a.linear_tol)?;
        let ok = r.overshoot <= 1e-12;
        println!(
            "{case:?}: min {:.6e}, max {:.6e}, bounds [{}, {}], overshoot {:.2e}, compressive cells {} -> {}",
            r.min,
            r.max,
            r.lower_bound,
            r.upper_bound,
            r.overshoot,
            r.compressive_cells,
            if ok { "ok" } else { "VIOLATED" }
        );
        if !ok {
            code = 4;
        }
        let name = format!("{case:?}").to_lowercase();
        let fields = [("u", &r.solution)];
        write_file(&a.output, &format!("{name}.vtk"), &output::vtk_cell_fields(&r.grid, &name, &fields)?)?;
        write_file(&a.output, &format!("{name}.csv"), &output::csv_cell_fields(&r.grid, &fields)?)?;
    }
    Ok(code)
}

fn networktest(a: &NetworkTest) -> Result<u8> {
    let study = benchmarks::network_test(a.eps, &benchmarks::dyadic(a.k_min, a.k_max), a.linear_tol)?;
    println!("eps = {}, omega = {:.8}", study.eps, study.omega);
    println!("{:>12} {:>12} {:>12} {:>12} {:>9}", "h", "err V", "err Q", "flux rel", "monotone");
    let mut csv = String::from("h,error_v,error_q,flux_relative,omega_h,monotone\n");
    for r in &study.rows {
        println!(
            "{:>12.4e} {:>12.4e} {:>12.4e} {:>12.2e} {:>9}",
            r.h, r.error_v, r.error_q, r.flux_relative, r.monotone
        );
        writeln!(csv, "{:e},{:e},{:e},{:e},{:e},{}", r.h, r.error_v, r.error_q, r.flux_relative, r.omega_h, r.monotone)
            .unwrap();
    }
    println!("order V {:.3}, order Q {:.3}", study.order_v, study.order_q);
    write_file(&a.output, "network.csv", &csv)?;
    let mut prof = String::from("segment,s,u\n");
    for (i, seg) in benchmarks::network_profiles(a.eps, a.profile_h, a.linear_tol)?.iter().enumerate() {
        for (s, u) in seg {
            writeln!(prof, "{},{s:e},{u:e}", i + 1).unwrap();
        }
    }
    write_file(&a.output, "profiles.csv", &prof)?;
    Ok(0)
}

/// Runs one scenario and writes its files; the report is written even when
/// the outer iteration did not converge.
fn run_one(cfg: &ScenarioConfig, dir: &Path) -> Result<RunReport> {
    let t = Instant::now();
    let model = CoupledModel::new(cfg)?;
    let state = run_staggered(&model)?;
    let report = RunReport::new(&model, &state, t.elapsed())?;
    let files = output::write_run(dir, &model, &state, &report)?;
    info!("wrote {} files to {}", files.len(), dir.display());
    Ok(report)
}

fn run(a: &RunArgs) -> Result<u8> {
    let cfg = a.scenario.load()?;
    let report = run_one(&cfg, &cfg.output.directory)?;
    println!("{}", report.summary());
    Ok(if report.converged { 0 } else { 3 })
}

fn sweep(a: &SweepArgs) -> Result<u8> {
    let base = a.scenario.load()?;
    let root = base.output.directory.clone();
    let jobs: Vec<(f64, ScenarioConfig, PathBuf)> = a
        .g_tot
        .iter()
        .map(|&g| {
            let mut c = base.clone();
            c.coolant.g_tot = g;
            c.name = format!("{}-g{g}", base.name);
            (g, c, root.join(format!("g_tot_{g}")))
        })
        .collect();
    for (_, c, _) in &jobs {
        c.validate()?;
    }
    let results: Vec<(f64, Result<RunReport>)> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(g, c, dir)| (*g, s.spawn(move || run_one(c, dir))))
            .collect();
        handles
            .into_iter()
            .map(|(g, h)| (g, h.join().unwrap_or_else(|_| Err(Error::Domain("sweep worker panicked".into())))))
            .collect()
    });
    let mut code = 0u8;
    let mut csv = String::from("g_tot,converged,outer_iterations,mean_panel_temperature,heat_release\n");
    for (g, r) in results {
        match r {
            Ok(rep) => {
                println!("{}", rep.summary());
                writeln!(
                    csv,
                    "{g},{},{},{:.12e},{:.12e}",
                    rep.converged, rep.outer_iterations, rep.mean_panel_temperature, rep.energy.network_release
                )
                .unwrap();
                if !rep.converged {
                    code = code.max(3);
                }
            }
            Err(e) => {
                warn!("G_tot = {g}: {e}");
                eprintln!("G_tot = {g}: {e}");
                code = code.max(e.exit_code() as u8);
            }
        }
    }
    fs::create_dir_all(&root)?;
    fs::write(root.join("sweep.csv"), csv)?;
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TPCOOL_LOG", "warn")).init();
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Convergence2d(a) => convergence2d(a),
        Command::Layers2d(a) => layers2d(a),
        Command::Networktest(a) => networktest(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
