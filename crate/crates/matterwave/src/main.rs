use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use matterwave::config::{ProtocolConfig, Solver};
use matterwave::observables::density_gp;
use matterwave::output;
use matterwave::prop::{gp_energy, gp_relax};
use matterwave::protocol;
use matterwave::states::sech_soliton;
use matterwave::Result;

/// Pulsed soliton interferometer: mean-field and two-orbital many-body
/// dynamics of an attractive 1D Bose gas in a harmonic trap.
#[derive(Parser)]
#[command(name = "matterwave", version, about)]
struct Cli {
    /// JSON run configuration; built-in reference values when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configured one).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Solver override.
    #[arg(long, global = true, value_enum)]
    solver: Option<Solver>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Full protocol: split, fly to the re-collision, recombine, measure.
    Run,
    /// Split completeness against pulse momentum.
    ScanK {
        /// Ascending momenta, comma separated.
        #[arg(long = "k-grid", value_delimiter = ',', default_values_t = [3.0, 3.5, 4.0, 4.5, 5.0])]
        k_grid: Vec<f64>,
    },
    /// Visibility against recombination phase, per re-collision.
    SweepChi2 {
        /// Number of evenly spaced phases in [0, 2 pi).
        #[arg(long, default_value_t = 16)]
        points: usize,
        /// Re-collision indices, comma separated.
        #[arg(long = "j-set", value_delimiter = ',', default_values_t = [1usize])]
        j_set: Vec<usize>,
        /// Timing band width around each detected re-collision.
        #[arg(long)]
        window: Option<f64>,
    },
    /// Fragmentation growth against split phase (mb2 solver).
    SweepChi1 {
        /// Split phases in radians, comma separated.
        #[arg(long = "chi1-set", value_delimiter = ',')]
        chi1_set: Option<Vec<f64>>,
        #[arg(long = "t-end", default_value_t = 10.0)]
        t_end: f64,
    },
    /// Ideal two-mode channel populations for every occupation split.
    Oracle {
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Recombination phase in radians; pi when omitted.
        #[arg(long)]
        chi2: Option<f64>,
    },
    /// Mean-field ground state by imaginary-time relaxation.
    Relax,
}

fn main() {
    env_logger::init();
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();

    let mut cfg = match &cli.config {
        Some(path) => ProtocolConfig::from_file(path)?,
        None => ProtocolConfig::default(),
    };
    if let Some(solver) = cli.solver {
        cfg.solver = solver;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = Some(out.display().to_string());
    }
    let out_dir = PathBuf::from(cfg.output_dir.clone().unwrap_or_else(|| "out".into()));

    match cli.cmd {
        Cmd::Run => cmd_run(&cfg, &out_dir),
        Cmd::ScanK { k_grid } => cmd_scan_k(&cfg, &out_dir, &k_grid),
        Cmd::SweepChi2 {
            points,
            j_set,
            window,
        } => cmd_sweep_chi2(&cfg, &out_dir, points, &j_set, window),
        Cmd::SweepChi1 { chi1_set, t_end } => cmd_sweep_chi1(&cfg, &out_dir, chi1_set, t_end),
        Cmd::Oracle { n, chi2 } => cmd_oracle(n, chi2.unwrap_or(PI)),
        Cmd::Relax => cmd_relax(&cfg, &out_dir),
    }
}

fn cmd_run(cfg: &ProtocolConfig, out_dir: &Path) -> Result<()> {
    let (report, traj) = protocol::run_full_protocol(cfg)?;
    let grid = cfg.build_grid()?;
    let report = output::persist_run(out_dir, report, &traj, &grid)?;

    println!("solver: {}", report.solver);
    println!(
        "re-collision {} applied at t = {:.4}",
        report.recollision_index, report.t_recollision
    );
    if let Some(occ) = report.natural_occupations_rc {
        println!(
            "natural occupations there: {:.4} / {:.4}",
            occ[0], occ[1]
        );
    }
    println!(
        "channels [-2k, 0, +2k]: {:.4} {:.4} {:.4} (position windows)",
        report.channels[0], report.channels[1], report.channels[2]
    );
    println!(
        "                        {:.4} {:.4} {:.4} (momentum bins at the pulse)",
        report.channels_momentum[0], report.channels_momentum[1], report.channels_momentum[2]
    );
    println!("visibility nu = {:.4}", report.visibility);
    println!(
        "interferometric fragmentation n2/N = {:.4}",
        report.frag_interferometric
    );
    if let Some(d) = report.frag_discrepancy {
        println!("deviation from diagonalization: {:.4}", d);
    }
    println!("wrote {}", out_dir.join(output::REPORT_JSON).display());
    Ok(())
}

fn cmd_scan_k(cfg: &ProtocolConfig, out_dir: &Path, k_grid: &[f64]) -> Result<()> {
    let scan = protocol::scan_split_momentum(cfg, k_grid)?;
    for r in &scan.rows {
        println!("k = {:.3}: completeness {:.4}", r.k, r.completeness);
    }
    match scan.crossing {
        Some(k) => println!(
            "completeness crosses {} at k = {:.3}",
            protocol::SPLIT_COMPLETE_THRESHOLD,
            k
        ),
        None => println!(
            "no {} crossing inside this grid",
            protocol::SPLIT_COMPLETE_THRESHOLD
        ),
    }
    let (csv, _) = output::write_split_scan(out_dir, &scan)?;
    println!("wrote {}", csv.display());
    Ok(())
}

fn cmd_sweep_chi2(
    cfg: &ProtocolConfig,
    out_dir: &Path,
    points: usize,
    j_set: &[usize],
    window: Option<f64>,
) -> Result<()> {
    let chi2_grid: Vec<f64> = (0..points)
        .map(|i| i as f64 * std::f64::consts::TAU / points as f64)
        .collect();
    let window = window.unwrap_or(cfg.recollision.window);
    let rows = protocol::sweep_recombine_phase(cfg, &chi2_grid, j_set, window)?;
    for r in &rows {
        println!(
            "chi2 = {:.4}, j = {}, t_rc = {:.3}: nu = {:.4}",
            r.chi2, r.j, r.t_rc, r.nu
        );
    }
    let csv = output::write_recombine_sweep(out_dir, &rows)?;
    println!("wrote {}", csv.display());
    Ok(())
}

fn cmd_sweep_chi1(
    cfg: &ProtocolConfig,
    out_dir: &Path,
    chi1_set: Option<Vec<f64>>,
    t_end: f64,
) -> Result<()> {
    let chi1_set = chi1_set.unwrap_or_else(|| vec![0.0, PI / 1000.0, PI]);
    let curves = protocol::sweep_split_phase(cfg, &chi1_set, t_end)?;
    for c in &curves {
        let last = c.n2_frac.last().copied().unwrap_or(0.0);
        println!(
            "chi1 = {:.6}: n2/N reaches {:.4} at t = {:.2}",
            c.chi1,
            last,
            c.times.last().copied().unwrap_or(0.0)
        );
    }
    let csv = output::write_split_phase_sweep(out_dir, &curves)?;
    println!("wrote {}", csv.display());
    Ok(())
}

fn cmd_oracle(n: usize, chi2: f64) -> Result<()> {
    println!("n2,nu,w_minus2k,w_0k,w_plus2k");
    for n2 in 0..=n {
        let (w, nu) = protocol::fock_channel_oracle(n - n2, n2, n, chi2)?;
        println!("{},{:.6},{:.6},{:.6},{:.6}", n2, nu, w[0], w[1], w[2]);
    }
    Ok(())
}

fn cmd_relax(cfg: &ProtocolConfig, out_dir: &Path) -> Result<()> {
    let params = cfg.system_params()?;
    let grid = cfg.build_grid()?;
    let potential = cfg.potential();
    let seed = sech_soliton(params.gamma, &grid)?;
    let relaxed = gp_relax(&seed, &potential, &params, &cfg.propagator(0.0), &grid)?;
    let energy = gp_energy(
        &relaxed.orbital,
        &potential.on_grid(&grid),
        params.gp_nonlinearity(),
        &grid,
    )?;
    println!("ground-state energy per particle: {:.8}", energy);

    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join("relaxed.csv");
    output::write_density_profile(&path, &grid, &density_gp(&relaxed))?;
    println!("wrote {}", path.display());
    Ok(())
}
