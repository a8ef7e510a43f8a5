//! Command-line workflow: simulate, then analyze the snapshot directory.
//!
//! Exit codes: 0 success, 1 usage, 2 validation or I/O, 3 numerical
//! failure (NaN, CFL, no stationarity), 4 oracle failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{load_config, RunConfig};
use crate::dynamics::{run_to_stationarity, FlowState, NormSample, SamplingPlan, SpinupCriterion};
use crate::error::{Error, Result};
use crate::grid::ChannelGrid;
use crate::io::{read_csv, write_csv, Cell};
use crate::oracle::oracle_suite;
use crate::rng::RngState;
use crate::snapshot::{load_snapshots, snapshot_name, write_snapshot, Snapshot};
use crate::stats::{
    analyze, balance_residuals, cascade_fit, energy_spectrum, khm_velocity_budget, khm_vorticity_budget, DiagnosticSeries,
    KhmBudget, Kind,
};
use crate::velocity::Norms;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ORACLE: i32 = 4;

pub const NORMS_CSV: &str = "norms.csv";
pub const NORMS_HEADER: [&str; 4] = ["t", "energy_total", "enstrophy_total", "palinstrophy_total"];
pub const BUDGET_HEADER: [&str; 9] =
    ["l", "flux", "visc_term", "drag_term", "coriolis_term", "noise_term", "residual", "residual_rel", "stderr"];
pub const SERIES_HEADER: [&str; 4] = ["l", "value", "stderr", "n_samples"];
pub const BALANCE_HEADER: [&str; 9] = [
    "eps_lhs",
    "eps_target",
    "eps_residual_rel",
    "eps_stderr",
    "eta_lhs",
    "eta_target",
    "eta_residual_rel",
    "eta_stderr",
    "n_samples",
];

#[derive(Parser, Debug)]
#[command(name = "bkhm", version, about = "Stochastic beta-plane channel turbulence and KHM statistics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Spin up to stationarity and write snapshots plus norms.csv.
    Simulate(Common),
    /// Velocity and vorticity KHM budgets from a snapshot directory.
    Budget(Common),
    /// Correlation and structure-function series, with scaling fits.
    Structure(StructureArgs),
    /// Stationary energy and enstrophy balance from norms.csv.
    Balance(Common),
    /// Shell-averaged energy spectrum.
    Spectrum(Common),
    /// Compare the fast statistics against the brute-force oracle.
    OracleCheck,
}

#[derive(Args, Debug)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Snapshot directory [default: output.dir of the config].
    #[arg(long)]
    snapshots: Option<PathBuf>,
    /// Output directory [default: output.dir of the config].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StructureArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated kinds [default: all].
    #[arg(long)]
    kinds: Option<String>,
    /// Fit range `l_lo,l_hi` [default: analysis.fit_lo, analysis.fit_hi].
    #[arg(long)]
    range: Option<String>,
}

struct Ctx {
    cfg: RunConfig,
    snapshots: PathBuf,
    out: PathBuf,
}

impl Common {
    fn ctx(&self) -> Result<Ctx> {
        let cfg = load_config(&self.config)?;
        let snapshots = self.snapshots.clone().unwrap_or_else(|| cfg.output.clone());
        let out = self.out.clone().unwrap_or_else(|| cfg.output.clone());
        std::fs::create_dir_all(&out).map_err(|e| Error::io(format!("creating {}", out.display()), e))?;
        Ok(Ctx { cfg, snapshots, out })
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let res = match cli.cmd {
        Cmd::Simulate(c) => c.ctx().and_then(|x| simulate(&x)),
        Cmd::Budget(c) => c.ctx().and_then(|x| budget(&x)),
        Cmd::Structure(s) => s.common.ctx().and_then(|x| structure(&x, s.kinds.as_deref(), s.range.as_deref())),
        Cmd::Balance(c) => c.ctx().and_then(|x| balance(&x)),
        Cmd::Spectrum(c) => c.ctx().and_then(|x| spectrum(&x)),
        Cmd::OracleCheck => return oracle_check(),
    };
    match res {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn simulate(x: &Ctx) -> Result<()> {
    let c = &x.cfg;
    c.echo(&x.out)?;
    let basis = c.forcing_basis()?;
    let criterion = SpinupCriterion { window: c.time.spinup_window, rel_change: c.time.spinup_rel_change, max_steps: c.time.max_steps };
    let plan = SamplingPlan { stride: c.time.snapshot_stride, n_snapshots: c.time.n_snapshots };
    let mut i = 0;
    let summary = run_to_stationarity(
        c.initial_state(),
        &c.physics,
        &basis,
        RngState::new(c.seed),
        c.time.dt,
        criterion,
        plan,
        |s| {
            write_snapshot(s, &c.physics, &x.out.join(snapshot_name(i)))?;
            i += 1;
            Ok(())
        },
    )?;
    let rows: Vec<Vec<Cell>> = summary
        .norms
        .iter()
        .map(|s| vec![s.t.into(), s.norms.energy_total.into(), s.norms.enstrophy_total.into(), s.norms.palinstrophy_total.into()])
        .collect();
    write_csv(&x.out.join(NORMS_CSV), &NORMS_HEADER, &rows)?;
    eprintln!(
        "stationary at t = {:.3} (step {}); wrote {} snapshots to {}",
        summary.spinup_time,
        summary.spinup_step,
        summary.n_snapshots,
        x.out.display()
    );
    Ok(())
}

/// Snapshots of the directory; grid and physics must match the config.
fn snapshots(x: &Ctx) -> Result<Vec<FlowState>> {
    let c = &x.cfg;
    let all = load_snapshots(&x.snapshots, &c.grid)?;
    let mut out = Vec::with_capacity(all.len());
    for (i, (s, st)) in all.into_iter().enumerate() {
        if s.physics != c.physics {
            return Err(Error::HeaderMismatch {
                path: x.snapshots.join(snapshot_name(i)),
                msg: format!("snapshot physics {:?} differ from the configured {:?}", s.physics, c.physics),
            });
        }
        out.push(st);
    }
    Ok(out)
}

fn budget_rows(b: &KhmBudget) -> Vec<Vec<Cell>> {
    (0..b.flux.len())
        .map(|i| {
            vec![
                b.grid.lengths()[i].into(),
                b.flux[i].into(),
                b.visc_term[i].into(),
                b.drag_term[i].into(),
                b.coriolis_term[i].into(),
                b.noise_term[i].into(),
                b.residual[i].into(),
                b.residual_rel[i].into(),
                b.stderr[i].into(),
            ]
        })
        .collect()
}

fn series_rows(s: &DiagnosticSeries) -> Vec<Vec<Cell>> {
    (0..s.values.len())
        .map(|i| vec![s.grid.lengths()[i].into(), s.values[i].into(), s.stderr[i].into(), s.n_samples.into()])
        .collect()
}

fn budget(x: &Ctx) -> Result<()> {
    let c = &x.cfg;
    let snaps = snapshots(x)?;
    let basis = c.forcing_basis()?;
    let sep = c.separation_grid()?;
    use Kind::*;
    let kinds = [DBar, GammaBar, CthetaBar, ABar, FrakDBar, FrakCBar, FrakQBar, FrakABar];
    let s = analyze(&kinds, &snaps, &sep, &c.physics, Some(&basis), &c.analysis_options())?;
    let (nu, alpha) = (c.physics.nu, c.physics.alpha);
    let vel = khm_velocity_budget(&s[0], &s[1], &s[2], &s[3], nu, alpha)?;
    let vort = khm_vorticity_budget(&s[4], &s[5], &s[6], &s[7], nu, alpha)?;
    write_csv(&x.out.join("khm_velocity.csv"), &BUDGET_HEADER, &budget_rows(&vel))?;
    write_csv(&x.out.join("khm_vorticity.csv"), &BUDGET_HEADER, &budget_rows(&vort))?;
    Ok(())
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::invalid("--range", format!("expected `l_lo,l_hi`, got `{s}`"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let lo: f64 = a.trim().parse().map_err(|_| bad())?;
    let hi: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn structure(x: &Ctx, kinds: Option<&str>, range: Option<&str>) -> Result<()> {
    let c = &x.cfg;
    let kinds: Vec<Kind> = match kinds {
        Some(s) => s.split(',').map(|k| k.trim().parse()).collect::<Result<_>>()?,
        None => Kind::ALL.to_vec(),
    };
    if kinds.is_empty() {
        return Err(Error::invalid("--kinds", "empty list"));
    }
    let (lo, hi) = match range {
        Some(r) => parse_range(r)?,
        None => (c.analysis.fit_lo, c.analysis.fit_hi),
    };
    let need_snaps = kinds.iter().any(|k| !k.from_basis());
    let snaps = if need_snaps { snapshots(x)? } else { Vec::new() };
    let basis = c.forcing_basis()?;
    let sep = c.separation_grid()?;
    let series = analyze(&kinds, &snaps, &sep, &c.physics, Some(&basis), &c.analysis_options())?;
    let mut fits = Vec::new();
    for s in &series {
        write_csv(&x.out.join(format!("{}.csv", s.kind)), &SERIES_HEADER, &series_rows(s))?;
        if s.kind.is_structure() {
            match cascade_fit(s, lo, hi) {
                Ok(f) => fits.push(format!(
                    "{},{:?},{:?},{:?},{:?},{:?},{:?},{}",
                    s.kind, f.exponent, f.exponent_stderr, f.prefactor, f.prefactor_stderr, f.nominal_exponent, f.sign, f.n_points
                )),
                Err(e) => eprintln!("warning: no fit for {}: {e}", s.kind),
            }
        }
    }
    if !fits.is_empty() {
        let mut text = String::from("kind,exponent,exponent_stderr,prefactor,prefactor_stderr,nominal_exponent,sign,n_points\n");
        for f in fits {
            text.push_str(&f);
            text.push('\n');
        }
        crate::io::write_atomic(&x.out.join("fits.csv"), text.as_bytes())?;
    }
    Ok(())
}

/// Norm samples from `norms.csv` at or after `t0`.
pub fn read_norms(path: &Path, t0: f64) -> Result<Vec<NormSample>> {
    let rows = read_csv(path, &NORMS_HEADER)?;
    Ok(rows
        .into_iter()
        .enumerate()
        .filter(|(_, r)| r[0] >= t0)
        .map(|(i, r)| NormSample {
            t: r[0],
            step_index: i as u64,
            norms: Norms { energy_total: r[1], enstrophy_total: r[2], palinstrophy_total: r[3], grad_u_total: r[2] },
        })
        .collect())
}

fn balance(x: &Ctx) -> Result<()> {
    let c = &x.cfg;
    let first = crate::snapshot::list_snapshots(&x.snapshots)?.into_iter().next().ok_or(Error::NoSnapshots)?;
    let s0 = Snapshot::read(&first)?;
    s0.check_grid(&c.grid, &first)?;
    let samples = read_norms(&x.snapshots.join(NORMS_CSV), s0.t)?;
    let r = balance_residuals(&samples, &c.forcing_basis()?, &c.physics)?;
    let row = vec![
        r.eps_lhs.into(),
        r.eps_target.into(),
        r.eps_residual_rel.into(),
        r.eps_stderr.into(),
        r.eta_lhs.into(),
        r.eta_target.into(),
        r.eta_residual_rel.into(),
        r.eta_stderr.into(),
        r.n_samples.into(),
    ];
    write_csv(&x.out.join("balance.csv"), &BALANCE_HEADER, &[row])
}

fn spectrum(x: &Ctx) -> Result<()> {
    let snaps = snapshots(x)?;
    let s = energy_spectrum(&snaps)?;
    let rows: Vec<Vec<Cell>> = s.kappa.iter().zip(&s.energy).map(|(k, e)| vec![(*k).into(), (*e).into()]).collect();
    write_csv(&x.out.join("spectrum.csv"), &["kappa", "E"], &rows)
}

fn oracle_check() -> i32 {
    let grid = ChannelGrid::standard(16, 8).expect("valid grid");
    match oracle_suite(&grid, 20, 1) {
        Ok(rep) => {
            println!("{:<40} {:<44} {:>10}  status", "operation", "instance", "max_rel_err");
            for r in &rep {
                println!("{r}");
            }
            if rep.iter().all(|r| r.passed()) {
                0
            } else {
                EXIT_ORACLE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ORACLE
        }
    }
}
