//! Run configuration: a sectioned TOML file, validated at load.
//!
//! Required keys are `grid.N1`, `grid.N2`, `forcing.kappa_lo`,
//! `forcing.kappa_hi`, `forcing.eps_total` and `rng.seed`; everything else
//! has a default. Unknown keys are rejected. [`RunConfig::to_toml`] writes
//! the effective configuration with every default resolved, and loading
//! that text gives back the same `RunConfig`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::dynamics::{random_initial, FlowState, PhysicsParams};
use crate::error::{Error, Result};
use crate::forcing::{build_forcing_basis, ForcingBasis};
use crate::grid::ChannelGrid;
use crate::io::write_atomic;
use crate::stats::{AnalysisOptions, Interp, SeparationGrid, Window};

/// File name of the echoed effective configuration.
pub const EFFECTIVE_CONFIG: &str = "config.effective.toml";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForcingConfig {
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    pub eps_total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    /// Spin-up step cap.
    pub max_steps: u64,
    /// Steps between snapshots.
    pub snapshot_stride: u64,
    pub n_snapshots: usize,
    /// Trailing window of the stationarity test (time units).
    pub spinup_window: f64,
    pub spinup_rel_change: f64,
    pub initial: InitialCondition,
}

/// Starting vorticity of `simulate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialCondition {
    Rest,
    /// Seeded random field on `kappa <= 4` with the energy `eps_total / alpha`
    /// (`eps_total` when `alpha = 0`).
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub l_min: f64,
    pub l_max: f64,
    pub n_lengths: usize,
    pub n_dirs: usize,
    pub fit_lo: f64,
    pub fit_hi: f64,
    pub pad_factor: usize,
    pub interp: Interp,
    pub window: Window,
    pub blocks: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: ChannelGrid,
    pub physics: PhysicsParams,
    pub forcing: ForcingConfig,
    pub time: TimeConfig,
    pub analysis: AnalysisConfig,
    pub seed: u64,
    pub output: PathBuf,
}

/// Typed access to one section; remembers which keys were read.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: Vec<&'static str>,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &'static str) -> Result<Self> {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => return Err(Error::invalid(name, "must be a [section]")),
        };
        Ok(Self { name, table, used: Vec::new() })
    }

    fn key(&self, k: &str) -> String {
        format!("{}.{}", self.name, k)
    }

    fn raw(&mut self, k: &'static str) -> Option<&'a Value> {
        self.used.push(k);
        self.table.and_then(|t| t.get(k))
    }

    fn f64_opt(&mut self, k: &'static str) -> Result<Option<f64>> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Float(v)) if v.is_finite() => Ok(Some(*v)),
            Some(Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(v) => Err(Error::invalid(self.key(k), format!("expected a finite number, got {v}"))),
        }
    }

    fn f64_req(&mut self, k: &'static str) -> Result<f64> {
        self.f64_opt(k)?.ok_or_else(|| Error::invalid(self.key(k), "missing required key"))
    }

    fn u64_opt(&mut self, k: &'static str) -> Result<Option<u64>> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Integer(v)) if *v >= 0 => Ok(Some(*v as u64)),
            Some(v) => Err(Error::invalid(self.key(k), format!("expected a non-negative integer, got {v}"))),
        }
    }

    fn u64_req(&mut self, k: &'static str) -> Result<u64> {
        self.u64_opt(k)?.ok_or_else(|| Error::invalid(self.key(k), "missing required key"))
    }

    fn str_opt(&mut self, k: &'static str) -> Result<Option<&'a str>> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(v) => Err(Error::invalid(self.key(k), format!("expected a string, got {v}"))),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some(t) = self.table {
            for k in t.keys() {
                if !self.used.contains(&k.as_str()) {
                    return Err(Error::invalid(format!("{}.{}", self.name, k), "unknown key"));
                }
            }
        }
        Ok(())
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(key, format!("must be > 0, got {v}")))
    }
}

fn usize_of(key: &str, v: u64) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::invalid(key, format!("{v} is too large")))
}

impl RunConfig {
    /// Parses and validates configuration text.
    pub fn parse(text: &str) -> Result<Self> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        const SECTIONS: [&str; 7] = ["grid", "physics", "forcing", "time", "analysis", "rng", "output"];
        if let Some(k) = root.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return Err(Error::invalid(k.as_str(), "unknown section"));
        }

        let mut s = Section::new(&root, "grid")?;
        let l = s.f64_opt("L")?.unwrap_or(std::f64::consts::TAU);
        let a = s.f64_opt("a")?.unwrap_or(0.0);
        let b = s.f64_opt("b")?.unwrap_or(std::f64::consts::PI);
        let n1 = usize_of("grid.N1", s.u64_req("N1")?)?;
        let n2 = usize_of("grid.N2", s.u64_req("N2")?)?;
        s.finish()?;
        let grid = ChannelGrid::new(l, a, b, n1, n2)?;

        let mut s = Section::new(&root, "physics")?;
        let physics = PhysicsParams {
            nu: s.f64_opt("nu")?.unwrap_or(2e-4),
            alpha: s.f64_opt("alpha")?.unwrap_or(0.05),
            beta: s.f64_opt("beta")?.unwrap_or(0.0),
            f0: s.f64_opt("f0")?.unwrap_or(0.0),
        };
        s.finish()?;
        physics.validate()?;

        let mut s = Section::new(&root, "forcing")?;
        let forcing = ForcingConfig {
            kappa_lo: s.f64_req("kappa_lo")?,
            kappa_hi: s.f64_req("kappa_hi")?,
            eps_total: s.f64_req("eps_total")?,
        };
        s.finish()?;
        let basis = build_forcing_basis(&grid, forcing.kappa_lo, forcing.kappa_hi, forcing.eps_total)?;
        let tau = basis.tau();

        let mut s = Section::new(&root, "time")?;
        let dt = positive("time.dt", s.f64_opt("dt")?.unwrap_or(0.003))?;
        let max_steps = s.u64_opt("max_steps")?.unwrap_or(2_000_000);
        let snapshot_stride = match s.u64_opt("snapshot_stride")? {
            Some(v) => v,
            // one turnover time
            None if tau.is_finite() => ((tau / dt).ceil() as u64).max(1),
            None => 1000,
        };
        if snapshot_stride == 0 {
            return Err(Error::invalid("time.snapshot_stride", "must be >= 1"));
        }
        let n_snapshots = usize_of("time.n_snapshots", s.u64_opt("n_snapshots")?.unwrap_or(200))?;
        if n_snapshots == 0 {
            return Err(Error::invalid("time.n_snapshots", "must be >= 1"));
        }
        let spinup_window = match s.f64_opt("spinup_window")? {
            Some(v) => positive("time.spinup_window", v)?,
            None => crate::dynamics::SpinupCriterion::default_window(&grid, &physics, &basis),
        };
        let spinup_rel_change = positive("time.spinup_rel_change", s.f64_opt("spinup_rel_change")?.unwrap_or(0.01))?;
        let initial = match s.str_opt("initial")?.unwrap_or("rest") {
            "rest" => InitialCondition::Rest,
            "random" => InitialCondition::Random,
            v => return Err(Error::invalid("time.initial", format!("expected \"rest\" or \"random\", got \"{v}\""))),
        };
        s.finish()?;
        let time = TimeConfig { dt, max_steps, snapshot_stride, n_snapshots, spinup_window, spinup_rel_change, initial };

        let mut s = Section::new(&root, "analysis")?;
        let l_min = s.f64_opt("l_min")?.unwrap_or(2.0 * grid.min_spacing());
        let l_max = s.f64_opt("l_max")?.unwrap_or(grid.height() / 4.0);
        let n_lengths = usize_of("analysis.n_lengths", s.u64_opt("n_lengths")?.unwrap_or(32))?;
        let n_dirs = usize_of("analysis.n_dirs", s.u64_opt("n_dirs")?.unwrap_or(32))?;
        let fit_lo = s.f64_opt("fit_lo")?.unwrap_or(4.0 * grid.min_spacing());
        let fit_hi = s.f64_opt("fit_hi")?.unwrap_or(0.5 * basis.l_injection());
        let pad_factor = usize_of("analysis.pad_factor", s.u64_opt("pad_factor")?.unwrap_or(2))?;
        let interp = match s.str_opt("interp")?.unwrap_or("trig") {
            "trig" => Interp::Trig,
            "bilinear" => Interp::Bilinear,
            v => return Err(Error::invalid("analysis.interp", format!("expected \"trig\" or \"bilinear\", got \"{v}\""))),
        };
        let window = match s.str_opt("window")?.unwrap_or("full") {
            "full" => Window::Full,
            "interior" => Window::Interior,
            v => return Err(Error::invalid("analysis.window", format!("expected \"full\" or \"interior\", got \"{v}\""))),
        };
        let blocks = usize_of("analysis.blocks", s.u64_opt("blocks")?.unwrap_or(10))?;
        s.finish()?;
        if !(fit_hi > fit_lo && fit_lo > 0.0) {
            return Err(Error::invalid("analysis.fit_hi", format!("fit range [{fit_lo}, {fit_hi}] is empty")));
        }
        if blocks == 0 {
            return Err(Error::invalid("analysis.blocks", "must be >= 1"));
        }
        crate::padded::check_pad(pad_factor).map_err(|_| Error::invalid("analysis.pad_factor", format!("unsupported value {pad_factor}")))?;
        let analysis = AnalysisConfig { l_min, l_max, n_lengths, n_dirs, fit_lo, fit_hi, pad_factor, interp, window, blocks };
        SeparationGrid::log_spaced(&grid, l_min, l_max, n_lengths, n_dirs)?;

        let mut s = Section::new(&root, "rng")?;
        let seed = s.u64_req("seed")?;
        s.finish()?;

        let mut s = Section::new(&root, "output")?;
        let output = PathBuf::from(s.str_opt("dir")?.unwrap_or("out"));
        s.finish()?;

        Ok(Self { grid, physics, forcing, time, analysis, seed, output })
    }

    pub fn forcing_basis(&self) -> Result<ForcingBasis> {
        build_forcing_basis(&self.grid, self.forcing.kappa_lo, self.forcing.kappa_hi, self.forcing.eps_total)
    }

    pub fn separation_grid(&self) -> Result<SeparationGrid> {
        let a = &self.analysis;
        SeparationGrid::log_spaced(&self.grid, a.l_min, a.l_max, a.n_lengths, a.n_dirs)
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        let a = &self.analysis;
        AnalysisOptions { pad_factor: a.pad_factor, interp: a.interp, window: a.window, blocks: a.blocks }
    }

    pub fn initial_state(&self) -> FlowState {
        match self.time.initial {
            InitialCondition::Rest => FlowState::at_rest(self.grid),
            InitialCondition::Random => {
                let f = &self.forcing;
                let energy = if self.physics.alpha > 0.0 { f.eps_total / self.physics.alpha } else { f.eps_total };
                random_initial(&self.grid, self.seed, 4.0, energy)
            }
        }
    }

    /// Effective configuration with every default written out.
    pub fn to_toml(&self) -> String {
        let g = &self.grid;
        let p = &self.physics;
        let f = &self.forcing;
        let t = &self.time;
        let a = &self.analysis;
        let mut s = String::new();
        let _ = writeln!(s, "[grid]\nL = {:?}\na = {:?}\nb = {:?}\nN1 = {}\nN2 = {}\n", g.length(), g.a(), g.b(), g.n1(), g.n2());
        let _ = writeln!(s, "[physics]\nnu = {:?}\nalpha = {:?}\nbeta = {:?}\nf0 = {:?}\n", p.nu, p.alpha, p.beta, p.f0);
        let _ = writeln!(s, "[forcing]\nkappa_lo = {:?}\nkappa_hi = {:?}\neps_total = {:?}\n", f.kappa_lo, f.kappa_hi, f.eps_total);
        let _ = writeln!(
            s,
            "[time]\ndt = {:?}\nmax_steps = {}\nsnapshot_stride = {}\nn_snapshots = {}\nspinup_window = {:?}\nspinup_rel_change = {:?}\ninitial = \"{}\"\n",
            t.dt,
            t.max_steps,
            t.snapshot_stride,
            t.n_snapshots,
            t.spinup_window,
            t.spinup_rel_change,
            match t.initial {
                InitialCondition::Rest => "rest",
                InitialCondition::Random => "random",
            }
        );
        let interp = match a.interp {
            Interp::Trig => "trig",
            Interp::Bilinear => "bilinear",
        };
        let window = match a.window {
            Window::Full => "full",
            Window::Interior => "interior",
        };
        let _ = writeln!(
            s,
            "[analysis]\nl_min = {:?}\nl_max = {:?}\nn_lengths = {}\nn_dirs = {}\nfit_lo = {:?}\nfit_hi = {:?}\npad_factor = {}\ninterp = \"{interp}\"\nwindow = \"{window}\"\nblocks = {}\n",
            a.l_min, a.l_max, a.n_lengths, a.n_dirs, a.fit_lo, a.fit_hi, a.pad_factor, a.blocks
        );
        let _ = writeln!(s, "[rng]\nseed = {}\n", self.seed);
        let _ = writeln!(s, "[output]\ndir = {}", Value::String(self.output.to_string_lossy().into_owned()));
        s
    }

    /// Writes the effective configuration into `dir`.
    pub fn echo(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(EFFECTIVE_CONFIG);
        write_atomic(&path, self.to_toml().as_bytes())?;
        Ok(path)
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
    RunConfig::parse(&text)
}
