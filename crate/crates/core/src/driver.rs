//! Run configuration, time loop and convergence studies.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::diagnostics::{
    drift_diagnostics, l1_error, vp_diagnostics, write_csv, DiagnosticsRecord,
};
use crate::error::{Error, Result};
use crate::idc_pde::{idc_step, IdcPdeConfig, StrangCorrection};
use crate::mesh::{write_snapshot, Axis, PhaseGrid, ScalarField, SnapshotFormat};
use crate::real::Real;
use crate::reconstruct::ReconKind;
use crate::scenario::{Scenario, ScenarioTag};
use crate::split_step::{Drift2D, ModelKind, SplitKind, VlasovPoisson, DEFAULT_RESIDUAL_RECON};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioTag,
    pub n1: usize,
    pub n2: usize,
    pub cfl: f64,
    pub t_final: f64,
    /// Sub-intervals per IDC interval.
    pub m: usize,
    /// Correction sweeps.
    pub k: usize,
    pub split: SplitKind,
    pub strang_correction: StrangCorrection,
    pub recon: ReconKind,
    /// Reconstruction of the residual and source flux differences.
    pub residual_recon: ReconKind,
    pub out_dir: Option<PathBuf>,
    pub snapshots: Vec<f64>,
    pub snapshot_format: SnapshotFormat,
    /// Re-evaluate the wave speeds at the start of every interval instead of
    /// freezing them at `t = 0`.
    pub recompute_speeds: bool,
    /// Write a diagnostics record every this many intervals (and at the end).
    pub diag_every: usize,
}

impl RunConfig {
    pub fn new(tag: ScenarioTag) -> Self {
        let d = Scenario::new(tag).defaults();
        Self {
            scenario: tag,
            n1: d.n1,
            n2: d.n2,
            cfl: d.cfl,
            t_final: d.t_final,
            m: d.m,
            k: d.k,
            split: SplitKind::Lie,
            strang_correction: StrangCorrection::default(),
            recon: d.recon,
            residual_recon: DEFAULT_RESIDUAL_RECON,
            out_dir: None,
            snapshots: Vec::new(),
            snapshot_format: SnapshotFormat::Text,
            recompute_speeds: false,
            diag_every: 1,
        }
    }

    /// Settings of the short-horizon order studies: T = 0.1 on a 400x400
    /// mesh for VP, T = 1 on 300x300 for the Euler accuracy test, and the
    /// scenario mesh with T = 0.1 otherwise.
    pub fn convergence(tag: ScenarioTag) -> Self {
        let mut c = Self::new(tag);
        match tag.model() {
            ModelKind::VlasovPoisson => {
                c.n1 = 400;
                c.n2 = 400;
                c.t_final = 0.1;
            }
            _ if tag == ScenarioTag::EulerAccuracy => c.t_final = 1.0,
            _ => c.t_final = 0.1,
        }
        c
    }

    /// CFL numbers of the standard order tables.
    pub fn convergence_cfls(tag: ScenarioTag) -> Vec<f64> {
        match tag {
            ScenarioTag::EulerAccuracy => vec![0.67, 0.62, 0.57, 0.52, 0.47],
            _ => vec![0.6, 0.5, 0.4, 0.3, 0.2],
        }
    }

    pub fn scheme(&self) -> IdcPdeConfig {
        IdcPdeConfig {
            m: self.m,
            k: self.k,
            split: self.split,
            strang_correction: self.strang_correction,
        }
    }

    pub fn with_scheme(mut self, scheme: &IdcPdeConfig) -> Self {
        self.m = scheme.m;
        self.k = scheme.k;
        self.split = scheme.split;
        self.strang_correction = scheme.strang_correction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "cfl must be positive, got {}",
                self.cfl
            )));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tfinal must be non-negative, got {}",
                self.t_final
            )));
        }
        if let Some(t) = self
            .snapshots
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= self.t_final))
        {
            return Err(Error::InvalidConfig(format!(
                "snapshot time {t} outside [0, {}]",
                self.t_final
            )));
        }
        if self.diag_every == 0 {
            return Err(Error::InvalidConfig("diag_every must be at least 1".into()));
        }
        self.scheme().validate()?;
        Scenario::new(self.scenario).grid::<f64>(self.n1, self.n2)?;
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::InvalidConfig(format!("bad value {value:?} for {what}"));
        let v = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "scenario" => self.scenario = v.parse()?,
            "n1" => self.n1 = v.parse().map_err(|_| bad("n1"))?,
            "n2" => self.n2 = v.parse().map_err(|_| bad("n2"))?,
            "cfl" => self.cfl = v.parse().map_err(|_| bad("cfl"))?,
            "tfinal" | "t_final" => self.t_final = v.parse().map_err(|_| bad("tfinal"))?,
            "nodes" | "m" => self.m = v.parse().map_err(|_| bad("nodes"))?,
            "corrections" | "k" => self.k = v.parse().map_err(|_| bad("corrections"))?,
            "split" => self.split = v.parse()?,
            "strang_correction" => self.strang_correction = v.parse()?,
            "recon" => self.recon = v.parse()?,
            "residual_recon" => self.residual_recon = v.parse()?,
            "out" | "out_dir" => {
                self.out_dir = if v.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(v))
                }
            }
            "snap" | "snapshots" => self.snapshots = parse_times(v)?,
            "snapshot_format" => {
                self.snapshot_format = match v {
                    "txt" | "text" => SnapshotFormat::Text,
                    "bin" | "binary" => SnapshotFormat::Binary,
                    _ => return Err(bad("snapshot_format")),
                }
            }
            "recompute_speeds" => {
                self.recompute_speeds = v.parse().map_err(|_| bad("recompute_speeds"))?
            }
            "diag_every" => self.diag_every = v.parse().map_err(|_| bad("diag_every"))?,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown config key {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Parses flat `key = value` text with `#` comments. A `scenario` line
    /// resets every other field to that scenario's defaults first.
    pub fn from_config_text(text: &str, base: RunConfig) -> Result<Self> {
        let mut pairs = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", no + 1))
            })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut cfg = match pairs.iter().find(|(k, _)| k == "scenario") {
            Some((_, v)) => RunConfig::new(v.parse()?),
            None => base,
        };
        for (k, v) in pairs.iter().filter(|(k, _)| k != "scenario") {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Fully resolved settings in the config-file format.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let snaps: Vec<String> = self.snapshots.iter().map(|t| format!("{t}")).collect();
        let _ = writeln!(s, "scenario = {}", self.scenario);
        let _ = writeln!(s, "n1 = {}", self.n1);
        let _ = writeln!(s, "n2 = {}", self.n2);
        let _ = writeln!(s, "cfl = {}", self.cfl);
        let _ = writeln!(s, "tfinal = {}", self.t_final);
        let _ = writeln!(s, "nodes = {}", self.m);
        let _ = writeln!(s, "corrections = {}", self.k);
        let _ = writeln!(s, "split = {}", self.split);
        let _ = writeln!(s, "strang_correction = {}", self.strang_correction);
        let _ = writeln!(s, "recon = {}", self.recon);
        let _ = writeln!(s, "residual_recon = {}", self.residual_recon);
        let _ = writeln!(
            s,
            "out = {}",
            self.out_dir
                .as_deref()
                .map(Path::display)
                .map(|d| d.to_string())
                .unwrap_or_default()
        );
        let _ = writeln!(s, "snap = {}", snaps.join(","));
        let _ = writeln!(s, "snapshot_format = {}", self.snapshot_format.extension());
        let _ = writeln!(s, "recompute_speeds = {}", self.recompute_speeds);
        let _ = writeln!(s, "diag_every = {}", self.diag_every);
        s
    }
}

/// Comma-separated times; an empty string gives no times.
pub fn parse_times(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Error::InvalidConfig(format!("bad time {t:?}")))
        })
        .collect()
}

/// The transport system behind a scenario.
#[derive(Clone, Debug)]
pub enum Model<T: Real> {
    Vp(VlasovPoisson<T>),
    Drift(Drift2D<T>),
}

impl<T: Real> Model<T> {
    pub fn new(kind: ModelKind, grid: PhaseGrid<T>, recon: ReconKind) -> Result<Self> {
        Ok(match kind {
            ModelKind::VlasovPoisson => Self::Vp(VlasovPoisson::new(grid, recon)?),
            _ => Self::Drift(Drift2D::new(grid, recon, kind)?),
        })
    }

    pub fn with_residual_recon(self, kind: ReconKind) -> Self {
        match self {
            Self::Vp(s) => Self::Vp(s.with_residual_recon(kind)),
            Self::Drift(s) => Self::Drift(s.with_residual_recon(kind)),
        }
    }

    pub fn grid(&self) -> &PhaseGrid<T> {
        match self {
            Self::Vp(s) => s.grid(),
            Self::Drift(s) => s.grid(),
        }
    }

    pub fn idc_step(
        &self,
        f: &ScalarField<T>,
        scheme: &IdcPdeConfig,
        dt: T,
    ) -> Result<ScalarField<T>> {
        match self {
            Self::Vp(s) => idc_step(s, f, scheme, dt),
            Self::Drift(s) => idc_step(s, f, scheme, dt),
        }
    }

    /// Speed bounds along each axis. VP uses `max|v|` and `max|E|`; the drift
    /// models use one bound `max(max|u1|, max|u2|)` for both axes, so a flow
    /// that starts nearly parallel to one axis still gets a step that holds
    /// once it turns.
    pub fn wave_speeds(&self, f: &ScalarField<T>) -> Result<(T, T)> {
        let max_abs = |v: &[T]| v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        match self {
            Self::Vp(s) => Ok((max_abs(s.velocities()), s.field(f)?.max_abs())),
            Self::Drift(s) => {
                let d = s.drift(f)?;
                let c = max_abs(d.u1.values()).max(max_abs(d.u2.values()));
                Ok((c, c))
            }
        }
    }

    /// `Δτ = CFL / (|c1|/Δ1 + |c2|/Δ2)`.
    pub fn sub_step(&self, f: &ScalarField<T>, cfl: f64) -> Result<f64> {
        let (c1, c2) = self.wave_speeds(f)?;
        let g = self.grid();
        let rate = c1.as_f64() / g.d1.as_f64() + c2.as_f64() / g.d2.as_f64();
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidConfig(
                "state has no transport; the CFL time step is undefined".into(),
            ));
        }
        Ok(cfl / rate)
    }

    pub fn diagnostics(&self, f: &ScalarField<T>, time: f64) -> Result<DiagnosticsRecord> {
        Ok(match self {
            Self::Vp(s) => vp_diagnostics(f, &s.field(f)?, s.velocities(), time),
            Self::Drift(s) => drift_diagnostics(f, &s.field(f)?, time),
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome<T> {
    pub state: ScalarField<T>,
    pub time: f64,
    /// Sub-step at `t = 0`.
    pub dtau: f64,
    pub intervals: usize,
    pub records: Vec<DiagnosticsRecord>,
    pub files: Vec<PathBuf>,
}

impl<T> RunOutcome<T> {
    /// Largest relative mass deviation over all records.
    pub fn max_mass_deviation(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.deviations.mass.abs())
            .fold(0.0, f64::max)
    }
}

fn snapshot_path(dir: &Path, time: f64, format: SnapshotFormat) -> PathBuf {
    dir.join(format!("snapshot_t{time:.6}.{}", format.extension()))
}

/// Advances the scenario of `config` from its initial state.
pub fn run<T: Real>(config: &RunConfig) -> Result<RunOutcome<T>> {
    config.validate()?;
    let scenario = Scenario::new(config.scenario);
    let grid = scenario.grid::<T>(config.n1, config.n2)?;
    run_from(config, scenario.initial(grid))
}

/// Advances `initial` with the settings of `config`.
pub fn run_from<T: Real>(config: &RunConfig, initial: ScalarField<T>) -> Result<RunOutcome<T>> {
    config.validate()?;
    let model = Model::new(config.scenario.model(), *initial.grid(), config.recon)?
        .with_residual_recon(config.residual_recon);
    let scheme = config.scheme();
    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.txt"), config.to_config_text())?;
    }
    let mut files = Vec::new();
    let mut write_snap = |f: &ScalarField<T>, t: f64| -> Result<()> {
        if let Some(dir) = &config.out_dir {
            let p = snapshot_path(dir, t, config.snapshot_format);
            write_snapshot(&p, f, t)?;
            files.push(p);
        }
        Ok(())
    };

    let mut f = initial;
    let dtau0 = model.sub_step(&f, config.cfl)?;
    let mut dtau = dtau0;
    let initial_record = model.diagnostics(&f, 0.0)?;
    let mut records = vec![initial_record.clone().with_deviations(&initial_record)];

    let mut stops: Vec<f64> = config
        .snapshots
        .iter()
        .copied()
        .filter(|&t| t > 0.0)
        .collect();
    stops.push(config.t_final);
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    if config.snapshots.contains(&0.0) || config.t_final == 0.0 {
        write_snap(&f, 0.0)?;
    }

    let eps = 1e-12 * config.t_final.max(1.0);
    let mut t = 0.0;
    let mut intervals = 0usize;
    // Diagnostics gathered before a failure are still written.
    let mut advance = || -> Result<()> {
        for &stop in &stops {
            while stop - t > eps {
                let full = config.m as f64 * dtau;
                let remaining = stop - t;
                let last = remaining <= full * (1.0 + 1e-10);
                let h = if last { remaining } else { full };
                f = model.idc_step(&f, &scheme, T::lit(h))?;
                t = if last { stop } else { t + h };
                intervals += 1;
                if !f.is_finite() {
                    return Err(Error::NonFinite { time: t });
                }
                if intervals % config.diag_every == 0 || (last && stop == config.t_final) {
                    records.push(model.diagnostics(&f, t)?.with_deviations(&initial_record));
                }
                if config.recompute_speeds {
                    dtau = model.sub_step(&f, config.cfl)?;
                }
            }
            if config.t_final > 0.0 && (config.snapshots.contains(&stop) || stop == config.t_final)
            {
                write_snap(&f, stop)?;
            }
        }
        Ok(())
    };
    let status = advance();
    if let Some(dir) = &config.out_dir {
        let p = dir.join("diagnostics.csv");
        write_csv(fs::File::create(&p)?, &records)?;
        files.push(p);
    }
    status?;
    Ok(RunOutcome {
        state: f,
        time: t,
        dtau: dtau0,
        intervals,
        records,
        files,
    })
}

/// Reference scheme and CFL for scenarios without an exact solution.
pub const REFERENCE_CFL: f64 = 0.01;

pub fn reference_scheme() -> IdcPdeConfig {
    IdcPdeConfig::lie(2, 3)
}

/// The exact final state if known, else an IDC3J3 run at CFL 0.01 on the
/// template's mesh.
pub fn reference_solution<T: Real>(template: &RunConfig) -> Result<ScalarField<T>> {
    let scenario = Scenario::new(template.scenario);
    let grid = scenario.grid::<T>(template.n1, template.n2)?;
    if let Some(exact) = scenario.exact(grid, template.t_final) {
        return Ok(exact);
    }
    let mut cfg = template.clone().with_scheme(&reference_scheme());
    cfg.cfl = REFERENCE_CFL;
    cfg.out_dir = None;
    cfg.snapshots.clear();
    cfg.diag_every = usize::MAX;
    Ok(run::<T>(&cfg)?.state)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceColumn {
    pub scheme: String,
    pub errors: Vec<f64>,
    /// `None` for the first row and wherever an error is zero.
    pub orders: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub cfls: Vec<f64>,
    pub columns: Vec<ConvergenceColumn>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("cfl");
        for c in &self.columns {
            let _ = write!(s, ",{0}_l1,{0}_order", c.scheme);
        }
        s.push('\n');
        for (i, cfl) in self.cfls.iter().enumerate() {
            let _ = write!(s, "{cfl}");
            for c in &self.columns {
                let order = c.orders[i].map_or("--".to_string(), |o| format!("{o:.2}"));
                let _ = write!(s, ",{:.2e},{order}", c.errors[i]);
            }
            s.push('\n');
        }
        s
    }

    pub fn column(&self, scheme: &str) -> Option<&ConvergenceColumn> {
        self.columns.iter().find(|c| c.scheme == scheme)
    }
}

/// Errors of one scheme at each CFL number against `reference`.
pub fn convergence_column<T: Real>(
    template: &RunConfig,
    scheme: &IdcPdeConfig,
    cfls: &[f64],
    reference: &ScalarField<T>,
) -> Result<ConvergenceColumn> {
    let mut errors = Vec::with_capacity(cfls.len());
    for &cfl in cfls {
        let mut cfg = template.clone().with_scheme(scheme);
        cfg.cfl = cfl;
        cfg.out_dir = None;
        cfg.snapshots.clear();
        cfg.diag_every = usize::MAX;
        let out = run::<T>(&cfg)?;
        errors.push(l1_error(&out.state, reference)?);
    }
    let mut orders = vec![None];
    for i in 1..errors.len() {
        let pair = crate::diagnostics::observed_order(&errors[i - 1..=i], &cfls[i - 1..=i]);
        orders.push(pair.ok().map(|o| o[0]));
    }
    Ok(ConvergenceColumn {
        scheme: scheme.name(),
        errors,
        orders,
    })
}

/// Computes the template's reference, then one column per scheme.
pub fn convergence_study<T: Real>(
    template: &RunConfig,
    schemes: &[IdcPdeConfig],
    cfls: &[f64],
) -> Result<ConvergenceTable> {
    if cfls.is_empty() {
        return Err(Error::InvalidConfig(
            "convergence study needs at least one CFL number".into(),
        ));
    }
    let reference = reference_solution::<T>(template)?;
    convergence_study_with(template, schemes, cfls, &reference, false)
}

/// As [`convergence_study`] with a given reference. With `parallel` the
/// scheme columns run concurrently.
pub fn convergence_study_with<T: Real>(
    template: &RunConfig,
    schemes: &[IdcPdeConfig],
    cfls: &[f64],
    reference: &ScalarField<T>,
    parallel: bool,
) -> Result<ConvergenceTable> {
    let column = |s: &IdcPdeConfig| convergence_column(template, s, cfls, reference);
    let columns = if parallel {
        schemes.par_iter().map(column).collect::<Result<Vec<_>>>()?
    } else {
        schemes.iter().map(column).collect::<Result<Vec<_>>>()?
    };
    Ok(ConvergenceTable {
        cfls: cfls.to_vec(),
        columns,
    })
}

/// Mesh line along `axis` through `index`, for 1-D cuts.
pub fn cut<T: Real>(f: &ScalarField<T>, axis: Axis, index: usize) -> Result<Vec<T>> {
    Ok(f.line(axis, index)?.to_vec())
}
