//! Von Neumann analysis of linear IDC-SL schemes for `f_t + f_x = 0`.
//!
//! Stencils are extracted numerically by stepping unit impulses on a periodic
//! probe line, so any linear translation-invariant step can be analysed.

use std::fmt;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::idc_pde::{idc_step, CorrectionContext, IdcPdeConfig, SplitSystem};
use crate::mesh::Boundary;
use crate::real::Real;
use crate::reconstruct::{flux_difference, ReconKind, Wind};
use crate::sl1d::{sl_step, AdvectionProblem};
use crate::split_step::SplitKind;

/// Unit-speed advection on a periodic line with unit spacing, so the time
/// step equals the CFL number.
#[derive(Clone, Copy, Debug)]
pub struct LinearAdvection1D {
    pub kind: ReconKind,
}

impl LinearAdvection1D {
    pub fn new(kind: ReconKind) -> Result<Self> {
        if kind == ReconKind::Weno5 {
            return Err(Error::Unsupported(
                "stability analysis needs a linear reconstruction".into(),
            ));
        }
        Ok(Self { kind })
    }

    fn advect<T: Real>(&self, f: &[T], dt: T) -> Result<Vec<T>> {
        sl_step(
            f,
            &AdvectionProblem::constant(T::one(), dt, T::one(), self.kind),
        )
    }
}

impl<T: Real> SplitSystem<T> for LinearAdvection1D {
    type State = Vec<T>;
    type Cache = Vec<T>;

    fn split_step(&self, f: &Vec<T>, dt: T, _split: SplitKind) -> Result<Vec<T>> {
        self.advect(f, dt)
    }

    fn prepare(&self, eta: &Vec<T>) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); eta.len()];
        flux_difference(
            eta,
            |_| Wind::Positive,
            Boundary::Periodic,
            self.kind,
            &mut Vec::new(),
            &mut out,
        )?;
        Ok(out)
    }

    fn rate<'c>(&self, cache: &'c Vec<T>) -> &'c Vec<T> {
        cache
    }

    fn correct(
        &self,
        _ctx: &CorrectionContext<'_, T, Self>,
        delta: &Vec<T>,
        residual: &Vec<T>,
        dt: T,
        _split: SplitKind,
    ) -> Result<Vec<T>> {
        let mut d = self.advect(delta, dt)?;
        for (a, &r) in d.iter_mut().zip(residual) {
            *a = *a + r;
        }
        Ok(d)
    }
}

/// `f_j^{n+1} = Σ_k C_k f_{j+k}^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearStencil {
    pub offsets: Vec<i64>,
    pub coeffs: Vec<f64>,
    pub lambda: f64,
}

impl LinearStencil {
    pub fn coeff(&self, offset: i64) -> f64 {
        self.offsets
            .iter()
            .position(|&o| o == offset)
            .map_or(0.0, |p| self.coeffs[p])
    }

    pub fn row_sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }
}

/// Coefficients below this magnitude are trimmed from the stencil ends.
const TRIM: f64 = 1e-15;
/// Agreement required between the two impulse responses.
const PROBE_TOL: f64 = 1e-12;

/// Applies `step` to impulses at two positions of an `n_probe`-point
/// periodic line and reads off the stencil.
pub fn extract_stencil<F>(step: F, lambda: f64, n_probe: usize) -> Result<LinearStencil>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if n_probe < 8 {
        return Err(Error::InvalidConfig(format!(
            "probe line of {n_probe} points is too short"
        )));
    }
    let c = n_probe / 2;
    let shift = 3;
    let impulse = |at: usize| {
        let mut e = vec![0.0; n_probe];
        e[at] = 1.0;
        e
    };
    let r1 = step(&impulse(c))?;
    let r2 = step(&impulse(c + shift))?;
    let deviation = (0..n_probe)
        .map(|j| (r2[(j + shift) % n_probe] - r1[j]).abs())
        .fold(0.0, f64::max);
    if !(deviation <= PROBE_TOL) {
        return Err(Error::NotTranslationInvariant { deviation });
    }
    // out_j = C_{c-j} for the impulse at c.
    let half = (n_probe / 2) as i64;
    let coeff = |k: i64| r1[(c as i64 - k).rem_euclid(n_probe as i64) as usize];
    let range: Vec<i64> = (-half + 1..half).collect();
    let lo = range
        .iter()
        .copied()
        .find(|&k| coeff(k).abs() > TRIM)
        .unwrap_or(0);
    let hi = range
        .iter()
        .rev()
        .copied()
        .find(|&k| coeff(k).abs() > TRIM)
        .unwrap_or(0);
    if lo <= -half + 1 || hi >= half - 1 {
        return Err(Error::InvalidConfig(format!(
            "stencil fills the {n_probe}-point probe line; use a longer one"
        )));
    }
    let offsets: Vec<i64> = (lo..=hi).collect();
    let coeffs = offsets.iter().map(|&k| coeff(k)).collect();
    Ok(LinearStencil {
        offsets,
        coeffs,
        lambda,
    })
}

/// `|Σ_k C_k e^{I k ξ}|`.
pub fn amplification(stencil: &LinearStencil, xi: f64) -> f64 {
    stencil
        .offsets
        .iter()
        .zip(&stencil.coeffs)
        .map(|(&k, &c)| Complex::from_polar(c, k as f64 * xi))
        .sum::<Complex<f64>>()
        .norm()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmplificationProfile {
    pub xis: Vec<f64>,
    pub magnitudes: Vec<f64>,
}

impl AmplificationProfile {
    /// `samples` evenly spaced phases covering `[0, 2π]`.
    pub fn new(stencil: &LinearStencil, samples: usize) -> Self {
        let n = samples.max(2);
        let xis: Vec<f64> = (0..n)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64)
            .collect();
        let magnitudes = xis.iter().map(|&x| amplification(stencil, x)).collect();
        Self { xis, magnitudes }
    }

    pub fn max(&self) -> f64 {
        self.magnitudes.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CflScan {
    pub xi_samples: usize,
    pub lambda_step: f64,
    pub lambda_max: f64,
    pub bisect_tol: f64,
    pub tol_amp: f64,
}

impl Default for CflScan {
    fn default() -> Self {
        Self {
            xi_samples: 2000,
            lambda_step: 0.01,
            lambda_max: 10.0,
            bisect_tol: 1e-3,
            tol_amp: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CflBound {
    Bounded(f64),
    /// Stable for every λ scanned.
    NoRestriction,
}

impl CflBound {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Bounded(v) => Some(v),
            Self::NoRestriction => None,
        }
    }
}

impl fmt::Display for CflBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bounded(v) => write!(f, "{v:.2}"),
            Self::NoRestriction => f.write_str("No restriction"),
        }
    }
}

/// Largest λ with `max_ξ |a(ξ)| <= 1 + tol_amp`: a scan in steps of
/// `lambda_step` up to `lambda_max`, then bisection on the first unstable
/// bracket.
pub fn max_cfl<F>(family: F, scan: &CflScan) -> Result<CflBound>
where
    F: Fn(f64) -> Result<LinearStencil> + Sync,
{
    let stable = |lambda: f64| -> Result<bool> {
        let s = family(lambda)?;
        Ok(AmplificationProfile::new(&s, scan.xi_samples).max() <= 1.0 + scan.tol_amp)
    };
    let steps = (scan.lambda_max / scan.lambda_step).round() as usize;
    // Chunked so the scan can stop early without evaluating every λ.
    let chunk = 64;
    let mut first_unstable = None;
    'scan: for start in (1..=steps).step_by(chunk) {
        let end = (start + chunk).min(steps + 1);
        let flags = (start..end)
            .into_par_iter()
            .map(|i| stable(i as f64 * scan.lambda_step))
            .collect::<Result<Vec<bool>>>()?;
        if let Some(p) = flags.iter().position(|s| !s) {
            first_unstable = Some(start + p);
            break 'scan;
        }
    }
    let Some(i) = first_unstable else {
        return Ok(CflBound::NoRestriction);
    };
    let (mut lo, mut hi) = (
        (i - 1) as f64 * scan.lambda_step,
        i as f64 * scan.lambda_step,
    );
    while hi - lo > scan.bisect_tol {
        let mid = 0.5 * (lo + hi);
        if stable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CflBound::Bounded(lo))
}

/// Stencil of one IDC interval of `scheme` with sub-step CFL `lambda`.
pub fn idc_stencil(
    kind: ReconKind,
    scheme: &IdcPdeConfig,
    lambda: f64,
    n_probe: usize,
) -> Result<LinearStencil> {
    let system = LinearAdvection1D::new(kind)?;
    let dt = scheme.m as f64 * lambda;
    extract_stencil(
        |f| idc_step(&system, &f.to_vec(), scheme, dt),
        lambda,
        n_probe,
    )
}

/// Probe length large enough for every scheme of the table at λ <= 10.
pub const DEFAULT_PROBE: usize = 160;

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityTable {
    pub schemes: Vec<IdcPdeConfig>,
    pub rows: Vec<(ReconKind, Vec<CflBound>)>,
}

pub fn stability_table(
    recons: &[ReconKind],
    schemes: &[IdcPdeConfig],
    scan: &CflScan,
) -> Result<StabilityTable> {
    let mut rows = Vec::new();
    for &kind in recons {
        let bounds = schemes
            .iter()
            .map(|s| max_cfl(|l| idc_stencil(kind, s, l, DEFAULT_PROBE), scan))
            .collect::<Result<Vec<_>>>()?;
        rows.push((kind, bounds));
    }
    Ok(StabilityTable {
        schemes: schemes.to_vec(),
        rows,
    })
}

/// The five schemes of the classic table: IDC2J0, IDC2J1, IDC3J0, IDC3J1, IDC3J2.
pub fn standard_schemes() -> Vec<IdcPdeConfig> {
    [(1, 0), (1, 1), (2, 0), (2, 1), (2, 2)]
        .into_iter()
        .map(|(m, k)| IdcPdeConfig::lie(m, k))
        .collect()
}

fn recon_label(kind: ReconKind) -> &'static str {
    match kind {
        ReconKind::Linear3 => "SL3",
        ReconKind::Linear5 => "SL5",
        ReconKind::Weno5 => "WENO5",
    }
}

impl StabilityTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("scheme");
        for sc in &self.schemes {
            s.push(',');
            s.push_str(&sc.name());
        }
        s.push('\n');
        for (kind, bounds) in &self.rows {
            s.push_str(recon_label(*kind));
            for b in bounds {
                s.push(',');
                s.push_str(&b.to_string());
            }
            s.push('\n');
        }
        s
    }
}
