//! Deferred correction of split semi-Lagrangian steps.
//!
//! One IDC interval of length `M Δτ` predicts all sub-node solutions with the
//! split stepper, then runs `K` correction sweeps. Each sweep evolves the
//! error `δ` from zero through the split error equations and adds it to the
//! nodal solutions. The residual integral over `[τ_m, τ_{m+1}]` enters only
//! through `-(η_{m+1} - η_m) - Σ_ℓ α_{m,ℓ} g(η_ℓ)`, where `η_t = -g(η)` is the
//! flux-difference form of the model.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::idc_core::{quadrature_matrix, QuadratureMatrix};
use crate::mesh::{Axis, ScalarField};
use crate::real::{pairwise_sum, Real};
use crate::split_step::{Drift2D, SplitKind, VlasovPoisson};

/// Arithmetic needed on nodal solutions and errors.
pub trait NodalState<T: Real>: Clone + Send + Sync {
    fn zeros_like(&self) -> Self;
    /// `self += a * x`
    fn axpy(&mut self, a: T, x: &Self) -> Result<()>;
    /// Plain sum of all nodal values.
    fn total(&self) -> T;
    fn all_finite(&self) -> bool;
}

impl<T: Real> NodalState<T> for ScalarField<T> {
    fn zeros_like(&self) -> Self {
        ScalarField::zeros(*self.grid())
    }
    fn axpy(&mut self, a: T, x: &Self) -> Result<()> {
        ScalarField::axpy(self, a, x)
    }
    fn total(&self) -> T {
        self.sum()
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl<T: Real> NodalState<T> for Vec<T> {
    fn zeros_like(&self) -> Self {
        vec![T::zero(); self.len()]
    }
    fn axpy(&mut self, a: T, x: &Self) -> Result<()> {
        if self.len() != x.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} vs {}",
                self.len(),
                x.len()
            )));
        }
        for (s, &v) in self.iter_mut().zip(x) {
            *s = *s + a * v;
        }
        Ok(())
    }
    fn total(&self) -> T {
        pairwise_sum(self)
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

/// Placement of the source stage inside a Strang-split correction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum StrangCorrection {
    /// Half sweeps with speeds at `τ_m`, a source half step, the residual,
    /// a source half step with the updated error field, then the mirrored
    /// half sweeps with speeds at `τ_{m+1}`.
    #[default]
    Symmetric,
    /// Half sweep, full sweep, half sweep, then the source stage.
    Literal,
}

impl FromStr for StrangCorrection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "symmetric" => Ok(Self::Symmetric),
            "literal" => Ok(Self::Literal),
            other => Err(Error::InvalidConfig(format!(
                "unknown Strang correction {other:?}; expected symmetric or literal"
            ))),
        }
    }
}

impl fmt::Display for StrangCorrection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Symmetric => "symmetric",
            Self::Literal => "literal",
        })
    }
}

/// Sub-interval count, correction count and splitting of one IDC scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IdcPdeConfig {
    pub m: usize,
    pub k: usize,
    pub split: SplitKind,
    pub strang_correction: StrangCorrection,
}

impl IdcPdeConfig {
    pub fn new(m: usize, k: usize, split: SplitKind) -> Self {
        Self {
            m,
            k,
            split,
            strang_correction: StrangCorrection::default(),
        }
    }

    pub fn lie(m: usize, k: usize) -> Self {
        Self::new(m, k, SplitKind::Lie)
    }

    pub fn strang(m: usize, k: usize) -> Self {
        Self::new(m, k, SplitKind::Strang)
    }

    /// `IDC3J2`, `IDC-Strang3J1` and so on.
    pub fn name(&self) -> String {
        match self.split {
            SplitKind::Lie => format!("IDC{}J{}", self.m + 1, self.k),
            SplitKind::Strang => format!("IDC-Strang{}J{}", self.m + 1, self.k),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=crate::idc_core::MAX_NODES).contains(&self.m) {
            return Err(Error::InvalidConfig(format!(
                "sub-interval count must be in 1..={}, got {}",
                crate::idc_core::MAX_NODES,
                self.m
            )));
        }
        Ok(())
    }
}

impl FromStr for IdcPdeConfig {
    type Err = Error;
    /// Parses `IDC3J2` or `IDC-Strang3J1`, ignoring case.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidConfig(format!(
                "bad scheme name {s:?}; expected e.g. IDC3J2 or IDC-Strang3J1"
            ))
        };
        let lower = s.trim().to_ascii_lowercase();
        let rest = lower.strip_prefix("idc").ok_or_else(bad)?;
        let (split, rest) = match rest.strip_prefix("-strang") {
            Some(r) => (SplitKind::Strang, r),
            None => (SplitKind::Lie, rest),
        };
        let (nodes, k) = rest.split_once('j').ok_or_else(bad)?;
        let nodes: usize = nodes.parse().map_err(|_| bad())?;
        let k: usize = k.parse().map_err(|_| bad())?;
        if nodes < 2 {
            return Err(bad());
        }
        let cfg = Self::new(nodes - 1, k, split);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Read-only data of one correction step from `τ_m` to `τ_{m+1}`.
pub struct CorrectionContext<'a, T: Real, S: SplitSystem<T> + ?Sized> {
    pub eta_m: &'a S::State,
    pub eta_next: &'a S::State,
    pub cache_m: &'a S::Cache,
    pub cache_next: &'a S::Cache,
    pub strang: StrangCorrection,
}

/// A model advanced by split SL sweeps, with its error equations.
pub trait SplitSystem<T: Real>: Sync {
    type State: NodalState<T>;
    /// Quantities of a nodal solution reused across one correction sweep.
    type Cache: Send + Sync;

    fn split_step(&self, f: &Self::State, dt: T, split: SplitKind) -> Result<Self::State>;

    fn prepare(&self, eta: &Self::State) -> Result<Self::Cache>;

    /// `g(η)` with `η_t = -g(η)`, computed by [`prepare`](Self::prepare).
    fn rate<'c>(&self, cache: &'c Self::Cache) -> &'c Self::State;

    /// Advances `δ_m` to `δ_{m+1}`; `residual` is the integral of the residual
    /// over the sub-interval.
    fn correct(
        &self,
        ctx: &CorrectionContext<'_, T, Self>,
        delta: &Self::State,
        residual: &Self::State,
        dt: T,
        split: SplitKind,
    ) -> Result<Self::State>;
}

/// Nodal solutions of one sweep with their cached field data.
pub struct NodalSolutionSet<T: Real, S: SplitSystem<T>> {
    pub etas: Vec<S::State>,
    pub caches: Vec<S::Cache>,
}

impl<T: Real, S: SplitSystem<T>> NodalSolutionSet<T, S> {
    pub fn new(system: &S, etas: Vec<S::State>) -> Result<Self> {
        let caches = etas
            .iter()
            .map(|e| system.prepare(e))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { etas, caches })
    }
}

/// `-(η_{m+1} - η_m) - Σ_ℓ α_{m,ℓ} g(η_ℓ)`.
pub fn residual_integral<T: Real, S: SplitSystem<T>>(
    system: &S,
    set: &NodalSolutionSet<T, S>,
    m: usize,
    alpha: &QuadratureMatrix<T>,
) -> Result<S::State> {
    let mut r = set.etas[m].clone();
    r.axpy(-T::one(), &set.etas[m + 1])?;
    for (l, cache) in set.caches.iter().enumerate() {
        r.axpy(-alpha.alpha[m][l], system.rate(cache))?;
    }
    Ok(r)
}

/// Error at node `m + 1` from the error at node `m`.
pub fn evolve_error_node<T: Real, S: SplitSystem<T>>(
    system: &S,
    set: &NodalSolutionSet<T, S>,
    m: usize,
    delta_m: &S::State,
    alpha: &QuadratureMatrix<T>,
    config: &IdcPdeConfig,
) -> Result<S::State> {
    let residual = residual_integral(system, set, m, alpha)?;
    let ctx = CorrectionContext {
        eta_m: &set.etas[m],
        eta_next: &set.etas[m + 1],
        cache_m: &set.caches[m],
        cache_next: &set.caches[m + 1],
        strang: config.strang_correction,
    };
    let dtau = alpha.alpha[m].iter().fold(T::zero(), |a, &w| a + w);
    system.correct(&ctx, delta_m, &residual, dtau, config.split)
}

/// Hook called with `(k, m, δ^{[k]}_m)` after each error node is computed.
pub type ErrorObserver<'a, S> = dyn FnMut(usize, usize, &S) + 'a;

/// One IDC interval of length `dt_interval`, returning `η^{[K]}_M`.
pub fn idc_step<T: Real, S: SplitSystem<T>>(
    system: &S,
    f: &S::State,
    config: &IdcPdeConfig,
    dt_interval: T,
) -> Result<S::State> {
    idc_step_observed(system, f, config, dt_interval, &mut |_, _, _| {})
}

pub fn idc_step_observed<T: Real, S: SplitSystem<T>>(
    system: &S,
    f: &S::State,
    config: &IdcPdeConfig,
    dt_interval: T,
    observer: &mut ErrorObserver<'_, S::State>,
) -> Result<S::State> {
    config.validate()?;
    let m_sub = config.m;
    let dtau = dt_interval / T::from_usize_lossy(m_sub);
    let mut etas = Vec::with_capacity(m_sub + 1);
    etas.push(f.clone());
    for m in 0..m_sub {
        let next = system.split_step(&etas[m], dtau, config.split)?;
        etas.push(next);
    }
    if config.k == 0 {
        return Ok(etas.pop().expect("at least one node"));
    }
    let alpha = quadrature_matrix(m_sub, dtau)?;
    for k in 1..=config.k {
        let set = NodalSolutionSet::new(system, etas)?;
        let mut deltas = vec![f.zeros_like()];
        for m in 0..m_sub {
            let next = evolve_error_node(system, &set, m, &deltas[m], &alpha, config)?;
            observer(k, m + 1, &next);
            deltas.push(next);
        }
        etas = set.etas;
        for (eta, delta) in etas.iter_mut().zip(&deltas).skip(1) {
            eta.axpy(T::one(), delta)?;
        }
    }
    Ok(etas.pop().expect("at least one node"))
}

/// [`idc_step`] for the drift models.
pub fn gc_idc_step<T: Real>(
    system: &Drift2D<T>,
    f: &ScalarField<T>,
    config: &IdcPdeConfig,
    dt_interval: T,
) -> Result<ScalarField<T>> {
    idc_step(system, f, config, dt_interval)
}

// ---------------------------------------------------------------------------
// Vlasov–Poisson error equations

#[derive(Clone, Debug)]
pub struct VpCache<T> {
    pub e: Vec<T>,
    /// Flux differences of η along v, upwinded by `E^η`.
    pub dv: ScalarField<T>,
    pub rate: ScalarField<T>,
}

/// Adds `-scale * E_i * d_ij` to `target`.
fn add_field_source<T: Real>(target: &mut ScalarField<T>, scale: T, e: &[T], d: &ScalarField<T>) {
    let n2 = d.grid().n2;
    for (idx, (t, &dv)) in target.values_mut().iter_mut().zip(d.values()).enumerate() {
        *t = *t - scale * e[idx / n2] * dv;
    }
}

impl<T: Real> VlasovPoisson<T> {
    /// Field of an error state: the Poisson solve is linear, so this equals
    /// `E^{η+δ} - E^{η}` without the cancellation.
    fn error_field(&self, delta: &ScalarField<T>) -> Result<Vec<T>> {
        Ok(self.field(delta)?.e)
    }

    fn plus(a: &[T], b: &[T]) -> Vec<T> {
        a.iter().zip(b).map(|(x, y)| *x + *y).collect()
    }
}

impl<T: Real> SplitSystem<T> for VlasovPoisson<T> {
    type State = ScalarField<T>;
    type Cache = VpCache<T>;

    fn split_step(&self, f: &ScalarField<T>, dt: T, split: SplitKind) -> Result<ScalarField<T>> {
        self.step(f, dt, split)
    }

    fn prepare(&self, eta: &ScalarField<T>) -> Result<VpCache<T>> {
        let e = self.field(eta)?.e;
        let dv = self.dv(eta, &e)?;
        let dx = self.dx(eta)?;
        let g = self.grid();
        let (n2, rdx, rdv) = (g.n2, T::one() / g.d1, T::one() / g.d2);
        let v = self.velocities();
        let values = dx
            .values()
            .iter()
            .zip(dv.values())
            .enumerate()
            .map(|(idx, (&a, &b))| v[idx % n2] * a * rdx + e[idx / n2] * b * rdv)
            .collect();
        Ok(VpCache {
            rate: ScalarField::from_values(*g, values)?,
            e,
            dv,
        })
    }

    fn rate<'c>(&self, cache: &'c VpCache<T>) -> &'c ScalarField<T> {
        &cache.rate
    }

    fn correct(
        &self,
        ctx: &CorrectionContext<'_, T, Self>,
        delta: &ScalarField<T>,
        residual: &ScalarField<T>,
        dt: T,
        split: SplitKind,
    ) -> Result<ScalarField<T>> {
        let dv_spacing = self.grid().d2;
        match (split, ctx.strang) {
            (SplitKind::Lie, _) => {
                let d1 = self.advect_x(delta, dt)?;
                let ed = self.error_field(&d1)?;
                let mut d2 = self.advect_v(&d1, &Self::plus(&ctx.cache_m.e, &ed), dt)?;
                add_field_source(&mut d2, dt / dv_spacing, &ed, &ctx.cache_m.dv);
                d2.axpy(T::one(), residual)?;
                Ok(d2)
            }
            (SplitKind::Strang, StrangCorrection::Literal) => {
                let half = dt * T::lit(0.5);
                let d1 = self.advect_x(delta, half)?;
                let ed = self.error_field(&d1)?;
                let d2 = self.advect_v(&d1, &Self::plus(&ctx.cache_m.e, &ed), dt)?;
                let mut d3 = self.advect_x(&d2, half)?;
                add_field_source(&mut d3, dt / dv_spacing, &ed, &ctx.cache_m.dv);
                d3.axpy(T::one(), residual)?;
                Ok(d3)
            }
            (SplitKind::Strang, StrangCorrection::Symmetric) => {
                let half = dt * T::lit(0.5);
                let d1 = self.advect_x(delta, half)?;
                // Neither v-sweeps nor the source stage change the density, so
                // the error field only moves with the x-sweeps and the residual.
                let ed1 = self.error_field(&d1)?;
                let mut d2 = self.advect_v(&d1, &Self::plus(&ctx.cache_m.e, &ed1), half)?;
                add_field_source(&mut d2, half / dv_spacing, &ed1, &ctx.cache_m.dv);
                d2.axpy(T::one(), residual)?;
                let ed2 = self.error_field(&d2)?;
                add_field_source(&mut d2, half / dv_spacing, &ed2, &ctx.cache_next.dv);
                let d3 = self.advect_v(&d2, &Self::plus(&ctx.cache_next.e, &ed2), half)?;
                self.advect_x(&d3, half)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Drift-model error equations

#[derive(Clone, Debug)]
pub struct DriftCache<T> {
    pub u1: ScalarField<T>,
    pub u2: ScalarField<T>,
    pub rate: ScalarField<T>,
}

impl<T: Real> Drift2D<T> {
    /// `D1(a η)/Δ1 + D2(b η)/Δ2`.
    fn transport_rate(
        &self,
        eta: &ScalarField<T>,
        a: &ScalarField<T>,
        b: &ScalarField<T>,
    ) -> Result<ScalarField<T>> {
        let g = *self.grid();
        let mut r = self.d_flux(eta, Axis::First, a)?.map(|v| v / g.d1);
        r.axpy(T::one() / g.d2, &self.d_flux(eta, Axis::Second, b)?)?;
        Ok(r)
    }
}

impl<T: Real> SplitSystem<T> for Drift2D<T> {
    type State = ScalarField<T>;
    type Cache = DriftCache<T>;

    fn split_step(&self, f: &ScalarField<T>, dt: T, split: SplitKind) -> Result<ScalarField<T>> {
        self.step(f, dt, split)
    }

    fn prepare(&self, eta: &ScalarField<T>) -> Result<DriftCache<T>> {
        let d = self.drift(eta)?;
        let rate = self.transport_rate(eta, &d.u1, &d.u2)?;
        Ok(DriftCache {
            u1: d.u1,
            u2: d.u2,
            rate,
        })
    }

    fn rate<'c>(&self, cache: &'c DriftCache<T>) -> &'c ScalarField<T> {
        &cache.rate
    }

    fn correct(
        &self,
        ctx: &CorrectionContext<'_, T, Self>,
        delta: &ScalarField<T>,
        residual: &ScalarField<T>,
        dt: T,
        split: SplitKind,
    ) -> Result<ScalarField<T>> {
        let (cm, cn) = (ctx.cache_m, ctx.cache_next);
        let x = Axis::First;
        let y = Axis::Second;
        match (split, ctx.strang) {
            (SplitKind::Lie, _) => {
                let u0 = self.drift(delta)?;
                let d1 = self.advect(delta, x, &cm.u1.add(&u0.u1)?, dt)?;
                let u1 = self.drift(&d1)?;
                let mut d2 = self.advect(&d1, y, &cm.u2.add(&u1.u2)?, dt)?;
                d2.axpy(-dt, &self.transport_rate(ctx.eta_m, &u1.u1, &u1.u2)?)?;
                d2.axpy(T::one(), residual)?;
                Ok(d2)
            }
            (SplitKind::Strang, StrangCorrection::Literal) => {
                let half = dt * T::lit(0.5);
                let u0 = self.drift(delta)?;
                let d1 = self.advect(delta, x, &cm.u1.add(&u0.u1)?, half)?;
                let u1 = self.drift(&d1)?;
                let d2 = self.advect(&d1, y, &cm.u2.add(&u1.u2)?, dt)?;
                let u2 = self.drift(&d2)?;
                let mut d3 = self.advect(&d2, x, &cm.u1.add(&u2.u1)?, half)?;
                d3.axpy(-dt, &self.transport_rate(ctx.eta_m, &u1.u1, &u1.u2)?)?;
                d3.axpy(T::one(), residual)?;
                Ok(d3)
            }
            (SplitKind::Strang, StrangCorrection::Symmetric) => {
                let half = dt * T::lit(0.5);
                let u0 = self.drift(delta)?;
                let d1 = self.advect(delta, x, &cm.u1.add(&u0.u1)?, half)?;
                let u1 = self.drift(&d1)?;
                let mut d2 = self.advect(&d1, y, &cm.u2.add(&u1.u2)?, half)?;
                let u2 = self.drift(&d2)?;
                d2.axpy(-half, &self.transport_rate(ctx.eta_m, &u2.u1, &u2.u2)?)?;
                d2.axpy(T::one(), residual)?;
                let u3 = self.drift(&d2)?;
                d2.axpy(-half, &self.transport_rate(ctx.eta_next, &u3.u1, &u3.u2)?)?;
                let u4 = self.drift(&d2)?;
                let d5 = self.advect(&d2, y, &cn.u2.add(&u4.u2)?, half)?;
                let u5 = self.drift(&d5)?;
                self.advect(&d5, x, &cn.u1.add(&u5.u1)?, half)
            }
        }
    }
}
