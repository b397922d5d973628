//! Dimensional splitting steps for the Vlasov–Poisson and drift models.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field_solve::{Field1D, Field2D, Poisson1D, Poisson2D};
use crate::mesh::{Axis, Boundary, PhaseGrid, ScalarField};
use crate::real::{pairwise_sum, Real};
use crate::reconstruct::{flux_difference, ReconKind, Wind};
use crate::sl1d::{sl_step_into, AdvectionProblem, SweepScratch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum SplitKind {
    #[default]
    Lie,
    Strang,
}

impl SplitKind {
    pub fn name(self) -> &'static str {
        match self {
            SplitKind::Lie => "lie",
            SplitKind::Strang => "strang",
        }
    }
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lie" => Ok(SplitKind::Lie),
            "strang" => Ok(SplitKind::Strang),
            other => Err(Error::InvalidConfig(format!(
                "unknown split {other:?}; expected lie or strang"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    VlasovPoisson,
    /// `ρ_t + E⊥·∇ρ = 0` with `ΔΦ = ρ`, `E = -∇Φ`, `E⊥ = (-E2, E1)`.
    GuidingCenter,
    /// `ω_t + ∇·(u ω) = 0` with `ΔΦ = ω`, `u = (-Φ_y, Φ_x)`.
    Euler,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::VlasovPoisson => "vlasov_poisson",
            ModelKind::GuidingCenter => "guiding_center",
            ModelKind::Euler => "euler",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vlasov_poisson" | "vp" => Ok(ModelKind::VlasovPoisson),
            "guiding_center" | "gc" => Ok(ModelKind::GuidingCenter),
            "euler" => Ok(ModelKind::Euler),
            other => Err(Error::InvalidConfig(format!("unknown model {other:?}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Field-level sweeps

/// Advects every line along `axis` with its own constant speed.
pub fn sweep_constant<T: Real>(
    f: &ScalarField<T>,
    axis: Axis,
    line_speeds: &[T],
    dt: T,
    kind: ReconKind,
    boundary: Boundary,
) -> Result<ScalarField<T>> {
    if line_speeds.len() != f.num_lines(axis) {
        return Err(Error::ShapeMismatch(format!(
            "{} line speeds for {} lines",
            line_speeds.len(),
            f.num_lines(axis)
        )));
    }
    let spacing = f.grid().spacing(axis);
    f.map_lines(axis, SweepScratch::new, |scratch, idx, line, out| {
        let p =
            AdvectionProblem::constant(line_speeds[idx], dt, spacing, kind).with_boundary(boundary);
        sl_step_into(line, &p, scratch, out)
    })
}

/// Advects along `axis` with the pointwise speed field `speed`.
pub fn sweep_variable<T: Real>(
    f: &ScalarField<T>,
    axis: Axis,
    speed: &ScalarField<T>,
    dt: T,
    kind: ReconKind,
) -> Result<ScalarField<T>> {
    let spacing = f.grid().spacing(axis);
    f.map_lines_with(
        axis,
        Some(speed),
        SweepScratch::new,
        |scratch, _, line, a, out| {
            let p = AdvectionProblem::variable(a, dt, spacing, kind);
            sl_step_into(line, &p, scratch, out)
        },
    )
}

/// Flux differences `Ĥ_{i+1/2} - Ĥ_{i-1/2}` of `q` along `axis`, upwinded by
/// the sign of each line's constant speed.
pub fn flux_difference_constant<T: Real>(
    q: &ScalarField<T>,
    axis: Axis,
    line_speeds: &[T],
    boundary: Boundary,
    kind: ReconKind,
) -> Result<ScalarField<T>> {
    q.map_lines(axis, Vec::new, |pad, idx, line, out| {
        let w = Wind::of(line_speeds[idx]);
        flux_difference(line, |_| w, boundary, kind, pad, out)
    })
}

/// Flux differences of `q` along `axis` on a periodic line, with the wind at
/// `i + 1/2` taken from `speed_i + speed_{i+1}`.
pub fn flux_difference_variable<T: Real>(
    q: &ScalarField<T>,
    axis: Axis,
    speed: &ScalarField<T>,
    kind: ReconKind,
) -> Result<ScalarField<T>> {
    q.map_lines_with(axis, Some(speed), Vec::new, |pad, _, line, a, out| {
        let n = a.len();
        flux_difference(
            line,
            |i| Wind::of(a[i] + a[(i + 1) % n]),
            Boundary::Periodic,
            kind,
            pad,
            out,
        )
    })
}

/// Pointwise product of two fields on one grid.
pub fn product<T: Real>(a: &ScalarField<T>, b: &ScalarField<T>) -> Result<ScalarField<T>> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch(
            "product of differently shaped fields".into(),
        ));
    }
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| *x * *y)
        .collect();
    ScalarField::from_values(*a.grid(), values)
}

// ---------------------------------------------------------------------------
// Vlasov–Poisson

/// Residual flux differences use fifth-order WENO whatever the sweep uses.
pub const DEFAULT_RESIDUAL_RECON: ReconKind = ReconKind::Weno5;

/// The 1D1V Vlasov–Poisson system on `[0, L] x [-v_max, v_max]`; axis 1 is
/// `x` (periodic), axis 2 is `v`.
#[derive(Clone, Debug)]
pub struct VlasovPoisson<T: Real> {
    grid: PhaseGrid<T>,
    kind: ReconKind,
    residual_kind: ReconKind,
    poisson: Poisson1D<T>,
    v: Vec<T>,
    v_boundary: Boundary,
}

impl<T: Real> VlasovPoisson<T> {
    pub fn new(grid: PhaseGrid<T>, kind: ReconKind) -> Result<Self> {
        Ok(Self {
            poisson: Poisson1D::new(grid.n1, grid.extent(Axis::First))?,
            v: grid.coords(Axis::Second),
            grid,
            kind,
            residual_kind: DEFAULT_RESIDUAL_RECON,
            v_boundary: Boundary::ZeroWall,
        })
    }

    /// Reconstruction of the flux differences in residuals and sources.
    pub fn with_residual_recon(mut self, kind: ReconKind) -> Self {
        self.residual_kind = kind;
        self
    }

    pub fn residual_kind(&self) -> ReconKind {
        self.residual_kind
    }

    /// Replaces the zero-inflow treatment of the velocity ends.
    pub fn with_v_boundary(mut self, boundary: Boundary) -> Self {
        self.v_boundary = boundary;
        self
    }

    pub fn grid(&self) -> &PhaseGrid<T> {
        &self.grid
    }

    pub fn kind(&self) -> ReconKind {
        self.kind
    }

    pub fn velocities(&self) -> &[T] {
        &self.v
    }

    pub fn v_boundary(&self) -> Boundary {
        self.v_boundary
    }

    pub fn density(&self, f: &ScalarField<T>) -> Vec<T> {
        (0..self.grid.n1)
            .map(|i| {
                pairwise_sum(&f.values()[i * self.grid.n2..(i + 1) * self.grid.n2]) * self.grid.d2
            })
            .collect()
    }

    pub fn field(&self, f: &ScalarField<T>) -> Result<Field1D<T>> {
        self.poisson.solve(&self.density(f))
    }

    pub fn advect_x(&self, f: &ScalarField<T>, dt: T) -> Result<ScalarField<T>> {
        sweep_constant(f, Axis::First, &self.v, dt, self.kind, Boundary::Periodic)
    }

    pub fn advect_v(&self, f: &ScalarField<T>, e: &[T], dt: T) -> Result<ScalarField<T>> {
        sweep_constant(f, Axis::Second, e, dt, self.kind, self.v_boundary)
    }

    pub fn step_lie(&self, f: &ScalarField<T>, dt: T) -> Result<ScalarField<T>> {
        let fs = self.advect_x(f, dt)?;
        let e = self.field(&fs)?;
        self.advect_v(&fs, &e.e, dt)
    }

    pub fn step_strang(&self, f: &ScalarField<T>, dt: T) -> Result<ScalarField<T>> {
        let half = dt * T::lit(0.5);
        let fs = self.advect_x(f, half)?;
        let e = self.field(&fs)?;
        let fss = self.advect_v(&fs, &e.e, dt)?;
        self.advect_x(&fss, half)
    }

    pub fn step(&self, f: &ScalarField<T>, dt: T, split: SplitKind) -> Result<ScalarField<T>> {
        match split {
            SplitKind::Lie => self.step_lie(f, dt),
            SplitKind::Strang => self.step_strang(f, dt),
        }
    }

    /// Flux differences of `f` along `v` upwinded by `E`.
    pub fn dv(&self, f: &ScalarField<T>, e: &[T]) -> Result<ScalarField<T>> {
        flux_difference_constant(f, Axis::Second, e, self.v_boundary, self.residual_kind)
    }

    /// Flux differences of `f` along `x` upwinded by `v`.
    pub fn dx(&self, f: &ScalarField<T>) -> Result<ScalarField<T>> {
        flux_difference_constant(
            f,
            Axis::First,
            &self.v,
            Boundary::Periodic,
            self.residual_kind,
        )
    }
}

// ---------------------------------------------------------------------------
// Drift models

/// Transport by a divergence-free drift derived from `ΔΦ = ρ - ρ̄` on a doubly
/// periodic domain.
#[derive(Clone, Debug)]
pub struct Drift2D<T: Real> {
    grid: PhaseGrid<T>,
    kind: ReconKind,
    residual_kind: ReconKind,
    model: ModelKind,
    poisson: Poisson2D<T>,
}

/// Velocity components of the drift.
#[derive(Clone, Debug)]
pub struct Drift<T> {
    pub u1: ScalarField<T>,
    pub u2: ScalarField<T>,
    pub field: Field2D<T>,
}

impl<T: Real> Drift2D<T> {
    pub fn new(grid: PhaseGrid<T>, kind: ReconKind, model: ModelKind) -> Result<Self> {
        if model == ModelKind::VlasovPoisson {
            return Err(Error::InvalidConfig(
                "drift system needs a 2-D transport model".into(),
            ));
        }
        Ok(Self {
            poisson: Poisson2D::new(grid),
            grid,
            kind,
            residual_kind: DEFAULT_RESIDUAL_RECON,
            model,
        })
    }

    /// Reconstruction of the flux differences in residuals and sources.
    pub fn with_residual_recon(mut self, kind: ReconKind) -> Self {
        self.residual_kind = kind;
        self
    }

    pub fn residual_kind(&self) -> ReconKind {
        self.residual_kind
    }

    pub fn grid(&self) -> &PhaseGrid<T> {
        &self.grid
    }

    pub fn kind(&self) -> ReconKind {
        self.kind
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn field(&self, rho: &ScalarField<T>) -> Result<Field2D<T>> {
        self.poisson.solve(rho)
    }

    /// Drift velocity of the field of `rho`.
    pub fn drift(&self, rho: &ScalarField<T>) -> Result<Drift<T>> {
        let field = self.field(rho)?;
        let (u1, u2) = match self.model {
            ModelKind::Euler => (field.e2.clone(), field.e1.map(|v| -v)),
            _ => field.perp(),
        };
        Ok(Drift { u1, u2, field })
    }

    pub fn advect(
        &self,
        f: &ScalarField<T>,
        axis: Axis,
        speed: &ScalarField<T>,
        dt: T,
    ) -> Result<ScalarField<T>> {
        sweep_variable(f, axis, speed, dt, self.kind)
    }

    pub fn step_lie(&self, f: &ScalarField<T>, dt: T) -> Result<ScalarField<T>> {
        let d = self.drift(f)?;
        let fs = self.advect(f, Axis::First, &d.u1, dt)?;
        let d = self.drift(&fs)?;
        self.advect(&fs, Axis::Second, &d.u2, dt)
    }

    pub fn step_strang(&self, f: &ScalarField<T>, dt: T) -> Result<ScalarField<T>> {
        let half = dt * T::lit(0.5);
        let d = self.drift(f)?;
        let fs = self.advect(f, Axis::First, &d.u1, half)?;
        let d = self.drift(&fs)?;
        let fss = self.advect(&fs, Axis::Second, &d.u2, dt)?;
        let d = self.drift(&fss)?;
        self.advect(&fss, Axis::First, &d.u1, half)
    }

    pub fn step(&self, f: &ScalarField<T>, dt: T, split: SplitKind) -> Result<ScalarField<T>> {
        match split {
            SplitKind::Lie => self.step_lie(f, dt),
            SplitKind::Strang => self.step_strang(f, dt),
        }
    }

    /// Flux difference of `speed * q` along `axis`.
    pub fn d_flux(
        &self,
        q: &ScalarField<T>,
        axis: Axis,
        speed: &ScalarField<T>,
    ) -> Result<ScalarField<T>> {
        flux_difference_variable(&product(speed, q)?, axis, speed, self.residual_kind)
    }
}
