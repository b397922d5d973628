//! Benchmark initial conditions and their default run settings.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::{PhaseGrid, ScalarField};
use crate::real::Real;
use crate::reconstruct::ReconKind;
use crate::split_step::ModelKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioTag {
    LandauStrong,
    TwoStream1,
    TwoStream2,
    KelvinHelmholtz,
    EulerAccuracy,
    ShearFlow,
    VortexPatch,
}

impl ScenarioTag {
    pub const ALL: [ScenarioTag; 7] = [
        Self::LandauStrong,
        Self::TwoStream1,
        Self::TwoStream2,
        Self::KelvinHelmholtz,
        Self::EulerAccuracy,
        Self::ShearFlow,
        Self::VortexPatch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::LandauStrong => "landau_strong",
            Self::TwoStream1 => "two_stream_1",
            Self::TwoStream2 => "two_stream_2",
            Self::KelvinHelmholtz => "kelvin_helmholtz",
            Self::EulerAccuracy => "euler_accuracy",
            Self::ShearFlow => "shear_flow",
            Self::VortexPatch => "vortex_patch",
        }
    }

    pub fn model(self) -> ModelKind {
        match self {
            Self::LandauStrong | Self::TwoStream1 | Self::TwoStream2 => ModelKind::VlasovPoisson,
            Self::KelvinHelmholtz => ModelKind::GuidingCenter,
            Self::EulerAccuracy | Self::ShearFlow | Self::VortexPatch => ModelKind::Euler,
        }
    }
}

impl fmt::Display for ScenarioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|t| t.name() == key)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|t| t.name()).collect();
                Error::InvalidConfig(format!(
                    "unknown scenario {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// A scenario with its physical parameters. Unused parameters are zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scenario {
    pub tag: ScenarioTag,
    /// Perturbation amplitude.
    pub alpha: f64,
    /// Perturbation wavenumber; the x-length is `2π / k`.
    pub k: f64,
    /// Shear-flow perturbation amplitude.
    pub delta: f64,
    /// Shear-layer width.
    pub rho: f64,
}

/// Mesh, horizon and scheme used when a run does not override them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunDefaults {
    pub n1: usize,
    pub n2: usize,
    pub t_final: f64,
    pub cfl: f64,
    pub m: usize,
    pub k: usize,
    pub recon: ReconKind,
}

pub const V_MAX: f64 = 2.0 * std::f64::consts::PI;

impl Scenario {
    pub fn new(tag: ScenarioTag) -> Self {
        let (alpha, k, delta, rho) = match tag {
            ScenarioTag::LandauStrong => (0.5, 0.5, 0.0, 0.0),
            ScenarioTag::TwoStream1 => (0.01, 0.5, 0.0, 0.0),
            ScenarioTag::TwoStream2 => (0.05, 0.5, 0.0, 0.0),
            ScenarioTag::KelvinHelmholtz => (0.015, 0.5, 0.0, 0.0),
            ScenarioTag::EulerAccuracy | ScenarioTag::VortexPatch => (0.0, 1.0, 0.0, 0.0),
            ScenarioTag::ShearFlow => (0.0, 1.0, 0.05, std::f64::consts::PI / 15.0),
        };
        Self {
            tag,
            alpha,
            k,
            delta,
            rho,
        }
    }

    pub fn model(&self) -> ModelKind {
        self.tag.model()
    }

    /// `[lo1, hi1, lo2, hi2]`.
    pub fn bounds(&self) -> [f64; 4] {
        use std::f64::consts::PI;
        match self.model() {
            ModelKind::VlasovPoisson => [0.0, 2.0 * PI / self.k, -V_MAX, V_MAX],
            ModelKind::GuidingCenter => [0.0, 2.0 * PI / self.k, 0.0, 2.0 * PI],
            ModelKind::Euler => [0.0, 2.0 * PI, 0.0, 2.0 * PI],
        }
    }

    pub fn defaults(&self) -> RunDefaults {
        let d =
            |n: usize, t_final: f64, cfl: f64, m: usize, k: usize, recon: ReconKind| RunDefaults {
                n1: n,
                n2: n,
                t_final,
                cfl,
                m,
                k,
                recon,
            };
        match self.tag {
            ScenarioTag::LandauStrong | ScenarioTag::TwoStream1 | ScenarioTag::TwoStream2 => {
                d(256, 40.0, 0.6, 2, 3, ReconKind::Weno5)
            }
            ScenarioTag::KelvinHelmholtz => d(128, 40.0, 0.67, 2, 2, ReconKind::Linear3),
            ScenarioTag::EulerAccuracy => d(300, 1.0, 0.62, 2, 1, ReconKind::Linear3),
            ScenarioTag::ShearFlow => d(128, 8.0, 0.67, 2, 2, ReconKind::Linear3),
            ScenarioTag::VortexPatch => d(256, 10.0, 0.67, 2, 2, ReconKind::Linear3),
        }
    }

    pub fn grid<T: Real>(&self, n1: usize, n2: usize) -> Result<PhaseGrid<T>> {
        let b = self.bounds();
        PhaseGrid::new(
            n1,
            n2,
            [T::lit(b[0]), T::lit(b[1]), T::lit(b[2]), T::lit(b[3])],
        )
    }

    /// Initial state sampled at the nodes of `grid`.
    pub fn initial<T: Real>(&self, grid: PhaseGrid<T>) -> ScalarField<T> {
        use std::f64::consts::PI;
        let (a, k, delta, rho) = (self.alpha, self.k, self.delta, self.rho);
        let norm = 1.0 / (2.0 * PI).sqrt();
        let tag = self.tag;
        let value = move |x: f64, y: f64| -> f64 {
            match tag {
                ScenarioTag::LandauStrong => {
                    norm * (1.0 + a * (k * x).cos()) * (-y * y / 2.0).exp()
                }
                ScenarioTag::TwoStream1 => {
                    let pert = ((2.0 * k * x).cos() + (3.0 * k * x).cos()) / 1.2 + (k * x).cos();
                    2.0 / 7.0 * norm * (1.0 + 5.0 * y * y) * (1.0 + a * pert) * (-y * y / 2.0).exp()
                }
                ScenarioTag::TwoStream2 => {
                    norm * (1.0 + a * (k * x).cos()) * y * y * (-y * y / 2.0).exp()
                }
                ScenarioTag::KelvinHelmholtz => y.sin() + a * (k * x).cos(),
                ScenarioTag::EulerAccuracy => -2.0 * x.sin() * y.sin(),
                ScenarioTag::ShearFlow => {
                    let sech2 = |s: f64| 1.0 / s.cosh().powi(2);
                    if y <= PI {
                        delta * x.cos() - sech2((y - PI / 2.0) / rho) / rho
                    } else {
                        delta * x.cos() + sech2((1.5 * PI - y) / rho) / rho
                    }
                }
                ScenarioTag::VortexPatch => {
                    let in_x = (PI / 2.0..=1.5 * PI).contains(&x);
                    if in_x && (PI / 4.0..=0.75 * PI).contains(&y) {
                        -1.0
                    } else if in_x && (1.25 * PI..=1.75 * PI).contains(&y) {
                        1.0
                    } else {
                        0.0
                    }
                }
            }
        };
        ScalarField::from_fn(grid, |x, y| T::lit(value(x.as_f64(), y.as_f64())))
    }

    /// Exact solution at time `t`, where one is known.
    pub fn exact<T: Real>(&self, grid: PhaseGrid<T>, _t: f64) -> Option<ScalarField<T>> {
        match self.tag {
            // An eigenfunction of the Laplacian: the flow is steady.
            ScenarioTag::EulerAccuracy => Some(self.initial(grid)),
            _ => None,
        }
    }
}
