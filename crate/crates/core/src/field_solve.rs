//! Spectral Poisson solvers on periodic domains.
//!
//! Both solvers drop the zero Fourier mode (periodic gauge) and zero the
//! Nyquist mode of every derivative.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::mesh::{PhaseGrid, ScalarField};
use crate::real::{pairwise_sum, Real};

/// Electric field on the x-line of a VP run.
#[derive(Clone, Debug, PartialEq)]
pub struct Field1D<T> {
    pub e: Vec<T>,
    pub phi: Vec<T>,
    /// Mean of the source that was subtracted before the solve.
    pub mean_rho: T,
}

impl<T: Real> Field1D<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            e: vec![T::zero(); n],
            phi: vec![T::zero(); n],
            mean_rho: T::zero(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.e.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Signed angular wavenumber of FFT bin `m` on `n` points, with the Nyquist
/// bin mapped to zero.
fn wavenumber<T: Real>(m: usize, n: usize, length: T) -> T {
    let two_pi = T::lit(2.0) * T::PI();
    if 2 * m == n {
        T::zero()
    } else if 2 * m < n {
        two_pi * T::from_usize_lossy(m) / length
    } else {
        -two_pi * T::from_usize_lossy(n - m) / length
    }
}

/// Solver for `E' = ρ - ρ̄`, `E = -φ'` on a periodic line.
#[derive(Clone)]
pub struct Poisson1D<T: Real> {
    n: usize,
    length: T,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for Poisson1D<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Poisson1D")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl<T: Real> Poisson1D<T> {
    pub fn new(n: usize, length: T) -> Result<Self> {
        if n < 2 || !(length > T::zero()) {
            return Err(Error::InvalidGrid(format!(
                "Poisson line needs n >= 2 and positive length, got {n} and {length}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            length,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn solve(&self, rho: &[T]) -> Result<Field1D<T>> {
        let n = self.n;
        if rho.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "density has {} values, solver expects {n}",
                rho.len()
            )));
        }
        let mean = pairwise_sum(rho) / T::from_usize_lossy(n);
        let mut buf: Vec<Complex<T>> = rho
            .iter()
            .map(|&r| Complex::new(r - mean, T::zero()))
            .collect();
        self.forward.process(&mut buf);
        let mut phi_hat = buf.clone();
        for m in 0..n {
            let k = wavenumber(m, n, self.length);
            if k == T::zero() {
                buf[m] = Complex::new(T::zero(), T::zero());
                phi_hat[m] = buf[m];
            } else {
                // E_hat = rho_hat / (i k), phi_hat = rho_hat / k^2.
                let r = buf[m];
                buf[m] = Complex::new(r.im / k, -r.re / k);
                phi_hat[m] = r / (k * k);
            }
        }
        self.inverse.process(&mut buf);
        self.inverse.process(&mut phi_hat);
        let scale = T::one() / T::from_usize_lossy(n);
        Ok(Field1D {
            e: buf.iter().map(|c| c.re * scale).collect(),
            phi: phi_hat.iter().map(|c| c.re * scale).collect(),
            mean_rho: mean,
        })
    }
}

/// Potential and field of `ΔΦ = ρ - ρ̄`, `E = -∇Φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D<T> {
    pub phi: ScalarField<T>,
    pub e1: ScalarField<T>,
    pub e2: ScalarField<T>,
    pub mean_rho: T,
}

impl<T: Real> Field2D<T> {
    pub fn zeros(grid: PhaseGrid<T>) -> Self {
        Self {
            phi: ScalarField::zeros(grid),
            e1: ScalarField::zeros(grid),
            e2: ScalarField::zeros(grid),
            mean_rho: T::zero(),
        }
    }

    /// `E⊥ = (-E2, E1)`.
    pub fn perp(&self) -> (ScalarField<T>, ScalarField<T>) {
        (self.e2.map(|v| -v), self.e1.clone())
    }

    /// Componentwise sum, the field of the summed sources.
    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            phi: self.phi.add(&other.phi)?,
            e1: self.e1.add(&other.e1)?,
            e2: self.e2.add(&other.e2)?,
            mean_rho: self.mean_rho + other.mean_rho,
        })
    }
}

#[derive(Clone)]
pub struct Poisson2D<T: Real> {
    grid: PhaseGrid<T>,
    fwd1: Arc<dyn Fft<T>>,
    inv1: Arc<dyn Fft<T>>,
    fwd2: Arc<dyn Fft<T>>,
    inv2: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for Poisson2D<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Poisson2D")
            .field("grid", &self.grid)
            .finish()
    }
}

fn transpose_c<T: Copy + Default>(src: &[T], rows: usize, cols: usize, dst: &mut Vec<T>) {
    dst.clear();
    dst.resize(src.len(), T::default());
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

impl<T: Real> Poisson2D<T> {
    pub fn new(grid: PhaseGrid<T>) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            fwd1: planner.plan_fft_forward(grid.n1),
            inv1: planner.plan_fft_inverse(grid.n1),
            fwd2: planner.plan_fft_forward(grid.n2),
            inv2: planner.plan_fft_inverse(grid.n2),
        }
    }

    pub fn grid(&self) -> &PhaseGrid<T> {
        &self.grid
    }

    /// 2-D transform of row-major data; rows run along axis 2.
    fn transform(&self, data: &mut Vec<Complex<T>>, inverse: bool) {
        let (n1, n2) = (self.grid.n1, self.grid.n2);
        let (f1, f2) = if inverse {
            (&self.inv1, &self.inv2)
        } else {
            (&self.fwd1, &self.fwd2)
        };
        f2.process(data);
        let mut t = Vec::new();
        transpose_c(data, n1, n2, &mut t);
        f1.process(&mut t);
        transpose_c(&t, n2, n1, data);
    }

    pub fn solve(&self, rho: &ScalarField<T>) -> Result<Field2D<T>> {
        let g = self.grid;
        if rho.grid().n1 != g.n1 || rho.grid().n2 != g.n2 {
            return Err(Error::ShapeMismatch(format!(
                "density is {}x{}, solver expects {}x{}",
                rho.grid().n1,
                rho.grid().n2,
                g.n1,
                g.n2
            )));
        }
        let (n1, n2) = (g.n1, g.n2);
        let mean = rho.sum() / T::from_usize_lossy(n1 * n2);
        let zero = Complex::new(T::zero(), T::zero());
        let mut hat: Vec<Complex<T>> = rho
            .values()
            .iter()
            .map(|&r| Complex::new(r - mean, T::zero()))
            .collect();
        self.transform(&mut hat, false);
        let l1 = g.extent(crate::mesh::Axis::First);
        let l2 = g.extent(crate::mesh::Axis::Second);
        let two_pi = T::lit(2.0) * T::PI();
        let full_k = |m: usize, n: usize, l: T| {
            let m = if 2 * m <= n {
                m as f64
            } else {
                m as f64 - n as f64
            };
            two_pi * T::lit(m) / l
        };
        let mut e1 = vec![zero; n1 * n2];
        let mut e2 = vec![zero; n1 * n2];
        for a in 0..n1 {
            let k1 = full_k(a, n1, l1);
            let d1 = wavenumber(a, n1, l1);
            for b in 0..n2 {
                let k2 = full_k(b, n2, l2);
                let d2 = wavenumber(b, n2, l2);
                let idx = a * n2 + b;
                let kk = k1 * k1 + k2 * k2;
                if kk == T::zero() {
                    hat[idx] = zero;
                    continue;
                }
                let phi = -hat[idx] / kk;
                hat[idx] = phi;
                // E = -grad(phi): E_hat = -i k phi_hat.
                e1[idx] = Complex::new(d1 * phi.im, -d1 * phi.re);
                e2[idx] = Complex::new(d2 * phi.im, -d2 * phi.re);
            }
        }
        self.transform(&mut hat, true);
        self.transform(&mut e1, true);
        self.transform(&mut e2, true);
        let scale = T::one() / T::from_usize_lossy(n1 * n2);
        let real = |v: Vec<Complex<T>>| {
            ScalarField::from_values(g, v.iter().map(|c| c.re * scale).collect())
        };
        Ok(Field2D {
            phi: real(hat)?,
            e1: real(e1)?,
            e2: real(e2)?,
            mean_rho: mean,
        })
    }

    /// Spectral divergence `∂1(-E2) + ∂2(E1)` of the drift, largest modulus
    /// over all modes, normalised by the transform size.
    pub fn perp_divergence(&self, field: &Field2D<T>) -> T {
        let g = self.grid;
        let (n1, n2) = (g.n1, g.n2);
        let to_hat = |f: &ScalarField<T>| {
            let mut v: Vec<Complex<T>> = f
                .values()
                .iter()
                .map(|&x| Complex::new(x, T::zero()))
                .collect();
            self.transform(&mut v, false);
            v
        };
        let h1 = to_hat(&field.e1);
        let h2 = to_hat(&field.e2);
        let l1 = g.extent(crate::mesh::Axis::First);
        let l2 = g.extent(crate::mesh::Axis::Second);
        let scale = T::one() / T::from_usize_lossy(n1 * n2);
        let mut worst = T::zero();
        for a in 0..n1 {
            let d1 = wavenumber(a, n1, l1);
            for b in 0..n2 {
                let d2 = wavenumber(b, n2, l2);
                let idx = a * n2 + b;
                let i = Complex::new(T::zero(), T::one());
                let div = i * (-h2[idx] * d1 + h1[idx] * d2);
                worst = worst.max(div.norm() * scale);
            }
        }
        worst
    }
}
