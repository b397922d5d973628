//! Conservative semi-Lagrangian update of a single line.

use crate::error::{Error, Result};
use crate::mesh::Boundary;
use crate::real::Real;
use crate::reconstruct::{
    decompose_shift, flux_difference, CompactFlux, FootIntegrator, FootPoint, ReconKind, Wind,
};

/// Advection speed along a line, frozen for the duration of one sweep.
#[derive(Clone, Copy, Debug)]
pub enum Speed<'a, T> {
    Constant(T),
    Variable(&'a [T]),
}

#[derive(Clone, Copy, Debug)]
pub struct AdvectionProblem<'a, T> {
    pub speed: Speed<'a, T>,
    pub dt: T,
    pub spacing: T,
    pub kind: ReconKind,
    pub boundary: Boundary,
}

impl<'a, T: Real> AdvectionProblem<'a, T> {
    pub fn constant(speed: T, dt: T, spacing: T, kind: ReconKind) -> Self {
        Self {
            speed: Speed::Constant(speed),
            dt,
            spacing,
            kind,
            boundary: Boundary::Periodic,
        }
    }

    pub fn variable(speed: &'a [T], dt: T, spacing: T, kind: ReconKind) -> Self {
        Self {
            speed: Speed::Variable(speed),
            dt,
            spacing,
            kind,
            boundary: Boundary::Periodic,
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.spacing > T::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "advection needs spacing > 0 and finite dt, got {} and {}",
                self.spacing, self.dt
            )));
        }
        if n < self.kind.width() {
            return Err(Error::InvalidGrid(format!(
                "line of length {n} is shorter than the {} stencil",
                self.kind
            )));
        }
        if let Speed::Variable(a) = self.speed {
            if a.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "speed has {} entries for a line of {n}",
                    a.len()
                )));
            }
            if self.boundary != Boundary::Periodic {
                return Err(Error::Unsupported(
                    "variable-speed sweeps need a periodic line".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Reusable buffers for repeated sweeps.
#[derive(Clone, Debug, Default)]
pub struct SweepScratch<T> {
    flux: Vec<T>,
    g: Vec<T>,
    feet: Vec<FootPoint<T>>,
    integrals: Vec<T>,
    pad: Vec<T>,
    integrators: Vec<(ReconKind, FootIntegrator<T>)>,
}

impl<T: Real> SweepScratch<T> {
    pub fn new() -> Self {
        Self {
            flux: Vec::new(),
            g: Vec::new(),
            feet: Vec::new(),
            integrals: Vec::new(),
            pad: Vec::new(),
            integrators: Vec::new(),
        }
    }

    fn integrator(&mut self, kind: ReconKind) -> FootIntegrator<T> {
        let kind = kind.linear_part();
        if let Some((_, fi)) = self.integrators.iter().find(|(k, _)| *k == kind) {
            return fi.clone();
        }
        let fi = FootIntegrator::new(kind);
        self.integrators.push((kind, fi.clone()));
        fi
    }
}

/// One update `f_i - (F̂_{i+1/2} - F̂_{i-1/2}) / Δx` of `line`.
pub fn sl_step<T: Real>(line: &[T], problem: &AdvectionProblem<'_, T>) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); line.len()];
    sl_step_into(line, problem, &mut SweepScratch::new(), &mut out)?;
    Ok(out)
}

pub fn sl_step_into<T: Real>(
    line: &[T],
    problem: &AdvectionProblem<'_, T>,
    scratch: &mut SweepScratch<T>,
    out: &mut [T],
) -> Result<()> {
    let n = line.len();
    problem.validate(n)?;
    if out.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "output has length {}, expected {n}",
            out.len()
        )));
    }
    match problem.speed {
        Speed::Constant(a) => {
            let foot = decompose_shift(a * problem.dt, problem.spacing);
            match problem.boundary {
                Boundary::Periodic => shift_periodic(line, foot, problem.kind, scratch, out),
                Boundary::ZeroWall => shift_wall(line, foot, problem.kind, scratch, out),
            }
            Ok(())
        }
        Speed::Variable(a) => variable_step(line, a, problem, scratch, out),
    }
}

#[inline]
fn window<T: Real>(get: impl Fn(i64) -> T, j: i64) -> [T; 5] {
    [get(j - 2), get(j - 1), get(j), get(j + 1), get(j + 2)]
}

fn shift_periodic<T: Real>(
    line: &[T],
    foot: FootPoint<T>,
    kind: ReconKind,
    scratch: &mut SweepScratch<T>,
    out: &mut [T],
) {
    let n = line.len();
    let s = foot.shift.rem_euclid(n as i64) as usize;
    if foot.fraction == T::zero() {
        for (i, o) in out.iter_mut().enumerate() {
            *o = line[(i + n - s) % n];
        }
        return;
    }
    let cf = CompactFlux::new(kind, foot.fraction);
    let get = |j: i64| line[j.rem_euclid(n as i64) as usize];
    let flux = &mut scratch.flux;
    flux.clear();
    flux.extend((0..n as i64).map(|j| cf.eval(&window(get, j))));
    let g = &mut scratch.g;
    g.clear();
    g.extend((0..n).map(|j| line[j] - (flux[j] - flux[(j + n - 1) % n])));
    for (i, o) in out.iter_mut().enumerate() {
        *o = g[(i + n - s) % n];
    }
}

fn shift_wall<T: Real>(
    line: &[T],
    foot: FootPoint<T>,
    kind: ReconKind,
    scratch: &mut SweepScratch<T>,
    out: &mut [T],
) {
    let n = line.len() as i64;
    let get = |j: i64| {
        if (0..n).contains(&j) {
            line[j as usize]
        } else {
            T::zero()
        }
    };
    // Reconstruction fluxes G_j for j in -3..n+3; zero further out.
    const H: i64 = 3;
    let cf = (foot.fraction != T::zero()).then(|| CompactFlux::new(kind, foot.fraction));
    let flux = &mut scratch.flux;
    flux.clear();
    flux.extend((-H..n + H).map(|j| cf.as_ref().map_or(T::zero(), |c| c.eval(&window(get, j)))));
    let g_flux = |j: i64| {
        if (-H..n + H).contains(&j) {
            flux[(j + H) as usize]
        } else {
            T::zero()
        }
    };
    let s = foot.shift;
    for (i, o) in out.iter_mut().enumerate() {
        let j = i as i64 - s;
        *o = get(j) - (g_flux(j) - g_flux(j - 1));
    }
    // Open-line flux through x_{i+1/2}: whole cells plus the sub-cell part.
    let open_flux = |i: i64| {
        let mut w = T::zero();
        if s > 0 {
            for c in (i - s + 1)..=i {
                w = w + get(c);
            }
        } else {
            for c in (i + 1)..=(i - s) {
                w = w - get(c);
            }
        }
        w + g_flux(i - s)
    };
    // Closing both ends returns what the open line let through.
    out[0] = out[0] - open_flux(-1);
    let last = (n - 1) as usize;
    out[last] = out[last] + open_flux(n - 1);
}

fn variable_step<T: Real>(
    line: &[T],
    a: &[T],
    problem: &AdvectionProblem<'_, T>,
    scratch: &mut SweepScratch<T>,
    out: &mut [T],
) -> Result<()> {
    let n = line.len();
    let mut feet = std::mem::take(&mut scratch.feet);
    trace_variable(a, problem.dt, problem.spacing, &mut feet)?;
    let integrator = scratch.integrator(problem.kind);
    scratch.integrals.resize(n, T::zero());
    integrator.integrate(line, &feet, problem.spacing, &mut scratch.integrals)?;
    scratch.feet = feet;
    let wind = |i: usize| Wind::of(a[i] + a[(i + 1) % n]);
    flux_difference(
        &scratch.integrals,
        wind,
        Boundary::Periodic,
        problem.kind,
        &mut scratch.pad,
        out,
    )?;
    for (o, &f) in out.iter_mut().zip(line) {
        *o = f - *o / problem.spacing;
    }
    Ok(())
}

/// Feet of the characteristics through every node, `node_coords` being the
/// uniform coordinates of the line.
pub fn trace_feet<T: Real>(
    problem: &AdvectionProblem<'_, T>,
    node_coords: &[T],
) -> Result<Vec<FootPoint<T>>> {
    let n = node_coords.len();
    problem.validate(n)?;
    match problem.speed {
        Speed::Constant(a) => Ok(vec![decompose_shift(a * problem.dt, problem.spacing); n]),
        Speed::Variable(a) => {
            let mut feet = Vec::new();
            trace_variable(a, problem.dt, problem.spacing, &mut feet)?;
            Ok(feet)
        }
    }
}

/// Periodic six-point Lagrange interpolation of nodal `a` at fractional index `x`.
#[inline]
fn interp_speed<T: Real>(a: &[T], x: T) -> T {
    let n = a.len() as i64;
    let base = x.floor();
    let t = x - base;
    let b = base.to_i64().unwrap_or(0);
    if t == T::zero() {
        return a[b.rem_euclid(n) as usize];
    }
    // Nodes at offsets -2..=3 around `base`.
    let d: [T; 6] = std::array::from_fn(|k| t - T::lit(k as f64 - 2.0));
    let den = [-120.0, 24.0, -12.0, 12.0, -24.0, 120.0];
    let mut s = T::zero();
    for k in 0..6 {
        let mut num = T::one();
        for (m, dm) in d.iter().enumerate() {
            if m != k {
                num = num * *dm;
            }
        }
        s = s + num / T::lit(den[k]) * a[(b + k as i64 - 2).rem_euclid(n) as usize];
    }
    s
}

/// Backward RK4 trace of `dx/dτ = a(x)` over `dt` in index units.
fn trace_variable<T: Real>(a: &[T], dt: T, spacing: T, feet: &mut Vec<FootPoint<T>>) -> Result<()> {
    let n = a.len();
    feet.clear();
    let h = -dt / spacing;
    let half = T::lit(0.5);
    let sixth = T::lit(1.0 / 6.0);
    let two = T::lit(2.0);
    let mut prev_pos = T::zero();
    let mut first_pos = T::zero();
    for i in 0..n {
        let x0 = T::from_usize_lossy(i);
        let k1 = a[i];
        let k2 = interp_speed(a, x0 + half * h * k1);
        let k3 = interp_speed(a, x0 + half * h * k2);
        let k4 = interp_speed(a, x0 + h * k3);
        let step = h * sixth * (k1 + two * k2 + two * k3 + k4);
        if !step.is_finite() {
            return Err(Error::NonFinite { time: dt.as_f64() });
        }
        let pos = x0 + step;
        if i > 0 && !(pos > prev_pos) {
            return Err(Error::CharacteristicsCrossed { node: i });
        }
        if i == 0 {
            first_pos = pos;
        }
        prev_pos = pos;
        feet.push(decompose_shift(-step, T::one()));
    }
    if !(first_pos + T::from_usize_lossy(n) > prev_pos) {
        return Err(Error::CharacteristicsCrossed { node: 0 });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn sine(n: usize) -> (Vec<f64>, f64) {
        let dx = 2.0 * PI / n as f64;
        ((0..n).map(|i| (i as f64 * dx).sin()).collect(), dx)
    }

    #[test]
    fn unit_cfl_is_a_shift() {
        let (f, dx) = sine(32);
        for kind in ReconKind::ALL {
            for b in [Boundary::Periodic, Boundary::ZeroWall] {
                let p = AdvectionProblem::constant(1.0, dx, dx, kind).with_boundary(b);
                let out = sl_step(&f, &p).unwrap();
                // A wall keeps what reaches it in the last cell.
                for i in 1..31 {
                    assert_eq!(out[i], f[i - 1]);
                }
                if b == Boundary::Periodic {
                    assert_eq!(out[0], f[31]);
                }
            }
        }
    }

    #[test]
    fn half_cfl_matches_four_point_stencil() {
        let (f, dx) = sine(40);
        let p = AdvectionProblem::constant(1.0, 0.5 * dx, dx, ReconKind::Linear3);
        let out = sl_step(&f, &p).unwrap();
        let c = [-0.0625, 0.5625, 0.5625, -0.0625];
        let n = f.len();
        for j in 0..n {
            let expect: f64 = (0..4).map(|k| c[k] * f[(j + n + k - 2) % n]).sum();
            assert_abs_diff_eq!(out[j], expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_speed_is_identity() {
        let (f, dx) = sine(16);
        let a = vec![0.0; 16];
        for kind in ReconKind::ALL {
            assert_eq!(
                sl_step(&f, &AdvectionProblem::constant(0.0, 0.3, dx, kind)).unwrap(),
                f
            );
            assert_eq!(
                sl_step(&f, &AdvectionProblem::variable(&a, 0.3, dx, kind)).unwrap(),
                f
            );
        }
        let coords: Vec<f64> = (0..16).map(|i| i as f64 * dx).collect();
        let feet = trace_feet(
            &AdvectionProblem::variable(&a, 0.3, dx, ReconKind::Linear3),
            &coords,
        )
        .unwrap();
        assert!(feet.iter().all(|ft| ft.cells() == 0.0));
        let feet = trace_feet(
            &AdvectionProblem::constant(2.0, 0.3, dx, ReconKind::Linear3),
            &coords,
        )
        .unwrap();
        assert!(feet.iter().all(|ft| (ft.cells() * dx - 0.6).abs() < 1e-14));
    }

    #[test]
    fn linear_speed_trace_is_fourth_order() {
        // a(x) = x; interior nodes only.
        let n = 64;
        let dx = 0.05;
        let coords: Vec<f64> = (0..n).map(|i| i as f64 * dx).collect();
        let a = coords.clone();
        let err = |dt: f64| {
            let p = AdvectionProblem::variable(&a, dt, dx, ReconKind::Linear3);
            let feet = trace_feet(&p, &coords).unwrap();
            (10..n - 10)
                .map(|i| {
                    let foot = coords[i] - feet[i].cells() * dx;
                    (foot - coords[i] * (-dt).exp()).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.2), err(0.1));
        // One RK4 step has local error O(dt^5).
        assert!((e1 / e2).log2() > 4.5, "{e1} {e2}");
        assert!(e1 < 2e-5);
    }

    #[test]
    fn constant_line_stays_constant() {
        let f = vec![0.4; 24];
        let a = vec![-0.9; 24];
        for kind in ReconKind::ALL {
            for out in [
                sl_step(&f, &AdvectionProblem::constant(1.3, 0.77, 0.25, kind)).unwrap(),
                sl_step(&f, &AdvectionProblem::variable(&a, 0.2, 0.25, kind)).unwrap(),
            ] {
                for v in out {
                    assert_abs_diff_eq!(v, 0.4, epsilon = 1e-14);
                }
            }
        }
    }

    fn translate_error(n: usize, kind: ReconKind) -> f64 {
        let (f, dx) = sine(n);
        let lambda = 0.37;
        let steps = 10;
        let mut u = f;
        let p = AdvectionProblem::constant(1.0, lambda * dx, dx, kind);
        for _ in 0..steps {
            u = sl_step(&u, &p).unwrap();
        }
        let shift = steps as f64 * lambda * dx;
        u.iter()
            .enumerate()
            .map(|(i, v)| {
                // Nodal values carry sliding averages of the transported profile.
                let x = i as f64 * dx - shift;
                (v - x.sin()).abs() * dx
            })
            .sum()
    }

    #[test]
    fn constant_speed_spatial_orders() {
        for (kind, order) in [
            (ReconKind::Linear3, 3.0),
            (ReconKind::Linear5, 5.0),
            (ReconKind::Weno5, 5.0),
        ] {
            let e1 = translate_error(32, kind);
            let e2 = translate_error(64, kind);
            let slope = (e1 / e2).log2();
            assert!(slope > order - 0.3, "{kind}: slope {slope}");
        }
    }

    #[test]
    fn polynomial_exactness_interior() {
        let n = 40;
        let dx = 0.1;
        let p = |x: f64| 1.0 - x + 0.5 * x * x - 0.1 * x.powi(3);
        let f: Vec<f64> = (0..n).map(|i| p(i as f64 * dx)).collect();
        let prob = AdvectionProblem::constant(1.0, 0.6 * dx, dx, ReconKind::Linear3);
        let out = sl_step(&f, &prob).unwrap();
        for i in 5..n - 5 {
            assert_abs_diff_eq!(out[i], p((i as f64 - 0.6) * dx), epsilon = 1e-13);
        }
    }

    fn variable_solution(n: usize, dt_over_dx: f64) -> Vec<f64> {
        let dx = 2.0 * PI / n as f64;
        let a: Vec<f64> = (0..n).map(|i| (i as f64 * dx).sin()).collect();
        let mut u: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (i as f64 * dx).cos()).collect();
        let dt = dt_over_dx * dx;
        // Final time dt_over_dx * pi for every n.
        let steps = n / 2;
        let mut scratch = SweepScratch::new();
        let mut out = vec![0.0; n];
        for _ in 0..steps {
            let p = AdvectionProblem::variable(&a, dt, dx, ReconKind::Linear3);
            sl_step_into(&u, &p, &mut scratch, &mut out).unwrap();
            std::mem::swap(&mut u, &mut out);
        }
        u
    }

    #[test]
    fn variable_speed_self_convergence() {
        let lam = 0.05;
        let u1 = variable_solution(128, lam);
        let u2 = variable_solution(256, lam);
        let u3 = variable_solution(512, lam);
        // Coarse-grid samples of finer solutions.
        let e12: f64 = (0..128).map(|i| (u1[i] - u2[2 * i]).abs()).sum::<f64>() / 128.0;
        let e23: f64 = (0..256).map(|i| (u2[i] - u3[2 * i]).abs()).sum::<f64>() / 256.0;
        let slope = (e12 / e23).log2();
        // The estimate approaches 3 from below (2.93, 2.98, 2.997 on successive triples).
        assert!(slope >= 2.95, "slope {slope}");
    }

    #[test]
    fn crossing_characteristics_detected() {
        let n = 32;
        let dx = 2.0 * PI / n as f64;
        let a: Vec<f64> = (0..n).map(|i| 3.0 * (i as f64 * dx).sin()).collect();
        let p = AdvectionProblem::variable(&a, 2.0, dx, ReconKind::Linear3);
        let f = vec![1.0; n];
        assert!(matches!(
            sl_step(&f, &p),
            Err(Error::CharacteristicsCrossed { .. })
        ));
    }

    #[test]
    fn variable_speed_rejects_walls() {
        let a = vec![1.0; 8];
        let p = AdvectionProblem::variable(&a, 0.1, 0.1, ReconKind::Linear3)
            .with_boundary(Boundary::ZeroWall);
        assert!(sl_step(&[0.0; 8], &p).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn kind_strategy() -> impl Strategy<Value = ReconKind> {
            prop_oneof![
                Just(ReconKind::Linear3),
                Just(ReconKind::Linear5),
                Just(ReconKind::Weno5)
            ]
        }

        proptest! {
            #[test]
            fn constant_speed_conserves_mass(
                f in prop::collection::vec(-2.0f64..2.0, 8..48),
                lam in -7.0f64..7.0,
                kind in kind_strategy(),
                wall in any::<bool>(),
            ) {
                let b = if wall { Boundary::ZeroWall } else { Boundary::Periodic };
                let out = sl_step(&f, &AdvectionProblem::constant(1.0, lam, 1.0, kind).with_boundary(b)).unwrap();
                let (m0, m1): (f64, f64) = (f.iter().sum(), out.iter().sum());
                prop_assert!((m0 - m1).abs() < 1e-12 * f.len() as f64);
            }

            #[test]
            fn variable_speed_conserves_mass(
                f in prop::collection::vec(0.0f64..2.0, 16..40),
                amp in -1.0f64..1.0,
                dt in 0.0f64..0.5,
                kind in kind_strategy(),
            ) {
                let n = f.len();
                let dx = 2.0 * PI / n as f64;
                let a: Vec<f64> = (0..n).map(|i| 0.3 + amp * (i as f64 * dx).sin()).collect();
                let out = sl_step(&f, &AdvectionProblem::variable(&a, dt, dx, kind)).unwrap();
                let (m0, m1): (f64, f64) = (f.iter().sum(), out.iter().sum());
                prop_assert!((m0 - m1).abs() < 1e-12 * n as f64);
            }

            #[test]
            fn shift_by_length_is_identity(f in prop::collection::vec(-1.0f64..1.0, 5..20)) {
                let n = f.len();
                let out = sl_step(&f, &AdvectionProblem::constant(1.0, n as f64, 1.0, ReconKind::Weno5)).unwrap();
                prop_assert_eq!(out, f);
            }
        }
    }
}
