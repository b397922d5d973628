//! Reconstruction procedures for the conservative semi-Lagrangian update.
//!
//! Two building blocks are provided. `r1_foot_integral` integrates nodal data
//! over each characteristic foot interval, and `r2_interface_from_averages`
//! recovers interface point values from sliding averages. For constant speed
//! the composition collapses to a compact flux computed cell-by-cell from the
//! foot-cell neighbourhood, see [`CompactFlux`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::Boundary;
use crate::real::Real;

/// Regularization of the WENO smoothness indicators.
pub const WENO_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum ReconKind {
    Linear3,
    Linear5,
    #[default]
    Weno5,
}

impl ReconKind {
    pub const ALL: [ReconKind; 3] = [ReconKind::Linear3, ReconKind::Linear5, ReconKind::Weno5];

    pub fn width(self) -> usize {
        match self {
            ReconKind::Linear3 => 3,
            ReconKind::Linear5 | ReconKind::Weno5 => 5,
        }
    }

    /// Number of neighbours read on each side of a stencil centre.
    pub fn halo(self) -> usize {
        self.width() / 2 + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            ReconKind::Linear3 => "linear3",
            ReconKind::Linear5 => "linear5",
            ReconKind::Weno5 => "weno5",
        }
    }

    /// Linear kind used where a nonlinear reconstruction has no meaning.
    pub fn linear_part(self) -> ReconKind {
        match self {
            ReconKind::Weno5 => ReconKind::Linear5,
            k => k,
        }
    }
}

impl fmt::Display for ReconKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReconKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear3" | "sl3" => Ok(ReconKind::Linear3),
            "linear5" | "sl5" => Ok(ReconKind::Linear5),
            "weno5" => Ok(ReconKind::Weno5),
            other => Err(Error::InvalidConfig(format!(
                "unknown reconstruction {other:?}; expected linear3, linear5 or weno5"
            ))),
        }
    }
}

/// Upwind direction of an interface reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wind {
    Positive,
    Negative,
}

impl Wind {
    /// Zero speed counts as positive.
    pub fn of<T: Real>(speed: T) -> Self {
        if speed < T::zero() {
            Wind::Negative
        } else {
            Wind::Positive
        }
    }
}

/// A departure distance split into whole cells and a remainder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FootPoint<T> {
    pub shift: i64,
    pub fraction: T,
}

impl<T: Real> FootPoint<T> {
    pub fn zero() -> Self {
        Self {
            shift: 0,
            fraction: T::zero(),
        }
    }

    /// Displacement in units of the spacing.
    pub fn cells(&self) -> T {
        T::lit(self.shift as f64) + self.fraction
    }
}

/// Splits `displacement` into `floor(displacement / spacing)` cells and a
/// fraction in `[0, 1)`.
pub fn decompose_shift<T: Real>(displacement: T, spacing: T) -> FootPoint<T> {
    let q = displacement / spacing;
    let s = q.floor();
    let mut fraction = q - s;
    let mut shift = s.to_i64().unwrap_or(0);
    if fraction >= T::one() {
        shift += 1;
        fraction = T::zero();
    }
    FootPoint { shift, fraction }
}

#[inline]
fn wrap(i: i64, n: usize) -> usize {
    i.rem_euclid(n as i64) as usize
}

/// Copies `src` into `dst` with `halo` ghost entries on each side.
pub fn pad_line<T: Real>(src: &[T], halo: usize, boundary: Boundary, dst: &mut Vec<T>) {
    let n = src.len();
    dst.clear();
    dst.reserve(n + 2 * halo);
    for k in 0..halo {
        let i = k as i64 - halo as i64;
        dst.push(match boundary {
            Boundary::Periodic => src[wrap(i, n)],
            Boundary::ZeroWall => T::zero(),
        });
    }
    dst.extend_from_slice(src);
    for k in 0..halo {
        dst.push(match boundary {
            Boundary::Periodic => src[wrap((n + k) as i64, n)],
            Boundary::ZeroWall => T::zero(),
        });
    }
}

// ---------------------------------------------------------------------------
// WENO weights

/// Jiang–Shu smoothness indicators of the three sub-stencils of `w`.
#[inline]
pub fn smoothness<T: Real>(w: &[T; 5]) -> [T; 3] {
    let [a, b, c, d, e] = *w;
    let c13 = T::lit(13.0 / 12.0);
    let q = T::lit(0.25);
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    let s0 = a - two * b + c;
    let t0 = a - four * b + three * c;
    let s1 = b - two * c + d;
    let t1 = b - d;
    let s2 = c - two * d + e;
    let t2 = three * c - four * d + e;
    [
        c13 * s0 * s0 + q * t0 * t0,
        c13 * s1 * s1 + q * t1 * t1,
        c13 * s2 * s2 + q * t2 * t2,
    ]
}

/// Nonlinear weights for linear weights `gamma`.
#[inline]
pub fn weno5_weights_with<T: Real>(w: &[T; 5], gamma: [T; 3]) -> [T; 3] {
    let beta = smoothness(w);
    let eps = T::lit(WENO_EPS);
    let mut alpha = [T::zero(); 3];
    for r in 0..3 {
        let den = eps + beta[r];
        alpha[r] = gamma[r] / (den * den);
    }
    let total = alpha[0] + alpha[1] + alpha[2];
    [alpha[0] / total, alpha[1] / total, alpha[2] / total]
}

/// Nonlinear weights for the interface reconstruction with optimal weights
/// `(1/10, 6/10, 3/10)`.
pub fn weno5_weights<T: Real>(w: &[T; 5]) -> [T; 3] {
    weno5_weights_with(w, optimal_weights())
}

pub fn optimal_weights<T: Real>() -> [T; 3] {
    [T::lit(0.1), T::lit(0.6), T::lit(0.3)]
}

// ---------------------------------------------------------------------------
// R2: interface values from sliding averages

/// Interface value at `i + 1/2` from a window `u[i-2..=i+2]` (positive wind)
/// or the mirrored window `u[i+3..=i-1]` (negative wind).
#[inline]
fn interface5<T: Real>(w: &[T; 5], kind: ReconKind) -> T {
    let [a, b, c, d, e] = *w;
    let six = T::lit(6.0);
    match kind {
        ReconKind::Linear3 => (-b + T::lit(5.0) * c + T::lit(2.0) * d) / six,
        ReconKind::Linear5 => {
            (T::lit(2.0) * a - T::lit(13.0) * b + T::lit(47.0) * c + T::lit(27.0) * d
                - T::lit(3.0) * e)
                / T::lit(60.0)
        }
        ReconKind::Weno5 => {
            let q0 = (T::lit(2.0) * a - T::lit(7.0) * b + T::lit(11.0) * c) / six;
            let q1 = (-b + T::lit(5.0) * c + T::lit(2.0) * d) / six;
            let q2 = (T::lit(2.0) * c + T::lit(5.0) * d - e) / six;
            let om = weno5_weights(w);
            om[0] * q0 + om[1] * q1 + om[2] * q2
        }
    }
}

/// Interface value `Ĥ_{i+1/2}` from a padded line (`halo >= 3`); `pi` is the
/// index of node `i` inside `padded`.
#[inline]
pub fn interface_value<T: Real>(padded: &[T], pi: usize, wind: Wind, kind: ReconKind) -> T {
    let w = match wind {
        Wind::Positive => [
            padded[pi - 2],
            padded[pi - 1],
            padded[pi],
            padded[pi + 1],
            padded[pi + 2],
        ],
        Wind::Negative => [
            padded[pi + 3],
            padded[pi + 2],
            padded[pi + 1],
            padded[pi],
            padded[pi - 1],
        ],
    };
    interface5(&w, kind)
}

const R2_HALO: usize = 3;

fn check_len(n: usize, kind: ReconKind) -> Result<()> {
    if n < kind.width() {
        return Err(Error::InvalidGrid(format!(
            "line of length {n} is shorter than the {} stencil",
            kind
        )));
    }
    Ok(())
}

/// Interface values `Ĥ_{i+1/2}`, `i = 0..n`, on a periodic line of sliding
/// averages with one wind direction.
pub fn r2_interface_from_averages<T: Real>(
    averages: &[T],
    wind: Wind,
    kind: ReconKind,
) -> Result<Vec<T>> {
    check_len(averages.len(), kind)?;
    let mut padded = Vec::new();
    pad_line(averages, R2_HALO, Boundary::Periodic, &mut padded);
    Ok((0..averages.len())
        .map(|i| interface_value(&padded, i + R2_HALO, wind, kind))
        .collect())
}

/// Writes `out_i = Ĥ_{i+1/2} - Ĥ_{i-1/2}` where `Ĥ` is reconstructed from `u`
/// and `wind(i)` gives the direction at interface `i + 1/2`. Under
/// [`Boundary::ZeroWall`] the two end interfaces carry no flux.
pub fn flux_difference<T: Real>(
    u: &[T],
    wind: impl Fn(usize) -> Wind,
    boundary: Boundary,
    kind: ReconKind,
    scratch: &mut Vec<T>,
    out: &mut [T],
) -> Result<()> {
    let n = u.len();
    check_len(n, kind)?;
    if out.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "flux difference output has length {}, expected {n}",
            out.len()
        )));
    }
    pad_line(u, R2_HALO, boundary, scratch);
    let h = |i: usize| interface_value(scratch, i + R2_HALO, wind(i), kind);
    let mut left = match boundary {
        Boundary::Periodic => h(n - 1),
        Boundary::ZeroWall => T::zero(),
    };
    for i in 0..n {
        let right = if boundary == Boundary::ZeroWall && i == n - 1 {
            T::zero()
        } else {
            h(i)
        };
        out[i] = right - left;
        left = right;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// R1: integrals over foot intervals from nodal values

/// Integrals of a Lagrange interpolant over the right part `[1 - ξ, 1]` of a
/// unit cell whose left node carries offset 0.
#[derive(Clone, Debug)]
struct PartialCellRule<T> {
    offsets: Vec<i64>,
    /// `q[k][p]` is the coefficient of `t^p` in basis `k`, divided by `p + 1`.
    q: Vec<Vec<T>>,
}

impl<T: Real> PartialCellRule<T> {
    fn new(offsets: &[i64]) -> Self {
        let n = offsets.len();
        let mut q = Vec::with_capacity(n);
        for k in 0..n {
            // Expand prod_{m != k} (t - o_m) / (o_k - o_m) in monomials.
            let mut coef = vec![0.0f64; n];
            coef[0] = 1.0;
            let mut deg = 0;
            for m in 0..n {
                if m == k {
                    continue;
                }
                let den = (offsets[k] - offsets[m]) as f64;
                let om = offsets[m] as f64;
                let mut next = vec![0.0f64; n];
                for p in 0..=deg {
                    next[p + 1] += coef[p] / den;
                    next[p] -= coef[p] * om / den;
                }
                coef = next;
                deg += 1;
            }
            q.push(
                coef.iter()
                    .enumerate()
                    .map(|(p, c)| T::lit(c / (p + 1) as f64))
                    .collect(),
            );
        }
        Self {
            offsets: offsets.to_vec(),
            q,
        }
    }

    /// Weights `w_k` with `∫_{1-ξ}^{1} p(t) dt = Σ w_k f(o_k)`.
    fn weights(&self, xi: T, out: &mut [T; 5]) {
        let a = T::one() - xi;
        let n = self.offsets.len();
        let mut powers = [T::zero(); 6];
        let mut ap = a;
        for p in 0..n {
            powers[p] = T::one() - ap;
            ap = ap * a;
        }
        for (k, qk) in self.q.iter().enumerate() {
            let mut s = T::zero();
            for p in (0..n).rev() {
                s = s + qk[p] * powers[p];
            }
            out[k] = s;
        }
    }
}

/// Upwind-biased nodal integration rules for one reconstruction kind.
#[derive(Clone, Debug)]
pub struct FootIntegrator<T> {
    pos: PartialCellRule<T>,
    neg: PartialCellRule<T>,
    whole_pos: [T; 5],
    whole_neg: [T; 5],
}

impl<T: Real> FootIntegrator<T> {
    pub fn new(kind: ReconKind) -> Self {
        let (pos, neg): (&[i64], &[i64]) = match kind.linear_part() {
            ReconKind::Linear3 => (&[-1, 0, 1], &[0, 1, 2]),
            _ => (&[-2, -1, 0, 1, 2], &[-1, 0, 1, 2, 3]),
        };
        let pos = PartialCellRule::new(pos);
        let neg = PartialCellRule::new(neg);
        let mut whole_pos = [T::zero(); 5];
        let mut whole_neg = [T::zero(); 5];
        pos.weights(T::one(), &mut whole_pos);
        neg.weights(T::one(), &mut whole_neg);
        Self {
            pos,
            neg,
            whole_pos,
            whole_neg,
        }
    }

    fn rule(&self, wind: Wind) -> (&PartialCellRule<T>, &[T; 5]) {
        match wind {
            Wind::Positive => (&self.pos, &self.whole_pos),
            Wind::Negative => (&self.neg, &self.whole_neg),
        }
    }

    /// `F_i = ∫_{x_i - D_i Δx}^{x_i} f` on a periodic line of nodal values.
    pub fn integrate(
        &self,
        line: &[T],
        feet: &[FootPoint<T>],
        spacing: T,
        out: &mut [T],
    ) -> Result<()> {
        let n = line.len();
        if feet.len() != n || out.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "line {n}, feet {}, output {}",
                feet.len(),
                out.len()
            )));
        }
        if n < self.pos.offsets.len() {
            return Err(Error::InvalidGrid(format!(
                "line of length {n} is shorter than the integration stencil"
            )));
        }
        let cell = |c: i64, rule: &PartialCellRule<T>, w: &[T; 5]| {
            let mut s = T::zero();
            for (k, &o) in rule.offsets.iter().enumerate() {
                s = s + w[k] * line[wrap(c + o, n)];
            }
            s
        };
        let mut w = [T::zero(); 5];
        for i in 0..n {
            let foot = feet[i];
            if foot.shift == 0 && foot.fraction == T::zero() {
                out[i] = T::zero();
                continue;
            }
            let wind = if foot.shift >= 0 {
                Wind::Positive
            } else {
                Wind::Negative
            };
            let (rule, whole) = self.rule(wind);
            let i = i as i64;
            let s = foot.shift;
            let mut acc = T::zero();
            // Whole cells between x_{i-s} and x_i, signed.
            if s > 0 {
                for c in (i - s)..i {
                    acc = acc + cell(c, rule, whole);
                }
            } else {
                for c in i..(i - s) {
                    acc = acc - cell(c, rule, whole);
                }
            }
            if foot.fraction > T::zero() {
                rule.weights(foot.fraction, &mut w);
                acc = acc + cell(i - s - 1, rule, &w);
            }
            out[i as usize] = acc * spacing;
        }
        Ok(())
    }
}

/// Foot integrals `F_i = ∫_{x_i*}^{x_i} f dξ` on a periodic line.
pub fn r1_foot_integral<T: Real>(
    line: &[T],
    feet: &[FootPoint<T>],
    spacing: T,
    kind: ReconKind,
) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); line.len()];
    FootIntegrator::new(kind).integrate(line, feet, spacing, &mut out)?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Compact flux for constant speed

/// Sub-cell flux for a single fractional shift `ξ`, acting on the five
/// values around the foot cell.
///
/// For constant speed the composition of R1 and R2 reduces to a finite-volume
/// transport of the function whose cell averages are the nodal values: the
/// flux through `x_{i+1/2}` is the whole-cell sum plus the integral of the
/// reconstruction over the right `ξ` part of the foot cell.
#[derive(Clone, Debug)]
pub struct CompactFlux<T> {
    kind: ReconKind,
    xi: T,
    /// Sub-stencil coefficients on offsets `(r-2, r-1, r)` relative to the foot cell.
    sub: [[T; 3]; 3],
    gamma: [T; 3],
    lin: [T; 5],
}

impl<T: Real> CompactFlux<T> {
    pub fn new(kind: ReconKind, xi: T) -> Self {
        let x = xi;
        let x2 = x * x;
        let x3 = x2 * x;
        let l = T::lit;
        let sub = [
            [
                x3 / l(6.0) - x2 / l(2.0) + x / l(3.0),
                -x3 / l(3.0) + l(1.5) * x2 - l(7.0) * x / l(6.0),
                x3 / l(6.0) - x2 + l(11.0) * x / l(6.0),
            ],
            [
                (x3 - x) / l(6.0),
                -x3 / l(3.0) + x2 / l(2.0) + l(5.0) * x / l(6.0),
                x3 / l(6.0) - x2 / l(2.0) + x / l(3.0),
            ],
            [
                x3 / l(6.0) + x2 / l(2.0) + x / l(3.0),
                -x3 / l(3.0) - x2 / l(2.0) + l(5.0) * x / l(6.0),
                x3 / l(6.0) - x / l(6.0),
            ],
        ];
        let gamma = [
            (x + l(1.0)) * (x + l(2.0)) / l(20.0),
            (l(3.0) - x) * (x + l(2.0)) / l(10.0),
            (l(3.0) - x) * (l(2.0) - x) / l(20.0),
        ];
        let mut lin = [T::zero(); 5];
        match kind {
            ReconKind::Linear3 => lin[1..4].copy_from_slice(&sub[1]),
            _ => {
                for r in 0..3 {
                    for k in 0..3 {
                        lin[r + k] = lin[r + k] + gamma[r] * sub[r][k];
                    }
                }
            }
        }
        Self {
            kind,
            xi,
            sub,
            gamma,
            lin,
        }
    }

    pub fn fraction(&self) -> T {
        self.xi
    }

    /// Linear coefficients on offsets `-2..=2`; zero outside the stencil.
    pub fn linear_coefficients(&self) -> [T; 5] {
        self.lin
    }

    pub fn linear_weights(&self) -> [T; 3] {
        self.gamma
    }

    /// Flux of the right `ξ` part of the cell at `w[2]`.
    #[inline]
    pub fn eval(&self, w: &[T; 5]) -> T {
        match self.kind {
            ReconKind::Linear3 => self.lin[1] * w[1] + self.lin[2] * w[2] + self.lin[3] * w[3],
            ReconKind::Linear5 => {
                self.lin[0] * w[0]
                    + self.lin[1] * w[1]
                    + self.lin[2] * w[2]
                    + self.lin[3] * w[3]
                    + self.lin[4] * w[4]
            }
            ReconKind::Weno5 => {
                let om = weno5_weights_with(w, self.gamma);
                let mut s = T::zero();
                for r in 0..3 {
                    let sr = self.sub[r][0] * w[r]
                        + self.sub[r][1] * w[r + 1]
                        + self.sub[r][2] * w[r + 2];
                    s = s + om[r] * sr;
                }
                s
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn decompose_examples() {
        let dx = 0.1;
        let f = decompose_shift(1.5 * dx, dx);
        assert_eq!(f.shift, 1);
        assert_abs_diff_eq!(f.fraction, 0.5, epsilon = 1e-14);
        let f = decompose_shift(-0.25 * dx, dx);
        assert_eq!(f.shift, -1);
        assert_abs_diff_eq!(f.fraction, 0.75, epsilon = 1e-14);
        let f = decompose_shift(3.0, 1.0);
        assert_eq!((f.shift, f.fraction), (3, 0.0));
        let f = decompose_shift(-1e-300, 1.0);
        assert!(f.fraction < 1.0 && f.fraction >= 0.0);
    }

    #[test]
    fn r1_constant_whole_shift() {
        let line = vec![1.75; 10];
        let feet = vec![
            FootPoint {
                shift: 2,
                fraction: 0.0
            };
            10
        ];
        for kind in ReconKind::ALL {
            let f = r1_foot_integral(&line, &feet, 0.2, kind).unwrap();
            for v in f {
                assert_abs_diff_eq!(v, 2.0 * 1.75 * 0.2, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn r1_linear_half_cell() {
        // Interior nodes only: the periodic seam breaks the linear profile.
        let n = 16;
        let dx = 0.25;
        let line: Vec<f64> = (0..n).map(|i| i as f64 * dx).collect();
        let feet = vec![
            FootPoint {
                shift: 0,
                fraction: 0.5
            };
            n
        ];
        let f = r1_foot_integral(&line, &feet, dx, ReconKind::Linear3).unwrap();
        for i in 3..n - 3 {
            let x = i as f64 * dx;
            let a = x - 0.5 * dx;
            assert_abs_diff_eq!(f[i], (x * x - a * a) / 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn r1_negative_displacement() {
        let n = 20;
        let dx = 0.1;
        let line: Vec<f64> = (0..n).map(|i| (i as f64 * dx).powi(2)).collect();
        let foot = decompose_shift(-1.3 * dx, dx);
        let feet = vec![foot; n];
        let f = r1_foot_integral(&line, &feet, dx, ReconKind::Linear3).unwrap();
        for i in 3..n - 5 {
            let x = i as f64 * dx;
            let a = x + 1.3 * dx;
            assert_abs_diff_eq!(f[i], -(a.powi(3) - x.powi(3)) / 3.0, epsilon = 1e-13);
        }
    }

    fn sine_r1_error(n: usize, kind: ReconKind) -> f64 {
        let dx = 2.0 * PI / n as f64;
        let line: Vec<f64> = (0..n).map(|i| (i as f64 * dx).sin()).collect();
        let feet = vec![
            FootPoint {
                shift: 0,
                fraction: 0.3
            };
            n
        ];
        let f = r1_foot_integral(&line, &feet, dx, kind).unwrap();
        (0..n)
            .map(|i| {
                let x = i as f64 * dx;
                let exact = (x - 0.3 * dx).cos() - x.cos();
                (f[i] - exact).abs() / dx
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn r1_sine_refinement() {
        // Errors of the foot averages F_i / dx.
        for (kind, expect) in [(ReconKind::Linear3, 3.0), (ReconKind::Linear5, 5.0)] {
            let e1 = sine_r1_error(64, kind);
            let e2 = sine_r1_error(128, kind);
            let slope = (e1 / e2).log2();
            assert!((slope - expect).abs() < 0.3, "{kind}: slope {slope}");
        }
        assert!(sine_r1_error(64, ReconKind::Linear5) < (2.0 * PI / 64.0f64).powi(5));
    }

    #[test]
    fn r2_constant() {
        let avg = vec![0.7; 9];
        for kind in ReconKind::ALL {
            for wind in [Wind::Positive, Wind::Negative] {
                for v in r2_interface_from_averages(&avg, wind, kind).unwrap() {
                    assert_abs_diff_eq!(v, 0.7, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn r2_cubic_exact() {
        // Sliding averages of p(x) = x^3 - 2x^2 + x/2 over [x - 1/2, x + 1/2].
        let prim = |x: f64| x.powi(4) / 4.0 - 2.0 * x.powi(3) / 3.0 + x * x / 4.0;
        let p = |x: f64| x.powi(3) - 2.0 * x * x + 0.5 * x;
        let n = 20;
        let h = 0.1;
        let avg: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64 * h;
                (prim(x + h / 2.0) - prim(x - h / 2.0)) / h
            })
            .collect();
        for wind in [Wind::Positive, Wind::Negative] {
            let r = r2_interface_from_averages(&avg, wind, ReconKind::Linear5).unwrap();
            for i in 4..n - 4 {
                assert_abs_diff_eq!(r[i], p((i as f64 + 0.5) * h), epsilon = 1e-13);
            }
        }
    }

    fn sine_r2_error(n: usize, kind: ReconKind) -> (f64, Vec<f64>) {
        let h = 2.0 * PI / n as f64;
        let avg: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64 * h;
                ((x - h / 2.0).cos() - (x + h / 2.0).cos()) / h
            })
            .collect();
        let r = r2_interface_from_averages(&avg, Wind::Positive, kind).unwrap();
        let err = (0..n)
            .map(|i| (r[i] - ((i as f64 + 0.5) * h).sin()).abs() * h)
            .sum();
        (err, r)
    }

    #[test]
    fn r2_weno_smooth_sine() {
        let (e1, w1) = sine_r2_error(64, ReconKind::Weno5);
        let (e2, _) = sine_r2_error(128, ReconKind::Weno5);
        let slope = (e1 / e2).log2();
        assert!(slope > 4.5, "slope {slope}");
        let (_, l1) = sine_r2_error(64, ReconKind::Linear5);
        let h: f64 = 2.0 * PI / 64.0;
        let dev = w1
            .iter()
            .zip(&l1)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev < h.powi(3), "deviation {dev}");
    }

    #[test]
    fn weno_weight_examples() {
        let w = weno5_weights(&[2.0; 5]);
        assert_eq!(w, [0.1, 0.6, 0.3]);
        let w = weno5_weights(&[0.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(w[0] < 1e-3, "{w:?}");
        let w = weno5_weights(&[0.3, -1.0, 4.0, 2.0, 0.5]);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn compact_linear5_matches_quintic() {
        for &x in &[0.0, 0.1, 0.37, 0.5, 0.9, 0.999] {
            let c = CompactFlux::new(ReconKind::Linear5, x).linear_coefficients();
            let x2 = x * x;
            let x3 = x2 * x;
            let x4 = x3 * x;
            let x5 = x4 * x;
            let oracle = [
                x5 / 120.0 - x3 / 24.0 + x / 30.0,
                -x5 / 30.0 + x4 / 24.0 + x3 / 4.0 - x2 / 24.0 - 13.0 * x / 60.0,
                x5 / 20.0 - x4 / 8.0 - x3 / 3.0 + 5.0 * x2 / 8.0 + 47.0 * x / 60.0,
                -x5 / 30.0 + x4 / 8.0 + x3 / 12.0 - 5.0 * x2 / 8.0 + 9.0 * x / 20.0,
                x5 / 120.0 - x4 / 24.0 + x3 / 24.0 + x2 / 24.0 - x / 20.0,
            ];
            for k in 0..5 {
                assert_abs_diff_eq!(c[k], oracle[k], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn compact_full_cell_is_foot_cell() {
        for kind in ReconKind::ALL {
            let c = CompactFlux::new(kind, 1.0);
            let w = [0.3, -2.0, 1.25, 4.0, 0.5];
            assert_abs_diff_eq!(c.eval(&w), 1.25, epsilon = 1e-14);
        }
    }

    #[test]
    fn flux_difference_telescopes() {
        let u: Vec<f64> = (0..13).map(|i| ((i * 7) % 5) as f64 - 1.3).collect();
        let mut scratch = Vec::new();
        let mut out = vec![0.0; 13];
        for b in [Boundary::Periodic, Boundary::ZeroWall] {
            for kind in ReconKind::ALL {
                flux_difference(
                    &u,
                    |i| {
                        if i % 3 == 0 {
                            Wind::Negative
                        } else {
                            Wind::Positive
                        }
                    },
                    b,
                    kind,
                    &mut scratch,
                    &mut out,
                )
                .unwrap();
                assert!(out.iter().sum::<f64>().abs() < 1e-13);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn weno_partition_of_unity(w in prop::array::uniform5(-1e3f64..1e3)) {
                let om = weno5_weights(&w);
                prop_assert!(om.iter().all(|&x| x >= 0.0));
                prop_assert!((om.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            }

            #[test]
            fn compact_weights_positive(x in 0.0f64..1.0, w in prop::array::uniform5(-10.0f64..10.0)) {
                let c = CompactFlux::new(ReconKind::Weno5, x);
                prop_assert!(c.linear_weights().iter().all(|&g| g > 0.0));
                let om = weno5_weights_with(&w, c.linear_weights());
                prop_assert!((om.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            }

            #[test]
            fn r2_periodic_telescopes(u in prop::collection::vec(-5.0f64..5.0, 6..40), neg in any::<bool>()) {
                let wind = if neg { Wind::Negative } else { Wind::Positive };
                for kind in ReconKind::ALL {
                    let h = r2_interface_from_averages(&u, wind, kind).unwrap();
                    let n = h.len();
                    let s: f64 = (0..n).map(|i| h[i] - h[(i + n - 1) % n]).sum();
                    prop_assert!(s.abs() < 1e-12);
                }
            }
        }
    }
}
