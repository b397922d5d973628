//! Integral deferred correction on uniform sub-nodes.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::real::Real;

pub const MAX_NODES: usize = 8;

/// Uniform sub-nodes `τ_m = t0 + m Δτ`, `m = 0..=M`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdcNodes<T> {
    pub m: usize,
    pub dtau: T,
    pub taus: Vec<T>,
}

impl<T: Real> IdcNodes<T> {
    pub fn new(t0: T, interval: T, m: usize) -> Result<Self> {
        check_m(m)?;
        let dtau = interval / T::from_usize_lossy(m);
        let mut taus: Vec<T> = (0..=m)
            .map(|k| t0 + T::from_usize_lossy(k) * dtau)
            .collect();
        taus[m] = t0 + interval;
        Ok(Self { m, dtau, taus })
    }
}

fn check_m(m: usize) -> Result<()> {
    if !(1..=MAX_NODES).contains(&m) {
        return Err(Error::InvalidConfig(format!(
            "sub-interval count must be in 1..={MAX_NODES}, got {m}"
        )));
    }
    Ok(())
}

/// Weights `α_{m,ℓ}` with `Σ_ℓ α_{m,ℓ} p(τ_ℓ) = ∫_{τ_m}^{τ_{m+1}} p` for
/// polynomials of degree at most `M`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureMatrix<T> {
    pub m: usize,
    pub alpha: Vec<Vec<T>>,
}

impl<T: Real> QuadratureMatrix<T> {
    pub fn row(&self, m: usize) -> &[T] {
        &self.alpha[m]
    }
}

/// Exact unit-spacing weights as rationals.
pub fn quadrature_weights_exact(m: usize) -> Result<Vec<Vec<BigRational>>> {
    check_m(m)?;
    let r = |v: i64| BigRational::from_integer(BigInt::from(v));
    let mut rows = vec![vec![BigRational::zero(); m + 1]; m];
    for l in 0..=m {
        // Monomial coefficients of the Lagrange basis polynomial of node l.
        let mut coef = vec![BigRational::one()];
        for j in 0..=m {
            if j == l {
                continue;
            }
            let den = r(l as i64 - j as i64);
            let mut next = vec![BigRational::zero(); coef.len() + 1];
            for (p, c) in coef.iter().enumerate() {
                next[p + 1] += c / &den;
                next[p] -= c * r(j as i64) / &den;
            }
            coef = next;
        }
        for (row, out) in rows.iter_mut().enumerate() {
            let (a, b) = (r(row as i64), r(row as i64 + 1));
            let mut s = BigRational::zero();
            let (mut ap, mut bp) = (a.clone(), b.clone());
            for (p, c) in coef.iter().enumerate() {
                s += c * (&bp - &ap) / r(p as i64 + 1);
                ap *= &a;
                bp *= &b;
            }
            out[l] = s;
        }
    }
    Ok(rows)
}

pub fn quadrature_matrix<T: Real>(m: usize, dtau: T) -> Result<QuadratureMatrix<T>> {
    let exact = quadrature_weights_exact(m)?;
    let alpha = exact
        .iter()
        .map(|row| {
            row.iter()
                .map(|w| T::lit(w.to_f64().unwrap_or(f64::NAN)) * dtau)
                .collect()
        })
        .collect();
    Ok(QuadratureMatrix { m, alpha })
}

/// Solves `y' = g(t, y)` from `t = 0` with `intervals` IDC steps of
/// `M` forward-Euler sub-steps and `K` corrections. Returns the state at
/// `0` and at the end of every interval.
pub fn idc_ode_solve<T, G>(
    g: G,
    y0: &[T],
    t_final: T,
    intervals: usize,
    m: usize,
    k: usize,
) -> Result<Vec<Vec<T>>>
where
    T: Real,
    G: Fn(T, &[T]) -> Vec<T>,
{
    if intervals == 0 {
        return Err(Error::InvalidConfig("need at least one interval".into()));
    }
    let dim = y0.len();
    let h = t_final / T::from_usize_lossy(intervals);
    let mut traj = vec![y0.to_vec()];
    let mut y = y0.to_vec();
    for n in 0..intervals {
        let nodes = IdcNodes::new(T::from_usize_lossy(n) * h, h, m)?;
        let alpha = quadrature_matrix(m, nodes.dtau)?;
        let dtau = nodes.dtau;
        let mut eta = vec![y.clone()];
        for s in 0..m {
            let gs = g(nodes.taus[s], &eta[s]);
            eta.push((0..dim).map(|i| eta[s][i] + dtau * gs[i]).collect());
        }
        for _ in 0..k {
            let gl: Vec<Vec<T>> = (0..=m).map(|l| g(nodes.taus[l], &eta[l])).collect();
            let mut delta = vec![vec![T::zero(); dim]];
            for s in 0..m {
                let shifted: Vec<T> = (0..dim).map(|i| eta[s][i] + delta[s][i]).collect();
                let gsh = g(nodes.taus[s], &shifted);
                let next = (0..dim)
                    .map(|i| {
                        let quad =
                            (0..=m).fold(T::zero(), |acc, l| acc + alpha.alpha[s][l] * gl[l][i]);
                        delta[s][i] + dtau * (gsh[i] - gl[s][i]) + quad + eta[s][i] - eta[s + 1][i]
                    })
                    .collect();
                delta.push(next);
            }
            for s in 0..=m {
                for i in 0..dim {
                    eta[s][i] = eta[s][i] + delta[s][i];
                }
            }
        }
        y = eta.pop().unwrap_or_default();
        traj.push(y.clone());
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn trapezoid_weights() {
        let w = quadrature_weights_exact(1).unwrap();
        assert_eq!(w, vec![vec![rat(1, 2), rat(1, 2)]]);
        let q = quadrature_matrix(1, 0.2).unwrap();
        assert_eq!(q.alpha[0], vec![0.1, 0.1]);
    }

    #[test]
    fn quadratic_weights() {
        let w = quadrature_weights_exact(2).unwrap();
        assert_eq!(w[0], vec![rat(5, 12), rat(2, 3), rat(-1, 12)]);
        assert_eq!(w[1], vec![rat(-1, 12), rat(2, 3), rat(5, 12)]);
    }

    #[test]
    fn rows_integrate_monomials_exactly() {
        for m in 1..=MAX_NODES {
            let w = quadrature_weights_exact(m).unwrap();
            for (row, ws) in w.iter().enumerate() {
                for p in 0..=m as u32 {
                    let lhs: BigRational = ws
                        .iter()
                        .enumerate()
                        .map(|(l, a)| a * BigRational::from_usize(l.pow(p)).unwrap())
                        .sum();
                    let rhs = (BigRational::from_usize((row + 1).pow(p + 1)).unwrap()
                        - BigRational::from_usize(row.pow(p + 1)).unwrap())
                        / BigRational::from_usize(p as usize + 1).unwrap();
                    assert_eq!(lhs, rhs, "M={m} row={row} p={p}");
                }
            }
            let q = quadrature_matrix(m, 0.3).unwrap();
            for row in &q.alpha {
                assert!((row.iter().sum::<f64>() - 0.3).abs() < 1e-14);
            }
        }
        assert!(quadrature_weights_exact(0).is_err());
        assert!(quadrature_weights_exact(9).is_err());
    }

    #[test]
    fn zero_rhs_is_constant() {
        for (m, k) in [(1, 0), (2, 3), (4, 2)] {
            let t = idc_ode_solve(
                |_, y: &[f64]| vec![0.0; y.len()],
                &[1.5, -2.0],
                1.0,
                7,
                m,
                k,
            )
            .unwrap();
            assert!(t.iter().all(|y| y == &vec![1.5, -2.0]));
        }
    }

    fn exp_error(intervals: usize, m: usize, k: usize) -> f64 {
        let t = idc_ode_solve(|_, y: &[f64]| vec![y[0]], &[1.0], 1.0, intervals, m, k).unwrap();
        (t.last().unwrap()[0] - 1f64.exp()).abs()
    }

    #[test]
    fn order_lifting_m2() {
        for k in 0..=3usize {
            let (e1, e2) = (exp_error(10, 2, k), exp_error(20, 2, k));
            let order = (e1 / e2).log2();
            let expect = (k + 1).min(3) as f64;
            if k < 3 {
                assert!((order - expect).abs() < 0.25, "K={k}: {order}");
            } else {
                // Same asymptotic order; the leading term is small here.
                assert!(order > expect - 0.25, "K={k}: {order}");
            }
        }
    }

    #[test]
    fn decay_with_one_correction() {
        let err = |n: usize| {
            let t = idc_ode_solve(|_, y: &[f64]| vec![-y[0]], &[1.0], 1.0, n, 1, 1).unwrap();
            (t.last().unwrap()[0] - (-1f64).exp()).abs()
        };
        let order = (err(20) / err(40)).log2();
        assert!((order - 2.0).abs() < 0.1, "{order}");
    }

    #[test]
    fn polynomial_solution_needs_no_correction() {
        // y' = 3t^2 is integrated exactly by the quadrature once η matches it.
        let g = |t: f64, _: &[f64]| vec![3.0 * t * t];
        let t = idc_ode_solve(g, &[0.0], 1.0, 2, 2, 2).unwrap();
        assert!((t[2][0] - 1.0).abs() < 1e-14);
    }
}
