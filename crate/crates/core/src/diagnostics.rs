//! Conserved quantities, errors and observed orders.

use std::io::Write;

use crate::error::{Error, Result};
use crate::field_solve::{Field1D, Field2D};
use crate::mesh::ScalarField;
use crate::real::{pairwise_sum, pairwise_sum_by, Real};

/// Values below this are clamped before taking `f log f`.
pub const ENTROPY_FLOOR: f64 = 1e-30;

/// Invariants of one state. VP records carry `energy`; drift records carry
/// `enstrophy` (`‖ρ‖_2`) and `electric_energy` (`‖E‖_2`).
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub mass: f64,
    pub l1: f64,
    pub l2: f64,
    pub entropy: f64,
    pub energy: Option<f64>,
    pub enstrophy: Option<f64>,
    pub electric_energy: Option<f64>,
    /// Nodes where the entropy integrand was clamped.
    pub entropy_clamped: usize,
    pub deviations: Deviations,
}

/// Relative deviations from the initial record. When the initial value is 0
/// the absolute deviation is stored instead.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Deviations {
    pub mass: f64,
    pub l1: f64,
    pub l2: f64,
    pub entropy: f64,
    pub energy: Option<f64>,
    pub enstrophy: Option<f64>,
    pub electric_energy: Option<f64>,
}

fn relative(value: f64, initial: f64) -> f64 {
    if initial == 0.0 {
        value - initial
    } else {
        (value - initial) / initial.abs()
    }
}

fn mass_scale(initial: &DiagnosticsRecord) -> f64 {
    let s = initial.mass.abs().max(initial.l1);
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn rel_opt(value: Option<f64>, initial: Option<f64>) -> Option<f64> {
    Some(relative(value?, initial?))
}

struct Norms {
    mass: f64,
    l1: f64,
    l2: f64,
    entropy: f64,
    clamped: usize,
}

fn norms<T: Real>(f: &ScalarField<T>) -> Norms {
    let vol = f.grid().cell_volume().as_f64();
    let v: Vec<f64> = f.values().iter().map(|x| x.as_f64()).collect();
    let floor = ENTROPY_FLOOR;
    Norms {
        mass: pairwise_sum(&v) * vol,
        l1: pairwise_sum_by(&v, f64::abs) * vol,
        l2: (pairwise_sum_by(&v, |x| x * x) * vol).sqrt(),
        entropy: pairwise_sum_by(&v, |x| {
            let c = x.max(floor);
            c * c.ln()
        }) * vol,
        clamped: v.iter().filter(|&&x| x < floor).count(),
    }
}

impl DiagnosticsRecord {
    fn from_norms(time: f64, n: Norms) -> Self {
        Self {
            time,
            mass: n.mass,
            l1: n.l1,
            l2: n.l2,
            entropy: n.entropy,
            energy: None,
            enstrophy: None,
            electric_energy: None,
            entropy_clamped: n.clamped,
            deviations: Deviations::default(),
        }
    }

    /// Fills `deviations` relative to `initial`.
    pub fn with_deviations(mut self, initial: &DiagnosticsRecord) -> Self {
        self.deviations = Deviations {
            // Signed data (vorticity) can have zero net mass; scale by the
            // initial L1 norm then.
            mass: (self.mass - initial.mass) / mass_scale(initial),
            l1: relative(self.l1, initial.l1),
            l2: relative(self.l2, initial.l2),
            entropy: relative(self.entropy, initial.entropy),
            energy: rel_opt(self.energy, initial.energy),
            enstrophy: rel_opt(self.enstrophy, initial.enstrophy),
            electric_energy: rel_opt(self.electric_energy, initial.electric_energy),
        };
        self
    }

    fn columns(&self) -> Vec<(&'static str, String)> {
        let mut c = vec![
            ("time", format!("{:.16e}", self.time)),
            ("mass", format!("{:.16e}", self.mass)),
            ("l1", format!("{:.16e}", self.l1)),
            ("l2", format!("{:.16e}", self.l2)),
            ("entropy", format!("{:.16e}", self.entropy)),
        ];
        let opt = [
            ("energy", self.energy, self.deviations.energy),
            ("enstrophy", self.enstrophy, self.deviations.enstrophy),
            (
                "electric_energy",
                self.electric_energy,
                self.deviations.electric_energy,
            ),
        ];
        for (name, v, _) in &opt {
            if let Some(v) = v {
                c.push((name, format!("{v:.16e}")));
            }
        }
        c.push(("entropy_clamped", self.entropy_clamped.to_string()));
        let d = &self.deviations;
        c.push(("dev_mass", format!("{:.16e}", d.mass)));
        c.push(("dev_l1", format!("{:.16e}", d.l1)));
        c.push(("dev_l2", format!("{:.16e}", d.l2)));
        c.push(("dev_entropy", format!("{:.16e}", d.entropy)));
        for (name, v, dev) in opt {
            if v.is_some() {
                let name = match name {
                    "energy" => "dev_energy",
                    "enstrophy" => "dev_enstrophy",
                    _ => "dev_electric_energy",
                };
                c.push((name, format!("{:.16e}", dev.unwrap_or(0.0))));
            }
        }
        c
    }

    pub fn csv_header(&self) -> String {
        self.columns()
            .iter()
            .map(|(n, _)| *n)
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn csv_row(&self) -> String {
        self.columns()
            .into_iter()
            .map(|(_, v)| v)
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// VP record; `velocities` are the v-node coordinates.
pub fn vp_diagnostics<T: Real>(
    f: &ScalarField<T>,
    field: &Field1D<T>,
    velocities: &[T],
    time: f64,
) -> DiagnosticsRecord {
    let g = f.grid();
    let n2 = g.n2;
    let kinetic: Vec<f64> = f
        .values()
        .iter()
        .enumerate()
        .map(|(idx, x)| {
            let v = velocities[idx % n2].as_f64();
            x.as_f64() * v * v
        })
        .collect();
    let e2: Vec<f64> = field.e.iter().map(|e| e.as_f64() * e.as_f64()).collect();
    let energy = 0.5
        * (pairwise_sum(&kinetic) * g.cell_volume().as_f64() + pairwise_sum(&e2) * g.d1.as_f64());
    let mut r = DiagnosticsRecord::from_norms(time, norms(f));
    r.energy = Some(energy);
    r
}

/// Drift-model record of the transported density and its field.
pub fn drift_diagnostics<T: Real>(
    rho: &ScalarField<T>,
    field: &Field2D<T>,
    time: f64,
) -> DiagnosticsRecord {
    let n = norms(rho);
    let vol = rho.grid().cell_volume().as_f64();
    let e2: Vec<f64> = field
        .e1
        .values()
        .iter()
        .zip(field.e2.values())
        .map(|(a, b)| a.as_f64() * a.as_f64() + b.as_f64() * b.as_f64())
        .collect();
    let mut r = DiagnosticsRecord::from_norms(time, n);
    r.enstrophy = Some(r.l2);
    r.electric_energy = Some((pairwise_sum(&e2) * vol).sqrt());
    r
}

/// `Σ |f - ref| Δ1 Δ2`.
pub fn l1_error<T: Real>(f: &ScalarField<T>, reference: &ScalarField<T>) -> Result<f64> {
    if !f.same_shape(reference) {
        return Err(Error::ShapeMismatch(
            "L1 error needs fields on one grid".into(),
        ));
    }
    let d: Vec<f64> = f
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| (a.as_f64() - b.as_f64()).abs())
        .collect();
    Ok(pairwise_sum(&d) * f.grid().cell_volume().as_f64())
}

/// `ln(e_i / e_{i+1}) / ln(λ_i / λ_{i+1})` for consecutive pairs.
pub fn observed_order(errors: &[f64], cfls: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != cfls.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} errors for {} CFL numbers",
            errors.len(),
            cfls.len()
        )));
    }
    if let Some(i) = errors.iter().position(|&e| e == 0.0) {
        return Err(Error::ZeroError { index: i });
    }
    Ok(errors
        .windows(2)
        .zip(cfls.windows(2))
        .map(|(e, c)| (e[0] / e[1]).ln() / (c[0] / c[1]).ln())
        .collect())
}

/// Header plus one row per record.
pub fn write_csv<W: Write>(mut out: W, records: &[DiagnosticsRecord]) -> Result<()> {
    if let Some(first) = records.first() {
        writeln!(out, "{}", first.csv_header())?;
    }
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_solve::{Poisson1D, Poisson2D};
    use crate::mesh::PhaseGrid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn vp_grid() -> PhaseGrid<f64> {
        PhaseGrid::new(32, 64, [0.0, 4.0 * PI, -2.0 * PI, 2.0 * PI]).unwrap()
    }

    #[test]
    fn zero_state() {
        let g = vp_grid();
        let f = ScalarField::zeros(g);
        let r = vp_diagnostics(
            &f,
            &Field1D::zeros(32),
            &g.coords(crate::mesh::Axis::Second),
            0.0,
        );
        assert_eq!((r.mass, r.l1, r.l2, r.energy), (0.0, 0.0, 0.0, Some(0.0)));
        assert_eq!(r.entropy_clamped, g.num_nodes());
        assert!(r.entropy.abs() < 1e-20);
    }

    #[test]
    fn maxwellian_moments() {
        let g = vp_grid();
        let f = ScalarField::from_fn(g, |_, v| (-v * v / 2.0).exp() / (2.0 * PI).sqrt());
        let rho: Vec<f64> = (0..g.n1)
            .map(|i| {
                f.line(crate::mesh::Axis::Second, i)
                    .unwrap()
                    .iter()
                    .sum::<f64>()
                    * g.d2
            })
            .collect();
        let field = Poisson1D::new(g.n1, 4.0 * PI).unwrap().solve(&rho).unwrap();
        assert!(field.max_abs() < 1e-14);
        let r = vp_diagnostics(&f, &field, &g.coords(crate::mesh::Axis::Second), 0.0);
        // Unit density and temperature over the x-length 4π, less the
        // Gaussian tails beyond |v| = 2π (about 5e-9 in mass).
        assert!((r.mass - 4.0 * PI).abs() < 1e-8, "{}", r.mass);
        assert!(
            (r.energy.unwrap() - 2.0 * PI).abs() < 1e-6,
            "{:?}",
            r.energy
        );
        let again = r.clone().with_deviations(&r);
        assert_eq!(
            again.deviations,
            Deviations {
                energy: Some(0.0),
                ..Deviations::default()
            }
        );
    }

    #[test]
    fn drift_gets_enstrophy() {
        let g = PhaseGrid::new(32, 32, [0.0, 2.0 * PI, 0.0, 2.0 * PI]).unwrap();
        let w = ScalarField::from_fn(g, |x, y| x.sin() * y.sin());
        let field = Poisson2D::new(g).solve(&w).unwrap();
        let r = drift_diagnostics(&w, &field, 1.0);
        assert!((r.l2 - PI).abs() < 1e-12);
        assert_eq!(r.enstrophy, Some(r.l2));
        // Φ = -w/2 and |∇Φ|² integrates to π²/2.
        assert!((r.electric_energy.unwrap() - (PI * PI / 2.0).sqrt()).abs() < 1e-12);
        let header = r.csv_header();
        assert!(header.contains("enstrophy") && !header.contains(",energy"));
        assert_eq!(header.split(',').count(), r.csv_row().split(',').count());
    }

    #[test]
    fn zero_mass_deviation_uses_l1_scale() {
        let g = PhaseGrid::new(16, 16, [0.0, 2.0 * PI, 0.0, 2.0 * PI]).unwrap();
        let w = ScalarField::from_fn(g, |x, y| x.sin() * y.sin());
        let field = Poisson2D::new(g).solve(&w).unwrap();
        let r0 = drift_diagnostics(&w, &field, 0.0);
        let mut r1 = r0.clone();
        r1.mass += 1e-3 * r0.l1;
        let d = r1.with_deviations(&r0).deviations.mass;
        assert!((d - 1e-3).abs() < 1e-12, "{d}");
    }

    #[test]
    fn orders() {
        let o = observed_order(&[3.85e-6, 3.23e-6], &[0.6, 0.5]).unwrap();
        assert!((o[0] - 0.96).abs() < 0.01, "{o:?}");
        let o = observed_order(&[0.216, 0.027], &[0.6, 0.3]).unwrap();
        assert!((o[0] - 3.0).abs() < 1e-12);
        assert!(observed_order(&[1e-3], &[0.5]).unwrap().is_empty());
        assert!(matches!(
            observed_order(&[1.0, 0.0], &[0.6, 0.3]),
            Err(Error::ZeroError { index: 1 })
        ));
    }

    #[test]
    fn csv_layout() {
        let g = vp_grid();
        let f = ScalarField::constant(g, 1.0);
        let r = vp_diagnostics(
            &f,
            &Field1D::zeros(32),
            &g.coords(crate::mesh::Axis::Second),
            0.0,
        );
        let mut buf = Vec::new();
        write_csv(&mut buf, &[r.clone(), r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("time,mass,l1,l2,entropy,energy,entropy_clamped,dev_mass"));
    }

    proptest! {
        #[test]
        fn l1_is_a_metric(a in proptest::collection::vec(-1.0f64..1.0, 16),
                          b in proptest::collection::vec(-1.0f64..1.0, 16),
                          c in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let g = PhaseGrid::new(4, 4, [0.0, 1.0, 0.0, 2.0]).unwrap();
            let (fa, fb, fc) = (
                ScalarField::from_values(g, a).unwrap(),
                ScalarField::from_values(g, b).unwrap(),
                ScalarField::from_values(g, c).unwrap(),
            );
            let ab = l1_error(&fa, &fb).unwrap();
            prop_assert_eq!(ab, l1_error(&fb, &fa).unwrap());
            prop_assert!(ab <= l1_error(&fa, &fc).unwrap() + l1_error(&fc, &fb).unwrap() + 1e-12);
            prop_assert_eq!(l1_error(&fa, &fa).unwrap(), 0.0);
        }
    }
}
