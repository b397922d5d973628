//! Uniform periodic tensor grids and point-value fields.
//!
//! Node `i` along an axis sits at `lo + i * d` for `i = 0..n`, with
//! `d = (hi - lo) / n`; the node at `hi` is the periodic image of node 0 and
//! is not stored. Fields are stored row-major over `(i1, i2)`, so lines along
//! the second axis are contiguous and lines along the first axis are strided.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::real::{pairwise_sum, Real};

/// Smallest node count that supports the widest reconstruction stencil.
pub const MIN_NODES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    First,
    Second,
}

impl Axis {
    pub fn from_index(axis: usize) -> Result<Self> {
        match axis {
            1 => Ok(Axis::First),
            2 => Ok(Axis::Second),
            _ => Err(Error::InvalidGrid(format!(
                "axis must be 1 or 2, got {axis}"
            ))),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Axis::First => 1,
            Axis::Second => 2,
        }
    }
}

/// Treatment of values beyond the ends of a line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    #[default]
    Periodic,
    /// Ghost values are zero and no flux crosses the two end interfaces.
    ZeroWall,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid<T> {
    pub n1: usize,
    pub n2: usize,
    pub lo1: T,
    pub hi1: T,
    pub lo2: T,
    pub hi2: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Real> PhaseGrid<T> {
    /// Builds a grid from node counts and `[lo1, hi1, lo2, hi2]`.
    pub fn new(n1: usize, n2: usize, bounds: [T; 4]) -> Result<Self> {
        let [lo1, hi1, lo2, hi2] = bounds;
        if n1 < MIN_NODES || n2 < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes per axis, got {n1}x{n2}"
            )));
        }
        if !(bounds.iter().all(|b| b.is_finite()) && hi1 > lo1 && hi2 > lo2) {
            return Err(Error::InvalidGrid(format!(
                "bounds must be finite with hi > lo, got [{lo1}, {hi1}] x [{lo2}, {hi2}]"
            )));
        }
        Ok(Self {
            n1,
            n2,
            lo1,
            hi1,
            lo2,
            hi2,
            d1: (hi1 - lo1) / T::from_usize_lossy(n1),
            d2: (hi2 - lo2) / T::from_usize_lossy(n2),
        })
    }

    pub fn len(&self, axis: Axis) -> usize {
        match axis {
            Axis::First => self.n1,
            Axis::Second => self.n2,
        }
    }

    pub fn spacing(&self, axis: Axis) -> T {
        match axis {
            Axis::First => self.d1,
            Axis::Second => self.d2,
        }
    }

    pub fn extent(&self, axis: Axis) -> T {
        match axis {
            Axis::First => self.hi1 - self.lo1,
            Axis::Second => self.hi2 - self.lo2,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn cell_volume(&self) -> T {
        self.d1 * self.d2
    }

    pub fn coord1(&self, i: usize) -> T {
        self.lo1 + T::from_usize_lossy(i) * self.d1
    }

    pub fn coord2(&self, j: usize) -> T {
        self.lo2 + T::from_usize_lossy(j) * self.d2
    }

    pub fn coords(&self, axis: Axis) -> Vec<T> {
        match axis {
            Axis::First => (0..self.n1).map(|i| self.coord1(i)).collect(),
            Axis::Second => (0..self.n2).map(|j| self.coord2(j)).collect(),
        }
    }

    /// Flat storage index of node `(i1, i2)`.
    #[inline]
    pub fn flat(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n2 + i2
    }

    /// Converts the grid to another scalar type.
    pub fn cast<U: Real>(&self) -> PhaseGrid<U> {
        PhaseGrid {
            n1: self.n1,
            n2: self.n2,
            lo1: U::lit(self.lo1.as_f64()),
            hi1: U::lit(self.hi1.as_f64()),
            lo2: U::lit(self.lo2.as_f64()),
            hi2: U::lit(self.hi2.as_f64()),
            d1: U::lit(self.d1.as_f64()),
            d2: U::lit(self.d2.as_f64()),
        }
    }
}

/// Read-only view of one grid line.
#[derive(Clone, Copy, Debug)]
pub struct Line<'a, T> {
    data: &'a [T],
    start: usize,
    stride: usize,
    len: usize,
}

impl<'a, T: Copy> Line<'a, T> {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, k: usize) -> T {
        self.data[self.start + k * self.stride]
    }

    pub fn iter(&self) -> impl Iterator<Item = T> + 'a {
        let (data, start, stride) = (self.data, self.start, self.stride);
        (0..self.len).map(move |k| data[start + k * stride])
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.iter().collect()
    }
}

/// Mutable view of one grid line; writes go straight into the field.
#[derive(Debug)]
pub struct LineMut<'a, T> {
    data: &'a mut [T],
    start: usize,
    stride: usize,
    len: usize,
}

impl<T: Copy> LineMut<'_, T> {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, k: usize) -> T {
        self.data[self.start + k * self.stride]
    }

    pub fn set(&mut self, k: usize, value: T) {
        self.data[self.start + k * self.stride] = value;
    }

    pub fn copy_from(&mut self, src: &[T]) -> Result<()> {
        if src.len() != self.len {
            return Err(Error::ShapeMismatch(format!(
                "line of length {} written with {} values",
                self.len,
                src.len()
            )));
        }
        for (k, &v) in src.iter().enumerate() {
            self.set(k, v);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    grid: PhaseGrid<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(grid: PhaseGrid<T>) -> Self {
        Self {
            values: vec![T::zero(); grid.num_nodes()],
            grid,
        }
    }

    pub fn constant(grid: PhaseGrid<T>, value: T) -> Self {
        Self {
            values: vec![value; grid.num_nodes()],
            grid,
        }
    }

    pub fn from_values(grid: PhaseGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::ShapeMismatch(format!(
                "grid has {} nodes, got {} values",
                grid.num_nodes(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x1, x2)` at every node.
    pub fn from_fn(grid: PhaseGrid<T>, f: impl Fn(T, T) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.num_nodes());
        for i1 in 0..grid.n1 {
            let x1 = grid.coord1(i1);
            for i2 in 0..grid.n2 {
                values.push(f(x1, grid.coord2(i2)));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &PhaseGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, i1: usize, i2: usize) -> T {
        self.values[self.grid.flat(i1, i2)]
    }

    pub fn set(&mut self, i1: usize, i2: usize, value: T) {
        let k = self.grid.flat(i1, i2);
        self.values[k] = value;
    }

    fn line_layout(&self, axis: Axis, index: usize) -> Result<(usize, usize, usize)> {
        let (n_lines, len) = match axis {
            Axis::First => (self.grid.n2, self.grid.n1),
            Axis::Second => (self.grid.n1, self.grid.n2),
        };
        if index >= n_lines {
            return Err(Error::OutOfRange {
                axis: axis.index(),
                index,
                len: n_lines,
            });
        }
        Ok(match axis {
            Axis::First => (index, self.grid.n2, len),
            Axis::Second => (index * self.grid.n2, 1, len),
        })
    }

    /// Line running along `axis` at position `index` of the other axis.
    pub fn line(&self, axis: Axis, index: usize) -> Result<Line<'_, T>> {
        let (start, stride, len) = self.line_layout(axis, index)?;
        Ok(Line {
            data: &self.values,
            start,
            stride,
            len,
        })
    }

    pub fn line_mut(&mut self, axis: Axis, index: usize) -> Result<LineMut<'_, T>> {
        let (start, stride, len) = self.line_layout(axis, index)?;
        Ok(LineMut {
            data: &mut self.values,
            start,
            stride,
            len,
        })
    }

    pub fn num_lines(&self, axis: Axis) -> usize {
        match axis {
            Axis::First => self.grid.n2,
            Axis::Second => self.grid.n1,
        }
    }

    /// Deterministic sum of all node values.
    pub fn sum(&self) -> T {
        pairwise_sum(&self.values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.grid.n1 == other.grid.n1 && self.grid.n2 == other.grid.n2
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.grid.n1, self.grid.n2, other.grid.n1, other.grid.n2
            )))
        }
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: T, other: &Self) -> Result<()> {
        self.check_shape(other)?;
        for (s, &o) in self.values.iter_mut().zip(&other.values) {
            *s = *s + a * o;
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(T::one(), other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-T::one(), other)?;
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> ScalarField<U> {
        ScalarField {
            grid: self.grid.cast(),
            values: self.values.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    /// Applies `kernel` to every line along `axis` in parallel and collects
    /// the outputs into a new field. `init` creates per-worker scratch state.
    pub fn map_lines<W, I, F>(&self, axis: Axis, init: I, kernel: F) -> Result<Self>
    where
        I: Fn() -> W + Sync + Send,
        F: Fn(&mut W, usize, &[T], &mut [T]) -> Result<()> + Sync + Send,
    {
        self.map_lines_with(axis, None, init, |w, idx, line, _aux, out| {
            kernel(w, idx, line, out)
        })
    }

    /// Like [`map_lines`](Self::map_lines) but also hands the kernel the
    /// matching line of `aux` (an empty slice when `aux` is `None`).
    pub fn map_lines_with<W, I, F>(
        &self,
        axis: Axis,
        aux: Option<&Self>,
        init: I,
        kernel: F,
    ) -> Result<Self>
    where
        I: Fn() -> W + Sync + Send,
        F: Fn(&mut W, usize, &[T], &[T], &mut [T]) -> Result<()> + Sync + Send,
    {
        if let Some(a) = aux {
            self.check_shape(a)?;
        }
        let len = self.grid.len(axis);
        let empty: &[T] = &[];
        match axis {
            Axis::Second => {
                let mut out = vec![T::zero(); self.values.len()];
                out.par_chunks_mut(len)
                    .zip(self.values.par_chunks(len))
                    .enumerate()
                    .try_for_each_init(&init, |w, (idx, (o, line))| {
                        let aux_line = aux.map_or(empty, |a| &a.values[idx * len..(idx + 1) * len]);
                        kernel(w, idx, line, aux_line, o)
                    })?;
                Ok(Self {
                    grid: self.grid,
                    values: out,
                })
            }
            Axis::First => {
                let t_in = transpose(&self.values, self.grid.n1, self.grid.n2);
                let t_aux = aux.map(|a| transpose(&a.values, self.grid.n1, self.grid.n2));
                let mut t_out = vec![T::zero(); self.values.len()];
                t_out
                    .par_chunks_mut(len)
                    .zip(t_in.par_chunks(len))
                    .enumerate()
                    .try_for_each_init(&init, |w, (idx, (o, line))| {
                        let aux_line = t_aux
                            .as_deref()
                            .map_or(empty, |a| &a[idx * len..(idx + 1) * len]);
                        kernel(w, idx, line, aux_line, o)
                    })?;
                Ok(Self {
                    grid: self.grid,
                    values: transpose(&t_out, self.grid.n2, self.grid.n1),
                })
            }
        }
    }
}

/// Transposes a row-major `rows x cols` matrix.
fn transpose<T: Copy + Default>(src: &[T], rows: usize, cols: usize) -> Vec<T> {
    const BLOCK: usize = 32;
    let mut dst = vec![T::default(); src.len()];
    for rb in (0..rows).step_by(BLOCK) {
        for cb in (0..cols).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(rows) {
                for c in cb..(cb + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
    dst
}

/// On-disk encoding of a snapshot, chosen from the file extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotFormat {
    Text,
    Binary,
}

impl SnapshotFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("txt") => Ok(Self::Text),
            Some("bin") => Ok(Self::Binary),
            other => Err(Error::Snapshot(format!(
                "unknown snapshot extension {other:?}; use .txt or .bin"
            ))),
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Self::Text => "txt",
            Self::Binary => "bin",
        }
    }
}

fn snapshot_header<T: Real>(grid: &PhaseGrid<T>, time: f64) -> String {
    format!(
        "{} {} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}\n",
        grid.n1,
        grid.n2,
        grid.lo1.as_f64(),
        grid.hi1.as_f64(),
        grid.lo2.as_f64(),
        grid.hi2.as_f64(),
        time
    )
}

/// Writes `n1 n2 lo1 hi1 lo2 hi2 time` followed by the row-major values.
pub fn write_snapshot<T: Real>(path: &Path, field: &ScalarField<T>, time: f64) -> Result<()> {
    let format = SnapshotFormat::from_path(path)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(snapshot_header(field.grid(), time).as_bytes())?;
    match format {
        SnapshotFormat::Text => {
            for v in field.values() {
                writeln!(w, "{:.16e}", v.as_f64())?;
            }
        }
        SnapshotFormat::Binary => {
            for v in field.values() {
                w.write_all(&v.as_f64().to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`]; returns the field and its time.
pub fn read_snapshot(path: &Path) -> Result<(ScalarField<f64>, f64)> {
    let format = SnapshotFormat::from_path(path)?;
    let mut r = BufReader::new(File::open(path)?);
    let mut header = String::new();
    r.read_line(&mut header)?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 7 {
        return Err(Error::Snapshot(format!(
            "header has {} fields, expected 7",
            parts.len()
        )));
    }
    let parse_usize = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::Snapshot(format!("bad count {s:?}: {e}")))
    };
    let parse_f64 = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::Snapshot(format!("bad number {s:?}: {e}")))
    };
    let n1 = parse_usize(parts[0])?;
    let n2 = parse_usize(parts[1])?;
    let bounds = [
        parse_f64(parts[2])?,
        parse_f64(parts[3])?,
        parse_f64(parts[4])?,
        parse_f64(parts[5])?,
    ];
    let time = parse_f64(parts[6])?;
    let grid = PhaseGrid::new(n1, n2, bounds)?;
    let count = grid.num_nodes();
    let values = match format {
        SnapshotFormat::Text => {
            let mut values = Vec::with_capacity(count);
            for line in r.lines() {
                let line = line?;
                let t = line.trim();
                if !t.is_empty() {
                    values.push(parse_f64(t)?);
                }
            }
            values
        }
        SnapshotFormat::Binary => {
            let mut bytes = Vec::new();
            r.read_to_end(&mut bytes)?;
            if bytes.len() != count * 8 {
                return Err(Error::Snapshot(format!(
                    "expected {} bytes of data, found {}",
                    count * 8,
                    bytes.len()
                )));
            }
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect()
        }
    };
    Ok((ScalarField::from_values(grid, values)?, time))
}
