//! Grids over node-partitioned domains and real functions sampled on them.
//!
//! The line is split by the singular nodes of a velocity field into
//! non-communicating segments. Each segment carries a uniform cell-centered
//! grid: the first and last points sit half a step away from the segment
//! endpoints, so singular drifts are never evaluated at a node, and the
//! midpoint quadrature weight is exactly the step.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// One segment `[a, b]` with its cell-centered points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentGrid {
    a: f64,
    b: f64,
    points: Vec<f64>,
}

impl SegmentGrid {
    /// Uniform cell-centered grid: `n` cells, points at `a + (j+1/2)h`.
    pub fn cell_centered(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::domain("interval", format!("need finite a < b, got [{a}, {b}]")));
        }
        if n == 0 {
            return Err(Error::domain("grid_points", "need at least one cell"));
        }
        let h = (b - a) / n as f64;
        let points = (0..n).map(|j| a + (j as f64 + 0.5) * h).collect();
        Ok(SegmentGrid { a, b, points })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / self.points.len() as f64
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        let scale = (self.b - self.a).abs().max(1.0);
        self.points.len() == other.points.len()
            && (self.a - other.a).abs() <= 1e-9 * scale
            && (self.b - other.b).abs() <= 1e-9 * scale
    }
}

/// Ordered, non-overlapping segments covering the computational domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Partition {
    segments: Vec<SegmentGrid>,
}

impl Partition {
    pub fn new(segments: Vec<SegmentGrid>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::domain("partition", "no segments"));
        }
        for w in segments.windows(2) {
            if w[1].a < w[0].b - 1e-12 * (w[0].b - w[0].a).abs() {
                return Err(Error::domain(
                    "partition",
                    format!("segments overlap: [{}, {}] then [{}, {}]", w[0].a, w[0].b, w[1].a, w[1].b),
                ));
            }
        }
        Ok(Partition { segments })
    }

    /// Single segment `[a, b]` with `n` cells.
    pub fn single(a: f64, b: f64, n: usize) -> Result<Self> {
        Ok(Partition { segments: vec![SegmentGrid::cell_centered(a, b, n)?] })
    }

    /// Partition `[-x_max, x_max]` by interior nodes, `n_per_segment` cells each.
    /// Nodes outside `(-x_max, x_max)` are rejected.
    pub fn from_nodes(nodes: &[f64], x_max: f64, n_per_segment: usize) -> Result<Self> {
        if !(x_max.is_finite() && x_max > 0.0) {
            return Err(Error::domain("x_max", format!("must be positive, got {x_max}")));
        }
        let mut cuts = vec![-x_max];
        for &x in nodes {
            if x <= -x_max || x >= x_max {
                return Err(Error::domain("nodes", format!("node {x} outside (-{x_max}, {x_max})")));
            }
            cuts.push(x);
        }
        cuts.push(x_max);
        let mut segments = Vec::with_capacity(cuts.len() - 1);
        for w in cuts.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::domain("nodes", "nodes must be strictly increasing"));
            }
            segments.push(SegmentGrid::cell_centered(w[0], w[1], n_per_segment)?);
        }
        Partition::new(segments)
    }

    pub fn segments(&self) -> &[SegmentGrid] {
        &self.segments
    }

    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn total_points(&self) -> usize {
        self.segments.iter().map(|s| s.len()).sum()
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        self.segments.len() == other.segments.len()
            && self.segments.iter().zip(&other.segments).all(|(a, b)| a.approx_eq(b))
    }
}

/// A real function sampled on a [`Partition`], with midpoint quadrature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFunction {
    partition: Partition,
    values: Vec<Vec<f64>>,
}

impl GridFunction {
    pub fn from_values(partition: Partition, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != partition.n_segments()
            || values.iter().zip(partition.segments()).any(|(v, s)| v.len() != s.len())
        {
            return Err(Error::GridMismatch("values do not match partition layout".into()));
        }
        Ok(GridFunction { partition, values })
    }

    pub fn sample(partition: &Partition, f: impl Fn(f64) -> f64) -> Self {
        let values = partition
            .segments()
            .iter()
            .map(|s| s.points().iter().map(|&x| f(x)).collect())
            .collect();
        GridFunction { partition: partition.clone(), values }
    }

    pub fn zeros(partition: &Partition) -> Self {
        GridFunction::sample(partition, |_| 0.0)
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.values
    }

    pub fn segment(&self, k: usize) -> (&SegmentGrid, &[f64]) {
        (&self.partition.segments()[k], &self.values[k])
    }

    /// Iterate `(x, value)` over all segments.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.partition
            .segments()
            .iter()
            .zip(&self.values)
            .flat_map(|(s, v)| s.points().iter().copied().zip(v.iter().copied()))
    }

    /// Midpoint-rule integral over everything.
    pub fn integrate(&self) -> f64 {
        self.segment_masses().iter().sum()
    }

    /// Midpoint-rule mass per segment.
    pub fn segment_masses(&self) -> Vec<f64> {
        self.partition
            .segments()
            .iter()
            .zip(&self.values)
            .map(|(s, v)| s.step() * v.iter().sum::<f64>())
            .collect()
    }

    /// Integral of `weight(x) * self(x)`.
    pub fn integrate_weighted(&self, weight: impl Fn(f64) -> f64) -> f64 {
        self.partition
            .segments()
            .iter()
            .zip(&self.values)
            .map(|(s, v)| s.step() * s.points().iter().zip(v).map(|(&x, &f)| weight(x) * f).sum::<f64>())
            .sum()
    }

    /// Scale so the total integral is one.
    pub fn normalize(&mut self) -> Result<()> {
        let mass = self.integrate();
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::numerical("normalize", format!("total mass {mass}")));
        }
        for v in &mut self.values {
            for f in v {
                *f /= mass;
            }
        }
        Ok(())
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    /// Check pdf admissibility: nonnegative samples and unit mass.
    pub fn is_pdf(&self, tol: f64) -> bool {
        self.min_value() >= -tol && (self.integrate() - 1.0).abs() <= tol
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let values = self
            .partition
            .segments()
            .iter()
            .zip(&self.values)
            .map(|(s, v)| s.points().iter().zip(v).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        GridFunction { partition: self.partition.clone(), values }
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        if !self.partition.approx_eq(&other.partition) {
            return Err(Error::GridMismatch("zip_with on different partitions".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        Ok(GridFunction { partition: self.partition.clone(), values })
    }

    /// Write as CSV, one `x,value` table per segment, blank line between segments.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        for (k, (seg, vals)) in self.partition.segments().iter().zip(&self.values).enumerate() {
            if k > 0 {
                writeln!(w)?;
            }
            writeln!(w, "x,value")?;
            for (&x, &v) in seg.points().iter().zip(vals) {
                writeln!(w, "{x:.17e},{v:.17e}")?;
            }
        }
        Ok(())
    }

    /// Read back the format produced by [`GridFunction::write_csv`].
    ///
    /// Segment endpoints are reconstructed from the cell-centered layout
    /// (`a = x0 - h/2`, `b = xn + h/2`); a single-point segment is rejected
    /// since its endpoints are not recoverable.
    pub fn read_csv(r: impl BufRead) -> Result<Self> {
        let mut segments = Vec::new();
        let mut values = Vec::new();
        let mut xs: Vec<f64> = Vec::new();
        let mut vs: Vec<f64> = Vec::new();
        let mut expect_header = true;

        let mut flush = |xs: &mut Vec<f64>, vs: &mut Vec<f64>| -> Result<()> {
            if xs.is_empty() {
                return Ok(());
            }
            if xs.len() < 2 {
                return Err(Error::Config("csv segment needs at least two points".into()));
            }
            let h = xs[1] - xs[0];
            if h <= 0.0 {
                return Err(Error::Config("csv x column must be increasing".into()));
            }
            segments.push(SegmentGrid {
                a: xs[0] - 0.5 * h,
                b: xs[xs.len() - 1] + 0.5 * h,
                points: std::mem::take(xs),
            });
            values.push(std::mem::take(vs));
            Ok(())
        };

        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                flush(&mut xs, &mut vs)?;
                expect_header = true;
                continue;
            }
            if expect_header {
                if line != "x,value" {
                    return Err(Error::Config(format!("expected `x,value` header, got {line:?}")));
                }
                expect_header = false;
                continue;
            }
            let (xs_str, vs_str) = line
                .split_once(',')
                .ok_or_else(|| Error::Config(format!("bad csv row {line:?}")))?;
            let x: f64 = xs_str.trim().parse().map_err(|e| Error::Config(format!("bad x {xs_str:?}: {e}")))?;
            let v: f64 = vs_str.trim().parse().map_err(|e| Error::Config(format!("bad value {vs_str:?}: {e}")))?;
            xs.push(x);
            vs.push(v);
        }
        flush(&mut xs, &mut vs)?;
        if segments.is_empty() {
            return Err(Error::Config("empty grid csv".into()));
        }
        Ok(GridFunction { partition: Partition::new(segments)?, values })
    }
}

/// Generic reader for the numeric CSV tables this crate emits (one header
/// line, float columns). Blank lines are skipped, so it also accepts the
/// segment-separated [`GridFunction::write_csv`] layout.
pub fn read_table_csv(r: impl BufRead) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = r.lines();
    let header = loop {
        match lines.next() {
            Some(line) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
            None => return Err(Error::Config("empty csv".into())),
        }
    };
    let columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line == header {
            continue; // segment separator or repeated header
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad cell {s:?}: {e}"))))
            .collect::<Result<_>>()?;
        if row.len() != columns.len() {
            return Err(Error::Config(format!(
                "row has {} cells, header has {} columns",
                row.len(),
                columns.len()
            )));
        }
        rows.push(row);
    }
    Ok((columns, rows))
}

/// `L^1` distance between two functions on the same partition.
pub fn l1_distance(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    if !f.partition().approx_eq(g.partition()) {
        return Err(Error::GridMismatch("l1_distance on different partitions".into()));
    }
    Ok(f
        .partition()
        .segments()
        .iter()
        .zip(f.values().iter().zip(g.values()))
        .map(|(s, (a, b))| s.step() * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .sum())
}

/// Central second-order first derivative, one-sided second-order at the ends.
pub fn derivative(points: &[f64], values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let h = points[1] - points[0];
    let mut out = vec![0.0; n];
    if n < 3 {
        let d = (values[n - 1] - values[0]) / (points[n - 1] - points[0]);
        out.fill(d);
        return out;
    }
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    for j in 1..n - 1 {
        out[j] = (values[j + 1] - values[j - 1]) / (2.0 * h);
    }
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    out
}

/// Central second-order second derivative, one-sided second-order at the ends.
pub fn second_derivative(points: &[f64], values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let h = points[1] - points[0];
    let h2 = h * h;
    let mut out = vec![0.0; n];
    if n < 4 {
        if n == 3 {
            let d = (values[2] - 2.0 * values[1] + values[0]) / h2;
            out.fill(d);
        }
        return out;
    }
    out[0] = (2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]) / h2;
    for j in 1..n - 1 {
        out[j] = (values[j + 1] - 2.0 * values[j] + values[j - 1]) / h2;
    }
    out[n - 1] = (2.0 * values[n - 1] - 5.0 * values[n - 2] + 4.0 * values[n - 3] - values[n - 4]) / h2;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_centered_layout() {
        let g = SegmentGrid::cell_centered(0.0, 1.0, 4).unwrap();
        assert_eq!(g.points(), &[0.125, 0.375, 0.625, 0.875]);
        assert!((g.step() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn midpoint_quadrature_is_exact_for_linear() {
        let p = Partition::single(-1.0, 3.0, 57).unwrap();
        let f = GridFunction::sample(&p, |x| 2.0 * x + 1.0);
        // integral of 2x+1 over [-1,3] = 8 + 4 = 12
        assert!((f.integrate() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn partition_from_nodes_splits_domain() {
        let p = Partition::from_nodes(&[-1.0, 1.0], 12.0, 100).unwrap();
        assert_eq!(p.n_segments(), 3);
        assert_eq!(p.segments()[1].a(), -1.0);
        assert_eq!(p.segments()[1].b(), 1.0);
        assert!(Partition::from_nodes(&[13.0], 12.0, 10).is_err());
        assert!(Partition::from_nodes(&[1.0, -1.0], 12.0, 10).is_err());
    }

    #[test]
    fn l1_of_disjoint_unit_masses_is_two() {
        let p = Partition::single(0.0, 1.0, 200).unwrap();
        let mut f = GridFunction::sample(&p, |x| if x < 0.5 { 1.0 } else { 0.0 });
        let mut g = GridFunction::sample(&p, |x| if x >= 0.5 { 1.0 } else { 0.0 });
        f.normalize().unwrap();
        g.normalize().unwrap();
        assert!((l1_distance(&f, &g).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(l1_distance(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn l1_rejects_mismatched_grids() {
        let p = Partition::single(0.0, 1.0, 10).unwrap();
        let q = Partition::single(0.0, 1.0, 11).unwrap();
        let f = GridFunction::zeros(&p);
        let g = GridFunction::zeros(&q);
        assert!(l1_distance(&f, &g).is_err());
    }

    #[test]
    fn derivatives_are_second_order() {
        let p = Partition::single(0.0, 1.0, 50).unwrap();
        let seg = &p.segments()[0];
        let vals: Vec<f64> = seg.points().iter().map(|&x| x * x * x).collect();
        let d1 = derivative(seg.points(), &vals);
        let d2 = second_derivative(seg.points(), &vals);
        for (j, &x) in seg.points().iter().enumerate() {
            assert!((d1[j] - 3.0 * x * x).abs() < 5e-3, "d1 at {x}");
            assert!((d2[j] - 6.0 * x).abs() < 5e-2, "d2 at {x}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let p = Partition::from_nodes(&[0.0], 2.0, 8).unwrap();
        let f = GridFunction::sample(&p, |x| x.exp());
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = GridFunction::read_csv(&buf[..]).unwrap();
        assert!(f.partition().approx_eq(g.partition()));
        for ((_, a), (_, b)) in f.iter().zip(g.iter()) {
            assert_eq!(a, b);
        }
    }
}
