//! Uniform tensor grids for residual sweeps.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One grid axis: uniform samples on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Axis> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::BadRange(format!(
                "need finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        if count < 2 {
            return Err(Error::BadRange(format!(
                "need at least 2 samples, got {count}"
            )));
        }
        Ok(Axis { lo, hi, count })
    }

    /// i-th sample, strictly increasing in i.
    #[inline]
    pub fn sample(&self, i: usize) -> f64 {
        debug_assert!(i < self.count);
        self.lo + (self.hi - self.lo) * (i as f64) / ((self.count - 1) as f64)
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / ((self.count - 1) as f64)
    }
}

/// Uniform tensor-product grid over any number of axes.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Grid> {
        if axes.is_empty() {
            return Err(Error::BadRange("grid needs at least one axis".into()));
        }
        Ok(Grid { axes })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Total number of points (product of per-axis counts).
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major iteration over all grid points (last axis fastest).
    pub fn points(&self) -> GridPoints<'_> {
        GridPoints {
            grid: self,
            index: alloc::vec![0; self.dim()],
            done: false,
        }
    }

    /// Coordinates of the point with the given multi-index.
    pub fn coords(&self, index: &[usize]) -> Vec<f64> {
        index
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.sample(i))
            .collect()
    }
}

/// Iterator over grid points in row-major order.
pub struct GridPoints<'a> {
    grid: &'a Grid,
    index: Vec<usize>,
    done: bool,
}

impl Iterator for GridPoints<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.done {
            return None;
        }
        let coords = self.grid.coords(&self.index);
        // advance multi-index, last axis fastest
        let mut axis = self.grid.dim();
        loop {
            if axis == 0 {
                self.done = true;
                break;
            }
            axis -= 1;
            self.index[axis] += 1;
            if self.index[axis] < self.grid.axes[axis].count {
                break;
            }
            self.index[axis] = 0;
        }
        Some(coords)
    }
}

/// Build a uniform tensor grid from per-axis ranges and sample counts.
pub fn make_grid(ranges: &[[f64; 2]], counts: &[usize]) -> Result<Grid> {
    if ranges.len() != counts.len() {
        return Err(Error::DimensionMismatch {
            expected: ranges.len(),
            got: counts.len(),
        });
    }
    let axes = ranges
        .iter()
        .zip(counts)
        .map(|(r, &c)| Axis::new(r[0], r[1], c))
        .collect::<Result<Vec<_>>>()?;
    Grid::new(axes)
}
