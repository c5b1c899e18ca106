use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportKind {
    RegularGrid,
    Scattered,
}

/// Positions `y_i` a probability map is defined over.
///
/// Positions are stored row-major as `len() x dim()`. A regular grid is
/// flattened with the first axis varying slowest, and point `i` sits at
/// `index_k * spacing` along each axis `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    kind: SupportKind,
    dim: usize,
    positions: Vec<f64>,
    spacing: Option<f64>,
    bounds: Vec<(f64, f64)>,
    grid_shape: Option<Vec<usize>>,
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=3).contains(&dim) {
        Ok(())
    } else {
        Err(Error::InvalidSupport(format!("dimension must be 1, 2 or 3, got {dim}")))
    }
}

impl Support {
    /// Regular grid with `shape[k]` points per axis, origin at zero.
    pub fn grid(shape: &[usize], spacing: f64) -> Result<Self> {
        check_dim(shape.len())?;
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidSupport(format!("spacing must be positive, got {spacing}")));
        }
        if shape.contains(&0) {
            return Err(Error::InvalidSupport(format!("empty grid axis in {shape:?}")));
        }
        let n: usize = shape.iter().product();
        let dim = shape.len();
        let mut positions = Vec::with_capacity(n * dim);
        for flat in 0..n {
            let mut rem = flat;
            let mut coords = vec![0.0; dim];
            for k in (0..dim).rev() {
                coords[k] = (rem % shape[k]) as f64 * spacing;
                rem /= shape[k];
            }
            positions.extend(coords);
        }
        let bounds = shape
            .iter()
            .map(|&s| (0.0, (s - 1) as f64 * spacing))
            .collect();
        Ok(Self {
            kind: SupportKind::RegularGrid,
            dim,
            positions,
            spacing: Some(spacing),
            bounds,
            grid_shape: Some(shape.to_vec()),
        })
    }

    pub fn grid_1d(n: usize, spacing: f64) -> Result<Self> {
        Self::grid(&[n], spacing)
    }

    /// Arbitrary points (row-major, `dim` coordinates each) inside `bounds`.
    pub fn scattered(dim: usize, points: Vec<f64>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        check_dim(dim)?;
        if points.is_empty() || !points.len().is_multiple_of(dim) {
            return Err(Error::InvalidSupport(format!(
                "{} coordinates do not form points of dimension {dim}",
                points.len()
            )));
        }
        if bounds.len() != dim {
            return Err(Error::InvalidSupport(format!(
                "{} bounds for dimension {dim}",
                bounds.len()
            )));
        }
        for (j, &v) in points.iter().enumerate() {
            let (lo, hi) = bounds[j % dim];
            if !v.is_finite() || v < lo || v > hi {
                return Err(Error::InvalidSupport(format!(
                    "coordinate {v} of point {} outside [{lo}, {hi}]",
                    j / dim
                )));
            }
        }
        Ok(Self {
            kind: SupportKind::Scattered,
            dim,
            positions: points,
            spacing: None,
            bounds,
            grid_shape: None,
        })
    }

    pub fn kind(&self) -> SupportKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    /// All positions, row-major.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn grid_shape(&self) -> Option<&[usize]> {
        self.grid_shape.as_deref()
    }

    /// Positions as a constant `[n, dim]` tensor on `tape`.
    pub fn positions_tensor(&self, tape: &Tape) -> Result<Tensor> {
        tape.constant(&[self.len(), self.dim], self.positions.clone())
    }

    /// Mean distance from each point to its nearest neighbour.
    pub fn mean_neighbor_distance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let total: f64 = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| squared_distance(self.position(i), self.position(j)))
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
            .sum();
        total / n as f64
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}
