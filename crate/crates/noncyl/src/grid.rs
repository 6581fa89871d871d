//! Cell-centered Cartesian lattices over an axis-aligned box.
//!
//! Nodes sit at cell centers `lo[d] + (i[d] + 1/2) h`, so every node is
//! strictly inside the box and the nearest box face is at least `h/2` away.

use crate::{Error, Result};

/// Spatial lattice: axis-aligned box discretized with uniform spacing `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    h: f64,
}

impl Grid {
    /// Builds the lattice. `h` must be positive and divide every box extent
    /// (within a 1e-9 relative tolerance, to absorb decimal round-off).
    pub fn new(lo: &[f64], hi: &[f64], h: f64) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Grid("box corners must have equal, nonzero dimension".into()));
        }
        if !(h > 0.0) {
            return Err(Error::Grid(format!("grid spacing must be positive, got {h}")));
        }
        let mut shape = Vec::with_capacity(lo.len());
        for d in 0..lo.len() {
            let ext = hi[d] - lo[d];
            if !(ext > 0.0) {
                return Err(Error::Grid(format!("empty box extent on axis {d}")));
            }
            let m = (ext / h).round();
            if m < 1.0 || ((ext / h) - m).abs() > 1e-9 * m.max(1.0) {
                return Err(Error::Grid(format!(
                    "spacing {h} does not divide box extent {ext} on axis {d}"
                )));
            }
            shape.push(m as usize);
        }
        let mut strides = vec![1usize; shape.len()];
        for d in (0..shape.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * shape[d + 1];
        }
        Ok(Grid { lo: lo.to_vec(), hi: hi.to_vec(), shape, strides, h })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// Volume h^n of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    /// Decomposes a flat index into per-axis indices.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.dim()];
        for d in 0..self.dim() {
            idx[d] = flat / self.strides[d];
            flat %= self.strides[d];
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Writes the node-center coordinates of `flat` into `out`.
    pub fn node_into(&self, mut flat: usize, out: &mut [f64]) {
        for d in 0..self.dim() {
            let i = flat / self.strides[d];
            flat %= self.strides[d];
            out[d] = self.lo[d] + (i as f64 + 0.5) * self.h;
        }
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.node_into(flat, &mut out);
        out
    }

    /// Euclidean distance from a point to the nearest box face.
    pub fn face_distance(&self, x: &[f64]) -> f64 {
        let mut d = f64::INFINITY;
        for k in 0..self.dim() {
            d = d.min(x[k] - self.lo[k]).min(self.hi[k] - x[k]);
        }
        d
    }

    /// Iterates `(flat, idx)` pairs in row-major order without re-dividing.
    pub fn iter_nodes(&self) -> NodeIter<'_> {
        NodeIter { grid: self, flat: 0, idx: vec![0; self.dim()], done: self.len() == 0 }
    }
}

pub struct NodeIter<'a> {
    grid: &'a Grid,
    flat: usize,
    idx: Vec<usize>,
    done: bool,
}

impl<'a> Iterator for NodeIter<'a> {
    type Item = (usize, Vec<usize>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let out = (self.flat, self.idx.clone());
        self.flat += 1;
        // odometer increment, last axis fastest
        let mut d = self.grid.dim();
        loop {
            if d == 0 {
                self.done = true;
                break;
            }
            d -= 1;
            self.idx[d] += 1;
            if self.idx[d] < self.grid.shape[d] {
                break;
            }
            self.idx[d] = 0;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_coords() {
        let g = Grid::new(&[0.0, 0.0], &[1.0, 2.0], 0.5).unwrap();
        assert_eq!(g.shape(), &[2, 4]);
        assert_eq!(g.len(), 8);
        let x = g.node(0);
        assert_eq!(x, vec![0.25, 0.25]);
        let x = g.node(g.len() - 1);
        assert_eq!(x, vec![0.75, 1.75]);
    }

    #[test]
    fn ravel_roundtrip() {
        let g = Grid::new(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], 0.25).unwrap();
        for flat in 0..g.len() {
            assert_eq!(g.ravel(&g.unravel(flat)), flat);
        }
    }

    #[test]
    fn rejects_bad_spacing() {
        assert!(Grid::new(&[0.0], &[1.0], 0.3).is_err());
        assert!(Grid::new(&[0.0], &[1.0], -0.1).is_err());
        assert!(Grid::new(&[0.0], &[0.0], 0.1).is_err());
    }

    #[test]
    fn face_distance_center() {
        let g = Grid::new(&[0.0, 0.0], &[1.0, 1.0], 0.25).unwrap();
        assert!((g.face_distance(&[0.5, 0.5]) - 0.5).abs() < 1e-15);
        assert!((g.face_distance(&[0.125, 0.5]) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn node_iter_matches_unravel() {
        let g = Grid::new(&[0.0, 0.0], &[1.0, 1.0], 0.25).unwrap();
        for (flat, idx) in g.iter_nodes() {
            assert_eq!(idx, g.unravel(flat));
        }
        assert_eq!(g.iter_nodes().count(), g.len());
    }
}
