use crate::dtw::{ConstraintMask, Pos, WarpingPath};
use crate::error::{Error, Result};

use super::direction::{Direction, DirectionVector};

/// Per-cell counts of training paths by incoming direction.
///
/// Cell `(k, l)` holds the sum of the one-hot encodings of every path step
/// landing on `(k, l)`. Path starts contribute nothing, so `(0, 0)` stays zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarpingMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<DirectionVector>,
}

impl WarpingMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        WarpingMatrix {
            rows,
            cols,
            cells: vec![DirectionVector::ZERO; rows * cols],
        }
    }

    /// Accumulates every path into a fresh `rows x cols` matrix.
    pub fn build<'a, I>(paths: I, rows: usize, cols: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a WarpingPath>,
    {
        let mut m = WarpingMatrix::zeros(rows, cols);
        for path in paths {
            m.add_path(path)?;
        }
        Ok(m)
    }

    pub(crate) fn from_cells(rows: usize, cols: usize, cells: Vec<DirectionVector>) -> Self {
        debug_assert_eq!(cells.len(), rows * cols);
        WarpingMatrix { rows, cols, cells }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn cells(&self) -> &[DirectionVector] {
        &self.cells
    }

    fn check(&self, pos: Pos) -> Result<usize> {
        if pos.row < self.rows && pos.col < self.cols {
            Ok(pos.row * self.cols + pos.col)
        } else {
            Err(Error::PathOutOfBounds {
                row: pos.row,
                col: pos.col,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn get(&self, pos: Pos) -> Result<DirectionVector> {
        self.check(pos).map(|k| self.cells[k])
    }

    /// Cell contents, or zero outside the lattice.
    pub fn get_or_zero(&self, pos: Pos) -> DirectionVector {
        self.check(pos)
            .map_or(DirectionVector::ZERO, |k| self.cells[k])
    }

    /// Number of training paths passing through `pos`.
    pub fn count_paths(&self, pos: Pos) -> Result<u32> {
        if pos.row < self.rows && pos.col < self.cols {
            Ok(self.cells[pos.row * self.cols + pos.col].total())
        } else {
            Err(Error::IndexOutOfRange {
                index: pos.row * self.cols.max(1) + pos.col,
                len: self.cells.len(),
            })
        }
    }

    /// Sum of every counter in the matrix.
    pub fn total_mass(&self) -> u64 {
        self.cells.iter().map(|c| u64::from(c.total())).sum()
    }

    /// Adds a path's encoded steps in place.
    pub fn add_path(&mut self, path: &WarpingPath) -> Result<()> {
        path.check_bounds(self.rows, self.cols)?;
        for i in 1..path.len() {
            if let Some(dir) = path.direction(i) {
                let k = self.check(path.steps()[i])?;
                self.cells[k].0[dir.index()] += 1;
            }
        }
        Ok(())
    }

    /// Subtracts a path's encoded steps in place, flooring every counter at
    /// zero. Returns whether any counter was clamped.
    pub fn subtract_path(&mut self, path: &WarpingPath) -> Result<bool> {
        path.check_bounds(self.rows, self.cols)?;
        let mut clamped = false;
        for i in 1..path.len() {
            if let Some(dir) = path.direction(i) {
                let k = self.check(path.steps()[i])?;
                let slot = &mut self.cells[k].0[dir.index()];
                if *slot == 0 {
                    clamped = true;
                } else {
                    *slot -= 1;
                }
            }
        }
        Ok(clamped)
    }

    /// Counter for one direction at `pos`, zero outside the lattice.
    pub(crate) fn directional(&self, pos: Pos, dir: Direction) -> u32 {
        self.get_or_zero(pos).get(dir)
    }

    pub(crate) fn total_at(&self, row: usize, col: usize) -> u32 {
        self.cells[row * self.cols + col].total()
    }
}

/// Binary mask of the cells any training path visited. `(0, 0)` is always
/// allowed since every path starts there.
pub fn derive_mask(matrix: &WarpingMatrix) -> ConstraintMask {
    let (rows, cols) = matrix.dims();
    let mut mask = ConstraintMask::empty(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            if matrix.total_at(r, c) > 0 {
                mask.set(r, c, true);
            }
        }
    }
    if rows > 0 && cols > 0 {
        mask.set(0, 0, true);
    }
    mask
}

/// Re-derives the mask entries for the cells on `path` only.
pub(crate) fn refresh_mask_along(
    mask: &mut ConstraintMask,
    matrix: &WarpingMatrix,
    path: &WarpingPath,
) {
    for p in path.steps() {
        let allowed = (p.row == 0 && p.col == 0) || matrix.total_at(p.row, p.col) > 0;
        mask.set(p.row, p.col, allowed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::direction::encode_step;

    pub(crate) fn five_paths() -> Vec<WarpingPath> {
        vec![
            WarpingPath::from_pairs(&[(0, 0), (1, 1), (2, 2), (3, 3)]),
            WarpingPath::from_pairs(&[(0, 0), (0, 1), (1, 2), (2, 3), (3, 3)]),
            WarpingPath::from_pairs(&[(0, 0), (1, 1), (2, 1), (3, 2), (3, 3)]),
            WarpingPath::from_pairs(&[(0, 0), (1, 1), (2, 1), (3, 2), (3, 3)]),
            WarpingPath::from_pairs(&[(0, 0), (0, 1), (1, 2), (2, 3), (3, 3)]),
        ]
    }

    fn at(m: &WarpingMatrix, r: usize, c: usize) -> (u32, u32, u32) {
        let v = m.get(Pos::new(r, c)).unwrap();
        (v.right(), v.diag(), v.up())
    }

    #[test]
    fn reproduces_published_matrix() {
        let m = WarpingMatrix::build(&five_paths(), 4, 4).unwrap();
        // Printed top row first; our row 3 is the reference top row.
        let reference = [
            [(0, 0, 0), (0, 0, 0), (0, 2, 0), (2, 1, 2)],
            [(0, 0, 0), (0, 0, 2), (0, 1, 0), (0, 2, 0)],
            [(0, 0, 0), (0, 3, 0), (0, 2, 0), (0, 0, 0)],
            [(0, 0, 0), (2, 0, 0), (0, 0, 0), (0, 0, 0)],
        ];
        for (k, row) in reference.iter().enumerate() {
            for (c, &cell) in row.iter().enumerate() {
                assert_eq!(at(&m, 3 - k, c), cell, "cell ({}, {c})", 3 - k);
            }
        }
        assert_eq!(m.count_paths(Pos::new(3, 3)).unwrap(), 5);
        assert_eq!(m.count_paths(Pos::new(0, 0)).unwrap(), 0);
    }

    #[test]
    fn empty_and_single_path() {
        let empty = WarpingMatrix::build(std::iter::empty(), 3, 3).unwrap();
        assert_eq!(empty.total_mass(), 0);
        assert_eq!(empty.count_paths(Pos::new(2, 1)).unwrap(), 0);

        let m = WarpingMatrix::build([&WarpingPath::diagonal(3)], 3, 3).unwrap();
        assert_eq!(at(&m, 1, 1), (0, 1, 0));
        assert_eq!(at(&m, 2, 2), (0, 1, 0));
        assert_eq!(m.total_mass(), 2);
    }

    #[test]
    fn out_of_bounds_path_leaves_matrix_untouched() {
        let mut m = WarpingMatrix::zeros(2, 2);
        let p = WarpingPath::from_pairs(&[(0, 0), (1, 1), (2, 2)]);
        assert!(matches!(m.add_path(&p), Err(Error::PathOutOfBounds { .. })));
        assert_eq!(m.total_mass(), 0);
        assert!(matches!(
            m.count_paths(Pos::new(2, 0)),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn mask_from_reference_matrix() {
        let m = WarpingMatrix::build(&five_paths(), 4, 4).unwrap();
        let mask = derive_mask(&m);
        let expected = [
            (0, 0),
            (0, 1),
            (1, 1),
            (1, 2),
            (2, 1),
            (2, 2),
            (2, 3),
            (3, 2),
            (3, 3),
        ];
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(mask.allows(r, c), expected.contains(&(r, c)), "({r}, {c})");
            }
        }
        let zero = derive_mask(&WarpingMatrix::zeros(3, 3));
        assert_eq!(zero.popcount(), 1);
        assert!(zero.allows(0, 0));
        let diag = derive_mask(&WarpingMatrix::build([&WarpingPath::diagonal(4)], 4, 4).unwrap());
        assert_eq!(diag.popcount(), 4);
        assert!((0..4).all(|i| diag.allows(i, i)));
    }

    #[test]
    fn subtraction_clamps_at_zero() {
        let mut m = WarpingMatrix::build(&five_paths(), 4, 4).unwrap();
        let clamped = m.subtract_path(&WarpingPath::diagonal(4)).unwrap();
        assert!(!clamped);
        assert_eq!(at(&m, 1, 1), (0, 2, 0));
        assert_eq!(at(&m, 2, 2), (0, 0, 0));
        assert_eq!(at(&m, 3, 3), (2, 0, 2));

        let mut z = WarpingMatrix::zeros(3, 3);
        assert!(z.subtract_path(&WarpingPath::diagonal(3)).unwrap());
        assert_eq!(z, WarpingMatrix::zeros(3, 3));
    }

    #[test]
    fn mass_is_conserved() {
        let paths = five_paths();
        let m = WarpingMatrix::build(&paths, 4, 4).unwrap();
        let steps: usize = paths.iter().map(|p| p.len() - 1).sum();
        assert_eq!(m.total_mass(), steps as u64);
        // every encoded step lands in exactly one slot
        let total: u32 = paths
            .iter()
            .flat_map(|p| (1..p.len()).map(move |i| encode_step(p, i).unwrap().total()))
            .sum();
        assert_eq!(u64::from(total), m.total_mass());
    }
}
