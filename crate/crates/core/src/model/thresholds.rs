use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dtw::{Pos, WarpingPath};
use crate::error::{Error, Result};

use super::direction::Direction;
use super::matrix::WarpingMatrix;
use super::support::{part_support, Aggregator};

/// Which quantity is minimised over the training parts before dividing by the
/// end cell's path count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// `min(supp) / count_paths`
    #[default]
    MinSuppOverCount,
    /// `min(rsupp) / count_paths`
    MinRsuppOverCount,
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdMode::MinSuppOverCount => "min_supp_over_count",
            ThresholdMode::MinRsuppOverCount => "min_rsupp_over_count",
        })
    }
}

impl FromStr for ThresholdMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min_supp_over_count" => Ok(ThresholdMode::MinSuppOverCount),
            "min_rsupp_over_count" => Ok(ThresholdMode::MinRsuppOverCount),
            other => Err(format!("unknown threshold mode `{other}`")),
        }
    }
}

/// Per cell and incoming direction, the lowest relative support any training
/// path part ending there reached. `None` marks cells/directions no training
/// part ended in.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTensor {
    rows: usize,
    cols: usize,
    values: Vec<[Option<f64>; 3]>,
}

impl ThresholdTensor {
    pub fn no_data(rows: usize, cols: usize) -> Self {
        ThresholdTensor {
            rows,
            cols,
            values: vec![[None; 3]; rows * cols],
        }
    }

    pub(crate) fn from_values(rows: usize, cols: usize, values: Vec<[Option<f64>; 3]>) -> Self {
        debug_assert_eq!(values.len(), rows * cols);
        ThresholdTensor { rows, cols, values }
    }

    pub fn build(
        paths: &[WarpingPath],
        matrix: &WarpingMatrix,
        window: usize,
        aggregator: Aggregator,
        mode: ThresholdMode,
    ) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidWindow);
        }
        if let Some(shortest) = paths.iter().map(WarpingPath::len).min() {
            if window >= shortest {
                return Err(Error::WindowTooLarge { window, shortest });
            }
        }
        let (rows, cols) = matrix.dims();
        for p in paths {
            p.check_bounds(rows, cols)?;
        }
        let mut t = ThresholdTensor::no_data(rows, cols);
        t.rebuild(paths, matrix, window, aggregator, mode);
        Ok(t)
    }

    /// Recomputes every entry in place against the current matrix.
    pub(crate) fn rebuild(
        &mut self,
        paths: &[WarpingPath],
        matrix: &WarpingMatrix,
        window: usize,
        aggregator: Aggregator,
        mode: ThresholdMode,
    ) {
        debug_assert_eq!(matrix.dims(), (self.rows, self.cols));
        self.values.fill([None; 3]);
        // First pass keeps the raw minimum support per slot.
        for path in paths {
            for end in 1..path.len() {
                let Some(dir) = path.direction(end) else {
                    continue;
                };
                let pos = path.steps()[end];
                let s = f64::from(part_support(path, end, window, matrix, aggregator));
                let slot = &mut self.values[pos.row * self.cols + pos.col][dir.index()];
                *slot = Some(slot.map_or(s, |cur| cur.min(s)));
            }
        }
        for (k, cell) in self.values.iter_mut().enumerate() {
            let count = f64::from(matrix.total_at(k / self.cols, k % self.cols));
            for slot in cell.iter_mut() {
                *slot = match *slot {
                    Some(_) if count == 0.0 => None,
                    Some(min_supp) => Some(match mode {
                        ThresholdMode::MinSuppOverCount => min_supp / count,
                        ThresholdMode::MinRsuppOverCount => min_supp / count / count,
                    }),
                    None => None,
                };
            }
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, pos: Pos, dir: Direction) -> Option<f64> {
        if pos.row < self.rows && pos.col < self.cols {
            self.values[pos.row * self.cols + pos.col][dir.index()]
        } else {
            None
        }
    }

    pub fn values(&self) -> &[[Option<f64>; 3]] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five_paths() -> Vec<WarpingPath> {
        vec![
            WarpingPath::from_pairs(&[(0, 0), (1, 1), (2, 2), (3, 3)]),
            WarpingPath::from_pairs(&[(0, 0), (0, 1), (1, 2), (2, 3), (3, 3)]),
            WarpingPath::from_pairs(&[(0, 0), (1, 1), (2, 1), (3, 2), (3, 3)]),
            WarpingPath::from_pairs(&[(0, 0), (1, 1), (2, 1), (3, 2), (3, 3)]),
            WarpingPath::from_pairs(&[(0, 0), (0, 1), (1, 2), (2, 3), (3, 3)]),
        ]
    }

    /// Hand enumeration over the reference paths with window 2: the two
    /// copies of path 3 enter (3, 3) moving right; their window covers (3, 2)
    /// entered diagonally (2 paths) and (2, 1) entered upward (2 paths).
    #[test]
    fn reference_paths_window_two() {
        let paths = five_paths();
        let m = WarpingMatrix::build(&paths, 4, 4).unwrap();
        let t = ThresholdTensor::build(&paths, &m, 2, Aggregator::Min, ThresholdMode::default())
            .unwrap();
        assert_eq!(t.get(Pos::new(3, 3), Direction::Right), Some(2.0 / 5.0));
        // paths 2 and 5 enter (3, 3) moving up after two diagonal steps with count 2
        assert_eq!(t.get(Pos::new(3, 3), Direction::Up), Some(2.0 / 5.0));
        // path 1 enters diagonally; window (2,2) diag=1, (1,1) diag=3
        assert_eq!(t.get(Pos::new(3, 3), Direction::Diag), Some(1.0 / 5.0));
        assert_eq!(t.get(Pos::new(0, 0), Direction::Diag), None);
        assert_eq!(t.get(Pos::new(3, 0), Direction::Up), None);
        assert_eq!(t.get(Pos::new(2, 2), Direction::Right), None);

        let alt = ThresholdTensor::build(
            &paths,
            &m,
            2,
            Aggregator::Min,
            ThresholdMode::MinRsuppOverCount,
        )
        .unwrap();
        assert_eq!(
            alt.get(Pos::new(3, 3), Direction::Right),
            Some(2.0 / 5.0 / 5.0)
        );
    }

    #[test]
    fn singleton_training_set_gives_own_rsupp() {
        let p = WarpingPath::from_pairs(&[(0, 0), (0, 1), (1, 2), (2, 2), (3, 3)]);
        let m = WarpingMatrix::build([&p], 4, 4).unwrap();
        let t = ThresholdTensor::build(
            std::slice::from_ref(&p),
            &m,
            2,
            Aggregator::Min,
            ThresholdMode::default(),
        )
        .unwrap();
        for end in 1..p.len() {
            let dir = p.direction(end).unwrap();
            let own = f64::from(part_support(&p, end, 2, &m, Aggregator::Min))
                / f64::from(m.count_paths(p.steps()[end]).unwrap());
            assert_eq!(t.get(p.steps()[end], dir), Some(own));
        }
    }

    #[test]
    fn window_must_fit_shortest_path() {
        let paths = five_paths();
        let m = WarpingMatrix::build(&paths, 4, 4).unwrap();
        assert!(matches!(
            ThresholdTensor::build(&paths, &m, 4, Aggregator::Min, ThresholdMode::default()),
            Err(Error::WindowTooLarge {
                window: 4,
                shortest: 4
            })
        ));
        assert!(matches!(
            ThresholdTensor::build(&paths, &m, 0, Aggregator::Min, ThresholdMode::default()),
            Err(Error::InvalidWindow)
        ));
    }
}
