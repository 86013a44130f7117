//! Dynamic time warping over a (possibly masked) alignment lattice.
//!
//! Rows index the first series, columns the second; both are 0-based. A path
//! moves from `(0, 0)` to `(m - 1, n - 1)` by steps right `(0, +1)`, diagonal
//! `(+1, +1)` or up `(+1, 0)`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Direction;
use crate::series::TimeSeries;

/// Largest series length [`brute_force_dtw`] will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 10;

/// A lattice position. Serialized as `[row, col]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Pos {
    pub row: usize,
    pub col: usize,
}

impl Pos {
    pub const fn new(row: usize, col: usize) -> Self {
        Pos { row, col }
    }
}

impl From<(usize, usize)> for Pos {
    fn from((row, col): (usize, usize)) -> Self {
        Pos { row, col }
    }
}

impl From<Pos> for (usize, usize) {
    fn from(p: Pos) -> Self {
        (p.row, p.col)
    }
}

/// Monotone lattice path from `(0, 0)` to the far corner.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WarpingPath(Vec<Pos>);

impl WarpingPath {
    /// Wraps positions without checking them; see [`WarpingPath::validate`].
    pub fn from_positions(steps: Vec<Pos>) -> Self {
        WarpingPath(steps)
    }

    pub fn from_pairs(pairs: &[(usize, usize)]) -> Self {
        WarpingPath(pairs.iter().copied().map(Pos::from).collect())
    }

    /// The main diagonal of an `n x n` lattice.
    pub fn diagonal(n: usize) -> Self {
        WarpingPath((0..n).map(|i| Pos::new(i, i)).collect())
    }

    pub fn steps(&self) -> &[Pos] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Pos> {
        self.0.last().copied()
    }

    /// Direction of the move into step `i`; `None` for the start step.
    pub fn direction(&self, i: usize) -> Option<Direction> {
        if i == 0 || i >= self.0.len() {
            return None;
        }
        Direction::between(self.0[i - 1], self.0[i])
    }

    /// Structural check against an `rows x cols` lattice.
    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        let steps = &self.0;
        let (first, last) = match (steps.first(), steps.last()) {
            (Some(f), Some(l)) => (*f, *l),
            _ => return Err(Error::InvalidPath("empty path".into())),
        };
        if let Some(p) = steps.iter().find(|p| p.row >= rows || p.col >= cols) {
            return Err(Error::PathOutOfBounds {
                row: p.row,
                col: p.col,
                rows,
                cols,
            });
        }
        if first != Pos::new(0, 0) {
            return Err(Error::InvalidPath(format!(
                "starts at ({}, {})",
                first.row, first.col
            )));
        }
        if last != Pos::new(rows - 1, cols - 1) {
            return Err(Error::InvalidPath(format!(
                "ends at ({}, {}), expected ({}, {})",
                last.row,
                last.col,
                rows - 1,
                cols - 1
            )));
        }
        for (i, w) in steps.windows(2).enumerate() {
            if Direction::between(w[0], w[1]).is_none() {
                return Err(Error::InvalidPath(format!(
                    "illegal move into step {}",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Checks every position lies inside the lattice, without endpoint checks.
    pub fn check_bounds(&self, rows: usize, cols: usize) -> Result<()> {
        match self.0.iter().find(|p| p.row >= rows || p.col >= cols) {
            Some(p) => Err(Error::PathOutOfBounds {
                row: p.row,
                col: p.col,
                rows,
                cols,
            }),
            None => Ok(()),
        }
    }
}

/// Binary lattice mask: `true` cells may be visited.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintMask {
    rows: usize,
    cols: usize,
    allowed: Vec<bool>,
}

impl ConstraintMask {
    pub fn full(rows: usize, cols: usize) -> Self {
        ConstraintMask {
            rows,
            cols,
            allowed: vec![true; rows * cols],
        }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        ConstraintMask {
            rows,
            cols,
            allowed: vec![false; rows * cols],
        }
    }

    /// Builds a mask from 0/1 rows. Any non-zero entry counts as allowed.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::MalformedDocument("ragged mask rows".into()));
        }
        let allowed = rows.iter().flatten().map(|&v| v != 0).collect();
        Ok(ConstraintMask {
            rows: n_rows,
            cols: n_cols,
            allowed,
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.allowed
            .chunks(self.cols.max(1))
            .take(self.rows)
            .map(|r| r.iter().map(|&b| u8::from(b)).collect())
            .collect()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn allows(&self, row: usize, col: usize) -> bool {
        row < self.rows && col < self.cols && self.allowed[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, allowed: bool) {
        self.allowed[row * self.cols + col] = allowed;
    }

    /// Number of allowed cells.
    pub fn popcount(&self) -> usize {
        self.allowed.iter().filter(|&&b| b).count()
    }

    /// Copy cropped or zero-extended to `rows x cols`.
    pub fn resized(&self, rows: usize, cols: usize) -> Self {
        let mut out = ConstraintMask::empty(rows, cols);
        for r in 0..rows.min(self.rows) {
            for c in 0..cols.min(self.cols) {
                out.allowed[r * cols + c] = self.allowed[r * self.cols + c];
            }
        }
        out
    }

    /// First and last allowed column of `row`, inclusive.
    fn row_span(&self, row: usize) -> Option<(usize, usize)> {
        let cells = &self.allowed[row * self.cols..(row + 1) * self.cols];
        let lo = cells.iter().position(|&b| b)?;
        let hi = cells.iter().rposition(|&b| b)?;
        Some((lo, hi))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult {
    /// Minimum path weight, `f64::INFINITY` when no allowed path exists.
    pub distance: f64,
    pub path: Option<WarpingPath>,
    pub cells_evaluated: usize,
}

impl DtwResult {
    pub fn is_feasible(&self) -> bool {
        self.path.is_some()
    }

    fn infeasible(cells_evaluated: usize) -> Self {
        DtwResult {
            distance: f64::INFINITY,
            path: None,
            cells_evaluated,
        }
    }
}

#[inline]
pub fn pointwise_distance(x: f64, y: f64) -> f64 {
    (x - y).abs()
}

/// Cumulative costs stored only over each row's allowed column span.
struct SpanTable {
    spans: Vec<Option<(usize, usize)>>,
    offsets: Vec<usize>,
    costs: Vec<f64>,
}

impl SpanTable {
    fn new(spans: Vec<Option<(usize, usize)>>) -> Self {
        let mut offsets = Vec::with_capacity(spans.len());
        let mut total = 0;
        for span in &spans {
            offsets.push(total);
            if let Some((lo, hi)) = span {
                total += hi - lo + 1;
            }
        }
        SpanTable {
            spans,
            offsets,
            costs: vec![f64::INFINITY; total],
        }
    }

    #[inline]
    fn index(&self, row: usize, col: usize) -> Option<usize> {
        match self.spans[row] {
            Some((lo, hi)) if col >= lo && col <= hi => Some(self.offsets[row] + col - lo),
            _ => None,
        }
    }

    #[inline]
    fn get(&self, row: usize, col: usize) -> f64 {
        self.index(row, col)
            .map_or(f64::INFINITY, |k| self.costs[k])
    }
}

/// DTW between `a` (rows) and `b` (columns), optionally restricted to the
/// cells a mask allows. Forbidden cells are unreachable; if no allowed path
/// joins the corners the result is infeasible.
///
/// Ties in the backtracking step prefer the diagonal predecessor, then the
/// one to the left, then the one below.
pub fn dtw(a: &TimeSeries, b: &TimeSeries, mask: Option<&ConstraintMask>) -> Result<DtwResult> {
    a.validate()?;
    b.validate()?;
    let (m, n) = (a.len(), b.len());
    if let Some(mask) = mask {
        if mask.dims() != (m, n) {
            return Err(Error::MaskDimensionMismatch {
                rows: m,
                cols: n,
                mask_rows: mask.rows,
                mask_cols: mask.cols,
            });
        }
    }

    let spans = match mask {
        Some(mask) => (0..m).map(|r| mask.row_span(r)).collect(),
        None => vec![Some((0, n - 1)); m],
    };
    let mut table = SpanTable::new(spans);
    let mut cells_evaluated = 0;

    for i in 0..m {
        let Some((lo, hi)) = table.spans[i] else {
            continue;
        };
        let x = a.values[i];
        for j in lo..=hi {
            if let Some(mask) = mask {
                if !mask.allows(i, j) {
                    continue;
                }
            }
            cells_evaluated += 1;
            let cost = pointwise_distance(x, b.values[j]);
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 {
                    table.get(i - 1, j - 1)
                } else {
                    f64::INFINITY
                };
                let left = if j > 0 {
                    table.get(i, j - 1)
                } else {
                    f64::INFINITY
                };
                let down = if i > 0 {
                    table.get(i - 1, j)
                } else {
                    f64::INFINITY
                };
                diag.min(left).min(down)
            };
            if best.is_finite() {
                let k = table.offsets[i] + j - lo;
                table.costs[k] = best + cost;
            }
        }
    }

    let distance = table.get(m - 1, n - 1);
    if !distance.is_finite() {
        return Ok(DtwResult::infeasible(cells_evaluated));
    }

    let mut steps = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (m - 1, n - 1);
    steps.push(Pos::new(i, j));
    while (i, j) != (0, 0) {
        let mut best = (f64::INFINITY, (i, j));
        // Candidate order is the tie-break order: strict `<` keeps the first.
        let candidates = [
            (i > 0 && j > 0).then(|| (i - 1, j - 1)),
            (j > 0).then(|| (i, j - 1)),
            (i > 0).then(|| (i - 1, j)),
        ];
        for (r, c) in candidates.into_iter().flatten() {
            let v = table.get(r, c);
            if v < best.0 {
                best = (v, (r, c));
            }
        }
        debug_assert!(best.0.is_finite(), "backtracking left the feasible region");
        (i, j) = best.1;
        steps.push(Pos::new(i, j));
    }
    steps.reverse();

    Ok(DtwResult {
        distance,
        path: Some(WarpingPath(steps)),
        cells_evaluated,
    })
}

/// Rank used when comparing equally cheap paths: lower wins.
fn tie_rank(d: Direction) -> u8 {
    match d {
        Direction::Diag => 0,
        Direction::Right => 1,
        Direction::Up => 2,
    }
}

/// Compares two paths ending at the same cell by their moves read backwards
/// from the end, which is the order [`dtw`]'s backtracking commits to them.
fn backward_order(a: &[Pos], b: &[Pos]) -> Ordering {
    let moves = |p: &[Pos]| -> Vec<u8> {
        p.windows(2)
            .rev()
            .map(|w| Direction::between(w[0], w[1]).map_or(3, tie_rank))
            .collect()
    };
    moves(a).cmp(&moves(b))
}

/// Exhaustive DTW: enumerates every allowed path and keeps the cheapest,
/// breaking ties the same way [`dtw`] does. Only for tiny inputs.
pub fn brute_force_dtw(a: &TimeSeries, b: &TimeSeries) -> Result<DtwResult> {
    a.validate()?;
    b.validate()?;
    let (m, n) = (a.len(), b.len());
    if m > BRUTE_FORCE_LIMIT || n > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge {
            rows: m,
            cols: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    struct Search<'a> {
        a: &'a [f64],
        b: &'a [f64],
        stack: Vec<Pos>,
        best: Option<(f64, Vec<Pos>)>,
        visited: usize,
    }

    impl Search<'_> {
        fn walk(&mut self, pos: Pos, weight: f64) {
            // Same summation order as the DP: start cell first, then forward.
            let weight = weight + pointwise_distance(self.a[pos.row], self.b[pos.col]);
            self.stack.push(pos);
            self.visited += 1;
            let (m, n) = (self.a.len(), self.b.len());
            if pos == Pos::new(m - 1, n - 1) {
                let better = match &self.best {
                    None => true,
                    Some((w, p)) => {
                        weight < *w || (weight == *w && backward_order(&self.stack, p).is_lt())
                    }
                };
                if better {
                    self.best = Some((weight, self.stack.clone()));
                }
            } else {
                if pos.col + 1 < n {
                    self.walk(Pos::new(pos.row, pos.col + 1), weight);
                }
                if pos.row + 1 < m && pos.col + 1 < n {
                    self.walk(Pos::new(pos.row + 1, pos.col + 1), weight);
                }
                if pos.row + 1 < m {
                    self.walk(Pos::new(pos.row + 1, pos.col), weight);
                }
            }
            self.stack.pop();
        }
    }

    let mut search = Search {
        a: &a.values,
        b: &b.values,
        stack: Vec::with_capacity(m + n),
        best: None,
        visited: 0,
    };
    search.walk(Pos::new(0, 0), 0.0);
    let (distance, steps) = search.best.expect("a lattice always has at least one path");
    Ok(DtwResult {
        distance,
        path: Some(WarpingPath(steps)),
        cells_evaluated: (m * n).min(search.visited),
    })
}

/// Distance divided by the number of positions on the warping path.
pub fn normalized_distance(result: &DtwResult) -> Result<f64> {
    match &result.path {
        Some(path) if result.distance.is_finite() => Ok(result.distance / path.len() as f64),
        _ => Err(Error::InfeasibleResult),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ts(values: &[f64]) -> TimeSeries {
        TimeSeries::new("t", values.to_vec())
    }

    fn pairs(path: &WarpingPath) -> Vec<(usize, usize)> {
        path.steps().iter().map(|&p| p.into()).collect()
    }

    #[test]
    fn pointwise_examples() {
        assert_eq!(pointwise_distance(3.0, 1.5), 1.5);
        assert_eq!(pointwise_distance(2.0, 2.0), 0.0);
        assert_eq!(pointwise_distance(-1.0, 2.0), 3.0);
    }

    #[test]
    fn identical_series_follow_diagonal() {
        let r = dtw(&ts(&[0.0, 1.0, 2.0]), &ts(&[0.0, 1.0, 2.0]), None).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(
            pairs(r.path.as_ref().unwrap()),
            vec![(0, 0), (1, 1), (2, 2)]
        );
        assert_eq!(r.cells_evaluated, 9);
    }

    #[test]
    fn elastic_match_of_repeated_sample() {
        let r = dtw(&ts(&[0.0, 2.0]), &ts(&[0.0, 0.0, 2.0]), None).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(
            pairs(r.path.as_ref().unwrap()),
            vec![(0, 0), (0, 1), (1, 2)]
        );
    }

    #[test]
    fn brute_force_small_cases() {
        let r = brute_force_dtw(&ts(&[0.0]), &ts(&[5.0])).unwrap();
        assert_eq!(r.distance, 5.0);
        assert_eq!(pairs(r.path.as_ref().unwrap()), vec![(0, 0)]);
        let r = brute_force_dtw(&ts(&[0.0, 1.0]), &ts(&[0.0, 1.0])).unwrap();
        assert_eq!(r.distance, 0.0);
    }

    #[test]
    fn brute_force_rejects_large_inputs() {
        let long = ts(&[0.0; 11]);
        assert!(matches!(
            brute_force_dtw(&long, &ts(&[1.0])),
            Err(Error::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn brute_force_matches_dp_on_length_five() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..10.0)).collect();
        let b: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..10.0)).collect();
        let dp = dtw(&ts(&a), &ts(&b), None).unwrap();
        let bf = brute_force_dtw(&ts(&a), &ts(&b)).unwrap();
        assert!((dp.distance - bf.distance).abs() <= 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            dtw(&ts(&[]), &ts(&[1.0]), None),
            Err(Error::EmptySeries(_))
        ));
        assert!(matches!(
            dtw(&ts(&[1.0, f64::NAN]), &ts(&[1.0]), None),
            Err(Error::NonFiniteSample { index: 1, .. })
        ));
        let mask = ConstraintMask::full(3, 3);
        assert!(matches!(
            dtw(&ts(&[1.0, 2.0]), &ts(&[1.0, 2.0]), Some(&mask)),
            Err(Error::MaskDimensionMismatch { .. })
        ));
    }

    #[test]
    fn forbidden_corner_is_infeasible() {
        let mut mask = ConstraintMask::full(3, 3);
        mask.set(2, 2, false);
        let r = dtw(&ts(&[0.0, 1.0, 2.0]), &ts(&[0.0, 1.0, 2.0]), Some(&mask)).unwrap();
        assert!(r.distance.is_infinite());
        assert!(r.path.is_none());
        assert_eq!(normalized_distance(&r), Err(Error::InfeasibleResult));
    }

    #[test]
    fn mask_diverts_path_around_forbidden_cells() {
        let mut mask = ConstraintMask::full(3, 3);
        mask.set(1, 1, false);
        let r = dtw(&ts(&[0.0, 1.0, 2.0]), &ts(&[0.0, 1.0, 2.0]), Some(&mask)).unwrap();
        let path = r.path.unwrap();
        assert!(path.steps().iter().all(|p| mask.allows(p.row, p.col)));
        assert!(r.distance > 0.0);
        assert_eq!(r.cells_evaluated, 8);
    }

    #[test]
    fn normalization_examples() {
        let r = DtwResult {
            distance: 10.0,
            path: Some(WarpingPath::diagonal(5)),
            cells_evaluated: 25,
        };
        assert_eq!(normalized_distance(&r).unwrap(), 2.0);
        let same = dtw(&ts(&[3.0, 1.0, 4.0, 1.0]), &ts(&[3.0, 1.0, 4.0, 1.0]), None).unwrap();
        assert_eq!(normalized_distance(&same).unwrap(), 0.0);
    }

    #[test]
    fn path_validation_catches_bad_moves() {
        let ok = WarpingPath::from_pairs(&[(0, 0), (0, 1), (1, 2)]);
        assert!(ok.validate(2, 3).is_ok());
        let jump = WarpingPath::from_pairs(&[(0, 0), (0, 2), (1, 2)]);
        assert!(matches!(jump.validate(2, 3), Err(Error::InvalidPath(_))));
        let short = WarpingPath::from_pairs(&[(0, 0), (1, 1)]);
        assert!(matches!(short.validate(2, 3), Err(Error::InvalidPath(_))));
        let outside = WarpingPath::from_pairs(&[(0, 0), (2, 1)]);
        assert!(matches!(
            outside.validate(2, 3),
            Err(Error::PathOutOfBounds { .. })
        ));
    }

    #[test]
    fn mask_resize_crops_and_pads() {
        let mask = ConstraintMask::full(2, 2);
        let grown = mask.resized(2, 3);
        assert!(grown.allows(1, 1));
        assert!(!grown.allows(1, 2));
        assert_eq!(grown.popcount(), 4);
        assert_eq!(mask.resized(1, 1).popcount(), 1);
    }

    fn series_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, 1..=7)
    }

    proptest! {
        #[test]
        fn distance_is_symmetric(a in series_strategy(), b in series_strategy()) {
            let ab = dtw(&ts(&a), &ts(&b), None).unwrap();
            let ba = dtw(&ts(&b), &ts(&a), None).unwrap();
            prop_assert!((ab.distance - ba.distance).abs() <= 1e-9);
        }

        #[test]
        fn returned_paths_are_well_formed(a in series_strategy(), b in series_strategy()) {
            let r = dtw(&ts(&a), &ts(&b), None).unwrap();
            let path = r.path.unwrap();
            prop_assert!(path.validate(a.len(), b.len()).is_ok());
            let unique: std::collections::HashSet<_> = path.steps().iter().collect();
            prop_assert_eq!(unique.len(), path.len());
        }

        #[test]
        fn self_distance_is_zero_on_diagonal(a in series_strategy()) {
            let r = dtw(&ts(&a), &ts(&a), None).unwrap();
            prop_assert_eq!(r.distance, 0.0);
            prop_assert_eq!(r.path.unwrap(), WarpingPath::diagonal(a.len()));
        }

        #[test]
        fn masking_never_lowers_distance(
            a in series_strategy(),
            b in series_strategy(),
            bits in prop::collection::vec(any::<bool>(), 49),
        ) {
            let mut mask = ConstraintMask::empty(a.len(), b.len());
            for i in 0..a.len() {
                for j in 0..b.len() {
                    mask.set(i, j, bits[i * 7 + j]);
                }
            }
            let free = dtw(&ts(&a), &ts(&b), None).unwrap();
            let constrained = dtw(&ts(&a), &ts(&b), Some(&mask)).unwrap();
            prop_assert!(constrained.distance >= free.distance);
            prop_assert!(constrained.cells_evaluated <= mask.popcount());
            if let Some(path) = constrained.path {
                prop_assert!(path.steps().iter().all(|p| mask.allows(p.row, p.col)));
            }
        }
    }
}
