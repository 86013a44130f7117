use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dtw::{Pos, WarpingPath};
use crate::error::{Error, Result};

/// Move into a path position. Counter slots are ordered right, diagonal, up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Column advanced, row unchanged.
    Right,
    /// Both advanced.
    Diag,
    /// Row advanced, column unchanged.
    Up,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Right, Direction::Diag, Direction::Up];

    pub const fn index(self) -> usize {
        match self {
            Direction::Right => 0,
            Direction::Diag => 1,
            Direction::Up => 2,
        }
    }

    pub fn between(prev: Pos, cur: Pos) -> Option<Direction> {
        let dr = cur.row.checked_sub(prev.row)?;
        let dc = cur.col.checked_sub(prev.col)?;
        match (dr, dc) {
            (0, 1) => Some(Direction::Right),
            (1, 1) => Some(Direction::Diag),
            (1, 0) => Some(Direction::Up),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Right => "→",
            Direction::Diag => "↗",
            Direction::Up => "↑",
        })
    }
}

/// Counts per incoming direction, `[right, diag, up]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DirectionVector(pub [u32; 3]);

impl DirectionVector {
    pub const ZERO: DirectionVector = DirectionVector([0, 0, 0]);

    pub fn one_hot(dir: Direction) -> Self {
        let mut v = [0; 3];
        v[dir.index()] = 1;
        DirectionVector(v)
    }

    pub fn right(&self) -> u32 {
        self.0[0]
    }

    pub fn diag(&self) -> u32 {
        self.0[1]
    }

    pub fn up(&self) -> u32 {
        self.0[2]
    }

    pub fn get(&self, dir: Direction) -> u32 {
        self.0[dir.index()]
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dot(&self, other: &DirectionVector) -> u32 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }
}

impl From<(u32, u32, u32)> for DirectionVector {
    fn from((r, d, u): (u32, u32, u32)) -> Self {
        DirectionVector([r, d, u])
    }
}

/// One-hot encoding of the move into step `i` of `path`. Moves that are not a
/// single right, diagonal or up step encode as all zeros. Step 0 has no
/// predecessor and is rejected.
pub fn encode_step(path: &WarpingPath, i: usize) -> Result<DirectionVector> {
    if i == 0 || i >= path.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: path.len(),
        });
    }
    Ok(path
        .direction(i)
        .map_or(DirectionVector::ZERO, DirectionVector::one_hot))
}
