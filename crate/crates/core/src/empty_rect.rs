//! Maximal empty rectangles of a 0/1 occupancy matrix.
//!
//! The sweep visits rows top to bottom and, within a row, columns left to
//! right. At every cell it keeps a *staircase*: the set of widest empty
//! rectangles having that cell as their bottom-right corner, one per distinct
//! height. A step that cannot continue into the next column is right-maximal;
//! it is reported when it also cannot grow downward.
//!
//! Every maximal empty rectangle is reported exactly once, keyed by its
//! bottom-right corner and height.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::placement::OccupancyMatrix;

/// Cell bound above which the brute-force oracle refuses to run.
pub const BRUTE_FORCE_CELL_LIMIT: usize = 400;

/// Inclusive bounds; `top >= bottom` because row 1 is the bottom row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MaximalEmptyRect {
    pub top: u32,
    pub bottom: u32,
    pub left: u32,
    pub right: u32,
}

impl MaximalEmptyRect {
    pub fn height(&self) -> u32 {
        self.top - self.bottom + 1
    }

    pub fn width(&self) -> u32 {
        self.right - self.left + 1
    }

    pub fn contains(&self, row: u32, col: u32) -> bool {
        (self.bottom..=self.top).contains(&row) && (self.left..=self.right).contains(&col)
    }

    pub fn covers(&self, other: &MaximalEmptyRect) -> bool {
        self.bottom <= other.bottom
            && other.top <= self.top
            && self.left <= other.left
            && other.right <= self.right
    }

    /// Whether a `w`-column by `h`-row block fits inside.
    pub fn fits(&self, w: u32, h: u32, allow_rotation: bool) -> bool {
        (self.width() >= w && self.height() >= h)
            || (allow_rotation && self.width() >= h && self.height() >= w)
    }
}

/// One corner of a staircase: the widest empty rectangle of `height` rows
/// ending at the anchor, starting at column `left`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub height: u32,
    pub left: u32,
}

/// All overlapping empty rectangles with `anchor` as bottom-right corner.
///
/// Steps are ordered by increasing `left`; heights increase along with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Staircase {
    pub anchor: (u32, u32),
    pub steps: Vec<Step>,
}

/// Reusable buffers for the sweep.
#[derive(Debug, Default)]
pub struct RectFinder {
    // Empty run length going up from the current row, per column.
    up: Vec<u32>,
    stack: Vec<Step>,
    // Occupied-cell prefix counts for the row below the current one.
    below: Vec<u32>,
}

impl RectFinder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Calls `visit` on every maximal empty rectangle until it breaks.
    pub fn for_each<F>(&mut self, m: &OccupancyMatrix, mut visit: F) -> ControlFlow<()>
    where
        F: FnMut(&MaximalEmptyRect) -> ControlFlow<()>,
    {
        let cols = m.cols();
        self.reset(cols);
        for row in (1..=m.rows()).rev() {
            self.advance_row(m, row);
            self.stack.clear();
            // Column cols + 1 is a sentinel of height 0 that flushes the stack.
            for col in 1..=cols + 1 {
                let h = if col <= cols {
                    self.up[col as usize - 1]
                } else {
                    0
                };
                let mut left = col;
                while let Some(&top) = self.stack.last() {
                    if top.height < h {
                        break;
                    }
                    self.stack.pop();
                    left = top.left;
                    // Equal height continues into this column: not right-maximal.
                    if top.height > h && self.blocked_below(row, top.left, col - 1) {
                        visit(&MaximalEmptyRect {
                            top: row + top.height - 1,
                            bottom: row,
                            left: top.left,
                            right: col - 1,
                        })?;
                    }
                }
                if h > 0 {
                    self.stack.push(Step { height: h, left });
                }
            }
        }
        ControlFlow::Continue(())
    }

    /// Calls `visit` with the staircase of every cell, in sweep order.
    pub fn for_each_staircase<F>(&mut self, m: &OccupancyMatrix, mut visit: F)
    where
        F: FnMut(Staircase),
    {
        let cols = m.cols();
        self.reset(cols);
        for row in (1..=m.rows()).rev() {
            self.advance_row(m, row);
            self.stack.clear();
            for col in 1..=cols {
                let h = self.up[col as usize - 1];
                let mut left = col;
                while let Some(top) = self.stack.last() {
                    if top.height < h {
                        break;
                    }
                    left = top.left;
                    self.stack.pop();
                }
                if h > 0 {
                    self.stack.push(Step { height: h, left });
                }
                visit(Staircase {
                    anchor: (row, col),
                    steps: self.stack.clone(),
                });
            }
        }
    }

    fn reset(&mut self, cols: u32) {
        self.up.clear();
        self.up.resize(cols as usize, 0);
        self.below.clear();
        self.below.resize(cols as usize + 1, 0);
        self.stack.clear();
    }

    fn advance_row(&mut self, m: &OccupancyMatrix, row: u32) {
        for col in 1..=m.cols() {
            let u = &mut self.up[col as usize - 1];
            *u = if m.get(row, col) { 0 } else { *u + 1 };
        }
        if row > 1 {
            for col in 1..=m.cols() {
                self.below[col as usize] =
                    self.below[col as usize - 1] + u32::from(m.get(row - 1, col));
            }
        }
    }

    #[inline]
    fn blocked_below(&self, row: u32, left: u32, right: u32) -> bool {
        row == 1 || self.below[right as usize] > self.below[left as usize - 1]
    }
}

/// Every maximal empty rectangle of `m`.
pub fn maximal_empty_rects(m: &OccupancyMatrix) -> BTreeSet<MaximalEmptyRect> {
    let mut out = BTreeSet::new();
    let _ = RectFinder::new().for_each(m, |r| {
        out.insert(*r);
        ControlFlow::Continue(())
    });
    out
}

/// The staircase anchored at every cell, rows top to bottom, columns left to
/// right.
pub fn staircases(m: &OccupancyMatrix) -> Vec<Staircase> {
    let mut out = Vec::with_capacity((m.rows() * m.cols()) as usize);
    RectFinder::new().for_each_staircase(m, |s| out.push(s));
    out
}

/// Reference enumeration: test every candidate rectangle for emptiness, then
/// keep those no other empty rectangle covers.
///
/// An empty rectangle is covered by a strictly larger empty one exactly when
/// it can grow by one row or column in some direction while staying empty,
/// so that is the coverage test used.
pub fn brute_force_maximal_rects(m: &OccupancyMatrix) -> Result<BTreeSet<MaximalEmptyRect>> {
    brute_force_maximal_rects_bounded(m, BRUTE_FORCE_CELL_LIMIT)
}

pub fn brute_force_maximal_rects_bounded(
    m: &OccupancyMatrix,
    limit: usize,
) -> Result<BTreeSet<MaximalEmptyRect>> {
    let cells = (m.rows() * m.cols()) as usize;
    if cells > limit {
        return Err(Error::OracleTooLarge { cells, limit });
    }
    let rows = m.rows() as usize;
    let cols = m.cols() as usize;
    // prefix[r][c] = occupied cells in rows 1..=r, cols 1..=c
    let mut prefix = vec![vec![0u32; cols + 1]; rows + 1];
    for r in 1..=rows {
        for c in 1..=cols {
            prefix[r][c] = prefix[r - 1][c] + prefix[r][c - 1] - prefix[r - 1][c - 1]
                + u32::from(m.get(r as u32, c as u32));
        }
    }
    let occupied = |b: usize, t: usize, l: usize, r: usize| {
        prefix[t][r] + prefix[b - 1][l - 1] - prefix[b - 1][r] - prefix[t][l - 1]
    };
    let empty = |b: usize, t: usize, l: usize, r: usize| {
        b >= 1 && l >= 1 && t <= rows && r <= cols && occupied(b, t, l, r) == 0
    };

    let mut out = BTreeSet::new();
    for b in 1..=rows {
        for t in b..=rows {
            for l in 1..=cols {
                for r in l..=cols {
                    if !empty(b, t, l, r) {
                        continue;
                    }
                    let grows = empty(b, t + 1, l, r)
                        || empty(b - 1, t, l, r)
                        || empty(b, t, l - 1, r)
                        || empty(b, t, l, r + 1);
                    if !grows {
                        out.insert(MaximalEmptyRect {
                            top: t as u32,
                            bottom: b as u32,
                            left: l as u32,
                            right: r as u32,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Whether any rectangle holds a `w`-column by `h`-row block.
pub fn can_accommodate<'a, I>(rects: I, w: u32, h: u32, allow_rotation: bool) -> bool
where
    I: IntoIterator<Item = &'a MaximalEmptyRect>,
{
    rects.into_iter().any(|r| r.fits(w, h, allow_rotation))
}
