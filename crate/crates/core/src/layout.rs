//! Target geometries: the `1 x n` line, zigzag foldings of the line into a
//! grid, and the space-efficient `Φ_w` family.
//!
//! Grids use a lower-left origin with `y` growing upward.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: i64,
    pub y: i64,
}

impl GridPoint {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    fn shifted(self, dx: i64, dy: i64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A rectangular array of trap sites with spacing `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub rows: usize,
    pub cols: usize,
    pub unit_distance_um: f64,
}

impl Architecture {
    pub fn new(rows: usize, cols: usize, unit_distance_um: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ParameterOutOfRange {
                name: "architecture",
                value: format!("{rows}x{cols}"),
            });
        }
        if !(unit_distance_um > 0.0 && unit_distance_um.is_finite()) {
            return Err(Error::ParameterOutOfRange {
                name: "unit_distance",
                value: unit_distance_um.to_string(),
            });
        }
        Ok(Self {
            rows,
            cols,
            unit_distance_um,
        })
    }

    pub fn contains(&self, p: GridPoint) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.cols && (p.y as usize) < self.rows
    }
}

/// Placement `q_i -> (i, 0)`.
pub fn linear_layout(n: usize) -> Result<Vec<GridPoint>> {
    if n < 2 {
        return Err(Error::InvalidCircuitSize { n });
    }
    Ok((0..n as i64).map(|i| GridPoint::new(i, 0)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZigzagRule {
    Injectivity,
    NeighboringPlacement,
    AlternatingDirection,
    Empty,
}

/// First point at which a path stops being a zigzag folding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ZigzagViolation {
    pub index: usize,
    pub rule: ZigzagRule,
}

impl fmt::Display for ZigzagViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = match self.rule {
            ZigzagRule::Injectivity => "point repeated",
            ZigzagRule::NeighboringPlacement => "not a unit step from its predecessor",
            ZigzagRule::AlternatingDirection => "step has the same orientation as the previous one",
            ZigzagRule::Empty => "empty path",
        };
        write!(f, "point {}: {rule}", self.index)
    }
}

fn is_horizontal(a: GridPoint, b: GridPoint) -> bool {
    a.y == b.y
}

/// Checks injectivity, unit steps and strict horizontal/vertical alternation,
/// point by point, reporting the first failure.
pub fn validate_zigzag(path: &[GridPoint]) -> Result<(), ZigzagViolation> {
    if path.is_empty() {
        return Err(ZigzagViolation {
            index: 0,
            rule: ZigzagRule::Empty,
        });
    }
    let mut seen = HashSet::with_capacity(path.len());
    for (i, &p) in path.iter().enumerate() {
        if !seen.insert(p) {
            return Err(ZigzagViolation {
                index: i,
                rule: ZigzagRule::Injectivity,
            });
        }
        if i >= 1 {
            let q = path[i - 1];
            if (p.x - q.x).abs() + (p.y - q.y).abs() != 1 {
                return Err(ZigzagViolation {
                    index: i,
                    rule: ZigzagRule::NeighboringPlacement,
                });
            }
        }
        if i >= 2 && is_horizontal(path[i - 2], path[i - 1]) == is_horizontal(path[i - 1], p) {
            return Err(ZigzagViolation {
                index: i,
                rule: ZigzagRule::AlternatingDirection,
            });
        }
    }
    Ok(())
}

/// An injective grid path with unit steps alternating horizontal/vertical;
/// logical position `i` of the line sits on `path[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GridPoint>", into = "Vec<GridPoint>")]
pub struct ZigzagFolding {
    path: Vec<GridPoint>,
}

impl ZigzagFolding {
    pub fn new(path: Vec<GridPoint>) -> Result<Self> {
        validate_zigzag(&path).map_err(Error::InvalidFolding)?;
        Ok(Self { path })
    }

    pub fn path(&self) -> &[GridPoint] {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }

    /// First `n` points. A prefix of a zigzag path is a zigzag path.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            path: self.path[..n.min(self.path.len())].to_vec(),
        }
    }

    /// Smallest `(rows, cols)` box anchored at the origin containing the path.
    pub fn bounding_dims(&self) -> (usize, usize) {
        let max_x = self.path.iter().map(|p| p.x).max().unwrap_or(0);
        let max_y = self.path.iter().map(|p| p.y).max().unwrap_or(0);
        ((max_y + 1) as usize, (max_x + 1) as usize)
    }

    /// Plain-text grid sketch: step numbers modulo 100 on visited sites,
    /// `.` on wasted ones. Top row printed first.
    pub fn ascii(&self, rows: usize, cols: usize) -> String {
        let mut grid = vec![vec![String::from(" ."); cols]; rows];
        for (i, p) in self.path.iter().enumerate() {
            if p.x >= 0 && p.y >= 0 && (p.y as usize) < rows && (p.x as usize) < cols {
                grid[p.y as usize][p.x as usize] = format!("{:>2}", i % 100);
            }
        }
        let mut out = String::new();
        for row in grid.iter().rev() {
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

impl TryFrom<Vec<GridPoint>> for ZigzagFolding {
    type Error = Error;

    fn try_from(path: Vec<GridPoint>) -> Result<Self> {
        Self::new(path)
    }
}

impl From<ZigzagFolding> for Vec<GridPoint> {
    fn from(f: ZigzagFolding) -> Self {
        f.path
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FoldingStats {
    pub w: usize,
    pub side: usize,
    pub visited: usize,
    pub wasted: usize,
}

/// `φ(w) = 2(w - 1)`, the closed form of `φ(1) = 0, φ(2) = 2,
/// φ(w + 2) = φ(w) + 4`.
pub fn wasted_points(w: usize) -> Result<usize> {
    if w < 1 {
        return Err(Error::ParameterOutOfRange {
            name: "w",
            value: w.to_string(),
        });
    }
    Ok(2 * (w - 1))
}

// The construction below builds each Φ_w walked from its inner core outward
// and reverses it at the end, so that the canonical orientation (start at the
// lower-left corner, first step up) comes out.

fn core_reversed(w: usize) -> Vec<GridPoint> {
    let pts: &[(i64, i64)] = match w {
        1 => &[(1, 0), (1, 1), (0, 1), (0, 0)],
        2 => &[
            (0, 3),
            (0, 2),
            (1, 2),
            (1, 3),
            (2, 3),
            (2, 2),
            (3, 2),
            (3, 1),
            (2, 1),
            (2, 0),
            (1, 0),
            (1, 1),
            (0, 1),
            (0, 0),
        ],
        _ => unreachable!("core exists for w = 1, 2 only"),
    };
    pts.iter().map(|&(x, y)| GridPoint::new(x, y)).collect()
}

/// Two-cell-wide ring around the inner `(s-4) x (s-4)` block of an `s x s`
/// grid. It starts at `(1, 2)`, next to the inner path's end at `(2, 2)`,
/// climbs the left strip, runs right along the top, descends the right strip
/// and returns left along the bottom to `(0, 0)`. The corners `(0, 2)`,
/// `(0, s-1)`, `(s-1, s-1)` and `(s-1, 0)` stay empty.
fn ring_reversed(s: i64) -> Vec<GridPoint> {
    let p = GridPoint::new;
    let mut out = Vec::with_capacity(4 * s as usize);
    out.push(p(1, 2));
    let mut y = 3;
    while y < s {
        out.push(p(1, y));
        if y < s - 1 {
            out.extend([p(0, y), p(0, y + 1), p(1, y + 1)]);
        }
        y += 2;
    }
    for x in 2..=s - 2 {
        if x % 2 == 0 {
            out.extend([p(x, s - 1), p(x, s - 2)]);
        } else {
            out.extend([p(x, s - 2), p(x, s - 1)]);
        }
    }
    out.push(p(s - 1, s - 2));
    let mut y = s - 3;
    while y >= 1 {
        out.extend([p(s - 1, y), p(s - 2, y), p(s - 2, y - 1)]);
        if y - 1 > 0 {
            out.push(p(s - 1, y - 1));
        }
        y -= 2;
    }
    for x in (0..=s - 3).rev() {
        if x % 2 == 1 {
            out.extend([p(x, 0), p(x, 1)]);
        } else {
            out.extend([p(x, 1), p(x, 0)]);
        }
    }
    out
}

fn phi_reversed(w: usize) -> Vec<GridPoint> {
    if w <= 2 {
        return core_reversed(w);
    }
    let mut path: Vec<GridPoint> = phi_reversed(w - 2)
        .into_iter()
        .map(|q| q.shifted(2, 2))
        .collect();
    path.extend(ring_reversed(2 * w as i64));
    path
}

/// `Φ_w` in a `2w x 2w` grid with its wasted-point count.
pub fn build_phi(w: usize) -> Result<(ZigzagFolding, FoldingStats)> {
    if w < 1 {
        return Err(Error::ParameterOutOfRange {
            name: "w",
            value: w.to_string(),
        });
    }
    let mut path = phi_reversed(w);
    path.reverse();
    let folding = ZigzagFolding::new(path)
        .map_err(|e| Error::Internal(format!("Φ_{w} construction broke: {e}")))?;
    let side = 2 * w;
    let visited = folding.len();
    let stats = FoldingStats {
        w,
        side,
        visited,
        wasted: side * side - visited,
    };
    Ok((folding, stats))
}

/// A folding sized for `n` qubits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldForN {
    pub n: usize,
    pub m: usize,
    pub side: usize,
    pub efficiency: f64,
    pub folding: ZigzagFolding,
}

/// `m = ceil(sqrt(n) / 2)`, computed exactly as the least `m` with `4m² >= n`.
fn half_side(n: usize) -> usize {
    let mut m = ((n as f64).sqrt() / 2.0).ceil() as usize;
    while m > 0 && 4 * (m - 1) * (m - 1) >= n {
        m -= 1;
    }
    while 4 * m * m < n {
        m += 1;
    }
    m
}

/// The first `n` points of `Φ_{m+1}` in a `(2m+2) x (2m+2)` grid.
pub fn fold_for_n(n: usize) -> Result<FoldForN> {
    if n < 2 {
        return Err(Error::InvalidCircuitSize { n });
    }
    let m = half_side(n);
    let (phi, stats) = build_phi(m + 1)?;
    if phi.len() < n {
        return Err(Error::Internal(format!(
            "Φ_{} has {} points, fewer than n = {n}",
            m + 1,
            phi.len()
        )));
    }
    let side = stats.side;
    Ok(FoldForN {
        n,
        m,
        side,
        efficiency: n as f64 / (side * side) as f64,
        folding: phi.truncated(n),
    })
}
