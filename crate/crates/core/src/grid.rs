//! Five-point finite-difference assembly of the steady 2D heat equation on a
//! square plate with Dirichlet edges.
//!
//! Grid nodes sit at `x_i = i L / m`, `y_j = j L / m` for `i, j = 0..=m`.
//! Interior node `(i, j)` (both in `1..m`) maps to row
//! `(j - 1)(m - 1) + (i - 1)`, so `i` runs fastest and contiguous row ranges
//! are horizontal strips of the plate.
//!
//! Each row holds `4 T(i,j) - T(i±1,j) - T(i,j±1)`; neighbours on the edge
//! are moved to the right-hand side together with any point sources.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{LinearSystem, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    /// `y = 0`, parametrised by `x`.
    Bottom,
    /// `y = L`, parametrised by `x`.
    Top,
    /// `x = 0`, parametrised by `y`.
    Left,
    /// `x = L`, parametrised by `y`.
    Right,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Bottom, Edge::Top, Edge::Left, Edge::Right];
}

/// Temperature along one edge as a function of the edge coordinate `s`.
#[derive(Clone)]
pub enum EdgeProfile {
    Constant(f64),
    /// Linear from `start` at `s = 0` to `end` at `s = L`.
    Linear {
        start: f64,
        end: f64,
    },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl EdgeProfile {
    pub fn eval(&self, s: f64, length: f64) -> f64 {
        match self {
            EdgeProfile::Constant(t) => *t,
            EdgeProfile::Linear { start, end } => start + (end - start) * s / length,
            EdgeProfile::Custom(f) => f(s),
        }
    }
}

impl fmt::Debug for EdgeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeProfile::Constant(t) => write!(f, "Constant({t})"),
            EdgeProfile::Linear { start, end } => write!(f, "Linear({start} -> {end})"),
            EdgeProfile::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Boundary {
    pub bottom: EdgeProfile,
    pub top: EdgeProfile,
    pub left: EdgeProfile,
    pub right: EdgeProfile,
}

impl Boundary {
    /// Cold bottom and left edges, top and right ramping from 0 to 100 °C.
    pub fn ramp() -> Self {
        let ramp = EdgeProfile::Linear { start: 0.0, end: 100.0 };
        Self {
            bottom: EdgeProfile::Constant(0.0),
            top: ramp.clone(),
            left: EdgeProfile::Constant(0.0),
            right: ramp,
        }
    }

    pub fn uniform(t: f64) -> Self {
        Self::constant(t, t, t, t)
    }

    pub fn constant(bottom: f64, top: f64, left: f64, right: f64) -> Self {
        Self {
            bottom: EdgeProfile::Constant(bottom),
            top: EdgeProfile::Constant(top),
            left: EdgeProfile::Constant(left),
            right: EdgeProfile::Constant(right),
        }
    }

    pub fn profile(&self, edge: Edge) -> &EdgeProfile {
        match edge {
            Edge::Bottom => &self.bottom,
            Edge::Top => &self.top,
            Edge::Left => &self.left,
            Edge::Right => &self.right,
        }
    }

    pub fn temperature(&self, edge: Edge, s: f64, length: f64) -> Result<f64> {
        check_edge_coordinate(s, length)?;
        Ok(self.profile(edge).eval(s, length))
    }
}

impl Default for Boundary {
    fn default() -> Self {
        Self::ramp()
    }
}

fn check_edge_coordinate(s: f64, length: f64) -> Result<()> {
    if !(length > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "plate length must be positive, got {length}"
        )));
    }
    if !(0.0..=length).contains(&s) {
        return Err(Error::OutOfRange(format!("edge coordinate {s} outside [0, {length}]")));
    }
    Ok(())
}

/// Default edge temperature: 0 °C on bottom and left, `100 s / L` on top
/// and right.
pub fn boundary_temperature(edge: Edge, s: f64, length: f64) -> Result<f64> {
    Boundary::ramp().temperature(edge, s, length)
}

/// Additive right-hand-side term at interior node `(i, j)`. Positive values
/// are heat sources, negative values sinks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSource {
    pub i: usize,
    pub j: usize,
    pub strength: f64,
}

#[derive(Debug, Clone)]
pub struct HeatProblem {
    /// Segments per side.
    pub m: usize,
    pub length: f64,
    pub boundary: Boundary,
    pub sources: Vec<PointSource>,
}

impl HeatProblem {
    pub fn new(m: usize, length: f64, boundary: Boundary) -> Self {
        Self {
            m,
            length,
            boundary,
            sources: Vec::new(),
        }
    }

    /// The 81-unknown plate (10 segments per side) with the ramp boundary.
    pub fn demo() -> Self {
        Self::new(10, 1.0, Boundary::ramp())
    }

    pub fn with_source(mut self, i: usize, j: usize, strength: f64) -> Self {
        self.sources.push(PointSource { i, j, strength });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 segments per side, got {}",
                self.m
            )));
        }
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "plate length must be positive and finite, got {}",
                self.length
            )));
        }
        for s in &self.sources {
            if !self.is_interior(s.i, s.j) {
                return Err(Error::OutOfRange(format!(
                    "source at ({}, {}) is not an interior node (1..={} on each axis)",
                    s.i,
                    s.j,
                    self.m - 1
                )));
            }
            if !s.strength.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "source at ({}, {}) has non-finite strength",
                    s.i, s.j
                )));
            }
        }
        Ok(())
    }

    pub fn unknowns(&self) -> usize {
        (self.m - 1) * (self.m - 1)
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.m as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        self.spacing() * i as f64
    }

    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        (1..self.m).contains(&i) && (1..self.m).contains(&j)
    }

    /// Row of interior node `(i, j)`.
    pub fn row_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(self.is_interior(i, j));
        (j - 1) * (self.m - 1) + (i - 1)
    }

    /// Interior node of row `row`.
    pub fn node_of_row(&self, row: usize) -> (usize, usize) {
        let w = self.m - 1;
        (row % w + 1, row / w + 1)
    }

    /// Temperature at a node on the plate edge. Corners take the bottom/top
    /// edge value.
    pub fn boundary_value(&self, i: usize, j: usize) -> f64 {
        let m = self.m;
        let (edge, s) = if j == 0 {
            (Edge::Bottom, self.coordinate(i))
        } else if j == m {
            (Edge::Top, self.coordinate(i))
        } else if i == 0 {
            (Edge::Left, self.coordinate(j))
        } else {
            debug_assert_eq!(i, m);
            (Edge::Right, self.coordinate(j))
        };
        self.boundary.profile(edge).eval(s.min(self.length), self.length)
    }
}

pub fn assemble_system(problem: &HeatProblem) -> Result<LinearSystem> {
    problem.validate()?;
    let m = problem.m;
    let n = problem.unknowns();
    let mut a = SparseMatrix::zeros(n);
    let mut b = vec![0.0; n];

    for j in 1..m {
        for i in 1..m {
            let row = problem.row_index(i, j);
            a.add(row, row, 4.0);
            let neighbours = [(i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)];
            for (ni, nj) in neighbours {
                if problem.is_interior(ni, nj) {
                    a.add(row, problem.row_index(ni, nj), -1.0);
                } else {
                    b[row] += problem.boundary_value(ni, nj);
                }
            }
        }
    }
    for s in &problem.sources {
        b[problem.row_index(s.i, s.j)] += s.strength;
    }
    LinearSystem::new(a, b)
}

/// Full `(m+1) × (m+1)` nodal temperature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField {
    pub m: usize,
    pub length: f64,
    values: Vec<f64>,
}

impl TemperatureField {
    pub fn side(&self) -> usize {
        self.m + 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.side() + i]
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        self.length * i as f64 / self.m as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(i, j, x, y, T)` for every node, `i` fastest.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, f64, f64, f64)> + '_ {
        let side = self.side();
        (0..side)
            .flat_map(move |j| (0..side).map(move |i| (i, j, self.coordinate(i), self.coordinate(j), self.get(i, j))))
    }
}

pub fn grid_to_field(x: &[f64], problem: &HeatProblem) -> Result<TemperatureField> {
    problem.validate()?;
    crate::error::check_len(problem.unknowns(), x.len())?;
    let m = problem.m;
    let side = m + 1;
    let mut values = vec![0.0; side * side];
    for j in 0..=m {
        for i in 0..=m {
            values[j * side + i] = if problem.is_interior(i, j) {
                x[problem.row_index(i, j)]
            } else {
                problem.boundary_value(i, j)
            };
        }
    }
    Ok(TemperatureField {
        m,
        length: problem.length,
        values,
    })
}
