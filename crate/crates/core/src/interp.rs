//! Piecewise-linear (1-D) and bilinear (2-D) lookup tables.
//!
//! All tabulated powertrain maps (open-circuit voltage, resistances,
//! efficiencies, torque bounds) use these. Evaluation clamps to the table
//! edges, so queries outside the tabulated envelope hold the boundary value.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TableError {
    #[error("table needs at least one breakpoint")]
    Empty,
    #[error("breakpoints must be finite and strictly increasing")]
    BadBreaks,
    #[error("value count {got} does not match breakpoint count {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("table values must be finite")]
    BadValues,
}

fn check_breaks(breaks: &[f64]) -> Result<(), TableError> {
    if breaks.is_empty() {
        return Err(TableError::Empty);
    }
    if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TableError::BadBreaks);
    }
    Ok(())
}

/// Locate `x` in `breaks`, returning the left index and interpolation weight.
/// Out-of-range queries clamp to the first/last segment endpoint.
fn locate(breaks: &[f64], x: f64) -> (usize, f64) {
    let n = breaks.len();
    if n == 1 || x <= breaks[0] {
        return (0, 0.0);
    }
    if x >= breaks[n - 1] {
        return (n - 2, 1.0);
    }
    // partition_point: first index with break > x, so seg in 1..n-1.
    let hi = breaks.partition_point(|b| *b <= x);
    let lo = hi - 1;
    let t = (x - breaks[lo]) / (breaks[hi] - breaks[lo]);
    (lo, t)
}

/// 1-D piecewise-linear table `x -> value`, end-clamped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Table1DRaw", into = "Table1DRaw")]
pub struct Table1D {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Table1DRaw {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<Table1DRaw> for Table1D {
    type Error = TableError;
    fn try_from(raw: Table1DRaw) -> Result<Self, TableError> {
        Table1D::new(raw.breaks, raw.values)
    }
}

impl From<Table1D> for Table1DRaw {
    fn from(t: Table1D) -> Self {
        Table1DRaw { breaks: t.breaks, values: t.values }
    }
}

impl Table1D {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self, TableError> {
        check_breaks(&breaks)?;
        if values.len() != breaks.len() {
            return Err(TableError::LengthMismatch { got: values.len(), want: breaks.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TableError::BadValues);
        }
        Ok(Table1D { breaks, values })
    }

    /// Constant table (single breakpoint).
    pub fn constant(value: f64) -> Self {
        Table1D { breaks: vec![0.0], values: vec![value] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.breaks.len() == 1 {
            return self.values[0];
        }
        let (lo, t) = locate(&self.breaks, x);
        self.values[lo] + t * (self.values[lo + 1] - self.values[lo])
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// 2-D bilinear table `(x, y) -> value`, edge-clamped. `values[i][j]`
/// corresponds to `(x_breaks[i], y_breaks[j])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Table2DRaw", into = "Table2DRaw")]
pub struct Table2D {
    x_breaks: Vec<f64>,
    y_breaks: Vec<f64>,
    values: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct Table2DRaw {
    x_breaks: Vec<f64>,
    y_breaks: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<Table2DRaw> for Table2D {
    type Error = TableError;
    fn try_from(raw: Table2DRaw) -> Result<Self, TableError> {
        Table2D::new(raw.x_breaks, raw.y_breaks, raw.values)
    }
}

impl From<Table2D> for Table2DRaw {
    fn from(t: Table2D) -> Self {
        Table2DRaw { x_breaks: t.x_breaks, y_breaks: t.y_breaks, values: t.values }
    }
}

impl Table2D {
    pub fn new(
        x_breaks: Vec<f64>,
        y_breaks: Vec<f64>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self, TableError> {
        check_breaks(&x_breaks)?;
        check_breaks(&y_breaks)?;
        if values.len() != x_breaks.len() {
            return Err(TableError::LengthMismatch { got: values.len(), want: x_breaks.len() });
        }
        for row in &values {
            if row.len() != y_breaks.len() {
                return Err(TableError::LengthMismatch { got: row.len(), want: y_breaks.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(TableError::BadValues);
            }
        }
        Ok(Table2D { x_breaks, y_breaks, values })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (i, tx) = locate(&self.x_breaks, x);
        let (j, ty) = locate(&self.y_breaks, y);
        if self.x_breaks.len() == 1 && self.y_breaks.len() == 1 {
            return self.values[0][0];
        }
        if self.x_breaks.len() == 1 {
            return self.values[0][j] + ty * (self.values[0][j + 1] - self.values[0][j]);
        }
        if self.y_breaks.len() == 1 {
            return self.values[i][0] + tx * (self.values[i + 1][0] - self.values[i][0]);
        }
        let v00 = self.values[i][j];
        let v01 = self.values[i][j + 1];
        let v10 = self.values[i + 1][j];
        let v11 = self.values[i + 1][j + 1];
        let a = v00 + ty * (v01 - v00);
        let b = v10 + ty * (v11 - v10);
        a + tx * (b - a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_table_interpolates_and_clamps() {
        let t = Table1D::new(vec![0.0, 1.0, 2.0], vec![10.0, 20.0, 40.0]).unwrap();
        assert_eq!(t.eval(0.0), 10.0);
        assert_eq!(t.eval(0.5), 15.0);
        assert_eq!(t.eval(1.5), 30.0);
        assert_eq!(t.eval(-3.0), 10.0);
        assert_eq!(t.eval(9.0), 40.0);
    }

    #[test]
    fn constant_table() {
        let t = Table1D::constant(7.5);
        assert_eq!(t.eval(-1.0), 7.5);
        assert_eq!(t.eval(100.0), 7.5);
    }

    #[test]
    fn rejects_bad_breaks() {
        assert_eq!(Table1D::new(vec![], vec![]).unwrap_err(), TableError::Empty);
        assert_eq!(
            Table1D::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap_err(),
            TableError::BadBreaks
        );
        assert!(matches!(
            Table1D::new(vec![0.0, 1.0], vec![1.0]).unwrap_err(),
            TableError::LengthMismatch { .. }
        ));
    }

    #[test]
    fn bilinear_matches_hand_values() {
        let t = Table2D::new(
            vec![0.0, 1.0],
            vec![0.0, 2.0],
            vec![vec![0.0, 2.0], vec![4.0, 6.0]],
        )
        .unwrap();
        assert_eq!(t.eval(0.0, 0.0), 0.0);
        assert_eq!(t.eval(1.0, 2.0), 6.0);
        assert_eq!(t.eval(0.5, 1.0), 3.0);
        // clamped corners
        assert_eq!(t.eval(-1.0, -1.0), 0.0);
        assert_eq!(t.eval(5.0, 5.0), 6.0);
    }

    #[test]
    fn exact_breakpoint_hits_grid_value() {
        let t = Table1D::new(vec![0.0, 0.3, 1.0], vec![1.0, -2.0, 5.0]).unwrap();
        assert_eq!(t.eval(0.3), -2.0);
    }
}
