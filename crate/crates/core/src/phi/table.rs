use std::collections::BTreeMap;
use std::io::Read;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fields::Grid;

/// Samples of `t ↦ Φ(x, t)` at one x-index, interpolated linearly and
/// extended past the last sample with the last slope.
#[derive(Clone, Debug)]
pub struct Column {
    t: Vec<f64>,
    v: Vec<f64>,
}

impl Column {
    pub fn new(mut samples: Vec<(f64, f64)>) -> Result<Self> {
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        if samples.iter().any(|&(t, v)| t < 0.0 || v < 0.0 || !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidArgument("tabulated samples must be finite and nonnegative".into()));
        }
        if samples.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("duplicate t in tabulated column".into()));
        }
        if samples.first().map(|s| s.0) != Some(0.0) {
            samples.insert(0, (0.0, 0.0));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidArgument("tabulated column needs a positive t sample".into()));
        }
        let (t, v) = samples.into_iter().unzip();
        Ok(Column { t, v })
    }

    pub fn value(&self, t: f64) -> f64 {
        let n = self.t.len();
        let i = match self.t.partition_point(|&s| s <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let (v0, v1) = (self.v[i], self.v[i + 1]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

/// Tabulated `Φ`. A single column is x-independent; several columns are
/// keyed by flat grid index and looked up at the nearest grid point.
#[derive(Clone, Debug)]
pub struct TabulatedPhi {
    columns: BTreeMap<usize, Column>,
    grid: Option<Grid>,
}

#[derive(Deserialize)]
struct Row {
    x_index: usize,
    t: f64,
    value: f64,
}

impl TabulatedPhi {
    pub fn new(columns: BTreeMap<usize, Column>, grid: Option<Grid>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Empty("tabulated phi"));
        }
        if columns.len() > 1 && grid.is_none() {
            return Err(Error::InvalidArgument(
                "x-dependent tabulated phi needs a grid to resolve x-indices".into(),
            ));
        }
        if let Some(g) = &grid {
            if let Some((&last, _)) = columns.iter().next_back() {
                if last >= g.len() {
                    return Err(Error::InvalidArgument(format!(
                        "x-index {last} outside grid of {} points",
                        g.len()
                    )));
                }
            }
        }
        Ok(TabulatedPhi { columns, grid })
    }

    /// Reads `x_index,t,value` rows (with header).
    pub fn from_csv<R: Read>(reader: R, grid: Option<Grid>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut raw: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            raw.entry(row.x_index).or_default().push((row.t, row.value));
        }
        let columns = raw
            .into_iter()
            .map(|(k, s)| Column::new(s).map(|c| (k, c)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Self::new(columns, grid)
    }

    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        if self.columns.len() == 1 {
            return self.columns.values().next().unwrap().value(t);
        }
        let grid = self.grid.as_ref().expect("validated in new");
        match grid.nearest_index(x).and_then(|i| self.columns.get(&i)) {
            Some(col) => col.value(t),
            None => f64::NAN,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_column_interpolates_and_extends() {
        let csv = "x_index,t,value\n0,1,1\n0,2,4\n0,3,9\n";
        let tab = TabulatedPhi::from_csv(csv.as_bytes(), None).unwrap();
        assert_eq!(tab.value(&[0.0], 0.0), 0.0);
        assert_eq!(tab.value(&[0.0], 0.5), 0.5);
        assert_eq!(tab.value(&[0.0], 1.5), 2.5);
        assert_eq!(tab.value(&[0.0], 4.0), 14.0);
    }

    #[test]
    fn multi_column_needs_grid() {
        let csv = "x_index,t,value\n0,1,1\n1,1,2\n";
        assert!(TabulatedPhi::from_csv(csv.as_bytes(), None).is_err());
        let grid = Grid::new(1, 1.0, 9).unwrap();
        let tab = TabulatedPhi::from_csv(csv.as_bytes(), Some(grid)).unwrap();
        assert_eq!(tab.value(&[-1.0], 1.0), 1.0);
        assert_eq!(tab.value(&[-0.75], 0.5), 1.0);
        assert!(tab.value(&[0.0], 1.0).is_nan());
    }

    #[test]
    fn rejects_negative_samples() {
        let csv = "x_index,t,value\n0,1,-1\n";
        assert!(TabulatedPhi::from_csv(csv.as_bytes(), None).is_err());
    }
}
