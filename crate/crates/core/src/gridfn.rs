//! Real-valued functions on grid nodes and discrete probability measures.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cone::LOG_FLOOR;
use crate::error::{Error, Result};
use crate::grid::{ComplexPoint, GridSet, NodeSubset};

/// One value per node; values at or below `floor` stand for `-inf`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    values: Vec<f64>,
    floor: f64,
}

impl GridFunction {
    /// Clamps non-finite and too-small values to the floor.
    pub fn new(values: Vec<f64>) -> Self {
        Self::with_floor(values, LOG_FLOOR)
    }

    pub fn with_floor(mut values: Vec<f64>, floor: f64) -> Self {
        for v in values.iter_mut() {
            if v.is_nan() || *v < floor {
                *v = floor;
            } else if *v == f64::INFINITY {
                *v = f64::MAX;
            }
        }
        Self { values, floor }
    }

    pub fn from_fn(grid: &GridSet, f: impl Fn(&ComplexPoint) -> f64) -> Self {
        Self::new(grid.points().iter().map(f).collect())
    }

    pub fn constant(len: usize, c: f64) -> Self {
        Self::new(vec![c; len])
    }

    pub fn check_len(&self, grid: &GridSet) -> Result<()> {
        if self.values.len() == grid.len() {
            Ok(())
        } else {
            Err(Error::FunctionLength {
                expected: grid.len(),
                found: self.values.len(),
            })
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::with_floor(self.values.iter().map(|v| f(*v)).collect(), self.floor)
    }

    pub fn max_on(&self, mask: &NodeSubset) -> f64 {
        mask.indices()
            .into_iter()
            .map(|i| self.values[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_on(&self, mask: &NodeSubset) -> f64 {
        mask.indices()
            .into_iter()
            .map(|i| self.values[i])
            .fold(f64::INFINITY, f64::min)
    }

    /// `max - min` over all nodes.
    pub fn oscillation(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        hi - lo
    }

    pub fn oscillation_on(&self, mask: &NodeSubset) -> f64 {
        self.max_on(mask) - self.min_on(mask)
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest difference quotient over neighbor pairs (radius `1.5 h`).
    pub fn lipschitz_estimate(&self, grid: &GridSet) -> f64 {
        let mut lip: f64 = 0.0;
        for i in 0..grid.len() {
            for j in grid.neighbors(i) {
                if j > i {
                    let d = grid.point(i).dist(grid.point(j));
                    lip = lip.max((self.values[i] - self.values[j]).abs() / d);
                }
            }
        }
        lip
    }

    /// Writes `index, re1, im1[, re2, im2], value`.
    pub fn write_csv<W: Write>(&self, grid: &GridSet, out: W, column: &str) -> Result<()> {
        self.check_len(grid)?;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["index".to_string()];
        for j in 1..=grid.dim() {
            header.push(format!("re{j}"));
            header.push(format!("im{j}"));
        }
        header.push(column.to_string());
        w.write_record(&header)?;
        for (i, p) in grid.points().iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(p.real_coords().iter().map(|x| format!("{x}")));
            rec.push(format!("{}", self.values[i]));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Probability measure on grid nodes, stored sparsely.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    /// Barycenter node.
    pub barycenter: usize,
    /// `(node, weight)` with strictly positive weights, ascending by node.
    pub weights: Vec<(usize, f64)>,
}

/// Weights below this are dropped on emission.
pub const WEIGHT_CLAMP: f64 = 1e-12;

impl DiscreteMeasure {
    pub fn dirac(node: usize) -> Self {
        Self {
            barycenter: node,
            weights: vec![(node, 1.0)],
        }
    }

    /// Clamps tiny and negative weights, merges repeated nodes and
    /// renormalizes to total mass one.
    pub fn from_weights(barycenter: usize, raw: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut w: Vec<(usize, f64)> = raw.into_iter().filter(|(_, v)| *v > WEIGHT_CLAMP).collect();
        w.sort_by_key(|(i, _)| *i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(w.len());
        for (i, v) in w {
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => merged.push((i, v)),
            }
        }
        let total: f64 = merged.iter().map(|(_, v)| v).sum();
        if total > 0.0 {
            for (_, v) in merged.iter_mut() {
                *v /= total;
            }
        }
        Self {
            barycenter,
            weights: merged,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().map(|(_, w)| w).sum()
    }

    /// `sum w_i f_i`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().map(|(i, w)| w * f[*i]).sum()
    }

    pub fn mass_on(&self, mask: &NodeSubset) -> f64 {
        self.weights
            .iter()
            .filter(|(i, _)| mask.contains(*i))
            .map(|(_, w)| w)
            .sum()
    }

    pub fn support(&self) -> Vec<usize> {
        self.weights.iter().map(|(i, _)| *i).collect()
    }

    pub fn supported_in(&self, mask: &NodeSubset) -> bool {
        self.weights.iter().all(|(i, _)| mask.contains(*i))
    }

    pub fn dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (i, w) in &self.weights {
            out[*i] += w;
        }
        out
    }
}

/// Writes `barycenter, node, weight` rows for a list of measures.
pub fn write_measures_csv<W: Write>(measures: &[DiscreteMeasure], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["barycenter", "node", "weight"])?;
    for m in measures {
        for (i, v) in &m.weights {
            w.write_record([m.barycenter.to_string(), i.to_string(), format!("{v}")])?;
        }
    }
    w.flush()?;
    Ok(())
}
