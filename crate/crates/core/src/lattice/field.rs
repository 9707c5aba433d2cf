//! Neighbor sets and periodic bond-coefficient fields.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite interaction set `V ⊂ Z^d`, always containing the standard basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborSet {
    dim: usize,
    vectors: Vec<Vec<i64>>,
    range: i64,
}

impl NeighborSet {
    pub fn new(dim: usize, vectors: Vec<Vec<i64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidField("dimension must be positive".into()));
        }
        for (k, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidField(format!("vector {v:?} has wrong dimension")));
            }
            if v.iter().all(|&x| x == 0) {
                return Err(Error::InvalidField("zero vector in neighbor set".into()));
            }
            if vectors[..k].contains(v) {
                return Err(Error::InvalidField(format!("duplicate vector {v:?}")));
            }
        }
        for k in 0..dim {
            if basis_index(&vectors, k).is_none() {
                return Err(Error::InvalidField(format!("missing basis vector e_{}", k + 1)));
            }
        }
        let range = vectors.iter().flatten().map(|x| x.abs()).max().unwrap_or(0);
        Ok(Self { dim, vectors, range })
    }

    /// `{e_1, ..., e_d}`.
    pub fn nearest(dim: usize) -> Self {
        let vectors = (0..dim)
            .map(|k| (0..dim).map(|j| i64::from(j == k)).collect())
            .collect();
        Self::new(dim, vectors).expect("basis is a valid neighbor set")
    }

    /// `{e_1, e_2, e_1 + e_2, e_1 - e_2}` in two dimensions.
    pub fn planar_with_diagonals() -> Self {
        Self::new(2, vec![vec![1, 0], vec![0, 1], vec![1, 1], vec![1, -1]]).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[Vec<i64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Max-norm range `R = max |xi|_inf`.
    pub fn range(&self) -> i64 {
        self.range
    }

    /// Largest Euclidean length of a vector in the set.
    pub fn euclidean_range(&self) -> f64 {
        self.vectors
            .iter()
            .map(|v| v.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Index of `e_k` (zero-based axis).
    pub fn basis(&self, axis: usize) -> usize {
        basis_index(&self.vectors, axis).expect("validated at construction")
    }
}

fn basis_index(vectors: &[Vec<i64>], axis: usize) -> Option<usize> {
    vectors
        .iter()
        .position(|v| v.iter().enumerate().all(|(j, &x)| x == i64::from(j == axis)))
}

/// Periodic bond coefficients `c_{i,xi}` with `c_{i + T z, xi} = c_{i, xi}`.
///
/// Values are stored per residue class of `i mod T`, flattened row-major, each
/// row aligned with the neighbor vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    neighbors: NeighborSet,
    period: usize,
    values: Vec<Vec<f64>>,
    c_min: f64,
    c_max: f64,
    nondegenerate: bool,
}

impl CoefficientField {
    /// Validates the lower bound on basis bonds, the upper bound on all bonds
    /// and, when `nondegenerate` is set, that every value lies in
    /// `[c_min, c_max] ∪ {0}`. Missing bounds are taken from the data.
    pub fn new(
        neighbors: NeighborSet,
        period: usize,
        values: Vec<Vec<f64>>,
        c_min: Option<f64>,
        c_max: Option<f64>,
        nondegenerate: bool,
    ) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidField("period must be positive".into()));
        }
        let expected = period
            .checked_pow(neighbors.dim() as u32)
            .ok_or_else(|| Error::InvalidField("period^dim overflows".into()))?;
        if values.len() != expected {
            return Err(Error::InvalidField(format!(
                "expected {expected} residue rows, found {}",
                values.len()
            )));
        }
        for (r, row) in values.iter().enumerate() {
            if row.len() != neighbors.len() {
                return Err(Error::InvalidField(format!(
                    "residue row {r} has {} entries, expected {}",
                    row.len(),
                    neighbors.len()
                )));
            }
            if let Some(bad) = row.iter().find(|c| !c.is_finite() || **c < 0.0) {
                return Err(Error::InvalidField(format!(
                    "coefficient {bad} in residue row {r} is not a finite nonnegative number"
                )));
            }
        }
        let basis: Vec<usize> = (0..neighbors.dim()).map(|k| neighbors.basis(k)).collect();
        let basis_min = values
            .iter()
            .flat_map(|row| basis.iter().map(move |&b| row[b]))
            .fold(f64::INFINITY, f64::min);
        let data_max = values.iter().flatten().copied().fold(0.0, f64::max);

        let c_min = c_min.unwrap_or(basis_min);
        if !(c_min > 0.0 && c_min.is_finite()) {
            return Err(Error::InvalidField(format!("lower bound c_min = {c_min} must be positive")));
        }
        if basis_min < c_min {
            return Err(Error::InvalidField(format!(
                "basis coefficient {basis_min} below c_min = {c_min}"
            )));
        }
        let c_max = c_max.unwrap_or(data_max);
        if !c_max.is_finite() || data_max > c_max || c_max < c_min {
            return Err(Error::InvalidField(format!(
                "upper bound c_max = {c_max} violated (max coefficient {data_max})"
            )));
        }
        if nondegenerate {
            if let Some(bad) = values
                .iter()
                .flatten()
                .find(|&&c| c != 0.0 && (c < c_min || c > c_max))
            {
                return Err(Error::InvalidField(format!(
                    "coefficient {bad} outside [{c_min}, {c_max}] ∪ {{0}}"
                )));
            }
        }
        Ok(Self { neighbors, period, values, c_min, c_max, nondegenerate })
    }

    /// Constant coefficient `c` on every bond of `neighbors`.
    pub fn uniform(neighbors: NeighborSet, c: f64) -> Result<Self> {
        let row = vec![c; neighbors.len()];
        Self::new(neighbors, 1, vec![row], None, None, false)
    }

    /// Builds a `period`-periodic field from a function of (residue, neighbor index).
    pub fn from_fn(
        neighbors: NeighborSet,
        period: usize,
        f: impl Fn(&[i64], usize) -> f64,
    ) -> Result<Self> {
        let d = neighbors.dim();
        let count = period.pow(d as u32);
        let values = (0..count)
            .map(|flat| {
                let residue = unflatten(flat, period, d);
                (0..neighbors.len()).map(|k| f(&residue, k)).collect()
            })
            .collect();
        Self::new(neighbors, period, values, None, None, false)
    }

    /// Planar field on `{e_1, e_2, e_1 + e_2, e_1 - e_2}` with unit axis bonds
    /// and diagonal bonds equal to 1 (`odd`) or 0 (`!odd`): the two members of
    /// the alternating sequence whose surface densities differ.
    pub fn alternating_diagonal(odd: bool) -> Self {
        let diag = if odd { 1.0 } else { 0.0 };
        Self::new(
            NeighborSet::planar_with_diagonals(),
            1,
            vec![vec![1.0, 1.0, diag, diag]],
            None,
            None,
            false,
        )
        .unwrap()
    }

    pub fn neighbors(&self) -> &NeighborSet {
        &self.neighbors
    }

    pub fn dim(&self) -> usize {
        self.neighbors.dim()
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.nondegenerate
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Whether every bond of `V` has a positive coefficient everywhere.
    pub fn fully_positive(&self) -> bool {
        self.values.iter().flatten().all(|&c| c > 0.0)
    }

    /// `c_{i, xi_k}` for an integer lattice index `i`.
    pub fn at_index(&self, index: &[i64], k: usize) -> f64 {
        let t = self.period as i64;
        let flat = index
            .iter()
            .fold(0usize, |acc, &x| acc * self.period + x.rem_euclid(t) as usize);
        self.values[flat][k]
    }

    /// `c^eps_{i, xi_k} = c_{i/eps, xi_k}` for a physical lattice point `i`.
    pub fn coefficient_at(&self, i: &[f64], k: usize, eps: f64) -> Result<f64> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        if i.len() != self.dim() || k >= self.neighbors.len() {
            return Err(Error::InvalidParameter("site or neighbor index out of range".into()));
        }
        let mut index = Vec::with_capacity(i.len());
        for &x in i {
            let q = x / eps;
            let r = q.round();
            if (q - r).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!("{i:?} is not on the lattice {eps} Z^d")));
            }
            index.push(r as i64);
        }
        Ok(self.at_index(&index, k))
    }

    /// Same field with every coefficient multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let values = self
            .values
            .iter()
            .map(|row| row.iter().map(|c| c * s).collect())
            .collect();
        Self::new(self.neighbors.clone(), self.period, values, None, None, false)
    }

    pub fn to_file(&self) -> FieldFile {
        FieldFile {
            dim: self.dim(),
            period: self.period,
            vectors: self.neighbors.vectors().to_vec(),
            values: self.values.clone(),
            c_min: Some(self.c_min),
            c_max: Some(self.c_max),
            nondegenerate: Some(self.nondegenerate),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: FieldFile = serde_json::from_str(text)?;
        file.into_field()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Residue class with the given row-major flat index.
pub(crate) fn unflatten(mut flat: usize, period: usize, dim: usize) -> Vec<i64> {
    let mut out = vec![0i64; dim];
    for k in (0..dim).rev() {
        out[k] = (flat % period) as i64;
        flat /= period;
    }
    out
}

/// On-disk JSON layout of a coefficient field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub dim: usize,
    pub period: usize,
    pub vectors: Vec<Vec<i64>>,
    pub values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nondegenerate: Option<bool>,
}

impl FieldFile {
    pub fn into_field(self) -> Result<CoefficientField> {
        let neighbors = NeighborSet::new(self.dim, self.vectors)?;
        CoefficientField::new(
            neighbors,
            self.period,
            self.values,
            self.c_min,
            self.c_max,
            self.nondegenerate.unwrap_or(false),
        )
    }
}
