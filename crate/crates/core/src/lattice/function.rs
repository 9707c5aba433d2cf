//! Real- and spin-valued functions on the sites of a region.

use std::collections::HashMap;
use std::io::{Read, Write};

use super::geometry::{lattice_points, physical, LatticeRegion, Site};
use crate::error::{Error, Result};

/// Values on `Z_eps(region)`, interpreted as piecewise constant on the
/// lattice cells.
#[derive(Debug, Clone)]
pub struct LatticeFunction {
    eps: f64,
    region: LatticeRegion,
    sites: Vec<Site>,
    values: Vec<f64>,
    index: HashMap<Site, usize>,
}

impl PartialEq for LatticeFunction {
    fn eq(&self, other: &Self) -> bool {
        self.eps == other.eps && self.sites == other.sites && self.values == other.values
    }
}

impl LatticeFunction {
    /// Samples `f` at the physical position of every site of `region`.
    pub fn from_fn(region: LatticeRegion, eps: f64, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let sites = lattice_points(&region, eps)?;
        let values = sites.iter().map(|s| f(&physical(s, eps))).collect();
        Self::build(region, eps, sites, values)
    }

    /// Values listed in the lexicographic site order of `region`.
    pub fn from_values(region: LatticeRegion, eps: f64, values: Vec<f64>) -> Result<Self> {
        let sites = lattice_points(&region, eps)?;
        if sites.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "region has {} sites but {} values were given",
                sites.len(),
                values.len()
            )));
        }
        Self::build(region, eps, sites, values)
    }

    /// Values on an arbitrary set of integer sites; the region is the
    /// explicit set of their positions.
    pub fn from_sites(dim: usize, eps: f64, entries: Vec<(Site, f64)>) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        let mut entries = entries;
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("duplicate site".into()));
        }
        if entries.iter().any(|(s, _)| s.len() != dim) {
            return Err(Error::InvalidParameter("site dimension mismatch".into()));
        }
        let (sites, values): (Vec<Site>, Vec<f64>) = entries.into_iter().unzip();
        let region = LatticeRegion::from_sites(dim, &sites, eps);
        Self::build(region, eps, sites, values)
    }

    fn build(region: LatticeRegion, eps: f64, sites: Vec<Site>, values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at site {:?}",
                sites[pos]
            )));
        }
        let index = sites.iter().enumerate().map(|(k, s)| (s.clone(), k)).collect();
        Ok(Self { eps, region, sites, values, index })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn region(&self) -> &LatticeRegion {
        &self.region
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn position(&self, site: &[i64]) -> Option<usize> {
        self.index.get(site).copied()
    }

    pub fn get(&self, site: &[i64]) -> Option<f64> {
        self.position(site).map(|k| self.values[k])
    }

    /// Value at `site`, or an incomplete-function error naming it.
    pub fn require(&self, site: &[i64]) -> Result<f64> {
        self.get(site)
            .ok_or_else(|| Error::IncompleteFunction { site: site.to_vec() })
    }

    /// Same sites with new values (in site order).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::InvalidParameter("value count mismatch".into()));
        }
        Self::build(self.region.clone(), self.eps, self.sites.clone(), values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    /// Clamps values into `[lo, hi]`.
    pub fn truncated(&self, lo: f64, hi: f64) -> Result<Self> {
        self.map(|v| v.clamp(lo, hi))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Whether `other` lives on exactly the same lattice sites.
    pub fn same_lattice(&self, other: &Self) -> bool {
        self.eps == other.eps && self.sites == other.sites
    }

    /// CSV with header `x1,...,xd,value`, physical coordinates, lexicographic order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let d = self.dim();
        let mut header: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        header.push("value".into());
        w.write_record(&header)?;
        for (s, v) in self.sites.iter().zip(&self.values) {
            let mut row: Vec<String> = physical(s, self.eps).iter().map(|x| fmt_float(*x)).collect();
            row.push(fmt_float(*v));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses the CSV layout written by [`write_csv`](Self::write_csv);
    /// coordinates must lie on `eps Z^d`.
    pub fn read_csv<R: Read>(reader: R, eps: f64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let d = header.len().saturating_sub(1);
        let expected: Vec<String> = (1..=d).map(|k| format!("x{k}")).chain(["value".into()]).collect();
        if d == 0 || header.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
            return Err(Error::Parse(format!(
                "expected header {}, found {}",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut entries = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let nums: Vec<f64> = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", line + 2)))?;
            if nums.len() != d + 1 {
                return Err(Error::Parse(format!("row {} has {} fields", line + 2, nums.len())));
            }
            let mut site = Vec::with_capacity(d);
            for &x in &nums[..d] {
                let q = x / eps;
                if (q - q.round()).abs() > 1e-6 {
                    return Err(Error::Parse(format!("row {}: {x} is not on the lattice", line + 2)));
                }
                site.push(q.round() as i64);
            }
            entries.push((site, nums[d]));
        }
        Self::from_sites(d, eps, entries)
    }
}

/// Seventeen significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A `±1` configuration on lattice sites.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinConfiguration {
    inner: LatticeFunction,
}

impl SpinConfiguration {
    pub fn new(function: LatticeFunction) -> Result<Self> {
        for (s, &v) in function.sites().iter().zip(function.values()) {
            if v != 1.0 && v != -1.0 {
                return Err(Error::InvalidSpin { site: s.clone(), value: v });
            }
        }
        Ok(Self { inner: function })
    }

    pub fn from_sites(dim: usize, eps: f64, entries: Vec<(Site, i8)>) -> Result<Self> {
        let f = LatticeFunction::from_sites(
            dim,
            eps,
            entries.into_iter().map(|(s, v)| (s, f64::from(v))).collect(),
        )?;
        Self::new(f)
    }

    pub fn as_function(&self) -> &LatticeFunction {
        &self.inner
    }

    pub fn spin(&self, site: &[i64]) -> Option<i8> {
        self.inner.get(site).map(|v| v as i8)
    }

    pub fn flipped(&self) -> Self {
        Self { inner: self.inner.map(|v| -v).expect("same sites") }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let q = LatticeRegion::axis_cube(vec![0.0, 0.0], 2.0).unwrap();
        let u = LatticeFunction::from_fn(q, 0.5, |x| x[0] * 3.0 - x[1] + 0.1).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,value\n"));
        let back = LatticeFunction::read_csv(&buf[..], 0.5).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn csv_rejects_bad_header_and_off_lattice_rows() {
        assert!(LatticeFunction::read_csv("a,b\n1,2\n".as_bytes(), 1.0).is_err());
        assert!(LatticeFunction::read_csv("x1,value\n0.3,2\n".as_bytes(), 0.5).is_err());
        assert!(LatticeFunction::read_csv("x1,value\nfoo,2\n".as_bytes(), 0.5).is_err());
    }

    #[test]
    fn spins_must_be_plus_minus_one() {
        let f = LatticeFunction::from_sites(1, 1.0, vec![(vec![0], 1.0), (vec![1], 0.5)]).unwrap();
        assert!(matches!(SpinConfiguration::new(f), Err(Error::InvalidSpin { .. })));
    }

    #[test]
    fn missing_site_is_named() {
        let f = LatticeFunction::from_sites(1, 1.0, vec![(vec![0], 1.0)]).unwrap();
        match f.require(&[4]) {
            Err(Error::IncompleteFunction { site }) => assert_eq!(site, vec![4]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_finite_values() {
        let q = LatticeRegion::axis_cube(vec![0.0], 2.0).unwrap();
        assert!(LatticeFunction::from_fn(q, 1.0, |_| f64::NAN).is_err());
    }
}
