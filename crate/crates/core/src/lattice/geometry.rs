//! Rotations, cubes and lattice-site enumeration.

use crate::error::{Error, Result};

/// A lattice site, stored as its integer index `i / eps`.
pub type Site = Vec<i64>;

/// Sites whose distance to the boundary of an open region is at most this
/// (relative to the region scale) are treated as outside.
pub const BOUNDARY_TOL: f64 = 1e-12;

const UNIT_TOL: f64 = 1e-12;

/// Proper rotation of `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    dim: usize,
    m: Vec<f64>,
}

impl Rotation {
    pub fn identity(dim: usize) -> Self {
        let mut m = vec![0.0; dim * dim];
        for k in 0..dim {
            m[k * dim + k] = 1.0;
        }
        Self { dim, m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.m[row * self.dim + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.dim).map(|r| self.entry(r, col)).collect()
    }

    /// `R x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|r| (0..self.dim).map(|c| self.entry(r, c) * x[c]).sum())
            .collect()
    }

    /// `R^T x`
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|c| (0..self.dim).map(|r| self.entry(r, c) * x[r]).sum())
            .collect()
    }

    /// Largest entry of `|R^T R - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                let dot: f64 = (0..d).map(|r| self.entry(r, a) * self.entry(r, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> f64 {
        let d = self.dim;
        let mut a = self.m.clone();
        let mut det = 1.0;
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&x, &y| a[x * d + col].abs().total_cmp(&a[y * d + col].abs()))
                .unwrap();
            if a[pivot * d + col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for k in 0..d {
                    a.swap(pivot * d + k, col * d + k);
                }
                det = -det;
            }
            let p = a[col * d + col];
            det *= p;
            for r in col + 1..d {
                let f = a[r * d + col] / p;
                for k in col..d {
                    a[r * d + k] -= f * a[col * d + k];
                }
            }
        }
        det
    }
}

fn check_unit(nu: &[f64]) -> Result<()> {
    if nu.is_empty() {
        return Err(Error::InvalidParameter("direction has dimension 0".into()));
    }
    let norm = nu.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidParameter(format!(
            "direction {nu:?} is not a unit vector (norm {norm})"
        )));
    }
    Ok(())
}

/// Normalizes `v`, rejecting the zero vector.
pub fn normalize(v: &[f64]) -> Result<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::InvalidParameter(format!("cannot normalize {v:?}")));
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

/// Rotation `R` with `R e_d = nu`.
///
/// `nu = e_d` gives the identity. Otherwise `R = H F`, where `H` is the
/// Householder reflection exchanging `e_d` and `nu` and `F` flips the first
/// coordinate. In `d = 1` the only map sending `e_1` to `-e_1` is `-1`, which
/// is returned even though it is not proper.
pub fn rotation_to(nu: &[f64]) -> Result<Rotation> {
    check_unit(nu)?;
    let d = nu.len();
    if d == 1 {
        return Ok(Rotation { dim: 1, m: vec![nu[0].signum()] });
    }
    let mut w: Vec<f64> = nu.iter().map(|x| -x).collect();
    w[d - 1] += 1.0;
    let w2: f64 = w.iter().map(|x| x * x).sum();
    if w2 == 0.0 {
        return Ok(Rotation::identity(d));
    }
    let mut m = vec![0.0; d * d];
    for r in 0..d {
        for c in 0..d {
            let h = if r == c { 1.0 } else { 0.0 } - 2.0 * w[r] * w[c] / w2;
            m[r * d + c] = if c == 0 { -h } else { h };
        }
    }
    Ok(Rotation { dim: d, m })
}

/// A bounded region of `R^d` whose lattice sites can be enumerated.
#[derive(Debug, Clone, PartialEq)]
pub enum LatticeRegion {
    /// Open cube `x0 + side * (-1/2, 1/2)^d`.
    AxisCube { center: Vec<f64>, side: f64 },
    /// Open cube `x0 + side * R_nu (-1/2, 1/2)^d`.
    RotatedCube {
        center: Vec<f64>,
        side: f64,
        nu: Vec<f64>,
        rotation: Rotation,
    },
    /// A cube intersected with the half-space `(x - point) . normal >= 0`.
    Clipped {
        cube: Box<LatticeRegion>,
        point: Vec<f64>,
        normal: Vec<f64>,
    },
    /// A finite set of points; only the ones lying on the lattice count.
    Explicit { dim: usize, points: Vec<Vec<f64>> },
}

impl LatticeRegion {
    pub fn axis_cube(center: Vec<f64>, side: f64) -> Result<Self> {
        check_cube(&center, side)?;
        Ok(Self::AxisCube { center, side })
    }

    pub fn rotated_cube(center: Vec<f64>, side: f64, nu: &[f64]) -> Result<Self> {
        check_cube(&center, side)?;
        if nu.len() != center.len() {
            return Err(Error::InvalidParameter("direction/center dimension mismatch".into()));
        }
        let rotation = rotation_to(nu)?;
        Ok(Self::RotatedCube { center, side, nu: nu.to_vec(), rotation })
    }

    pub fn clipped(cube: LatticeRegion, point: Vec<f64>, normal: Vec<f64>) -> Result<Self> {
        if !cube.is_cube() {
            return Err(Error::InvalidParameter("only cubes can be clipped".into()));
        }
        if point.len() != cube.dim() || normal.len() != cube.dim() {
            return Err(Error::InvalidParameter("clip plane dimension mismatch".into()));
        }
        Ok(Self::Clipped { cube: Box::new(cube), point, normal })
    }

    pub fn explicit(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidParameter("explicit points have inconsistent dimension".into()));
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("explicit points must be finite".into()));
        }
        Ok(Self::Explicit { dim, points })
    }

    /// The explicit region made of the physical positions of `sites`.
    pub fn from_sites(dim: usize, sites: &[Site], eps: f64) -> Self {
        Self::Explicit {
            dim,
            points: sites.iter().map(|s| physical(s, eps)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::AxisCube { center, .. } | Self::RotatedCube { center, .. } => center.len(),
            Self::Clipped { cube, .. } => cube.dim(),
            Self::Explicit { dim, .. } => *dim,
        }
    }

    pub fn is_cube(&self) -> bool {
        matches!(self, Self::AxisCube { .. } | Self::RotatedCube { .. })
    }

    /// Center, side and orientation of a cube region.
    pub fn cube_parts(&self) -> Option<(&[f64], f64, Option<&Rotation>)> {
        match self {
            Self::AxisCube { center, side } => Some((center, *side, None)),
            Self::RotatedCube { center, side, rotation, .. } => Some((center, *side, Some(rotation))),
            _ => None,
        }
    }

    /// For cubes, the Euclidean distance from `x` to the complement
    /// (negative outside). `None` for other regions.
    pub fn cube_inner_distance(&self, x: &[f64]) -> Option<f64> {
        let (center, side, rotation) = self.cube_parts()?;
        let rel: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
        let local = match rotation {
            Some(r) => r.apply_transpose(&rel),
            None => rel,
        };
        let sup = local.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Some(side / 2.0 - sup)
    }

    /// Open-set membership of a physical point.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Self::AxisCube { side, .. } | Self::RotatedCube { side, .. } => {
                let dist = self.cube_inner_distance(x).unwrap();
                dist > BOUNDARY_TOL * side.max(1.0)
            }
            Self::Clipped { cube, point, normal } => {
                let dot: f64 = x.iter().zip(point).zip(normal).map(|((a, p), n)| (a - p) * n).sum();
                dot >= 0.0 && cube.contains(x)
            }
            Self::Explicit { points, .. } => points
                .iter()
                .any(|p| p.iter().zip(x).all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0))),
        }
    }

    /// Axis-aligned box `[lo, hi]` enclosing the region.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Self::AxisCube { center, side } => (
                center.iter().map(|c| c - side / 2.0).collect(),
                center.iter().map(|c| c + side / 2.0).collect(),
            ),
            Self::RotatedCube { center, side, rotation, .. } => {
                let d = center.len();
                let half: Vec<f64> = (0..d)
                    .map(|r| side / 2.0 * (0..d).map(|c| rotation.entry(r, c).abs()).sum::<f64>())
                    .collect();
                (
                    center.iter().zip(&half).map(|(c, h)| c - h).collect(),
                    center.iter().zip(&half).map(|(c, h)| c + h).collect(),
                )
            }
            Self::Clipped { cube, .. } => cube.bounding_box(),
            Self::Explicit { dim, points } => {
                let mut lo = vec![f64::INFINITY; *dim];
                let mut hi = vec![f64::NEG_INFINITY; *dim];
                for p in points {
                    for k in 0..*dim {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Same region shifted by `shift`.
    pub fn translated(&self, shift: &[f64]) -> Self {
        let add = |v: &[f64]| v.iter().zip(shift).map(|(a, b)| a + b).collect::<Vec<_>>();
        match self {
            Self::AxisCube { center, side } => Self::AxisCube { center: add(center), side: *side },
            Self::RotatedCube { center, side, nu, rotation } => Self::RotatedCube {
                center: add(center),
                side: *side,
                nu: nu.clone(),
                rotation: rotation.clone(),
            },
            Self::Clipped { cube, point, normal } => Self::Clipped {
                cube: Box::new(cube.translated(shift)),
                point: add(point),
                normal: normal.clone(),
            },
            Self::Explicit { dim, points } => Self::Explicit {
                dim: *dim,
                points: points.iter().map(|p| add(p)).collect(),
            },
        }
    }
}

fn check_cube(center: &[f64], side: f64) -> Result<()> {
    if center.is_empty() {
        return Err(Error::InvalidParameter("cube center has dimension 0".into()));
    }
    if !(side.is_finite() && side > 0.0) || center.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter(format!("invalid cube (side {side})")));
    }
    Ok(())
}

/// Physical position `eps * i` of a site.
pub fn physical(site: &[i64], eps: f64) -> Vec<f64> {
    site.iter().map(|&k| k as f64 * eps).collect()
}

/// Calls `f` on every integer point of the box `lo..=hi`, in lexicographic order.
pub(crate) fn for_each_in_box(lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64])) {
    let d = lo.len();
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return;
    }
    let mut cur = lo.to_vec();
    loop {
        f(&cur);
        let mut k = d;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if cur[k] < hi[k] {
                cur[k] += 1;
                for j in k + 1..d {
                    cur[j] = lo[j];
                }
                break;
            }
        }
    }
}

/// `Z_eps(region)`: the lattice sites `eps Z^d` inside `region`, sorted
/// lexicographically.
pub fn lattice_points(region: &LatticeRegion, eps: f64) -> Result<Vec<Site>> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    if let LatticeRegion::Explicit { points, .. } = region {
        let mut sites: Vec<Site> = points
            .iter()
            .filter_map(|p| {
                let idx: Vec<i64> = p.iter().map(|x| (x / eps).round() as i64).collect();
                let on_lattice = p
                    .iter()
                    .zip(&idx)
                    .all(|(x, &k)| (x / eps - k as f64).abs() <= 1e-9);
                on_lattice.then_some(idx)
            })
            .collect();
        sites.sort();
        sites.dedup();
        return Ok(sites);
    }
    let (lo, hi) = region.bounding_box();
    let lo_i: Vec<i64> = lo.iter().map(|x| (x / eps - 1e-9).ceil() as i64).collect();
    let hi_i: Vec<i64> = hi.iter().map(|x| (x / eps + 1e-9).floor() as i64).collect();
    let mut sites = Vec::new();
    for_each_in_box(&lo_i, &hi_i, |idx| {
        if region.contains(&physical(idx, eps)) {
            sites.push(idx.to_vec());
        }
    });
    Ok(sites)
}

/// The two-valued jump function `u_{x0,nu}^{z1,z2}` at `site`: `z2` on the
/// closed half-space `(x - x0) . nu >= 0`, `z1` elsewhere.
pub fn jump_datum(x0: &[f64], nu: &[f64], z1: f64, z2: f64, site: &[f64]) -> Result<f64> {
    check_unit(nu)?;
    if x0.len() != nu.len() || site.len() != nu.len() {
        return Err(Error::InvalidParameter("jump datum dimension mismatch".into()));
    }
    Ok(jump_value(x0, nu, z1, z2, site))
}

pub(crate) fn jump_value(x0: &[f64], nu: &[f64], z1: f64, z2: f64, site: &[f64]) -> f64 {
    let dot: f64 = site.iter().zip(x0).zip(nu).map(|((s, c), n)| (s - c) * n).sum();
    if dot >= 0.0 {
        z2
    } else {
        z1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn open_unit_square_excludes_boundary() {
        let q = LatticeRegion::axis_cube(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(lattice_points(&q, 0.5).unwrap(), vec![vec![0, 0]]);
    }

    #[test]
    fn one_dimensional_cube() {
        let q = LatticeRegion::axis_cube(vec![0.0], 1.0).unwrap();
        assert_eq!(lattice_points(&q, 0.25).unwrap(), vec![vec![-1], vec![0], vec![1]]);
    }

    #[test]
    fn rotated_cube_matches_brute_force_scan() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let nu = [s, s];
        let q = LatticeRegion::rotated_cube(vec![0.0, 0.0], 4.0, &nu).unwrap();
        let pts = lattice_points(&q, 1.0).unwrap();
        let r = rotation_to(&nu).unwrap();
        let mut brute = 0;
        for a in -10i64..=10 {
            for b in -10i64..=10 {
                let local = r.apply_transpose(&[a as f64, b as f64]);
                if local.iter().all(|v| v.abs() < 2.0 - 1e-12) {
                    brute += 1;
                }
            }
        }
        assert_eq!(pts.len(), brute);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn eps_must_be_positive() {
        let q = LatticeRegion::axis_cube(vec![0.0], 1.0).unwrap();
        assert!(matches!(lattice_points(&q, 0.0), Err(Error::InvalidParameter(_))));
        assert!(lattice_points(&q, -1.0).is_err());
    }

    #[test]
    fn empty_region_gives_no_sites() {
        let q = LatticeRegion::axis_cube(vec![0.5, 0.5], 0.5).unwrap();
        assert!(lattice_points(&q, 1.0).unwrap().is_empty());
    }

    #[test]
    fn rotation_identity_and_flip() {
        assert_eq!(rotation_to(&[0.0, 0.0, 1.0]).unwrap(), Rotation::identity(3));
        let r = rotation_to(&[0.0, 0.0, -1.0]).unwrap();
        assert!((r.determinant() - 1.0).abs() < 1e-14);
        let e = r.column(2);
        assert_eq!(e, vec![0.0, 0.0, -1.0]);
        for row in 0..3 {
            for col in 0..3 {
                let expect = match (row, col) {
                    (0, 0) => -1.0,
                    (1, 1) => 1.0,
                    (2, 2) => -1.0,
                    _ => 0.0,
                };
                assert_eq!(r.entry(row, col), expect);
            }
        }
    }

    #[test]
    fn rotation_of_diagonal_direction() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = rotation_to(&[s, s]).unwrap();
        let c0 = r.column(0);
        let c1 = r.column(1);
        assert!((c0[0] - s).abs() < 1e-14 && (c0[1] + s).abs() < 1e-14);
        assert!((c1[0] - s).abs() < 1e-14 && (c1[1] - s).abs() < 1e-14);
        assert!(r.orthogonality_defect() < 1e-14);
    }

    #[test]
    fn rotation_rejects_non_unit() {
        assert!(rotation_to(&[1.0, 1.0]).is_err());
        assert!(rotation_to(&[]).is_err());
    }

    #[test]
    fn jump_datum_tie_goes_to_upper_value() {
        let x0 = [0.0, 0.0];
        let nu = [0.0, 1.0];
        assert_eq!(jump_datum(&x0, &nu, -1.0, 1.0, &[3.0, 0.0]).unwrap(), 1.0);
        assert_eq!(jump_datum(&x0, &nu, -1.0, 1.0, &[0.0, -0.25]).unwrap(), -1.0);
        assert!(jump_datum(&x0, &[0.0, 2.0], -1.0, 1.0, &[0.0, 0.0]).is_err());
    }

    fn unit_vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, dim)
            .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
            .prop_map(|v| normalize(&v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn rotations_are_proper(nu in (2usize..=4).prop_flat_map(unit_vector)) {
            let r = rotation_to(&nu).unwrap();
            prop_assert!(r.orthogonality_defect() <= 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() <= 1e-12);
            let image = r.column(nu.len() - 1);
            for (a, b) in image.iter().zip(&nu) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn enumeration_is_translation_invariant(
            cx in -2.0f64..2.0, cy in -2.0f64..2.0, side in 0.5f64..4.0,
            angle in 0.0f64..std::f64::consts::TAU, zx in -5i64..5, zy in -5i64..5,
        ) {
            let eps = 0.5;
            let nu = [angle.cos(), angle.sin()];
            let q = LatticeRegion::rotated_cube(vec![cx, cy], side, &nu).unwrap();
            let shift = [zx as f64 * eps, zy as f64 * eps];
            let moved = lattice_points(&q.translated(&shift), eps).unwrap();
            let base: Vec<Site> = lattice_points(&q, eps).unwrap()
                .into_iter().map(|s| vec![s[0] + zx, s[1] + zy]).collect();
            prop_assert_eq!(moved, base);
        }

        #[test]
        fn jump_datum_matches_sign_of_projection(
            px in -5.0f64..5.0, py in -5.0f64..5.0, angle in 0.0f64..std::f64::consts::TAU,
        ) {
            let nu = [angle.cos(), angle.sin()];
            let v = jump_datum(&[0.1, -0.2], &nu, -1.0, 1.0, &[px, py]).unwrap();
            let dot = (px - 0.1) * nu[0] + (py + 0.2) * nu[1];
            prop_assert_eq!(v, if dot >= 0.0 { 1.0 } else { -1.0 });
        }
    }
}
