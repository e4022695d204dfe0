//! Periodic lattices, second-order stencils for real and complex Hessians,
//! and the HFG1 field file format.
//!
//! Grids are m^d lattices over [0, L)^d with wraparound indexing; the solver
//! uses d = 2n and L = 2π, the measurement helpers accept any d ≥ 1. Storage
//! is row-major with axis 0 slowest.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::background::{complex_from_real_hessian, Background};
use crate::error::{Error, Result};
use crate::sym::{HermMatrix, SymMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGrid {
    dim: usize,
    m: usize,
    period: f64,
    strides: Vec<usize>,
}

impl PeriodicGrid {
    /// Lattice with period 2π.
    pub fn new(dim: usize, m: usize) -> Self {
        Self::with_period(dim, m, 2.0 * std::f64::consts::PI)
    }

    pub fn with_period(dim: usize, m: usize, period: f64) -> Self {
        assert!(dim >= 1 && m >= 2, "grid needs dim >= 1 and m >= 2");
        let mut strides = vec![1usize; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1]
                .checked_mul(m)
                .expect("grid too large for usize indexing");
        }
        PeriodicGrid {
            dim,
            m,
            period,
            strides,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.m
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.m as f64
    }

    pub fn len(&self) -> usize {
        self.strides[0] * self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.strides)
            .map(|(&c, &s)| (c % self.m) * s)
            .sum()
    }

    pub fn coords(&self, mut idx: usize) -> Vec<usize> {
        let mut c = vec![0usize; self.dim];
        for a in 0..self.dim {
            c[a] = idx / self.strides[a];
            idx %= self.strides[a];
        }
        c
    }

    /// Physical coordinates of a lattice point.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let h = self.spacing();
        self.coords(idx).iter().map(|&c| c as f64 * h).collect()
    }

    /// Wrapped neighbor along one axis.
    pub fn neighbor(&self, idx: usize, axis: usize, offset: i64) -> usize {
        let s = self.strides[axis];
        let c = (idx / s) % self.m;
        let nc = (c as i64 + offset).rem_euclid(self.m as i64) as usize;
        idx + nc * s - c * s
    }

    /// Torus distance between two lattice points.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let ca = self.coords(a);
        let cb = self.coords(b);
        let h = self.spacing();
        let half = self.m as f64 / 2.0;
        ca.iter()
            .zip(&cb)
            .map(|(&p, &q)| {
                let d = (p as f64 - q as f64).abs();
                let d = d.min(self.m as f64 - d);
                debug_assert!(d <= half + 1.0);
                (d * h) * (d * h)
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// A grid function: one f64 per lattice point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: PeriodicGrid) -> Self {
        let n = grid.len();
        ScalarField {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        ScalarField { grid, values }
    }

    pub fn from_values(grid: PeriodicGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn subtract_mean(&mut self) {
        let m = self.mean();
        for v in &mut self.values {
            *v -= m;
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, &v| a.max(v.abs()))
    }
}

/// Second-order central-difference real Hessian at a lattice point.
/// Exactly symmetric by assembly.
pub fn real_hessian_fd(u: &ScalarField, idx: usize) -> SymMatrix {
    let g = u.grid();
    let d = g.dim();
    let h = g.spacing();
    let h2 = h * h;
    let v = u.values();
    let u0 = v[idx];
    let mut m = DMatrix::zeros(d, d);
    for a in 0..d {
        let up = v[g.neighbor(idx, a, 1)];
        let dn = v[g.neighbor(idx, a, -1)];
        m[(a, a)] = (up - 2.0 * u0 + dn) / h2;
    }
    for a in 0..d {
        for b in (a + 1)..d {
            let pp = v[g.neighbor(g.neighbor(idx, a, 1), b, 1)];
            let pm = v[g.neighbor(g.neighbor(idx, a, 1), b, -1)];
            let mp = v[g.neighbor(g.neighbor(idx, a, -1), b, 1)];
            let mm = v[g.neighbor(g.neighbor(idx, a, -1), b, -1)];
            let val = (pp - pm - mp + mm) / (4.0 * h2);
            m[(a, b)] = val;
            m[(b, a)] = val;
        }
    }
    SymMatrix::from_symmetric(m)
}

/// Central-difference gradient at a lattice point.
pub fn gradient_fd(u: &ScalarField, idx: usize) -> Vec<f64> {
    let g = u.grid();
    let h = g.spacing();
    let v = u.values();
    (0..g.dim())
        .map(|a| (v[g.neighbor(idx, a, 1)] - v[g.neighbor(idx, a, -1)]) / (2.0 * h))
        .collect()
}

/// Discrete complex Hessian u_{ij̄} assembled from the real stencils; by
/// construction ι(2·complex_hessian_fd) = p(real_hessian_fd) as an exact
/// linear identity of the assemblies.
pub fn complex_hessian_fd(u: &ScalarField, idx: usize) -> HermMatrix {
    complex_from_real_hessian(&real_hessian_fd(u, idx))
}

/// The complex Laplacian tr_g(u_{ij̄}) = g^{j̄i} u_{ij̄}.
///
/// Normalization: for g = I this equals ¼·Σ_a ∂²u/∂x_a² (one quarter of the
/// flat real Laplacian, equivalently one half of the Laplacian of the
/// associated Riemannian metric ι(2g)).
pub fn laplacian(u: &ScalarField, bg: &Background, idx: usize) -> Result<f64> {
    let x = u.grid().point(idx);
    let g = bg.g(&x);
    let min = g.min_eigenvalue();
    if min <= 1e-12 {
        return Err(Error::MetricNotPositive {
            min_eigenvalue: min,
        });
    }
    let ch = complex_hessian_fd(u, idx);
    let solved = g
        .matrix()
        .clone()
        .lu()
        .solve(ch.matrix())
        .expect("positive definite metric is invertible");
    Ok(solved.trace().re)
}

const MAGIC: &[u8; 4] = b"HFG1";

/// Write a field in the HFG1 format: magic, little-endian u32 real_dim and
/// m, then the f64 values row-major with axis 0 slowest.
pub fn write_field(field: &ScalarField, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(MAGIC)?;
    f.write_all(&(field.grid().dim() as u32).to_le_bytes())?;
    f.write_all(&(field.grid().points_per_axis() as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    f.write_all(&buf)?;
    Ok(())
}

/// Read an HFG1 field; the grid period is the solver default 2π (the format
/// does not carry it).
pub fn read_field(path: &Path) -> Result<ScalarField> {
    let mut f = std::fs::File::open(path)?;
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidConfig(format!(
            "bad field file magic {:?}, expected HFG1",
            magic
        )));
    }
    let mut word = [0u8; 4];
    f.read_exact(&mut word)?;
    let dim = u32::from_le_bytes(word) as usize;
    f.read_exact(&mut word)?;
    let m = u32::from_le_bytes(word) as usize;
    if dim == 0 || m < 2 {
        return Err(Error::InvalidConfig(format!(
            "bad field header: dim={dim}, m={m}"
        )));
    }
    let grid = PeriodicGrid::new(dim, m);
    let count = grid.len();
    let mut buf = vec![0u8; count * 8];
    f.read_exact(&mut buf)?;
    let values: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(ScalarField::from_values(grid, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sym::{project_j, ComplexStructure};
    use approx::assert_abs_diff_eq;

    #[test]
    fn indexing_wraps_and_round_trips() {
        let g = PeriodicGrid::new(3, 5);
        assert_eq!(g.len(), 125);
        for idx in [0usize, 7, 124, 63] {
            assert_eq!(g.index(&g.coords(idx)), idx);
        }
        let idx = g.index(&[0, 4, 2]);
        assert_eq!(g.coords(g.neighbor(idx, 1, 1))[1], 0); // wrap up
        assert_eq!(g.coords(g.neighbor(idx, 0, -1))[0], 4); // wrap down
    }

    #[test]
    fn hessian_of_constant_is_zero() {
        let g = PeriodicGrid::new(4, 8);
        let u = ScalarField::from_fn(g, |_| 3.25);
        let h = real_hessian_fd(&u, 17);
        assert_eq!(h.matrix().abs().max(), 0.0);
    }

    #[test]
    fn hessian_diagonal_matches_cosine_symbol() {
        let g = PeriodicGrid::new(2, 16);
        let h = g.spacing();
        let u = ScalarField::from_fn(g, |x| x[0].cos());
        // At x = 0 the second difference of cos is -(2 - 2cos h)/h².
        let hess = real_hessian_fd(&u, 0);
        let expect = -(2.0 - 2.0 * h.cos()) / (h * h);
        assert_abs_diff_eq!(hess.matrix()[(0, 0)], expect, epsilon = 1e-13);
        assert!((hess.matrix()[(0, 0)] + 1.0).abs() <= h * h);
    }

    #[test]
    fn hessian_mixed_entry_matches_product_symbol() {
        let g = PeriodicGrid::new(2, 24);
        let h = g.spacing();
        let u = ScalarField::from_fn(g.clone(), |x| (x[0] + x[1]).cos());
        for idx in [0usize, 5, 100] {
            let x = g.point(idx);
            let s = (x[0] + x[1]).cos();
            let hess = real_hessian_fd(&u, idx);
            let expect = -s * (h.sin() / h) * (h.sin() / h);
            assert_abs_diff_eq!(hess.matrix()[(0, 1)], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn stencil_identity_iota_projection() {
        let g = PeriodicGrid::new(4, 10);
        let u = ScalarField::from_fn(g, |x| {
            (x[0] + 0.5 * x[1]).cos() + 0.3 * (x[2] - x[3]).sin() * x[0].cos()
        });
        let j = ComplexStructure::standard(2);
        for idx in [0usize, 123, 4567, 9999] {
            let d2 = real_hessian_fd(&u, idx);
            let ch = complex_hessian_fd(&u, idx);
            let lhs = crate::sym::iota(&ch.scale(2.0));
            let rhs = project_j(&d2, &j);
            assert!((lhs.matrix() - rhs.matrix()).abs().max() <= 1e-12);
        }
    }

    #[test]
    fn complex_hessian_of_periodized_modulus_squared() {
        // u = 2(2 - cos x¹ - cos x³) ~ |z¹|² near 0 (n = 2).
        let g = PeriodicGrid::new(4, 16);
        let h = g.spacing();
        let u = ScalarField::from_fn(g, |x| 2.0 * (2.0 - x[0].cos() - x[2].cos()));
        let ch = complex_hessian_fd(&u, 0);
        assert!((ch.matrix()[(0, 0)].re - 1.0).abs() <= h * h);
        assert!(ch.matrix()[(1, 1)].norm() <= 1e-13);
        assert!(ch.matrix()[(0, 1)].norm() <= 1e-13);
    }

    #[test]
    fn pluriharmonic_field_kills_complex_hessian() {
        // Re(z₁²) periodized: cos x³ - cos x¹ has zero ∂∂̄ on the diagonal
        // lattice points where both cosines agree.
        let g = PeriodicGrid::new(4, 12);
        let u = ScalarField::from_fn(g.clone(), |x| x[2].cos() - x[0].cos());
        for c in 0..12 {
            let idx = g.index(&[c, 0, c, 0]);
            let ch = complex_hessian_fd(&u, idx);
            assert!(ch.matrix()[(0, 0)].norm() <= 1e-13);
        }
    }

    #[test]
    fn laplacian_flat_quarter_of_real() {
        let g = PeriodicGrid::new(4, 20);
        let h = g.spacing();
        let bg = Background::flat(2);
        let u = ScalarField::from_fn(g.clone(), |x| x[0].cos());
        for idx in [0usize, 31, 1000] {
            let x = g.point(idx);
            let lap = laplacian(&u, &bg, idx).unwrap();
            assert!((lap + 0.25 * x[0].cos()).abs() <= h * h);
        }
        let c = ScalarField::from_fn(g, |_| 1.0);
        assert_eq!(laplacian(&c, &bg, 0).unwrap(), 0.0);
    }

    #[test]
    fn laplacian_is_linear() {
        let g = PeriodicGrid::new(2, 12);
        let bg = Background::flat(1);
        let u = ScalarField::from_fn(g.clone(), |x| (x[0] + 2.0 * x[1]).sin());
        let v = ScalarField::from_fn(g.clone(), |x| (x[0] * 0.0 + x[1]).cos() + x[0].sin());
        let combo = ScalarField::from_values(
            g,
            u.values()
                .iter()
                .zip(v.values())
                .map(|(a, b)| 1.5 * a - 0.7 * b)
                .collect(),
        );
        for idx in [0usize, 17, 100] {
            let lc = laplacian(&combo, &bg, idx).unwrap();
            let lu = laplacian(&u, &bg, idx).unwrap();
            let lv = laplacian(&v, &bg, idx).unwrap();
            assert_abs_diff_eq!(lc, 1.5 * lu - 0.7 * lv, epsilon = 1e-12);
        }
    }

    #[test]
    fn field_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.hfg");
        let g = PeriodicGrid::new(4, 6);
        let u = ScalarField::from_fn(g, |x| (x[0] - x[3]).sin() + 0.2 * x[1].cos());
        write_field(&u, &path).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(u, back);
        // Header bytes: magic + dim + m.
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"HFG1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 4);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 6);
        assert_eq!(bytes.len(), 12 + 8 * 6usize.pow(4));
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.hfg");
        std::fs::write(&path, b"NOPE0000").unwrap();
        assert!(matches!(
            read_field(&path),
            Err(Error::InvalidConfig(_))
        ));
    }
}
