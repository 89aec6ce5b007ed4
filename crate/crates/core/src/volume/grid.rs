//! Scalar and vector fields on periodic lattices over the unit torus, with
//! flat binary storage and a JSON sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values at the nodes `(i_0/m_0, …, i_{n-1}/m_{n-1})` of the unit torus,
/// row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridScalarField {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl GridScalarField {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            data: vec![0.0; dims.iter().product()],
        })
    }

    pub fn from_vec(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        check_dims(dims)?;
        let n: usize = dims.iter().product();
        if data.len() != n {
            return Err(Error::Grid(format!("{} values for a grid of {n} nodes", data.len())));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Grid(format!("non-finite value at node {i}")));
        }
        Ok(Self { dims: dims.to_vec(), data })
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(dims: &[usize], f: impl Fn(&[f64]) -> f64 + Sync) -> Result<Self> {
        check_dims(dims)?;
        let n: usize = dims.iter().product();
        let data = (0..n)
            .into_par_iter()
            .map(|i| f(&position(dims, i)))
            .collect();
        Self::from_vec(dims, data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    /// Grid spacing along `axis`.
    pub fn spacing(&self, axis: usize) -> f64 {
        1.0 / self.dims[axis] as f64
    }

    /// Coordinates of node `i`.
    pub fn position(&self, i: usize) -> Vec<f64> {
        position(&self.dims, i)
    }

    /// Indices of the periodic neighbours of node `i` along `axis`.
    pub fn neighbours(&self, i: usize, axis: usize) -> (usize, usize) {
        neighbours(&self.dims, i, axis)
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::Grid(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(())
    }

    /// `f(self_i, other_i)` nodewise.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        self.same_grid(other)?;
        let data = self.data.par_iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { dims: self.dims.clone(), data })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.par_iter().map(|&a| f(a)).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Average over the torus, summed pairwise in a fixed order.
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.data) / self.data.len() as f64
    }

    /// Centered difference `(F(x + e_a) - F(x - e_a)) / 2Δ`.
    pub fn centered_diff(&self, axis: usize) -> Self {
        let h2 = 2.0 * self.spacing(axis);
        let data = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let (lo, hi) = self.neighbours(i, axis);
                (self.data[hi] - self.data[lo]) / h2
            })
            .collect();
        Self { dims: self.dims.clone(), data }
    }
}

/// `n` component fields on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridVectorField {
    components: Vec<GridScalarField>,
}

impl GridVectorField {
    pub fn new(components: Vec<GridScalarField>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::Grid("no components".into()));
        };
        if components.len() != first.ndim() {
            return Err(Error::Grid(format!(
                "{} components on a {}-dimensional grid",
                components.len(),
                first.ndim()
            )));
        }
        for c in &components[1..] {
            first.same_grid(c)?;
        }
        Ok(Self { components })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let c = GridScalarField::zeros(dims)?;
        Self::new(vec![c; dims.len()])
    }

    /// Samples `f` at the grid nodes; `f` returns one value per axis.
    pub fn from_fn(dims: &[usize], f: impl Fn(&[f64]) -> Vec<f64> + Sync) -> Result<Self> {
        check_dims(dims)?;
        let n: usize = dims.iter().product();
        let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|i| f(&position(dims, i))).collect();
        let mut comps = Vec::with_capacity(dims.len());
        for a in 0..dims.len() {
            let data = rows
                .iter()
                .map(|r| {
                    r.get(a)
                        .copied()
                        .ok_or_else(|| Error::Grid(format!("field returned {} components", r.len())))
                })
                .collect::<Result<Vec<f64>>>()?;
            comps.push(GridScalarField::from_vec(dims, data)?);
        }
        Self::new(comps)
    }

    pub fn dims(&self) -> &[usize] {
        self.components[0].dims()
    }

    pub fn ndim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, axis: usize) -> &GridScalarField {
        &self.components[axis]
    }

    pub fn components(&self) -> &[GridScalarField] {
        &self.components
    }

    pub fn into_components(self) -> Vec<GridScalarField> {
        self.components
    }

    pub fn same_grid(&self, s: &GridScalarField) -> Result<()> {
        self.components[0].same_grid(s)
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Sync + Copy) -> Result<Self> {
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.zip_map(b, f))
            .collect::<Result<Vec<_>>>()?;
        if comps.len() != other.components.len() {
            return Err(Error::Grid("component counts differ".into()));
        }
        Self::new(comps)
    }

    pub fn sup_norm(&self) -> f64 {
        self.components.iter().map(GridScalarField::sup_norm).fold(0.0, f64::max)
    }

    /// Discrete `C¹` norm: the larger of the sup norms of the components
    /// and of their centered first differences.
    pub fn c1_norm(&self) -> f64 {
        let mut m = self.sup_norm();
        for c in &self.components {
            for a in 0..c.ndim() {
                m = m.max(c.centered_diff(a).sup_norm());
            }
        }
        m
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if !(dims.len() == 2 || dims.len() == 3) {
        return Err(Error::Grid(format!("dimension {} is not 2 or 3", dims.len())));
    }
    if dims.iter().any(|&m| m < 3) {
        return Err(Error::Grid(format!("grid {dims:?} needs at least 3 nodes per axis")));
    }
    Ok(())
}

fn position(dims: &[usize], mut i: usize) -> Vec<f64> {
    let mut x = vec![0.0; dims.len()];
    for a in (0..dims.len()).rev() {
        x[a] = (i % dims[a]) as f64 / dims[a] as f64;
        i /= dims[a];
    }
    x
}

fn neighbours(dims: &[usize], i: usize, axis: usize) -> (usize, usize) {
    let stride: usize = dims[axis + 1..].iter().product();
    let m = dims[axis];
    let k = (i / stride) % m;
    let base = i - k * stride;
    (base + ((k + m - 1) % m) * stride, base + ((k + 1) % m) * stride)
}

/// Pairwise summation in a fixed order, independent of thread count.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    const LEAF: usize = 256;
    if x.len() <= LEAF {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Sidecar describing a flat binary field file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    /// `"scalar"` or `"vector"`.
    pub kind: String,
    pub dims: Vec<usize>,
    pub components: usize,
    pub dtype: String,
    pub layout: String,
}

const DTYPE: &str = "f64 little-endian";
const LAYOUT: &str = "row-major, last axis fastest; vector components stored one after another";

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

fn write_raw(stem: &Path, kind: &str, dims: &[usize], parts: &[&[f64]]) -> Result<()> {
    let (bin, json) = paths(stem);
    let mut bytes = Vec::with_capacity(8 * parts.iter().map(|p| p.len()).sum::<usize>());
    for p in parts {
        for v in *p {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(bin, bytes)?;
    let side = FieldSidecar {
        kind: kind.into(),
        dims: dims.to_vec(),
        components: parts.len(),
        dtype: DTYPE.into(),
        layout: LAYOUT.into(),
    };
    fs::write(json, serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

fn read_raw(stem: &Path, kind: &str) -> Result<(FieldSidecar, Vec<f64>)> {
    let (bin, json) = paths(stem);
    let side: FieldSidecar = serde_json::from_str(&fs::read_to_string(json)?)?;
    if side.kind != kind || side.dtype != DTYPE {
        return Err(Error::Parse(format!("expected a {kind} field of {DTYPE}, found {} of {}", side.kind, side.dtype)));
    }
    let bytes = fs::read(bin)?;
    let n: usize = side.dims.iter().product::<usize>() * side.components;
    if bytes.len() != 8 * n {
        return Err(Error::Parse(format!("{} bytes for {n} values", bytes.len())));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((side, data))
}

impl GridScalarField {
    /// Writes `stem.bin` and `stem.json`.
    pub fn write(&self, stem: &Path) -> Result<()> {
        write_raw(stem, "scalar", &self.dims, &[&self.data])
    }

    pub fn read(stem: &Path) -> Result<Self> {
        let (side, data) = read_raw(stem, "scalar")?;
        Self::from_vec(&side.dims, data)
    }
}

impl GridVectorField {
    /// Writes `stem.bin` and `stem.json`.
    pub fn write(&self, stem: &Path) -> Result<()> {
        let parts: Vec<&[f64]> = self.components.iter().map(|c| c.values()).collect();
        write_raw(stem, "vector", self.dims(), &parts)
    }

    pub fn read(stem: &Path) -> Result<Self> {
        let (side, data) = read_raw(stem, "vector")?;
        if side.components != side.dims.len() {
            return Err(Error::Parse(format!(
                "{} components on a {}-dimensional grid",
                side.components,
                side.dims.len()
            )));
        }
        let n: usize = side.dims.iter().product();
        let comps = data
            .chunks_exact(n)
            .map(|c| GridScalarField::from_vec(&side.dims, c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbours_wrap_around_each_axis() {
        let f = GridScalarField::zeros(&[4, 5, 6]).unwrap();
        // Node (0, 4, 5).
        let i = 4 * 6 + 5;
        assert_eq!(f.neighbours(i, 0), (3 * 30 + i, 30 + i));
        assert_eq!(f.neighbours(i, 1), (3 * 6 + 5, 5));
        assert_eq!(f.neighbours(i, 2), (4 * 6 + 4, 4 * 6));
        assert_eq!(f.position(i), vec![0.0, 0.8, 5.0 / 6.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(GridScalarField::zeros(&[8]).is_err());
        assert!(GridScalarField::zeros(&[8, 2]).is_err());
        assert!(GridScalarField::from_vec(&[3, 3], vec![0.0; 8]).is_err());
        assert!(GridScalarField::from_vec(&[3, 3], vec![f64::NAN; 9]).is_err());
        let a = GridScalarField::zeros(&[4, 4]).unwrap();
        let b = GridScalarField::zeros(&[4, 5]).unwrap();
        assert!(GridVectorField::new(vec![a, b]).is_err());
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let x: Vec<f64> = (0..10_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&x), 49_995_000.0);
    }

    #[test]
    fn binary_round_trip() {
        let dir = std::env::temp_dir().join(format!("thermoflow-grid-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let s = GridScalarField::from_fn(&[5, 7], |x| (x[0] * 3.0).sin() + x[1]).unwrap();
        s.write(&dir.join("s")).unwrap();
        assert_eq!(GridScalarField::read(&dir.join("s")).unwrap(), s);
        let v = GridVectorField::from_fn(&[4, 5, 6], |x| vec![x[0], x[1] * x[2], 1.0 / 3.0]).unwrap();
        v.write(&dir.join("v")).unwrap();
        assert_eq!(GridVectorField::read(&dir.join("v")).unwrap(), v);
        assert!(GridScalarField::read(&dir.join("v")).is_err());
        fs::remove_dir_all(dir).unwrap();
    }
}
