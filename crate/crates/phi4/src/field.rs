//! Real scalar fields and their Fourier coefficients.

use std::io::{Read, Write};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

const MAGIC: &[u8; 8] = b"PHI4FLD1";
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Real field sampled on the cells of a [`Grid`], with a lazily computed
/// spectral representation.
#[derive(Clone)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

/// Fourier-series coefficients of a real field (Hermitian-symmetric).
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field").field("grid", &self.grid).finish_non_exhaustive()
    }
}

impl Field {
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid: grid.clone(), values, spectrum: OnceLock::new() })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()], spectrum: OnceLock::new() }
    }

    /// Samples `f(x)` at every cell.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid: grid.clone(), values, spectrum: OnceLock::new() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access to the physical values; drops the cached spectrum.
    pub fn values_mut(&mut self) -> &mut [f64] {
        self.spectrum = OnceLock::new();
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum { grid: self.grid.clone(), coeffs: self.coeffs().to_vec() }
    }

    /// Cached Fourier coefficients.
    pub fn coeffs(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| {
            let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            self.grid.forward(&mut buf);
            buf
        })
    }

    /// Spatial average `L^{-d} int f`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect(), spectrum: OnceLock::new() }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        same_grid(&self.grid, &other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field { grid: self.grid.clone(), values, spectrum: OnceLock::new() })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// Writes the field: 32-byte header (magic `PHI4FLD1`, `d` and `N` as
    /// little-endian u64, `L` as little-endian f64) followed by `N^d`
    /// little-endian f64 values in row-major cell order.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.grid.dim() as u64).to_le_bytes())?;
        w.write_all(&(self.grid.n() as u64).to_le_bytes())?;
        w.write_all(&self.grid.period().to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 8 * self.values.len());
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from(mut r: impl Read) -> Result<Field> {
        let mut head = [0u8; 32];
        r.read_exact(&mut head).map_err(|_| Error::Format("truncated header".into()))?;
        if &head[..8] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let dim = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
        let n = u64::from_le_bytes(head[16..24].try_into().unwrap()) as usize;
        let period = f64::from_le_bytes(head[24..32].try_into().unwrap());
        let grid = Grid::new(dim, n, period).map_err(|e| Error::Format(e.to_string()))?;
        let mut body = vec![0u8; 8 * grid.len()];
        r.read_exact(&mut body).map_err(|_| Error::Format("truncated body".into()))?;
        let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Field::from_values(&grid, values)
    }
}

impl Spectrum {
    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), coeffs: vec![ZERO; grid.len()] }
    }

    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidArgument("coefficient count does not match grid".into()));
        }
        Ok(Self { grid: grid.clone(), coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Physical field; the imaginary residue of round-off is discarded.
    pub fn to_field(&self) -> Field {
        let mut buf = self.coeffs.clone();
        self.grid.inverse(&mut buf);
        let values = buf.iter().map(|c| c.re).collect();
        Field { grid: self.grid.clone(), values, spectrum: OnceLock::new() }
    }

    /// Largest deviation from Hermitian symmetry `c_{-k} = conj(c_k)`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[self.grid.conj_index(i)] - self.coeffs[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Pointwise-in-frequency linear combination `self + c * other`.
    pub fn axpy(&mut self, c: f64, other: &Spectrum) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
    }

    pub fn scaled(&self, c: f64) -> Spectrum {
        Spectrum { grid: self.grid.clone(), coeffs: self.coeffs.iter().map(|z| z * c).collect() }
    }

    /// Multiplies mode `k` by `m(idx)`.
    pub fn map_modes(&self, m: impl Fn(usize) -> Complex64) -> Spectrum {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, z)| z * m(i)).collect();
        Spectrum { grid: self.grid.clone(), coeffs }
    }

    /// `L^2` energy `L^{-d} int |f|^2 = sum_k |c_k|^2`.
    pub fn mean_square(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Values on the `2N` padded grid (band-limited interpolation).
    pub fn to_padded_values(&self) -> Vec<f64> {
        let big = self.grid.padded();
        let map = self.grid.pad_map();
        let mut buf = vec![ZERO; big.len()];
        for (c, slots) in self.coeffs.iter().zip(&map.targets) {
            let w = 1.0 / slots.len() as f64;
            for &s in slots {
                buf[s] = c * w;
            }
        }
        big.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Projects values given on the padded grid back onto this grid's modes.
    pub fn from_padded_values(grid: &Grid, values: &[f64]) -> Spectrum {
        let big = grid.padded();
        assert_eq!(values.len(), big.len());
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        big.forward(&mut buf);
        let map = grid.pad_map();
        let coeffs = map.targets.iter().map(|slots| slots.iter().map(|&s| buf[s]).sum()).collect();
        Spectrum { grid: grid.clone(), coeffs }
    }
}

pub(crate) fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Dealiased product: both factors are interpolated onto the `2N` grid,
/// multiplied pointwise and truncated back.
pub fn product(a: &Field, b: &Field) -> Result<Field> {
    same_grid(a.grid(), b.grid())?;
    let pa = a.spectrum().to_padded_values();
    let pb = b.spectrum().to_padded_values();
    let prod: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
    Ok(Spectrum::from_padded_values(a.grid(), &prod).to_field())
}

/// Dealiased pointwise cube.
pub fn cubic(f: &Field) -> Field {
    let p = f.spectrum().to_padded_values();
    let cube: Vec<f64> = p.iter().map(|x| x * x * x).collect();
    Spectrum::from_padded_values(f.grid(), &cube).to_field()
}
