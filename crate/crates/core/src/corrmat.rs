//! Population correlation matrices: validation, the spiked model
//! generators, and construction from a prescribed spectrum.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sym_eigenvalues_desc;
use crate::rng::SeedSpec;

/// Smallest eigenvalue accepted as "positive semidefinite".
pub const PSD_TOLERANCE: f64 = 1e-8;
/// Tolerance on Σλᵢ = p in spectrum checks.
pub const SPECTRUM_SUM_TOLERANCE: f64 = 1e-10;

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const DIAGONAL_TOLERANCE: f64 = 1e-10;

/// Dense symmetric correlation matrix with unit diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrMatrix {
    m: DMatrix<f64>,
}

impl CorrMatrix {
    /// Validates `m` and returns it with exact symmetry and an exact unit
    /// diagonal. Rounding-level deviations are repaired; anything larger is
    /// rejected.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows != cols || rows == 0 {
            return Err(Error::DimensionMismatch(format!(
                "correlation matrix must be square and nonempty, got {rows}x{cols}"
            )));
        }
        let p = rows;
        for i in 0..p {
            if !m[(i, i)].is_finite() || (m[(i, i)] - 1.0).abs() > DIAGONAL_TOLERANCE {
                return Err(Error::domain(format!(
                    "diagonal entry {i} is {} (must be 1)",
                    m[(i, i)]
                )));
            }
            for j in 0..i {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::domain(format!("entry ({i},{j}) is not finite")));
                }
                if (a - b).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::domain(format!("matrix is not symmetric at ({i},{j})")));
                }
                if a.abs() > 1.0 + SYMMETRY_TOLERANCE {
                    return Err(Error::domain(format!("entry ({i},{j}) = {a} exceeds 1 in magnitude")));
                }
            }
        }
        let out = Self::from_raw(m);
        let min_eig = out.min_eigenvalue();
        if min_eig < -PSD_TOLERANCE {
            return Err(Error::domain(format!(
                "matrix is not positive semidefinite (smallest eigenvalue {min_eig:e})"
            )));
        }
        Ok(out)
    }

    /// Symmetrizes, clamps, and pins the diagonal without validating.
    fn from_raw(mut m: DMatrix<f64>) -> Self {
        let p = m.nrows();
        for i in 0..p {
            m[(i, i)] = 1.0;
            for j in 0..i {
                let v = (0.5 * (m[(i, j)] + m[(j, i)])).clamp(-1.0, 1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { m }
    }

    pub fn identity(p: usize) -> Self {
        Self {
            m: DMatrix::identity(p, p),
        }
    }

    pub fn all_ones(p: usize) -> Self {
        Self {
            m: DMatrix::from_element(p, p, 1.0),
        }
    }

    pub fn p(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn min_eigenvalue(&self) -> f64 {
        sym_eigenvalues_desc(&self.m).last().copied().unwrap_or(0.0)
    }

    /// Re-checks every invariant; generator outputs are expected to pass.
    pub fn validate(&self) -> Result<()> {
        Self::new(self.m.clone()).map(|_| ())
    }
}

/// Candidate eigenvalue list for a correlation matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpectrumSpec {
    lambdas: Vec<f64>,
}

impl SpectrumSpec {
    /// Wraps the values as given; ordering is checked by the consumers.
    pub fn new(lambdas: Vec<f64>) -> Self {
        Self { lambdas }
    }

    /// Sorts descending (stable) before wrapping.
    pub fn from_unsorted(mut lambdas: Vec<f64>) -> Self {
        lambdas.sort_by(|a, b| b.total_cmp(a));
        Self { lambdas }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.lambdas
    }
}

/// (1 − r)I + rJ.
pub fn compound_symmetric(p: usize, r: f64) -> Result<CorrMatrix> {
    if p == 0 {
        return Err(Error::domain("dimension must be positive"));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::domain(format!(
            "compound symmetric correlation r = {r} outside [0, 1]"
        )));
    }
    let m = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { r });
    Ok(CorrMatrix { m })
}

/// Size of the correlated block in [`block_spiked`]: ⌊p^r⌋.
pub fn block_size(p: usize, r: f64) -> usize {
    // p^r lands a hair below an integer for perfect powers (e.g. 100^0.5).
    let m = ((p as f64).powf(r) * (1.0 + 1e-12)).floor() as usize;
    m.clamp(1, p)
}

/// Compound-symmetric block of size ⌊p^r⌋ padded with the identity.
pub fn block_spiked(p: usize, r: f64) -> Result<CorrMatrix> {
    if p == 0 {
        return Err(Error::domain("dimension must be positive"));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("block spiked exponent r = {r} outside (0, 1)")));
    }
    let m = block_size(p, r);
    let mat = DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else if i < m && j < m {
            r
        } else {
            0.0
        }
    });
    Ok(CorrMatrix { m: mat })
}

/// r_ij = γ^|i−j|.
pub fn ar1(p: usize, gamma: f64) -> Result<CorrMatrix> {
    if p == 0 {
        return Err(Error::domain("dimension must be positive"));
    }
    if !(gamma.abs() < 1.0) {
        return Err(Error::domain(format!(
            "AR(1) coefficient {gamma} must satisfy |gamma| < 1"
        )));
    }
    let m = DMatrix::from_fn(p, p, |i, j| gamma.powi(i.abs_diff(j) as i32));
    Ok(CorrMatrix { m })
}

/// The "rainbow" spectrum: ⌊ln(p+2)⌋ geometrically decaying spikes of total
/// excess τ√p, a bulk of ones, one fractional eigenvalue and trailing zeros.
pub fn geometric_spike_spectrum(p: usize, tau: f64) -> Result<SpectrumSpec> {
    if p < 2 {
        return Err(Error::domain("geometric spike spectrum needs p >= 2"));
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::domain(format!("tau = {tau} must be finite and nonnegative")));
    }
    let m = ((p as f64 + 2.0).ln().floor() as usize).max(1);
    let excess = tau * (p as f64).sqrt();
    let whole = excess.floor();
    let p_prime = p as i64 - whole as i64;
    if p_prime <= m as i64 {
        return Err(Error::domain(format!(
            "tau = {tau} too large for p = {p}: fewer than {m} unit eigenvalues remain"
        )));
    }
    let p_prime = p_prime as usize;
    let norm = 1.0 - 0.5f64.powi(m as i32);
    let mut lambdas = Vec::with_capacity(p);
    for i in 1..=m {
        lambdas.push(1.0 + excess * 0.5f64.powi(i as i32) / norm);
    }
    lambdas.resize(p_prime - 1, 1.0);
    lambdas.push(1.0 + whole - excess);
    lambdas.resize(p, 0.0);
    Ok(SpectrumSpec { lambdas })
}

/// Partial sums λ₁+…+λ_k ≥ k for every k and Σλᵢ = p.
///
/// Errors if the list is not sorted descending or holds a negative value.
pub fn check_majorization(spec: &SpectrumSpec) -> Result<bool> {
    let v = spec.as_slice();
    if v.is_empty() {
        return Err(Error::domain("empty spectrum"));
    }
    if let Some(k) = v.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::domain(format!(
            "spectrum is not sorted descending at position {}",
            k + 1
        )));
    }
    if let Some(&x) = v.iter().find(|x| !x.is_finite() || **x < -SPECTRUM_SUM_TOLERANCE) {
        return Err(Error::domain(format!("spectrum has invalid value {x}")));
    }
    let mut partial = 0.0;
    for (k, &x) in v.iter().enumerate() {
        partial += x;
        if partial < (k + 1) as f64 - SPECTRUM_SUM_TOLERANCE {
            return Ok(false);
        }
    }
    Ok((partial - v.len() as f64).abs() <= SPECTRUM_SUM_TOLERANCE)
}

/// Builds a correlation matrix with the given eigenvalues by Givens
/// rotations of diag(λ) (Bendel–Mickey). Each rotation pins one diagonal
/// entry to 1, so at most p − 1 rotations are applied.
///
/// With `seed`, the eigenvalues are placed on the initial diagonal in a
/// seeded random order, which changes the rotation sequence and hence the
/// representative returned. Without it the order is the given one.
pub fn from_spectrum(spec: &SpectrumSpec, seed: Option<SeedSpec>) -> Result<CorrMatrix> {
    let ok = check_majorization(spec).map_err(|e| Error::NotCorrelationSpectrum(e.to_string()))?;
    if !ok {
        return Err(Error::NotCorrelationSpectrum(
            "partial sums must dominate k and the total must equal p".into(),
        ));
    }
    let mut diag: Vec<f64> = spec.as_slice().iter().map(|x| x.max(0.0)).collect();
    if let Some(seed) = seed {
        let mut rng = seed.rng();
        for i in (1..diag.len()).rev() {
            let j = rng.random_range(0..=i);
            diag.swap(i, j);
        }
    }
    let p = diag.len();
    let mut a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
    const DONE: f64 = 1e-13;
    loop {
        let below = (0..p).find(|&k| a[(k, k)] < 1.0 - DONE);
        let above = (0..p).find(|&k| a[(k, k)] > 1.0 + DONE);
        let (i, j) = match (below, above) {
            (Some(i), Some(j)) => (i, j),
            _ => break,
        };
        givens_pin_unit(&mut a, i, j);
    }
    Ok(CorrMatrix::from_raw(a))
}

/// Rotates the (i, j) plane so that a_ii becomes exactly 1. Requires
/// a_ii < 1 < a_jj.
fn givens_pin_unit(a: &mut DMatrix<f64>, i: usize, j: usize) {
    let aii = a[(i, i)];
    let ajj = a[(j, j)];
    let aij = a[(i, j)];
    let disc = (aij * aij - (aii - 1.0) * (ajj - 1.0)).sqrt();
    let sign = if aij < 0.0 { -1.0 } else { 1.0 };
    // Smaller-magnitude root of (a_jj − 1)t² − 2a_ij t + (a_ii − 1) = 0.
    let t = (aii - 1.0) / (aij + sign * disc);
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = c * t;
    let p = a.nrows();
    for k in 0..p {
        let (x, y) = (a[(k, i)], a[(k, j)]);
        a[(k, i)] = c * x - s * y;
        a[(k, j)] = s * x + c * y;
    }
    for k in 0..p {
        let (x, y) = (a[(i, k)], a[(j, k)]);
        a[(i, k)] = c * x - s * y;
        a[(j, k)] = s * x + c * y;
    }
    a[(i, i)] = 1.0;
    let off = 0.5 * (a[(i, j)] + a[(j, i)]);
    a[(i, j)] = off;
    a[(j, i)] = off;
}

/// Descending eigenvalues.
pub fn spectrum(r: &CorrMatrix) -> SpectrumSpec {
    SpectrumSpec::new(sym_eigenvalues_desc(r.as_matrix()))
}

/// tr(Rᵏ) for k in 1..=8, computed from matrix products (not eigenvalues).
pub fn trace_power(r: &CorrMatrix, k: u32) -> Result<f64> {
    if !(1..=8).contains(&k) {
        return Err(Error::domain(format!("trace power k = {k} outside 1..=8")));
    }
    let p = r.p();
    if k == 1 {
        return Ok(p as f64);
    }
    let m = r.as_matrix();
    let lo = k / 2;
    let hi = k - lo;
    let pow = |e: u32| {
        let mut out = m.clone();
        for _ in 1..e {
            out = &out * m;
        }
        out
    };
    let a = pow(lo);
    let b = if hi == lo { a.clone() } else { pow(hi) };
    // tr(AB) = Σ a_ij b_ji, and both factors are symmetric.
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x * y).sum())
}
