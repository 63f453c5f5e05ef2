//! Reproducible multivariate Gaussian data.

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::corrmat::CorrMatrix;
use crate::error::{Error, Result};
use crate::linalg::{mul_transpose, sym_eigen_desc};
use crate::rng::SeedSpec;

/// n × p observations, one row per observation.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    rows: DMatrix<f64>,
    pub label: String,
}

impl Dataset {
    pub fn new(rows: DMatrix<f64>, label: impl Into<String>) -> Result<Self> {
        if rows.nrows() == 0 || rows.ncols() == 0 {
            return Err(Error::domain("dataset must have at least one row and one column"));
        }
        if let Some(pos) = rows.iter().position(|x| !x.is_finite()) {
            let n = rows.nrows();
            return Err(Error::domain(format!(
                "non-finite entry at row {}, column {}",
                pos % n,
                pos / n
            )));
        }
        Ok(Self {
            rows,
            label: label.into(),
        })
    }

    /// Row-major construction, convenient for hand-written fixtures.
    pub fn from_rows(rows: &[Vec<f64>], label: impl Into<String>) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::DimensionMismatch("rows have different lengths".into()));
        }
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]), label)
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn p(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn into_rows(self) -> DMatrix<f64> {
        self.rows
    }

    pub fn map_columns(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let mut rows = self.rows.clone();
        for (j, mut col) in rows.column_iter_mut().enumerate() {
            col.iter_mut().for_each(|x| *x = f(j, *x));
        }
        Self {
            rows,
            label: self.label.clone(),
        }
    }

    pub fn permute_rows(&self, order: &[usize]) -> Self {
        let rows = DMatrix::from_fn(self.n(), self.p(), |i, j| self.rows[(order[i], j)]);
        Self {
            rows,
            label: self.label.clone(),
        }
    }
}

fn standard_normals<R: Rng>(rng: &mut R, n: usize, k: usize) -> DMatrix<f64> {
    let mut z = DMatrix::<f64>::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            z[(i, j)] = rng.sample(StandardNormal);
        }
    }
    z
}

enum Factor {
    Identity,
    Dense(DMatrix<f64>),
}

/// Sampler for N_p(μ, D^{1/2} R D^{1/2}) with the factorization done once.
///
/// Coordinates with r_ij = ±1 exactly are generated as signed copies of an
/// earlier coordinate, so perfectly correlated columns come out bitwise
/// equal. The remaining block is factored by Cholesky, retried with
/// 1e-12·I and 1e-10·I added, and finally by a clamped eigen-factor.
pub struct MvnSampler {
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// For each coordinate: (index into the reduced block, sign).
    source: Vec<(usize, f64)>,
    reduced_dim: usize,
    factor: Factor,
}

impl MvnSampler {
    pub fn new(r: &CorrMatrix, scale: &[f64], mean: &[f64]) -> Result<Self> {
        let p = r.p();
        if scale.len() != p || mean.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "R is {p}x{p} but scale has {} and mean has {} entries",
                scale.len(),
                mean.len()
            )));
        }
        if let Some(s) = scale.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::domain(format!("scale entries must be positive, got {s}")));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::domain("mean entries must be finite"));
        }

        let mut reps: Vec<usize> = Vec::new();
        let mut source = Vec::with_capacity(p);
        for j in 0..p {
            let found = reps.iter().enumerate().find_map(|(slot, &i)| {
                let v = r.get(i, j);
                (v.abs() == 1.0).then_some((slot, v))
            });
            match found {
                Some((slot, sign)) => source.push((slot, sign)),
                None => {
                    source.push((reps.len(), 1.0));
                    reps.push(j);
                }
            }
        }
        let q = reps.len();
        let reduced = DMatrix::from_fn(q, q, |a, b| r.get(reps[a], reps[b]));
        let factor = if reduced == DMatrix::identity(q, q) {
            Factor::Identity
        } else {
            Factor::Dense(factorize(reduced)?)
        };
        Ok(Self {
            mean: mean.to_vec(),
            scale: scale.to_vec(),
            source,
            reduced_dim: q,
            factor,
        })
    }

    pub fn p(&self) -> usize {
        self.source.len()
    }

    pub fn sample_with<R: Rng>(&self, n: usize, rng: &mut R) -> DMatrix<f64> {
        let z = standard_normals(rng, n, self.reduced_dim);
        let y = match &self.factor {
            Factor::Identity => z,
            Factor::Dense(f) => mul_transpose(&z, f),
        };
        let p = self.p();
        let mut x = DMatrix::<f64>::zeros(n, p);
        for j in 0..p {
            let (slot, sign) = self.source[j];
            let (mu, s) = (self.mean[j], self.scale[j] * sign);
            for i in 0..n {
                x[(i, j)] = mu + s * y[(i, slot)];
            }
        }
        x
    }

    pub fn sample(&self, n: usize, seed: SeedSpec) -> Result<Dataset> {
        if n < 2 {
            return Err(Error::domain("need at least 2 observations"));
        }
        Dataset::new(
            self.sample_with(n, &mut seed.rng()),
            format!("mvn p={} n={n} seed={seed:?}", self.p()),
        )
    }
}

fn factorize(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let q = m.nrows();
    for jitter in [0.0, 1e-12, 1e-10] {
        let mut a = m.clone();
        for i in 0..q {
            a[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(a) {
            return Ok(chol.unpack());
        }
    }
    let (values, vectors) = sym_eigen_desc(&m);
    if let Some(&min) = values.last() {
        if min < -crate::corrmat::PSD_TOLERANCE {
            return Err(Error::Numeric(format!(
                "covariance factorization failed: smallest eigenvalue {min:e}"
            )));
        }
    }
    let mut f = vectors;
    for (c, v) in values.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        f.column_mut(c).iter_mut().for_each(|x| *x *= s);
    }
    Ok(f)
}

/// n i.i.d. rows from N_p(μ, Σ), Σ = diag(scale) R diag(scale).
pub fn sample_dataset(r: &CorrMatrix, scale: &[f64], mean: &[f64], n: usize, seed: SeedSpec) -> Result<Dataset> {
    MvnSampler::new(r, scale, mean)?.sample(n, seed)
}

/// Each row is √r·Z·𝟙 + √(1−r)·W on the first `block` coordinates and W on
/// the rest. Per row, Z is drawn first and then the p entries of W.
pub(crate) fn fill_block_compound<R: Rng>(rng: &mut R, n: usize, p: usize, block: usize, r: f64) -> DMatrix<f64> {
    let (a, b) = (r.sqrt(), (1.0 - r).sqrt());
    let mut x = DMatrix::<f64>::zeros(n, p);
    for i in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        let shared = a * z;
        for j in 0..p {
            let w: f64 = rng.sample(StandardNormal);
            x[(i, j)] = if j < block { shared + b * w } else { w };
        }
    }
    x
}

pub(crate) fn fill_iid<R: Rng>(rng: &mut R, n: usize, p: usize) -> DMatrix<f64> {
    standard_normals(rng, n, p)
}

/// Compound-symmetric N_p(0, (1−r)I + rJ) data in O(np) time.
pub fn sample_compound_fast(p: usize, r: f64, n: usize, seed: SeedSpec) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::domain(format!(
            "compound symmetric correlation r = {r} outside [0, 1]"
        )));
    }
    if n < 2 || p == 0 {
        return Err(Error::domain("need n >= 2 and p >= 1"));
    }
    let rows = fill_block_compound(&mut seed.rng(), n, p, p, r);
    Dataset::new(rows, format!("compound p={p} r={r} n={n} seed={seed:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrmat::{ar1, compound_symmetric};

    #[test]
    fn identity_columns_are_standard() {
        let p = 4;
        let d = sample_dataset(
            &CorrMatrix::identity(p),
            &[1.0; 4],
            &[0.0; 4],
            20_000,
            SeedSpec::new(1, 0),
        )
        .unwrap();
        for j in 0..p {
            let col = d.rows().column(j);
            let mean = col.mean();
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / d.n() as f64;
            assert!((var - 1.0).abs() < 0.05, "var {var}");
            assert!(mean.abs() < 0.05);
        }
    }

    #[test]
    fn all_ones_gives_identical_columns() {
        let p = 6;
        let d = sample_dataset(&CorrMatrix::all_ones(p), &[1.0; 6], &[0.0; 6], 50, SeedSpec::new(2, 0)).unwrap();
        for i in 0..d.n() {
            for j in 1..p {
                assert!((d.rows()[(i, j)] - d.rows()[(i, 0)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn seeded_output_is_reproducible() {
        let r = ar1(5, 0.4).unwrap();
        let a = sample_dataset(
            &r,
            &[1.0, 2.0, 3.0, 4.0, 5.0],
            &[0.0, 1.0, 0.0, 1.0, 0.0],
            30,
            SeedSpec::new(5, 9),
        )
        .unwrap();
        let b = sample_dataset(
            &r,
            &[1.0, 2.0, 3.0, 4.0, 5.0],
            &[0.0, 1.0, 0.0, 1.0, 0.0],
            30,
            SeedSpec::new(5, 9),
        )
        .unwrap();
        assert_eq!(a, b);
        let c = sample_dataset(&r, &[1.0; 5], &[0.0; 5], 30, SeedSpec::new(5, 10)).unwrap();
        assert_ne!(a.rows(), c.rows());
    }

    #[test]
    fn rejects_bad_arguments() {
        let r = CorrMatrix::identity(2);
        assert!(sample_dataset(&r, &[1.0, 0.0], &[0.0, 0.0], 5, SeedSpec::new(0, 0)).is_err());
        assert!(sample_dataset(&r, &[1.0], &[0.0, 0.0], 5, SeedSpec::new(0, 0)).is_err());
        assert!(sample_dataset(&r, &[1.0, 1.0], &[0.0, 0.0], 1, SeedSpec::new(0, 0)).is_err());
        assert!(sample_compound_fast(3, 1.5, 5, SeedSpec::new(0, 0)).is_err());
    }

    #[test]
    fn compound_fast_limits() {
        let d = sample_compound_fast(5, 1.0, 10, SeedSpec::new(3, 0)).unwrap();
        for i in 0..10 {
            for j in 1..5 {
                assert_eq!(d.rows()[(i, j)], d.rows()[(i, 0)]);
            }
        }
        // r = 0 consumes the shared draw but ignores it.
        let d0 = sample_compound_fast(5, 0.0, 10, SeedSpec::new(3, 0)).unwrap();
        let mut rng = SeedSpec::new(3, 0).rng();
        for i in 0..10 {
            let _: f64 = rng.sample(StandardNormal);
            for j in 0..5 {
                let w: f64 = rng.sample(StandardNormal);
                assert_eq!(d0.rows()[(i, j)], w);
            }
        }
    }

    #[test]
    fn compound_fast_covariance() {
        // Analytic covariance of √r Z𝟙 + √(1−r) W: r off the diagonal, 1 on it.
        let (p, r, n) = (4usize, 0.5, 1_000_000usize);
        let d = sample_compound_fast(p, r, n, SeedSpec::new(11, 0)).unwrap();
        let x = d.rows();
        for a in 0..p {
            for b in 0..=a {
                let c: f64 = (0..n).map(|i| x[(i, a)] * x[(i, b)]).sum::<f64>() / n as f64;
                let want = compound_symmetric(p, r).unwrap().get(a, b);
                assert!((c - want).abs() < 0.01, "({a},{b}) {c} vs {want}");
            }
        }
    }

    #[test]
    fn general_sampler_covariance() {
        let r = ar1(3, -0.7).unwrap();
        let scale = [2.0, 0.5, 1.0];
        let d = sample_dataset(&r, &scale, &[1.0, -1.0, 0.0], 200_000, SeedSpec::new(4, 4)).unwrap();
        let x = d.rows();
        let n = d.n() as f64;
        let means: Vec<f64> = (0..3).map(|j| x.column(j).sum() / n).collect();
        assert!((means[0] - 1.0).abs() < 0.02 && (means[1] + 1.0).abs() < 0.01);
        for a in 0..3 {
            for b in 0..3 {
                let c: f64 = (0..d.n())
                    .map(|i| (x[(i, a)] - means[a]) * (x[(i, b)] - means[b]))
                    .sum::<f64>()
                    / n;
                let want = scale[a] * scale[b] * r.get(a, b);
                assert!((c - want).abs() < 0.03 * scale[a] * scale[b], "({a},{b}) {c} vs {want}");
            }
        }
    }
}
