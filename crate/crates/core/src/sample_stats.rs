//! Sample moments with the 1/n divisor (1/(n₁+n₂) when pooled).
//!
//! Every routine first puts the observations into a canonical order
//! (lexicographic on the row values), so permuting rows cannot change any
//! output bit.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gauss_sampling::Dataset;
use crate::linalg::{frobenius_sq, gram_cols, gram_rows, sym_eigenvalues_desc};

/// Mean, covariance, its diagonal and the correlation matrix of a sample.
///
/// For a pooled summary `mean` holds X̄₁ − X̄₂ and `n_eff` is n₁ + n₂.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSummary {
    pub n_eff: usize,
    pub p: usize,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub diag: DVector<f64>,
    pub corr: DMatrix<f64>,
}

/// The two scalars every test statistic needs, plus the sizes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatInputs {
    pub p: usize,
    pub n_eff: usize,
    /// X̄ᵀD̂⁻¹X̄, or the same form in X̄₁ − X̄₂ for pooled data.
    pub quad: f64,
    /// tr(R̂²) = Σᵢⱼ r̂ᵢⱼ².
    pub tr_r2_hat: f64,
}

impl SampleSummary {
    pub fn tr_r2_hat(&self) -> f64 {
        frobenius_sq(&self.corr)
    }

    pub fn quad(&self) -> f64 {
        self.mean.iter().zip(self.diag.iter()).map(|(m, d)| m * m / d).sum()
    }

    pub fn stat_inputs(&self) -> StatInputs {
        StatInputs {
            p: self.p,
            n_eff: self.n_eff,
            quad: self.quad(),
            tr_r2_hat: self.tr_r2_hat(),
        }
    }

    /// Descending eigenvalues of R̂.
    pub fn corr_spectrum(&self) -> Vec<f64> {
        sym_eigenvalues_desc(&self.corr)
    }
}

fn canonical_order(x: &DMatrix<f64>) -> Vec<usize> {
    let (n, p) = x.shape();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        for j in 0..p {
            let c = x[(a, j)].total_cmp(&x[(b, j)]);
            if c.is_ne() {
                return c;
            }
        }
        std::cmp::Ordering::Equal
    });
    order
}

/// Column means and the centered matrix, rows in canonical order.
fn centered(data: &Dataset) -> (DVector<f64>, DMatrix<f64>) {
    let x = data.rows();
    let (n, p) = x.shape();
    let order = canonical_order(x);
    let mut c = DMatrix::from_fn(n, p, |i, j| x[(order[i], j)]);
    let mut mean = DVector::zeros(p);
    for (j, mut col) in c.column_iter_mut().enumerate() {
        let m = col.iter().sum::<f64>() / n as f64;
        mean[j] = m;
        col.iter_mut().for_each(|v| *v -= m);
    }
    (mean, c)
}

/// Sum of squares per column of the stacked centered blocks, with the
/// zero-variance check applied to the pooled value.
fn column_ss(blocks: &[(&Dataset, &DMatrix<f64>)]) -> Result<DVector<f64>> {
    let p = blocks[0].1.ncols();
    let mut ss = DVector::zeros(p);
    for j in 0..p {
        let mut total = 0.0;
        let mut scale = 0.0f64;
        for (data, c) in blocks {
            total += c.column(j).iter().map(|v| v * v).sum::<f64>();
            scale = data.rows().column(j).iter().fold(scale, |acc, v| acc.max(v.abs()));
        }
        let n: usize = blocks.iter().map(|(d, _)| d.n()).sum();
        // Rounding in the mean leaves ~ulp-sized residuals on constant columns.
        if total <= n as f64 * (1e-13 * scale).powi(2) {
            return Err(Error::ZeroVariance { column: j });
        }
        ss[j] = total;
    }
    Ok(ss)
}

fn corr_from_cov(cov: &DMatrix<f64>, diag: &DVector<f64>) -> DMatrix<f64> {
    let p = cov.nrows();
    // sqrt(fl(d·d)) == d exactly, so identical columns give exactly 1.
    DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else {
            (cov[(i, j)] / (diag[i] * diag[j]).sqrt()).clamp(-1.0, 1.0)
        }
    })
}

fn finish(n_eff: usize, mean: DVector<f64>, scatter: DMatrix<f64>) -> SampleSummary {
    let p = mean.len();
    let mut cov = scatter / n_eff as f64;
    // Exact symmetry regardless of the product kernel.
    for i in 0..p {
        for j in 0..i {
            let v = cov[(i, j)];
            cov[(j, i)] = v;
        }
    }
    let diag = cov.diagonal();
    let corr = corr_from_cov(&cov, &diag);
    SampleSummary {
        n_eff,
        p,
        mean,
        cov,
        diag,
        corr,
    }
}

/// One-sample summary of a dataset with n ≥ 2 rows.
pub fn summarize(data: &Dataset) -> Result<SampleSummary> {
    if data.n() < 2 {
        return Err(Error::domain("need at least 2 observations"));
    }
    let (mean, c) = centered(data);
    column_ss(&[(data, &c)])?;
    Ok(finish(data.n(), mean, gram_cols(&c)))
}

fn check_pooled_sizes(d1: &Dataset, d2: &Dataset) -> Result<()> {
    if d1.p() != d2.p() {
        return Err(Error::DimensionMismatch(format!(
            "samples have {} and {} columns",
            d1.p(),
            d2.p()
        )));
    }
    if d1.n() < 2 || d2.n() < 2 || d1.n() + d2.n() < 5 {
        return Err(Error::domain(format!(
            "pooled summary needs n1, n2 >= 2 and n1 + n2 >= 5 (got {} and {})",
            d1.n(),
            d2.n()
        )));
    }
    Ok(())
}

/// Pooled summary of two samples sharing a covariance; `mean` is X̄₁ − X̄₂.
pub fn pooled_summary(d1: &Dataset, d2: &Dataset) -> Result<SampleSummary> {
    check_pooled_sizes(d1, d2)?;
    let (m1, c1) = centered(d1);
    let (m2, c2) = centered(d2);
    column_ss(&[(d1, &c1), (d2, &c2)])?;
    let scatter = gram_cols(&c1) + gram_cols(&c2);
    Ok(finish(d1.n() + d2.n(), m1 - m2, scatter))
}

/// Centered data rescaled so that R̂ = ZᵀZ, stacked over the samples.
struct Standardized {
    z: DMatrix<f64>,
    quad: f64,
    n_eff: usize,
}

fn standardize(samples: &[&Dataset]) -> Result<Standardized> {
    let parts: Vec<(DVector<f64>, DMatrix<f64>)> = samples.iter().map(|d| centered(d)).collect();
    let blocks: Vec<(&Dataset, &DMatrix<f64>)> = samples.iter().copied().zip(parts.iter().map(|(_, c)| c)).collect();
    let ss = column_ss(&blocks)?;
    let n_eff: usize = samples.iter().map(|d| d.n()).sum();
    let p = ss.len();
    let total_rows = n_eff;
    let mut z = DMatrix::<f64>::zeros(total_rows, p);
    let mut offset = 0;
    for (_, c) in &parts {
        z.view_mut((offset, 0), (c.nrows(), p)).copy_from(c);
        offset += c.nrows();
    }
    for (j, mut col) in z.column_iter_mut().enumerate() {
        let s = 1.0 / ss[j].sqrt();
        col.iter_mut().for_each(|v| *v *= s);
    }
    let mean = match parts.as_slice() {
        [(m, _)] => m.clone(),
        [(m1, _), (m2, _)] => m1 - m2,
        _ => unreachable!("one or two samples"),
    };
    let quad = mean
        .iter()
        .zip(ss.iter())
        .map(|(m, s)| m * m / (s / n_eff as f64))
        .sum();
    Ok(Standardized { z, quad, n_eff })
}

impl Standardized {
    fn tr_r2_hat(&self) -> f64 {
        let (n, p) = self.z.shape();
        if n < p {
            frobenius_sq(&gram_rows(&self.z))
        } else {
            frobenius_sq(&gram_cols(&self.z))
        }
    }

    fn corr_spectrum(&self) -> Vec<f64> {
        let (n, p) = self.z.shape();
        let mut v = if n < p {
            sym_eigenvalues_desc(&gram_rows(&self.z))
        } else {
            sym_eigenvalues_desc(&gram_cols(&self.z))
        };
        v.resize(p, 0.0);
        v
    }
}

/// [`StatInputs`] without forming the p × p matrices: tr(R̂²) comes from the
/// smaller of the two Gram matrices of the standardized data.
pub fn stat_inputs(data: &Dataset) -> Result<StatInputs> {
    if data.n() < 2 {
        return Err(Error::domain("need at least 2 observations"));
    }
    let s = standardize(&[data])?;
    Ok(StatInputs {
        p: data.p(),
        n_eff: s.n_eff,
        quad: s.quad,
        tr_r2_hat: s.tr_r2_hat(),
    })
}

pub fn pooled_stat_inputs(d1: &Dataset, d2: &Dataset) -> Result<StatInputs> {
    check_pooled_sizes(d1, d2)?;
    let s = standardize(&[d1, d2])?;
    Ok(StatInputs {
        p: d1.p(),
        n_eff: s.n_eff,
        quad: s.quad,
        tr_r2_hat: s.tr_r2_hat(),
    })
}

/// Descending eigenvalues of the (pooled, for two samples) sample
/// correlation matrix, computed through the n × n Gram matrix when n < p.
pub fn sample_corr_spectrum(samples: &[&Dataset]) -> Result<Vec<f64>> {
    match samples {
        [d] if d.n() >= 2 => {}
        [d1, d2] => check_pooled_sizes(d1, d2)?,
        _ => return Err(Error::domain("expected one sample with n >= 2 or two samples")),
    }
    Ok(standardize(samples)?.corr_spectrum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn duplicated(xi: &[f64], p: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = xi.iter().map(|&v| vec![v; p]).collect();
        Dataset::from_rows(&rows, "dup").unwrap()
    }

    #[test]
    fn two_point_example() {
        let d = Dataset::from_rows(&[vec![0.0], vec![2.0]], "t").unwrap();
        let s = summarize(&d).unwrap();
        assert_eq!(s.mean[0], 1.0);
        assert_eq!(s.cov[(0, 0)], 1.0);
        assert_eq!(s.corr[(0, 0)], 1.0);
    }

    #[test]
    fn identical_columns_give_all_ones() {
        let d = duplicated(&[1.0, -1.0, 0.0, 2.0, 3.0], 4);
        let s = summarize(&d).unwrap();
        assert!(s.corr.iter().all(|&x| x == 1.0));
        assert_eq!(s.tr_r2_hat(), 16.0);
        assert_abs_diff_eq!(stat_inputs(&d).unwrap().tr_r2_hat, 16.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_column_is_degenerate() {
        let d = Dataset::from_rows(&[vec![1.0, 0.3], vec![2.0, 0.3], vec![4.0, 0.3]], "c").unwrap();
        match summarize(&d) {
            Err(Error::ZeroVariance { column }) => assert_eq!(column, 1),
            other => panic!("expected zero variance, got {other:?}"),
        }
        assert!(matches!(stat_inputs(&d), Err(Error::ZeroVariance { column: 1 })));
    }

    #[test]
    fn pooled_examples() {
        let d1 = Dataset::from_rows(&[vec![0.0], vec![2.0]], "a").unwrap();
        let d2 = Dataset::from_rows(&[vec![1.0], vec![3.0], vec![2.0]], "b").unwrap();
        let s = pooled_summary(&d1, &d2).unwrap();
        // centered sums of squares 2 and 2 over n1 + n2 = 5
        assert_abs_diff_eq!(s.cov[(0, 0)], 4.0 / 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.mean[0], 1.0 - 2.0, epsilon = 1e-15);

        let same = Dataset::from_rows(&[vec![0.0, 1.0], vec![2.0, 5.0], vec![1.0, -1.0]], "s").unwrap();
        let s = pooled_summary(&same, &same).unwrap();
        assert!(s.mean.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn pooled_four_point_example() {
        // p = 1, d1 = (0; 2), d2 = (1; 3): each centered SS is 2.
        let d1 = Dataset::from_rows(&[vec![0.0], vec![2.0]], "a").unwrap();
        let d2 = Dataset::from_rows(&[vec![1.0], vec![3.0]], "b").unwrap();
        // n1 + n2 = 4 is below the pooled minimum.
        assert!(pooled_summary(&d1, &d2).is_err());
        let (m1, c1) = centered(&d1);
        let (m2, c2) = centered(&d2);
        let ss = gram_cols(&c1)[(0, 0)] + gram_cols(&c2)[(0, 0)];
        assert_eq!(ss / 4.0, 1.0);
        assert_eq!(m1[0] - m2[0], -1.0);
    }

    #[test]
    fn pooled_duplicated_columns_give_all_ones() {
        let d1 = duplicated(&[1.0, 4.0, -2.0], 3);
        let d2 = duplicated(&[0.5, 0.0, 7.0, 1.0], 3);
        let s = pooled_summary(&d1, &d2).unwrap();
        assert!(s.corr.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn pooled_rejects_mismatch() {
        let d1 = Dataset::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0], vec![1.0, 1.0]], "a").unwrap();
        let d2 = Dataset::from_rows(&[vec![0.0], vec![2.0], vec![1.0]], "b").unwrap();
        assert!(matches!(pooled_summary(&d1, &d2), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn fast_path_matches_full_summary() {
        use crate::gauss_sampling::sample_dataset;
        use crate::rng::SeedSpec;
        let r = crate::corrmat::ar1(30, 0.6).unwrap();
        for n in [12usize, 60] {
            let d = sample_dataset(&r, &[1.5; 30], &[0.2; 30], n, SeedSpec::new(8, n as u64)).unwrap();
            let full = summarize(&d).unwrap().stat_inputs();
            let fast = stat_inputs(&d).unwrap();
            assert_abs_diff_eq!(full.quad, fast.quad, epsilon = 1e-10 * full.quad);
            assert_abs_diff_eq!(full.tr_r2_hat, fast.tr_r2_hat, epsilon = 1e-10 * full.tr_r2_hat);

            let spec_full = summarize(&d).unwrap().corr_spectrum();
            let spec_fast = sample_corr_spectrum(&[&d]).unwrap();
            for (a, b) in spec_full.iter().zip(&spec_fast) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-9);
            }
        }
        let d1 = sample_dataset(&r, &[1.0; 30], &[0.0; 30], 9, SeedSpec::new(1, 1)).unwrap();
        let d2 = sample_dataset(&r, &[1.0; 30], &[0.0; 30], 14, SeedSpec::new(1, 2)).unwrap();
        let full = pooled_summary(&d1, &d2).unwrap().stat_inputs();
        let fast = pooled_stat_inputs(&d1, &d2).unwrap();
        assert_eq!(full.n_eff, fast.n_eff);
        assert_abs_diff_eq!(full.quad, fast.quad, epsilon = 1e-10 * full.quad);
        assert_abs_diff_eq!(full.tr_r2_hat, fast.tr_r2_hat, epsilon = 1e-10 * full.tr_r2_hat);
    }
}
