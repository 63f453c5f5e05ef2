//! Gaussian moment identities used as oracles: Isserlis pairings, mixed
//! fourth/sixth/eighth moments, E(r̂²), inverse-χ² moments and the
//! expansion of E[m²/(ΣXᵢ² ΣYᵢ²)], plus Monte Carlo counterparts.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corrmat::CorrMatrix;
use crate::error::{Error, Result};
use crate::gauss_sampling::MvnSampler;
use crate::rng::{mc_blocks, SeedSpec};

/// Longest index list accepted by [`isserlis_moment`] (10395 pairings).
pub const MAX_ISSERLIS_LEN: usize = 12;

/// A 4 × 4 correlation matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Corr4 {
    r: CorrMatrix,
}

impl Corr4 {
    pub fn new(r12: f64, r13: f64, r14: f64, r23: f64, r24: f64, r34: f64) -> Result<Self> {
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            1.0, r12, r13, r14,
            r12, 1.0, r23, r24,
            r13, r23, 1.0, r34,
            r14, r24, r34, 1.0,
        ]);
        Ok(Self { r: CorrMatrix::new(m)? })
    }

    pub fn from_corr(r: CorrMatrix) -> Result<Self> {
        if r.p() != 4 {
            return Err(Error::DimensionMismatch(format!(
                "expected a 4x4 matrix, got {0}x{0}",
                r.p()
            )));
        }
        Ok(Self { r })
    }

    pub fn independent() -> Self {
        Self {
            r: CorrMatrix::identity(4),
        }
    }

    /// A random correlation matrix: the Gram matrix of four independent
    /// uniformly distributed unit vectors in ℝ⁴.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let mut v = DMatrix::<f64>::zeros(4, 4);
        for mut row in v.row_iter_mut() {
            row.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
            let norm = row.norm();
            row /= norm;
        }
        let g = &v * v.transpose();
        let g = DMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { g[(i, j)].clamp(-1.0, 1.0) });
        Self {
            r: CorrMatrix::new(g).expect("Gram matrix of unit vectors is a correlation matrix"),
        }
    }

    /// r_ij with 1-based indices.
    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.r.get(i - 1, j - 1)
    }

    pub fn as_corr(&self) -> &CorrMatrix {
        &self.r
    }

    /// (r12, r13, r14, r23, r24, r34).
    pub fn off_diagonal(&self) -> [f64; 6] {
        [
            self.r(1, 2),
            self.r(1, 3),
            self.r(1, 4),
            self.r(2, 3),
            self.r(2, 4),
            self.r(3, 4),
        ]
    }
}

/// E[∏ X_{indices}] for X ~ N(0, R), summing over all perfect pairings.
/// Indices are 1-based.
pub fn isserlis_moment(indices: &[usize], r: &CorrMatrix) -> Result<f64> {
    let k = indices.len();
    if k > MAX_ISSERLIS_LEN {
        return Err(Error::Size(format!(
            "isserlis_moment supports at most {MAX_ISSERLIS_LEN} indices, got {k}"
        )));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > r.p()) {
        return Err(Error::domain(format!("index {bad} outside 1..={}", r.p())));
    }
    if k % 2 == 1 {
        return Ok(0.0);
    }
    let half = k / 2;
    let cov = |a: usize, b: usize| r.get(indices[a] - 1, indices[b] - 1);

    // Depth-first over pairings: the smallest unpaired position is matched
    // with each later unpaired position in turn.
    let mut used = vec![false; k];
    let mut stack: Vec<(usize, usize)> = Vec::with_capacity(half);
    let mut prod = vec![1.0; half + 1];
    let mut start = 0;
    let mut total = 0.0;
    loop {
        let depth = stack.len();
        if depth == half {
            total += prod[half];
        } else {
            let first = used.iter().position(|u| !u).expect("unpaired position exists");
            if let Some(partner) = (start.max(first + 1)..k).find(|&j| !used[j]) {
                used[first] = true;
                used[partner] = true;
                prod[depth + 1] = prod[depth] * cov(first, partner);
                stack.push((first, partner));
                start = 0;
                continue;
            }
        }
        match stack.pop() {
            Some((first, partner)) => {
                used[first] = false;
                used[partner] = false;
                start = partner + 1;
            }
            None => break,
        }
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentKind {
    /// E X₁X₂X₃²X₄²
    M112244,
    /// E X₁²X₂²X₃²
    M222,
    /// E X₁²X₂²X₃²X₄²
    M2222,
    /// E X₁⁴X₂⁴
    M44,
}

impl MomentKind {
    pub const ALL: [MomentKind; 4] = [Self::M112244, Self::M222, Self::M2222, Self::M44];

    /// The index list whose Isserlis moment this closed form evaluates.
    pub fn indices(self) -> &'static [usize] {
        match self {
            Self::M112244 => &[1, 2, 3, 3, 4, 4],
            Self::M222 => &[1, 1, 2, 2, 3, 3],
            Self::M2222 => &[1, 1, 2, 2, 3, 3, 4, 4],
            Self::M44 => &[1, 1, 1, 1, 2, 2, 2, 2],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::M112244 => "m112244",
            Self::M222 => "m222",
            Self::M2222 => "m2222",
            Self::M44 => "m44",
        }
    }
}

impl fmt::Display for MomentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MomentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown moment kind {s:?}")))
    }
}

pub fn closed_form_moment(kind: MomentKind, r4: &Corr4) -> f64 {
    let r = |i, j| r4.r(i, j);
    let (r12, r13, r14, r23, r24, r34) = (r(1, 2), r(1, 3), r(1, 4), r(2, 3), r(2, 4), r(3, 4));
    match kind {
        MomentKind::M112244 => {
            r12 + 2.0 * r12 * r34 * r34
                + 2.0 * r13 * r23
                + 2.0 * r14 * r24
                + 4.0 * r13 * r24 * r34
                + 4.0 * r14 * r23 * r34
        }
        MomentKind::M222 => 1.0 + 2.0 * (r12 * r12 + r13 * r13 + r23 * r23) + 8.0 * r12 * r13 * r23,
        MomentKind::M2222 => {
            let sq = r12 * r12 + r13 * r13 + r14 * r14 + r23 * r23 + r24 * r24 + r34 * r34;
            let pairs = r12 * r12 * r34 * r34 + r13 * r13 * r24 * r24 + r14 * r14 * r23 * r23;
            let triangles = r12 * r23 * r13 + r12 * r24 * r14 + r23 * r34 * r24 + r13 * r34 * r14;
            let cycles = r12 * r23 * r34 * r14 + r12 * r24 * r34 * r13 + r13 * r23 * r24 * r14;
            1.0 + 2.0 * sq + 4.0 * pairs + 8.0 * triangles + 16.0 * cycles
        }
        MomentKind::M44 => 9.0 + 72.0 * r12 * r12 + 24.0 * r12.powi(4),
    }
}

/// ₂F₁(1, 1; c; z) for 0 ≤ z < 1 by direct summation.
fn hyp2f1_11(c: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    while term >= 1e-15 {
        term *= (k + 1.0) * z / (c + k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// E(r̂²) where r̂ = ΣXᵢYᵢ / (ΣXᵢ² ΣYᵢ²)^{1/2} over m i.i.d. mean-zero normal
/// pairs with correlation r.
pub fn expected_rhat_sq(m: usize, r: f64) -> Result<f64> {
    if m < 4 {
        return Err(Error::domain(format!("expected_rhat_sq needs m >= 4, got {m}")));
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::domain(format!("correlation {r} outside [-1, 1]")));
    }
    let z = r * r;
    if z == 1.0 {
        return Ok(1.0);
    }
    let mf = m as f64;
    Ok(1.0 - (mf - 1.0) / mf * (1.0 - z) * hyp2f1_11(mf / 2.0 + 1.0, z))
}

/// Mean and variance of 1/χ²(k).
pub fn inv_chisq_moments(k: usize) -> Result<(f64, f64)> {
    if k < 5 {
        return Err(Error::domain(format!(
            "inverse chi-square variance needs k >= 5, got {k}"
        )));
    }
    let k = k as f64;
    Ok((1.0 / (k - 2.0), 2.0 / ((k - 2.0).powi(2) * (k - 4.0))))
}

/// 1 + (4+2r²)/m + (12+8r²+8r⁴)/m², which approximates
/// E[m²/(ΣXᵢ² ΣYᵢ²)] up to O(m⁻³).
pub fn inv_product_expansion(m: usize, r: f64) -> Result<f64> {
    if m < 11 {
        return Err(Error::domain(format!("inv_product_expansion needs m >= 11, got {m}")));
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::domain(format!("correlation {r} outside [-1, 1]")));
    }
    let (m, r2) = (m as f64, r * r);
    Ok(1.0 + (4.0 + 2.0 * r2) / m + (12.0 + 8.0 * r2 + 8.0 * r2 * r2) / (m * m))
}

/// Cov(B_ij, B_kl) with B_ab = (1/m)Σ_t X_{a,t} X_{b,t} (1-based indices).
pub fn cov_pair_products(r4: &Corr4, m: usize, (i, j, k, l): (usize, usize, usize, usize)) -> Result<f64> {
    if m == 0 {
        return Err(Error::domain("m must be at least 1"));
    }
    if [i, j, k, l].iter().any(|&x| x == 0 || x > 4) {
        return Err(Error::domain("indices must lie in 1..=4"));
    }
    Ok((r4.r(i, k) * r4.r(j, l) + r4.r(i, l) * r4.r(j, k)) / m as f64)
}

/// Cov(B₁, B₂) = (r₁₃r₂₄ + r₁₄r₂₃)/m for B₁ = B₁₂, B₂ = B₃₄.
pub fn cov_b1_b2(r4: &Corr4, m: usize) -> Result<f64> {
    cov_pair_products(r4, m, (1, 2, 3, 4))
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub se: f64,
}

impl McEstimate {
    pub fn within(&self, target: f64, n_se: f64) -> bool {
        (self.value - target).abs() <= n_se * self.se
    }
}

pub(crate) fn mean_estimate(values: &[f64]) -> McEstimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    McEstimate {
        value: mean,
        se: (var / n).sqrt(),
    }
}

/// Sample covariance of paired values; the SE is that of the mean of the
/// centered cross products.
pub(crate) fn covariance_estimate(pairs: &[(f64, f64)]) -> McEstimate {
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let prods: Vec<f64> = pairs.iter().map(|&(a, b)| (a - ma) * (b - mb)).collect();
    let est = mean_estimate(&prods);
    McEstimate {
        value: est.value * n / (n - 1.0),
        se: est.se,
    }
}

/// sxy² / (sxx·syy) for raw (uncentered) sums; exactly 1 when x = ±y.
pub(crate) fn rhat_sq(sxx: f64, syy: f64, sxy: f64) -> f64 {
    sxy * sxy / (sxx * syy)
}

fn correlated_pair<R: Rng>(rng: &mut R, r: f64, s: f64) -> (f64, f64) {
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    (z1, r * z1 + s * z2)
}

/// Monte Carlo E(r̂²) over `reps` samples of m pairs.
pub fn mc_rhat_sq(m: usize, r: f64, reps: usize, seed: SeedSpec) -> Result<McEstimate> {
    check_mc(m, r, reps)?;
    let s = (1.0 - r * r).max(0.0).sqrt();
    let values = mc_blocks(reps, seed, |rng, count| {
        (0..count)
            .map(|_| {
                let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
                for _ in 0..m {
                    let (x, y) = correlated_pair(rng, r, s);
                    sxx += x * x;
                    syy += y * y;
                    sxy += x * y;
                }
                rhat_sq(sxx, syy, sxy)
            })
            .collect()
    });
    Ok(mean_estimate(&values))
}

/// Monte Carlo E[m²/(ΣXᵢ² ΣYᵢ²)].
pub fn mc_inv_product(m: usize, r: f64, reps: usize, seed: SeedSpec) -> Result<McEstimate> {
    check_mc(m, r, reps)?;
    let s = (1.0 - r * r).max(0.0).sqrt();
    let mf = m as f64;
    let values = mc_blocks(reps, seed, |rng, count| {
        (0..count)
            .map(|_| {
                let (mut sxx, mut syy) = (0.0, 0.0);
                for _ in 0..m {
                    let (x, y) = correlated_pair(rng, r, s);
                    sxx += x * x;
                    syy += y * y;
                }
                mf * mf / (sxx * syy)
            })
            .collect()
    });
    Ok(mean_estimate(&values))
}

fn check_mc(m: usize, r: f64, reps: usize) -> Result<()> {
    if m == 0 || reps < 2 {
        return Err(Error::domain("need m >= 1 and reps >= 2"));
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::domain(format!("correlation {r} outside [-1, 1]")));
    }
    Ok(())
}

/// Runs `f` on each of `reps` samples of m rows from N(0, R4).
pub(crate) fn mc_corr4<T, F>(r4: &Corr4, m: usize, reps: usize, seed: SeedSpec, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&DMatrix<f64>) -> T + Sync + Send,
{
    let sampler = MvnSampler::new(r4.as_corr(), &[1.0; 4], &[0.0; 4])?;
    Ok(mc_blocks(reps, seed, |rng, count| {
        (0..count).map(|_| f(&sampler.sample_with(m, rng))).collect()
    }))
}

/// Monte Carlo Cov(B₁, B₂) from `reps` samples of m rows.
pub fn mc_cov_b1_b2(r4: &Corr4, m: usize, reps: usize, seed: SeedSpec) -> Result<McEstimate> {
    if m == 0 || reps < 2 {
        return Err(Error::domain("need m >= 1 and reps >= 2"));
    }
    let mf = m as f64;
    let pairs = mc_corr4(r4, m, reps, seed, |x| {
        let b1 = x.column(0).dot(&x.column(1)) / mf;
        let b2 = x.column(2).dot(&x.column(3)) / mf;
        (b1, b2)
    })?;
    Ok(covariance_estimate(&pairs))
}
