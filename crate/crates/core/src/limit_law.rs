//! The law of b·ξ₀ + (1/√2)Σρᵢ(ξᵢ² − 1) with i.i.d. standard normal ξ's.
//!
//! Its variance is b² + Σρᵢ² = 1. With no spikes it is N(0, 1); with a
//! single unit spike it is (χ²₁ − 1)/√2.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corrmat::SpectrumSpec;
use crate::error::{Error, Result};
use crate::rng::{mc_blocks, SeedSpec};

pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MC_DRAWS: usize = 200_000;

/// Geometric weight series are cut once a weight drops below this.
pub const SERIES_MIN_WEIGHT: f64 = 1e-6;
pub const SERIES_MAX_TERMS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureLaw {
    pub b: f64,
    pub rho: Vec<f64>,
}

impl MixtureLaw {
    pub fn new(b: f64, rho: Vec<f64>) -> Result<Self> {
        let law = Self { b, rho };
        law.validate()?;
        Ok(law)
    }

    /// Weights in any order (stored descending), b chosen so the variance is 1.
    pub fn from_rho(mut rho: Vec<f64>) -> Result<Self> {
        rho.sort_by(|a, b| b.total_cmp(a));
        let s: f64 = rho.iter().map(|r| r * r).sum();
        if s > 1.0 + NORMALIZATION_TOLERANCE {
            return Err(Error::domain(format!("spike weights have Σρ² = {s} > 1")));
        }
        Self::new((1.0 - s).max(0.0).sqrt(), rho)
    }

    pub fn standard_normal() -> Self {
        Self {
            b: 1.0,
            rho: Vec::new(),
        }
    }

    /// (χ²₁ − 1)/√2.
    pub fn centered_chi_square() -> Self {
        Self { b: 0.0, rho: vec![1.0] }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b.is_finite() && self.b >= 0.0) {
            return Err(Error::domain(format!("b must be finite and >= 0, got {}", self.b)));
        }
        if self.rho.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::domain("spike weights must be finite and >= 0"));
        }
        if self.rho.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::domain("spike weights must be sorted descending"));
        }
        let total = self.variance();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::domain(format!("b² + Σρ² = {total}, expected 1")));
        }
        Ok(())
    }

    pub fn variance(&self) -> f64 {
        self.b * self.b + self.rho.iter().map(|r| r * r).sum::<f64>()
    }

    pub fn is_normal(&self) -> bool {
        self.rho.iter().all(|&r| r == 0.0)
    }

    /// Smallest point of the support (−∞ when b > 0).
    pub fn support_min(&self) -> f64 {
        if self.b > 0.0 {
            f64::NEG_INFINITY
        } else {
            -self.rho.iter().sum::<f64>() * FRAC_1_SQRT_2
        }
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let z0: f64 = rng.sample(StandardNormal);
        let mut spikes = 0.0;
        for &r in &self.rho {
            let z: f64 = rng.sample(StandardNormal);
            spikes += r * (z * z - 1.0);
        }
        self.b * z0 + FRAC_1_SQRT_2 * spikes
    }
}

fn weights_to_law(mut rho: Vec<f64>) -> MixtureLaw {
    rho.sort_by(|a, b| b.total_cmp(a));
    let s: f64 = rho.iter().map(|r| r * r).sum();
    MixtureLaw {
        b: (1.0 - s).max(0.0).sqrt(),
        rho,
    }
}

/// ρᵢ = λᵢ/‖R‖_F for at most `k_max` leading eigenvalues with ρᵢ ≥ eps.
pub fn mixture_from_spectrum(spec: &SpectrumSpec, k_max: usize, eps: f64) -> Result<MixtureLaw> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::domain(format!("eps must lie in [0, 1), got {eps}")));
    }
    let frob = spec.as_slice().iter().map(|l| l * l).sum::<f64>().sqrt();
    if !(frob > 0.0) {
        return Err(Error::domain("spectrum has zero Frobenius norm"));
    }
    let mut sorted = spec.as_slice().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let rho = sorted
        .into_iter()
        .take(k_max)
        .map(|l| l / frob)
        .take_while(|&r| r >= eps && r > 0.0)
        .collect();
    Ok(weights_to_law(rho))
}

/// Limit of T_{p,1} under compound symmetry with √p·r → c (∞ allowed).
pub fn example1_law(c: f64) -> Result<MixtureLaw> {
    if c.is_nan() || c < 0.0 {
        return Err(Error::domain(format!("c must be >= 0, got {c}")));
    }
    Ok(if c == 0.0 {
        MixtureLaw::standard_normal()
    } else if c.is_infinite() {
        MixtureLaw::centered_chi_square()
    } else {
        let s = (c * c + 1.0).sqrt();
        MixtureLaw {
            b: 1.0 / s,
            rho: vec![c / s],
        }
    })
}

/// Geometric weights ρᵢ = (3τ²/(τ²+3))^{1/2}·2^{−i}, i = 1..k_terms (τ = ∞
/// allowed), cut at [`SERIES_MIN_WEIGHT`] / [`SERIES_MAX_TERMS`]; b absorbs
/// the remaining variance.
pub fn example3_law(tau: f64, k_terms: usize) -> Result<MixtureLaw> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::domain(format!("tau must be >= 0, got {tau}")));
    }
    if k_terms == 0 {
        return Err(Error::domain("k_terms must be at least 1"));
    }
    let scale = if tau.is_infinite() {
        3f64.sqrt()
    } else {
        (3.0 * tau * tau / (tau * tau + 3.0)).sqrt()
    };
    let rho = (1..=k_terms.min(SERIES_MAX_TERMS))
        .map(|i| scale * 0.5f64.powi(i as i32))
        .take_while(|&r| r >= SERIES_MIN_WEIGHT)
        .collect();
    Ok(weights_to_law(rho))
}

/// Spike selection for the data-driven law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlugIn {
    pub k_max: usize,
    pub eps: f64,
}

impl Default for PlugIn {
    fn default() -> Self {
        Self { k_max: 10, eps: 0.1 }
    }
}

/// Law estimated from data: ρ̂ᵢ = λ̂ᵢ / |tr(R²) estimate|^{1/2} from the
/// sample correlation spectrum, keeping at most `k_max` weights ≥ `eps`.
/// If the kept weights have Σρ̂² > 1 they are scaled down to Σρ̂² = 1.
pub fn plug_in_law(sample_spectrum: &[f64], trace_estimate: f64, cfg: PlugIn) -> Result<MixtureLaw> {
    let denom = trace_estimate.abs().sqrt();
    if !(denom > 0.0 && denom.is_finite()) {
        return Err(Error::Degenerate(format!(
            "tr(R^2) estimate {trace_estimate} cannot scale spikes"
        )));
    }
    let mut sorted = sample_spectrum.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut rho: Vec<f64> = sorted
        .into_iter()
        .take(cfg.k_max)
        .map(|l| l / denom)
        .take_while(|&r| r >= cfg.eps && r > 0.0)
        .collect();
    let s: f64 = rho.iter().map(|r| r * r).sum();
    if s > 1.0 {
        let k = s.sqrt();
        rho.iter_mut().for_each(|r| *r /= k);
    }
    Ok(weights_to_law(rho))
}

/// Independent draws; block b of 4096 draws uses `seed.block_rng(b)`.
pub fn sample_law(law: &MixtureLaw, n_draws: usize, seed: SeedSpec) -> Result<Vec<f64>> {
    law.validate()?;
    Ok(mc_blocks(n_draws, seed, |rng, count| {
        (0..count).map(|_| law.draw(rng)).collect()
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum CdfMethod {
    #[default]
    #[serde(rename = "mc", alias = "monte_carlo")]
    MonteCarlo,
    #[serde(rename = "cf", alias = "cf_inversion")]
    CfInversion,
}

impl FromStr for CdfMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" | "monte_carlo" => Ok(Self::MonteCarlo),
            "cf" | "cf_inversion" => Ok(Self::CfInversion),
            _ => Err(Error::Parse(format!("unknown cdf method {s:?} (expected mc or cf)"))),
        }
    }
}

/// Sorted draws from a law, used as its distribution function.
#[derive(Clone, Debug)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut draws: Vec<f64>) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::domain("empirical CDF needs at least one draw"));
        }
        if draws.iter().any(|d| d.is_nan()) {
            return Err(Error::domain("draws contain NaN"));
        }
        draws.sort_by(f64::total_cmp);
        Ok(Self { sorted: draws })
    }

    pub fn from_law(law: &MixtureLaw, n_draws: usize, seed: SeedSpec) -> Result<Self> {
        Self::new(sample_law(law, n_draws, seed)?)
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Number of draws ≤ t.
    pub fn count_le(&self, t: f64) -> usize {
        self.sorted.partition_point(|&x| x <= t)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.count_le(t) as f64 / self.sorted.len() as f64
    }
}

/// Evaluates F by Gil-Pelaez inversion of the characteristic function,
/// F(x) = ½ − (1/π)∫₀^U Im[e^{−iux}φ(u)]/u du, trapezoid rule with 2¹⁶
/// intervals and U = 200 / max(b, ρ₁/√2). log φ is tabulated once.
#[derive(Clone, Debug)]
pub struct CfInverter {
    h: f64,
    support_min: f64,
    modulus: Vec<f64>,
    phase: Vec<f64>,
}

pub const CF_NODES: usize = 1 << 16;

impl CfInverter {
    pub fn new(law: &MixtureLaw) -> Result<Self> {
        law.validate()?;
        let rho1 = law.rho.iter().copied().fold(0.0, f64::max);
        let scale = law.b.max(rho1 * FRAC_1_SQRT_2);
        if !(scale > 0.0) {
            return Err(Error::domain(
                "cf inversion undefined for a point mass (b = 0 and no spikes)",
            ));
        }
        let upper = 200.0 / scale;
        let h = upper / CF_NODES as f64;
        let mut modulus = Vec::with_capacity(CF_NODES + 1);
        let mut phase = Vec::with_capacity(CF_NODES + 1);
        for k in 0..=CF_NODES {
            let u = k as f64 * h;
            let mut re = -0.5 * law.b * law.b * u * u;
            let mut im = 0.0;
            for &r in &law.rho {
                let a = SQRT_2 * u * r;
                re -= 0.25 * a.mul_add(a, 1.0).ln();
                im += 0.5 * a.atan() - u * r * FRAC_1_SQRT_2;
            }
            modulus.push(re.exp());
            phase.push(im);
        }
        Ok(Self {
            h,
            support_min: law.support_min(),
            modulus,
            phase,
        })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.support_min {
            return 0.0;
        }
        // The integrand tends to −x as u → 0.
        let mut sum = -0.5 * x;
        for k in 1..=CF_NODES {
            let u = k as f64 * self.h;
            let v = self.modulus[k] * (self.phase[k] - u * x).sin() / u;
            sum += if k == CF_NODES { 0.5 * v } else { v };
        }
        (0.5 - sum * self.h / PI).clamp(0.0, 1.0)
    }

    /// f(x) = (1/π)∫₀^U Re[e^{−iux}φ(u)] du.
    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.support_min {
            return 0.0;
        }
        let mut sum = 0.5 * self.modulus[0] * self.phase[0].cos();
        for k in 1..=CF_NODES {
            let u = k as f64 * self.h;
            let v = self.modulus[k] * (self.phase[k] - u * x).cos();
            sum += if k == CF_NODES { 0.5 * v } else { v };
        }
        (sum * self.h / PI).max(0.0)
    }
}

/// A law's distribution function by either method, built once for many
/// evaluations.
#[derive(Clone, Debug)]
pub enum LawCdf {
    MonteCarlo(EmpiricalCdf),
    Cf(CfInverter),
}

impl LawCdf {
    pub fn new(law: &MixtureLaw, method: CdfMethod, n_draws: usize, seed: SeedSpec) -> Result<Self> {
        match method {
            CdfMethod::MonteCarlo => Ok(Self::MonteCarlo(EmpiricalCdf::from_law(law, n_draws, seed)?)),
            CdfMethod::CfInversion => Ok(Self::Cf(CfInverter::new(law)?)),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::MonteCarlo(e) => e.eval(t),
            Self::Cf(c) => c.cdf(t),
        }
    }

    /// Right-tail probability; Monte Carlo values are floored at 1/(N+1).
    pub fn upper_tail(&self, t: f64) -> f64 {
        match self {
            Self::MonteCarlo(e) => {
                let n = e.len();
                let above = n - e.count_le(t);
                (above as f64 / n as f64).clamp(1.0 / (n as f64 + 1.0), 1.0)
            }
            Self::Cf(c) => (1.0 - c.cdf(t)).clamp(0.0, 1.0),
        }
    }
}

pub fn cdf(law: &MixtureLaw, t: f64, method: CdfMethod, n_draws: usize, seed: SeedSpec) -> Result<f64> {
    Ok(LawCdf::new(law, method, n_draws, seed)?.eval(t))
}

/// P(law > statistic), i.e. the right-tail p-value.
pub fn p_value(law: &MixtureLaw, statistic: f64, method: CdfMethod, n_draws: usize, seed: SeedSpec) -> Result<f64> {
    Ok(LawCdf::new(law, method, n_draws, seed)?.upper_tail(statistic))
}

/// Density of the law on `xs`. Uses direct inversion when the normal part
/// is substantial (b ≥ 0.03); otherwise the characteristic function decays
/// too slowly and a central difference of the inverted CDF (step 0.02) is
/// used instead.
pub fn density(law: &MixtureLaw, xs: &[f64]) -> Result<Vec<f64>> {
    if law.is_normal() && law.b > 0.0 {
        let b = law.b;
        return Ok(xs
            .iter()
            .map(|x| (-(x / b).powi(2) / 2.0).exp() / (b * (2.0 * PI).sqrt()))
            .collect());
    }
    let inv = CfInverter::new(law)?;
    let lo = law.support_min();
    Ok(if law.b >= 0.03 {
        xs.iter().map(|&x| inv.pdf(x)).collect()
    } else {
        const H: f64 = 0.02;
        xs.iter()
            .map(|&x| {
                if x < lo {
                    0.0
                } else {
                    let a = (x - H).max(lo);
                    ((inv.cdf(x + H) - inv.cdf(a)) / (x + H - a)).max(0.0)
                }
            })
            .collect()
    })
}
