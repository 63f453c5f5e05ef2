//! Monte Carlo null experiments for the four statistics, distances to the
//! limit laws, density curves and the squared-correlation covariance decay.
//!
//! Replicate k draws its data from stream k of the configured master seed
//! (sample 2 of a two-sample replicate uses block 1 of that stream), so every
//! output is a function of the configuration alone.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corrmat::{ar1, block_size, from_spectrum, geometric_spike_spectrum, spectrum, CorrMatrix, SpectrumSpec};
use crate::error::{Error, Result};
use crate::gauss_sampling::{fill_block_compound, fill_iid, Dataset, MvnSampler};
use crate::limit_law::{density, mixture_from_spectrum, EmpiricalCdf, LawCdf, MixtureLaw, PlugIn};
use crate::mean_tests::{
    one_sample_from_inputs, two_sample_from_inputs, ExactEquicorrelatedNull, SampleSizes, Variant,
};
use crate::moments::{covariance_estimate, mc_corr4, rhat_sq, Corr4, McEstimate};
use crate::rng::{map_indexed, SeedSpec, StreamRng};
use crate::sample_stats::{pooled_stat_inputs, stat_inputs, StatInputs};

pub const MIN_REPS: usize = 100;
pub const DEFAULT_CDF_DRAWS: usize = 1_000_000;
pub const DEFAULT_GRID_POINTS: usize = 201;
const LAW_SEED_TAG: u64 = 0x006c_6177_5f63_6466;

/// Population correlation model; data are N(0, R) (the statistics are
/// scale invariant, so unit variances lose nothing).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Identity,
    /// Every entry of Σ equal (rank one).
    AllEqual,
    Compound {
        r: f64,
    },
    /// Compound symmetry with r = c/√p.
    CompoundScaled {
        c: f64,
    },
    BlockSpiked {
        r: f64,
    },
    Ar1 {
        gamma: f64,
    },
    GeometricSpectrum {
        tau: f64,
    },
}

impl Model {
    fn compound_r(&self, p: usize) -> Option<f64> {
        match *self {
            Model::AllEqual => Some(1.0),
            Model::Compound { r } => Some(r),
            Model::CompoundScaled { c } => Some(c / (p as f64).sqrt()),
            _ => None,
        }
    }

    fn check(&self, p: usize) -> Result<()> {
        if p == 0 {
            return Err(Error::domain("dimension must be positive"));
        }
        if let Some(r) = self.compound_r(p) {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::domain(format!("compound correlation r = {r} outside [0, 1]")));
            }
        }
        match *self {
            Model::BlockSpiked { r } if !(r > 0.0 && r < 1.0) => {
                Err(Error::domain(format!("block spiked exponent r = {r} outside (0, 1)")))
            }
            Model::Ar1 { gamma } if !(gamma.abs() < 1.0) => Err(Error::domain(format!(
                "AR(1) coefficient {gamma} must satisfy |gamma| < 1"
            ))),
            Model::GeometricSpectrum { tau } => geometric_spike_spectrum(p, tau).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// The population correlation matrix (dense; avoid for huge p).
    pub fn corr(&self, p: usize) -> Result<CorrMatrix> {
        self.check(p)?;
        if let Some(r) = self.compound_r(p) {
            return crate::corrmat::compound_symmetric(p, r);
        }
        match *self {
            Model::Identity => Ok(CorrMatrix::identity(p)),
            Model::BlockSpiked { r } => crate::corrmat::block_spiked(p, r),
            Model::Ar1 { gamma } => ar1(p, gamma),
            Model::GeometricSpectrum { tau } => from_spectrum(&geometric_spike_spectrum(p, tau)?, None),
            _ => unreachable!("compound models handled above"),
        }
    }

    /// Population eigenvalues, in closed form where one exists.
    pub fn spectrum(&self, p: usize) -> Result<SpectrumSpec> {
        self.check(p)?;
        let pf = p as f64;
        if let Some(r) = self.compound_r(p) {
            let mut l = vec![1.0 + (pf - 1.0) * r];
            l.extend(std::iter::repeat_n(1.0 - r, p - 1));
            return Ok(SpectrumSpec::from_unsorted(l));
        }
        match *self {
            Model::Identity => Ok(SpectrumSpec::new(vec![1.0; p])),
            Model::BlockSpiked { r } => {
                let m = block_size(p, r);
                let mut l = vec![1.0 + (m as f64 - 1.0) * r];
                l.extend(std::iter::repeat_n(1.0 - r, m - 1));
                l.extend(std::iter::repeat_n(1.0, p - m));
                Ok(SpectrumSpec::from_unsorted(l))
            }
            Model::Ar1 { gamma } => Ok(spectrum(&ar1(p, gamma)?)),
            Model::GeometricSpectrum { tau } => geometric_spike_spectrum(p, tau),
            _ => unreachable!("compound models handled above"),
        }
    }

    /// tr(R²) = Σλᵢ².
    pub fn tr_r2(&self, p: usize) -> Result<f64> {
        Ok(self.spectrum(p)?.as_slice().iter().map(|l| l * l).sum())
    }

    fn sampler(&self, p: usize) -> Result<ModelSampler> {
        self.check(p)?;
        if let Some(r) = self.compound_r(p) {
            return Ok(ModelSampler::Block { block: p, r });
        }
        Ok(match *self {
            Model::Identity => ModelSampler::Iid,
            Model::BlockSpiked { r } => ModelSampler::Block {
                block: block_size(p, r),
                r,
            },
            _ => ModelSampler::Mvn(Box::new(MvnSampler::new(&self.corr(p)?, &vec![1.0; p], &vec![0.0; p])?)),
        })
    }
}

enum ModelSampler {
    Iid,
    Block { block: usize, r: f64 },
    Mvn(Box<MvnSampler>),
}

impl ModelSampler {
    fn sample(&self, rng: &mut StreamRng, n: usize, p: usize) -> DMatrix<f64> {
        match self {
            ModelSampler::Iid => fill_iid(rng, n, p),
            ModelSampler::Block { block, r } => fill_block_compound(rng, n, p, *block, *r),
            ModelSampler::Mvn(s) => s.sample_with(n, rng),
        }
    }
}

/// Which law a simulation is compared against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LawChoice {
    Named(NamedLaw),
    Explicit(MixtureLaw),
}

impl Default for LawChoice {
    fn default() -> Self {
        Self::auto()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedLaw {
    /// From the population spectrum with the default spike selection.
    Auto,
    Normal,
    /// Finite-n law of T_SD when all entries of Σ are equal.
    Exact,
}

/// What a simulation is compared with.
#[derive(Clone, Debug)]
pub enum Reference {
    Mixture(MixtureLaw),
    Exact(ExactEquicorrelatedNull),
}

impl LawChoice {
    pub fn auto() -> Self {
        LawChoice::Named(NamedLaw::Auto)
    }

    pub fn resolve(&self, model: &Model, p: usize) -> Result<MixtureLaw> {
        match self {
            LawChoice::Named(NamedLaw::Normal) => Ok(MixtureLaw::standard_normal()),
            LawChoice::Explicit(law) => {
                law.validate()?;
                Ok(law.clone())
            }
            LawChoice::Named(NamedLaw::Auto) => {
                let d = PlugIn::default();
                mixture_from_spectrum(&model.spectrum(p)?, d.k_max, d.eps)
            }
            LawChoice::Named(NamedLaw::Exact) => Err(Error::domain("the exact law is not a mixture law")),
        }
    }

    pub fn reference(&self, variant: Variant, model: &Model, n: SampleSizes, p: usize) -> Result<Reference> {
        match (self, variant, model, n) {
            (LawChoice::Named(NamedLaw::Exact), Variant::TSd, Model::AllEqual, SampleSizes::One(n)) => {
                ExactEquicorrelatedNull::new(n).map(Reference::Exact)
            }
            (LawChoice::Named(NamedLaw::Exact), ..) => Err(Error::domain(
                "the exact law applies only to T_SD with the all_equal model",
            )),
            _ => self.resolve(model, p).map(Reference::Mixture),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub variant: Variant,
    pub model: Model,
    /// n, or [n1, n2] for the two-sample variants.
    pub n: SampleSizes,
    pub p: usize,
    pub reps: usize,
    pub seed: SeedSpec,
    #[serde(default)]
    pub law: LawChoice,
    #[serde(default = "default_cdf_draws")]
    pub cdf_draws: usize,
    /// Density grid; defaults to the 0.5%–99.5% range of the draws.
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

fn default_cdf_draws() -> usize {
    DEFAULT_CDF_DRAWS
}

impl ExperimentConfig {
    pub fn new(variant: Variant, model: Model, n: SampleSizes, p: usize, reps: usize, seed: SeedSpec) -> Self {
        Self {
            variant,
            model,
            n,
            p,
            reps,
            seed,
            law: LawChoice::auto(),
            cdf_draws: DEFAULT_CDF_DRAWS,
            grid: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < MIN_REPS {
            return Err(Error::domain(format!(
                "reps must be at least {MIN_REPS}, got {}",
                self.reps
            )));
        }
        check_sizes(&[self.variant], self.n)?;
        if self.cdf_draws == 0 {
            return Err(Error::domain("cdf_draws must be positive"));
        }
        if let Some(g) = self.grid {
            if !(g.lo < g.hi) {
                return Err(Error::domain("grid lo must be below hi"));
            }
        }
        self.model.check(self.p)?;
        if self.law == LawChoice::Named(NamedLaw::Exact) {
            self.law.reference(self.variant, &self.model, self.n, self.p)?;
        }
        Ok(())
    }
}

fn check_sizes(variants: &[Variant], n: SampleSizes) -> Result<()> {
    for &v in variants {
        match (v.is_two_sample(), n) {
            (false, SampleSizes::One(n)) if n >= 4 => {}
            (true, SampleSizes::Two([a, b])) if a >= 2 && b >= 2 && a + b >= 5 => {}
            (false, SampleSizes::One(n)) => {
                return Err(Error::domain(format!("{v} needs n >= 4, got {n}")));
            }
            (true, SampleSizes::Two([a, b])) => {
                return Err(Error::domain(format!(
                    "{v} needs n1, n2 >= 2 and n1 + n2 >= 5, got {a} and {b}"
                )));
            }
            (false, _) => return Err(Error::domain(format!("{v} is a one-sample statistic; give a single n"))),
            (true, _) => return Err(Error::domain(format!("{v} is a two-sample statistic; give [n1, n2]"))),
        }
    }
    Ok(())
}

/// Per-replicate statistics for several variants computed from the same data.
#[derive(Clone, Debug, PartialEq)]
pub struct Replicates {
    pub variants: Vec<Variant>,
    /// `stats[v][k]`: variant v on replicate k.
    pub stats: Vec<Vec<f64>>,
    pub inputs: Vec<StatInputs>,
}

impl Replicates {
    pub fn draws(&self, variant: Variant) -> Option<&[f64]> {
        self.variants
            .iter()
            .position(|&v| v == variant)
            .map(|i| self.stats[i].as_slice())
    }
}

/// Draws one null replicate (μ = 0, or μ₁ = μ₂ = 0) from the model.
pub fn null_replicate(model: &Model, n: SampleSizes, p: usize, seed: SeedSpec, k: usize) -> Result<Vec<Dataset>> {
    let sampler = model.sampler(p)?;
    replicate_data(&sampler, n, p, seed.with_stream(k as u64))
}

fn replicate_data(sampler: &ModelSampler, n: SampleSizes, p: usize, stream: SeedSpec) -> Result<Vec<Dataset>> {
    match n {
        SampleSizes::One(n) => Ok(vec![Dataset::new(sampler.sample(&mut stream.rng(), n, p), "null")?]),
        SampleSizes::Two([a, b]) => Ok(vec![
            Dataset::new(sampler.sample(&mut stream.rng(), a, p), "null 1")?,
            Dataset::new(sampler.sample(&mut stream.block_rng(1), b, p), "null 2")?,
        ]),
    }
}

/// Simulates `reps` null replicates and evaluates every variant on each.
pub fn simulate_statistics(
    model: &Model,
    n: SampleSizes,
    p: usize,
    reps: usize,
    seed: SeedSpec,
    variants: &[Variant],
) -> Result<Replicates> {
    if variants.is_empty() {
        return Err(Error::domain("no variants requested"));
    }
    check_sizes(variants, n)?;
    let sampler = model.sampler(p)?;
    let per_rep = map_indexed(reps, |k| -> Result<(Vec<f64>, StatInputs)> {
        let wrap = |e: Error| Error::Replicate {
            index: k,
            source: Box::new(e),
        };
        let data = replicate_data(&sampler, n, p, seed.with_stream(k as u64)).map_err(wrap)?;
        let inputs = match (n, data.as_slice()) {
            (SampleSizes::One(_), [d]) => stat_inputs(d),
            (SampleSizes::Two(_), [d1, d2]) => pooled_stat_inputs(d1, d2),
            _ => unreachable!("replicate_data matches the sample sizes"),
        }
        .map_err(wrap)?;
        let stats = variants
            .iter()
            .map(|&v| {
                match n {
                    SampleSizes::One(_) => one_sample_from_inputs(v, &inputs),
                    SampleSizes::Two([a, b]) => two_sample_from_inputs(v, &inputs, a, b),
                }
                .map(|r| r.statistic)
                .map_err(wrap)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok((stats, inputs))
    });
    let mut stats = vec![Vec::with_capacity(reps); variants.len()];
    let mut inputs = Vec::with_capacity(reps);
    for rep in per_rep {
        let (s, inp) = rep?;
        for (col, v) in stats.iter_mut().zip(s) {
            col.push(v);
        }
        inputs.push(inp);
    }
    Ok(Replicates {
        variants: variants.to_vec(),
        stats,
        inputs,
    })
}

/// Mean of the ratio-unbiased and of the cruder tr(R̂²) − p²/n estimates,
/// each divided by the true tr(R²).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceComparison {
    pub true_tr_r2: f64,
    pub mean_ratio_unbiased: f64,
    pub mean_naive: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub x: f64,
    pub empirical: f64,
    pub theoretical: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSummary {
    pub variant: Variant,
    pub draws: Vec<f64>,
    /// None when the reference is the exact finite-n law.
    pub law: Option<MixtureLaw>,
    pub ks_vs_law: f64,
    pub mean: f64,
    pub sd: f64,
    pub density_grid: Vec<DensityPoint>,
    pub trace: TraceComparison,
}

pub fn run_null_experiment(cfg: &ExperimentConfig) -> Result<EmpiricalSummary> {
    cfg.validate()?;
    let reference = cfg.law.reference(cfg.variant, &cfg.model, cfg.n, cfg.p)?;
    let reps = simulate_statistics(&cfg.model, cfg.n, cfg.p, cfg.reps, cfg.seed, &[cfg.variant])?;
    let draws = reps.stats.into_iter().next().expect("one variant");

    let grid = match cfg.grid {
        Some(g) => g,
        None => default_grid(&draws),
    };
    let (law, ks, density_grid) = match reference {
        Reference::Mixture(law) => {
            let ks = ks_distance(&draws, &law, cfg.cdf_draws, cfg.seed.derive(LAW_SEED_TAG))?;
            let grid = density_curves(&draws, &law, grid.lo, grid.hi, grid.n)?;
            (Some(law), ks, grid)
        }
        Reference::Exact(exact) => {
            let ks = ks_against(&draws, |t| exact.cdf(t))?;
            let grid = density_curves_with(&draws, grid.lo, grid.hi, grid.n, |xs| {
                Ok(xs.iter().map(|&x| exact.pdf(x)).collect())
            })?;
            (None, ks, grid)
        }
    };

    let true_tr = cfg.model.tr_r2(cfg.p)?;
    let (d, n_eff) = match cfg.n {
        SampleSizes::One(n) => (n - 1, n),
        SampleSizes::Two([a, b]) => (a + b - 2, a + b),
    };
    let pf = cfg.p as f64;
    let count = reps.inputs.len() as f64;
    let mean_ratio = reps
        .inputs
        .iter()
        .map(|i| i.tr_r2_hat - pf * (pf - 1.0) / d as f64)
        .sum::<f64>()
        / count
        / true_tr;
    let mean_naive = reps
        .inputs
        .iter()
        .map(|i| i.tr_r2_hat - pf * pf / n_eff as f64)
        .sum::<f64>()
        / count
        / true_tr;

    let (mean, sd) = mean_sd(&draws);
    Ok(EmpiricalSummary {
        variant: cfg.variant,
        draws,
        law,
        ks_vs_law: ks,
        mean,
        sd,
        density_grid,
        trace: TraceComparison {
            true_tr_r2: true_tr,
            mean_ratio_unbiased: mean_ratio,
            mean_naive,
        },
    })
}

pub fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, frac) = (pos.floor() as usize, pos - pos.floor());
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn default_grid(draws: &[f64]) -> GridSpec {
    let mut s = draws.to_vec();
    s.sort_by(f64::total_cmp);
    let (lo, hi) = (quantile_sorted(&s, 0.005), quantile_sorted(&s, 0.995));
    let pad = 0.05 * (hi - lo).max(1e-6);
    GridSpec {
        lo: lo - pad,
        hi: hi + pad,
        n: DEFAULT_GRID_POINTS,
    }
}

/// sup |F_n − F| with F continuous, evaluated at the jumps of F_n; ties in
/// the draws are handled as single jumps.
pub fn ks_against<F: Fn(f64) -> f64>(draws: &[f64], cdf: F) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::domain("KS distance needs at least one draw"));
    }
    let sorted = EmpiricalCdf::new(draws.to_vec())?;
    let s = sorted.sorted();
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let mut j = i;
        while j + 1 < s.len() && s[j + 1] == s[i] {
            j += 1;
        }
        let f = cdf(s[i]);
        d = d.max(f - i as f64 / n).max((j + 1) as f64 / n - f);
        i = j + 1;
    }
    Ok(d.clamp(0.0, 1.0))
}

/// KS distance between the draws and the law, whose CDF is the empirical
/// CDF of `n_cdf_draws` law samples.
pub fn ks_distance(draws: &[f64], law: &MixtureLaw, n_cdf_draws: usize, seed: SeedSpec) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::domain("KS distance needs at least one draw"));
    }
    let cdf = LawCdf::new(law, crate::limit_law::CdfMethod::MonteCarlo, n_cdf_draws, seed)?;
    ks_against(draws, |t| cdf.eval(t))
}

/// Two-sample KS statistic sup |F_a − F_b|.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let fa = EmpiricalCdf::new(a.to_vec())?;
    let fb = EmpiricalCdf::new(b.to_vec())?;
    let (sa, sb) = (fa.sorted(), fb.sorted());
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Gaussian KDE of `draws` on an even grid (Silverman bandwidth
/// 0.9·min(sd, IQR/1.34)·n^{−1/5}) next to the law's density.
pub fn density_curves(draws: &[f64], law: &MixtureLaw, lo: f64, hi: f64, n_grid: usize) -> Result<Vec<DensityPoint>> {
    density_curves_with(draws, lo, hi, n_grid, |xs| density(law, xs))
}

fn density_curves_with<F>(draws: &[f64], lo: f64, hi: f64, n_grid: usize, theoretical: F) -> Result<Vec<DensityPoint>>
where
    F: FnOnce(&[f64]) -> Result<Vec<f64>>,
{
    if draws.is_empty() {
        return Err(Error::domain("density curves need at least one draw"));
    }
    if !(lo < hi) {
        return Err(Error::domain(format!(
            "grid bounds must satisfy lo < hi, got {lo} and {hi}"
        )));
    }
    if n_grid == 0 {
        return Ok(Vec::new());
    }
    let xs: Vec<f64> = if n_grid == 1 {
        vec![lo]
    } else {
        (0..n_grid)
            .map(|i| lo + (hi - lo) * i as f64 / (n_grid - 1) as f64)
            .collect()
    };
    let emp = kde(draws, &xs);
    let theo = theoretical(&xs)?;
    Ok(xs
        .into_iter()
        .zip(emp)
        .zip(theo)
        .map(|((x, empirical), theoretical)| DensityPoint {
            x,
            empirical,
            theoretical,
        })
        .collect())
}

pub fn silverman_bandwidth(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let (_, sd) = mean_sd(sorted);
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * n.powf(-0.2);
    if h > 0.0 {
        h
    } else {
        1e-3
    }
}

fn kde(draws: &[f64], xs: &[f64]) -> Vec<f64> {
    let mut s = draws.to_vec();
    s.sort_by(f64::total_cmp);
    let h = silverman_bandwidth(&s);
    let norm = 1.0 / (s.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    // Kernel mass beyond 8h is below 1e-14.
    map_indexed(xs.len(), |i| {
        let x = xs[i];
        let a = s.partition_point(|&v| v < x - 8.0 * h);
        let b = s.partition_point(|&v| v <= x + 8.0 * h);
        s[a..b]
            .iter()
            .map(|&v| (-0.5 * ((x - v) / h).powi(2)).exp())
            .sum::<f64>()
            * norm
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub m: usize,
    pub cov: McEstimate,
    /// m·|cov|
    pub scaled: f64,
}

/// Monte Carlo Cov(r̂₁₂², r̂₃₄²) for each m, where r̂ is the uncentered
/// sample correlation of m draws from N(0, R4).
pub fn theorem4_decay_check(r4: &Corr4, m_grid: &[usize], reps: usize, seed: SeedSpec) -> Result<Vec<DecayRow>> {
    if let Some(&m) = m_grid.iter().find(|&&m| m < 5) {
        return Err(Error::domain(format!("m values must be at least 5, got {m}")));
    }
    if reps < 10_000 {
        return Err(Error::domain(format!("need at least 10000 replicates, got {reps}")));
    }
    m_grid
        .iter()
        .map(|&m| {
            let pairs = mc_corr4(r4, m, reps, seed.derive(m as u64), |x| {
                let (c1, c2, c3, c4) = (x.column(0), x.column(1), x.column(2), x.column(3));
                (
                    rhat_sq(c1.dot(&c1), c2.dot(&c2), c1.dot(&c2)),
                    rhat_sq(c3.dot(&c3), c4.dot(&c4), c3.dot(&c4)),
                )
            })?;
            let cov = covariance_estimate(&pairs);
            Ok(DecayRow {
                m,
                cov,
                scaled: m as f64 * cov.value.abs(),
            })
        })
        .collect()
}
