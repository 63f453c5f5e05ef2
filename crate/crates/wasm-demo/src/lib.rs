//! Browser bindings: each export takes plain numbers and returns a JSON
//! string for the page to plot.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use hdmean::limit_law::{density, example1_law, example3_law, CfInverter, MixtureLaw};
use hdmean::mean_tests::SampleSizes;
use hdmean::sim_harness::{ks_against, mean_sd, simulate_statistics, Model};
use hdmean::{SeedSpec, Variant};

/// Largest simulation the page may request (it runs on the UI thread).
pub const MAX_WORK: usize = 40_000_000;

type Out<T> = Result<T, String>;

fn js_err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn grid(lo: f64, hi: f64, n: usize) -> Out<Vec<f64>> {
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) || !(2..=2001).contains(&n) {
        return Err(js_err(format!(
            "need lo < hi and 2 <= points <= 2001, got [{lo}, {hi}] with {n}"
        )));
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn law_curves(law: &MixtureLaw, xs: &[f64]) -> Out<Value> {
    let pdf = density(law, xs).map_err(js_err)?;
    let inv = CfInverter::new(law).map_err(js_err)?;
    let cdf: Vec<f64> = xs.iter().map(|&x| inv.cdf(x)).collect();
    Ok(json!({ "law": law, "x": xs, "density": pdf, "cdf": cdf }))
}

fn to_string(v: &Value) -> String {
    v.to_string()
}

/// Density and distribution function of the compound
/// symmetry limit for r = c/√p; a non-finite or negative `c` means fixed r.
#[wasm_bindgen]
pub fn example1_curves(c: f64, lo: f64, hi: f64, points: usize) -> Result<String, JsError> {
    example1_curves_json(c, lo, hi, points).map_err(|e| JsError::new(&e))
}

fn example1_curves_json(c: f64, lo: f64, hi: f64, points: usize) -> Out<String> {
    let c = if c.is_finite() && c >= 0.0 { c } else { f64::INFINITY };
    let law = example1_law(c).map_err(js_err)?;
    Ok(to_string(&law_curves(&law, &grid(lo, hi, points)?)?))
}

/// Weights of the geometric-spike law (ratio 1/2) and its density.
#[wasm_bindgen]
pub fn geometric_weights(tau: f64, lo: f64, hi: f64, points: usize) -> Result<String, JsError> {
    geometric_weights_json(tau, lo, hi, points).map_err(|e| JsError::new(&e))
}

fn geometric_weights_json(tau: f64, lo: f64, hi: f64, points: usize) -> Out<String> {
    let law = example3_law(tau, 64).map_err(js_err)?;
    Ok(to_string(&law_curves(&law, &grid(lo, hi, points)?)?))
}

/// Simulated T_{p,1} under compound symmetry r = c/√p (r = 1/2 for a
/// non-finite `c`), binned, next to the limit density, with their KS distance.
#[wasm_bindgen]
pub fn simulate_tp1(n: usize, p: usize, c: f64, reps: usize, bins: usize, seed: u32) -> Result<String, JsError> {
    simulate_tp1_json(n, p, c, reps, bins, seed).map_err(|e| JsError::new(&e))
}

fn simulate_tp1_json(n: usize, p: usize, c: f64, reps: usize, bins: usize, seed: u32) -> Out<String> {
    if n.saturating_mul(p).saturating_mul(reps) > MAX_WORK {
        return Err(js_err(format!("n·p·reps must stay below {MAX_WORK}")));
    }
    if !(5..=200).contains(&bins) {
        return Err(js_err("bins must be between 5 and 200"));
    }
    let (model, c) = if c.is_finite() {
        (Model::CompoundScaled { c }, c)
    } else {
        (Model::Compound { r: 0.5 }, f64::INFINITY)
    };
    let reps_out = simulate_statistics(
        &model,
        SampleSizes::One(n),
        p,
        reps,
        SeedSpec::from_master(u64::from(seed)),
        &[Variant::TP1],
    )
    .map_err(js_err)?;
    let draws = reps_out.draws(Variant::TP1).expect("requested variant");
    let law = example1_law(c).map_err(js_err)?;

    let (mut lo, mut hi) = draws
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let pad = 0.05 * (hi - lo).max(1e-6);
    lo -= pad;
    hi += pad;
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in draws {
        counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let centers: Vec<f64> = (0..bins).map(|i| lo + (i as f64 + 0.5) * width).collect();
    let heights: Vec<f64> = counts
        .iter()
        .map(|&k| k as f64 / (draws.len() as f64 * width))
        .collect();

    let curve_x = grid(lo, hi, 201)?;
    let curves = law_curves(&law, &curve_x)?;
    let inv = CfInverter::new(&law).map_err(js_err)?;
    let ks = ks_against(draws, |t| inv.cdf(t)).map_err(js_err)?;
    let (mean, sd) = mean_sd(draws);
    Ok(to_string(&json!({
        "bins": { "center": centers, "width": width, "density": heights },
        "curve": curves,
        "ks": ks,
        "mean": mean,
        "sd": sd,
        "reps": draws.len(),
    })))
}
