use proptest::prelude::*;

use hdmean::corrmat::{check_majorization, from_spectrum, spectrum};
use hdmean::limit_law::{CfInverter, LawCdf};
use hdmean::mean_tests::{t_p1, t_p2, t_sd_one, t_sd_two};
use hdmean::sample_stats::{pooled_summary, summarize};
use hdmean::sim_harness::ks_against;
use hdmean::{CdfMethod, Dataset, MixtureLaw, SeedSpec, SpectrumSpec};

fn spectrum_strategy() -> impl Strategy<Value = SpectrumSpec> {
    prop::collection::vec(0.0f64..1.0, 2..10).prop_map(|raw| {
        let raw: Vec<f64> = raw.into_iter().map(|x| x * x + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let p = raw.len() as f64;
        SpectrumSpec::from_unsorted(raw.into_iter().map(|x| x * p / total).collect())
    })
}

fn dataset_strategy(n: std::ops::Range<usize>, p: usize) -> impl Strategy<Value = Dataset> {
    n.prop_flat_map(move |n| prop::collection::vec(prop::collection::vec(-5.0f64..5.0, p), n))
        .prop_map(|rows| Dataset::from_rows(&rows, "prop").unwrap())
}

fn four_stats(a: &Dataset, b: &Dataset) -> [f64; 4] {
    let s = summarize(a).unwrap();
    let pooled = pooled_summary(a, b).unwrap();
    [
        t_sd_one(&s, a.n()).unwrap().statistic,
        t_p1(&s, a.n()).unwrap().statistic,
        t_sd_two(&pooled, a.n(), b.n()).unwrap().statistic,
        t_p2(&pooled, a.n(), b.n()).unwrap().statistic,
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_round_trip(spec in spectrum_strategy(), seed in any::<u64>()) {
        prop_assert!(check_majorization(&spec).unwrap());
        let r = from_spectrum(&spec, Some(SeedSpec::from_master(seed))).unwrap();
        let back = spectrum(&r);
        for (a, b) in spec.as_slice().iter().zip(back.as_slice()) {
            prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        for i in 0..r.p() {
            prop_assert!((r.get(i, i) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mixture_normalization(rho in prop::collection::vec(0.0f64..1.0, 1..8), frac in 0.0f64..=1.0) {
        let norm = rho.iter().map(|r| r * r).sum::<f64>().sqrt();
        prop_assume!(norm > 0.0);
        let law = MixtureLaw::from_rho(rho.iter().map(|r| r * frac / norm).collect()).unwrap();
        let total = law.b * law.b + law.rho.iter().map(|r| r * r).sum::<f64>();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!((law.variance() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn statistics_are_scale_invariant(
        a in dataset_strategy(5..12, 9),
        b in dataset_strategy(4..10, 9),
        log_scales in prop::collection::vec(-2.0f64..2.0, 9),
    ) {
        let base = four_stats(&a, &b);
        let scaled_a = a.map_columns(|j, x| x * 10f64.powf(log_scales[j]));
        let scaled_b = b.map_columns(|j, x| x * 10f64.powf(log_scales[j]));
        let scaled = four_stats(&scaled_a, &scaled_b);
        for k in 0..4 {
            prop_assert!((base[k] - scaled[k]).abs() < 1e-9 * (1.0 + base[k].abs()), "{k}: {} vs {}", base[k], scaled[k]);
        }
    }

    #[test]
    fn statistics_ignore_row_order(a in dataset_strategy(5..12, 7), b in dataset_strategy(4..10, 7)) {
        let base = four_stats(&a, &b);
        let rev: Vec<usize> = (0..a.n()).rev().collect();
        let other = four_stats(&a.permute_rows(&rev), &b);
        for k in 0..4 {
            prop_assert_eq!(base[k].to_bits(), other[k].to_bits());
        }
    }

    #[test]
    fn cdf_methods_agree(rho in prop::collection::vec(0.05f64..1.0, 1..4), frac in 0.0f64..0.95, t in -2.5f64..4.0) {
        let norm = rho.iter().map(|r| r * r).sum::<f64>().sqrt();
        let law = MixtureLaw::from_rho(rho.iter().map(|r| r * frac / norm).collect()).unwrap();
        let mc = LawCdf::new(&law, CdfMethod::MonteCarlo, 200_000, SeedSpec::from_master(5)).unwrap();
        let cf = CfInverter::new(&law).unwrap();
        prop_assert!((mc.eval(t) - cf.cdf(t)).abs() < 0.006, "{} vs {}", mc.eval(t), cf.cdf(t));
    }

    #[test]
    fn ks_is_a_distance(draws in prop::collection::vec(-4.0f64..4.0, 1..200)) {
        let ks = ks_against(&draws, |t| 1.0 / (1.0 + (-t).exp())).unwrap();
        prop_assert!((0.0..=1.0).contains(&ks));
    }

    #[test]
    fn seed_json_round_trip(master in any::<u64>(), stream in any::<u64>()) {
        let s = SeedSpec::new(master, stream);
        let back: SeedSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        prop_assert_eq!(s, back);
    }
}
