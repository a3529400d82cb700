use hdboot::limit::{ks_distance, EmpiricalCdf, WeightedChiSquare};
use hdboot::rng::stream;
use hdboot::sequence::{dn_of, generate_sample, EigenvalueDecay, Innovation, SpectralModel, TruncationRule};
use hdboot::statistic::v_statistic;

/// χ²₅ density `x^{3/2} e^{−x/2} / (2^{5/2} Γ(5/2))`, `Γ(5/2) = 3√π / 4`.
fn chi2_5_density(x: f64) -> f64 {
    let norm = 2f64.powf(2.5) * 0.75 * std::f64::consts::PI.sqrt();
    x.powf(1.5) * (-x / 2.0).exp() / norm
}

/// Composite Simpson on `[0, x]`.
fn chi2_5_cdf(x: f64) -> f64 {
    let steps = 20_000;
    let h = x / steps as f64;
    let mut s = chi2_5_density(0.0) + chi2_5_density(x);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * chi2_5_density(i as f64 * h);
    }
    s * h / 3.0
}

fn chi2_5_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 100.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if chi2_5_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn chi2_5_oracle_is_sane() {
    // tabulated value 11.0705
    assert!((chi2_5_quantile(0.95) - 11.0705).abs() < 1e-3);
}

#[test]
fn chi_square_one_mean() {
    let w = WeightedChiSquare::new(vec![1.0]).unwrap();
    let draws = w.sample_seeded(1_000_000, 1);
    let mean = draws.iter().sum::<f64>() / 1e6;
    assert!((mean - 1.0).abs() < 0.005, "mean {mean}");
}

#[test]
fn chi_square_five_upper_quantile() {
    let oracle = chi2_5_quantile(0.95);
    let w = WeightedChiSquare::new(vec![1.0; 5]).unwrap();
    let e = EmpiricalCdf::new(w.sample_seeded(10_000_000, 2)).unwrap();
    let q = e.quantile(0.95).unwrap();
    assert!((q - oracle).abs() < 0.02, "empirical {q} vs oracle {oracle}");
    assert!((q - 11.070).abs() < 0.02);
}

#[test]
fn weighted_mean_matches_trace() {
    let w = WeightedChiSquare::new(vec![3.0, 1.5, 0.2, 0.0, 0.7]).unwrap();
    let m = 1_000_000;
    let draws = w.sample_seeded(m, 3);
    let mean = draws.iter().sum::<f64>() / m as f64;
    let sigma = (w.variance() / m as f64).sqrt();
    assert!((mean - w.trace()).abs() < 4.0 * sigma, "mean {mean} vs {}", w.trace());
}

#[test]
fn truncation_error_shrinks_with_level() {
    // λ_i = i^{-2}: compare the sampler truncated at l with the one at 2l
    let decay = EigenvalueDecay::Power { c: 1.0, gamma: 2.0 };
    let m = 100_000;
    let distances: Vec<f64> = [5usize, 10, 20, 40]
        .iter()
        .map(|&l| {
            let short = decay.limit_law(l).unwrap().sample_seeded(m, 10 + l as u64);
            let long = decay.limit_law(2 * l).unwrap().sample_seeded(m, 20 + l as u64);
            ks_distance(&EmpiricalCdf::new(short).unwrap(), &EmpiricalCdf::new(long).unwrap())
        })
        .collect();
    assert!(distances.windows(2).all(|w| w[0] > w[1]), "{distances:?}");
    // tail mass shrinks accordingly
    assert!(decay.limit_law(40).unwrap().truncation_tail() < decay.limit_law(5).unwrap().truncation_tail());
}

#[test]
fn statistic_mean_is_partial_trace() {
    // E[V_n(d_n)] = Σ_{k ≤ d_n} λ_k under μ = 0; Var[V_n] = 2Σλ_k² for gaussian data
    let model = SpectralModel::new(EigenvalueDecay::Power { c: 1.0, gamma: 2.0 }, Innovation::Gaussian);
    let n = 64;
    let d = dn_of(TruncationRule::Power { beta: 0.5 }, n);
    let datasets = 10_000;
    let values: Vec<f64> = (0..datasets)
        .map(|i| {
            let s = generate_sample(&model, n, d, &mut stream(500, i)).unwrap();
            v_statistic(&s, &vec![0.0; d]).unwrap()
        })
        .collect();
    let mean = values.iter().sum::<f64>() / datasets as f64;
    let target = model.decay.partial_trace(d);
    let var: f64 = 2.0 * model.decay.leading(d).iter().map(|l| l * l).sum::<f64>();
    assert!(
        (mean - target).abs() < 4.0 * (var / datasets as f64).sqrt(),
        "mean {mean} vs {target}"
    );
}
