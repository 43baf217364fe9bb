use statrs::distribution::{ChiSquared, ContinuousCDF};
use trackline::learn::PairSampler;

/// Pearson statistic against a uniform expectation, with its critical value at `alpha`.
fn chi_square(counts: &[u64], alpha: f64) -> (f64, f64) {
    let n: u64 = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    let stat = counts.iter().map(|c| (*c as f64 - expected).powi(2) / expected).sum();
    let crit = ChiSquared::new((counts.len() - 1) as f64).unwrap().inverse_cdf(1.0 - alpha);
    (stat, crit)
}

#[test]
fn gaps_are_uniform_up_to_delta() {
    for (len, delta, seed) in [(600, 30, 1u64), (100, 30, 2), (40, 5, 3)] {
        let mut counts = vec![0u64; delta];
        for (a, b) in PairSampler::new(len, delta, seed).take(60_000).step_by(2) {
            assert!(b > a && b - a <= delta && b < len);
            counts[b - a - 1] += 1;
        }
        let (stat, crit) = chi_square(&counts, 1e-3);
        assert!(stat < crit, "len {len} delta {delta}: chi2 {stat:.1} >= {crit:.1}");
    }
}

#[test]
fn delta_one_always_gives_neighbours() {
    for (a, b) in PairSampler::new(300, 1, 4).take(1000) {
        assert_eq!(a.abs_diff(b), 1);
    }
}

#[test]
fn reverse_pairs_balance_directions() {
    let pairs: Vec<(usize, usize)> = PairSampler::new(200, 30, 5).take(10_000).collect();
    let forward = pairs.iter().filter(|(a, b)| b > a).count();
    assert_eq!(forward * 2, pairs.len());
}
