//! Goodness-of-fit checks for the samplers.
//!
//! Continuous laws use the one-sample Kolmogorov-Smirnov test and the
//! Poisson law a chi-square test over bins merged until every expected
//! count is at least five. Reference CDFs and quantiles come from `statrs`,
//! independently of the samplers under test.

use std::f64::consts::TAU;
use std::fmt;

use sporegen_core::{derive_stream, sample_normal, sample_poisson, sample_uniform, RandomSource};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Normal, Poisson};

pub const DEFAULT_SIGNIFICANCE: f64 = 0.01;
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_SELFTEST_SEED: u64 = 20_240_101;

/// Minimum expected count per chi-square bin.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    KolmogorovSmirnov,
    ChiSquare,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LawCheck {
    pub law: String,
    pub kind: TestKind,
    pub samples: usize,
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub sample_mean: f64,
    pub expected_mean: f64,
}

impl LawCheck {
    pub fn passed(&self) -> bool {
        self.statistic <= self.critical_value
    }
}

impl fmt::Display for LawCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            TestKind::KolmogorovSmirnov => "KS",
            TestKind::ChiSquare => "chi2",
        };
        write!(
            f,
            "{} {:<22} {kind:<4} n={} stat={:.6} crit={:.6} p={:.4} mean={:.5} (expected {:.5})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.law,
            self.samples,
            self.statistic,
            self.critical_value,
            self.p_value,
            self.sample_mean,
            self.expected_mean,
        )
    }
}

/// Kolmogorov-Smirnov distance between the sample and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Survival function of the limiting Kolmogorov distribution,
/// `P(K > x) = 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2)`.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 0.2 {
        // the alternating series converges slowly here and the value is ~1
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = f64::from(k);
        let term = (-2.0 * k * k * x * x).exp();
        sum += if k as u32 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Stephens' finite-sample scaling `sqrt(n) + 0.12 + 0.11 / sqrt(n)`.
fn ks_scale(n: usize) -> f64 {
    let rn = (n as f64).sqrt();
    rn + 0.12 + 0.11 / rn
}

/// Critical value of `D` at `alpha`, by bisection on the Kolmogorov
/// survival function.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.2, 5.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_survival(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) / ks_scale(n)
}

pub fn ks_check(
    law: &str,
    samples: &[f64],
    cdf: impl Fn(f64) -> f64,
    expected_mean: f64,
    alpha: f64,
) -> LawCheck {
    let n = samples.len();
    let d = ks_statistic(samples, cdf);
    LawCheck {
        law: law.to_string(),
        kind: TestKind::KolmogorovSmirnov,
        samples: n,
        statistic: d,
        critical_value: ks_critical_value(n, alpha),
        p_value: kolmogorov_survival(d * ks_scale(n)),
        sample_mean: mean(samples.iter().copied()),
        expected_mean,
    }
}

/// Chi-square test of Poisson(`lambda`) counts. Upper categories are pooled
/// into a tail bin so that each expected count is at least five; the lower
/// end is pooled the same way.
pub fn poisson_chi_square(law: &str, counts: &[u32], lambda: f64, alpha: f64) -> LawCheck {
    let n = counts.len();
    let nf = n as f64;
    let pmf = Poisson::new(lambda).expect("positive rate");
    let max_k = counts.iter().copied().max().unwrap_or(0) as usize;
    let last = max_k.max((lambda + 10.0 * lambda.sqrt() + 10.0) as usize);
    // probs[last] is the open tail P(X >= last)
    let mut probs: Vec<f64> = (0..last).map(|k| pmf.pmf(k as u64)).collect();
    probs.push((1.0 - probs.iter().sum::<f64>()).max(0.0));
    let mut observed = vec![0usize; last + 1];
    for &k in counts {
        observed[(k as usize).min(last)] += 1;
    }

    let mut bins: Vec<(f64, usize)> = Vec::new();
    let (mut acc_p, mut acc_o) = (0.0, 0usize);
    for (&p, &o) in probs.iter().zip(&observed) {
        acc_p += p;
        acc_o += o;
        if acc_p * nf >= MIN_EXPECTED {
            bins.push((acc_p, acc_o));
            (acc_p, acc_o) = (0.0, 0);
        }
    }
    match bins.last_mut() {
        Some(tail) => {
            tail.0 += acc_p;
            tail.1 += acc_o;
        }
        None => bins.push((acc_p, acc_o)),
    }

    let statistic: f64 = bins
        .iter()
        .map(|&(p, o)| {
            let e = p * nf;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = (bins.len().max(2) - 1) as f64;
    let chi = ChiSquared::new(dof).expect("positive dof");
    LawCheck {
        law: law.to_string(),
        kind: TestKind::ChiSquare,
        samples: n,
        statistic,
        critical_value: chi.inverse_cdf(1.0 - alpha),
        p_value: 1.0 - chi.cdf(statistic),
        sample_mean: mean(counts.iter().map(|&c| f64::from(c))),
        expected_mean: lambda,
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn stream(seed: u64, law: &str) -> RandomSource {
    derive_stream(seed, &format!("selftest/{law}"))
}

fn uniform_check(seed: u64, law: &str, a: f64, b: f64, n: usize, alpha: f64) -> LawCheck {
    let mut src = stream(seed, law);
    let xs: Vec<f64> = (0..n)
        .map(|_| sample_uniform(&mut src, a, b).expect("valid bounds"))
        .collect();
    ks_check(
        law,
        &xs,
        |x| ((x - a) / (b - a)).clamp(0.0, 1.0),
        0.5 * (a + b),
        alpha,
    )
}

fn normal_check(seed: u64, law: &str, mu: f64, sigma: f64, n: usize, alpha: f64) -> LawCheck {
    let mut src = stream(seed, law);
    let xs: Vec<f64> = (0..n)
        .map(|_| sample_normal(&mut src, mu, sigma).expect("valid sigma"))
        .collect();
    let reference = Normal::new(mu, sigma).expect("positive sigma");
    ks_check(law, &xs, |x| reference.cdf(x), mu, alpha)
}

fn poisson_check(seed: u64, law: &str, lambda: f64, n: usize, alpha: f64) -> LawCheck {
    let mut src = stream(seed, law);
    let ks: Vec<u32> = (0..n)
        .map(|_| sample_poisson(&mut src, lambda).expect("valid rate"))
        .collect();
    poisson_chi_square(law, &ks, lambda, alpha)
}

/// Every sampling law the generator uses, at its default parameters.
pub fn selftest(seed: u64, samples: usize, alpha: f64) -> Vec<LawCheck> {
    vec![
        uniform_check(seed, "uniform(0,1)", 0.0, 1.0, samples, alpha),
        uniform_check(seed, "spore_position", 0.1, 0.9, samples, alpha),
        uniform_check(seed, "spore_jitter", -0.01, 0.01, samples, alpha),
        uniform_check(seed, "branch_angle", 0.0, TAU, samples, alpha),
        uniform_check(seed, "hypha_width_factor", 0.6, 1.0, samples, alpha),
        uniform_check(seed, "mycelium_width_factor", 0.7, 1.0, samples, alpha),
        normal_check(seed, "normal(0,1)", 0.0, 1.0, samples, alpha),
        normal_check(seed, "length_noise", 1.0, 0.2, samples, alpha),
        normal_check(seed, "mycelium_length", 0.8, 0.15, samples, alpha),
        normal_check(seed, "temperature", 1.0, 0.1, samples, alpha),
        poisson_check(seed, "poisson(0.5)", 0.5, samples, alpha),
        poisson_check(seed, "poisson(3)", 3.0, samples, alpha),
        poisson_check(seed, "poisson(5)", 5.0, samples, alpha),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_reference_points() {
        // standard table values of the limiting distribution
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
        assert!((ks_critical_value(1, 0.01) * ks_scale(1) - 1.6276).abs() < 1e-3);
    }

    #[test]
    fn ks_statistic_of_tiny_samples() {
        // single point at the median: D = 0.5
        assert!((ks_statistic(&[0.5], |x| x) - 0.5).abs() < 1e-15);
        // evenly spaced quantile midpoints: D = 1 / (2n)
        let xs: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert!((ks_statistic(&xs, |x| x) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn ks_rejects_the_wrong_law() {
        let mut src = derive_stream(1, "wrong");
        let xs: Vec<f64> = (0..20_000)
            .map(|_| sample_normal(&mut src, 0.0, 1.0).unwrap())
            .collect();
        let check = ks_check(
            "shifted",
            &xs,
            |x| Normal::new(0.1, 1.0).unwrap().cdf(x),
            0.1,
            0.01,
        );
        assert!(!check.passed());
    }

    #[test]
    fn chi_square_rejects_the_wrong_rate() {
        let mut src = derive_stream(1, "wrong-rate");
        let ks: Vec<u32> = (0..20_000)
            .map(|_| sample_poisson(&mut src, 3.2).unwrap())
            .collect();
        assert!(!poisson_chi_square("rate", &ks, 3.0, 0.01).passed());
    }

    #[test]
    fn chi_square_bins_have_enough_mass() {
        let mut src = derive_stream(2, "bins");
        let ks: Vec<u32> = (0..1_000)
            .map(|_| sample_poisson(&mut src, 0.5).unwrap())
            .collect();
        let check = poisson_chi_square("small", &ks, 0.5, 0.01);
        // with n = 1000 and lambda = 0.5 there are at most 4 viable bins
        assert!(check.critical_value <= ChiSquared::new(3.0).unwrap().inverse_cdf(0.99) + 1e-9);
        assert!(check.statistic.is_finite());
    }

    #[test]
    fn selftest_passes_on_default_seed() {
        let checks = selftest(DEFAULT_SELFTEST_SEED, DEFAULT_SAMPLES, DEFAULT_SIGNIFICANCE);
        for c in &checks {
            assert!(c.passed(), "{c}");
        }
    }
}
