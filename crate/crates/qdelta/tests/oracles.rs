//! Independent oracles for the analytic pieces, and frozen reference values.

use num_complex::Complex64;
use proptest::prelude::*;
use qdelta::arch::{osc_integral, DeltaKernel, QuadratureSpec, WeightSpec};
use qdelta::expsums::{brute_s1, brute_s_literal, brute_s_at, lemma21_eval};
use qdelta::modarith::gcd_i128;
use qdelta::pipeline::{enumerate_gamma, poisson_rhs, Truncation};
use qdelta::{CongruenceDatum, ProblemInstance, QForm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hyperboloid(l: u64, lambda: [i64; 3]) -> ProblemInstance {
    let form = QForm::diagonal(1, 1, -1).unwrap();
    let cong = CongruenceDatum::new(&form, 1, l, lambda).unwrap();
    ProblemInstance::new(form, 1, 5, 1, cong, WeightSpec::ball([2f64.sqrt(), 0.0, 1.0], 1.0)).unwrap()
}

/// Γ by a plain loop over the integer box, with the weight written out.
fn naive_gamma(inst: &ProblemInstance) -> (f64, usize) {
    let sqrt_n = inst.sqrt_n();
    let w = inst.weight;
    let l = inst.l() as i64;
    let lam = inst.lambda_n();
    let lo = w.center.map(|c| ((c - w.radius) * sqrt_n).floor() as i64);
    let hi = w.center.map(|c| ((c + w.radius) * sqrt_n).ceil() as i64);
    let target = inst.target() as i64;
    let (mut total, mut count) = (0.0, 0);
    for x in lo[0]..=hi[0] {
        for y in lo[1]..=hi[1] {
            for z in lo[2]..=hi[2] {
                if [x, y, z].iter().zip(lam).any(|(&v, r)| (v - r as i64).rem_euclid(l) != 0) {
                    continue;
                }
                if x * x + y * y - z * z != target {
                    continue;
                }
                let u2 = [x, y, z].iter().zip(w.center).map(|(&v, c)| (v as f64 / sqrt_n - c).powi(2)).sum::<f64>()
                    / (w.radius * w.radius);
                if u2 < 1.0 {
                    total += (-1.0 / (1.0 - u2)).exp();
                    count += 1;
                }
            }
        }
    }
    (total, count)
}

#[test]
fn gamma_against_naive_loop() {
    let inst = hyperboloid(1, [0; 3]);
    let (naive, count) = naive_gamma(&inst);
    let got = enumerate_gamma(&inst).unwrap();
    assert_eq!(got.raw_count, count as u64);
    assert!((got.gamma - naive).abs() < 1e-12, "{} vs {naive}", got.gamma);
    // frozen from the naive loop
    assert_eq!(count, 10);
    assert!((naive - 0.866_623_2).abs() < 1e-6, "{naive}");

    let l2 = hyperboloid(2, [1, 0, 0]);
    let (naive, count) = naive_gamma(&l2);
    let got = enumerate_gamma(&l2).unwrap();
    assert_eq!((got.raw_count, count), (4, 4));
    assert!((got.gamma - naive).abs() < 1e-12);
}

#[test]
fn oscillatory_integral_against_monte_carlo() {
    let inst = hyperboloid(1, [0; 3]);
    let kernel = DeltaKernel::new(inst.q_param()).unwrap();
    let (r, b) = (0.5, [1.0, 0.0, 0.0]);
    let quad = QuadratureSpec::default();
    let est = osc_integral(&inst.form, inst.m0, &inst.weight, &kernel, r, b, &quad).unwrap();

    let w = inst.weight;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let samples = 10_000_000usize;
    let volume = (2.0 * w.radius).powi(3);
    let (mut sum, mut sq) = (Complex64::new(0.0, 0.0), [0.0f64; 2]);
    for _ in 0..samples {
        let t: [f64; 3] = std::array::from_fn(|i| w.center[i] + w.radius * rng.gen_range(-1.0..1.0));
        let wt = w.eval(t);
        if wt == 0.0 {
            continue;
        }
        let y = inst.form.value_f64(t) - inst.m0 as f64;
        let phase = -(b[0] * t[0] + b[1] * t[1] + b[2] * t[2]) / r;
        let f = Complex64::from_polar(wt * kernel.h_unchecked(r, y), 2.0 * std::f64::consts::PI * phase) * volume;
        sum += f;
        sq[0] += f.re * f.re;
        sq[1] += f.im * f.im;
    }
    let n = samples as f64;
    let mean = sum / n;
    let se = [((sq[0] / n - mean.re * mean.re) / n).sqrt(), ((sq[1] / n - mean.im * mean.im) / n).sqrt()];
    assert!((est.value.re - mean.re).abs() <= 3.0 * se[0] + est.error, "{} vs {} ± {}", est.value.re, mean.re, se[0]);
    assert!((est.value.im - mean.im).abs() <= 3.0 * se[1] + est.error, "{} vs {} ± {}", est.value.im, mean.im, se[1]);
}

#[test]
fn poisson_l2_at_sixteen() {
    let inst = hyperboloid(2, [1, 0, 0]);
    let gamma = enumerate_gamma(&inst).unwrap().gamma;
    let mut trunc = Truncation::default_for(&inst);
    trunc.c_max = 16;
    let rhs = poisson_rhs(&inst, &trunc).unwrap();
    assert!((rhs.total.re - gamma).abs() <= 0.02 * gamma.max(inst.sqrt_n()), "{} vs {gamma}", rhs.total.re);
    assert!(rhs.imaginary_within_budget());
}

#[test]
fn c_doubling_matches_outer_shells() {
    let inst = hyperboloid(2, [1, 0, 0]);
    let mut trunc = Truncation::default_for(&inst);
    trunc.c_max = 8;
    let coarse = poisson_rhs(&inst, &trunc).unwrap();
    trunc.c_max = 16;
    let fine = poisson_rhs(&inst, &trunc).unwrap();
    let outer: Complex64 = fine.per_q.iter().map(|s| s.outer).sum();
    let step = fine.total - coarse.total;
    // the shells 8 < |c| ≤ 16 are exactly what doubling adds, up to quadrature
    assert!((step - outer).norm() <= 1e-3 * inst.sqrt_n(), "{step} vs {outer}");
    assert!(step.norm() <= fine.tail_estimate + 1e-3 * inst.sqrt_n());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lemma_matches_brute_for_random_c(q1 in (1u64..20).prop_map(|k| 2 * k + 1), c in prop::array::uniform3(-30i128..30)) {
        let inst = hyperboloid(2, [1, 0, 0]);
        prop_assume!(gcd_i128(q1 as i128, inst.target() * inst.omega()) == 1);
        let closed = lemma21_eval(&inst, q1, 4, c).unwrap().value;
        let brute = brute_s1(&inst, q1, 4, c).unwrap().value;
        prop_assert!((closed - brute).norm() <= 1e-6 * (q1 * q1) as f64);
    }

    #[test]
    fn collapsed_sum_matches_literal(q in 1u64..7, c in prop::array::uniform3(-5i128..5)) {
        let inst = hyperboloid(2, [1, 0, 0]);
        let literal = brute_s_literal(&inst, q, c).unwrap();
        let collapsed = brute_s_at(&inst, q, &[c]).unwrap()[0];
        prop_assert!((literal.value - collapsed.value).norm() <= 1e-9 * literal.terms as f64);
        prop_assert_eq!(literal.terms, collapsed.terms);
    }

    #[test]
    fn shifting_c_by_the_modulus_is_invisible(q in 1u64..12, c in prop::array::uniform3(-4i128..4), k in 0usize..3) {
        let inst = hyperboloid(1, [0; 3]);
        let mut shifted = c;
        shifted[k] += q as i128;
        let v = brute_s_at(&inst, q, &[c, shifted]).unwrap();
        prop_assert!((v[0].value - v[1].value).norm() <= 1e-9 * v[0].terms as f64);
    }
}
