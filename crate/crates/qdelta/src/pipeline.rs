//! Γ_w(N) by direct enumeration, the truncated delta/Poisson expansion of
//! it, and main-term predictions over a range of h.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arch::{singular_integral, DeltaKernel, OscTransform, QuadratureSpec, SingularIntegral};
use crate::error::{Error, Result};
use crate::expsums::{crt_split, lemma21_eval, s1_table, s2_table, s_tilde_table};
use crate::instance::ProblemInstance;
use crate::localdens::{l_one_psi0, singular_series, SingularSeries};
use crate::modarith::{gcd_i128, isqrt, reduce};
use crate::numerics::{e, pairwise_sum, pairwise_sum_complex};
use crate::qform::{classify_c, CClass};

/// Largest admissible √N·(support radius) per axis.
pub const BOX_BOUND: f64 = 1e6;
/// Above this qL the exponential sums go through the q₁/q₂ split.
pub const DIRECT_MODULUS: u64 = 200;
pub const DEFAULT_C_MAX: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Strategy {
    /// loop over (x₁, x₂), solve for x₃
    Sliced,
    TripleLoop,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerationResult {
    pub n_big: i128,
    pub gamma: f64,
    /// solutions with w(x/√N) > 0
    pub raw_count: u64,
    pub seconds: f64,
    pub strategy: Strategy,
}

struct Lattice {
    lo: [i128; 3],
    hi: [i128; 3],
    step: i128,
}

impl Lattice {
    fn new(inst: &ProblemInstance) -> Result<Self> {
        let s = inst.sqrt_n();
        let w = &inst.weight;
        if s * w.radius > BOX_BOUND {
            return Err(Error::BoundExceeded { what: "sqrt(N)*radius", limit: BOX_BOUND as u64 });
        }
        let step = inst.l() as i128;
        let lam = inst.lambda_n();
        let mut lo = [0i128; 3];
        let mut hi = [0i128; 3];
        for i in 0..3 {
            let a = (s * (w.center[i] - w.radius)).ceil() as i128;
            let b = (s * (w.center[i] + w.radius)).floor() as i128;
            // first point ≥ a in the class of λ_N
            lo[i] = a + (lam[i] - a).rem_euclid(step);
            hi[i] = b;
        }
        Ok(Self { lo, hi, step })
    }

    fn axis(&self, i: usize) -> impl Iterator<Item = i128> + '_ {
        (self.lo[i]..=self.hi[i]).step_by(self.step as usize)
    }

    fn contains(&self, i: usize, x: i128) -> bool {
        x >= self.lo[i] && x <= self.hi[i] && (x - self.lo[i]).rem_euclid(self.step) == 0
    }
}

fn exact_div(a: i128, b: i128) -> Option<i128> {
    (a % b == 0).then(|| a / b)
}

/// Integer roots x₃ of a·x² + b·x + c = 0 in increasing order.
fn integer_roots(a: i128, b: i128, c: i128, lattice: &Lattice) -> Vec<i128> {
    if a == 0 {
        if b != 0 {
            return exact_div(-c, b).into_iter().collect();
        }
        if c == 0 {
            return lattice.axis(2).collect();
        }
        return Vec::new();
    }
    let disc = b * b - 4 * a * c;
    if disc < 0 {
        return Vec::new();
    }
    let s = isqrt(disc as u128) as i128;
    if s * s != disc {
        return Vec::new();
    }
    let mut roots: Vec<i128> = [-b - s, -b + s].into_iter().filter_map(|n| exact_div(n, 2 * a)).collect();
    roots.sort_unstable();
    roots.dedup();
    roots
}

/// Γ_w(N) = Σ_{x ≡ λ_N mod L, F(x) = m₀N} w(x/√N) by slicing.
pub fn enumerate_gamma(inst: &ProblemInstance) -> Result<EnumerationResult> {
    enumerate_gamma_with(inst, Strategy::Sliced)
}

pub fn enumerate_gamma_with(inst: &ProblemInstance, strategy: Strategy) -> Result<EnumerationResult> {
    let start = Instant::now();
    let lattice = Lattice::new(inst)?;
    if strategy == Strategy::TripleLoop {
        let side = ((lattice.hi[0] - lattice.lo[0]) / lattice.step + 1).max(0) as f64;
        if side * side * side > 1e9 {
            return Err(Error::BoundExceeded { what: "triple-loop box", limit: 1_000_000_000 });
        }
    }
    let [a11, a22, a33, a12, a13, a23] = inst.form.coeffs().map(|c| c as i128);
    let t = inst.target();
    let s = inst.sqrt_n();
    let w = inst.weight;
    let xs0: Vec<i128> = lattice.axis(0).collect();
    // weights per x₁-slice in (x₂, x₃) order, so both strategies reduce identically
    let slices: Vec<(f64, u64)> = xs0
        .par_iter()
        .map(|&x0| {
            let mut weights = Vec::new();
            for x1 in lattice.axis(1) {
                let base = a11 * x0 * x0 + a22 * x1 * x1 + a12 * x0 * x1 - t;
                let lin = a13 * x0 + a23 * x1;
                let roots = match strategy {
                    Strategy::Sliced => integer_roots(a33, lin, base, &lattice),
                    Strategy::TripleLoop => lattice.axis(2).filter(|&x2| (a33 * x2 + lin) * x2 + base == 0).collect(),
                };
                for x2 in roots {
                    if !lattice.contains(2, x2) {
                        continue;
                    }
                    let v = w.eval([x0 as f64 / s, x1 as f64 / s, x2 as f64 / s]);
                    if v > 0.0 {
                        weights.push(v);
                    }
                }
            }
            (pairwise_sum(&weights), weights.len() as u64)
        })
        .collect();
    let sums: Vec<f64> = slices.iter().map(|s| s.0).collect();
    Ok(EnumerationResult {
        n_big: inst.n_big(),
        gamma: pairwise_sum(&sums),
        raw_count: slices.iter().map(|s| s.1).sum(),
        seconds: start.elapsed().as_secs_f64(),
        strategy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub q_max: u64,
    pub c_max: usize,
    pub quad: QuadratureSpec,
    /// allowed discarded mass, absolute
    pub budget: f64,
    /// retain every (q, c) term in the expansion
    pub keep_terms: bool,
}

impl Truncation {
    /// q_max = ⌈1.1·(kernel support)·Q⌉, c_max = 32, budget 10⁻³·√N.
    pub fn default_for(inst: &ProblemInstance) -> Self {
        let support = DeltaKernel::support_bound(inst.weight.level_spread(&inst.form, inst.m0));
        Self {
            q_max: (1.1 * support * inst.q_param()).ceil() as u64,
            c_max: DEFAULT_C_MAX,
            quad: QuadratureSpec::default(),
            budget: 1e-3 * inst.sqrt_n(),
            keep_terms: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoissonTerm {
    pub q: u64,
    pub c: [i64; 3],
    pub class: CClass,
    /// C_Q·Q⁻²·(qL)⁻³·S̃_q(c)·Ĩ_q(c)
    pub value: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QSummary {
    pub q: u64,
    pub r: f64,
    pub zero: Complex64,
    pub exceptional: Complex64,
    pub ordinary: Complex64,
    pub total: Complex64,
    /// part of the total from c_max/2 < |c|∞ ≤ c_max
    pub outer: Complex64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaExpansion {
    pub q_param: f64,
    pub c_q: f64,
    pub q_max: u64,
    pub c_max: usize,
    /// empty unless requested through [`Truncation::keep_terms`]
    #[serde(skip)]
    pub terms: Vec<PoissonTerm>,
    pub per_q: Vec<QSummary>,
    pub zero: Complex64,
    pub exceptional: Complex64,
    pub ordinary: Complex64,
    pub total: Complex64,
    /// Σ_q |outer|, the change from halving c_max
    pub tail_estimate: f64,
    pub budget: f64,
    pub budget_exceeded: bool,
}

impl DeltaExpansion {
    pub fn imaginary_within_budget(&self) -> bool {
        self.total.im.abs() <= self.tail_estimate + self.budget
    }
}

fn c_box(c_max: usize) -> impl Iterator<Item = [i64; 3]> {
    let cm = c_max as i64;
    (-cm..=cm).flat_map(move |a| (-cm..=cm).flat_map(move |b| (-cm..=cm).map(move |c| [a, b, c])))
}

/// S̃_q(c) for every c in [−C, C]³ in lexicographic order, routed through
/// the q₁/q₂ split when qL exceeds [`DIRECT_MODULUS`].
pub fn s_tilde_box(inst: &ProblemInstance, q: u64, c_max: usize) -> Result<Vec<Complex64>> {
    let lookup = |table: &[Complex64], m: u64, c: [i64; 3]| {
        let i = c.map(|x| reduce(x as i128, m) as usize);
        let m = m as usize;
        table[(i[0] * m + i[1]) * m + i[2]]
    };
    let modulus = q * inst.l();
    if modulus <= DIRECT_MODULUS {
        let table = s_tilde_table(inst, q)?;
        return Ok(c_box(c_max).map(|c| lookup(&table, modulus, c)).collect());
    }
    let (q1, q2) = crt_split(inst, q);
    let s2 = s2_table(inst, q1, q2)?;
    let m2 = q2 * inst.l();
    let closed = q1 % 2 == 1 && gcd_i128(q1 as i128, inst.target()) == 1;
    if closed {
        c_box(c_max)
            .map(|c| Ok(lemma21_eval(inst, q1, q2, c.map(|x| x as i128))?.value * lookup(&s2, m2, c)))
            .collect()
    } else {
        let s1 = s1_table(inst, q1, q2)?;
        Ok(c_box(c_max).map(|c| lookup(&s1, q1, c) * lookup(&s2, m2, c)).collect())
    }
}

fn q_terms(
    inst: &ProblemInstance,
    kernel: &DeltaKernel,
    trunc: &Truncation,
    classes: &[CClass],
    c_q: f64,
    q: u64,
) -> Result<(Vec<PoissonTerm>, QSummary)> {
    let big_q = inst.q_param();
    let r = q as f64 / big_q;
    let l = inst.l();
    let osc = OscTransform::compute(&inst.form, inst.m0, &inst.weight, kernel, r, l, trunc.c_max, &trunc.quad)?;
    let sums = s_tilde_box(inst, q, trunc.c_max)?;
    // C_Q·Q⁻²·(qL)⁻³·(√N/L)³ = C_Q·Q/(qL)³
    let pref = c_q * big_q / ((q * l) as f64).powi(3);
    let phase_mod = q * l * l;
    let lam = inst.lambda_n();
    let cm = trunc.c_max as i64;
    let mut kept = Vec::new();
    let mut parts: [Vec<Complex64>; 3] = Default::default();
    let mut outer = Vec::new();
    for (idx, c) in c_box(trunc.c_max).enumerate() {
        let dot: i128 = (0..3).map(|i| c[i] as i128 * lam[i]).sum();
        let phase = e(reduce(dot, phase_mod) as f64 / phase_mod as f64);
        let value = sums[idx] * phase * osc.values[idx] * pref;
        if c[0].abs().max(c[1].abs()).max(c[2].abs()) * 2 > cm {
            outer.push(value);
        }
        let class = classes[idx];
        let slot = match class {
            CClass::Zero => 0,
            CClass::ExceptionalTypeI | CClass::ExceptionalTypeII => 1,
            CClass::Ordinary => 2,
        };
        parts[slot].push(value);
        if trunc.keep_terms {
            kept.push(PoissonTerm { q, c, class, value });
        }
    }
    let [zero, exceptional, ordinary] = parts.map(|v| pairwise_sum_complex(&v));
    let summary = QSummary {
        q,
        r,
        zero,
        exceptional,
        ordinary,
        total: zero + exceptional + ordinary,
        outer: pairwise_sum_complex(&outer),
    };
    Ok((kept, summary))
}

/// C_Q·Q⁻² Σ_{q ≤ q_max} Σ_{|c|∞ ≤ c_max} (qL)⁻³·S̃_q(c)·Ĩ_q(c) with the
/// exact C_Q = Q/Σω(q/Q).
pub fn poisson_rhs(inst: &ProblemInstance, trunc: &Truncation) -> Result<DeltaExpansion> {
    let big_q = inst.q_param();
    let kernel = DeltaKernel::new(big_q)?;
    let y_max = inst.weight.level_spread(&inst.form, inst.m0);
    let support = DeltaKernel::support_bound(y_max);
    let need = (support * big_q).ceil() as u64;
    if trunc.q_max < need {
        return Err(Error::Precondition(format!("q_max = {} below support·Q = {need}", trunc.q_max)));
    }
    let c_q = kernel.c_q_exact();
    let classes: Vec<CClass> =
        c_box(trunc.c_max).map(|c| classify_c(&inst.form, inst.m0, c.map(|x| x as i128))).collect();
    // h(q/Q, ·) vanishes on the level range beyond the support bound
    let qs: Vec<u64> = (1..=trunc.q_max.min(need)).collect();
    let per_q: Vec<(Vec<PoissonTerm>, QSummary)> =
        qs.par_iter().map(|&q| q_terms(inst, &kernel, trunc, &classes, c_q, q)).collect::<Result<_>>()?;
    let mut terms = Vec::new();
    let mut summaries = Vec::new();
    for (t, s) in per_q {
        terms.extend(t);
        summaries.push(s);
    }
    let part = |pick: fn(&QSummary) -> Complex64| {
        let v: Vec<Complex64> = summaries.iter().map(pick).collect();
        pairwise_sum_complex(&v)
    };
    let zero = part(|s| s.zero);
    let exceptional = part(|s| s.exceptional);
    let ordinary = part(|s| s.ordinary);
    let tail_estimate = summaries.iter().map(|s| s.outer.norm()).sum::<f64>();
    Ok(DeltaExpansion {
        q_param: big_q,
        c_q,
        q_max: trunc.q_max,
        c_max: trunc.c_max,
        terms,
        per_q: summaries,
        zero,
        exceptional,
        ordinary,
        total: zero + exceptional + ordinary,
        tail_estimate,
        budget: trunc.budget,
        budget_exceeded: tail_estimate > trunc.budget,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub label: &'static str,
    /// constant multiplying the N-dependence of the main term
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HPrediction {
    pub h: u32,
    pub n_big: i128,
    pub sqrt_n: f64,
    /// one predicted main term per candidate
    pub main: Vec<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondaryEstimate {
    pub candidate: &'static str,
    /// (Γ_w − main)/√N per h
    pub residuals: Vec<f64>,
    pub max_abs: f64,
    /// least-squares slope of the residuals against h
    pub trend: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictionReport {
    pub instance: ProblemInstance,
    pub singular_integral: SingularIntegral,
    pub series: f64,
    pub series_drift: f64,
    pub obstructed: bool,
    pub square: bool,
    pub l_one: Option<f64>,
    pub candidates: Vec<Candidate>,
    pub rows: Vec<HPrediction>,
    pub secondary: Vec<SecondaryEstimate>,
    /// candidate with the smallest max |residual|
    pub tracked: Option<&'static str>,
    pub inputs: Vec<(String, String)>,
}

impl PredictionReport {
    pub fn main_for(&self, h: u32) -> Option<&HPrediction> {
        self.rows.iter().find(|r| r.h == h)
    }
}

/// The main-term shape N ↦ main term / constant.
pub fn main_shape(square: bool, sqrt_n: f64) -> f64 {
    if square {
        sqrt_n * sqrt_n.ln()
    } else {
        sqrt_n
    }
}

/// Ĩ(w)·𝔖̃·√N·log√N in the square case; in the non-square case both
/// √N·Ĩ(w)·𝔖̃ and √N·Ĩ(w)·𝔖̃·L(1, ψ₀).
pub fn predict_main(inst: &ProblemInstance, hs: &[u32], p_max: u64) -> Result<PredictionReport> {
    let si = singular_integral(&inst.form, inst.m0, &inst.weight)?;
    let series: SingularSeries = singular_series(inst, p_max)?;
    let square = series.square;
    let obstructed = series.obstructed();
    let base = si.value * series.value;
    let (l_one, candidates) = if square {
        (None, vec![Candidate { label: "I*S", constant: base }])
    } else {
        let l1 = l_one_psi0(&inst.form, inst.m0, 1e-12)?;
        (Some(l1), vec![Candidate { label: "I*S", constant: base }, Candidate { label: "I*S*L1", constant: base * l1 }])
    };
    let mut rows = Vec::new();
    for &h in hs {
        let at = inst.with_h(h)?;
        let shape = main_shape(square, at.sqrt_n());
        let main = candidates.iter().map(|c| if obstructed { 0.0 } else { c.constant * shape }).collect();
        rows.push(HPrediction { h, n_big: at.n_big(), sqrt_n: at.sqrt_n(), main, gamma: None });
    }
    Ok(PredictionReport {
        instance: *inst,
        singular_integral: si,
        series: series.value,
        series_drift: series.drift,
        obstructed,
        square,
        l_one,
        candidates,
        rows,
        secondary: Vec::new(),
        tracked: None,
        inputs: vec![("p_max".into(), p_max.to_string())],
    })
}

/// Residuals (Γ_w − main)/√N for one candidate over h; needs three or more
/// points.
pub fn extract_secondary(candidate: &'static str, hs: &[u32], sqrt_n: &[f64], gamma: &[f64], main: &[f64]) -> Result<SecondaryEstimate> {
    let n = hs.len();
    if n < 3 || sqrt_n.len() != n || gamma.len() != n || main.len() != n {
        return Err(Error::Precondition("need three or more aligned values of h".into()));
    }
    let residuals: Vec<f64> = (0..n).map(|i| (gamma[i] - main[i]) / sqrt_n[i]).collect();
    let max_abs = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let hf: Vec<f64> = hs.iter().map(|&h| h as f64).collect();
    let mh = hf.iter().sum::<f64>() / n as f64;
    let mr = residuals.iter().sum::<f64>() / n as f64;
    let num: f64 = (0..n).map(|i| (hf[i] - mh) * (residuals[i] - mr)).sum();
    let den: f64 = hf.iter().map(|h| (h - mh) * (h - mh)).sum();
    Ok(SecondaryEstimate { candidate, residuals, max_abs, trend: num / den })
}

/// predict_main plus enumeration at every h, residuals per candidate, and
/// the candidate the enumeration tracks.
pub fn compare(inst: &ProblemInstance, hs: &[u32], p_max: u64) -> Result<PredictionReport> {
    let mut report = predict_main(inst, hs, p_max)?;
    for row in report.rows.iter_mut() {
        row.gamma = Some(enumerate_gamma(&inst.with_h(row.h)?)?.gamma);
    }
    if hs.len() >= 3 {
        let sq: Vec<f64> = report.rows.iter().map(|r| r.sqrt_n).collect();
        let gm: Vec<f64> = report.rows.iter().map(|r| r.gamma.unwrap_or(0.0)).collect();
        for (i, cand) in report.candidates.iter().enumerate() {
            let main: Vec<f64> = report.rows.iter().map(|r| r.main[i]).collect();
            report.secondary.push(extract_secondary(cand.label, hs, &sq, &gm, &main)?);
        }
        report.tracked = report
            .secondary
            .iter()
            .min_by(|a, b| a.max_abs.total_cmp(&b.max_abs))
            .map(|s| s.candidate);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::WeightSpec;
    use crate::instance::CongruenceDatum;
    use crate::qform::QForm;

    fn sphere(l: u64, lambda: [i64; 3], weight: WeightSpec) -> ProblemInstance {
        let f = QForm::diagonal(1, 1, 1).unwrap();
        let cong = CongruenceDatum::new(&f, 1, l, lambda).unwrap();
        // p₀ = 3, h = 0 gives N = 1
        ProblemInstance::new(f, 1, 3, 0, cong, weight).unwrap()
    }

    #[test]
    fn six_points_on_unit_sphere() {
        let w = WeightSpec::ball([0.0; 3], 1.5);
        let res = enumerate_gamma(&sphere(1, [0, 0, 0], w)).unwrap();
        assert_eq!(res.raw_count, 6);
        let expect = 6.0 * w.eval([1.0, 0.0, 0.0]);
        assert!((res.gamma - expect).abs() < 1e-14);
        let cong = enumerate_gamma(&sphere(2, [1, 0, 0], w)).unwrap();
        assert_eq!(cong.raw_count, 2);
        assert!((cong.gamma - 2.0 * w.eval([1.0, 0.0, 0.0])).abs() < 1e-15);
    }

    #[test]
    fn away_from_level_set() {
        let w = WeightSpec::ball([0.0, 0.0, 5.0], 1.0);
        let f = QForm::diagonal(1, 1, -1).unwrap();
        let inst = ProblemInstance::new(f, 1, 5, 2, CongruenceDatum::trivial(), w).unwrap();
        let res = enumerate_gamma(&inst).unwrap();
        assert_eq!((res.gamma, res.raw_count), (0.0, 0));
    }

    #[test]
    fn strategies_agree() {
        let w = WeightSpec::ball([2f64.sqrt(), 0.0, 1.0], 1.0);
        for coeffs in [[1, 1, -1, 0, 0, 0], [1, 2, -3, 2, 0, 4], [1, 1, 0, 0, 2, 0]] {
            let f = QForm::new(coeffs).unwrap();
            for h in 0..=2 {
                let inst = ProblemInstance::new(f, 1, 3, h, CongruenceDatum::trivial(), w).unwrap();
                let a = enumerate_gamma_with(&inst, Strategy::Sliced).unwrap();
                let b = enumerate_gamma_with(&inst, Strategy::TripleLoop).unwrap();
                assert_eq!((a.gamma, a.raw_count), (b.gamma, b.raw_count), "{coeffs:?} h={h}");
            }
        }
    }

    #[test]
    fn box_bound() {
        let w = WeightSpec::ball([2f64.sqrt(), 0.0, 1.0], 1.0);
        let f = QForm::diagonal(1, 1, -1).unwrap();
        let inst = ProblemInstance::new(f, 1, 101, 3, CongruenceDatum::trivial(), w).unwrap();
        assert!(matches!(enumerate_gamma(&inst), Err(Error::BoundExceeded { .. })));
    }

    #[test]
    fn secondary_fixture() {
        let hs = [1, 2, 3, 4];
        let sq: Vec<f64> = hs.iter().map(|&h| 3f64.powi(h as i32)).collect();
        let main: Vec<f64> = sq.iter().map(|s| 1.3 * s * s.ln()).collect();
        let gamma: Vec<f64> = main.iter().zip(&sq).map(|(m, s)| m + 0.7 * s).collect();
        let est = extract_secondary("I*S", &hs, &sq, &gamma, &main).unwrap();
        for r in &est.residuals {
            assert!((r - 0.7).abs() < 1e-12);
        }
        assert!(est.trend.abs() < 1e-12);
        assert!(extract_secondary("I*S", &hs[..2], &sq[..2], &gamma[..2], &main[..2]).is_err());
    }

    #[test]
    fn main_term_scaling() {
        // √N log √N moves by p₀·(h+1)/h between h and h + 1
        let p0 = 3f64;
        for h in 1..6 {
            let a = main_shape(true, p0.powi(h));
            let b = main_shape(true, p0.powi(h + 1));
            assert!((b / a - p0 * (h + 1) as f64 / h as f64).abs() < 1e-12);
        }
    }
}
