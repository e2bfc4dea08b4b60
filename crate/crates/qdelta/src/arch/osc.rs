//! Oscillatory integrals Ĩ_r(w; b) = ∫ w(t)·h(r, F(t) − m₀)·e(−b·t/r) dt.

use num_complex::Complex64;
use serde::Serialize;

use super::kernel::DeltaKernel;
use super::weight::{mollifier, mollifier_tabulated, Profile, WeightSpec};
use crate::error::{Error, Result};
use crate::numerics::{e, pairwise_sum_complex};
use crate::qform::QForm;

/// Resolution controls for the tensor trapezoid rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSpec {
    /// grid points per weight radius, at least
    pub points_per_radius: usize,
    /// grid points per oscillation period of the fastest retained frequency
    pub points_per_period: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { points_per_radius: 40, points_per_period: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

/// h(r, y) tabulated in y for fixed r with 4-point interpolation; h is even
/// in y.
#[derive(Debug, Clone)]
pub struct HProfile {
    pub r: f64,
    step: f64,
    values: Vec<f64>,
}

impl HProfile {
    const MAX_POINTS: usize = 4_000_000;

    pub fn new(kernel: &DeltaKernel, r: f64, y_max: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::Precondition(format!("r = {r} must be positive")));
        }
        let y_max = y_max.abs().max(r);
        let mut step = r / 4000.0;
        let mut n = (y_max / step).ceil() as usize + 4;
        if n > Self::MAX_POINTS {
            n = Self::MAX_POINTS;
            step = y_max / (n - 4) as f64;
        }
        let values = (0..n).map(|i| kernel.h_unchecked(r, (i as f64 - 1.0) * step)).collect();
        Ok(Self { r, step, values })
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        let u = y.abs() / self.step + 1.0;
        let i = u.floor() as usize;
        if i + 2 >= self.values.len() {
            return 0.0;
        }
        let s = u - i as f64;
        let (a, b, c, d) = (self.values[i - 1], self.values[i], self.values[i + 1], self.values[i + 2]);
        // cubic Lagrange through i−1..i+2
        let sm1 = s - 1.0;
        let sm2 = s - 2.0;
        let sp1 = s + 1.0;
        -a * s * sm1 * sm2 / 6.0 + b * sp1 * sm1 * sm2 / 2.0 - c * sp1 * s * sm2 / 2.0 + d * sp1 * s * sm1 / 6.0
    }
}

/// Samples of w(t)·h(r, F(t) − m₀) on a grid of spacing δ starting at the
/// support corner, folded modulo `fold` along every axis.
struct FoldedSamples {
    n: usize,
    fold: usize,
    delta: f64,
    lo: [f64; 3],
    data: Vec<f64>,
}

/// Index range [lo, hi) along the last axis where the weight can be nonzero.
pub(crate) fn row_range(weight: &WeightSpec, t0: f64, t1: f64, lo2: f64, delta: f64, k: usize) -> (usize, usize) {
    let c = weight.center;
    let half = match weight.profile {
        Profile::Ball => {
            let rem = weight.radius * weight.radius - (t0 - c[0]).powi(2) - (t1 - c[1]).powi(2);
            if rem <= 0.0 {
                return (0, 0);
            }
            rem.sqrt()
        }
        Profile::Box => weight.radius,
    };
    let lo_k = ((c[2] - half - lo2) / delta).floor().max(0.0) as usize;
    let hi_k = ((((c[2] + half - lo2) / delta).ceil()) as usize + 1).min(k);
    (lo_k.min(hi_k), hi_k)
}

fn sample_folded(weight: &WeightSpec, form: &QForm, m0: i64, h: &HProfile, delta: f64, fold: usize) -> FoldedSamples {
    let (lo, _) = weight.bounding_box();
    let k = (2.0 * weight.radius / delta).ceil() as usize + 1;
    let n = k.min(fold);
    let mut data = vec![0.0; n * n * n];
    let [a11, a22, a33, a12, a13, a23] = form.coeffs().map(|c| c as f64);
    let inv = 1.0 / weight.radius;
    let u2_axis: Vec<f64> = (0..k).map(|kk| (lo[2] + delta * kk as f64 - weight.center[2]) * inv).collect();
    // the box profile factorizes, so its last-axis factor is tabulated once
    let box_axis: Vec<f64> = u2_axis.iter().map(|u| mollifier(u * u)).collect();
    for i in 0..k {
        let t0 = lo[0] + delta * i as f64;
        let u0 = (t0 - weight.center[0]) * inv;
        for j in 0..k {
            let t1 = lo[1] + delta * j as f64;
            let u1 = (t1 - weight.center[1]) * inv;
            // F along the row: a33 t2² + lin·t2 + base
            let base = a11 * t0 * t0 + a22 * t1 * t1 + a12 * t0 * t1 - m0 as f64;
            let lin = a13 * t0 + a23 * t1;
            let (k_lo, k_hi) = row_range(weight, t0, t1, lo[2], delta, k);
            if k_lo >= k_hi {
                continue;
            }
            let row = ((i % fold) * n + (j % fold)) * n;
            let partial = u0 * u0 + u1 * u1;
            let box_row = mollifier(u0 * u0) * mollifier(u1 * u1);
            let mut slot = k_lo % fold;
            for kk in k_lo..k_hi {
                let u2 = u2_axis[kk];
                let wv = match weight.profile {
                    Profile::Ball => mollifier_tabulated(partial + u2 * u2),
                    Profile::Box => box_row * box_axis[kk],
                };
                if wv != 0.0 {
                    let t2 = lo[2] + delta * kk as f64;
                    let f = (a33 * t2 + lin) * t2 + base;
                    data[row + slot] += wv * h.eval(f);
                }
                slot += 1;
                if slot == fold {
                    slot = 0;
                }
            }
        }
    }
    FoldedSamples { n, fold, delta, lo, data }
}

impl FoldedSamples {
    /// δ³·Σ_k data[k]·e(−c·k/fold) for c in [−C, C]³, by three separable
    /// passes; output index ((c1+C)·w + c2+C)·w + c3+C with w = 2C + 1.
    fn transform(&self, c_max: usize) -> Vec<Complex64> {
        let n = self.n;
        let w = 2 * c_max + 1;
        let tw: Vec<Complex64> = (0..w)
            .flat_map(|ci| {
                let c = ci as f64 - c_max as f64;
                (0..n).map(move |k| e(-c * k as f64 / self.fold as f64))
            })
            .collect();
        // pass over axis 2: [i][j][c3]
        let mut a = vec![Complex64::new(0.0, 0.0); n * n * w];
        for ij in 0..n * n {
            let row = &self.data[ij * n..(ij + 1) * n];
            if row.iter().all(|&v| v == 0.0) {
                continue;
            }
            for c3 in 0..w {
                let t = &tw[c3 * n..(c3 + 1) * n];
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    s += t[k] * row[k];
                }
                a[ij * w + c3] = s;
            }
        }
        // axis 1: [i][c2][c3]
        let mut b = vec![Complex64::new(0.0, 0.0); n * w * w];
        for i in 0..n {
            for c2 in 0..w {
                let t = &tw[c2 * n..(c2 + 1) * n];
                let out = &mut b[(i * w + c2) * w..(i * w + c2 + 1) * w];
                for j in 0..n {
                    let src = &a[(i * n + j) * w..(i * n + j + 1) * w];
                    let f = t[j];
                    for c3 in 0..w {
                        out[c3] += f * src[c3];
                    }
                }
            }
        }
        drop(a);
        // axis 0
        let mut out = vec![Complex64::new(0.0, 0.0); w * w * w];
        for c1 in 0..w {
            let t = &tw[c1 * n..(c1 + 1) * n];
            let dst = &mut out[c1 * w * w..(c1 + 1) * w * w];
            for i in 0..n {
                let src = &b[i * w * w..(i + 1) * w * w];
                let f = t[i];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += f * s;
                }
            }
        }
        let d3 = self.delta.powi(3);
        for v in out.iter_mut() {
            *v *= d3;
        }
        out
    }
}

/// Ĩ_r(w; c/L) for all c in [−C, C]³.
#[derive(Debug, Clone, Serialize)]
pub struct OscTransform {
    pub r: f64,
    pub modulus_l: u64,
    pub c_max: usize,
    #[serde(skip)]
    pub values: Vec<Complex64>,
}

impl OscTransform {
    pub fn compute(
        form: &QForm,
        m0: i64,
        weight: &WeightSpec,
        kernel: &DeltaKernel,
        r: f64,
        modulus_l: u64,
        c_max: usize,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        let y_max = weight.level_spread(form, m0);
        let h = HProfile::new(kernel, r, y_max)?;
        Self::with_profile(form, m0, weight, &h, modulus_l, c_max, quad)
    }

    pub fn with_profile(
        form: &QForm,
        m0: i64,
        weight: &WeightSpec,
        h: &HProfile,
        modulus_l: u64,
        c_max: usize,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        let period = h.r * modulus_l as f64;
        // δ = period/fold ≤ radius/points_per_radius; the fold also sets the
        // first aliased frequency fold − C
        let by_radius = (period * quad.points_per_radius as f64 / weight.radius).ceil() as usize;
        let by_freq = (quad.points_per_period * (c_max + 1) as f64).ceil() as usize;
        let fold = by_radius.max(by_freq).max(8);
        let delta = period / fold as f64;
        let samples = sample_folded(weight, form, m0, h, delta, fold);
        let mut values = samples.transform(c_max);
        let w = 2 * c_max + 1;
        let lo = samples.lo;
        for c1 in 0..w {
            for c2 in 0..w {
                for c3 in 0..w {
                    let c = [c1, c2, c3].map(|x| x as f64 - c_max as f64);
                    let phase = e(-(c[0] * lo[0] + c[1] * lo[1] + c[2] * lo[2]) / period);
                    values[(c1 * w + c2) * w + c3] *= phase;
                }
            }
        }
        Ok(Self { r: h.r, modulus_l, c_max, values })
    }

    #[inline]
    pub fn get(&self, c: [i64; 3]) -> Option<Complex64> {
        let cm = self.c_max as i64;
        if c.iter().any(|&x| x.abs() > cm) {
            return None;
        }
        let w = (2 * cm + 1) as usize;
        let idx = c.map(|x| (x + cm) as usize);
        Some(self.values[(idx[0] * w + idx[1]) * w + idx[2]])
    }

    /// max |Ĩ| over the shell |c|∞ = k.
    pub fn shell_max(&self, k: usize) -> f64 {
        let cm = self.c_max as i64;
        let k = k as i64;
        let mut worst: f64 = 0.0;
        for c1 in -cm..=cm {
            for c2 in -cm..=cm {
                for c3 in -cm..=cm {
                    if c1.abs().max(c2.abs()).max(c3.abs()) == k {
                        worst = worst.max(self.get([c1, c2, c3]).unwrap().norm());
                    }
                }
            }
        }
        worst
    }
}

/// One trapezoid pass at spacing δ.
pub fn osc_integral_fixed(form: &QForm, m0: i64, weight: &WeightSpec, h: &HProfile, b: [f64; 3], delta: f64) -> Complex64 {
    let (lo, _) = weight.bounding_box();
    let k = (2.0 * weight.radius / delta).ceil() as usize + 1;
    let r = h.r;
    let phases: Vec<Vec<Complex64>> =
        (0..3).map(|ax| (0..k).map(|i| e(-b[ax] * (lo[ax] + delta * i as f64) / r)).collect()).collect();
    let mut rows = Vec::with_capacity(k * k);
    for i in 0..k {
        let t0 = lo[0] + delta * i as f64;
        for j in 0..k {
            let t1 = lo[1] + delta * j as f64;
            let mut s = Complex64::new(0.0, 0.0);
            let (k_lo, k_hi) = row_range(weight, t0, t1, lo[2], delta, k);
            for kk in k_lo..k_hi {
                let t = [t0, t1, lo[2] + delta * kk as f64];
                let wv = weight.eval(t);
                if wv == 0.0 {
                    continue;
                }
                let f = form.value_f64(t) - m0 as f64;
                s += phases[2][kk] * (wv * h.eval(f));
            }
            if s != Complex64::new(0.0, 0.0) {
                rows.push(s * phases[0][i] * phases[1][j]);
            }
        }
    }
    pairwise_sum_complex(&rows) * delta.powi(3)
}

/// Ĩ_r(w; b) by the tensor trapezoid rule, refined until two successive
/// grids agree; the difference of the last two is the reported error.
pub fn osc_integral(
    form: &QForm,
    m0: i64,
    weight: &WeightSpec,
    kernel: &DeltaKernel,
    r: f64,
    b: [f64; 3],
    quad: &QuadratureSpec,
) -> Result<Estimate<Complex64>> {
    let y_max = weight.level_spread(form, m0);
    if r > DeltaKernel::support_bound(y_max) {
        return Ok(Estimate { value: Complex64::new(0.0, 0.0), error: 0.0 });
    }
    let h = HProfile::new(kernel, r, y_max)?;
    osc_integral_with(form, m0, weight, &h, b, quad)
}

pub fn osc_integral_with(
    form: &QForm,
    m0: i64,
    weight: &WeightSpec,
    h: &HProfile,
    b: [f64; 3],
    quad: &QuadratureSpec,
) -> Result<Estimate<Complex64>> {
    let bnorm = b.iter().map(|x| x.abs()).fold(0.0, f64::max);
    // oscillation period r/|b| per axis, and the scale of h(r, ·) across the level set
    let mut delta = weight.radius / quad.points_per_radius as f64;
    if bnorm > 0.0 {
        delta = delta.min(h.r / bnorm / quad.points_per_period.max(2.0));
    }
    let mut prev = osc_integral_fixed(form, m0, weight, h, b, delta);
    for _ in 0..4 {
        delta /= 2.0;
        let next = osc_integral_fixed(form, m0, weight, h, b, delta);
        let err = (next - prev).norm();
        if err <= 1e-6 * (1.0 + next.norm()) || 2.0 * weight.radius / delta > 400.0 {
            return Ok(Estimate { value: next, error: err });
        }
        prev = next;
    }
    Err(Error::Numerical(format!("oscillatory quadrature did not settle at r = {}", h.r)))
}
