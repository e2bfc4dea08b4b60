//! The singular integral Ĩ(w) = ∫ w(t)·δ(F(t) − m₀) dt and the r-integrals
//! attached to exceptional Poisson variables.

use num_complex::Complex64;
use serde::Serialize;

use super::kernel::DeltaKernel;
use super::osc::{osc_integral_fixed, row_range, Estimate, HProfile};
use super::weight::WeightSpec;
use crate::error::{Error, Result};
use crate::modarith::isqrt;
use crate::numerics::{e, pairwise_sum};
use crate::qform::{classify_c, CClass, QForm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularIntegral {
    /// Richardson-extrapolated Gaussian-mollifier value
    pub value: f64,
    pub error: f64,
    /// surface form ∫_{F=m₀} w dS/|∇F|
    pub coarea: f64,
    pub coarea_error: f64,
}

impl SingularIntegral {
    pub fn consistent(&self) -> bool {
        (self.value - self.coarea).abs() <= 3.0 * (self.error + self.coarea_error) + 1e-12
    }
}

fn max_gradient(form: &QForm, weight: &WeightSpec) -> f64 {
    let (lo, hi) = weight.bounding_box();
    let mut g: f64 = 0.0;
    for corner in 0..8 {
        let t = [0, 1, 2].map(|i| if corner >> i & 1 == 1 { hi[i] } else { lo[i] });
        g = g.max(form.gradient_f64(t).iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    g.max(1e-12)
}

/// ∫ w(t)·φ_ε(F(t) − m₀) dt for a normalized Gaussian φ_ε of width ε.
fn mollified(form: &QForm, m0: i64, weight: &WeightSpec, eps: f64, grad: f64) -> f64 {
    // the trapezoid error for a Gaussian of width σ at spacing δ is about exp(−2π²σ²/δ²)
    let delta = (eps / grad / 1.5).min(weight.radius / 40.0);
    let (lo, _) = weight.bounding_box();
    let k = (2.0 * weight.radius / delta).ceil() as usize + 1;
    let norm = 1.0 / (eps * (2.0 * std::f64::consts::PI).sqrt());
    let inv = 1.0 / (2.0 * eps * eps);
    let mut rows = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let mut s = 0.0;
            let (t0, t1) = (lo[0] + delta * i as f64, lo[1] + delta * j as f64);
            let (k_lo, k_hi) = row_range(weight, t0, t1, lo[2], delta, k);
            for kk in k_lo..k_hi {
                let t = [t0, t1, lo[2] + delta * kk as f64];
                let y = form.value_f64(t) - m0 as f64;
                let z = y * y * inv;
                if z > 45.0 {
                    continue;
                }
                s += weight.eval(t) * (-z).exp();
            }
            if s != 0.0 {
                rows.push(s);
            }
        }
    }
    pairwise_sum(&rows) * delta.powi(3) * norm
}

/// Richardson table over ε, ε/2, ε/4 eliminating the ε² and ε⁴ terms.
fn richardson(values: [f64; 3]) -> f64 {
    let r1 = (4.0 * values[1] - values[0]) / 3.0;
    let r2 = (4.0 * values[2] - values[1]) / 3.0;
    (16.0 * r2 - r1) / 15.0
}

/// Surface integral ∫_{F=m₀} w/|∇F| dS, split over the three coordinate
/// projections with the partition of unity gᵢ⁴/Σgⱼ⁴.
fn coarea(form: &QForm, m0: i64, weight: &WeightSpec, points: usize) -> f64 {
    let (lo, _) = weight.bounding_box();
    let delta = 2.0 * weight.radius / (points - 1) as f64;
    let c = form.coeffs().map(|v| v as f64);
    let mut parts = Vec::new();
    for axis in 0..3 {
        let (ua, va) = ((axis + 1) % 3, (axis + 2) % 3);
        for i in 0..points {
            for j in 0..points {
                let mut t = [0.0; 3];
                t[ua] = lo[ua] + delta * i as f64;
                t[va] = lo[va] + delta * j as f64;
                // F as a quadratic in t[axis]: a·s² + b·s + c0
                let (a, b, c0) = restricted_quadratic(&c, axis, t[ua], t[va], ua, va);
                let c0 = c0 - m0 as f64;
                let roots: Vec<f64> = if a == 0.0 {
                    if b == 0.0 { vec![] } else { vec![-c0 / b] }
                } else {
                    let disc = b * b - 4.0 * a * c0;
                    if disc <= 0.0 {
                        vec![]
                    } else {
                        let sq = disc.sqrt();
                        vec![(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
                    }
                };
                let mut s = 0.0;
                for root in roots {
                    t[axis] = root;
                    let wv = weight.eval(t);
                    if wv == 0.0 {
                        continue;
                    }
                    let g = form.gradient_f64(t);
                    let g4: f64 = g.iter().map(|x| x.powi(4)).sum();
                    s += wv * g[axis].abs().powi(3) / g4;
                }
                if s != 0.0 {
                    parts.push(s);
                }
            }
        }
    }
    pairwise_sum(&parts) * delta * delta
}

fn restricted_quadratic(c: &[f64; 6], axis: usize, u: f64, v: f64, ua: usize, va: usize) -> (f64, f64, f64) {
    let [a11, a22, a33, a12, a13, a23] = *c;
    let diag = [a11, a22, a33];
    let cross = |i: usize, j: usize| -> f64 {
        match (i.min(j), i.max(j)) {
            (0, 1) => a12,
            (0, 2) => a13,
            _ => a23,
        }
    };
    let a = diag[axis];
    let b = cross(axis, ua) * u + cross(axis, va) * v;
    let c0 = diag[ua] * u * u + diag[va] * v * v + cross(ua, va) * u * v;
    (a, b, c0)
}

/// Ĩ(w) by the Gaussian-mollifier route with ε = 0.2, 0.1, 0.05 (relative to
/// the weight radius), checked against the surface form.
pub fn singular_integral(form: &QForm, m0: i64, weight: &WeightSpec) -> Result<SingularIntegral> {
    if !weight.meets_level_set(form, m0, 41) {
        return Ok(SingularIntegral { value: 0.0, error: 0.0, coarea: 0.0, coarea_error: 0.0 });
    }
    let grad = max_gradient(form, weight);
    let base = 0.2 * weight.radius;
    let eps: Vec<f64> = (0..4).map(|i| base / 2f64.powi(i)).collect();
    let vals: Vec<f64> = eps.iter().map(|&e| mollified(form, m0, weight, e, grad)).collect();
    let coarse = richardson([vals[0], vals[1], vals[2]]);
    let fine = richardson([vals[1], vals[2], vals[3]]);
    let error = (fine - coarse).abs();
    let c1 = coarea(form, m0, weight, 801);
    let c2 = coarea(form, m0, weight, 1601);
    let result = SingularIntegral { value: fine, error, coarea: c2, coarea_error: (c2 - c1).abs() };
    if error > 1e-3 * fine.abs().max(1e-12) {
        return Err(Error::Numerical(format!("mollifier extrapolation did not settle: {coarse} vs {fine}")));
    }
    Ok(result)
}

/// 𝒩(c) = √(m₀Δ_F F*(c)) for exceptional c.
pub fn norm_n(form: &QForm, m0: i64, c: [i128; 3]) -> Result<u128> {
    let rad = m0 as i128 * form.determinant() * form.dual_value(c);
    if rad < 0 {
        return Err(Error::Precondition(format!("m0·Δ·F*(c) = {rad} is negative")));
    }
    let root = isqrt(rad as u128);
    if root * root != rad as u128 {
        return Err(Error::Precondition(format!("m0·Δ·F*(c) = {rad} is not a square")));
    }
    Ok(root)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JIntegrals {
    pub class: CClass,
    /// J̃_u(c), Type I only
    pub twisted: Option<Estimate<Complex64>>,
    /// 𝒥(c), Type II only
    pub untwisted: Option<Estimate<Complex64>>,
    /// bound on ∫_0^{r_min} from |Ĩ_r| ≤ C·(r/|b|)^{0.45}
    pub tail_bound: f64,
}

/// Eight-point Gauss–Legendre nodes and weights on [−1, 1].
const GL_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RGrid {
    pub r_min: f64,
    /// Gauss–Legendre panels in log r
    pub panels: usize,
    /// grid points per weight radius for each Ĩ_r
    pub points_per_radius: usize,
}

/// J̃_u(c) = ∫ e(u²L³𝒩(c)/(Δ_F r))·Ĩ_r(w, c/L) dr/r and
/// 𝒥(c) = ∫ Ĩ_r(w, c/L) dr/r over r ∈ [r_min, sup].
#[allow(clippy::too_many_arguments)]
pub fn j_integrals(
    form: &QForm,
    m0: i64,
    weight: &WeightSpec,
    kernel: &DeltaKernel,
    modulus_l: u64,
    c: [i128; 3],
    u: i128,
    grid: &RGrid,
) -> Result<JIntegrals> {
    let class = classify_c(form, m0, c);
    let twist = match class {
        CClass::ExceptionalTypeI => Some(norm_n(form, m0, c)?),
        CClass::ExceptionalTypeII => None,
        _ => return Err(Error::Precondition(format!("c = {c:?} is not exceptional"))),
    };
    if !(grid.r_min > 0.0) {
        return Err(Error::Precondition("r_min must be positive".into()));
    }
    let b = c.map(|x| x as f64 / modulus_l as f64);
    let y_max = weight.level_spread(form, m0);
    let r_sup = DeltaKernel::support_bound(y_max);
    let delta = weight.radius / grid.points_per_radius as f64;
    let (s_lo, s_hi) = (grid.r_min.ln(), r_sup.ln());
    let width = (s_hi - s_lo) / grid.panels as f64;
    let bnorm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let freq = twist.map(|n| (u * u) as f64 * (modulus_l as f64).powi(3) * n as f64 / form.determinant() as f64);
    let mut twisted = Vec::new();
    let mut plain = Vec::new();
    let mut harder: f64 = 0.0;
    for panel in 0..grid.panels {
        let mid = s_lo + (panel as f64 + 0.5) * width;
        for (node, wt) in GL_NODES.iter().flat_map(|&x| [x, -x]).zip(GL_WEIGHTS.iter().flat_map(|&w| [w, w])) {
            let s = mid + 0.5 * width * node;
            let r = s.exp();
            let h = HProfile::new(kernel, r, y_max)?;
            // resolve the oscillation e(−b·t/r) with at least 8 points per period
            let d = if bnorm > 0.0 { delta.min(r / bnorm / 8.0) } else { delta };
            let i_r = osc_integral_fixed(form, m0, weight, &h, b, d);
            if bnorm > 0.0 {
                harder = harder.max(i_r.norm() * (bnorm / r).powf(0.45));
            }
            // dr/r = ds
            let scale = 0.5 * width * wt;
            plain.push(i_r * scale);
            if let Some(f) = freq {
                twisted.push(e(f / r) * i_r * scale);
            }
        }
    }
    let sum = |v: &[Complex64]| crate::numerics::pairwise_sum_complex(v);
    let tail_bound = if bnorm > 0.0 { harder * (grid.r_min / bnorm).powf(0.45) / 0.45 } else { f64::INFINITY };
    let est = |v: Complex64| Estimate { value: v, error: tail_bound };
    Ok(JIntegrals {
        class,
        twisted: freq.map(|_| est(sum(&twisted))),
        untwisted: (class == CClass::ExceptionalTypeII).then(|| est(sum(&plain))),
        tail_bound,
    })
}
