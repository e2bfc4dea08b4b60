use std::sync::OnceLock;

use serde::Serialize;

use crate::qform::QForm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Profile {
    /// exp(−1/(1−ρ²)) with ρ = |t − center| / radius.
    Ball,
    /// ∏ᵢ exp(−1/(1−uᵢ²)) with uᵢ = (tᵢ − centerᵢ) / radius.
    Box,
}

/// Smooth compactly supported weight on ℝ³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightSpec {
    pub center: [f64; 3],
    pub radius: f64,
    pub profile: Profile,
}

#[inline]
pub fn mollifier(u2: f64) -> f64 {
    if u2 < 1.0 {
        (-1.0 / (1.0 - u2)).exp()
    } else {
        0.0
    }
}

const TABLE_POINTS: usize = 1 << 17;

/// [`mollifier`] from a table on [0, 1] with cubic interpolation.
#[inline]
pub fn mollifier_tabulated(u2: f64) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    if u2 >= 1.0 {
        return 0.0;
    }
    let table = TABLE.get_or_init(|| {
        // one guard point on each side
        (0..TABLE_POINTS + 4).map(|i| mollifier((i as f64 - 1.0) / TABLE_POINTS as f64).max(0.0)).collect()
    });
    let u = u2 * TABLE_POINTS as f64 + 1.0;
    let i = u as usize;
    let s = u - i as f64;
    let (a, b, c, d) = (table[i - 1], table[i], table[i + 1], table[i + 2]);
    let sm1 = s - 1.0;
    let sm2 = s - 2.0;
    let sp1 = s + 1.0;
    -a * s * sm1 * sm2 / 6.0 + b * sp1 * sm1 * sm2 / 2.0 - c * sp1 * s * sm2 / 2.0 + d * sp1 * s * sm1 / 6.0
}

impl WeightSpec {
    pub fn ball(center: [f64; 3], radius: f64) -> Self {
        assert!(radius > 0.0);
        Self { center, radius, profile: Profile::Ball }
    }

    pub fn product(center: [f64; 3], radius: f64) -> Self {
        assert!(radius > 0.0);
        Self { center, radius, profile: Profile::Box }
    }

    #[inline]
    pub fn eval(&self, t: [f64; 3]) -> f64 {
        let inv = 1.0 / self.radius;
        let u = [
            (t[0] - self.center[0]) * inv,
            (t[1] - self.center[1]) * inv,
            (t[2] - self.center[2]) * inv,
        ];
        match self.profile {
            Profile::Ball => mollifier(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]),
            Profile::Box => mollifier(u[0] * u[0]) * mollifier(u[1] * u[1]) * mollifier(u[2] * u[2]),
        }
    }

    pub fn sup(&self) -> f64 {
        match self.profile {
            Profile::Ball => (-1.0f64).exp(),
            Profile::Box => (-3.0f64).exp(),
        }
    }

    /// Axis-aligned box containing the support.
    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let lo = self.center.map(|c| c - self.radius);
        let hi = self.center.map(|c| c + self.radius);
        (lo, hi)
    }

    /// Whether F − m₀ changes sign on the open support, which forces the
    /// level set F = m₀ through its interior.
    pub fn meets_level_set(&self, form: &QForm, m0: i64, samples_per_axis: usize) -> bool {
        let (mut pos, mut neg) = (false, false);
        let n = samples_per_axis.max(3);
        let (lo, _) = self.bounding_box();
        let step = 2.0 * self.radius / (n - 1) as f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let t = [lo[0] + i as f64 * step, lo[1] + j as f64 * step, lo[2] + k as f64 * step];
                    if self.eval(t) <= 0.0 {
                        continue;
                    }
                    let v = form.value_f64(t) - m0 as f64;
                    pos |= v > 0.0;
                    neg |= v < 0.0;
                    if v == 0.0 || (pos && neg) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// max |F(t) − m₀| over the support, estimated on a grid and padded.
    pub fn level_spread(&self, form: &QForm, m0: i64) -> f64 {
        let n = 41;
        let (lo, _) = self.bounding_box();
        let step = 2.0 * self.radius / (n - 1) as f64;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let t = [lo[0] + i as f64 * step, lo[1] + j as f64 * step, lo[2] + k as f64 * step];
                    worst = worst.max((form.value_f64(t) - m0 as f64).abs());
                }
            }
        }
        worst * 1.02
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values() {
        let w = WeightSpec::ball([1.0, 2.0, 3.0], 2.0);
        assert_eq!(w.eval([1.0, 2.0, 3.0]), w.sup());
        assert_eq!(w.eval([3.0, 2.0, 3.0]), 0.0);
        assert_eq!(w.eval([1.0, 2.0, 5.5]), 0.0);
        // half radius: ρ² = 1/4, exp(−4/3)
        let half = w.eval([1.0, 3.0, 3.0]);
        assert!((half - (-4.0f64 / 3.0).exp()).abs() < 1e-15);
        let b = WeightSpec::product([0.0; 3], 1.0);
        let v = b.eval([0.5, 0.0, 0.0]);
        assert!((v - (-4.0f64 / 3.0).exp() * (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(b.eval([0.9, 0.9, 1.0]), 0.0);
    }

    #[test]
    fn tabulated_mollifier() {
        for i in 0..=100_000 {
            let x = i as f64 / 100_000.0 * 1.01;
            assert!((mollifier_tabulated(x) - mollifier(x)).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn level_set_detection() {
        let f = QForm::diagonal(1, 1, -1).unwrap();
        assert!(WeightSpec::ball([2f64.sqrt(), 0.0, 1.0], 1.0).meets_level_set(&f, 1, 11));
        assert!(!WeightSpec::ball([0.0, 0.0, 5.0], 1.0).meets_level_set(&f, 1, 11));
    }
}
