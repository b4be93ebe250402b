//! Pure math kernels: ranking losses, convex surrogate losses, and the
//! co-occurrence weight function.
//!
//! The ranking loss rho is monotonically increasing and concave; its
//! derivative weights each stochastic update, so both value and gradient
//! are returned together. The surrogate loss ell upper-bounds the 0-1 step
//! function, which makes the summed surrogate an upper bound on the rank.

use crate::error::{Error, Result};
use crate::model::{dot, EmbeddingModel};

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoKind {
    /// rho(x) = x; plain pairwise ranking, no attention effect.
    Identity,
    /// rho(x) = log2(1 + x).
    Log,
    /// rho(x) = 1 - 1/log2(2 + x); negative DCG.
    NegDcg,
    /// rho(x) = (x^(1-t) - 1) / (1 - t), t != 1.
    LogT,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoSpec {
    pub kind: RhoKind,
    /// Only used by `LogT`.
    pub t: f64,
    /// Scale hyperparameter; the rho argument is (rank_bound + beta) / alpha.
    pub alpha: f64,
    /// Offset hyperparameter.
    pub beta: f64,
}

impl Default for RhoSpec {
    fn default() -> Self {
        RhoSpec { kind: RhoKind::Log, t: 1.5, alpha: 100.0, beta: 99.0 }
    }
}

impl RhoSpec {
    /// Below this argument the log_t gradient is treated as saturated.
    pub const SATURATION_X: f64 = 1e-12;
    /// Cap applied to the log_t gradient to keep updates finite.
    pub const GRAD_CLAMP: f64 = 1e12;

    pub fn with_kind(kind: RhoKind) -> RhoSpec {
        RhoSpec { kind, ..RhoSpec::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::Config(format!("beta must be >= 0, got {}", self.beta)));
        }
        if self.kind == RhoKind::LogT && !(self.t.is_finite() && self.t > 0.0 && self.t != 1.0)
        {
            return Err(Error::Config(format!(
                "log_t requires t > 0 and t != 1, got {}",
                self.t
            )));
        }
        Ok(())
    }

    /// rho(x) and rho'(x) for x >= 0.
    ///
    /// For log_t near zero the gradient x^(-t) is unbounded; arguments below
    /// [`Self::SATURATION_X`] are evaluated at the saturation point and the
    /// gradient capped at [`Self::GRAD_CLAMP`] (callers flag this in logs).
    pub fn value_grad(&self, x: f64) -> (f64, f64) {
        debug_assert!(x >= 0.0, "rho argument must be non-negative, got {x}");
        match self.kind {
            RhoKind::Identity => (x, 1.0),
            RhoKind::Log => (x.ln_1p() / LN_2, 1.0 / ((1.0 + x) * LN_2)),
            RhoKind::NegDcg => {
                let log = (2.0 + x).ln() / LN_2;
                (1.0 - 1.0 / log, 1.0 / (log * log * (2.0 + x) * LN_2))
            }
            RhoKind::LogT => {
                let x = x.max(Self::SATURATION_X);
                let value = (x.powf(1.0 - self.t) - 1.0) / (1.0 - self.t);
                let grad = x.powf(-self.t).min(Self::GRAD_CLAMP);
                (value, grad)
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.value_grad(x).0
    }

    pub fn grad(&self, x: f64) -> f64 {
        self.value_grad(x).1
    }

    /// True when `value_grad` would clamp the log_t gradient.
    pub fn saturates_at(&self, x: f64) -> bool {
        self.kind == RhoKind::LogT && x < Self::SATURATION_X
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    #[default]
    /// ell(x) = log2(1 + 2^(-x)); differentiable everywhere.
    Logistic,
    /// ell(x) = max(0, 1 - x).
    Hinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LossSpec {
    pub kind: LossKind,
}

impl LossSpec {
    pub fn logistic() -> LossSpec {
        LossSpec { kind: LossKind::Logistic }
    }

    pub fn hinge() -> LossSpec {
        LossSpec { kind: LossKind::Hinge }
    }

    /// ell(x) and ell'(x). The logistic branch is evaluated so that large
    /// |x| neither overflows nor loses the dominant term.
    pub fn value_grad(&self, x: f64) -> (f64, f64) {
        match self.kind {
            LossKind::Logistic => {
                // log2(1 + 2^-x) = max(-x, 0) + log2(1 + 2^-|x|)
                let tail = (-x.abs()).exp2();
                let value = (-x).max(0.0) + tail.ln_1p() / LN_2;
                // ell'(x) = -1 / (1 + 2^x), computed from the bounded side.
                let grad = if x >= 0.0 {
                    let e = (-x).exp2();
                    -e / (1.0 + e)
                } else {
                    -1.0 / (1.0 + x.exp2())
                };
                (value, grad)
            }
            LossKind::Hinge => {
                if x < 1.0 {
                    (1.0 - x, -1.0)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.value_grad(x).0
    }

    pub fn grad(&self, x: f64) -> f64 {
        self.value_grad(x).1
    }

    /// ell(0); 1 for both kinds. Used to drop the c' = c term from sums
    /// taken over a whole score row.
    pub fn zero_value(&self) -> f64 {
        1.0
    }

    /// Sum of ell(y - s) over a score row, including the query's own score.
    /// This is the inner loop of the exact rank-bound computation; the
    /// logistic case runs on a branch-light polynomial path.
    pub fn sum_over(&self, scores: &[f64], y: f64) -> f64 {
        match self.kind {
            LossKind::Logistic => fastmath::logistic_loss_sum(scores, y),
            LossKind::Hinge => {
                let mut acc = 0.0;
                for &s in scores {
                    acc += (1.0 - (y - s)).max(0.0);
                }
                acc
            }
        }
    }
}

/// Co-occurrence weight r = min((x / x_max)^epsilon, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightConfig {
    pub x_max: f64,
    pub epsilon: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig { x_max: 100.0, epsilon: 0.75 }
    }
}

impl WeightConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_max.is_finite() && self.x_max > 0.0) {
            return Err(Error::Config(format!("x_max must be > 0, got {}", self.x_max)));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Config(format!(
                "epsilon must be in (0, 1], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn weight(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        if x < self.x_max {
            (x / self.x_max).powf(self.epsilon)
        } else {
            1.0
        }
    }
}

/// Convex upper bound on the rank of context c for word w:
/// sum over c' != c of ell(<u_w, v_c - v_c'>), computed from precomputed
/// scores as (sum over all c') - ell(0).
pub fn rank_upper_bound(model: &EmbeddingModel, w: u32, c: u32, loss: &LossSpec) -> f64 {
    debug_assert!(model.contexts() >= 2);
    let u = model.word_vec(w);
    let y = dot(u, model.context_vec(c));
    let mut total = 0.0;
    for cp in 0..model.contexts() as u32 {
        total += loss.value(y - dot(u, model.context_vec(cp)));
    }
    total - loss.zero_value()
}

/// Double-precision polynomial kernels for the logistic row sums.
///
/// The row-sum workload evaluates log2(1 + 2^-a) billions of times during
/// the exact auxiliary-variable update; libm exp2/ln_1p keep it correct but
/// dominate the epoch wall time. These kernels agree with the libm path to
/// ~1e-15 relative and compile to branch-light straight-line code.
pub(crate) mod fastmath {
    const LN_2: f64 = std::f64::consts::LN_2;

    /// Taylor coefficients 1/j! for exp on |u| <= ln(2)/2.
    const EXP_C: [f64; 13] = [
        1.0,
        1.0,
        0.5,
        1.0 / 6.0,
        1.0 / 24.0,
        1.0 / 120.0,
        1.0 / 720.0,
        1.0 / 5040.0,
        1.0 / 40320.0,
        1.0 / 362880.0,
        1.0 / 3628800.0,
        1.0 / 39916800.0,
        1.0 / 479001600.0,
    ];

    /// 2^x for x in [-60, 0].
    #[inline]
    pub fn exp2_neg(x: f64) -> f64 {
        debug_assert!((-60.0..=0.0).contains(&x));
        let n = x.round();
        let u = (x - n) * LN_2;
        let mut p = EXP_C[12];
        for j in (0..12).rev() {
            p = p * u + EXP_C[j];
        }
        // Exact scale by 2^n via exponent bits; n is in [-60, 0].
        let bits = ((n as i64 + 1023) as u64) << 52;
        p * f64::from_bits(bits)
    }

    const SQRT_2: f64 = std::f64::consts::SQRT_2;

    /// log2(1 + z) for z in [0, 1], via log2(m) = 2/ln2 * atanh((m-1)/(m+1))
    /// with m reduced into [sqrt(1/2), sqrt(2)).
    #[inline]
    pub fn log2_1p(z: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&z));
        let m = 1.0 + z;
        let hi = (m > SQRT_2) as u32 as f64;
        let m = m * (1.0 - 0.5 * hi);
        let s = (m - 1.0) / (m + 1.0);
        let s2 = s * s;
        // atanh(s)/s = 1 + s^2/3 + s^4/5 + ...; |s| <= 0.172 here.
        let mut p = 1.0 / 19.0;
        for j in (1..=8).rev() {
            p = p * s2 + 1.0 / (2 * j + 1) as f64;
        }
        let p = p * s2 + 1.0;
        hi + (2.0 / LN_2) * s * p
    }

    /// Sum over the row of ell(y - s_i) for the logistic loss, including
    /// the i with s_i = y: ell(u) = max(-u, 0) + log2(1 + 2^-|u|).
    ///
    /// Dispatches to the AVX2+FMA kernel when the CPU has it; the lane
    /// accumulators change the summation order, so the two paths agree to
    /// rounding, not bitwise.
    pub fn logistic_loss_sum(scores: &[f64], y: f64) -> f64 {
        #[cfg(target_arch = "x86_64")]
        {
            if std::arch::is_x86_feature_detected!("avx2")
                && std::arch::is_x86_feature_detected!("fma")
            {
                return unsafe { avx2::logistic_loss_sum(scores, y) };
            }
        }
        logistic_loss_sum_scalar(scores, y)
    }

    pub fn logistic_loss_sum_scalar(scores: &[f64], y: f64) -> f64 {
        let mut acc = 0.0;
        for &s in scores {
            let d = y - s;
            let a = d.abs().min(60.0);
            acc += (-d).max(0.0) + log2_1p(exp2_neg(-a));
        }
        acc
    }

    /// Four-lane vectorization of the scalar kernel above, same polynomial
    /// coefficients throughout. The exact auxiliary update spends nearly
    /// all of its time here.
    #[cfg(target_arch = "x86_64")]
    mod avx2 {
        use super::{EXP_C, LN_2, SQRT_2};
        use std::arch::x86_64::*;

        #[target_feature(enable = "avx2,fma")]
        pub unsafe fn logistic_loss_sum(scores: &[f64], y: f64) -> f64 {
            let vy = _mm256_set1_pd(y);
            let abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fff_ffff_ffff_ffff));
            let vzero = _mm256_setzero_pd();
            let v60 = _mm256_set1_pd(60.0);
            let vln2 = _mm256_set1_pd(LN_2);
            let vone = _mm256_set1_pd(1.0);
            let vsqrt2 = _mm256_set1_pd(SQRT_2);
            let vhalf = _mm256_set1_pd(0.5);
            let v2ln2 = _mm256_set1_pd(2.0 / LN_2);
            // 1.5 * 2^52: adding it keeps the round-to-nearest integer of a
            // small value in the low mantissa bits.
            let magic = _mm256_set1_pd(6_755_399_441_055_744.0);
            let low52 = _mm256_set1_epi64x((1i64 << 52) - 1);
            let bias_off = _mm256_set1_epi64x((1i64 << 51) - 1023);
            let mut acc = _mm256_setzero_pd();

            let mut i = 0;
            while i + 4 <= scores.len() {
                let vs = _mm256_loadu_pd(scores.as_ptr().add(i));
                let d = _mm256_sub_pd(vy, vs);
                let a = _mm256_min_pd(_mm256_and_pd(d, abs_mask), v60);
                let x = _mm256_sub_pd(vzero, a);
                // 2^x = 2^n * exp((x - n) ln 2) with n = round(x).
                let v = _mm256_add_pd(x, magic);
                let n = _mm256_sub_pd(v, magic);
                let u = _mm256_mul_pd(_mm256_sub_pd(x, n), vln2);
                let mut p = _mm256_set1_pd(EXP_C[12]);
                p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(EXP_C[11]));
                p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(EXP_C[10]));
                p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(EXP_C[9]));
                p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(EXP_C[8]));
                p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(EXP_C[7]));
                p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(EXP_C[6]));
                p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(EXP_C[5]));
                p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(EXP_C[4]));
                p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(EXP_C[3]));
                p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(EXP_C[2]));
                p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(EXP_C[1]));
                p = _mm256_fmadd_pd(p, u, _mm256_set1_pd(EXP_C[0]));
                let vb = _mm256_castpd_si256(v);
                let ni = _mm256_and_si256(vb, low52);
                let eb = _mm256_slli_epi64::<52>(_mm256_sub_epi64(ni, bias_off));
                let t = _mm256_mul_pd(p, _mm256_castsi256_pd(eb));
                // log2(1 + t) with m reduced into [sqrt(1/2), sqrt(2)).
                let m = _mm256_add_pd(vone, t);
                let hi_mask = _mm256_cmp_pd::<_CMP_GT_OQ>(m, vsqrt2);
                let m = _mm256_blendv_pd(m, _mm256_mul_pd(m, vhalf), hi_mask);
                let hi = _mm256_and_pd(hi_mask, vone);
                let s = _mm256_div_pd(_mm256_sub_pd(m, vone), _mm256_add_pd(m, vone));
                let s2 = _mm256_mul_pd(s, s);
                let mut q = _mm256_set1_pd(1.0 / 19.0);
                q = _mm256_fmadd_pd(q, s2, _mm256_set1_pd(1.0 / 17.0));
                q = _mm256_fmadd_pd(q, s2, _mm256_set1_pd(1.0 / 15.0));
                q = _mm256_fmadd_pd(q, s2, _mm256_set1_pd(1.0 / 13.0));
                q = _mm256_fmadd_pd(q, s2, _mm256_set1_pd(1.0 / 11.0));
                q = _mm256_fmadd_pd(q, s2, _mm256_set1_pd(1.0 / 9.0));
                q = _mm256_fmadd_pd(q, s2, _mm256_set1_pd(1.0 / 7.0));
                q = _mm256_fmadd_pd(q, s2, _mm256_set1_pd(1.0 / 5.0));
                q = _mm256_fmadd_pd(q, s2, _mm256_set1_pd(1.0 / 3.0));
                q = _mm256_fmadd_pd(q, s2, vone);
                let g = _mm256_fmadd_pd(_mm256_mul_pd(v2ln2, s), q, hi);
                let loss = _mm256_add_pd(_mm256_max_pd(_mm256_sub_pd(vzero, d), vzero), g);
                acc = _mm256_add_pd(acc, loss);
                i += 4;
            }
            let mut lanes = [0.0f64; 4];
            _mm256_storeu_pd(lanes.as_mut_ptr(), acc);
            let mut total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
            while i < scores.len() {
                let s = scores[i];
                let d = y - s;
                let a = d.abs().min(60.0);
                total += (-d).max(0.0) + super::log2_1p(super::exp2_neg(-a));
                i += 1;
            }
            total
        }
    }

}
