//! Emulated reduced-precision floating-point arithmetic.
//!
//! Values are stored as `f64` but rounded to the nearest representable value
//! of a narrower format (round-to-nearest-even). The emulation models
//! mixed-precision accumulation: arithmetic happens in `f64` and results are
//! rounded once per named assignment line of an optimizer update, not after
//! every scalar multiply. Subnormals of the emulated format are flushed to
//! zero, matching common accelerator behavior; overflow rounds to ±∞;
//! NaN/±∞ propagate so stress runs can observe divergence.

use serde::Serialize;

use crate::linalg::Mat;

/// A binary floating-point format described by its exponent and mantissa widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FloatFormat {
    pub exponent_bits: u32,
    pub mantissa_bits: u32,
    pub name: &'static str,
}

impl FloatFormat {
    pub const BF16: FloatFormat = FloatFormat {
        exponent_bits: 8,
        mantissa_bits: 7,
        name: "bf16",
    };
    pub const FP16: FloatFormat = FloatFormat {
        exponent_bits: 5,
        mantissa_bits: 10,
        name: "fp16",
    };
    pub const FP32: FloatFormat = FloatFormat {
        exponent_bits: 8,
        mantissa_bits: 23,
        name: "fp32",
    };
    pub const FP64: FloatFormat = FloatFormat {
        exponent_bits: 11,
        mantissa_bits: 52,
        name: "fp64",
    };

    /// Look up a format by its config name.
    pub fn by_name(name: &str) -> Option<FloatFormat> {
        match name {
            "bf16" => Some(Self::BF16),
            "fp16" => Some(Self::FP16),
            "fp32" => Some(Self::FP32),
            "fp64" => Some(Self::FP64),
            _ => None,
        }
    }

    fn bias(&self) -> i32 {
        (1i32 << (self.exponent_bits - 1)) - 1
    }

    /// Largest unbiased exponent of a normal number.
    fn e_max(&self) -> i32 {
        self.bias()
    }

    /// Smallest unbiased exponent of a normal number.
    fn e_min(&self) -> i32 {
        1 - self.bias()
    }

    /// True when the format is at least as wide as `f64`, making quantization
    /// the identity on every double-precision input.
    fn covers_f64(&self) -> bool {
        self.exponent_bits >= 11 && self.mantissa_bits >= 52
    }
}

/// Which parts of a computation round through the emulated format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum PrecisionScope {
    /// No rounding anywhere (reference precision).
    #[default]
    None,
    /// Round optimizer-state writes (one rounding per named update line).
    StateOnly,
    /// Round optimizer-state writes and linalg intermediates.
    StateAndLinalg,
}

impl PrecisionScope {
    pub fn by_name(name: &str) -> Option<PrecisionScope> {
        match name {
            "none" => Some(PrecisionScope::None),
            "state-only" => Some(PrecisionScope::StateOnly),
            "state-and-linalg" => Some(PrecisionScope::StateAndLinalg),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PrecisionScope::None => "none",
            PrecisionScope::StateOnly => "state-only",
            PrecisionScope::StateAndLinalg => "state-and-linalg",
        }
    }
}

/// Format plus scope; threaded through optimizer steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecisionPolicy {
    pub format: FloatFormat,
    pub scope: PrecisionScope,
}

impl PrecisionPolicy {
    /// Full-precision reference policy: no rounding at all.
    pub const REFERENCE: PrecisionPolicy = PrecisionPolicy {
        format: FloatFormat::FP64,
        scope: PrecisionScope::None,
    };

    pub fn new(format: FloatFormat, scope: PrecisionScope) -> PrecisionPolicy {
        PrecisionPolicy { format, scope }
    }

    fn rounds_state(&self) -> bool {
        self.scope != PrecisionScope::None
    }

    fn rounds_linalg(&self) -> bool {
        self.scope == PrecisionScope::StateAndLinalg
    }

    /// Round an optimizer-state scalar write.
    pub fn state(&self, x: f64) -> f64 {
        if self.rounds_state() {
            quantize(x, self.format)
        } else {
            x
        }
    }

    /// Round an optimizer-state vector write in place.
    pub fn state_vec(&self, v: &mut [f64]) {
        if self.rounds_state() {
            for x in v {
                *x = quantize(*x, self.format);
            }
        }
    }

    /// Round an optimizer-state matrix write.
    pub fn state_mat(&self, m: Mat) -> Mat {
        if self.rounds_state() {
            quantize_mat(&m, self.format)
        } else {
            m
        }
    }

    /// Round an intermediate linalg result.
    pub fn linalg_mat(&self, m: Mat) -> Mat {
        if self.rounds_linalg() {
            quantize_mat(&m, self.format)
        } else {
            m
        }
    }
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        Self::REFERENCE
    }
}

/// Unbiased exponent floor(log2 |x|) of a finite nonzero double, from bits.
fn exponent_of(x: f64) -> i32 {
    let bits = x.abs().to_bits();
    let exp_field = (bits >> 52) as i32;
    if exp_field == 0 {
        // Subnormal double: value = mantissa * 2^-1074.
        let mant = bits & ((1u64 << 52) - 1);
        -1074 + (63 - mant.leading_zeros() as i32)
    } else {
        exp_field - 1023
    }
}

/// Round `x` to the nearest representable value of `fmt` (ties to even).
///
/// Overflow produces ±∞; values below the smallest normal of `fmt` flush to
/// zero; NaN and ±∞ propagate unchanged.
pub fn quantize(x: f64, fmt: FloatFormat) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    if fmt.covers_f64() {
        return x;
    }
    let m = fmt.mantissa_bits as i32;
    let e = exponent_of(x);
    if e < fmt.e_min() - 1 {
        // Too far below the normal range to round up into it.
        return 0.0 * x.signum();
    }
    // Scale so the representable grid has unit spacing, then round to even.
    // The scale is a power of two, so division and multiplication are exact.
    let scale = (2.0f64).powi(e - m);
    let q = (x / scale).round_ties_even() * scale;
    if q == 0.0 {
        return 0.0 * x.signum();
    }
    let eq = exponent_of(q);
    if eq > fmt.e_max() {
        return f64::INFINITY * x.signum();
    }
    if eq < fmt.e_min() {
        return 0.0 * x.signum();
    }
    q
}

/// Elementwise [`quantize`] over a matrix.
pub fn quantize_mat(a: &Mat, fmt: FloatFormat) -> Mat {
    let mut out = a.clone();
    for v in out.as_flat_mut() {
        *v = quantize(*v, fmt);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exactly_representable_values_pass_through() {
        assert_eq!(quantize(1.0, FloatFormat::BF16), 1.0);
        assert_eq!(quantize(-2.5, FloatFormat::BF16), -2.5);
        assert_eq!(quantize(0.0, FloatFormat::FP16), 0.0);
    }

    #[test]
    fn below_half_ulp_rounds_down() {
        // ulp of bf16 at 1.0 is 2^-7; half of it is 2^-8, so 1 + 2^-9 rounds to 1.
        let x = 1.0 + (2.0f64).powi(-9);
        assert_eq!(quantize(x, FloatFormat::BF16), 1.0);
    }

    #[test]
    fn bf16_rounding_of_one_fifth() {
        // 0.2 = 1.6 * 2^-3; the 7-bit mantissa rounds 1.6 up to 205/128.
        assert_eq!(quantize(0.2, FloatFormat::BF16), 0.2001953125);
        assert_eq!(quantize(0.2001953125, FloatFormat::BF16), 0.2001953125);
    }

    #[test]
    fn ties_round_to_even() {
        // 1 + 2^-8 is exactly halfway between 1 and 1 + 2^-7 in bf16.
        let x = 1.0 + (2.0f64).powi(-8);
        assert_eq!(quantize(x, FloatFormat::BF16), 1.0);
        // 1 + 3*2^-8 is halfway between 1 + 2^-7 and 1 + 2^-6; even mantissa wins.
        let y = 1.0 + 3.0 * (2.0f64).powi(-8);
        assert_eq!(quantize(y, FloatFormat::BF16), 1.0 + (2.0f64).powi(-6));
    }

    #[test]
    fn overflow_saturates_to_infinity() {
        assert_eq!(quantize(1e39, FloatFormat::BF16), f64::INFINITY);
        assert_eq!(quantize(-1e39, FloatFormat::BF16), f64::NEG_INFINITY);
        assert_eq!(quantize(1e5, FloatFormat::FP16), f64::INFINITY);
    }

    #[test]
    fn subnormals_flush_to_zero() {
        // Smallest fp16 normal is 2^-14; anything below half... below the
        // normal range flushes.
        assert_eq!(quantize(1e-6, FloatFormat::FP16), 0.0);
        assert_eq!(quantize((2.0f64).powi(-15), FloatFormat::FP16), 0.0);
        assert_eq!(quantize((2.0f64).powi(-14), FloatFormat::FP16), (2.0f64).powi(-14));
    }

    #[test]
    fn non_finite_propagates() {
        assert!(quantize(f64::NAN, FloatFormat::BF16).is_nan());
        assert_eq!(quantize(f64::INFINITY, FloatFormat::BF16), f64::INFINITY);
        assert_eq!(
            quantize(f64::NEG_INFINITY, FloatFormat::FP16),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn fp64_format_is_identity() {
        for x in [1.0, -0.1, 1e-300, f64::MIN_POSITIVE / 4.0, 123456.789] {
            assert_eq!(quantize(x, FloatFormat::FP64), x);
        }
    }

    #[test]
    fn fp32_relative_error_is_half_ulp() {
        let mut state = 4321u64;
        for _ in 0..200 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let x = ((state >> 11) as f64 / (1u64 << 53) as f64) * 20.0 - 10.0;
            if x == 0.0 {
                continue;
            }
            let q = quantize(x, FloatFormat::FP32);
            let rel = ((q - x) / x).abs();
            assert!(rel <= (2.0f64).powi(-24), "rel {rel} for {x}");
        }
    }

    #[test]
    fn quantize_mat_is_elementwise() {
        let id = Mat::identity(3);
        assert_eq!(
            quantize_mat(&id, FloatFormat::BF16).as_flat(),
            id.as_flat()
        );
        let z = Mat::zeros(2, 2);
        assert_eq!(quantize_mat(&z, FloatFormat::FP16).as_flat(), z.as_flat());
        let m = Mat::from_rows(&[&[0.2, 0.4], &[-0.2, 1.0]]);
        let q = quantize_mat(&m, FloatFormat::BF16);
        assert_eq!(q[(0, 0)], 0.2001953125);
        assert_eq!(q[(1, 1)], 1.0);
    }

    #[test]
    fn format_lookup() {
        assert_eq!(FloatFormat::by_name("bf16"), Some(FloatFormat::BF16));
        assert_eq!(FloatFormat::by_name("fp8"), None);
        assert_eq!(PrecisionScope::by_name("state-only"), Some(PrecisionScope::StateOnly));
    }

    proptest! {
        #[test]
        fn idempotent(x in -1e30f64..1e30, which in 0usize..3) {
            let fmt = [FloatFormat::BF16, FloatFormat::FP16, FloatFormat::FP32][which];
            let q = quantize(x, fmt);
            let qq = quantize(q, fmt);
            prop_assert!(q == qq || (q.is_nan() && qq.is_nan()));
        }

        #[test]
        fn monotone(a in -1e30f64..1e30, b in -1e30f64..1e30, which in 0usize..3) {
            let fmt = [FloatFormat::BF16, FloatFormat::FP16, FloatFormat::FP32][which];
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(quantize(lo, fmt) <= quantize(hi, fmt));
        }

        #[test]
        fn fp64_identity(x in proptest::num::f64::NORMAL) {
            prop_assert_eq!(quantize(x, FloatFormat::FP64), x);
        }
    }
}
