//! Standard normal distribution helpers.


/// Standard normal CDF `Φ(x)`.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile `Φ⁻¹(p)` for `p` in `(0, 1)`.
///
/// Wichura's AS241 (PPND16) rational approximations, relative accuracy about
/// `1e-16`. Returns `±∞` at the endpoints and NaN outside `[0, 1]`.
#[allow(clippy::excessive_precision)]
pub fn quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_812_8e4) * r
                + 6.726_577_092_700_870_1e4)
                * r
                + 4.592_195_393_154_987_1e4)
                * r
                + 1.373_169_376_550_946_0e4)
                * r
                + 1.971_590_950_306_551_3e3)
                * r
                + 1.331_416_678_917_843_8e2)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5.226_495_278_852_545_4e3 * r + 2.872_908_573_572_194_3e4) * r
                + 3.930_789_580_009_271_1e4)
                * r
                + 2.121_379_430_158_659_6e4)
                * r
                + 5.394_196_021_424_751_1e3)
                * r
                + 6.871_870_074_920_579_1e2)
                * r
                + 4.231_333_070_160_091_1e1)
                * r
                + 1.0);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let value = if r <= 5.0 {
        r -= 1.6;
        (((((((7.745_450_142_783_414_1e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506_1e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_6)
            * r
            + 5.769_497_221_460_691_4)
            * r
            + 4.630_337_846_156_545_3)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_344_9e-4) * r
                + 1.519_866_656_361_645_7e-2)
                * r
                + 1.481_039_764_274_800_7e-1)
                * r
                + 6.897_673_349_851_000_0e-1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_758_8)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_3e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114_4)
            * r
            + 6.657_904_643_501_103_8)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446_0e-7) * r
                + 1.846_318_317_510_054_7e-5)
                * r
                + 7.868_691_311_456_132_6e-4)
                * r
                + 1.487_536_129_085_061_5e-2)
                * r
                + 1.369_298_809_227_358_1e-1)
                * r
                + 5.998_322_065_558_879_6e-1)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -value
    } else {
        value
    }
}

/// Two-sided critical value `Φ⁻¹(1 - (1 - level) / 2)`.
pub fn two_sided_critical(level: f64) -> f64 {
    quantile(1.0 - (1.0 - level) / 2.0)
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `sample` and `Φ`.
/// Returns `None` for an empty sample.
pub fn ks_statistic(sample: &[f64]) -> Option<f64> {
    if sample.is_empty() {
        return None;
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn known_quantiles() {
        assert_eq!(quantile(0.5), 0.0);
        assert_relative_eq!(two_sided_critical(0.95), 1.959_963_984_540_054, max_relative = 1e-14);
        assert_relative_eq!(two_sided_critical(0.99), 2.575_829_303_548_901, max_relative = 1e-14);
        assert_relative_eq!(quantile(0.025), -1.959_963_984_540_054, max_relative = 1e-14);
        assert_eq!(quantile(0.0), f64::NEG_INFINITY);
        assert!(quantile(1.5).is_nan());
    }

    #[test]
    fn quantile_inverts_cdf_across_the_range() {
        let reference = Normal::standard();
        for i in 1..2000 {
            let p = i as f64 / 2000.0;
            let x = quantile(p);
            assert!((x - reference.inverse_cdf(p)).abs() < 1e-9, "p = {p}");
            assert!((cdf(x) - p).abs() < 1e-12, "p = {p}, cdf = {}", cdf(x));
        }
        for p in [1e-300, 1e-100, 1e-20, 1e-10, 1e-5] {
            let x = quantile(p);
            assert_relative_eq!(cdf(x), p, max_relative = 1e-9);
        }
        for p in [1e-8, 1e-5, 1e-3] {
            assert_relative_eq!(quantile(1.0 - p), -quantile(p), max_relative = 1e-7);
        }
    }

    #[test]
    fn ks_of_tiny_samples() {
        assert_eq!(ks_statistic(&[]), None);
        // One point at 0: ECDF jumps 0 → 1 where Φ = 0.5.
        assert_relative_eq!(ks_statistic(&[0.0]).unwrap(), 0.5);
    }
}
