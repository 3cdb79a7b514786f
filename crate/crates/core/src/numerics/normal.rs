// Coefficients are kept exactly as published.
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

/// Inverse of the standard normal CDF, Φ⁻¹(q).
///
/// Wichura's AS 241 (PPND16) rational approximations; relative accuracy is
/// about 1e-16 over the whole double range, including tails down to 1e-300.
pub fn inverse_normal_cdf(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!(
            "inverse normal CDF requires 0 < q < 1, got {q}"
        )));
    }
    let d = q - 0.5;
    if d.abs() <= 0.425 {
        let r = 0.180625 - d * d;
        return Ok(d * central_num(r) / central_den(r));
    }
    let tail = if d < 0.0 { q } else { 1.0 - q };
    let r = (-tail.ln()).sqrt();
    let z = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    Ok(if d < 0.0 { -z } else { z })
}

fn poly(coeffs: &[f64; 8], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn central_num(r: f64) -> f64 {
    poly(&A, r)
}

fn central_den(r: f64) -> f64 {
    poly(&B, r)
}

const A: [f64; 8] = [
    3.387_132_872_796_366_608,
    133.141_667_891_784_377_45,
    1_971.590_950_306_551_442_7,
    13_731.693_765_509_461_125,
    45_921.953_931_549_871_457,
    67_265.770_927_008_700_853,
    33_430.575_583_588_128_105,
    2_509.080_928_730_122_672_7,
];

const B: [f64; 8] = [
    1.0,
    42.313_330_701_600_911_252,
    687.187_007_492_057_908_3,
    5_394.196_021_424_751_107_7,
    21_213.794_301_586_595_867,
    39_307.895_800_092_710_61,
    28_729.085_735_721_942_674,
    5_226.495_278_852_545_925,
];

const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    0.241_780_725_177_450_611_77,
    0.022_723_844_989_269_184_583_3,
    7.745_450_142_783_414_076_4e-4,
];

const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    0.689_767_334_985_100_004_55,
    0.148_103_976_427_480_074_59,
    0.015_198_666_563_616_457_196_6,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];

const E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    0.296_560_571_828_504_891_23,
    0.026_532_189_526_576_123_093,
    0.001_242_660_947_388_078_438_6,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];

const F: [f64; 8] = [
    1.0,
    0.599_832_206_555_887_937_69,
    0.136_929_880_922_735_805_31,
    0.014_875_361_290_850_614_852_5,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

#[cfg(test)]
mod tests {
    use super::*;

    // Reference quantiles from 50-digit bisection on erfc.
    const REFERENCE: &[(f64, f64)] = &[
        (0.975, 1.959_963_984_540_054_2),
        (1.0 - 2.5e-8, 5.451_310_437_845_478_5),
        (2.5e-8, -5.451_310_437_845_478_5),
        (1e-10, -6.361_340_902_404_056),
        (1e-20, -9.262_340_089_798_408),
        (1e-100, -21.273_453_560_965_324),
        (1e-250, -33.799_586_172_694_837),
        (1e-300, -37.047_096_299_361_2),
    ];

    #[test]
    fn median_is_zero() {
        assert_eq!(inverse_normal_cdf(0.5).unwrap(), 0.0);
    }

    #[test]
    fn reference_values() {
        for &(q, z) in REFERENCE {
            let got = inverse_normal_cdf(q).unwrap();
            // 1 - 2.5e-8 is not exactly representable; allow for that rounding.
            let tol = if q > 0.5 { 2e-9 } else { 1e-9 };
            assert!((got - z).abs() < tol, "q={q:e}: {got} vs {z}");
        }
    }

    #[test]
    fn antisymmetric() {
        for q in [1e-6, 0.01, 0.2, 0.4, 0.49] {
            let a = inverse_normal_cdf(q).unwrap();
            let b = inverse_normal_cdf(1.0 - q).unwrap();
            assert!((a + b).abs() < 1e-9, "{q}");
        }
    }

    #[test]
    fn domain_errors() {
        for q in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(inverse_normal_cdf(q), Err(Error::Domain(_))), "{q}");
        }
    }
}
