//! Modified Bessel function of the first kind, order zero.

use crate::scalar::{lit, Real};

const SERIES_LIMIT: f64 = 3.75;

// Cephes Chebyshev expansions of exp(-x) I0(x) on [0, 8] and exp(-x) sqrt(x) I0(x) on (8, inf).
const BESSI0_COEFFS_A: [f64; 30] = [
    -4.415_341_646_479_339_5E-18,
    3.330_794_518_822_238_4E-17,
    -2.431_279_846_547_955E-16,
    1.715_391_285_555_133E-15,
    -1.168_533_287_799_345_1E-14,
    7.676_185_498_604_936E-14,
    -4.856_446_783_111_929E-13,
    2.955_052_663_129_64E-12,
    -1.726_826_291_441_556E-11,
    9.675_809_035_373_237E-11,
    -5.189_795_601_635_263E-10,
    2.659_823_724_682_386_6E-9,
    -1.300_025_009_986_248E-8,
    6.046_995_022_541_919E-8,
    -2.670_793_853_940_612E-7,
    1.117_387_539_120_103_7E-6,
    -4.416_738_358_458_750_5E-6,
    1.644_844_807_072_889_6E-5,
    -5.754_195_010_082_104E-5,
    1.885_028_850_958_416_5E-4,
    -5.763_755_745_385_824E-4,
    1.639_475_616_941_335_7E-3,
    -4.324_309_995_050_576E-3,
    1.054_646_039_459_499_8E-2,
    -2.373_741_480_589_947E-2,
    4.930_528_423_967_071E-2,
    -9.490_109_704_804_764E-2,
    1.716_209_015_222_087_7E-1,
    -3.046_826_723_431_984E-1,
    6.767_952_744_094_761E-1,
];

const BESSI0_COEFFS_B: [f64; 25] = [
    -7.233_180_487_874_754E-18,
    -4.830_504_485_944_182E-18,
    4.465_621_420_296_76E-17,
    3.461_222_867_697_461E-17,
    -2.827_623_980_516_583_6E-16,
    -3.425_485_619_677_219E-16,
    1.772_560_133_056_526_3E-15,
    3.811_680_669_352_622_4E-15,
    -9.554_846_698_828_307E-15,
    -4.150_569_347_287_222E-14,
    1.540_086_217_521_41E-14,
    3.852_778_382_742_142_6E-13,
    7.180_124_451_383_666E-13,
    -1.794_178_531_506_806_2E-12,
    -1.321_581_184_044_771_3E-11,
    -3.149_916_527_963_241_6E-11,
    1.188_914_710_784_643_9E-11,
    4.940_602_388_224_97E-10,
    3.396_232_025_708_386_5E-9,
    2.266_668_990_498_178E-8,
    2.048_918_589_469_063_8E-7,
    2.891_370_520_834_756_7E-6,
    6.889_758_346_916_825E-5,
    3.369_116_478_255_694_3E-3,
    8.044_904_110_141_088E-1,
];

fn chbevl<T: Real>(x: T, coeffs: &[f64]) -> T {
    let mut b0 = lit::<T>(coeffs[0]);
    let mut b1 = T::zero();
    let mut b2 = T::zero();
    for &c in &coeffs[1..] {
        b2 = b1;
        b1 = b0;
        b0 = x * b1 - b2 + lit(c);
    }
    (b0 - b2) / lit(2.0)
}

/// `sum_{k>=1} (x/2)^(2k) / (k!)^2`, summed until terms stop contributing.
fn series_tail<T: Real>(x: T) -> T {
    let q = x * x / lit(4.0);
    let mut term = q;
    let mut sum = q;
    let mut k = T::one();
    while term > sum * T::epsilon() {
        k = k + T::one();
        term = term * q / (k * k);
        sum = sum + term;
    }
    sum
}

/// `I0(x)`: power series for `|x| <= 3.75`, Chebyshev expansions beyond.
pub fn bessel_i0<T: Real>(x: T) -> T {
    let ax = x.abs();
    if ax <= lit(SERIES_LIMIT) {
        T::one() + series_tail(ax)
    } else if ax <= lit(8.0) {
        ax.exp() * chbevl(ax / lit(2.0) - lit(2.0), &BESSI0_COEFFS_A)
    } else {
        ax.exp() * chbevl(lit::<T>(32.0) / ax - lit(2.0), &BESSI0_COEFFS_B) / ax.sqrt()
    }
}

/// `I0(x) - 1` without cancellation for small `x`.
pub fn bessel_i0m1<T: Real>(x: T) -> T {
    let ax = x.abs();
    if ax <= lit(SERIES_LIMIT) {
        series_tail(ax)
    } else {
        bessel_i0(ax) - T::one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // (1/pi) int_0^pi exp(x cos t) dt by composite Simpson; spectrally accurate for periodic integrands.
    fn integral_definition(x: f64) -> f64 {
        let n = 2000;
        let h = std::f64::consts::PI / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            s += (x * (h * (i as f64 + 0.5)).cos()).exp();
        }
        s * h / std::f64::consts::PI
    }

    #[test]
    fn known_values() {
        assert_eq!(bessel_i0(0.0f64), 1.0);
        assert!((bessel_i0(1.0f64) - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!((bessel_i0(-1.0f64) - bessel_i0(1.0f64)).abs() < 1e-16);
    }

    #[test]
    fn shifted_form() {
        assert_eq!(bessel_i0m1(0.0f64), 0.0);
        let x = 1e-5f64;
        let want = x * x / 4.0 + x.powi(4) / 64.0;
        assert!((bessel_i0m1(x) - want).abs() < 1e-15 * want);
        for x in [0.5f64, 3.0, 3.75, 5.0, 12.0] {
            assert!((bessel_i0m1(x) - (bessel_i0(x) - 1.0)).abs() < 1e-14 * bessel_i0(x));
        }
    }

    #[test]
    fn matches_integral_definition() {
        for i in 0..=400 {
            let x = i as f64 * 0.05;
            let want = integral_definition(x);
            let got = bessel_i0(x);
            assert!(((got - want) / want).abs() < 1e-12, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn branches_agree_at_split_points() {
        let x = SERIES_LIMIT;
        let cheb_a = |x: f64| x.exp() * chbevl(x / 2.0 - 2.0, &BESSI0_COEFFS_A);
        let cheb_b = |x: f64| x.exp() * chbevl(32.0 / x - 2.0, &BESSI0_COEFFS_B) / x.sqrt();
        let s = 1.0 + series_tail(x);
        assert!(((s - cheb_a(x)) / s).abs() < 1e-14);
        assert!(((cheb_a(8.0) - cheb_b(8.0)) / cheb_a(8.0)).abs() < 1e-14);
    }

    #[test]
    fn single_precision() {
        assert!((bessel_i0(2.0f32) - 2.279_585_3).abs() < 1e-5);
        assert!((bessel_i0(5.0f32) - 27.239_872).abs() < 1e-3);
    }
}
