//! Per-slot noise matrices and the closed-form bit and phase error rates.
//!
//! The three expressions are evaluated literally, including the `16/(2*144)`
//! prefactors and without renormalizing by the filter success probability.
//! In particular the identity channel gives `e_b = 1`.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::scalar::{lit, Real};

/// A 3x3 complex matrix; entry `(i, j)` is the amplitude for bin `j` to be mapped to bin `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseMatrix<T: Real> {
    entries: [[Complex<T>; 3]; 3],
}

impl<T: Real> NoiseMatrix<T> {
    pub fn new(entries: [[Complex<T>; 3]; 3]) -> Self {
        Self { entries }
    }

    pub fn from_real(rows: [[T; 3]; 3]) -> Self {
        Self::new(rows.map(|r| r.map(|x| Complex::new(x, T::zero()))))
    }

    pub fn identity() -> Self {
        let mut m = [[Complex::default(); 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = Complex::new(T::one(), T::zero());
        }
        Self::new(m)
    }

    /// 18 reals, row-major, real and imaginary parts interleaved.
    pub fn from_reals(v: &[T; 18]) -> Self {
        Self::new(std::array::from_fn(|i| std::array::from_fn(|j| Complex::new(v[6 * i + 2 * j], v[6 * i + 2 * j + 1]))))
    }

    pub fn to_reals(&self) -> [T; 18] {
        std::array::from_fn(|k| {
            let z = self.entries[k / 6][(k % 6) / 2];
            if k % 2 == 0 {
                z.re
            } else {
                z.im
            }
        })
    }

    pub fn entries(&self) -> &[[Complex<T>; 3]; 3] {
        &self.entries
    }

    /// Entry with 1-based indices.
    pub fn at(&self, i: usize, j: usize) -> Complex<T> {
        self.entries[i - 1][j - 1]
    }

    /// `|entry|^2` with 1-based indices.
    pub fn sq(&self, i: usize, j: usize) -> T {
        self.at(i, j).norm_sqr()
    }

    pub fn column_norm_sqr(&self, j: usize) -> T {
        (0..3).fold(T::zero(), |s, i| s + self.entries[i][j].norm_sqr())
    }

    /// All column norms at most one.
    pub fn is_physical(&self) -> bool {
        let tol = T::epsilon() * lit(16.0);
        (0..3).all(|j| self.column_norm_sqr(j) <= T::one() + tol)
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        Self::new(self.entries.map(|r| r.map(|z| z * c)))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        Self::new(std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..3).fold(Complex::default(), |s, k| s + self.entries[i][k] * other.entries[k][j]))
        }))
    }

    /// Haar-random unitary (QR of a complex Ginibre matrix with the phase fix).
    pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut cols: [[Complex<T>; 3]; 3] = std::array::from_fn(|_| {
            std::array::from_fn(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(lit(re), lit(im))
            })
        });
        // Modified Gram-Schmidt on columns; dividing by the norm fixes R's diagonal to be positive.
        for j in 0..3 {
            for k in 0..j {
                let proj = (0..3).fold(Complex::default(), |s, i| s + cols[k][i].conj() * cols[j][i]);
                for i in 0..3 {
                    let q = cols[k][i];
                    cols[j][i] -= q * proj;
                }
            }
            let n = cols[j].iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt();
            for z in cols[j].iter_mut() {
                *z = *z / n;
            }
        }
        Self::new(std::array::from_fn(|i| std::array::from_fn(|j| cols[j][i])))
    }

    /// Haar unitary, optionally followed by independent uniform damping of each input bin.
    pub fn random_physical<R: Rng + ?Sized>(rng: &mut R, damped: bool) -> Self {
        let u = Self::haar_unitary(rng);
        if !damped {
            return u;
        }
        let d: [T; 3] = std::array::from_fn(|_| lit::<T>(rng.random::<f64>()).sqrt());
        Self::new(u.entries.map(|r| std::array::from_fn(|j| r[j] * d[j])))
    }
}

fn bracket<T: Real>(x: Complex<T>, y: Complex<T>) -> T {
    x.norm_sqr() + y.norm_sqr() - (x - y).norm_sqr()
}

fn prefactor<T: Real>() -> T {
    lit::<T>(16.0) / lit(2.0 * 144.0)
}

/// `e_b = 1 - 16/288 [ ... ]` over the four filter/register products.
pub fn bit_error_rate<T: Real>(a: &NoiseMatrix<T>, b: &NoiseMatrix<T>) -> T {
    let s = bracket(a.at(1, 2), a.at(1, 1)) * bracket(b.at(2, 2), b.at(2, 1))
        + bracket(a.at(2, 1), a.at(2, 2)) * bracket(b.at(1, 2), b.at(1, 1))
        + bracket(a.at(1, 3), a.at(1, 1)) * bracket(b.at(3, 3), b.at(3, 1))
        + bracket(a.at(3, 3), a.at(3, 1)) * bracket(b.at(1, 3), b.at(1, 1));
    T::one() - prefactor::<T>() * s
}

/// `e_p = 1 - 16/288 [ ... ]` with the sign-alternating row sums.
///
/// The printed expression is missing the `+` between its second and third
/// products; it is restored here, giving four products like the bit error rate.
pub fn phase_error_rate<T: Real>(a: &NoiseMatrix<T>, b: &NoiseMatrix<T>) -> T {
    let alt = |m: &NoiseMatrix<T>, r: usize| m.sq(r, 1) - m.sq(r, 2) + m.sq(r, 3);
    let alt3 = |m: &NoiseMatrix<T>, r: usize| m.sq(r, 1) + m.sq(r, 2) - m.sq(r, 3);
    let s = alt(a, 1) * alt(b, 2) + alt(a, 2) * alt(b, 1) + alt3(a, 1) * alt3(b, 3) + alt3(a, 3) * alt3(b, 1);
    T::one() - prefactor::<T>() * s
}

/// The closed form printed as `e_b - e_p`: `2*16/288` times a sum of products of squared magnitudes.
///
/// Non-negative by construction. It is an independent code path and is not
/// identical to `bit_error_rate - phase_error_rate` in general.
pub fn error_gap<T: Real>(a: &NoiseMatrix<T>, b: &NoiseMatrix<T>) -> T {
    let s = a.sq(1, 2) * (b.sq(2, 1) + b.sq(2, 3))
        + b.sq(2, 2) * (a.sq(1, 1) + a.sq(1, 3))
        + a.sq(2, 2) * (b.sq(1, 1) + b.sq(1, 3))
        + b.sq(1, 2) * (a.sq(2, 1) + a.sq(2, 3))
        + a.sq(1, 3) * (b.sq(3, 1) + b.sq(3, 2))
        + b.sq(3, 3) * (a.sq(1, 1) + a.sq(1, 2))
        + a.sq(3, 3) * (b.sq(1, 1) + b.sq(1, 2))
        + b.sq(1, 3) * (a.sq(3, 1) + a.sq(3, 2));
    lit::<T>(2.0) * prefactor::<T>() * s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type M = NoiseMatrix<f64>;

    #[test]
    fn identity_values() {
        let i = M::identity();
        assert!((bit_error_rate(&i, &i) - 1.0).abs() < 1e-15);
        assert!((phase_error_rate(&i, &i) - (1.0 + 2.0 / 9.0)).abs() < 1e-15);
        assert!((error_gap(&i, &i) - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn bit_flip_example() {
        let flip = M::from_real([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]);
        let i = M::identity();
        // Every bracket pairs a diagonal entry with a zero, so each is 0 and e_b = 1.
        assert!((bit_error_rate(&flip, &i) - 1.0).abs() < 1e-15);
        assert!((bit_error_rate(&i, &flip) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn monitoring_attack_is_finite() {
        let s = 1.0 / 6f64.sqrt();
        let ea = M::from_real([[s, s, s], [0.0, 0.0, 0.0], [s, s, s]]);
        let ep = phase_error_rate(&ea, &M::identity());
        assert!(ep.is_finite());
        assert!(ea.is_physical());
    }

    #[test]
    fn tight_gap() {
        let z = 0.0;
        let ea = M::from_real([[0.7, z, z], [0.3, z, 0.2], [0.1, 0.4, z]]);
        let eb = M::from_real([[0.5, z, z], [0.2, z, 0.6], [0.3, 0.1, z]]);
        assert_eq!(error_gap(&ea, &eb), 0.0);
    }

    #[test]
    fn reals_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = M::haar_unitary(&mut rng);
        assert_eq!(M::from_reals(&m.to_reals()), m);
        let v: [f64; 18] = std::array::from_fn(|k| k as f64);
        let m = M::from_reals(&v);
        assert_eq!(m.at(1, 2), Complex::new(2.0, 3.0));
        assert_eq!(m.at(3, 3), Complex::new(16.0, 17.0));
    }

    #[test]
    fn haar_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let u = M::haar_unitary(&mut rng);
            let adj = M::new(std::array::from_fn(|i| std::array::from_fn(|j| u.at(j + 1, i + 1).conj())));
            let p = adj.matmul(&u);
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((p.entries()[i][j] - Complex::new(want, 0.0)).norm() < 1e-12);
                }
            }
            assert!(M::random_physical(&mut rng, true).is_physical());
        }
    }

    #[test]
    fn unit_phase_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = M::random_physical(&mut rng, true);
        let b = M::random_physical(&mut rng, true);
        let ph = Complex::from_polar(1.0, 0.77);
        let a2 = a.scaled(ph);
        assert!((bit_error_rate(&a, &b) - bit_error_rate(&a2, &b)).abs() < 1e-14);
        assert!((phase_error_rate(&a, &b) - phase_error_rate(&a2, &b)).abs() < 1e-14);
        assert!((error_gap(&a, &b) - error_gap(&a2, &b)).abs() < 1e-14);
    }
}
