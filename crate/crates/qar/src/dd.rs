//! Double-double (~31 significant digits) scalars and complex numbers.
//!
//! The stationary heat currents of the refrigerator are small differences of
//! large one-way fluxes; plain f64 evaluation of `Tr{H D[rho]}` loses enough
//! digits that the energy balance between the three baths drowns in rounding.
//! Carrying the steady-state vector and the current traces in double-double
//! keeps the balance at the rounding level of the final outputs.
//!
//! Algorithms: Dekker (1971) / Knuth two_sum, FMA-based two_prod, and the
//! usual renormalized add/mul/div as in Bailey's DDFUN.

use num_complex::Complex64;

/// Double-double value `hi + lo` with |lo| <= ulp(hi)/2.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add_f64(self, other: f64) -> Dd {
        let (s, e) = two_sum(self.hi, other);
        let e = e + self.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, other: Dd) -> Dd {
        self.add(other.neg())
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[cfg_attr(not(test), allow(dead_code))]
    #[inline]
    pub fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, other: f64) -> Dd {
        let (p, e) = two_prod(self.hi, other);
        let e = e + self.lo * other;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul_f64(q1));
        let q2 = r.hi / other.hi;
        let r2 = r.sub(other.mul_f64(q2));
        let q3 = r2.hi / other.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add_f64(q3)
    }

}

/// Complex number with double-double real and imaginary parts.
#[derive(Clone, Copy, Debug, Default)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };

    #[inline]
    pub fn from_c64(z: Complex64) -> Cdd {
        Cdd {
            re: Dd::from(z.re),
            im: Dd::from(z.im),
        }
    }

    #[inline]
    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    #[inline]
    pub fn add(self, other: Cdd) -> Cdd {
        Cdd {
            re: self.re.add(other.re),
            im: self.im.add(other.im),
        }
    }

    #[inline]
    pub fn sub(self, other: Cdd) -> Cdd {
        Cdd {
            re: self.re.sub(other.re),
            im: self.im.sub(other.im),
        }
    }

    #[inline]
    pub fn conj(self) -> Cdd {
        Cdd {
            re: self.re,
            im: self.im.neg(),
        }
    }

    /// self * z with z a plain complex double.
    #[inline]
    pub fn mul_c64(self, z: Complex64) -> Cdd {
        Cdd {
            re: self.re.mul_f64(z.re).sub(self.im.mul_f64(z.im)),
            im: self.re.mul_f64(z.im).add(self.im.mul_f64(z.re)),
        }
    }

    /// Divide by a real double-double.
    #[inline]
    pub fn div_real(self, d: Dd) -> Cdd {
        Cdd {
            re: self.re.div(d),
            im: self.im.div(d),
        }
    }

    /// Accumulate `a * x` onto self, with `a` a plain complex double.
    #[inline]
    pub fn fma_c64(self, a: Complex64, x: Cdd) -> Cdd {
        self.add(x.mul_c64(a))
    }
}

/// y = A * x for a column-major complex matrix `a` (nrows x ncols, f64
/// entries) and a double-double vector, accumulating in double-double.
pub fn matvec_c64_cdd(a: &[Complex64], nrows: usize, ncols: usize, x: &[Cdd], y: &mut [Cdd]) {
    assert_eq!(a.len(), nrows * ncols);
    assert_eq!(x.len(), ncols);
    assert_eq!(y.len(), nrows);
    for yi in y.iter_mut() {
        *yi = Cdd::ZERO;
    }
    for (j, xj) in x.iter().enumerate() {
        let col = &a[j * nrows..(j + 1) * nrows];
        for (yi, &aij) in y.iter_mut().zip(col.iter()) {
            *yi = yi.fma_c64(aij, *xj);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn captures_sub_ulp_error() {
        let a = Dd::from(1.0).add_f64(1e-20);
        let b = a.add_f64(-1.0);
        assert_eq!(b.to_f64(), 1e-20);
    }

    #[test]
    fn product_keeps_low_part() {
        // (1 + 2^-30)^2 = 1 + 2^-29 + 2^-60; the 2^-60 tail survives in dd.
        let x = Dd::from(1.0 + 2f64.powi(-30));
        let sq = x.mul(x);
        let expect_hi = 1.0 + 2f64.powi(-29);
        let tail = sq.sub(Dd::from(expect_hi));
        assert!((tail.to_f64() - 2f64.powi(-60)).abs() < 1e-25);
    }

    #[test]
    fn division_roundtrip() {
        let a = Dd::from(3.1415926535897931).add_f64(1.2246467991473532e-16);
        let b = Dd::from(2.7182818284590451).add_f64(1.4456468917292502e-16);
        let q = a.div(b);
        let back = q.mul(b);
        let err = back.sub(a);
        assert!(err.to_f64().abs() < 1e-30);
    }

    #[test]
    fn complex_matvec_matches_exact() {
        // A small case with exactly representable entries.
        let a = vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(0.5, -1.0),
            Complex64::new(-3.0, 0.25),
            Complex64::new(2.0, 2.0),
        ];
        let x = vec![Cdd::from_c64(Complex64::new(1.0, -1.0)), Cdd::from_c64(Complex64::new(0.25, 0.5))];
        let mut y = vec![Cdd::ZERO; 2];
        matvec_c64_cdd(&a, 2, 2, &x, &mut y);
        // column-major: y0 = a[0]*x0 + a[2]*x1, y1 = a[1]*x0 + a[3]*x1
        let y0 = Complex64::new(1.0, 2.0) * Complex64::new(1.0, -1.0)
            + Complex64::new(-3.0, 0.25) * Complex64::new(0.25, 0.5);
        let y1 = Complex64::new(0.5, -1.0) * Complex64::new(1.0, -1.0)
            + Complex64::new(2.0, 2.0) * Complex64::new(0.25, 0.5);
        assert!((y[0].to_c64() - y0).norm() < 1e-30);
        assert!((y[1].to_c64() - y1).norm() < 1e-30);
    }
}
