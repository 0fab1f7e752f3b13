//! Float routines that `core` lacks. Everything goes through `libm` so that
//! results do not depend on whether `std` is linked.

pub(crate) use libm::{ceil, exp, log, pow, sin, sqrt};
#[cfg(test)]
pub(crate) use libm::cos;

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn powi(x: f64, n: i32) -> f64 {
    let mut acc = 1.0;
    let mut base = if n < 0 { 1.0 / x } else { x };
    let mut e = n.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}
