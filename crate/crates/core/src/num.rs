//! Scalar traits shared by the integer normal forms and the simplex solver.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed};

/// Integer ring usable by the Hermite/Smith routines.
pub trait LatticeInt: Integer + Signed + Clone + Debug + FromPrimitive {}

impl<T> LatticeInt for T where T: Integer + Signed + Clone + Debug + FromPrimitive {}

/// Ordered field usable by the simplex solver and the rational linear algebra.
///
/// Exact results require an exact field such as [`BigRational`]; floating point
/// types satisfy the bound but comparisons are then only as good as the rounding.
pub trait Scalar: Num + Signed + Clone + PartialOrd + Debug + FromPrimitive {}

impl<T> Scalar for T where T: Num + Signed + Clone + PartialOrd + Debug + FromPrimitive {}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Converts an integral rational to `i64`, panicking on overflow or a fraction.
pub fn rat_to_i64(r: &BigRational) -> i64 {
    assert!(r.is_integer(), "expected an integral value, got {r}");
    i64::try_from(r.to_integer()).expect("integer overflow converting to i64")
}

pub fn big_to_i64(b: &BigInt) -> i64 {
    i64::try_from(b.clone()).expect("integer overflow converting to i64")
}

pub fn gcd_i64(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

pub fn lcm_big(a: &BigInt, b: &BigInt) -> BigInt {
    a.lcm(b)
}
