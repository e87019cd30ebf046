//! Float math routed through `std` or `libm` depending on crate features.

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("multitime-core requires either the `std` feature or the `libm` feature");

macro_rules! shim {
    ($name:ident, $libm:ident) => {
        #[inline]
        pub fn $name(x: f64) -> f64 {
            #[cfg(feature = "std")]
            {
                f64::$name(x)
            }
            #[cfg(not(feature = "std"))]
            {
                libm::$libm(x)
            }
        }
    };
}

shim!(exp, exp);
shim!(ln, log);
shim!(sqrt, sqrt);
shim!(sin, sin);
shim!(cos, cos);
shim!(sinh, sinh);
shim!(cosh, cosh);
shim!(tanh, tanh);

#[inline]
pub fn abs(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        f64::abs(x)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::fabs(x)
    }
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        f64::ceil(x)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::ceil(x)
    }
}

#[inline]
pub fn round(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        f64::round(x)
    }
    #[cfg(not(feature = "std"))]
    {
        libm::round(x)
    }
}

/// Integer power by binary exponentiation. Used for both `f64` and dual
/// numbers so that plain and jet evaluations share one multiplication tree.
#[inline]
pub fn powi<T>(base: T, n: i32, one: T, recip: impl Fn(T) -> T) -> T
where
    T: Copy + core::ops::Mul<Output = T>,
{
    if n == 0 {
        return one;
    }
    let mut e = n.unsigned_abs();
    let mut acc = one;
    let mut sq = base;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * sq;
        }
        e >>= 1;
        if e > 0 {
            sq = sq * sq;
        }
    }
    if n < 0 {
        recip(acc)
    } else {
        acc
    }
}
