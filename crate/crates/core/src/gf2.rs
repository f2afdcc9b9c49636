//! Bit-packed arithmetic in F_2[x].
//!
//! Bit `i` of a word is the coefficient of `x^i`. These are the kernels behind
//! [`Poly`](crate::Poly) when `p = 2` and behind the enumeration hot loops.

#[inline]
pub fn degree(a: u64) -> Option<u32> {
    if a == 0 {
        None
    } else {
        Some(63 - a.leading_zeros())
    }
}

/// Carry-less product. The caller guarantees `deg a + deg b <= 63`.
#[inline]
pub fn mul(a: u64, b: u64) -> u64 {
    let (mut small, big) = if a.count_ones() < b.count_ones() {
        (a, b)
    } else {
        (b, a)
    };
    let mut acc = 0u64;
    while small != 0 {
        let shift = small.trailing_zeros();
        acc ^= big << shift;
        small &= small - 1;
    }
    acc
}

/// Carry-less product without the degree restriction.
pub fn mul_wide(a: u64, b: u64) -> u128 {
    let mut small = a;
    let big = b as u128;
    let mut acc = 0u128;
    while small != 0 {
        let shift = small.trailing_zeros();
        acc ^= big << shift;
        small &= small - 1;
    }
    acc
}

/// Quotient and remainder. Panics if `b == 0`.
#[inline]
pub fn divmod(a: u64, b: u64) -> (u64, u64) {
    let db = degree(b).expect("division by zero polynomial");
    let mut q = 0u64;
    let mut r = a;
    while r != 0 {
        let dr = 63 - r.leading_zeros();
        if dr < db {
            break;
        }
        let shift = dr - db;
        q |= 1 << shift;
        r ^= b << shift;
    }
    (q, r)
}

#[inline]
pub fn rem(a: u64, b: u64) -> u64 {
    let db = degree(b).expect("division by zero polynomial");
    let mut r = a;
    while r != 0 {
        let dr = 63 - r.leading_zeros();
        if dr < db {
            break;
        }
        r ^= b << (dr - db);
    }
    r
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = rem(a, b);
        a = b;
        b = r;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_of_x_plus_one() {
        assert_eq!(mul(0b11, 0b11), 0b101);
    }

    #[test]
    fn x_cubed_by_x_plus_one() {
        // x^3 = (x+1)(x^2+x+1) + 1
        assert_eq!(divmod(0b1000, 0b11), (0b111, 1));
    }

    #[test]
    fn wide_matches_narrow() {
        assert_eq!(mul_wide(0b1011, 0b111) as u64, mul(0b1011, 0b111));
        assert_eq!(mul_wide(1 << 40, 1 << 40), 1u128 << 80);
    }

    #[test]
    fn gcd_shares_x_plus_one() {
        // x^2+x and x^2+1 = (x+1)^2
        assert_eq!(gcd(0b110, 0b101), 0b11);
    }
}
