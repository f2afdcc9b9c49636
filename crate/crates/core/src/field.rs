//! Exact arithmetic in F_p[x] and the fixed enumeration of monic polynomials.
//!
//! A [`Poly`] stores one residue per byte, lowest degree first; the zero
//! polynomial is the empty vector and reports `degree() == None`. When
//! `p = 2` multiplication and division run on a bit-packed word instead.
//!
//! Monic polynomials of degree `n` are enumerated by index: the `n` lower
//! coefficients are the base-`p` digits of the index with `c_0` least
//! significant. Every partitioned computation in the crate relies on this
//! order.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::gf2;

pub const MAX_MODULUS: u32 = 251;

/// A prime field F_p with `2 <= p <= 251`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldSpec {
    p: u32,
}

impl FieldSpec {
    pub fn new(p: u32) -> Result<Self> {
        if !(2..=MAX_MODULUS).contains(&p) || !is_prime(p) {
            return Err(Error::InvalidField(p));
        }
        Ok(Self { p })
    }

    #[inline]
    pub fn p(self) -> u32 {
        self.p
    }

    /// Alias for `p`: the size of the field.
    #[inline]
    pub fn q(self) -> u32 {
        self.p
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        (a + b) % self.p
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        (a + self.p - b) % self.p
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        (a * b) % self.p
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        (self.p - a) % self.p
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn inv(self, a: u32) -> u32 {
        assert!(!a.is_multiple_of(self.p), "inverse of zero in F_{}", self.p);
        // Fermat: a^(p-2)
        let mut base = a % self.p;
        let mut exp = self.p - 2;
        let mut acc = 1;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// `p^n`, the number of monic polynomials of degree `n`, if it fits in 64 bits.
    pub fn monic_count(self, n: u32) -> Option<u64> {
        (self.p as u64).checked_pow(n)
    }

    pub fn is_binary(self) -> bool {
        self.p == 2
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.p)
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// A polynomial over F_p.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    field: FieldSpec,
    coeffs: Vec<u8>,
}

impl Poly {
    pub fn zero(field: FieldSpec) -> Self {
        Self {
            field,
            coeffs: Vec::new(),
        }
    }

    pub fn one(field: FieldSpec) -> Self {
        Self::constant(field, 1)
    }

    pub fn x(field: FieldSpec) -> Self {
        Self {
            field,
            coeffs: vec![0, 1],
        }
    }

    /// The constant `c mod p`.
    pub fn constant(field: FieldSpec, c: u32) -> Self {
        let mut poly = Self {
            field,
            coeffs: vec![(c % field.p) as u8],
        };
        poly.trim();
        poly
    }

    /// `x^n`.
    pub fn monomial(field: FieldSpec, n: usize) -> Self {
        let mut coeffs = vec![0u8; n + 1];
        coeffs[n] = 1;
        Self { field, coeffs }
    }

    /// Builds a polynomial from coefficients `c_0, c_1, ...`; trailing zeros are dropped.
    pub fn from_coeffs<T: Into<u64> + Copy>(field: FieldSpec, coeffs: &[T]) -> Result<Self> {
        let mut out = Vec::with_capacity(coeffs.len());
        for &c in coeffs {
            let c: u64 = c.into();
            if c >= field.p as u64 {
                return Err(Error::CoefficientOutOfRange {
                    coeff: c,
                    p: field.p,
                });
            }
            out.push(c as u8);
        }
        let mut poly = Self { field, coeffs: out };
        poly.trim();
        Ok(poly)
    }

    /// Coefficients reduced mod p instead of rejected.
    pub fn from_residues(field: FieldSpec, coeffs: &[u32]) -> Self {
        let mut poly = Self {
            field,
            coeffs: coeffs.iter().map(|&c| (c % field.p) as u8).collect(),
        };
        poly.trim();
        poly
    }

    pub(crate) fn from_raw(field: FieldSpec, coeffs: Vec<u8>) -> Self {
        let mut poly = Self { field, coeffs };
        poly.trim();
        poly
    }

    /// Monic polynomial of degree `n` with enumeration index `index`.
    pub fn monic_from_index(field: FieldSpec, n: u32, index: u64) -> Self {
        let p = field.p as u64;
        let mut coeffs = Vec::with_capacity(n as usize + 1);
        let mut rest = index;
        for _ in 0..n {
            coeffs.push((rest % p) as u8);
            rest /= p;
        }
        debug_assert_eq!(rest, 0, "index out of range for degree {n}");
        coeffs.push(1);
        Self { field, coeffs }
    }

    /// Bit-packed form for `p = 2`, if the degree is at most 63.
    pub fn to_packed(&self) -> Option<u64> {
        if self.field.p != 2 || self.coeffs.len() > 64 {
            return None;
        }
        Some(
            self.coeffs
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &c)| acc | ((c as u64) << i)),
        )
    }

    pub fn from_packed(field: FieldSpec, bits: u64) -> Self {
        debug_assert_eq!(field.p, 2);
        let len = gf2::degree(bits).map_or(0, |d| d as usize + 1);
        let coeffs = (0..len).map(|i| ((bits >> i) & 1) as u8).collect();
        Self { field, coeffs }
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    #[inline]
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    #[inline]
    pub fn coeffs(&self) -> &[u8] {
        &self.coeffs
    }

    /// Coefficient of `x^i` (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> u32 {
        self.coeffs.get(i).map_or(0, |&c| c as u32)
    }

    /// `None` for the zero polynomial.
    #[inline]
    pub fn degree(&self) -> Option<u32> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() as u32 - 1)
        }
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last() == Some(&1)
    }

    pub fn leading_coeff(&self) -> Option<u32> {
        self.coeffs.last().map(|&c| c as u32)
    }

    /// `|f| = q^deg f`, and `|0| = 0`. Panics if the value exceeds `u128`.
    pub fn norm(&self) -> u128 {
        self.checked_norm()
            .expect("norm exceeds u128; use norm_f64 for large degrees")
    }

    pub fn checked_norm(&self) -> Option<u128> {
        match self.degree() {
            None => Some(0),
            Some(d) => (self.field.p as u128).checked_pow(d),
        }
    }

    pub fn norm_f64(&self) -> f64 {
        match self.degree() {
            None => 0.0,
            Some(d) => (self.field.p as f64).powi(d as i32),
        }
    }

    /// Enumeration index of a monic polynomial: its lower coefficients read in base p.
    pub fn monic_index(&self) -> Result<u64> {
        if !self.is_monic() {
            return Err(Error::NotMonic(self.to_string()));
        }
        let n = self.coeffs.len() - 1;
        let p = self.field.p as u64;
        let mut index = 0u64;
        for &c in self.coeffs[..n].iter().rev() {
            index = index
                .checked_mul(p)
                .and_then(|v| v.checked_add(c as u64))
                .ok_or(Error::IndexOverflow {
                    p: self.field.p,
                    degree: n as u32,
                })?;
        }
        Ok(index)
    }

    fn check_field(&self, other: &Poly) -> Result<()> {
        if self.field != other.field {
            Err(Error::FieldMismatch(self.field.p, other.field.p))
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &Poly) -> Result<Poly> {
        self.check_field(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn try_sub(&self, other: &Poly) -> Result<Poly> {
        self.check_field(other)?;
        Ok(self.add_unchecked(&other.neg()))
    }

    pub fn try_mul(&self, other: &Poly) -> Result<Poly> {
        self.check_field(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn add_unchecked(&self, other: &Poly) -> Poly {
        let f = self.field;
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|i| f.add(self.coeff(i), other.coeff(i)) as u8)
            .collect();
        Poly::from_raw(f, coeffs)
    }

    pub fn neg(&self) -> Poly {
        let f = self.field;
        Poly {
            field: f,
            coeffs: self.coeffs.iter().map(|&c| f.neg(c as u32) as u8).collect(),
        }
    }

    /// Multiplies by the scalar `c`.
    pub fn scale(&self, c: u32) -> Poly {
        let f = self.field;
        Poly::from_raw(
            f,
            self.coeffs
                .iter()
                .map(|&a| f.mul(a as u32, c % f.p) as u8)
                .collect(),
        )
    }

    fn mul_unchecked(&self, other: &Poly) -> Poly {
        let f = self.field;
        if self.is_zero() || other.is_zero() {
            return Poly::zero(f);
        }
        if f.p == 2 && self.coeffs.len() + other.coeffs.len() <= 65 {
            let a = self.to_packed().unwrap_or_default();
            let b = other.to_packed().unwrap_or_default();
            return Poly::from_packed(f, gf2::mul(a, b));
        }
        let p = f.p as u64;
        let mut acc = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                acc[i + j] = (acc[i + j] + a as u64 * b as u64) % p;
            }
        }
        Poly::from_raw(f, acc.into_iter().map(|c| c as u8).collect())
    }

    /// Returns `(s, t)` with `self = s * divisor + t` and `deg t < deg divisor`.
    pub fn divmod(&self, divisor: &Poly) -> Result<(Poly, Poly)> {
        self.check_field(divisor)?;
        let f = self.field;
        let db = divisor.degree().ok_or(Error::DivisionByZero)? as usize;
        if f.p == 2 && self.coeffs.len() <= 64 {
            let a = self.to_packed().unwrap_or_default();
            let b = divisor.to_packed().unwrap_or_default();
            let (s, t) = gf2::divmod(a, b);
            return Ok((Poly::from_packed(f, s), Poly::from_packed(f, t)));
        }
        let mut rem: Vec<u32> = self.coeffs.iter().map(|&c| c as u32).collect();
        if rem.len() <= db {
            return Ok((Poly::zero(f), self.clone()));
        }
        let lead_inv = f.inv(divisor.coeffs[db] as u32);
        let mut quot = vec![0u8; rem.len() - db];
        for i in (db..rem.len()).rev() {
            let c = f.mul(rem[i], lead_inv);
            if c == 0 {
                continue;
            }
            quot[i - db] = c as u8;
            for (j, &b) in divisor.coeffs.iter().enumerate() {
                let k = i - db + j;
                rem[k] = f.sub(rem[k], f.mul(c, b as u32));
            }
        }
        rem.truncate(db);
        Ok((
            Poly::from_raw(f, quot),
            Poly::from_raw(f, rem.into_iter().map(|c| c as u8).collect()),
        ))
    }

    pub fn rem(&self, divisor: &Poly) -> Result<Poly> {
        Ok(self.divmod(divisor)?.1)
    }

    pub fn divides(&self, other: &Poly) -> Result<bool> {
        Ok(other.rem(self)?.is_zero())
    }

    /// Scales to leading coefficient 1; zero stays zero.
    pub fn monic(&self) -> Poly {
        match self.leading_coeff() {
            None | Some(1) => self.clone(),
            Some(c) => self.scale(self.field.inv(c)),
        }
    }

    /// Monic gcd. `gcd(0, 0)` is an error.
    pub fn gcd(&self, other: &Poly) -> Result<Poly> {
        self.check_field(other)?;
        if self.is_zero() && other.is_zero() {
            return Err(Error::GcdOfZeros);
        }
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b)?;
            a = b;
            b = r;
        }
        Ok(a.monic())
    }

    /// Monic lcm; zero if either argument is zero.
    pub fn lcm(&self, other: &Poly) -> Result<Poly> {
        self.check_field(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Poly::zero(self.field));
        }
        let g = self.gcd(other)?;
        let (q, _) = self.mul_unchecked(other).divmod(&g)?;
        Ok(q.monic())
    }

    /// `(g, s, t)` with `g = s*self + t*other` and `g` monic.
    pub fn ext_gcd(&self, other: &Poly) -> Result<(Poly, Poly, Poly)> {
        self.check_field(other)?;
        if self.is_zero() && other.is_zero() {
            return Err(Error::GcdOfZeros);
        }
        let f = self.field;
        let (mut r0, mut r1) = (self.clone(), other.clone());
        let (mut s0, mut s1) = (Poly::one(f), Poly::zero(f));
        let (mut t0, mut t1) = (Poly::zero(f), Poly::one(f));
        while !r1.is_zero() {
            let (q, r) = r0.divmod(&r1)?;
            let s2 = s0.add_unchecked(&q.mul_unchecked(&s1).neg());
            let t2 = t0.add_unchecked(&q.mul_unchecked(&t1).neg());
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s2);
            t0 = std::mem::replace(&mut t1, t2);
        }
        let lead = r0.leading_coeff().expect("nonzero gcd");
        let inv = f.inv(lead);
        Ok((r0.scale(inv), s0.scale(inv), t0.scale(inv)))
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one(self.field);
        for _ in 0..e {
            acc = acc.mul_unchecked(self);
        }
        acc
    }
}

impl fmt::Display for Poly {
    /// Canonical form: descending degree, unit coefficients omitted, `x` for `x^1`,
    /// bare residue for the constant term and `0` for the zero polynomial.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if !first {
                f.write_str("+")?;
            }
            first = false;
            match (i, c) {
                (0, c) => write!(f, "{c}")?,
                (1, 1) => f.write_str("x")?,
                (1, c) => write!(f, "{c}x")?,
                (i, 1) => write!(f, "x^{i}")?,
                (i, c) => write!(f, "{c}x^{i}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({} over F_{})", self, self.field.p)
    }
}

impl PartialOrd for Poly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Degree first, then the enumeration index (coefficients from the top down).
impl Ord for Poly {
    fn cmp(&self, other: &Self) -> Ordering {
        self.field
            .cmp(&other.field)
            .then(self.coeffs.len().cmp(&other.coeffs.len()))
            .then_with(|| self.coeffs.iter().rev().cmp(other.coeffs.iter().rev()))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl std::ops::$trait<&Poly> for &Poly {
            type Output = Poly;
            fn $method(self, rhs: &Poly) -> Poly {
                self.$inner(rhs).expect("operands from different fields")
            }
        }
        impl std::ops::$trait<Poly> for Poly {
            type Output = Poly;
            fn $method(self, rhs: Poly) -> Poly {
                (&self)
                    .$inner(&rhs)
                    .expect("operands from different fields")
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);

/// Parses the canonical grammar, e.g. `x^3+2x+1`.
///
/// Whitespace is ignored and terms may come in any order, but every degree may
/// appear at most once. Coefficients `>= p` are rejected rather than reduced.
pub fn parse_poly(text: &str, field: FieldSpec) -> Result<Poly> {
    let syntax = |reason: &str| Error::Syntax {
        input: text.to_string(),
        reason: reason.to_string(),
    };
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(syntax("empty input"));
    }
    if compact == "0" {
        return Ok(Poly::zero(field));
    }
    let mut coeffs: Vec<u64> = Vec::new();
    let mut seen: Vec<bool> = Vec::new();
    for term in compact.split('+') {
        if term.is_empty() {
            return Err(syntax("empty term"));
        }
        let (coeff_str, rest) = match term.find('x') {
            Some(pos) => (&term[..pos], Some(&term[pos + 1..])),
            None => (term, None),
        };
        let coeff: u64 = if coeff_str.is_empty() {
            if rest.is_none() {
                return Err(syntax("empty term"));
            }
            1
        } else {
            if !coeff_str.bytes().all(|b| b.is_ascii_digit()) {
                return Err(syntax("coefficient must be a nonnegative integer"));
            }
            coeff_str
                .parse()
                .map_err(|_| syntax("coefficient too large"))?
        };
        let degree: usize = match rest {
            None => 0,
            Some("") => 1,
            Some(exp) => {
                let digits = exp
                    .strip_prefix('^')
                    .ok_or_else(|| syntax("expected '^' after x"))?;
                if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(syntax("exponent must be a nonnegative integer"));
                }
                digits.parse().map_err(|_| syntax("exponent too large"))?
            }
        };
        if degree > 4096 {
            return Err(syntax("exponent too large"));
        }
        if coeff >= field.p as u64 {
            return Err(Error::CoefficientOutOfRange { coeff, p: field.p });
        }
        if coeff == 0 {
            return Err(syntax("zero coefficient in a term"));
        }
        if coeffs.len() <= degree {
            coeffs.resize(degree + 1, 0);
            seen.resize(degree + 1, false);
        }
        if seen[degree] {
            return Err(syntax("repeated degree"));
        }
        seen[degree] = true;
        coeffs[degree] = coeff;
    }
    Poly::from_coeffs(field, &coeffs)
}

/// Iterator over monic polynomials of one degree, in enumeration order.
#[derive(Debug, Clone)]
pub struct MonicRange {
    field: FieldSpec,
    degree: u32,
    next: u64,
    end: u64,
}

impl Iterator for MonicRange {
    type Item = Poly;

    fn next(&mut self) -> Option<Poly> {
        if self.next >= self.end {
            return None;
        }
        let poly = Poly::monic_from_index(self.field, self.degree, self.next);
        self.next += 1;
        Some(poly)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for MonicRange {}

/// Monic polynomials of degree `n` with index in `lo..hi`.
pub fn enumerate_monic(field: FieldSpec, n: u32, lo: u64, hi: u64) -> Result<MonicRange> {
    let total = field.monic_count(n).ok_or(Error::IndexOverflow {
        p: field.p,
        degree: n,
    })?;
    if lo > hi || hi > total {
        return Err(Error::InvalidParameter(format!(
            "index range {lo}..{hi} outside 0..{total}"
        )));
    }
    Ok(MonicRange {
        field,
        degree: n,
        next: lo,
        end: hi,
    })
}

/// All monic polynomials of degree `n`.
pub fn all_monic(field: FieldSpec, n: u32) -> Result<MonicRange> {
    let total = field.monic_count(n).ok_or(Error::IndexOverflow {
        p: field.p,
        degree: n,
    })?;
    enumerate_monic(field, n, 0, total)
}
