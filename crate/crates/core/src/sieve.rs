//! Monic irreducibles by sieve, trial-division factorization, and prime counts
//! in residue classes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Poly};
use crate::gf2;

/// Largest sieve size (monic polynomials of the top degree) accepted by [`IrreducibleTable::build`].
pub const DEFAULT_SIEVE_BUDGET: u128 = 1 << 28;

const CACHE_MAGIC: &[u8; 4] = b"FFQI";
const CACHE_VERSION: u32 = 1;

/// A monic irreducible, identified by degree and enumeration index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime {
    pub degree: u32,
    pub index: u64,
}

impl Prime {
    pub fn to_poly(self, field: FieldSpec) -> Poly {
        Poly::monic_from_index(field, self.degree, self.index)
    }

    pub fn from_poly(poly: &Poly) -> Result<Self> {
        let degree = poly
            .degree()
            .ok_or_else(|| Error::NotMonic(poly.to_string()))?;
        Ok(Self {
            degree,
            index: poly.monic_index()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimePower {
    pub prime: Prime,
    pub multiplicity: u32,
}

/// Prime factorization of a monic polynomial, ordered by (degree, index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    field: FieldSpec,
    factors: Vec<PrimePower>,
}

impl Factorization {
    pub fn new(field: FieldSpec, factors: Vec<PrimePower>) -> Self {
        Self { field, factors }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn factors(&self) -> &[PrimePower] {
        &self.factors
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Number of distinct prime factors.
    pub fn omega(&self) -> u32 {
        self.factors.len() as u32
    }

    /// Number of prime factors counted with multiplicity.
    pub fn big_omega(&self) -> u32 {
        self.factors.iter().map(|f| f.multiplicity).sum()
    }

    /// `v_P(f)`, zero when `P` does not divide.
    pub fn valuation(&self, prime: Prime) -> u32 {
        self.factors
            .iter()
            .find(|f| f.prime == prime)
            .map_or(0, |f| f.multiplicity)
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|f| f.multiplicity == 1)
    }

    /// Multiplies the factorization back out.
    pub fn product(&self) -> Poly {
        self.factors.iter().fold(Poly::one(self.field), |acc, f| {
            &acc * &f.prime.to_poly(self.field).pow(f.multiplicity)
        })
    }

    /// Prime factors as polynomials, with multiplicities.
    pub fn to_polys(&self) -> Vec<(Poly, u32)> {
        self.factors
            .iter()
            .map(|f| (f.prime.to_poly(self.field), f.multiplicity))
            .collect()
    }
}

#[derive(Debug, Clone)]
struct DensePrime {
    prime: Prime,
    /// Monic coefficients, length `degree + 1`.
    coeffs: Vec<u8>,
}

/// Every monic irreducible up to `max_deg`, ordered within a degree by index.
#[derive(Debug, Clone)]
pub struct IrreducibleTable {
    field: FieldSpec,
    max_deg: u32,
    /// `primes[d]` holds the enumeration indices of degree-`d` irreducibles.
    primes: Vec<Vec<u64>>,
    /// p = 2: `(packed poly, prime)` in (degree, index) order.
    packed: Vec<(u64, Prime)>,
    /// p > 2: coefficient arrays in (degree, index) order.
    dense: Vec<DensePrime>,
}

impl IrreducibleTable {
    pub fn build(field: FieldSpec, max_deg: u32) -> Result<Self> {
        Self::build_with_budget(field, max_deg, DEFAULT_SIEVE_BUDGET)
    }

    /// Sieves degree by degree: a monic of degree `n` is composite iff it is a
    /// product `P * g` with `deg P <= n/2`.
    pub fn build_with_budget(field: FieldSpec, max_deg: u32, budget: u128) -> Result<Self> {
        if max_deg == 0 {
            return Err(Error::InvalidParameter("max_deg must be at least 1".into()));
        }
        let required = (field.p() as u128)
            .checked_pow(max_deg)
            .unwrap_or(u128::MAX);
        if required > budget || field.monic_count(max_deg).is_none() {
            return Err(Error::BudgetExceeded {
                what: format!("sieve of degree {max_deg} over {field}"),
                required,
                budget,
            });
        }
        let mut primes: Vec<Vec<u64>> = vec![Vec::new(); max_deg as usize + 1];
        primes[1] = (0..field.p() as u64).collect();
        for n in 2..=max_deg {
            let size = field.monic_count(n).expect("checked against budget") as usize;
            let mut composite = vec![0u64; size.div_ceil(64)];
            for d in 1..=n / 2 {
                for &index in &primes[d as usize] {
                    if field.is_binary() {
                        mark_multiples_gf2(&mut composite, n, d, index);
                    } else {
                        mark_multiples_dense(&mut composite, field, n, d, index);
                    }
                }
            }
            primes[n as usize] = (0..size as u64)
                .filter(|&i| composite[(i / 64) as usize] & (1 << (i % 64)) == 0)
                .collect();
        }
        Ok(Self::from_lists(field, max_deg, primes))
    }

    fn from_lists(field: FieldSpec, max_deg: u32, primes: Vec<Vec<u64>>) -> Self {
        let mut packed = Vec::new();
        let mut dense = Vec::new();
        for (d, list) in primes.iter().enumerate() {
            for &index in list {
                let prime = Prime {
                    degree: d as u32,
                    index,
                };
                if field.is_binary() {
                    packed.push((index | (1u64 << d), prime));
                } else {
                    dense.push(DensePrime {
                        prime,
                        coeffs: prime.to_poly(field).coeffs().to_vec(),
                    });
                }
            }
        }
        Self {
            field,
            max_deg,
            primes,
            packed,
            dense,
        }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn max_deg(&self) -> u32 {
        self.max_deg
    }

    /// `N_d`, the number of monic irreducibles of degree `d <= max_deg`.
    pub fn count(&self, d: u32) -> u64 {
        self.primes
            .get(d as usize)
            .map(|l| l.len() as u64)
            .expect("degree beyond table")
    }

    /// `N_d` from the table when tabulated, else from the necklace formula.
    pub fn count_any(&self, d: u32) -> Option<u128> {
        if d <= self.max_deg {
            Some(self.count(d) as u128)
        } else {
            necklace_count(self.field.q(), d)
        }
    }

    /// `N_d` as a float for any degree; exact while it fits in 53 bits.
    pub fn count_f64(&self, d: u32) -> f64 {
        match self.count_any(d) {
            Some(c) => c as f64,
            None => necklace_count_f64(self.field.q(), d),
        }
    }

    pub fn indices(&self, d: u32) -> &[u64] {
        &self.primes[d as usize]
    }

    pub fn primes_of_degree(&self, d: u32) -> impl Iterator<Item = Prime> + '_ {
        self.primes[d as usize]
            .iter()
            .map(move |&index| Prime { degree: d, index })
    }

    pub fn require(&self, degree: u32) -> Result<()> {
        if degree > self.max_deg {
            Err(Error::TableTooSmall {
                needed: degree,
                have: self.max_deg,
            })
        } else {
            Ok(())
        }
    }

    pub fn is_irreducible(&self, poly: &Poly) -> Result<bool> {
        let Some(d) = poly.degree() else {
            return Ok(false);
        };
        if d == 0 || !poly.is_monic() {
            return Ok(false);
        }
        self.require(d)?;
        let index = poly.monic_index()?;
        Ok(self.primes[d as usize].binary_search(&index).is_ok())
    }

    /// Factors a monic polynomial by trial division over primes of degree
    /// `<= deg f / 2`; what remains after that is irreducible.
    pub fn factorize(&self, f: &Poly) -> Result<Factorization> {
        if f.field() != self.field {
            return Err(Error::TableFieldMismatch {
                table: self.field.p(),
                input: f.field().p(),
            });
        }
        if !f.is_monic() {
            return Err(Error::NotMonic(f.to_string()));
        }
        let mut out = Vec::new();
        match f.to_packed() {
            Some(bits) => self.factor_packed(bits, &mut out)?,
            None => {
                let mut scratch = FactorScratch::default();
                self.factor_dense(f.coeffs(), &mut scratch, &mut out)?
            }
        }
        Ok(Factorization::new(self.field, out))
    }

    /// Hot-path factorization of a packed monic polynomial over F_2.
    pub(crate) fn factor_packed(&self, mut g: u64, out: &mut Vec<PrimePower>) -> Result<()> {
        out.clear();
        let mut deg = gf2::degree(g).expect("monic input");
        for &(bits, prime) in &self.packed {
            if 2 * prime.degree > deg {
                break;
            }
            let mut mult = 0;
            while gf2::rem(g, bits) == 0 {
                g = gf2::divmod(g, bits).0;
                mult += 1;
            }
            if mult > 0 {
                out.push(PrimePower {
                    prime,
                    multiplicity: mult,
                });
                deg = gf2::degree(g).expect("nonzero quotient");
            }
        }
        if deg > 0 {
            if deg >= 2 * (self.max_deg + 1) {
                return Err(Error::TableTooSmall {
                    needed: deg / 2,
                    have: self.max_deg,
                });
            }
            out.push(PrimePower {
                prime: Prime {
                    degree: deg,
                    index: g & !(1u64 << deg),
                },
                multiplicity: 1,
            });
        }
        Ok(())
    }

    /// Hot-path factorization of monic coefficients over F_p, p > 2.
    pub(crate) fn factor_dense(
        &self,
        coeffs: &[u8],
        scratch: &mut FactorScratch,
        out: &mut Vec<PrimePower>,
    ) -> Result<()> {
        out.clear();
        let p = self.field.p();
        let cur = &mut scratch.current;
        cur.clear();
        cur.extend_from_slice(coeffs);
        for dp in &self.dense {
            let pd = dp.prime.degree as usize;
            if 2 * pd > cur.len() - 1 {
                break;
            }
            let mut mult = 0;
            while divide_monic_in_place(cur, &dp.coeffs, p, &mut scratch.work) {
                mult += 1;
            }
            if mult > 0 {
                out.push(PrimePower {
                    prime: dp.prime,
                    multiplicity: mult,
                });
            }
        }
        let deg = (cur.len() - 1) as u32;
        if deg > 0 {
            if deg >= 2 * (self.max_deg + 1) {
                return Err(Error::TableTooSmall {
                    needed: deg / 2,
                    have: self.max_deg,
                });
            }
            let mut index = 0u64;
            for &c in cur[..deg as usize].iter().rev() {
                index = index
                    .checked_mul(p as u64)
                    .and_then(|v| v.checked_add(c as u64))
                    .ok_or(Error::IndexOverflow { p, degree: deg })?;
            }
            out.push(PrimePower {
                prime: Prime { degree: deg, index },
                multiplicity: 1,
            });
        }
        Ok(())
    }

    /// `pi_A(n; M, B)`: irreducibles of degree `n` congruent to `B` mod `M`.
    pub fn prime_count_ap(&self, n: u32, modulus: &Poly, residue: &Poly) -> Result<u64> {
        self.require(n)?;
        if !modulus.is_monic() || modulus.degree().unwrap_or(0) == 0 {
            return Err(Error::InvalidParameter(format!(
                "modulus {modulus} must be monic of positive degree"
            )));
        }
        if !modulus.gcd(residue)?.is_one() {
            return Err(Error::NotCoprime {
                residue: residue.to_string(),
                modulus: modulus.to_string(),
            });
        }
        let target = residue.rem(modulus)?;
        let counts = self.residue_counts(n, modulus)?;
        Ok(counts[residue_index(&target)])
    }

    /// Irreducibles of degree `n` tallied by residue mod `modulus`, indexed by
    /// the base-p value of the residue's coefficients.
    pub fn residue_counts(&self, n: u32, modulus: &Poly) -> Result<Vec<u64>> {
        self.require(n)?;
        let e = modulus.degree().ok_or(Error::DivisionByZero)?;
        let size = (self.field.p() as usize).pow(e);
        let mut counts = vec![0u64; size];
        if let Some(m) = modulus.to_packed() {
            for &index in self.indices(n) {
                let r = gf2::rem(index | (1u64 << n), m);
                counts[r as usize] += 1;
            }
        } else {
            for prime in self.primes_of_degree(n) {
                let r = prime.to_poly(self.field).rem(modulus)?;
                counts[residue_index(&r)] += 1;
            }
        }
        Ok(counts)
    }

    /// `sum_{d | n} d * N_d` against `q^n`.
    pub fn necklace_check(&self, n: u32) -> Result<NecklaceReport> {
        self.require(n)?;
        let weighted: u128 = (1..=n)
            .filter(|d| n.is_multiple_of(*d))
            .map(|d| d as u128 * self.count(d) as u128)
            .sum();
        let q_pow = (self.field.q() as u128).pow(n);
        Ok(NecklaceReport {
            n,
            weighted_sum: weighted,
            q_pow,
            matches: weighted == q_pow,
        })
    }

    /// Writes the little-endian `FFQI` cache format.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&self.field.p().to_le_bytes())?;
        w.write_all(&self.max_deg.to_le_bytes())?;
        for d in 1..=self.max_deg {
            let list = self.indices(d);
            w.write_all(&(list.len() as u64).to_le_bytes())?;
            for &index in list {
                let poly = Poly::monic_from_index(self.field, d, index);
                w.write_all(&poly.coeffs()[..d as usize])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a cache file, rejecting it unless it passes the necklace identity
    /// at every degree and its records are sorted and in range.
    pub fn load_cache(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let corrupt = |msg: &str| Error::CorruptCache(format!("{}: {msg}", path.display()));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| corrupt("truncated header"))?;
        if &magic != CACHE_MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = read_u32(&mut r).map_err(|_| corrupt("truncated header"))?;
        if version != CACHE_VERSION {
            return Err(corrupt(&format!("unsupported version {version}")));
        }
        let p = read_u32(&mut r).map_err(|_| corrupt("truncated header"))?;
        let field = FieldSpec::new(p).map_err(|_| corrupt("bad modulus"))?;
        let max_deg = read_u32(&mut r).map_err(|_| corrupt("truncated header"))?;
        if max_deg == 0 || field.monic_count(max_deg).is_none() {
            return Err(corrupt("bad max_deg"));
        }
        let mut primes = vec![Vec::new(); max_deg as usize + 1];
        let mut record = vec![0u8; max_deg as usize];
        for d in 1..=max_deg {
            let count = read_u64(&mut r).map_err(|_| corrupt("truncated count"))?;
            let bound = field.monic_count(d).expect("checked");
            if count > bound {
                return Err(corrupt("count exceeds p^d"));
            }
            let mut list = Vec::with_capacity(count as usize);
            for _ in 0..count {
                let rec = &mut record[..d as usize];
                r.read_exact(rec).map_err(|_| corrupt("truncated record"))?;
                let mut index = 0u64;
                for &c in rec.iter().rev() {
                    if c as u32 >= p {
                        return Err(corrupt("coefficient out of range"));
                    }
                    index = index * p as u64 + c as u64;
                }
                if list.last().is_some_and(|&last| last >= index) {
                    return Err(corrupt("records not strictly increasing"));
                }
                list.push(index);
            }
            primes[d as usize] = list;
        }
        let mut tail = [0u8; 1];
        if r.read(&mut tail)? != 0 {
            return Err(corrupt("trailing bytes"));
        }
        let table = Self::from_lists(field, max_deg, primes);
        for n in 1..=max_deg {
            if !table.necklace_check(n)?.matches {
                return Err(corrupt(&format!("necklace identity fails at degree {n}")));
            }
        }
        Ok(table)
    }
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NecklaceReport {
    pub n: u32,
    pub weighted_sum: u128,
    pub q_pow: u128,
    pub matches: bool,
}

#[derive(Debug, Default)]
pub(crate) struct FactorScratch {
    current: Vec<u8>,
    work: Vec<u32>,
}

/// Divides `cur` by the monic `divisor` in place if the remainder is zero.
fn divide_monic_in_place(cur: &mut Vec<u8>, divisor: &[u8], p: u32, work: &mut Vec<u32>) -> bool {
    let db = divisor.len() - 1;
    if cur.len() <= db {
        return false;
    }
    work.clear();
    work.extend(cur.iter().map(|&c| c as u32));
    let qlen = cur.len() - db;
    let mut quot = [0u8; 64];
    for i in (0..qlen).rev() {
        let c = work[i + db];
        if c == 0 {
            continue;
        }
        quot[i] = c as u8;
        for (j, &b) in divisor.iter().enumerate() {
            let k = i + j;
            work[k] = (work[k] + p * p - c * b as u32) % p;
        }
    }
    if work[..db].iter().any(|&c| c != 0) {
        return false;
    }
    cur.clear();
    cur.extend_from_slice(&quot[..qlen]);
    true
}

/// Base-p value of a residue's coefficients.
pub fn residue_index(r: &Poly) -> usize {
    let p = r.field().p() as usize;
    r.coeffs()
        .iter()
        .rev()
        .fold(0usize, |acc, &c| acc * p + c as usize)
}

fn mark_multiples_gf2(composite: &mut [u64], n: u32, d: u32, index: u64) {
    let prime = index | (1u64 << d);
    let m = n - d;
    let mask = (1u64 << n) - 1;
    let mut prod = prime << m;
    let mut mark = |prod: u64| {
        let i = prod & mask;
        composite[(i / 64) as usize] |= 1 << (i % 64);
    };
    mark(prod);
    // Gray-code walk over the lower coefficients of the cofactor.
    for k in 1u64..(1u64 << m) {
        prod ^= prime << k.trailing_zeros();
        mark(prod);
    }
}

fn mark_multiples_dense(composite: &mut [u64], field: FieldSpec, n: u32, d: u32, index: u64) {
    let p = field.p();
    let prime = Poly::monic_from_index(field, d, index);
    let pc: Vec<u32> = prime.coeffs().iter().map(|&c| c as u32).collect();
    let m = (n - d) as usize;
    let mut pow = vec![1u64; n as usize + 1];
    for j in 1..pow.len() {
        pow[j] = pow[j - 1] * p as u64;
    }
    // Product coefficients, starting from prime * x^m.
    let mut prod = vec![0u32; n as usize + 1];
    for (k, &c) in pc.iter().enumerate() {
        prod[m + k] = c;
    }
    let mut idx: u64 = (0..n as usize).map(|j| prod[j] as u64 * pow[j]).sum();
    let mut digits = vec![0u32; m];
    let mut mark = |i: u64| composite[(i / 64) as usize] |= 1 << (i % 64);
    mark(idx);
    loop {
        // Incrementing digit i adds prime * x^i; a digit wrapping p-1 -> 0 is also +1 mod p.
        let mut i = 0;
        loop {
            if i == m {
                return;
            }
            for (k, &c) in pc.iter().enumerate() {
                let j = i + k;
                let old = prod[j];
                let new = (old + c) % p;
                prod[j] = new;
                idx = idx
                    .wrapping_add(new as u64 * pow[j])
                    .wrapping_sub(old as u64 * pow[j]);
            }
            digits[i] += 1;
            if digits[i] == p {
                digits[i] = 0;
                i += 1;
            } else {
                break;
            }
        }
        mark(idx);
    }
}

fn moebius_small(mut n: u32) -> i32 {
    let mut result = 1;
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            n /= d;
            if n.is_multiple_of(d) {
                return 0;
            }
            result = -result;
        }
        d += 1;
    }
    if n > 1 {
        result = -result;
    }
    result
}

/// `N_d = (1/d) sum_{e | d} mu(d/e) q^e`, if it fits.
pub fn necklace_count(q: u32, d: u32) -> Option<u128> {
    if d == 0 {
        return None;
    }
    let mut total: i128 = 0;
    for e in (1..=d).filter(|e| d.is_multiple_of(*e)) {
        let term = (q as i128).checked_pow(e)?;
        total = total.checked_add(moebius_small(d / e) as i128 * term)?;
    }
    Some((total / d as i128) as u128)
}

pub fn necklace_count_f64(q: u32, d: u32) -> f64 {
    let total: f64 = (1..=d)
        .filter(|e| d.is_multiple_of(*e))
        .map(|e| moebius_small(d / e) as f64 * (q as f64).powi(e as i32))
        .sum();
    total / d as f64
}

/// `Phi(P^m) = q^{m d} - q^{(m-1) d}` for an irreducible of degree `d`.
pub fn phi_prime_power(q: u32, d: u32, m: u32) -> u128 {
    if m == 0 {
        return 1;
    }
    let q = q as u128;
    q.pow(m * d) - q.pow((m - 1) * d)
}
