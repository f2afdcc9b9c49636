//! Predicted main terms as truncated Euler products of local factors, each
//! carrying a rigorous bound on what the truncation dropped.

use std::collections::HashMap;
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use num_rational::Ratio;

use crate::arith::{distance, FunctionSpec};
use crate::error::{Error, Result};
use crate::field::{FieldSpec, Poly};
use crate::sieve::{IrreducibleTable, Prime};

pub const DEFAULT_DEPTH: u32 = 64;

/// Extra degrees scanned past the cutoff when bounding an infinite tail.
const TAIL_SCAN: u32 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Averages over monic polynomials.
    Monic,
    /// Averages over irreducibles.
    Prime,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Monic => "monic",
            Mode::Prime => "prime",
        })
    }
}

/// `v_P(h2 - h1)`, infinite when the shifts coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(u32),
    Infinite,
}

/// A value together with a bound on `|true value - value|`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TruncatedValue {
    pub value: Complex64,
    pub tail_bound: f64,
}

impl TruncatedValue {
    pub fn new(value: Complex64, tail_bound: f64) -> Self {
        Self { value, tail_bound }
    }

    pub fn exact(value: Complex64) -> Self {
        Self::new(value, 0.0)
    }

    pub fn one() -> Self {
        Self::exact(Complex64::new(1.0, 0.0))
    }

    /// Raises to the `n`-th power, bounding the error by `(|v| + t)^n - |v|^n`.
    pub fn powf(self, n: f64) -> Self {
        if n == 0.0 {
            return Self::one();
        }
        let r = self.value.norm();
        if r == 0.0 {
            return Self::new(self.value, self.tail_bound.powf(n));
        }
        let value = if n <= 64.0 && n.fract() == 0.0 {
            self.value.powu(n as u32)
        } else {
            (self.value.ln() * n).exp()
        };
        let tail = r.powf(n) * (n * (self.tail_bound / r).ln_1p()).exp_m1();
        Self::new(value, tail)
    }

    /// Whether `other` lies within `tail_bound + slack` of the value.
    pub fn covers(&self, other: Complex64, slack: f64) -> bool {
        (self.value - other).norm() <= self.tail_bound + slack
    }
}

impl Mul for TruncatedValue {
    type Output = TruncatedValue;

    fn mul(self, rhs: Self) -> Self {
        let tail = self.value.norm() * rhs.tail_bound
            + rhs.value.norm() * self.tail_bound
            + self.tail_bound * rhs.tail_bound;
        Self::new(self.value * rhs.value, tail)
    }
}

/// The shifts of a two-point correlation and their difference `h2 - h1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftPair {
    h1: Poly,
    h2: Poly,
    delta: Poly,
}

impl ShiftPair {
    pub fn new(h1: Poly, h2: Poly) -> Result<Self> {
        let delta = h2.try_sub(&h1)?;
        Ok(Self { h1, h2, delta })
    }

    pub fn h1(&self) -> &Poly {
        &self.h1
    }

    pub fn h2(&self) -> &Poly {
        &self.h2
    }

    pub fn delta(&self) -> &Poly {
        &self.delta
    }

    pub fn field(&self) -> FieldSpec {
        self.delta.field()
    }

    pub fn valuation(&self, prime: &Poly) -> Result<Valuation> {
        if self.delta.is_zero() {
            return Ok(Valuation::Infinite);
        }
        let mut rest = self.delta.clone();
        let mut k = 0;
        loop {
            let (q, r) = rest.divmod(prime)?;
            if !r.is_zero() {
                return Ok(Valuation::Finite(k));
            }
            rest = q;
            k += 1;
        }
    }

    /// Primes dividing `h2 - h1` with their valuations; empty when the shifts coincide.
    pub fn dividing_primes(&self, table: &IrreducibleTable) -> Result<HashMap<Prime, u32>> {
        if self.delta.is_zero() {
            return Ok(HashMap::new());
        }
        let fact = table.factorize(&self.delta.monic())?;
        Ok(fact
            .factors()
            .iter()
            .map(|f| (f.prime, f.multiplicity))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MainTermOptions {
    /// Prime-power depth of every local sum.
    pub depth: u32,
    /// Last degree multiplied out for an infinite horizon; defaults to the table's bound.
    pub cutoff: Option<u32>,
}

impl Default for MainTermOptions {
    fn default() -> Self {
        Self {
            depth: DEFAULT_DEPTH,
            cutoff: None,
        }
    }
}

fn require_unit_bounded(specs: [&FunctionSpec; 2]) -> Result<()> {
    for s in specs {
        if !s.flags().unit_bounded {
            return Err(Error::NotUnitBounded(s.name().to_string()));
        }
    }
    Ok(())
}

fn require_depth(depth: u32) -> Result<()> {
    if depth < 2 {
        return Err(Error::InvalidParameter(format!(
            "depth must be at least 2, got {depth}"
        )));
    }
    Ok(())
}

/// Smallest `g` with `q^g >= 9` (monic) or `q^g >= 17` (prime).
pub fn gamma_threshold(mode: Mode, q: u32) -> u32 {
    let target = match mode {
        Mode::Monic => 9,
        Mode::Prime => 17,
    };
    let mut g = 0;
    let mut power = 1u64;
    while power < target {
        power *= q as u64;
        g += 1;
    }
    g
}

pub fn default_gamma(shifts: &ShiftPair, mode: Mode) -> u32 {
    let threshold = gamma_threshold(mode, shifts.field().q());
    shifts.delta().degree().unwrap_or(0).max(threshold)
}

fn q_inv_pow(q: u32, d: u32) -> f64 {
    (-(d as f64) * (q as f64).ln()).exp()
}

/// `sum_{s > depth} min(2s+1, 2k+2) x^s`.
fn pair_count_tail(x: f64, depth: u32, k: Valuation) -> f64 {
    let m = depth as f64;
    let head = x.powi(depth as i32 + 1);
    let all = head * ((2.0 * m + 3.0) / (1.0 - x) + 2.0 * x / ((1.0 - x) * (1.0 - x)));
    match k {
        Valuation::Finite(k) => all.min(head * (2.0 * k as f64 + 2.0) / (1.0 - x)),
        Valuation::Infinite => all,
    }
}

/// `W_P`: the constrained double sum of `alpha_1(P^m1) alpha_2(P^m2) w(P^max(m1,m2))`
/// over `min(m1, m2) <= k`.
pub fn local_factor(
    field: FieldSpec,
    prime: Prime,
    k: Valuation,
    psi1: &FunctionSpec,
    psi2: &FunctionSpec,
    mode: Mode,
    depth: u32,
) -> Result<TruncatedValue> {
    require_unit_bounded([psi1, psi2])?;
    require_depth(depth)?;
    let x = q_inv_pow(field.q(), prime.degree);
    let weight = |s: u32| match (mode, s) {
        (_, 0) => 1.0,
        (Mode::Monic, s) => x.powi(s as i32),
        (Mode::Prime, s) => x.powi(s as i32) / (1.0 - x),
    };
    let v1: Vec<Complex64> = (0..=depth).map(|m| psi1.value(prime, m)).collect();
    let v2: Vec<Complex64> = (0..=depth).map(|m| psi2.value(prime, m)).collect();
    let alpha = |v: &[Complex64], m: usize| if m == 0 { v[0] } else { v[m] - v[m - 1] };
    let limit = match k {
        Valuation::Finite(k) => k.min(depth) as usize,
        Valuation::Infinite => depth as usize,
    };
    let mut total = Complex64::new(0.0, 0.0);
    for s in 0..=depth as usize {
        let (a1, a2) = (alpha(&v1, s), alpha(&v2, s));
        // Partial sums of alpha telescope to psi.
        let term = if s <= limit {
            if s == 0 {
                a1 * a2
            } else {
                a1 * v2[s - 1] + a2 * v1[s - 1] + a1 * a2
            }
        } else {
            a1 * v2[limit] + a2 * v1[limit]
        };
        total += term * weight(s as u32);
    }
    let mut tail = 4.0 * pair_count_tail(x, depth, k);
    if mode == Mode::Prime {
        tail /= 1.0 - x;
    }
    Ok(TruncatedValue::new(total, tail))
}

/// `1 - 4 / (q^{k d} (q^d + 1))`, the local factor of truncated Liouville at a
/// prime of degree `d <= y`.
pub fn liouville_local_closed(d: u32, k: u32, q: u32) -> Result<Ratio<i128>> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "prime degree must be positive".into(),
        ));
    }
    let overflow = || Error::InvalidParameter(format!("q^(({k}+1){d}) overflows"));
    let qd = (q as i128).checked_pow(d).ok_or_else(overflow)?;
    let qkd = (q as i128)
        .checked_pow(k.checked_mul(d).ok_or_else(overflow)?)
        .ok_or_else(overflow)?;
    let denom = qkd.checked_mul(qd + 1).ok_or_else(overflow)?;
    Ok(Ratio::from_integer(1) - Ratio::new(4, denom))
}

fn check_symmetry(specs: [&FunctionSpec; 2], table: &IrreducibleTable) -> Result<()> {
    for s in specs {
        if s.flags().degree_symmetric && !s.spot_check_symmetry(table) {
            return Err(Error::InvalidParameter(format!(
                "{} is flagged degree-symmetric but differs between primes of equal degree",
                s.name()
            )));
        }
    }
    Ok(())
}

fn symmetric(psi1: &FunctionSpec, psi2: &FunctionSpec) -> bool {
    psi1.flags().degree_symmetric && psi2.flags().degree_symmetric
}

/// First part of the main term: the product of local factors over `deg P <= gamma`.
pub fn p1(
    gamma: u32,
    shifts: &ShiftPair,
    psi1: &FunctionSpec,
    psi2: &FunctionSpec,
    mode: Mode,
    table: &IrreducibleTable,
    depth: u32,
) -> Result<TruncatedValue> {
    require_unit_bounded([psi1, psi2])?;
    require_depth(depth)?;
    let field = table.field();
    if shifts.field() != field {
        return Err(Error::TableFieldMismatch {
            table: field.p(),
            input: shifts.field().p(),
        });
    }
    check_symmetry([psi1, psi2], table)?;
    let sym = symmetric(psi1, psi2);
    if !sym {
        table.require(gamma)?;
    }
    let dividing = shifts.dividing_primes(table)?;
    let default_k = if shifts.delta().is_zero() {
        Valuation::Infinite
    } else {
        Valuation::Finite(0)
    };
    let mut acc = TruncatedValue::one();
    for d in 1..=gamma {
        let special: Vec<(Prime, u32)> = {
            let mut v: Vec<(Prime, u32)> = dividing
                .iter()
                .filter(|(p, _)| p.degree == d)
                .map(|(p, k)| (*p, *k))
                .collect();
            v.sort();
            v
        };
        if sym {
            let generic = local_factor(
                field,
                Prime {
                    degree: d,
                    index: 0,
                },
                default_k,
                psi1,
                psi2,
                mode,
                depth,
            )?;
            let count = table.count_f64(d) - special.len() as f64;
            acc = acc * generic.powf(count);
        } else {
            for prime in table.primes_of_degree(d) {
                if dividing.contains_key(&prime) {
                    continue;
                }
                acc = acc * local_factor(field, prime, default_k, psi1, psi2, mode, depth)?;
            }
        }
        for (prime, k) in special {
            acc = acc * local_factor(field, prime, Valuation::Finite(k), psi1, psi2, mode, depth)?;
        }
    }
    Ok(acc)
}

/// `log(1 + z)` without cancellation for small `z`.
fn clog1p(z: Complex64) -> Complex64 {
    if z.norm() < 1e-5 {
        // Alternating series to z^5; the dropped term is below 1e-30 relative.
        let mut term = z;
        let mut sum = Complex64::new(0.0, 0.0);
        for n in 1..=5 {
            sum += term / n as f64 * if n % 2 == 1 { 1.0 } else { -1.0 };
            term *= z;
        }
        sum
    } else {
        (Complex64::new(1.0, 0.0) + z).ln()
    }
}

/// `F_P - 1` truncated at `depth`, with the bound on the dropped part.
fn p2_delta(
    prime: Prime,
    q: u32,
    psi1: &FunctionSpec,
    psi2: &FunctionSpec,
    mode: Mode,
    depth: u32,
) -> (Complex64, f64) {
    let x = q_inv_pow(q, prime.degree);
    let mut delta = Complex64::new(0.0, 0.0);
    let mut prev = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
    let two = Complex64::new(2.0, 0.0);
    let mut xm = 1.0;
    for m in 1..=depth {
        xm *= x;
        let cur = (psi1.value(prime, m), psi2.value(prime, m));
        let coeff = match mode {
            Mode::Monic => (cur.0 - prev.0) + (cur.1 - prev.1),
            // 1 - 2/Phi(P) = 1 - 2 sum_{k>=1} x^k, folded into the series.
            Mode::Prime => cur.0 + cur.1 - two,
        };
        delta += coeff * xm;
        prev = cur;
    }
    let tail = 4.0 * x.powi(depth as i32 + 1) / (1.0 - x);
    (delta, tail)
}

/// Product of powers `(1 + delta)^count`, accumulated in log space.
#[derive(Debug, Default)]
struct LogProduct {
    log: Complex64,
    /// `sum count * ln(1 + tail/|1 + delta|)`.
    slack: f64,
    zero: bool,
}

impl LogProduct {
    fn push(&mut self, delta: Complex64, tail: f64, count: f64) {
        if count == 0.0 {
            return;
        }
        let base = (Complex64::new(1.0, 0.0) + delta).norm();
        if base == 0.0 {
            self.zero = true;
            self.slack += count * tail.ln_1p();
            return;
        }
        self.log += clog1p(delta) * count;
        self.slack += count * (tail / base).ln_1p();
    }

    fn finish(&self) -> TruncatedValue {
        if self.zero {
            // Only reachable for adversarial specs; the bound degrades to the crude product.
            return TruncatedValue::new(
                Complex64::new(0.0, 0.0),
                self.slack.exp_m1().max(self.slack.exp()),
            );
        }
        let value = self.log.exp();
        TruncatedValue::new(value, value.norm() * self.slack.exp_m1())
    }
}

/// Second part of the main term: the product over `gamma < deg P <= n`.
pub fn p2(
    gamma: u32,
    horizon: Horizon,
    psi1: &FunctionSpec,
    psi2: &FunctionSpec,
    mode: Mode,
    table: &IrreducibleTable,
    options: MainTermOptions,
) -> Result<TruncatedValue> {
    require_unit_bounded([psi1, psi2])?;
    require_depth(options.depth)?;
    let q = table.field().q();
    let threshold = gamma_threshold(mode, q);
    if gamma < threshold {
        return Err(Error::ThresholdViolation { gamma, threshold });
    }
    check_symmetry([psi1, psi2], table)?;
    let sym = symmetric(psi1, psi2);
    let last = match horizon {
        Horizon::Finite(n) => n,
        Horizon::Infinite => {
            if !sym {
                return Err(Error::InvalidParameter(
                    "an infinite horizon needs degree-symmetric functions".into(),
                ));
            }
            options.cutoff.unwrap_or(table.max_deg())
        }
    };
    if !sym {
        table.require(last)?;
    }
    let mut product = LogProduct::default();
    for d in gamma + 1..=last {
        if sym {
            let (delta, tail) = p2_delta(
                Prime {
                    degree: d,
                    index: 0,
                },
                q,
                psi1,
                psi2,
                mode,
                options.depth,
            );
            product.push(delta, tail, table.count_f64(d));
        } else {
            for prime in table.primes_of_degree(d) {
                let (delta, tail) = p2_delta(prime, q, psi1, psi2, mode, options.depth);
                product.push(delta, tail, 1.0);
            }
        }
    }
    let head = product.finish();
    if horizon == Horizon::Finite(last) {
        return Ok(head);
    }
    let remainder = infinite_tail(last.max(gamma), q, psi1, psi2, mode, options.depth)?;
    let tail = head.tail_bound + (head.value.norm() + head.tail_bound) * remainder.exp_m1();
    Ok(TruncatedValue::new(head.value, tail))
}

/// Bounds `sum_{d > cutoff} N_d |F_d - 1|` using `N_d <= q^d / d`, requiring the
/// per-degree terms to decay geometrically.
fn infinite_tail(
    cutoff: u32,
    q: u32,
    psi1: &FunctionSpec,
    psi2: &FunctionSpec,
    mode: Mode,
    depth: u32,
) -> Result<f64> {
    let ln_q = (q as f64).ln();
    let mut sum = 0.0;
    let mut prev = f64::NAN;
    for d in cutoff + 1..=cutoff + TAIL_SCAN {
        let (delta, tail) = p2_delta(
            Prime {
                degree: d,
                index: 0,
            },
            q,
            psi1,
            psi2,
            mode,
            depth,
        );
        let size = delta.norm() + tail;
        let term = if size == 0.0 {
            0.0
        } else {
            (d as f64 * ln_q - (d as f64).ln() + size.ln()).exp()
        };
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        if term <= 1e-20 * sum && prev.is_finite() {
            let ratio = term / prev;
            if ratio < 0.9 {
                return Ok(sum + term * ratio / (1.0 - ratio));
            }
        }
        prev = term;
    }
    Err(Error::Divergent(format!(
        "the terms beyond degree {cutoff} do not decay geometrically for {} and {}",
        psi1.name(),
        psi2.name()
    )))
}

/// `P(n) = P_1(gamma) P_2(gamma, n)`, with gamma defaulting to
/// `max(deg(h2 - h1), threshold)`.
#[allow(clippy::too_many_arguments)]
pub fn main_term(
    horizon: Horizon,
    gamma: Option<u32>,
    shifts: &ShiftPair,
    psi1: &FunctionSpec,
    psi2: &FunctionSpec,
    mode: Mode,
    table: &IrreducibleTable,
    options: MainTermOptions,
) -> Result<TruncatedValue> {
    let gamma = gamma.unwrap_or_else(|| default_gamma(shifts, mode));
    let first = p1(gamma, shifts, psi1, psi2, mode, table, options.depth)?;
    let second = p2(gamma, horizon, psi1, psi2, mode, table, options)?;
    Ok(first * second)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    /// Correlations over monic polynomials.
    Monic,
    /// Correlations over irreducibles.
    Prime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorShapeParams {
    pub theorem: Theorem,
    pub gamma: u32,
    pub r: u32,
    pub n: u32,
    pub alpha: f64,
    pub q: u32,
    /// The unspecified absolute constant in the exponential.
    pub c: f64,
    /// The arbitrary decay exponent of the prime version.
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorShape {
    pub distance_term: f64,
    pub middle_term: f64,
    pub local_term: f64,
    pub total: f64,
}

/// Evaluates the error-bound shape given the two distances `D(psi_j, 1; r, n)`.
pub fn thm_error_shape(params: ErrorShapeParams, d1: f64, d2: f64) -> Result<ErrorShape> {
    let ErrorShapeParams {
        theorem,
        gamma,
        r,
        n,
        alpha,
        q,
        c,
        a,
    } = params;
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha} is outside (1/2, 1)"
        )));
    }
    if !(gamma <= r && r <= n) || r == 0 {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= gamma <= r <= n, got gamma = {gamma}, r = {r}, n = {n}"
        )));
    }
    let (qf, rf, nf) = (q as f64, r as f64, n as f64);
    let growth = (c * qf.powf(alpha * rf) / rf).exp();
    let decay = match theorem {
        Theorem::Monic => qf.powf((1.0 - 2.0 * alpha) * nf),
        Theorem::Prime => nf.powf(-a),
    };
    let distance_term = d1 + d2;
    let middle_term = decay * growth;
    let local_term = (rf * qf.powf(rf)).powf(-0.5);
    Ok(ErrorShape {
        distance_term,
        middle_term,
        local_term,
        total: distance_term + middle_term + local_term,
    })
}

/// [`thm_error_shape`] with the distances computed from the table.
pub fn thm_error_shape_for(
    params: ErrorShapeParams,
    psi1: &FunctionSpec,
    psi2: &FunctionSpec,
    table: &IrreducibleTable,
) -> Result<ErrorShape> {
    let one = FunctionSpec::one();
    let d1 = distance(psi1, &one, params.r, params.n, table)?;
    let d2 = distance(psi2, &one, params.r, params.n, table)?;
    thm_error_shape(params, d1, d2)
}
