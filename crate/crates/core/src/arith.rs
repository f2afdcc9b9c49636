//! Multiplicative and additive functions given by their values on prime
//! powers, and the pretentiousness metrics built on them.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Poly};
use crate::sieve::{phi_prime_power, Factorization, IrreducibleTable, Prime, PrimePower};

const UNIT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Flags {
    /// The value depends only on `(deg P, m)`.
    pub degree_symmetric: bool,
    /// `|value| <= 1` everywhere.
    pub unit_bounded: bool,
    pub integer_valued: bool,
}

impl Flags {
    const BUILTIN_INT: Flags = Flags {
        degree_symmetric: true,
        unit_bounded: true,
        integer_valued: true,
    };
}

type ComplexRule = Arc<dyn Fn(Prime, u32) -> Complex64 + Send + Sync>;
type RealRule = Arc<dyn Fn(Prime, u32) -> f64 + Send + Sync>;

/// Values keyed by `(degree, m)` with `*` wildcards on either side.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeTable<T> {
    exact: HashMap<(u32, u32), T>,
    by_degree: HashMap<u32, T>,
    by_power: HashMap<u32, T>,
    any: Option<T>,
    default: T,
}

impl<T: Copy> DegreeTable<T> {
    fn lookup(&self, d: u32, m: u32) -> T {
        self.exact
            .get(&(d, m))
            .or_else(|| self.by_degree.get(&d))
            .or_else(|| self.by_power.get(&m))
            .or(self.any.as_ref())
            .copied()
            .unwrap_or(self.default)
    }

    fn values(&self) -> impl Iterator<Item = &T> {
        self.exact
            .values()
            .chain(self.by_degree.values())
            .chain(self.by_power.values())
            .chain(self.any.iter())
            .chain(std::iter::once(&self.default))
    }
}

/// Parses `(d,m)=value` lines; `d` or `m` may be `*`, `#` starts a comment.
fn parse_degree_table<T: Copy>(
    text: &str,
    default: T,
    parse_value: impl Fn(&str) -> Option<T>,
) -> Result<DegreeTable<T>> {
    let mut table = DegreeTable {
        exact: HashMap::new(),
        by_degree: HashMap::new(),
        by_power: HashMap::new(),
        any: None,
        default,
    };
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad =
            |why: &str| Error::InvalidParameter(format!("line {}: {why}: {raw:?}", lineno + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad("expected key=value"))?;
        let key = key.trim();
        let inner = key
            .strip_prefix('(')
            .and_then(|k| k.strip_suffix(')'))
            .ok_or_else(|| bad("key must look like (degree,m)"))?;
        let (d, m) = inner
            .split_once(',')
            .ok_or_else(|| bad("key must look like (degree,m)"))?;
        let slot = |s: &str| -> Result<Option<u32>> {
            match s.trim() {
                "*" => Ok(None),
                v => v.parse().map(Some).map_err(|_| bad("bad integer in key")),
            }
        };
        let (d, m) = (slot(d)?, slot(m)?);
        if d == Some(0) || m == Some(0) {
            return Err(bad("degree and m must be at least 1"));
        }
        let value = parse_value(value.trim()).ok_or_else(|| bad("bad value"))?;
        let previous = match (d, m) {
            (Some(d), Some(m)) => table.exact.insert((d, m), value).is_some(),
            (Some(d), None) => table.by_degree.insert(d, value).is_some(),
            (None, Some(m)) => table.by_power.insert(m, value).is_some(),
            (None, None) => table.any.replace(value).is_some(),
        };
        if previous {
            return Err(bad("duplicate key"));
        }
    }
    Ok(table)
}

fn parse_complex(s: &str) -> Option<Complex64> {
    match s.split_once(',') {
        Some((re, im)) => Some(Complex64::new(
            re.trim().parse().ok()?,
            im.trim().parse().ok()?,
        )),
        None => Some(Complex64::new(s.parse().ok()?, 0.0)),
    }
}

#[derive(Clone)]
enum Rule {
    One,
    Moebius,
    KFree(u32),
    Liouville,
    LiouvilleTrunc(u32),
    PhiRatio { q: u32 },
    Exp { additive: AdditiveSpec, t: f64 },
    Conj(Box<FunctionSpec>),
    Table(Arc<DegreeTable<Complex64>>),
    Custom(ComplexRule),
}

/// A multiplicative function on monic polynomials.
#[derive(Clone)]
pub struct FunctionSpec {
    name: String,
    rule: Rule,
    flags: Flags,
}

impl fmt::Debug for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionSpec")
            .field("name", &self.name)
            .field("flags", &self.flags)
            .finish()
    }
}

impl FunctionSpec {
    fn builtin(name: impl Into<String>, rule: Rule) -> Self {
        Self {
            name: name.into(),
            rule,
            flags: Flags::BUILTIN_INT,
        }
    }

    pub fn one() -> Self {
        Self::builtin("one", Rule::One)
    }

    pub fn moebius() -> Self {
        Self::builtin("moebius", Rule::Moebius)
    }

    /// Indicator of k-free polynomials.
    pub fn kfree(k: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!(
                "kfree needs k >= 2, got {k}"
            )));
        }
        Ok(Self::builtin(format!("kfree:{k}"), Rule::KFree(k)))
    }

    pub fn liouville() -> Self {
        Self::builtin("liouville", Rule::Liouville)
    }

    /// Liouville's function with the sign flip switched off above degree `y`.
    pub fn liouville_trunc(y: u32) -> Result<Self> {
        if y < 1 {
            return Err(Error::InvalidParameter(
                "liouville_trunc needs y >= 1".into(),
            ));
        }
        Ok(Self::builtin(
            format!("liouville_trunc:{y}"),
            Rule::LiouvilleTrunc(y),
        ))
    }

    /// `Phi(f) / |f|`.
    pub fn phi_ratio(field: FieldSpec) -> Self {
        Self {
            name: "phi_ratio".into(),
            rule: Rule::PhiRatio { q: field.q() },
            flags: Flags {
                integer_valued: false,
                ..Flags::BUILTIN_INT
            },
        }
    }

    /// A caller-supplied rule. The flags are trusted as given.
    pub fn custom(
        name: impl Into<String>,
        flags: Flags,
        rule: impl Fn(Prime, u32) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            rule: Rule::Custom(Arc::new(rule)),
            flags,
        }
    }

    /// Degree-symmetric values read from `(degree,m)=value` lines. Unlisted
    /// prime powers take the value 1.
    pub fn from_table_text(name: impl Into<String>, text: &str) -> Result<Self> {
        let table = parse_degree_table(text, Complex64::new(1.0, 0.0), parse_complex)?;
        let flags = Flags {
            degree_symmetric: true,
            unit_bounded: table.values().all(|v| v.norm() <= 1.0 + UNIT_SLACK),
            integer_valued: table.values().all(|v| v.im == 0.0 && v.re.fract() == 0.0),
        };
        Ok(Self {
            name: name.into(),
            rule: Rule::Table(Arc::new(table)),
            flags,
        })
    }

    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_table_text(format!("custom:{}", path.display()), &text)
    }

    /// Parses `one`, `moebius`, `kfree:K`, `liouville`, `liouville_trunc:Y`,
    /// `phi_ratio` or `custom:FILE`.
    pub fn parse(name: &str, field: FieldSpec) -> Result<Self> {
        let (head, arg) = match name.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (name, None),
        };
        let int_arg = || -> Result<u32> {
            arg.and_then(|a| a.parse().ok())
                .ok_or_else(|| Error::InvalidParameter(format!("{head} needs an integer argument")))
        };
        match (head, arg) {
            ("one", None) => Ok(Self::one()),
            ("moebius", None) => Ok(Self::moebius()),
            ("liouville", None) => Ok(Self::liouville()),
            ("phi_ratio", None) => Ok(Self::phi_ratio(field)),
            ("kfree", Some(_)) => Self::kfree(int_arg()?),
            ("liouville_trunc", Some(_)) => Self::liouville_trunc(int_arg()?),
            ("custom", Some(path)) => Self::from_table_file(Path::new(path)),
            _ => Err(Error::InvalidParameter(format!(
                "unknown function {name:?}"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn flags(&self) -> Flags {
        self.flags
    }

    /// `psi(P^m)`, with `psi(P^0) = 1`.
    pub fn value(&self, prime: Prime, m: u32) -> Complex64 {
        if m == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let real = |v: f64| Complex64::new(v, 0.0);
        match &self.rule {
            Rule::PhiRatio { q } => real(1.0 - (*q as f64).powi(-(prime.degree as i32))),
            Rule::Exp { additive, t } => Complex64::cis(t * additive.value(prime, m)),
            Rule::Conj(inner) => inner.value(prime, m).conj(),
            Rule::Table(table) => table.lookup(prime.degree, m),
            Rule::Custom(f) => f(prime, m),
            _ => real(self.int_value(prime, m) as f64),
        }
    }

    /// The value as an integer; meaningful only for integer-valued specs.
    pub fn int_value(&self, prime: Prime, m: u32) -> i64 {
        if m == 0 {
            return 1;
        }
        let sign = |m: u32| if m.is_multiple_of(2) { 1 } else { -1 };
        match &self.rule {
            Rule::One => 1,
            Rule::Moebius => {
                if m == 1 {
                    -1
                } else {
                    0
                }
            }
            Rule::KFree(k) => (m < *k) as i64,
            Rule::Liouville => sign(m),
            Rule::LiouvilleTrunc(y) => {
                if prime.degree <= *y {
                    sign(m)
                } else {
                    1
                }
            }
            Rule::Conj(inner) => inner.int_value(prime, m),
            _ => self.value(prime, m).re.round() as i64,
        }
    }

    /// Value at an arbitrary prime of degree `d`; only meaningful when degree-symmetric.
    pub fn value_at_degree(&self, d: u32, m: u32) -> Complex64 {
        self.value(
            Prime {
                degree: d,
                index: 0,
            },
            m,
        )
    }

    pub fn eval(&self, factors: &[PrimePower]) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for f in factors {
            acc *= self.value(f.prime, f.multiplicity);
        }
        acc
    }

    pub fn eval_int(&self, factors: &[PrimePower]) -> i64 {
        let mut acc = 1i64;
        for f in factors {
            acc *= self.int_value(f.prime, f.multiplicity);
            if acc == 0 {
                break;
            }
        }
        acc
    }

    /// Complex conjugate spec.
    pub fn conj(&self) -> Self {
        match &self.rule {
            Rule::One
            | Rule::Moebius
            | Rule::KFree(_)
            | Rule::Liouville
            | Rule::LiouvilleTrunc(_)
            | Rule::PhiRatio { .. } => self.clone(),
            Rule::Exp { additive, t } => Self {
                name: format!("conj({})", self.name),
                rule: Rule::Exp {
                    additive: additive.clone(),
                    t: -t,
                },
                flags: self.flags,
            },
            Rule::Conj(inner) => (**inner).clone(),
            _ => Self {
                name: format!("conj({})", self.name),
                rule: Rule::Conj(Box::new(self.clone())),
                flags: self.flags,
            },
        }
    }

    /// Compares two primes of equal degree at small powers, for each degree
    /// in the table that has at least two primes.
    pub fn spot_check_symmetry(&self, table: &IrreducibleTable) -> bool {
        (1..=table.max_deg().min(8)).all(|d| {
            let idx = table.indices(d);
            if idx.len() < 2 {
                return true;
            }
            let a = Prime {
                degree: d,
                index: idx[0],
            };
            let b = Prime {
                degree: d,
                index: idx[idx.len() - 1],
            };
            (1..=3).all(|m| (self.value(a, m) - self.value(b, m)).norm() <= 1e-15)
        })
    }
}

#[derive(Clone)]
enum AdditiveRule {
    Zero,
    LogPhiRatio { q: u32 },
    Omega,
    BigOmega,
    SimpleOmega,
    Table(Arc<DegreeTable<f64>>),
    Custom(RealRule),
}

/// A real additive function on monic polynomials.
#[derive(Clone)]
pub struct AdditiveSpec {
    name: String,
    rule: AdditiveRule,
    flags: Flags,
}

impl fmt::Debug for AdditiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdditiveSpec")
            .field("name", &self.name)
            .field("flags", &self.flags)
            .finish()
    }
}

impl AdditiveSpec {
    pub fn zero() -> Self {
        Self {
            name: "zero".into(),
            rule: AdditiveRule::Zero,
            flags: Flags::BUILTIN_INT,
        }
    }

    /// `log(Phi(f) / |f|)`.
    pub fn log_phi_ratio(field: FieldSpec) -> Self {
        Self {
            name: "log_phi_ratio".into(),
            rule: AdditiveRule::LogPhiRatio { q: field.q() },
            flags: Flags {
                integer_valued: false,
                ..Flags::BUILTIN_INT
            },
        }
    }

    /// Number of distinct prime factors: `P^m -> 1`.
    pub fn omega() -> Self {
        Self {
            name: "omega".into(),
            rule: AdditiveRule::Omega,
            flags: Flags::BUILTIN_INT,
        }
    }

    /// Prime factors with multiplicity: `P^m -> m`.
    pub fn big_omega() -> Self {
        Self {
            name: "big_omega".into(),
            rule: AdditiveRule::BigOmega,
            flags: Flags {
                unit_bounded: false,
                ..Flags::BUILTIN_INT
            },
        }
    }

    /// Primes dividing exactly once: `P^m -> 1` if `m = 1`, else 0.
    pub fn simple_omega() -> Self {
        Self {
            name: "simple_omega".into(),
            rule: AdditiveRule::SimpleOmega,
            flags: Flags::BUILTIN_INT,
        }
    }

    pub fn custom(
        name: impl Into<String>,
        flags: Flags,
        rule: impl Fn(Prime, u32) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            rule: AdditiveRule::Custom(Arc::new(rule)),
            flags,
        }
    }

    /// Degree-symmetric values from `(degree,m)=value` lines; unlisted prime
    /// powers take the value 0.
    pub fn from_table_text(name: impl Into<String>, text: &str) -> Result<Self> {
        let table = parse_degree_table(text, 0.0f64, |s| s.parse().ok())?;
        let flags = Flags {
            degree_symmetric: true,
            unit_bounded: table.values().all(|v| v.abs() <= 1.0),
            integer_valued: table.values().all(|v| v.fract() == 0.0),
        };
        Ok(Self {
            name: name.into(),
            rule: AdditiveRule::Table(Arc::new(table)),
            flags,
        })
    }

    /// Parses `zero`, `log_phi_ratio`, `omega`, `big_omega`, `simple_omega` or `custom:FILE`.
    pub fn parse(name: &str, field: FieldSpec) -> Result<Self> {
        match name {
            "zero" => Ok(Self::zero()),
            "log_phi_ratio" => Ok(Self::log_phi_ratio(field)),
            "omega" => Ok(Self::omega()),
            "big_omega" => Ok(Self::big_omega()),
            "simple_omega" => Ok(Self::simple_omega()),
            _ => match name.strip_prefix("custom:") {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    Self::from_table_text(name, &text)
                }
                None => Err(Error::InvalidParameter(format!(
                    "unknown additive function {name:?}"
                ))),
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn flags(&self) -> Flags {
        self.flags
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.rule, AdditiveRule::Zero)
    }

    /// `psi(P^m)`, with `psi(P^0) = 0`.
    pub fn value(&self, prime: Prime, m: u32) -> f64 {
        if m == 0 {
            return 0.0;
        }
        match &self.rule {
            AdditiveRule::Zero => 0.0,
            AdditiveRule::LogPhiRatio { q } => (-(*q as f64).powi(-(prime.degree as i32))).ln_1p(),
            AdditiveRule::Omega => 1.0,
            AdditiveRule::BigOmega => m as f64,
            AdditiveRule::SimpleOmega => (m == 1) as u8 as f64,
            AdditiveRule::Table(table) => table.lookup(prime.degree, m),
            AdditiveRule::Custom(f) => f(prime, m),
        }
    }

    pub fn value_at_degree(&self, d: u32, m: u32) -> f64 {
        self.value(
            Prime {
                degree: d,
                index: 0,
            },
            m,
        )
    }

    pub fn eval(&self, factors: &[PrimePower]) -> f64 {
        factors
            .iter()
            .map(|f| self.value(f.prime, f.multiplicity))
            .sum()
    }
}

/// `psi(f)` from the factorization of `f`.
pub fn eval_on(fact: &Factorization, spec: &FunctionSpec) -> Complex64 {
    spec.eval(fact.factors())
}

/// Additive analogue of [`eval_on`].
pub fn eval_additive(fact: &Factorization, spec: &AdditiveSpec) -> f64 {
    spec.eval(fact.factors())
}

/// `exp(i t psi)`, a unit-modulus multiplicative function.
pub fn exp_additive(additive: &AdditiveSpec, t: f64) -> FunctionSpec {
    if t == 0.0 || additive.is_zero() {
        return FunctionSpec::one();
    }
    FunctionSpec {
        name: format!("exp({t}*{})", additive.name),
        rule: Rule::Exp {
            additive: additive.clone(),
            t,
        },
        flags: Flags {
            degree_symmetric: additive.flags.degree_symmetric,
            unit_bounded: true,
            integer_valued: false,
        },
    }
}

/// Euler's totient from a factorization.
pub fn phi(fact: &Factorization) -> u128 {
    let q = fact.field().q();
    fact.factors()
        .iter()
        .map(|f| phi_prime_power(q, f.prime.degree, f.multiplicity))
        .product()
}

pub fn phi_of(f: &Poly, table: &IrreducibleTable) -> Result<u128> {
    Ok(phi(&table.factorize(f)?))
}

fn check_window(m: u32, n: u32) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "degree window [{m}, {n}] must satisfy 1 <= m <= n"
        )));
    }
    Ok(())
}

/// Pretentious distance over primes with `m <= deg P <= n`.
pub fn distance(
    psi1: &FunctionSpec,
    psi2: &FunctionSpec,
    m: u32,
    n: u32,
    table: &IrreducibleTable,
) -> Result<f64> {
    check_window(m, n)?;
    for spec in [psi1, psi2] {
        if !spec.flags.unit_bounded {
            return Err(Error::NotUnitBounded(spec.name.clone()));
        }
    }
    let q = table.field().q() as f64;
    let term = |p: Prime| 1.0 - (psi1.value(p, 1) * psi2.value(p, 1).conj()).re;
    let symmetric = psi1.flags.degree_symmetric && psi2.flags.degree_symmetric;
    if !symmetric {
        table.require(n)?;
    }
    let mut sq = 0.0;
    for d in m..=n {
        let weight = q.powi(-(d as i32));
        let sum = if symmetric {
            table.count_f64(d)
                * term(Prime {
                    degree: d,
                    index: 0,
                })
        } else {
            table.primes_of_degree(d).map(term).sum()
        };
        sq += sum * weight;
    }
    Ok(sq.max(0.0).sqrt())
}

/// Partial sums of `sum_P (psi(P) - 1) / q^{deg P}` for degree cutoffs `1..=cap`.
pub fn closeness_partial_sums(
    psi: &FunctionSpec,
    cap: u32,
    table: &IrreducibleTable,
) -> Result<Vec<Complex64>> {
    table.require(cap)?;
    let q = table.field().q() as f64;
    let one = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(cap as usize);
    for d in 1..=cap {
        let sum: Complex64 = if psi.flags.degree_symmetric {
            (psi.value_at_degree(d, 1) - one) * table.count(d) as f64
        } else {
            table
                .primes_of_degree(d)
                .map(|p| psi.value(p, 1) - one)
                .sum()
        };
        acc += sum * q.powi(-(d as i32));
        out.push(acc);
    }
    Ok(out)
}

/// `sum_{deg P <= n} q^{-deg P}`.
pub fn mertens_sum(n: u32, table: &IrreducibleTable) -> Result<f64> {
    table.require(n)?;
    let q = table.field().q() as f64;
    Ok((1..=n)
        .map(|d| table.count(d) as f64 * q.powi(-(d as i32)))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{all_monic, parse_poly};
    use proptest::prelude::*;

    fn f2() -> FieldSpec {
        FieldSpec::new(2).unwrap()
    }

    fn prime(d: u32) -> Prime {
        Prime {
            degree: d,
            index: 0,
        }
    }

    #[test]
    fn builtin_rules() {
        assert_eq!(FunctionSpec::moebius().value(prime(1), 2).re, 0.0);
        assert_eq!(FunctionSpec::moebius().value(prime(1), 1).re, -1.0);
        let lt = FunctionSpec::liouville_trunc(2).unwrap();
        assert_eq!(lt.value(prime(3), 1).re, 1.0);
        assert_eq!(lt.value(prime(2), 3).re, -1.0);
        assert_eq!(FunctionSpec::phi_ratio(f2()).value(prime(1), 5).re, 0.5);
        let k3 = FunctionSpec::kfree(3).unwrap();
        assert_eq!([1, 2, 3].map(|m| k3.int_value(prime(2), m)), [1, 1, 0]);
        assert!(FunctionSpec::kfree(1).is_err());
        assert!(FunctionSpec::liouville_trunc(0).is_err());
    }

    #[test]
    fn value_at_zero_power_is_one() {
        let specs = [
            FunctionSpec::one(),
            FunctionSpec::moebius(),
            FunctionSpec::liouville(),
            FunctionSpec::phi_ratio(f2()),
            exp_additive(&AdditiveSpec::big_omega(), 1.3),
        ];
        for s in &specs {
            assert_eq!(s.value(prime(4), 0), Complex64::new(1.0, 0.0));
        }
        assert_eq!(AdditiveSpec::big_omega().value(prime(2), 0), 0.0);
    }

    #[test]
    fn eval_examples() {
        let f = f2();
        let t = IrreducibleTable::build(f, 4).unwrap();
        let fact = |s: &str| t.factorize(&parse_poly(s, f).unwrap()).unwrap();
        assert_eq!(eval_on(&fact("x^2+x"), &FunctionSpec::moebius()).re, 1.0);
        assert_eq!(
            eval_on(&fact("x^3+x^2"), &FunctionSpec::liouville()).re,
            -1.0
        );
        let one = fact("1");
        assert!(one.is_empty());
        for spec in [FunctionSpec::moebius(), FunctionSpec::phi_ratio(f)] {
            assert_eq!(eval_on(&one, &spec).re, 1.0);
        }
        assert_eq!(FunctionSpec::moebius().eval_int(fact("x^2").factors()), 0);
        assert_eq!(
            eval_additive(&fact("x^3+x^2"), &AdditiveSpec::big_omega()),
            3.0
        );
        assert_eq!(eval_additive(&fact("x^3+x^2"), &AdditiveSpec::omega()), 2.0);
        assert_eq!(
            eval_additive(&fact("x^3+x^2"), &AdditiveSpec::simple_omega()),
            1.0
        );
    }

    #[test]
    fn phi_examples() {
        let f = f2();
        let t = IrreducibleTable::build(f, 6).unwrap();
        let p = |s: &str| parse_poly(s, f).unwrap();
        assert_eq!(phi_of(&p("x^2"), &t).unwrap(), 2);
        assert_eq!(phi_of(&p("x^2+x+1"), &t).unwrap(), 3);
        assert_eq!(phi_of(&p("1"), &t).unwrap(), 1);
        for pr in t.primes_of_degree(5) {
            assert_eq!(phi_of(&pr.to_poly(f), &t).unwrap(), 31);
        }
    }

    #[test]
    fn phi_counts_units() {
        for (p, max) in [(2, 8), (3, 5)] {
            let field = FieldSpec::new(p).unwrap();
            let t = IrreducibleTable::build(field, max).unwrap();
            for n in 1..=max {
                for f in all_monic(field, n).unwrap().step_by(7) {
                    let units = (0..n)
                        .flat_map(|d| all_monic(field, d).unwrap())
                        .filter(|g| g.gcd(&f).unwrap().is_one())
                        .count() as u128;
                    // Units of A/fA are q - 1 scalar multiples of the monic residues.
                    let expected = units * (p as u128 - 1);
                    assert_eq!(phi_of(&f, &t).unwrap(), expected, "f = {f}");
                }
            }
        }
    }

    #[test]
    fn distance_examples() {
        let f = f2();
        let t = IrreducibleTable::build(f, 8).unwrap();
        let lt = FunctionSpec::liouville_trunc(2).unwrap();
        let one = FunctionSpec::one();
        let l = FunctionSpec::liouville();
        assert_eq!(distance(&l, &l, 1, 8, &t).unwrap(), 0.0);
        assert_eq!(distance(&lt, &one, 3, 8, &t).unwrap(), 0.0);
        let d = distance(&l, &one, 1, 1, &t).unwrap();
        assert!((d * d - 2.0).abs() < 1e-15);
        let big = FunctionSpec::from_table_text("big", "(*,*)=2").unwrap();
        assert!(matches!(
            distance(&big, &one, 1, 2, &t),
            Err(Error::NotUnitBounded(_))
        ));
        assert!(distance(&one, &one, 3, 2, &t).is_err());
    }

    #[test]
    fn distance_general_path_matches_fast_path() {
        let field = FieldSpec::new(3).unwrap();
        let t = IrreducibleTable::build(field, 5).unwrap();
        let spec = FunctionSpec::phi_ratio(field);
        let slow = FunctionSpec::custom(
            "slow",
            Flags {
                degree_symmetric: false,
                unit_bounded: true,
                integer_valued: false,
            },
            move |p, m| FunctionSpec::phi_ratio(field).value(p, m),
        );
        let one = FunctionSpec::one();
        let a = distance(&spec, &one, 1, 5, &t).unwrap();
        let b = distance(&slow, &one, 1, 5, &t).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn closeness_examples() {
        let f = f2();
        let t = IrreducibleTable::build(f, 10).unwrap();
        assert!(closeness_partial_sums(&FunctionSpec::one(), 10, &t)
            .unwrap()
            .iter()
            .all(|z| z.norm() == 0.0));
        let s = closeness_partial_sums(&FunctionSpec::phi_ratio(f), 1, &t).unwrap();
        assert_eq!(s[0].re, -0.5);
        let l = closeness_partial_sums(&FunctionSpec::liouville(), 10, &t).unwrap();
        for (d, z) in l.iter().enumerate() {
            let mertens = mertens_sum(d as u32 + 1, &t).unwrap();
            assert!((z.re + 2.0 * mertens).abs() < 1e-12);
        }
    }

    #[test]
    fn mertens_examples() {
        let t = IrreducibleTable::build(f2(), 12).unwrap();
        assert_eq!(mertens_sum(2, &t).unwrap(), 1.25);
        assert_eq!(mertens_sum(1, &t).unwrap(), 1.0);
        // Consecutive differences of mertens_sum(n) - ln n shrink.
        let c: Vec<f64> = (4..=12)
            .map(|n| mertens_sum(n, &t).unwrap() - (n as f64).ln())
            .collect();
        let steps: Vec<f64> = c.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        assert!(steps.last().unwrap() < &steps[0]);
    }

    #[test]
    fn exp_additive_examples() {
        let f = f2();
        let lpr = AdditiveSpec::log_phi_ratio(f);
        assert_eq!(exp_additive(&lpr, 0.0).name(), "one");
        let t = 1.7;
        let e = exp_additive(&lpr, t);
        for d in 1..6 {
            for m in 1..4 {
                let want = Complex64::new(1.0 - 2f64.powi(-d), 0.0).powc(Complex64::new(0.0, t));
                let got = e.value(prime(d as u32), m);
                assert!((got - want).norm() < 1e-14);
                assert!((got.norm() - 1.0).abs() < 1e-15);
            }
        }
        let c = e.conj();
        assert_eq!(c.value(prime(2), 1), e.value(prime(2), 1).conj());
    }

    #[test]
    fn name_grammar() {
        let f = f2();
        for name in [
            "one",
            "moebius",
            "kfree:2",
            "liouville",
            "liouville_trunc:3",
            "phi_ratio",
        ] {
            assert_eq!(FunctionSpec::parse(name, f).unwrap().name(), name);
        }
        for bad in [
            "kfree",
            "kfree:x",
            "kfree:1",
            "mobius",
            "one:2",
            "custom:/nonexistent/file",
        ] {
            assert!(FunctionSpec::parse(bad, f).is_err(), "{bad}");
        }
        for name in [
            "zero",
            "log_phi_ratio",
            "omega",
            "big_omega",
            "simple_omega",
        ] {
            assert_eq!(AdditiveSpec::parse(name, f).unwrap().name(), name);
        }
    }

    #[test]
    fn custom_table_text() {
        let spec =
            FunctionSpec::from_table_text("c", "# comment\n(1,1) = -1\n(2,*)=0.5, 0.5\n(*,2)=0\n")
                .unwrap();
        assert_eq!(spec.value(prime(1), 1).re, -1.0);
        assert_eq!(spec.value(prime(1), 2).re, 0.0);
        assert_eq!(spec.value(prime(2), 2), Complex64::new(0.5, 0.5));
        assert_eq!(spec.value(prime(3), 1).re, 1.0);
        assert!(spec.flags().unit_bounded);
        assert!(!spec.flags().integer_valued);
        let ints = FunctionSpec::from_table_text("i", "(1,1)=-1").unwrap();
        assert!(ints.flags().integer_valued);
        assert_eq!(ints.int_value(prime(1), 1), -1);
        for bad in ["(1,0)=1", "1,1=1", "(1,1)=x", "(1,1)=1\n(1,1)=0"] {
            assert!(FunctionSpec::from_table_text("b", bad).is_err(), "{bad}");
        }
        let add = AdditiveSpec::from_table_text("a", "(*,1)=1\n(*,*)=2").unwrap();
        assert_eq!(add.value(prime(5), 1), 1.0);
        assert_eq!(add.value(prime(5), 3), 2.0);
        assert!(!add.flags().unit_bounded);
    }

    #[test]
    fn symmetry_spot_check() {
        let t = IrreducibleTable::build(f2(), 6).unwrap();
        assert!(FunctionSpec::liouville().spot_check_symmetry(&t));
        let liar = FunctionSpec::custom("liar", Flags::BUILTIN_INT, |p, _| {
            Complex64::new(if p.index % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        });
        assert!(!liar.spot_check_symmetry(&t));
    }

    fn random_monic(field: FieldSpec, deg: u32, seed: u64) -> Poly {
        let count = field.monic_count(deg).unwrap();
        Poly::monic_from_index(field, deg, seed % count)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn multiplicative_on_coprime_pairs(
            p in prop::sample::select(vec![2u32, 3, 5]),
            da in 0u32..6, db in 0u32..6, sa: u64, sb: u64,
        ) {
            let field = FieldSpec::new(p).unwrap();
            let table = IrreducibleTable::build(field, 6).unwrap();
            let a = random_monic(field, da, sa);
            let b = random_monic(field, db, sb);
            prop_assume!(a.gcd(&b).unwrap().is_one());
            let ab = &a * &b;
            let (fa, fb, fab) = (
                table.factorize(&a).unwrap(),
                table.factorize(&b).unwrap(),
                table.factorize(&ab).unwrap(),
            );
            let specs = [
                FunctionSpec::moebius(),
                FunctionSpec::liouville(),
                FunctionSpec::phi_ratio(field),
                exp_additive(&AdditiveSpec::big_omega(), 0.7),
            ];
            for s in &specs {
                let lhs = eval_on(&fab, s);
                let rhs = eval_on(&fa, s) * eval_on(&fb, s);
                prop_assert!((lhs - rhs).norm() < 1e-12);
            }
            prop_assert_eq!(phi(&fab), phi(&fa) * phi(&fb));
            let add = AdditiveSpec::log_phi_ratio(field);
            prop_assert!((eval_additive(&fab, &add) - eval_additive(&fa, &add) - eval_additive(&fb, &add)).abs() < 1e-12);
        }

        #[test]
        fn truncated_liouville_agrees_below_cutoff(deg in 1u32..12, seed: u64, extra in 0u32..3) {
            let field = f2();
            let table = IrreducibleTable::build(field, 12).unwrap();
            let f = random_monic(field, deg, seed);
            let fact = table.factorize(&f).unwrap();
            let y = deg + extra;
            prop_assert_eq!(
                eval_on(&fact, &FunctionSpec::liouville_trunc(y).unwrap()),
                eval_on(&fact, &FunctionSpec::liouville())
            );
        }

        #[test]
        fn distance_is_symmetric(t1 in -3.0f64..3.0, t2 in -3.0f64..3.0, m in 1u32..4, extra in 0u32..4) {
            let field = FieldSpec::new(3).unwrap();
            let table = IrreducibleTable::build(field, 7).unwrap();
            let a = exp_additive(&AdditiveSpec::log_phi_ratio(field), t1);
            let b = exp_additive(&AdditiveSpec::big_omega(), t2);
            let n = m + extra;
            let ab = distance(&a, &b, m, n, &table).unwrap();
            let ba = distance(&b, &a, m, n, &table).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() < 1e-12);
        }
    }
}
