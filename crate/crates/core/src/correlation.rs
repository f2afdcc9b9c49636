//! Exhaustive correlation sums over monic polynomials or irreducibles of a
//! fixed degree, split into index partitions that are reduced in order.

use std::fmt;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::FunctionSpec;
use crate::error::{Error, Result};
use crate::field::{FieldSpec, Poly};
use crate::main_term::{
    default_gamma, main_term, thm_error_shape_for, ErrorShape, ErrorShapeParams, Horizon,
    MainTermOptions, Mode, ShiftPair, Theorem, TruncatedValue,
};
use crate::sieve::{FactorScratch, IrreducibleTable, PrimePower};

/// Largest domain enumerated before refusing.
pub const ENUMERATION_BUDGET: u128 = 1 << 36;

pub const DEFAULT_PARTITIONS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Monic,
    Prime,
}

impl Domain {
    pub fn mode(self) -> Mode {
        match self {
            Domain::Monic => Mode::Monic,
            Domain::Prime => Mode::Prime,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.mode().fmt(f)
    }
}

impl std::str::FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monic" => Ok(Domain::Monic),
            "prime" => Ok(Domain::Prime),
            _ => Err(Error::InvalidParameter(format!("unknown domain {s:?}"))),
        }
    }
}

/// Monic polynomials (or irreducibles) of degree `n` and their shifts.
#[derive(Debug, Clone)]
pub struct ShiftedDomain<'a> {
    table: &'a IrreducibleTable,
    n: u32,
    domain: Domain,
    shifts: Vec<Poly>,
    size: u64,
}

impl<'a> ShiftedDomain<'a> {
    pub fn new(
        table: &'a IrreducibleTable,
        n: u32,
        domain: Domain,
        shifts: &[Poly],
    ) -> Result<Self> {
        let field = table.field();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "degree n must be at least 1".into(),
            ));
        }
        for h in shifts {
            if h.field() != field {
                return Err(Error::TableFieldMismatch {
                    table: field.p(),
                    input: h.field().p(),
                });
            }
            if h.degree().is_some_and(|d| d >= n) {
                return Err(Error::InvalidParameter(format!(
                    "shift {h} must have degree below n = {n}"
                )));
            }
        }
        let size = match domain {
            Domain::Monic => {
                table.require(n / 2)?;
                let size = field.monic_count(n).ok_or(Error::IndexOverflow {
                    p: field.p(),
                    degree: n,
                })?;
                if size as u128 > ENUMERATION_BUDGET {
                    return Err(Error::BudgetExceeded {
                        what: format!(
                            "enumeration of monic polynomials of degree {n} over {field}"
                        ),
                        required: size as u128,
                        budget: ENUMERATION_BUDGET,
                    });
                }
                size
            }
            Domain::Prime => {
                table.require(n)?;
                table.count(n)
            }
        };
        Ok(Self {
            table,
            n,
            domain,
            shifts: shifts.to_vec(),
            size,
        })
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn field(&self) -> FieldSpec {
        self.table.field()
    }

    /// Splits the domain into `partitions` contiguous index ranges, folds
    /// each with its own accumulator, and returns them in ascending order.
    /// `visit` receives the factorization of every shifted value.
    pub fn fold<A, I, V>(&self, partitions: usize, init: I, visit: V) -> Result<Vec<A>>
    where
        A: Send,
        I: Fn() -> A + Sync,
        V: Fn(&mut A, &[Vec<PrimePower>]) + Sync,
    {
        if partitions == 0 {
            return Err(Error::InvalidParameter(
                "partition count must be positive".into(),
            ));
        }
        let size = self.size as u128;
        let bounds: Vec<(u64, u64)> = (0..partitions as u128)
            .map(|i| {
                let lo = size * i / partitions as u128;
                let hi = size * (i + 1) / partitions as u128;
                (lo as u64, hi as u64)
            })
            .collect();
        bounds
            .into_par_iter()
            .map(|(lo, hi)| {
                let mut acc = init();
                self.run(lo, hi, &mut acc, &visit)?;
                Ok(acc)
            })
            .collect()
    }

    fn element_index(&self, i: u64) -> u64 {
        match self.domain {
            Domain::Monic => i,
            Domain::Prime => self.table.indices(self.n)[i as usize],
        }
    }

    fn run<A, V>(&self, lo: u64, hi: u64, acc: &mut A, visit: &V) -> Result<()>
    where
        V: Fn(&mut A, &[Vec<PrimePower>]),
    {
        let k = self.shifts.len();
        let mut factors: Vec<Vec<PrimePower>> = vec![Vec::new(); k];
        let field = self.field();
        let n = self.n;
        if field.is_binary() && n < 64 {
            let top = 1u64 << n;
            let shifts: Vec<u64> = self
                .shifts
                .iter()
                .map(|h| h.to_packed().expect("degree below 64"))
                .collect();
            for i in lo..hi {
                let f = self.element_index(i) | top;
                for (h, out) in shifts.iter().zip(factors.iter_mut()) {
                    self.table.factor_packed(f ^ h, out)?;
                }
                visit(acc, &factors);
            }
        } else {
            let p = field.p();
            let shifts: Vec<Vec<u8>> = self
                .shifts
                .iter()
                .map(|h| {
                    let mut c = h.coeffs().to_vec();
                    c.resize(n as usize, 0);
                    c
                })
                .collect();
            let mut digits = vec![0u8; n as usize];
            let mut shifted = vec![0u8; n as usize + 1];
            shifted[n as usize] = 1;
            let mut scratch = FactorScratch::default();
            for i in lo..hi {
                let mut index = self.element_index(i);
                for d in digits.iter_mut() {
                    *d = (index % p as u64) as u8;
                    index /= p as u64;
                }
                for (h, out) in shifts.iter().zip(factors.iter_mut()) {
                    for j in 0..n as usize {
                        shifted[j] = ((digits[j] as u32 + h[j] as u32) % p) as u8;
                    }
                    self.table.factor_dense(&shifted, &mut scratch, out)?;
                }
                visit(acc, &factors);
            }
        }
        Ok(())
    }
}

/// Neumaier's compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexSum {
    fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

#[derive(Debug, Clone)]
pub struct CorrelationSpec {
    pub field: FieldSpec,
    pub n: u32,
    pub domain: Domain,
    pub shifts: Vec<Poly>,
    pub functions: Vec<FunctionSpec>,
    pub gamma: Option<u32>,
    pub options: MainTermOptions,
    /// Horizon of the attached main term; defaults to `n`.
    pub horizon: Option<Horizon>,
    pub with_main_term: bool,
    pub partitions: usize,
}

impl CorrelationSpec {
    /// A spec that attaches a main term whenever the sum is two-point and
    /// every function is unit bounded.
    pub fn new(
        field: FieldSpec,
        n: u32,
        domain: Domain,
        shifts: Vec<Poly>,
        functions: Vec<FunctionSpec>,
    ) -> Self {
        let with_main_term =
            functions.len() == 2 && functions.iter().all(|f| f.flags().unit_bounded);
        Self {
            field,
            n,
            domain,
            shifts,
            functions,
            gamma: None,
            options: MainTermOptions::default(),
            horizon: None,
            with_main_term,
            partitions: DEFAULT_PARTITIONS,
        }
    }

    pub fn shift_pair(&self) -> Result<ShiftPair> {
        match self.shifts.as_slice() {
            [h1, h2] => ShiftPair::new(h1.clone(), h2.clone()),
            _ => Err(Error::InvalidParameter(format!(
                "main terms need exactly two shifts, got {}",
                self.shifts.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawSum {
    Int(i128),
    Float(Complex64),
}

impl RawSum {
    pub fn to_complex(self) -> Complex64 {
        match self {
            RawSum::Int(v) => Complex64::new(v as f64, 0.0),
            RawSum::Float(z) => z,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorrelationReport {
    pub q: u32,
    pub n: u32,
    pub domain: Domain,
    pub functions: Vec<String>,
    pub shifts: Vec<String>,
    pub raw_sum: RawSum,
    /// `q^n`, or the exact number of irreducibles of degree `n`.
    pub domain_size: u64,
    pub normalized: Complex64,
    pub main_term: Option<TruncatedValue>,
    pub deviation: Option<f64>,
    pub seconds: f64,
    pub partitions: usize,
}

/// A raw-sum component: exact integer or float.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum RawNumber {
    Int(i128),
    Float(f64),
}

/// One CSV/JSON row of a correlation report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub q: u32,
    pub n: u32,
    pub domain: Domain,
    pub functions: String,
    #[serde(rename = "h-list")]
    pub h_list: String,
    pub raw_re: RawNumber,
    pub raw_im: RawNumber,
    pub normalized_re: f64,
    pub normalized_im: f64,
    pub main_re: Option<f64>,
    pub main_im: Option<f64>,
    pub tail_bound: Option<f64>,
    pub deviation: Option<f64>,
    pub seconds: Option<f64>,
}

impl CorrelationReport {
    /// Flattens the report; `seconds` is left empty unless `timing` is set so
    /// that rows are reproducible byte for byte.
    pub fn row(&self, timing: bool) -> ReportRow {
        let (raw_re, raw_im) = match self.raw_sum {
            RawSum::Int(v) => (RawNumber::Int(v), RawNumber::Int(0)),
            RawSum::Float(z) => (RawNumber::Float(z.re), RawNumber::Float(z.im)),
        };
        ReportRow {
            q: self.q,
            n: self.n,
            domain: self.domain,
            functions: self.functions.join(";"),
            h_list: self.shifts.join(";"),
            raw_re,
            raw_im,
            normalized_re: self.normalized.re,
            normalized_im: self.normalized.im,
            main_re: self.main_term.map(|m| m.value.re),
            main_im: self.main_term.map(|m| m.value.im),
            tail_bound: self.main_term.map(|m| m.tail_bound),
            deviation: self.deviation,
            seconds: timing.then_some(self.seconds),
        }
    }
}

/// `sum_f prod_i psi_i(f + h_i)` over the domain, with the main term attached
/// for two-point sums.
pub fn correlate(spec: &CorrelationSpec, table: &IrreducibleTable) -> Result<CorrelationReport> {
    let start = Instant::now();
    if spec.field != table.field() {
        return Err(Error::TableFieldMismatch {
            table: table.field().p(),
            input: spec.field.p(),
        });
    }
    if spec.functions.len() != spec.shifts.len() || spec.functions.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "{} functions for {} shifts",
            spec.functions.len(),
            spec.shifts.len()
        )));
    }
    let pair = if spec.with_main_term {
        Some(spec.shift_pair()?)
    } else {
        None
    };
    let domain = ShiftedDomain::new(table, spec.n, spec.domain, &spec.shifts)?;
    let functions = &spec.functions;
    let raw_sum = if functions.iter().all(|f| f.flags().integer_valued) {
        let parts = domain.fold(
            spec.partitions,
            || 0i128,
            |acc, factors| {
                let mut term = 1i64;
                for (f, fac) in functions.iter().zip(factors) {
                    term *= f.eval_int(fac);
                    if term == 0 {
                        return;
                    }
                }
                *acc += term as i128;
            },
        )?;
        RawSum::Int(parts.into_iter().sum())
    } else {
        let parts = domain.fold(spec.partitions, ComplexSum::default, |acc, factors| {
            let mut term = Complex64::new(1.0, 0.0);
            for (f, fac) in functions.iter().zip(factors) {
                term *= f.eval(fac);
            }
            acc.add(term);
        })?;
        let mut total = ComplexSum::default();
        for part in &parts {
            total.add(part.value());
        }
        RawSum::Float(total.value())
    };
    let domain_size = domain.size();
    let normalized = raw_sum.to_complex() / domain_size as f64;
    let main = match &pair {
        Some(pair) => Some(main_term(
            spec.horizon.unwrap_or(Horizon::Finite(spec.n)),
            spec.gamma,
            pair,
            &functions[0],
            &functions[1],
            spec.domain.mode(),
            table,
            spec.options,
        )?),
        None => None,
    };
    Ok(CorrelationReport {
        q: spec.field.q(),
        n: spec.n,
        domain: spec.domain,
        functions: functions.iter().map(|f| f.name().to_string()).collect(),
        shifts: spec.shifts.iter().map(|h| h.to_string()).collect(),
        raw_sum,
        domain_size,
        normalized,
        main_term: main,
        deviation: main.map(|m| (normalized - m.value).norm()),
        seconds: start.elapsed().as_secs_f64(),
        partitions: spec.partitions,
    })
}

/// `|{f monic of degree n : g1 | f + h1, g2 | f + h2}|` by the Chinese remainder theorem.
pub fn crt_count(g1: &Poly, g2: &Poly, h1: &Poly, h2: &Poly, n: u32) -> Result<u128> {
    for g in [g1, g2] {
        if !g.is_monic() {
            return Err(Error::NotMonic(g.to_string()));
        }
    }
    let field = g1.field();
    let d = g1.gcd(g2)?;
    let delta = h2.try_sub(h1)?;
    if !d.divides(&delta)? {
        return Ok(0);
    }
    let l = g1.lcm(g2)?;
    let dl = l.degree().expect("lcm of monics");
    if dl <= n {
        return Ok((field.q() as u128).pow(n - dl));
    }
    // Solve f = -h1 + g1 t with g1 t = -delta (mod g2).
    let (g1r, _) = g1.divmod(&d)?;
    let (g2r, _) = g2.divmod(&d)?;
    let (dr, _) = delta.divmod(&d)?;
    let t = if g2r.is_one() {
        Poly::zero(field)
    } else {
        let (_, inv, _) = g1r.ext_gcd(&g2r)?;
        (&dr.neg() * &inv).rem(&g2r)?
    };
    let r = (&h1.neg() + &(g1 * &t)).rem(&l)?;
    Ok((r.is_monic() && r.degree() == Some(n)) as u128)
}

/// Overlay of the error-bound shape on a deviation scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeOverlay {
    pub r: u32,
    pub alpha: f64,
    pub c: f64,
    pub a: f64,
}

#[derive(Debug, Clone)]
pub struct ScanPoint {
    pub n: u32,
    pub report: CorrelationReport,
    pub shape: Option<ErrorShape>,
}

/// One report per degree in `ns`, each with the template's functions and shifts.
/// The table must cover every degree the template needs at the largest `n`.
pub fn deviation_scan(
    template: &CorrelationSpec,
    ns: &[u32],
    table: &IrreducibleTable,
    overlay: Option<ShapeOverlay>,
) -> Result<Vec<ScanPoint>> {
    ns.iter()
        .map(|&n| {
            let spec = CorrelationSpec {
                n,
                ..template.clone()
            };
            let report = correlate(&spec, table)?;
            let shape = match (overlay, spec.with_main_term) {
                (Some(o), true) => {
                    let pair = spec.shift_pair()?;
                    let mode = spec.domain.mode();
                    let gamma = spec.gamma.unwrap_or_else(|| default_gamma(&pair, mode));
                    let params = ErrorShapeParams {
                        theorem: match spec.domain {
                            Domain::Monic => Theorem::Monic,
                            Domain::Prime => Theorem::Prime,
                        },
                        gamma,
                        r: o.r.max(gamma).min(n),
                        n,
                        alpha: o.alpha,
                        q: spec.field.q(),
                        c: o.c,
                        a: o.a,
                    };
                    Some(thm_error_shape_for(
                        params,
                        &spec.functions[0],
                        &spec.functions[1],
                        table,
                    )?)
                }
                _ => None,
            };
            Ok(ScanPoint { n, report, shape })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{exp_additive, AdditiveSpec};
    use crate::field::{all_monic, parse_poly};
    use proptest::prelude::*;

    fn f2() -> FieldSpec {
        FieldSpec::new(2).unwrap()
    }

    fn poly(s: &str, f: FieldSpec) -> Poly {
        parse_poly(s, f).unwrap()
    }

    fn brute_crt(g1: &Poly, g2: &Poly, h1: &Poly, h2: &Poly, n: u32) -> u128 {
        all_monic(g1.field(), n)
            .unwrap()
            .filter(|f| g1.divides(&(f + h1)).unwrap() && g2.divides(&(f + h2)).unwrap())
            .count() as u128
    }

    #[test]
    fn trivial_sums() {
        let f = f2();
        let t = IrreducibleTable::build(f, 8).unwrap();
        let one = FunctionSpec::one();
        let spec = CorrelationSpec::new(
            f,
            8,
            Domain::Monic,
            vec![poly("0", f), poly("1", f)],
            vec![one.clone(), one.clone()],
        );
        let r = correlate(&spec, &t).unwrap();
        assert_eq!(r.raw_sum, RawSum::Int(256));
        assert!(r.deviation.unwrap() <= 1e-12);
        let spec = CorrelationSpec::new(
            f,
            2,
            Domain::Prime,
            vec![poly("0", f), poly("1", f)],
            vec![one.clone(), one],
        );
        let r = correlate(&spec, &t).unwrap();
        assert_eq!(r.raw_sum, RawSum::Int(1));
    }

    #[test]
    fn kfree_pair_example() {
        let f = f2();
        let t = IrreducibleTable::build(f, 2).unwrap();
        let k2 = FunctionSpec::kfree(2).unwrap();
        let spec = CorrelationSpec::new(
            f,
            2,
            Domain::Monic,
            vec![poly("0", f), poly("1", f)],
            vec![k2.clone(), k2],
        );
        assert_eq!(correlate(&spec, &t).unwrap().raw_sum, RawSum::Int(2));
    }

    #[test]
    fn general_field_matches_direct_evaluation() {
        let f = FieldSpec::new(3).unwrap();
        let t = IrreducibleTable::build(f, 5).unwrap();
        let shifts = vec![poly("0", f), poly("2x+1", f), poly("x^2", f)];
        let fns = vec![
            FunctionSpec::moebius(),
            FunctionSpec::liouville(),
            FunctionSpec::kfree(3).unwrap(),
        ];
        let mut spec = CorrelationSpec::new(f, 5, Domain::Monic, shifts.clone(), fns.clone());
        spec.partitions = 5;
        let r = correlate(&spec, &t).unwrap();
        let mut direct = 0i64;
        for g in all_monic(f, 5).unwrap() {
            let mut term = 1;
            for (h, s) in shifts.iter().zip(&fns) {
                term *= s.eval_int(t.factorize(&(&g + h)).unwrap().factors());
            }
            direct += term;
        }
        assert_eq!(r.raw_sum, RawSum::Int(direct as i128));
        assert!(r.main_term.is_none());
    }

    #[test]
    fn prime_domain_general_field() {
        let f = FieldSpec::new(5).unwrap();
        let t = IrreducibleTable::build(f, 4).unwrap();
        let one = FunctionSpec::one();
        let spec = CorrelationSpec::new(
            f,
            4,
            Domain::Prime,
            vec![poly("0", f), poly("3", f)],
            vec![one.clone(), one],
        );
        let r = correlate(&spec, &t).unwrap();
        assert_eq!(r.raw_sum, RawSum::Int(t.count(4) as i128));
        assert_eq!(r.normalized.re, 1.0);
        assert!(r.deviation.unwrap() <= 1e-12);
    }

    #[test]
    fn validation_errors() {
        let f = f2();
        let t = IrreducibleTable::build(f, 3).unwrap();
        let one = FunctionSpec::one();
        let bad_shift = CorrelationSpec::new(
            f,
            3,
            Domain::Monic,
            vec![poly("x^3", f), poly("0", f)],
            vec![one.clone(), one.clone()],
        );
        assert!(correlate(&bad_shift, &t).is_err());
        let small = CorrelationSpec::new(
            f,
            10,
            Domain::Monic,
            vec![poly("0", f), poly("1", f)],
            vec![one.clone(), one.clone()],
        );
        assert!(matches!(
            correlate(&small, &t),
            Err(Error::TableTooSmall { .. })
        ));
        let mut three = CorrelationSpec::new(
            f,
            3,
            Domain::Monic,
            vec![poly("0", f); 3],
            vec![one.clone(); 3],
        );
        three.with_main_term = true;
        assert!(correlate(&three, &t).is_err());
        let mismatch = CorrelationSpec::new(
            f,
            3,
            Domain::Monic,
            vec![poly("0", f)],
            vec![one.clone(), one],
        );
        assert!(correlate(&mismatch, &t).is_err());
    }

    #[test]
    fn partitions_agree() {
        let f = f2();
        let t = IrreducibleTable::build(f, 6).unwrap();
        let shifts = vec![poly("0", f), poly("x", f)];
        let ints = vec![FunctionSpec::liouville(), FunctionSpec::liouville()];
        let s = exp_additive(&AdditiveSpec::log_phi_ratio(f), 1.3);
        let floats = vec![s.clone(), s.conj()];
        let run = |fns: &Vec<FunctionSpec>, parts| {
            let mut spec = CorrelationSpec::new(f, 12, Domain::Monic, shifts.clone(), fns.clone());
            spec.partitions = parts;
            correlate(&spec, &t).unwrap().raw_sum
        };
        let base = run(&ints, 1);
        assert_eq!(run(&ints, 4), base);
        assert_eq!(run(&ints, 16), base);
        let base = run(&floats, 1).to_complex();
        for parts in [4, 16] {
            assert!(
                (run(&floats, parts).to_complex() - base).norm() <= 1e-12 * base.norm().max(1.0)
            );
        }
    }

    #[test]
    fn conjugation_symmetry() {
        let f = FieldSpec::new(3).unwrap();
        let t = IrreducibleTable::build(f, 4).unwrap();
        let a = exp_additive(&AdditiveSpec::big_omega(), 0.8);
        let b = exp_additive(&AdditiveSpec::log_phi_ratio(f), -2.1);
        let shifts = vec![poly("0", f), poly("x+2", f)];
        let spec = CorrelationSpec::new(
            f,
            7,
            Domain::Monic,
            shifts.clone(),
            vec![a.clone(), b.clone()],
        );
        let conj = CorrelationSpec::new(f, 7, Domain::Monic, shifts, vec![a.conj(), b.conj()]);
        let z = correlate(&spec, &t).unwrap();
        let w = correlate(&conj, &t).unwrap();
        assert!((z.raw_sum.to_complex().conj() - w.raw_sum.to_complex()).norm() < 1e-9);
        assert!(z.normalized.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn crt_examples() {
        let f = f2();
        let (zero, one) = (Poly::zero(f), Poly::one(f));
        let x = poly("x", f);
        assert_eq!(crt_count(&x, &poly("x+1", f), &zero, &zero, 3).unwrap(), 2);
        assert_eq!(crt_count(&x, &x, &zero, &one, 3).unwrap(), 0);
        assert_eq!(crt_count(&one, &one, &zero, &x, 5).unwrap(), 32);
        // lcm of degree 5 above n = 3: at most one solution.
        let g1 = poly("x^2+x+1", f);
        let g2 = poly("x^3+x+1", f);
        for h in all_monic(f, 2).unwrap() {
            assert_eq!(
                crt_count(&g1, &g2, &h, &zero, 3).unwrap(),
                brute_crt(&g1, &g2, &h, &zero, 3)
            );
        }
        assert!(crt_count(&zero, &one, &zero, &zero, 2).is_err());
    }

    #[test]
    fn crt_exhaustive_small() {
        let f = f2();
        for n in 1..=4 {
            let gs: Vec<Poly> = (0..=3).flat_map(|d| all_monic(f, d).unwrap()).collect();
            let hs: Vec<Poly> = (0..n)
                .flat_map(|d| all_monic(f, d).unwrap())
                .chain([Poly::zero(f)])
                .collect();
            for g1 in &gs {
                for g2 in &gs {
                    for h2 in &hs {
                        let h1 = Poly::zero(f);
                        assert_eq!(
                            crt_count(g1, g2, &h1, h2, n).unwrap(),
                            brute_crt(g1, g2, &h1, h2, n)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn report_row_leaves_timing_empty() {
        let f = f2();
        let t = IrreducibleTable::build(f, 4).unwrap();
        let one = FunctionSpec::one();
        let spec = CorrelationSpec::new(
            f,
            4,
            Domain::Monic,
            vec![poly("0", f), poly("1", f)],
            vec![one.clone(), one],
        );
        let r = correlate(&spec, &t).unwrap();
        let row = r.row(false);
        assert_eq!(row.raw_re, RawNumber::Int(16));
        assert_eq!(row.h_list, "0;1");
        assert_eq!(row.seconds, None);
        assert!(r.row(true).seconds.is_some());
    }

    #[test]
    fn scan_with_overlay() {
        let f = f2();
        let t = IrreducibleTable::build(f, 12).unwrap();
        let one = FunctionSpec::one();
        let template = CorrelationSpec::new(
            f,
            6,
            Domain::Monic,
            vec![poly("0", f), poly("1", f)],
            vec![one.clone(), one],
        );
        let overlay = ShapeOverlay {
            r: 4,
            alpha: 0.75,
            c: 1.0,
            a: 1.0,
        };
        let scan = deviation_scan(&template, &[6, 8, 10], &t, Some(overlay)).unwrap();
        assert_eq!(scan.len(), 3);
        for point in &scan {
            assert!(point.report.deviation.unwrap() <= 1e-12);
            assert!(point.shape.unwrap().total > 0.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn crt_matches_enumeration(
            n in 1u32..=7, d1 in 0u32..=5, d2 in 0u32..=5,
            i1: u64, i2: u64, j1: u64, j2: u64,
        ) {
            let f = f2();
            let g1 = Poly::monic_from_index(f, d1, i1 % (1 << d1));
            let g2 = Poly::monic_from_index(f, d2, i2 % (1 << d2));
            let h1 = Poly::from_packed(f, j1 % (1 << n));
            let h2 = Poly::from_packed(f, j2 % (1 << n));
            prop_assert_eq!(crt_count(&g1, &g2, &h1, &h2, n).unwrap(), brute_crt(&g1, &g2, &h1, &h2, n));
        }
    }
}
