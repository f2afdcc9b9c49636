//! Distributions of shifted additive functions, their characteristic
//! functions, Turán–Kubilius ratios and sieve statistics.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::arith::{exp_additive, AdditiveSpec};
use crate::correlation::{correlate, CompensatedSum, CorrelationSpec, Domain, ShiftedDomain};
use crate::error::{Error, Result};
use crate::field::{all_monic, Poly};
use crate::gf2;
use crate::main_term::{main_term, Horizon, MainTermOptions, Mode, ShiftPair, TruncatedValue};
use crate::sieve::{phi_prime_power, residue_index, IrreducibleTable, Prime, PrimePower};

const MERGE_TOLERANCE: f64 = 1e-12;

/// A finite sample stored as sorted distinct values with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    support: Vec<(f64, u64)>,
    total: u64,
}

impl EmpiricalDistribution {
    /// Sorts the sample and merges values that agree to a relative 1e-12.
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        let mut support: Vec<(f64, u64)> = Vec::new();
        for v in samples {
            match support.last_mut() {
                Some((last, count))
                    if (v - *last).abs() <= MERGE_TOLERANCE * last.abs().max(1.0) =>
                {
                    *count += 1
                }
                _ => support.push((v, 1)),
            }
        }
        let total = support.iter().map(|(_, c)| c).sum();
        Self { support, total }
    }

    pub fn support(&self) -> &[(f64, u64)] {
        &self.support
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Right-continuous CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        let below = self.support.partition_point(|(v, _)| *v <= x);
        let count: u64 = self.support[..below].iter().map(|(_, c)| c).sum();
        count as f64 / self.total as f64
    }

    /// `E[exp(i t X)]` summed over the support.
    pub fn charfn(&self, t: f64) -> Complex64 {
        let mut re = CompensatedSum::default();
        let mut im = CompensatedSum::default();
        for &(v, c) in &self.support {
            let z = Complex64::cis(t * v) * c as f64;
            re.add(z.re);
            im.add(z.im);
        }
        Complex64::new(re.value(), im.value()) / self.total as f64
    }
}

fn check_pairs(additives: &[AdditiveSpec], shifts: &[Poly]) -> Result<()> {
    if additives.len() != shifts.len() || additives.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "{} additive functions for {} shifts",
            additives.len(),
            shifts.len()
        )));
    }
    Ok(())
}

/// The multiset of `sum_i psi_i(f + h_i)` over the domain.
pub fn empirical_distribution(
    additives: &[AdditiveSpec],
    shifts: &[Poly],
    n: u32,
    domain: Domain,
    table: &IrreducibleTable,
    partitions: usize,
) -> Result<EmpiricalDistribution> {
    check_pairs(additives, shifts)?;
    let dom = ShiftedDomain::new(table, n, domain, shifts)?;
    let parts = dom.fold(partitions, Vec::new, |acc: &mut Vec<f64>, factors| {
        acc.push(additives.iter().zip(factors).map(|(a, f)| a.eval(f)).sum());
    })?;
    Ok(EmpiricalDistribution::from_samples(parts.concat()))
}

/// Sup-distance between two CDFs over the merged support.
pub fn ks_distance(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut ca, mut cb) = (0u64, 0u64);
    let (ta, tb) = (a.total as f64, b.total as f64);
    let mut best: f64 = 0.0;
    while i < a.support.len() || j < b.support.len() {
        let va = a.support.get(i).map_or(f64::INFINITY, |s| s.0);
        let vb = b.support.get(j).map_or(f64::INFINITY, |s| s.0);
        let x = va.min(vb);
        while i < a.support.len() && a.support[i].0 <= x {
            ca += a.support[i].1;
            i += 1;
        }
        while j < b.support.len() && b.support[j].0 <= x {
            cb += b.support[j].1;
            j += 1;
        }
        best = best.max((ca as f64 / ta - cb as f64 / tb).abs());
    }
    best
}

/// Empirical and limiting characteristic functions on a grid of `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharFunctionGrid {
    pub t: Vec<f64>,
    pub empirical: Vec<Complex64>,
    pub limit: Option<Vec<TruncatedValue>>,
    pub error: Option<Vec<f64>>,
}

impl CharFunctionGrid {
    pub fn with_limit(mut self, limit: Vec<TruncatedValue>) -> Self {
        self.error = Some(
            self.empirical
                .iter()
                .zip(&limit)
                .map(|(e, l)| (e - l.value).norm())
                .collect(),
        );
        self.limit = Some(limit);
        self
    }

    pub fn max_error(&self) -> Option<f64> {
        self.error
            .as_ref()
            .map(|e| e.iter().copied().fold(0.0, f64::max))
    }
}

/// `phi_n(t)`: the normalized correlation of `exp(i t psi_j)` at each `t`.
#[allow(clippy::too_many_arguments)]
pub fn empirical_charfn(
    psi1: &AdditiveSpec,
    psi2: &AdditiveSpec,
    shifts: &ShiftPair,
    n: u32,
    domain: Domain,
    t_grid: &[f64],
    table: &IrreducibleTable,
    partitions: usize,
) -> Result<CharFunctionGrid> {
    let empirical = t_grid
        .iter()
        .map(|&t| {
            let mut spec = CorrelationSpec::new(
                table.field(),
                n,
                domain,
                vec![shifts.h1().clone(), shifts.h2().clone()],
                vec![exp_additive(psi1, t), exp_additive(psi2, t)],
            );
            spec.with_main_term = false;
            spec.partitions = partitions;
            Ok(correlate(&spec, table)?.normalized)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CharFunctionGrid {
        t: t_grid.to_vec(),
        empirical,
        limit: None,
        error: None,
    })
}

/// `phi(t) = P_1(gamma) P_2(gamma)` with `psi_j` replaced by `exp(i t psi_j)`.
#[allow(clippy::too_many_arguments)]
pub fn limit_charfn(
    psi1: &AdditiveSpec,
    psi2: &AdditiveSpec,
    shifts: &ShiftPair,
    t_grid: &[f64],
    mode: Mode,
    gamma: Option<u32>,
    table: &IrreducibleTable,
    options: MainTermOptions,
) -> Result<Vec<TruncatedValue>> {
    t_grid
        .iter()
        .map(|&t| {
            main_term(
                Horizon::Infinite,
                gamma,
                shifts,
                &exp_additive(psi1, t),
                &exp_additive(psi2, t),
                mode,
                table,
                options,
            )
        })
        .collect()
}

/// Partial sums by degree of the three convergence hypotheses of the limit
/// law, with a warning for each series whose increments fail to shrink.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    /// `sum_{|psi_i(P)| <= 1} psi_i(P) / q^deg P`, for i = 1, 2.
    pub small_values: [Vec<f64>; 2],
    /// `sum (psi_1(P) + psi_2(P)) / q^deg P` over primes where both are at most 1.
    pub joint: Vec<f64>,
    /// `sum_{|psi_i(P)| > 1} q^-deg P`, for i = 1, 2.
    pub large_values: [Vec<f64>; 2],
    pub warnings: Vec<String>,
}

pub fn hypothesis_series(
    psi1: &AdditiveSpec,
    psi2: &AdditiveSpec,
    cap: u32,
    table: &IrreducibleTable,
) -> Result<HypothesisReport> {
    if cap < 2 {
        return Err(Error::InvalidParameter("need at least two degrees".into()));
    }
    let q = table.field().q() as f64;
    let symmetric = psi1.flags().degree_symmetric && psi2.flags().degree_symmetric;
    if !symmetric {
        table.require(cap)?;
    }
    let mut inc = vec![[0.0f64; 5]; cap as usize];
    for d in 1..=cap {
        let w = q.powi(-(d as i32));
        let mut add = |p: Prime, weight: f64| {
            let (a, b) = (psi1.value(p, 1), psi2.value(p, 1));
            let row = &mut inc[d as usize - 1];
            for (i, v) in [a, b].into_iter().enumerate() {
                if v.abs() <= 1.0 {
                    row[i] += weight * v * w;
                } else {
                    row[3 + i] += weight * w;
                }
            }
            if a.abs() <= 1.0 && b.abs() <= 1.0 {
                row[2] += weight * (a + b) * w;
            }
        };
        if symmetric {
            add(
                Prime {
                    degree: d,
                    index: 0,
                },
                table.count_f64(d),
            );
        } else {
            for p in table.primes_of_degree(d) {
                add(p, 1.0);
            }
        }
    }
    let partial = |k: usize| -> Vec<f64> {
        inc.iter()
            .scan(0.0, |acc, row| {
                *acc += row[k];
                Some(*acc)
            })
            .collect()
    };
    let names = [
        "small-value series of psi_1",
        "small-value series of psi_2",
        "joint series",
        "large-value series of psi_1",
        "large-value series of psi_2",
    ];
    // A harmonic-like series keeps d * |increment_d| bounded away from zero.
    let mut warnings = Vec::new();
    for (k, name) in names.iter().enumerate() {
        let weighted = |d: usize| (d + 1) as f64 * inc[d][k].abs();
        let last = weighted(cap as usize - 1);
        let peak = (0..cap as usize).map(weighted).fold(0.0, f64::max);
        if last > 1e-15 && last >= 0.25 * peak {
            warnings.push(format!(
                "{name} does not appear to converge (increment {last:.3e} at degree {cap})"
            ));
        }
    }
    Ok(HypothesisReport {
        small_values: [partial(0), partial(1)],
        joint: partial(2),
        large_values: [partial(3), partial(4)],
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TkReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

fn ratio_or_zero(lhs: f64, rhs: f64) -> f64 {
    if rhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// Shifted Turán–Kubilius statistic. Over monics: the variance sum against
/// `q^n sum |psi(P^m)|^2 / q^{m deg P}`. Over irreducibles: the first
/// absolute moment about `A(n)` against `N_n B(n)`.
pub fn tk_ratio(
    psi: &AdditiveSpec,
    h: &Poly,
    n: u32,
    domain: Domain,
    table: &IrreducibleTable,
    partitions: usize,
) -> Result<TkReport> {
    let field = table.field();
    let q = field.q();
    let qf = q as f64;
    if !psi.flags().degree_symmetric {
        table.require(n)?;
    }
    // Sums over prime powers with m deg P <= n of weight(d, m) * value.
    let prime_power_sum = |f: &dyn Fn(Prime, u32) -> f64| -> f64 {
        let mut acc = CompensatedSum::default();
        for d in 1..=n {
            for m in 1..=n / d {
                if psi.flags().degree_symmetric {
                    acc.add(
                        table.count_f64(d)
                            * f(
                                Prime {
                                    degree: d,
                                    index: 0,
                                },
                                m,
                            ),
                    );
                } else {
                    for p in table.primes_of_degree(d) {
                        acc.add(f(p, m));
                    }
                }
            }
        }
        acc.value()
    };
    let dom = ShiftedDomain::new(table, n, domain, std::slice::from_ref(h))?;
    let x = |d: u32| qf.powi(-(d as i32));
    match domain {
        Domain::Monic => {
            let centre = prime_power_sum(&|p, m| {
                psi.value(p, m) * x(p.degree).powi(m as i32) * (1.0 - x(p.degree))
            });
            let var = prime_power_sum(&|p, m| psi.value(p, m).powi(2) * x(p.degree).powi(m as i32));
            let parts = dom.fold(partitions, CompensatedSum::default, |acc, factors| {
                acc.add((psi.eval(&factors[0]) - centre).powi(2));
            })?;
            let mut lhs = CompensatedSum::default();
            parts.iter().for_each(|p| lhs.add(p.value()));
            let rhs = qf.powi(n as i32) * var;
            Ok(TkReport {
                lhs: lhs.value(),
                rhs,
                ratio: ratio_or_zero(lhs.value(), rhs),
            })
        }
        Domain::Prime => {
            let phi = |p: Prime, m: u32| phi_prime_power(q, p.degree, m) as f64;
            let centre = prime_power_sum(&|p, m| psi.value(p, m) / phi(p, m) * (1.0 - x(p.degree)));
            let b2 = prime_power_sum(&|p, m| psi.value(p, m).powi(2) / phi(p, m));
            let parts = dom.fold(partitions, CompensatedSum::default, |acc, factors| {
                acc.add((psi.eval(&factors[0]) - centre).abs());
            })?;
            let mut lhs = CompensatedSum::default();
            parts.iter().for_each(|p| lhs.add(p.value()));
            let rhs = table.count(n) as f64 * b2.sqrt();
            Ok(TkReport {
                lhs: lhs.value(),
                rhs,
                ratio: ratio_or_zero(lhs.value(), rhs),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SieveDiagnostics {
    pub n: u32,
    /// `sum_{n/2 < deg Q <= n} Phi(Q) pi(n; Q, -h)^2`.
    pub theta: f64,
    /// `theta / N_n^2`.
    pub theta_ratio: f64,
    /// `sum_M max_B |pi(n; M, B) - q^n / (n Phi(M))|` over `1 <= deg M < n/2 - t log_q n`.
    pub bv_sum: f64,
    /// `q^n / n^{t+1}`.
    pub bv_envelope: f64,
    pub bv_ratio: f64,
    /// `H(j) = sum_{deg M = j} mu(M)^2 3^omega(M) / |M|` for `j = 1..=n`.
    pub h_sequence: Vec<f64>,
    /// `H(j) / j^2`.
    pub h_over_n2: Vec<f64>,
    /// `max_{deg f = n} prod_{P | f} (1 + 1/|P|)`.
    pub divprod_max: f64,
    /// `divprod_max / (1 + ln n)`.
    pub divprod_ratio: f64,
}

/// Residues modulo `m` coprime to it, indexed like [`residue_index`].
fn coprime_residues(m: &Poly) -> Result<Vec<bool>> {
    let field = m.field();
    let e = m.degree().ok_or(Error::DivisionByZero)?;
    let size = (field.p() as usize).pow(e);
    if let Some(mb) = m.to_packed() {
        if mb == 1 {
            return Ok(vec![true]);
        }
        return Ok((0..size as u64)
            .map(|r| r != 0 && gf2::gcd(mb, r) == 1)
            .collect());
    }
    (0..size)
        .map(|i| {
            let mut coeffs = Vec::with_capacity(e as usize);
            let mut rest = i;
            for _ in 0..e {
                coeffs.push((rest % field.p() as usize) as u32);
                rest /= field.p() as usize;
            }
            let r = Poly::from_residues(field, &coeffs);
            debug_assert_eq!(residue_index(&r), i);
            Ok(m.is_one() || (!r.is_zero() && r.gcd(m)?.is_one()))
        })
        .collect()
}

fn phi_of_factors(q: u32, factors: &[(Prime, u32)]) -> u128 {
    factors
        .iter()
        .map(|&(p, m)| phi_prime_power(q, p.degree, m))
        .product()
}

/// Divisors of `prod P^m` with degree in `(lo, hi]`, as prime-power lists.
fn divisors_in_range(factors: &[PrimePower], lo: u32, hi: u32, out: &mut Vec<Vec<(Prime, u32)>>) {
    fn walk(
        factors: &[PrimePower],
        i: usize,
        deg: u32,
        cur: &mut Vec<(Prime, u32)>,
        lo: u32,
        hi: u32,
        out: &mut Vec<Vec<(Prime, u32)>>,
    ) {
        if i == factors.len() {
            if deg > lo && deg <= hi {
                out.push(cur.clone());
            }
            return;
        }
        walk(factors, i + 1, deg, cur, lo, hi, out);
        let f = factors[i];
        for e in 1..=f.multiplicity {
            let d = deg + e * f.prime.degree;
            if d > hi {
                break;
            }
            cur.push((f.prime, e));
            walk(factors, i + 1, d, cur, lo, hi, out);
            cur.pop();
        }
    }
    walk(factors, 0, 0, &mut Vec::new(), lo, hi, out);
}

/// Exact sieve statistics at degree `n` with shift `h` and BV exponent `t`.
pub fn sieve_diagnostics(
    n: u32,
    h: &Poly,
    t: f64,
    table: &IrreducibleTable,
    partitions: usize,
) -> Result<SieveDiagnostics> {
    table.require(n)?;
    let field = table.field();
    let q = field.q();
    let qn = (q as f64).powi(n as i32);
    let primes = table.count(n) as f64;

    let dom = ShiftedDomain::new(table, n, Domain::Prime, std::slice::from_ref(h))?;
    let parts = dom.fold(
        partitions,
        HashMap::<Vec<(Prime, u32)>, u64>::new,
        |acc, factors| {
            let mut divisors = Vec::new();
            divisors_in_range(&factors[0], n / 2, n, &mut divisors);
            for d in divisors {
                *acc.entry(d).or_default() += 1;
            }
        },
    )?;
    let mut counts: HashMap<Vec<(Prime, u32)>, u64> = HashMap::new();
    for part in parts {
        for (k, v) in part {
            *counts.entry(k).or_default() += v;
        }
    }
    let mut keys: Vec<_> = counts.keys().cloned().collect();
    keys.sort();
    let theta: f64 = keys
        .iter()
        .map(|k| phi_of_factors(q, k) as f64 * (counts[k] as f64).powi(2))
        .sum();

    let log_q_n = (n as f64).ln() / (q as f64).ln();
    let bound = n as f64 / 2.0 - t * log_q_n;
    let mut bv_sum = 0.0;
    let mut e = 1;
    while (e as f64) < bound {
        for m in all_monic(field, e)? {
            let counts = table.residue_counts(n, &m)?;
            let coprime = coprime_residues(&m)?;
            let phi_m = crate::arith::phi(&table.factorize(&m)?) as f64;
            let expected = qn / (n as f64 * phi_m);
            let worst = counts
                .iter()
                .zip(&coprime)
                .filter(|(_, &c)| c)
                .map(|(&c, _)| (c as f64 - expected).abs())
                .fold(0.0, f64::max);
            bv_sum += worst;
        }
        e += 1;
    }
    let bv_envelope = qn / (n as f64).powf(t + 1.0);

    let mut h_sequence = Vec::with_capacity(n as usize);
    let mut divprod_max = 1.0;
    for j in 1..=n {
        let dom = ShiftedDomain::new(table, j, Domain::Monic, &[Poly::zero(field)])?;
        let parts = dom.fold(
            partitions,
            || (0i128, 1.0f64),
            |acc, factors| {
                let fs = &factors[0];
                if fs.iter().all(|f| f.multiplicity == 1) {
                    acc.0 += 3i128.pow(fs.len() as u32);
                }
                if j == n {
                    let prod: f64 = fs
                        .iter()
                        .map(|f| 1.0 + (q as f64).powi(-(f.prime.degree as i32)))
                        .product();
                    acc.1 = acc.1.max(prod);
                }
            },
        )?;
        let total: i128 = parts.iter().map(|p| p.0).sum();
        h_sequence.push(total as f64 / (q as f64).powi(j as i32));
        if j == n {
            divprod_max = parts.iter().map(|p| p.1).fold(1.0, f64::max);
        }
    }
    let h_over_n2 = h_sequence
        .iter()
        .enumerate()
        .map(|(i, h)| h / ((i + 1) as f64).powi(2))
        .collect();
    Ok(SieveDiagnostics {
        n,
        theta,
        theta_ratio: theta / (primes * primes),
        bv_sum,
        bv_envelope,
        bv_ratio: bv_sum / bv_envelope,
        h_sequence,
        h_over_n2,
        divprod_max,
        divprod_ratio: divprod_max / (1.0 + (n as f64).ln()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BtViolation {
    pub n: u32,
    pub modulus: String,
    pub residue_index: usize,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BtReport {
    /// Number of `(n, M, B)` triples checked.
    pub checked: u64,
    pub violations: Vec<BtViolation>,
}

/// Checks `pi(n; M, B) <= 2 q^n / (Phi(M) (n - deg M + 1))` for every monic
/// `M` with `deg M < n` and every residue `B` coprime to `M`, for `n <= n_max`.
pub fn brun_titchmarsh_check(n_max: u32, table: &IrreducibleTable) -> Result<BtReport> {
    table.require(n_max)?;
    let field = table.field();
    let q = field.q() as u128;
    let mut checked = 0;
    let mut violations = Vec::new();
    for n in 1..=n_max {
        for e in 0..n {
            for m in all_monic(field, e)? {
                let counts = table.residue_counts(n, &m)?;
                let coprime = coprime_residues(&m)?;
                let phi_m = crate::arith::phi(&table.factorize(&m)?);
                let limit = 2 * q.pow(n);
                for (idx, (&count, &ok)) in counts.iter().zip(&coprime).enumerate() {
                    if !ok {
                        continue;
                    }
                    checked += 1;
                    if count as u128 * phi_m * (n - e + 1) as u128 > limit {
                        violations.push(BtViolation {
                            n,
                            modulus: m.to_string(),
                            residue_index: idx,
                            count,
                        });
                    }
                }
            }
        }
    }
    Ok(BtReport {
        checked,
        violations,
    })
}

/// One support point of a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributionRow {
    pub value: f64,
    pub multiplicity: u64,
}

impl EmpiricalDistribution {
    pub fn rows(&self) -> Vec<DistributionRow> {
        self.support
            .iter()
            .map(|&(value, multiplicity)| DistributionRow {
                value,
                multiplicity,
            })
            .collect()
    }
}
