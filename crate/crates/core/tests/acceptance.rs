//! Acceptance suite: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use fqcorr::main_term::{liouville_local_closed, local_factor, main_term, DEFAULT_DEPTH};
use fqcorr::stats::{brun_titchmarsh_check, empirical_charfn, limit_charfn, tk_ratio};
use fqcorr::{
    all_monic, correlate, crt_count, parse_poly, AdditiveSpec, CorrelationSpec, Domain, FieldSpec,
    FunctionSpec, Horizon, IrreducibleTable, MainTermOptions, Mode, Poly, Prime, RawSum, ShiftPair,
    Valuation,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn field(p: u32) -> FieldSpec {
    FieldSpec::new(p).unwrap()
}

fn poly(s: &str, f: FieldSpec) -> Poly {
    parse_poly(s, f).unwrap()
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const GRID: [(u32, u32); 3] = [(2, 20), (3, 12), (5, 8)];

fn tables() -> Vec<IrreducibleTable> {
    GRID.iter()
        .map(|&(p, n)| IrreducibleTable::build(field(p), n).unwrap())
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for table in tables() {
        for n in 1..=table.max_deg() {
            let report = table.necklace_check(n).map_err(|e| e.to_string())?;
            if !report.matches {
                failures.push(format!("q={} n={n}", table.field().q()));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        failures.is_empty() && secs < 120.0,
        format!("necklace identity on the grid in {secs:.2}s, failures {failures:?}"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for table in tables() {
        let q = table.field().q() as i128;
        for n in 1..=table.max_deg() {
            let diff = n as i128 * table.count(n) as i128 - q.pow(n);
            if diff * diff > 16 * q.pow(n) {
                failures.push(format!("q={q} n={n}"));
            }
            worst = worst.max(diff.abs() as f64 / (q as f64).powf(n as f64 / 2.0));
        }
    }
    check(
        failures.is_empty(),
        format!("max |n N_n - q^n| / q^(n/2) = {worst:.4} <= 4, failures {failures:?}"),
    )
}

fn criterion_3() -> Outcome {
    let mut details = Vec::new();
    for (p, n) in [(2, 10), (3, 6), (5, 4)] {
        let f = field(p);
        let table = IrreducibleTable::build(f, n).unwrap();
        for domain in [Domain::Monic, Domain::Prime] {
            let spec = CorrelationSpec::new(
                f,
                n,
                domain,
                vec![Poly::zero(f), Poly::one(f)],
                vec![FunctionSpec::one(), FunctionSpec::one()],
            );
            let report = correlate(&spec, &table).map_err(|e| e.to_string())?;
            let expected = match domain {
                Domain::Monic => (p as i128).pow(n),
                Domain::Prime => table.count(n) as i128,
            };
            let main = report.main_term.ok_or("main term missing")?;
            let main_err = (main.value - Complex64::new(1.0, 0.0)).norm();
            if report.raw_sum != RawSum::Int(expected) || main_err > 1e-12 {
                return Err(format!(
                    "q={p} n={n} {domain}: raw {:?} expected {expected}, main term {}",
                    report.raw_sum, main.value
                ));
            }
            details.push(format!("q={p} n={n} {domain} = {expected}"));
        }
    }
    Ok(format!(
        "exact sums and unit main terms: {}",
        details.join(", ")
    ))
}

fn random_poly(rng: &mut ChaCha8Rng, f: FieldSpec, max_deg: u32) -> Poly {
    let deg = rng.gen_range(0..=max_deg);
    let coeffs: Vec<u32> = (0..=deg).map(|_| rng.gen_range(0..f.p())).collect();
    Poly::from_residues(f, &coeffs)
}

fn random_monic(rng: &mut ChaCha8Rng, f: FieldSpec, max_deg: u32) -> Poly {
    let deg = rng.gen_range(0..=max_deg);
    let index = rng.gen_range(0..(f.p() as u64).pow(deg));
    Poly::monic_from_index(f, deg, index)
}

fn criterion_4() -> Outcome {
    let f = field(2);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut nonzero, mut zero) = (0, 0);
    for instance in 0..1000 {
        let n = rng.gen_range(1..=10);
        let g1 = random_monic(&mut rng, f, 6);
        let g2 = random_monic(&mut rng, f, 6);
        let h1 = random_poly(&mut rng, f, n - 1);
        let h2 = random_poly(&mut rng, f, n - 1);
        let closed = crt_count(&g1, &g2, &h1, &h2, n).map_err(|e| e.to_string())?;
        let brute = all_monic(f, n)
            .unwrap()
            .filter(|m| g1.divides(&(m + &h1)).unwrap() && g2.divides(&(m + &h2)).unwrap())
            .count() as u128;
        if closed != brute {
            return Err(format!(
                "instance {instance}: g1={g1} g2={g2} h1={h1} h2={h2} n={n}: {closed} vs {brute}"
            ));
        }
        if brute == 0 {
            zero += 1
        } else {
            nonzero += 1
        }
    }
    Ok(format!(
        "1000 random instances agree ({nonzero} nonzero, {zero} zero)"
    ))
}

fn criterion_5() -> Outcome {
    let mut worst: f64 = 0.0;
    for q in [2, 3] {
        for d in 1..=6 {
            for k in 0..=3 {
                let closed = liouville_local_closed(d, k, q).map_err(|e| e.to_string())?;
                let closed = *closed.numer() as f64 / *closed.denom() as f64;
                let generic = local_factor(
                    field(q),
                    Prime {
                        degree: d,
                        index: 0,
                    },
                    Valuation::Finite(k),
                    &FunctionSpec::liouville(),
                    &FunctionSpec::liouville(),
                    Mode::Monic,
                    DEFAULT_DEPTH,
                )
                .map_err(|e| e.to_string())?;
                worst = worst.max((generic.value - Complex64::new(closed, 0.0)).norm());
            }
        }
    }
    check(
        worst <= 1e-12,
        format!("max |generic - closed| = {worst:.3e}"),
    )
}

fn chowla_spec(n: u32, partitions: usize) -> CorrelationSpec {
    let f = field(2);
    let mut spec = CorrelationSpec::new(
        f,
        n,
        Domain::Monic,
        vec![Poly::zero(f), poly("x", f)],
        vec![FunctionSpec::liouville_trunc(2).unwrap(); 2],
    );
    spec.partitions = partitions;
    spec
}

fn criterion_6(table: &IrreducibleTable) -> (Outcome, Option<RawSum>) {
    let start = Instant::now();
    let mut deviations = Vec::new();
    let mut raw = None;
    for n in [10, 20] {
        match correlate(&chowla_spec(n, 16), table) {
            Ok(report) => {
                deviations.push(report.deviation.unwrap_or(f64::NAN));
                raw = Some(report.raw_sum);
            }
            Err(e) => return (Err(e.to_string()), None),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "deviation n=10 {:.3e}, n=20 {:.3e}, {secs:.1}s",
        deviations[0], deviations[1]
    );
    (check(deviations[1] < deviations[0], detail), raw)
}

fn criterion_7(table: &IrreducibleTable) -> Outcome {
    let f = field(2);
    let psi = FunctionSpec::phi_ratio(f);
    let shifts = ShiftPair::new(Poly::zero(f), Poly::one(f)).unwrap();
    let options = MainTermOptions {
        depth: DEFAULT_DEPTH,
        cutoff: Some(40),
    };
    let limit = main_term(
        Horizon::Infinite,
        None,
        &shifts,
        &psi,
        &psi,
        Mode::Monic,
        table,
        options,
    )
    .map_err(|e| e.to_string())?;
    if limit.tail_bound > 1e-10 {
        return Err(format!("tail bound {:.3e} exceeds 1e-10", limit.tail_bound));
    }
    let oracle: f64 = (1..=80u32)
        .map(|d| fqcorr::sieve::necklace_count_f64(2, d) * (-2.0 * 4f64.powi(-(d as i32))).ln_1p())
        .sum::<f64>()
        .exp();
    if !limit.covers(Complex64::new(oracle, 0.0), 1e-13) {
        return Err(format!(
            "product {} disagrees with oracle {oracle}",
            limit.value
        ));
    }
    let ns = [8, 10, 12, 14, 16, 18];
    let mut devs = Vec::new();
    for n in ns {
        let mut spec = CorrelationSpec::new(
            f,
            n,
            Domain::Monic,
            vec![Poly::zero(f), Poly::one(f)],
            vec![psi.clone(), psi.clone()],
        );
        spec.with_main_term = false;
        let report = correlate(&spec, table).map_err(|e| e.to_string())?;
        devs.push((report.normalized - limit.value).norm());
    }
    let decreasing = devs.windows(2).filter(|w| w[1] < w[0]).count();
    let detail = format!(
        "limit {:.12} (tail {:.1e}), deviations {}, {decreasing}/5 decreasing steps",
        limit.value.re,
        limit.tail_bound,
        devs.iter()
            .map(|d| format!("{d:.3e}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    check(devs[5] < devs[0] && decreasing >= 4, detail)
}

/// Direct evaluation of the monic Turán–Kubilius ratio, shift zero.
fn tk_brute(psi: &AdditiveSpec, n: u32, table: &IrreducibleTable) -> f64 {
    let f = table.field();
    let x = |e: u32| 2f64.powi(-(e as i32));
    let (mut centre, mut var) = (0.0, 0.0);
    for d in 1..=n {
        for p in table.primes_of_degree(d) {
            for m in 1..=n / d {
                centre += psi.value(p, m) * x(m * d) * (1.0 - x(d));
                var += psi.value(p, m).powi(2) * x(m * d);
            }
        }
    }
    let lhs: f64 = all_monic(f, n)
        .unwrap()
        .map(|g| (psi.eval(table.factorize(&g).unwrap().factors()) - centre).powi(2))
        .sum();
    lhs / (2f64.powi(n as i32) * var)
}

fn criterion_8(table: &IrreducibleTable) -> Outcome {
    let f = field(2);
    let mut details = Vec::new();
    let mut ok = true;
    for psi in [AdditiveSpec::omega(), AdditiveSpec::simple_omega()] {
        let reference = tk_brute(&psi, 6, table);
        let mut ratios = Vec::new();
        for n in 6..=14 {
            let r = tk_ratio(&psi, &Poly::zero(f), n, Domain::Monic, table, 4)
                .map_err(|e| e.to_string())?;
            ratios.push(r.ratio);
        }
        if (ratios[0] - reference).abs() > 1e-9 * reference {
            return Err(format!(
                "{}: n=6 ratio {} vs brute force {reference}",
                psi.name(),
                ratios[0]
            ));
        }
        let max = ratios.iter().copied().fold(0.0, f64::max);
        ok &= max <= 2.0 * reference;
        details.push(format!("{} n=6 {reference:.4} max {max:.4}", psi.name()));
    }
    check(ok, details.join("; "))
}

fn criterion_9(table: &IrreducibleTable) -> Outcome {
    let f = field(2);
    let psi = AdditiveSpec::log_phi_ratio(f);
    let shifts = ShiftPair::new(Poly::zero(f), Poly::one(f)).unwrap();
    let grid: Vec<f64> = (0..=12).map(|k| -3.0 + 0.5 * k as f64).collect();
    let options = MainTermOptions {
        depth: DEFAULT_DEPTH,
        cutoff: Some(40),
    };
    let limit = limit_charfn(
        &psi,
        &psi,
        &shifts,
        &grid,
        Mode::Monic,
        None,
        table,
        options,
    )
    .map_err(|e| e.to_string())?;
    let mut errors = Vec::new();
    let one = Complex64::new(1.0, 0.0);
    let mut exact_at_zero = limit[6].value == one;
    for n in [8, 16] {
        let cf = empirical_charfn(&psi, &psi, &shifts, n, Domain::Monic, &grid, table, 16)
            .map_err(|e| e.to_string())?
            .with_limit(limit.clone());
        exact_at_zero &= cf.empirical[6] == one;
        errors.push(cf.max_error().unwrap());
    }
    check(
        errors[1] < errors[0] && exact_at_zero,
        format!(
            "max |phi_n - phi|: n=8 {:.3e}, n=16 {:.3e}; phi(0) = phi_n(0) = 1: {exact_at_zero}",
            errors[0], errors[1]
        ),
    )
}

fn criterion_10(table: &IrreducibleTable) -> Outcome {
    let report = brun_titchmarsh_check(10, table).map_err(|e| e.to_string())?;
    check(
        report.violations.is_empty(),
        format!(
            "{} (n, M, B) triples, {} violations",
            report.checked,
            report.violations.len()
        ),
    )
}

fn criterion_11(table: &IrreducibleTable, reference: Option<RawSum>) -> Outcome {
    let reference = reference.ok_or("criterion-6 run produced no raw sum")?;
    let mut sums = Vec::new();
    for partitions in [1, 4, 16] {
        let report = correlate(&chowla_spec(20, partitions), table).map_err(|e| e.to_string())?;
        sums.push(report.raw_sum);
    }
    check(
        sums.iter().all(|s| *s == reference),
        format!("raw sums for 1/4/16 partitions {sums:?}, criterion-6 run {reference:?}"),
    )
}

fn main() -> ExitCode {
    let table = IrreducibleTable::build(field(2), 20).unwrap();
    let mut results: Vec<(u32, Outcome)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4()),
        (5, criterion_5()),
    ];
    let (outcome, raw) = criterion_6(&table);
    results.push((6, outcome));
    results.push((7, criterion_7(&table)));
    results.push((8, criterion_8(&table)));
    results.push((9, criterion_9(&table)));
    results.push((10, criterion_10(&table)));
    results.push((11, criterion_11(&table, raw)));
    let mut failed = 0;
    for (id, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {id:>2}: PASS  {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2}: FAIL  {detail}")
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
