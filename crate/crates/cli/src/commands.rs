//! One function per subcommand. Each writes its rows through a [`Sink`].

use std::path::Path;
use std::time::Instant;

use fqcorr::correlation::{deviation_scan, RawNumber, ReportRow, ShapeOverlay, DEFAULT_PARTITIONS};
use fqcorr::main_term::{default_gamma, main_term, DEFAULT_DEPTH};
use fqcorr::stats::{
    brun_titchmarsh_check, empirical_charfn, empirical_distribution, hypothesis_series,
    ks_distance, limit_charfn, sieve_diagnostics, tk_ratio, EmpiricalDistribution,
};
use fqcorr::{
    correlate, parse_poly, AdditiveSpec, CorrelationSpec, Domain, FieldSpec, FunctionSpec, Horizon,
    IrreducibleTable, MainTermOptions, Poly, ShiftPair,
};
use serde::Serialize;

use crate::cache;
use crate::config::{ExperimentConfig, TGrid};
use crate::error::CliError;
use crate::output::Sink;

/// Cutoff used for infinite products when none is configured.
pub const DEFAULT_CUTOFF: u32 = 40;

pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub cache_dir: &'a Path,
    pub sink: Sink,
}

impl Context<'_> {
    fn field(&self) -> Result<FieldSpec, CliError> {
        let p = self
            .cfg
            .p
            .ok_or_else(|| CliError::Config("missing `p`".into()))?;
        Ok(FieldSpec::new(p)?)
    }

    fn table(&self, field: FieldSpec, need: u32) -> Result<IrreducibleTable, CliError> {
        let need = self.cfg.max_deg.unwrap_or(0).max(need);
        cache::load_table(field, need, self.cache_dir)
    }

    fn domain(&self) -> Domain {
        self.cfg.domain.unwrap_or(Domain::Monic)
    }

    fn partitions(&self) -> usize {
        self.cfg.partitions.unwrap_or(DEFAULT_PARTITIONS)
    }

    fn poly(
        &self,
        field: FieldSpec,
        text: Option<&String>,
        default: &str,
    ) -> Result<Poly, CliError> {
        Ok(parse_poly(text.map_or(default, String::as_str), field)?)
    }

    fn shift_pair(&self, field: FieldSpec) -> Result<ShiftPair, CliError> {
        let h1 = self.poly(field, self.cfg.h1.as_ref(), "0")?;
        let h2 = self.poly(field, self.cfg.h2.as_ref(), "1")?;
        Ok(ShiftPair::new(h1, h2)?)
    }

    fn function_pair(&self, field: FieldSpec) -> Result<[FunctionSpec; 2], CliError> {
        let f = self
            .cfg
            .f
            .as_deref()
            .ok_or_else(|| CliError::Config("missing function spec `f`".into()))?;
        let g = self.cfg.g.as_deref().unwrap_or(f);
        Ok([
            FunctionSpec::parse(f, field)?,
            FunctionSpec::parse(g, field)?,
        ])
    }

    fn additive_pair(&self, field: FieldSpec) -> Result<[AdditiveSpec; 2], CliError> {
        let f = self
            .cfg
            .f
            .as_deref()
            .ok_or_else(|| CliError::Config("missing additive spec `f`".into()))?;
        let g = self.cfg.g.as_deref().unwrap_or(f);
        Ok([
            AdditiveSpec::parse(f, field)?,
            AdditiveSpec::parse(g, field)?,
        ])
    }

    fn options(&self) -> MainTermOptions {
        MainTermOptions {
            depth: self.cfg.depth.unwrap_or(DEFAULT_DEPTH),
            cutoff: Some(self.cfg.cutoff.unwrap_or(DEFAULT_CUTOFF)),
        }
    }

    fn degrees(&self) -> Result<Vec<u32>, CliError> {
        self.cfg.degrees()
    }
}

/// Table degree needed to enumerate degree `n` in `domain`.
fn enumeration_need(n: u32, domain: Domain, symmetric: bool) -> u32 {
    match domain {
        Domain::Monic if symmetric => n / 2,
        _ => n,
    }
}

#[derive(Serialize)]
struct SieveRow {
    q: u32,
    n: u32,
    count: u64,
    weighted_sum: String,
    q_pow: String,
    matches: bool,
}

pub fn sieve(ctx: &Context) -> Result<(), CliError> {
    let field = ctx.field()?;
    let max_deg = ctx
        .cfg
        .max_deg
        .ok_or_else(|| CliError::Config("missing `max-deg`".into()))?;
    let start = Instant::now();
    let built = IrreducibleTable::build(field, max_deg)?;
    let path = cache::store(&built, ctx.cache_dir)?;
    let table = IrreducibleTable::load_cache(&path)?;
    let rows = (1..=max_deg)
        .map(|n| {
            let r = table.necklace_check(n)?;
            Ok(SieveRow {
                q: field.q(),
                n,
                count: table.count(n),
                weighted_sum: r.weighted_sum.to_string(),
                q_pow: r.q_pow.to_string(),
                matches: r.matches,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    ctx.sink.emit(&rows)?;
    let ok = rows.iter().all(|r| r.matches);
    ctx.sink.summary(format!(
        "sieve q={} max-deg={max_deg}: {} irreducibles, necklace identity {}, cache {} ({:.2}s)",
        field.q(),
        (1..=max_deg).map(|d| table.count(d)).sum::<u64>(),
        if ok { "holds" } else { "FAILS" },
        path.display(),
        start.elapsed().as_secs_f64()
    ));
    if ok {
        Ok(())
    } else {
        Err(CliError::Config("necklace identity failed".into()))
    }
}

#[derive(Serialize)]
struct FactorRow {
    poly: String,
    factorization: String,
    omega: u32,
    big_omega: u32,
    squarefree: bool,
}

pub fn factor(ctx: &Context, polys: &[String]) -> Result<(), CliError> {
    let field = ctx.field()?;
    if polys.is_empty() {
        return Err(CliError::Config("no polynomials given".into()));
    }
    let parsed = polys
        .iter()
        .map(|s| parse_poly(s, field))
        .collect::<Result<Vec<_>, _>>()?;
    let need = parsed.iter().filter_map(Poly::degree).max().unwrap_or(1) / 2;
    let table = ctx.table(field, need)?;
    let mut rows = Vec::new();
    for f in &parsed {
        let fact = table.factorize(f)?;
        let text = fact
            .to_polys()
            .iter()
            .map(|(p, m)| match m {
                1 => format!("({p})"),
                m => format!("({p})^{m}"),
            })
            .collect::<Vec<_>>()
            .join("*");
        rows.push(FactorRow {
            poly: f.to_string(),
            factorization: if text.is_empty() { "1".into() } else { text },
            omega: fact.omega(),
            big_omega: fact.big_omega(),
            squarefree: fact.is_squarefree(),
        });
    }
    ctx.sink.emit(&rows)?;
    ctx.sink.summary(format!(
        "factored {} polynomials over F_{}",
        rows.len(),
        field.q()
    ));
    Ok(())
}

/// A correlation row with an overlaid bound column.
#[derive(Serialize)]
struct ScanRow {
    q: u32,
    n: u32,
    domain: Domain,
    functions: String,
    #[serde(rename = "h-list")]
    h_list: String,
    raw_re: RawNumber,
    raw_im: RawNumber,
    normalized_re: f64,
    normalized_im: f64,
    main_re: Option<f64>,
    main_im: Option<f64>,
    tail_bound: Option<f64>,
    deviation: Option<f64>,
    seconds: Option<f64>,
    bound: Option<f64>,
}

impl ScanRow {
    fn new(r: ReportRow, bound: Option<f64>) -> Self {
        Self {
            q: r.q,
            n: r.n,
            domain: r.domain,
            functions: r.functions,
            h_list: r.h_list,
            raw_re: r.raw_re,
            raw_im: r.raw_im,
            normalized_re: r.normalized_re,
            normalized_im: r.normalized_im,
            main_re: r.main_re,
            main_im: r.main_im,
            tail_bound: r.tail_bound,
            deviation: r.deviation,
            seconds: r.seconds,
            bound,
        }
    }
}

fn correlation_template(
    ctx: &Context,
    field: FieldSpec,
    functions: [FunctionSpec; 2],
    shifts: ShiftPair,
    n: u32,
) -> CorrelationSpec {
    let mut spec = CorrelationSpec::new(
        field,
        n,
        ctx.domain(),
        vec![shifts.h1().clone(), shifts.h2().clone()],
        functions.to_vec(),
    );
    spec.gamma = ctx.cfg.gamma;
    spec.options = MainTermOptions {
        depth: ctx.cfg.depth.unwrap_or(DEFAULT_DEPTH),
        cutoff: ctx.cfg.cutoff,
    };
    spec.partitions = ctx.partitions();
    spec
}

fn summarize_reports(ctx: &Context, rows: &[ScanRow]) {
    for r in rows {
        let deviation = r
            .deviation
            .map_or("n/a".to_string(), |d| format!("{d:.6e}"));
        ctx.sink.summary(format!(
            "n={:>3} normalized={:.12} {:+.12}i deviation={deviation}",
            r.n, r.normalized_re, r.normalized_im
        ));
    }
}

pub fn correlate_cmd(ctx: &Context) -> Result<(), CliError> {
    let field = ctx.field()?;
    let functions = ctx.function_pair(field)?;
    let shifts = ctx.shift_pair(field)?;
    let ns = ctx.degrees()?;
    let n_max = *ns.iter().max().unwrap();
    let symmetric = functions.iter().all(|f| f.flags().degree_symmetric);
    let table = ctx.table(field, enumeration_need(n_max, ctx.domain(), symmetric))?;
    let timing = ctx.cfg.timing.unwrap_or(false);
    let template = correlation_template(ctx, field, functions, shifts, n_max);
    if ctx.cfg.n.is_some() {
        let report = correlate(&template, &table)?;
        let row = report.row(timing);
        ctx.sink.emit(std::slice::from_ref(&row))?;
        summarize_reports(ctx, &[ScanRow::new(row, None)]);
        return Ok(());
    }
    let overlay = ctx.cfg.c.map(|c| ShapeOverlay {
        r: ctx.cfg.r.unwrap_or(1),
        alpha: ctx.cfg.alpha.unwrap_or(0.5),
        c,
        a: ctx.cfg.a.unwrap_or(1.0),
    });
    let rows: Vec<ScanRow> = deviation_scan(&template, &ns, &table, overlay)?
        .into_iter()
        .map(|point| ScanRow::new(point.report.row(timing), point.shape.map(|s| s.total)))
        .collect();
    ctx.sink.emit(&rows)?;
    summarize_reports(ctx, &rows);
    Ok(())
}

#[derive(Serialize)]
struct MainTermRow {
    q: u32,
    mode: String,
    functions: String,
    #[serde(rename = "h-list")]
    h_list: String,
    horizon: String,
    gamma: u32,
    main_re: f64,
    main_im: f64,
    tail_bound: f64,
}

pub fn mainterm(ctx: &Context) -> Result<(), CliError> {
    let field = ctx.field()?;
    let functions = ctx.function_pair(field)?;
    let shifts = ctx.shift_pair(field)?;
    let mode = ctx.domain().mode();
    let horizon = match (ctx.cfg.infinite.unwrap_or(false), ctx.cfg.n) {
        (true, None) => Horizon::Infinite,
        (false, Some(n)) => Horizon::Finite(n),
        (true, Some(_)) => return Err(CliError::Config("`infinite` conflicts with `n`".into())),
        (false, None) => return Err(CliError::Config("give `n` or `infinite`".into())),
    };
    let need = match horizon {
        Horizon::Finite(n) => n,
        Horizon::Infinite => shifts.delta().degree().unwrap_or(0),
    };
    let table = ctx.table(field, need)?;
    let gamma = ctx
        .cfg
        .gamma
        .unwrap_or_else(|| default_gamma(&shifts, mode));
    let value = main_term(
        horizon,
        Some(gamma),
        &shifts,
        &functions[0],
        &functions[1],
        mode,
        &table,
        ctx.options(),
    )?;
    let row = MainTermRow {
        q: field.q(),
        mode: mode.to_string(),
        functions: format!("{};{}", functions[0].name(), functions[1].name()),
        h_list: format!("{};{}", shifts.h1(), shifts.h2()),
        horizon: match horizon {
            Horizon::Finite(n) => n.to_string(),
            Horizon::Infinite => "inf".into(),
        },
        gamma,
        main_re: value.value.re,
        main_im: value.value.im,
        tail_bound: value.tail_bound,
    };
    ctx.sink.emit(std::slice::from_ref(&row))?;
    ctx.sink.summary(format!(
        "main term ({mode}, horizon {}, gamma {gamma}) = {:.15} {:+.15}i, tail bound {:.3e}",
        row.horizon, row.main_re, row.main_im, row.tail_bound
    ));
    Ok(())
}

pub fn chowla(ctx: &Context) -> Result<(), CliError> {
    let field = ctx.field()?;
    let y = ctx
        .cfg
        .y
        .ok_or_else(|| CliError::Config("missing truncation degree `y`".into()))?;
    let psi = FunctionSpec::liouville_trunc(y)?;
    let h1 = ctx.poly(field, ctx.cfg.h1.as_ref(), "0")?;
    let h2 = ctx.poly(field, ctx.cfg.h.as_ref().or(ctx.cfg.h2.as_ref()), "x")?;
    let shifts = ShiftPair::new(h1, h2)?;
    let ns = ctx.degrees()?;
    let n_max = *ns.iter().max().unwrap();
    let table = ctx.table(field, enumeration_need(n_max, ctx.domain(), true))?;
    let template = correlation_template(ctx, field, [psi.clone(), psi], shifts, n_max);
    let bound = ctx.cfg.c.map(|c| {
        let ly = (y as f64).ln();
        c * ly.powi(4) / (y as f64).powi(4)
    });
    let timing = ctx.cfg.timing.unwrap_or(false);
    let rows: Vec<ScanRow> = deviation_scan(&template, &ns, &table, None)?
        .into_iter()
        .map(|point| ScanRow::new(point.report.row(timing), bound))
        .collect();
    ctx.sink.emit(&rows)?;
    summarize_reports(ctx, &rows);
    if let Some(b) = bound {
        ctx.sink
            .summary(format!("overlaid bound C log^4 y / y^4 = {b:.6e}"));
    }
    Ok(())
}

#[derive(Serialize)]
struct DistRow {
    n: u32,
    value: f64,
    multiplicity: u64,
}

pub fn dist(ctx: &Context) -> Result<(), CliError> {
    let field = ctx.field()?;
    let additives = ctx.additive_pair(field)?;
    let shifts = ctx.shift_pair(field)?;
    let ns = ctx.degrees()?;
    let n_max = *ns.iter().max().unwrap();
    let table = ctx.table(field, enumeration_need(n_max, ctx.domain(), true))?;
    let shift_list = [shifts.h1().clone(), shifts.h2().clone()];
    let mut rows = Vec::new();
    let mut previous: Option<(u32, EmpiricalDistribution)> = None;
    for &n in &ns {
        let d = empirical_distribution(
            &additives,
            &shift_list,
            n,
            ctx.domain(),
            &table,
            ctx.partitions(),
        )?;
        rows.extend(d.rows().into_iter().map(|r| DistRow {
            n,
            value: r.value,
            multiplicity: r.multiplicity,
        }));
        let ks = previous.as_ref().map_or(String::new(), |(m, p)| {
            format!(", KS distance to n={m}: {:.6e}", ks_distance(p, &d))
        });
        ctx.sink.summary(format!(
            "n={n}: {} samples, {} distinct values{ks}",
            d.total(),
            d.support().len()
        ));
        previous = Some((n, d));
    }
    ctx.sink.emit(&rows)
}

#[derive(Serialize)]
struct CharfnRow {
    n: u32,
    t: f64,
    empirical_re: f64,
    empirical_im: f64,
    limit_re: f64,
    limit_im: f64,
    tail_bound: f64,
    error: f64,
}

pub fn charfn(ctx: &Context) -> Result<(), CliError> {
    let field = ctx.field()?;
    let [psi1, psi2] = ctx.additive_pair(field)?;
    let shifts = ctx.shift_pair(field)?;
    let ns = ctx.degrees()?;
    let n_max = *ns.iter().max().unwrap();
    let grid = ctx
        .cfg
        .t_grid
        .clone()
        .unwrap_or_else(|| "-3:3:0.5".parse::<TGrid>().unwrap())
        .0;
    let table = ctx.table(field, enumeration_need(n_max, ctx.domain(), true).max(2))?;
    let mode = ctx.domain().mode();
    let limit = limit_charfn(
        &psi1,
        &psi2,
        &shifts,
        &grid,
        mode,
        ctx.cfg.gamma,
        &table,
        ctx.options(),
    )?;
    let hypotheses = hypothesis_series(&psi1, &psi2, table.max_deg(), &table)?;
    for w in &hypotheses.warnings {
        eprintln!("warning: {w}");
    }
    let mut rows = Vec::new();
    for &n in &ns {
        let cf = empirical_charfn(
            &psi1,
            &psi2,
            &shifts,
            n,
            ctx.domain(),
            &grid,
            &table,
            ctx.partitions(),
        )?
        .with_limit(limit.clone());
        let errors = cf.error.clone().unwrap_or_default();
        for ((t, e), (l, err)) in
            cf.t.iter()
                .zip(&cf.empirical)
                .zip(limit.iter().zip(&errors))
        {
            rows.push(CharfnRow {
                n,
                t: *t,
                empirical_re: e.re,
                empirical_im: e.im,
                limit_re: l.value.re,
                limit_im: l.value.im,
                tail_bound: l.tail_bound,
                error: *err,
            });
        }
        ctx.sink.summary(format!(
            "n={n}: max |phi_n(t) - phi(t)| = {:.6e} over {} points",
            cf.max_error().unwrap_or(0.0),
            grid.len()
        ));
    }
    ctx.sink.emit(&rows)
}

#[derive(Serialize)]
struct TkRow {
    n: u32,
    domain: Domain,
    lhs: f64,
    rhs: f64,
    ratio: f64,
}

pub fn tk(ctx: &Context) -> Result<(), CliError> {
    let field = ctx.field()?;
    let spec = ctx
        .cfg
        .f
        .as_deref()
        .ok_or_else(|| CliError::Config("missing additive spec `f`".into()))?;
    let psi = AdditiveSpec::parse(spec, field)?;
    let h = ctx.poly(field, ctx.cfg.h.as_ref(), "0")?;
    let ns = ctx.degrees()?;
    let n_max = *ns.iter().max().unwrap();
    let symmetric = psi.flags().degree_symmetric;
    let table = ctx.table(field, enumeration_need(n_max, ctx.domain(), symmetric))?;
    let mut rows = Vec::new();
    for &n in &ns {
        let r = tk_ratio(&psi, &h, n, ctx.domain(), &table, ctx.partitions())?;
        ctx.sink.summary(format!("n={n}: ratio {:.6}", r.ratio));
        rows.push(TkRow {
            n,
            domain: ctx.domain(),
            lhs: r.lhs,
            rhs: r.rhs,
            ratio: r.ratio,
        });
    }
    ctx.sink.emit(&rows)
}

#[derive(Serialize)]
struct DiagnosticsRow {
    n: u32,
    theta: f64,
    theta_ratio: f64,
    bv_sum: f64,
    bv_envelope: f64,
    bv_ratio: f64,
    h_n: f64,
    h_over_n2: f64,
    divprod_max: f64,
    divprod_ratio: f64,
}

pub fn diagnostics(ctx: &Context) -> Result<(), CliError> {
    let field = ctx.field()?;
    let h = ctx.poly(field, ctx.cfg.h.as_ref(), "1")?;
    let ns = ctx.degrees()?;
    let n_max = *ns.iter().max().unwrap();
    let table = ctx.table(field, n_max)?;
    let t = ctx.cfg.bv_t.unwrap_or(1.0);
    let mut rows = Vec::new();
    for &n in &ns {
        let d = sieve_diagnostics(n, &h, t, &table, ctx.partitions())?;
        ctx.sink.summary(format!(
            "n={n}: theta/N^2 {:.4}, bv ratio {:.4e}, H/n^2 {:.4}, divprod/(1+ln n) {:.4}",
            d.theta_ratio,
            d.bv_ratio,
            d.h_over_n2[n as usize - 1],
            d.divprod_ratio
        ));
        rows.push(DiagnosticsRow {
            n,
            theta: d.theta,
            theta_ratio: d.theta_ratio,
            bv_sum: d.bv_sum,
            bv_envelope: d.bv_envelope,
            bv_ratio: d.bv_ratio,
            h_n: d.h_sequence[n as usize - 1],
            h_over_n2: d.h_over_n2[n as usize - 1],
            divprod_max: d.divprod_max,
            divprod_ratio: d.divprod_ratio,
        });
    }
    ctx.sink.emit(&rows)?;
    if ctx.cfg.bt.unwrap_or(false) {
        let report = brun_titchmarsh_check(n_max, &table)?;
        ctx.sink.summary(format!(
            "progression-count inequality: {} (n, M, B) triples checked, {} violations",
            report.checked,
            report.violations.len()
        ));
    }
    Ok(())
}
