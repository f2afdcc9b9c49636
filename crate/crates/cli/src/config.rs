//! Flat `key = value` experiment configuration mirrored by command-line flags.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use clap::Args;
use fqcorr::Domain;

use crate::error::CliError;

/// Inclusive degree range written `a:b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NRange {
    pub start: u32,
    pub end: u32,
}

impl FromStr for NRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("expected `a:b`, got `{s}`"))?;
        let start: u32 = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
        let end: u32 = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
        if start == 0 || start > end {
            return Err(format!("range `{s}` must satisfy 1 <= a <= b"));
        }
        Ok(Self { start, end })
    }
}

impl fmt::Display for NRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

/// Grid of `t` values, written `start:end:step` or as a comma list.
#[derive(Debug, Clone, PartialEq)]
pub struct TGrid(pub Vec<f64>);

impl FromStr for TGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |x: &str| -> Result<f64, String> {
            let v: f64 = x.trim().parse().map_err(|e| format!("`{x}`: {e}"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("`{x}` is not finite"))
            }
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [a, b, step] => {
                let (a, b, step) = (num(a)?, num(b)?, num(step)?);
                if step <= 0.0 || a > b {
                    return Err(format!("grid `{s}` needs start <= end and a positive step"));
                }
                let count = ((b - a) / step + 1e-9).floor() as usize;
                if count > 100_000 {
                    return Err(format!("grid `{s}` has too many points"));
                }
                Ok(Self((0..=count).map(|k| a + k as f64 * step).collect()))
            }
            [list] if !list.trim().is_empty() => {
                Ok(Self(list.split(',').map(num).collect::<Result<_, _>>()?))
            }
            _ => Err(format!(
                "expected `start:end:step` or a comma list, got `{s}`"
            )),
        }
    }
}

impl fmt::Display for TGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(f64::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// Every experiment parameter. Unset fields fall back to per-command defaults.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct ExperimentConfig {
    /// Field characteristic.
    #[arg(long)]
    pub p: Option<u32>,
    /// Degree.
    #[arg(long)]
    pub n: Option<u32>,
    /// Inclusive degree range `a:b`.
    #[arg(long)]
    pub n_range: Option<NRange>,
    /// Degree of the irreducible table.
    #[arg(long)]
    pub max_deg: Option<u32>,
    /// `monic` or `prime`.
    #[arg(long)]
    pub domain: Option<Domain>,
    /// First function spec.
    #[arg(long)]
    pub f: Option<String>,
    /// Second function spec.
    #[arg(long)]
    pub g: Option<String>,
    /// First shift.
    #[arg(long)]
    pub h1: Option<String>,
    /// Second shift.
    #[arg(long)]
    pub h2: Option<String>,
    /// Single shift for one-shift commands; second shift for `chowla`.
    #[arg(long)]
    pub h: Option<String>,
    /// Truncation degree of the Liouville function.
    #[arg(long)]
    pub y: Option<u32>,
    #[arg(long)]
    pub gamma: Option<u32>,
    /// Power-series depth of local factors.
    #[arg(long)]
    pub depth: Option<u32>,
    /// Last degree multiplied explicitly in infinite products.
    #[arg(long)]
    pub cutoff: Option<u32>,
    /// Use the infinite horizon in `mainterm`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub infinite: Option<bool>,
    /// `start:end:step` or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    pub t_grid: Option<TGrid>,
    /// CSV output path; a JSON mirror is written next to it.
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub cache_dir: Option<String>,
    #[arg(long)]
    pub partitions: Option<usize>,
    /// Constant of the overlaid bound.
    #[arg(long)]
    pub c: Option<f64>,
    /// Error-shape parameter `r`.
    #[arg(long)]
    pub r: Option<u32>,
    /// Error-shape parameter `alpha`.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Error-shape parameter `A`.
    #[arg(long)]
    pub a: Option<f64>,
    /// Exponent `t` of the progression-sum envelope.
    #[arg(long)]
    pub bv_t: Option<f64>,
    /// Record wall-clock seconds in reports.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub timing: Option<bool>,
    /// Run the exhaustive progression-count inequality check.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub bt: Option<bool>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("`{key}`: {e}")))
}

macro_rules! config_keys {
    ($($field:ident),* $(,)?) => {
        impl ExperimentConfig {
            fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
                match key.replace('-', "_").as_str() {
                    $(stringify!($field) => {
                        if self.$field.is_some() {
                            return Err(CliError::Config(format!("duplicate key `{key}`")));
                        }
                        self.$field = Some(parse_value(key, value)?);
                    })*
                    _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
                }
                Ok(())
            }

            /// One `key = value` line per set field, in a fixed order.
            pub fn format(&self) -> String {
                let mut out = String::new();
                $(if let Some(v) = &self.$field {
                    out.push_str(&format!("{} = {}\n", stringify!($field).replace('_', "-"), v));
                })*
                out
            }

            /// Fields set in `over` win.
            pub fn merge(self, over: Self) -> Self {
                Self { $($field: over.$field.or(self.$field)),* }
            }
        }
    };
}

config_keys!(
    p, n, n_range, max_deg, domain, f, g, h1, h2, h, y, gamma, depth, cutoff, infinite, t_grid,
    out, cache_dir, partitions, c, r, alpha, a, bv_t, timing, bt,
);

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`", i + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Degrees requested through `n` or `n-range`.
    pub fn degrees(&self) -> Result<Vec<u32>, CliError> {
        match (self.n, self.n_range) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "give either `n` or `n-range`, not both".into(),
            )),
            (Some(n), None) => Ok(vec![n]),
            (None, Some(r)) => Ok((r.start..=r.end).collect()),
            (None, None) => Err(CliError::Config("missing `n` or `n-range`".into())),
        }
    }

    /// Checks that every `custom:` spec names an existing file.
    pub fn check_files(&self) -> Result<(), CliError> {
        for spec in [&self.f, &self.g].into_iter().flatten() {
            if let Some(path) = spec.strip_prefix("custom:") {
                if !Path::new(path).is_file() {
                    return Err(CliError::Config(format!("`{spec}`: no such file")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_and_formats() {
        let text = "# experiment\np = 2\nn-range = 8:20\ndomain=prime\nt-grid = -1:1:0.5\nf = liouville_trunc:2\ntiming = true\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.p, Some(2));
        assert_eq!(cfg.n_range, Some(NRange { start: 8, end: 20 }));
        assert_eq!(cfg.domain, Some(Domain::Prime));
        assert_eq!(cfg.t_grid, Some(TGrid(vec![-1.0, -0.5, 0.0, 0.5, 1.0])));
        assert_eq!(cfg.degrees().unwrap().len(), 13);
        assert_eq!(ExperimentConfig::parse(&cfg.format()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "p = x",
            "q = 2",
            "p = 2\np = 3",
            "n-range = 5:2",
            "no equals sign",
            "t-grid = 1:0:1",
        ] {
            assert!(ExperimentConfig::parse(text).is_err(), "{text}");
        }
        let both = ExperimentConfig::parse("n = 3\nn-range = 1:2").unwrap();
        assert!(both.degrees().is_err());
        let missing = ExperimentConfig::parse("f = custom:/nonexistent/table").unwrap();
        assert!(missing.check_files().is_err());
    }

    #[test]
    fn flags_win_in_merge() {
        let file = ExperimentConfig::parse("p = 3\nn = 4").unwrap();
        let flags = ExperimentConfig {
            p: Some(2),
            ..Default::default()
        };
        let merged = file.merge(flags);
        assert_eq!((merged.p, merged.n), (Some(2), Some(4)));
    }

    fn word() -> impl Strategy<Value = String> {
        "[a-z][a-z0-9_:./]{0,12}"
    }

    fn config() -> impl Strategy<Value = ExperimentConfig> {
        (
            (
                prop::option::of(2u32..50),
                prop::option::of(1u32..40),
                prop::option::of((1u32..20, 0u32..20).prop_map(|(a, d)| NRange {
                    start: a,
                    end: a + d,
                })),
                prop::option::of(prop_oneof![Just(Domain::Monic), Just(Domain::Prime)]),
                prop::option::of(word()),
                prop::option::of(word()),
                prop::option::of(word()),
            ),
            (
                prop::option::of(prop::collection::vec(-1e6f64..1e6, 1..6).prop_map(TGrid)),
                prop::option::of(-1e9f64..1e9),
                prop::option::of(any::<bool>()),
                prop::option::of(1usize..64),
                prop::option::of(word()),
            ),
        )
            .prop_map(
                |(
                    (p, n, n_range, domain, f, h1, out),
                    (t_grid, c, timing, partitions, cache_dir),
                )| {
                    ExperimentConfig {
                        p,
                        n,
                        n_range,
                        domain,
                        f,
                        h1,
                        out,
                        t_grid,
                        c,
                        timing,
                        partitions,
                        cache_dir,
                        ..Default::default()
                    }
                },
            )
    }

    proptest! {
        #[test]
        fn round_trip(cfg in config()) {
            prop_assert_eq!(ExperimentConfig::parse(&cfg.format()).unwrap(), cfg);
        }
    }
}
