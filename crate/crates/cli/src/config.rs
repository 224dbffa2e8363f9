//! INI-style experiment configuration.
//!
//! ```ini
//! [problem]
//! m = 10
//! length = 1.0
//! boundary = ramp          # ramp | uniform
//! top = 0:100              # per-edge override: constant or start:end
//! sources = 3 4 25; 6 6 -10
//!
//! [solver]
//! blocks = 9
//! bits = 3
//! backend = sa             # exact | exhaustive | sa
//!
//! [sweep]
//! bits = 2, 3, 5, 7
//! gammas = 1.0, 0.8
//! backends = exact, sa
//! seeds = 1
//!
//! [output]
//! dir = out
//! formats = csv, pgm
//! ```
//!
//! Every key is optional; defaults reproduce the 81-unknown demo.

use std::path::{Path, PathBuf};

use ini::Ini;
use qaheat::grid::{EdgeProfile, PointSource};
use qaheat::{Backend, Boundary, HeatProblem, SamplerParams, SolveConfig};

use crate::error::HarnessError;

/// Environment variable consulted for the output directory when neither the
/// command line nor the config sets one.
pub const OUT_DIR_ENV: &str = "QAHEAT_OUT_DIR";

#[derive(Debug, Clone)]
pub struct ProblemSection {
    pub m: usize,
    pub length: f64,
    pub boundary: Boundary,
    pub sources: Vec<PointSource>,
}

impl ProblemSection {
    pub fn heat_problem(&self) -> HeatProblem {
        HeatProblem {
            m: self.m,
            length: self.length,
            boundary: self.boundary.clone(),
            sources: self.sources.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub bits: Vec<usize>,
    pub blocks: Vec<usize>,
    pub gammas: Vec<f64>,
    pub backends: Vec<String>,
    pub seeds: Vec<u64>,
    /// Whether the file had a `[sweep]` section at all.
    pub present: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub pgm: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub solver: SolveConfig,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_str("").expect("defaults are valid")
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub backend: Option<String>,
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    (
        "problem",
        &["m", "length", "boundary", "bottom", "top", "left", "right", "sources"],
    ),
    (
        "solver",
        &[
            "blocks",
            "bits",
            "scale",
            "offset",
            "gamma",
            "tolerance",
            "max_iters",
            "backend",
            "num_reads",
            "sweeps",
            "beta_initial",
            "beta_final",
            "seed",
            "noise_p",
        ],
    ),
    ("sweep", &["bits", "blocks", "gammas", "backends", "seeds"]),
    ("output", &["dir", "formats"]),
];

fn invalid(field: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

struct Section<'a> {
    name: &'static str,
    props: Option<&'a ini::Properties>,
}

impl Section<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.props.and_then(|p| p.get(key)).map(str::trim)
    }

    fn field(&self, key: &str) -> String {
        format!("{}.{}", self.name, key)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, HarnessError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| invalid(&self.field(key), format!("cannot parse '{v}'"))),
        }
    }

    fn optional<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, HarnessError> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| invalid(&self.field(key), format!("cannot parse '{v}'")))
            })
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>, HarnessError> {
        let Some(v) = self.raw(key) else {
            return Ok(default);
        };
        let items = v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| invalid(&self.field(key), format!("cannot parse list item '{s}'")))
            })
            .collect::<Result<Vec<T>, _>>()?;
        if items.is_empty() {
            return Err(invalid(&self.field(key), "list must not be empty"));
        }
        Ok(items)
    }
}

fn parse_edge(field: &str, value: &str) -> Result<EdgeProfile, HarnessError> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| invalid(field, format!("cannot parse temperature '{s}'")))
    };
    match value.split_once(':') {
        Some((a, b)) => Ok(EdgeProfile::Linear {
            start: num(a)?,
            end: num(b)?,
        }),
        None => Ok(EdgeProfile::Constant(num(value)?)),
    }
}

fn parse_sources(value: &str) -> Result<Vec<PointSource>, HarnessError> {
    value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<&str> = item.split_whitespace().collect();
            let bad = || invalid("problem.sources", format!("expected 'i j strength', got '{item}'"));
            if parts.len() != 3 {
                return Err(bad());
            }
            Ok(PointSource {
                i: parts[0].parse().map_err(|_| bad())?,
                j: parts[1].parse().map_err(|_| bad())?,
                strength: parts[2].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::ConfigRead {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self, HarnessError> {
        let ini = Ini::load_from_str(text).map_err(|e| invalid("<file>", e.to_string()))?;
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(invalid(key, "key outside of any section"));
                }
                continue;
            };
            let Some((_, keys)) = KNOWN_KEYS.iter().find(|(s, _)| *s == name) else {
                return Err(invalid(name, "unknown section"));
            };
            if let Some((key, _)) = props.iter().find(|(k, _)| !keys.contains(k)) {
                return Err(invalid(&format!("{name}.{key}"), "unknown key"));
            }
        }
        let section = |name: &'static str| Section {
            name,
            props: ini.section(Some(name)),
        };

        let p = section("problem");
        let mut boundary = match p.raw("boundary").unwrap_or("ramp") {
            "ramp" => Boundary::ramp(),
            "uniform" | "zero" => Boundary::uniform(0.0),
            other => return Err(invalid("problem.boundary", format!("unknown boundary '{other}'"))),
        };
        for (key, slot) in [
            ("bottom", &mut boundary.bottom),
            ("top", &mut boundary.top),
            ("left", &mut boundary.left),
            ("right", &mut boundary.right),
        ] {
            if let Some(v) = p.raw(key) {
                *slot = parse_edge(&p.field(key), v)?;
            }
        }
        let problem = ProblemSection {
            m: p.parse("m", 10)?,
            length: p.parse("length", 1.0)?,
            boundary,
            sources: p.raw("sources").map(parse_sources).transpose()?.unwrap_or_default(),
        };

        let s = section("solver");
        let backend_name: String = s.parse("backend", "sa".to_string())?;
        let defaults = SolveConfig::default();
        let solver = SolveConfig {
            blocks: s.parse("blocks", defaults.blocks)?,
            bits: s.parse("bits", defaults.bits)?,
            scale: s.parse("scale", defaults.scale)?,
            offset: s.parse("offset", defaults.offset)?,
            gamma: s.parse("gamma", defaults.gamma)?,
            tolerance: s.parse("tolerance", 1e-3)?,
            max_iters: s.parse("max_iters", 60)?,
            backend: Backend::parse(&backend_name).map_err(|e| invalid("solver.backend", e.to_string()))?,
            sampler: SamplerParams {
                num_reads: s.parse("num_reads", 20)?,
                sweeps: s.parse("sweeps", 1000)?,
                beta_initial: s.optional("beta_initial")?,
                beta_final: s.optional("beta_final")?,
                seed: s.parse("seed", 1)?,
                noise_p: s.parse("noise_p", 0.0)?,
            },
        };

        let w = section("sweep");
        let sweep = SweepSection {
            bits: w.list("bits", vec![solver.bits])?,
            blocks: w.list("blocks", vec![solver.blocks])?,
            gammas: w.list("gammas", vec![solver.gamma])?,
            backends: w.list("backends", vec![backend_name.clone()])?,
            seeds: w.list("seeds", vec![solver.sampler.seed])?,
            present: w.props.is_some(),
        };

        let o = section("output");
        let formats: Vec<String> = o.list("formats", vec!["csv".to_string()])?;
        if let Some(f) = formats.iter().find(|f| !matches!(f.as_str(), "csv" | "pgm")) {
            return Err(invalid("output.formats", format!("unknown format '{f}'")));
        }
        let output = OutputSection {
            dir: o.raw("dir").map(PathBuf::from),
            pgm: formats.iter().any(|f| f == "pgm"),
        };

        let config = Self {
            problem,
            solver,
            sweep,
            output,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, overrides: &Overrides) -> Result<(), HarnessError> {
        if let Some(seed) = overrides.seed {
            self.solver.sampler.seed = seed;
            self.sweep.seeds = vec![seed];
        }
        if let Some(dir) = &overrides.out_dir {
            self.output.dir = Some(dir.clone());
        }
        if let Some(name) = &overrides.backend {
            self.solver.backend = Backend::parse(name).map_err(|e| invalid("--backend", e.to_string()))?;
            self.sweep.backends = vec![self.solver.backend.name().to_string()];
        }
        self.validate()
    }

    /// Checks every value against the invariants of the module it feeds.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let problem = self.problem.heat_problem();
        problem.validate().map_err(|e| {
            let field = if self.problem.m < 2 {
                "problem.m"
            } else if !self.problem.length.is_finite() || self.problem.length <= 0.0 {
                "problem.length"
            } else {
                "problem.sources"
            };
            invalid(field, e.to_string())
        })?;
        let n = problem.unknowns();
        let s = &self.solver;
        let check = |ok: bool, field: &str, msg: String| if ok { Ok(()) } else { Err(invalid(field, msg)) };
        check(
            (1..=n).contains(&s.blocks),
            "solver.blocks",
            format!("must be in 1..={n}, got {}", s.blocks),
        )?;
        check(
            (1..=52).contains(&s.bits),
            "solver.bits",
            format!("must be in 1..=52, got {}", s.bits),
        )?;
        check(
            s.scale > 0.0 && s.scale.is_finite(),
            "solver.scale",
            format!("must be positive, got {}", s.scale),
        )?;
        check(s.offset.is_finite(), "solver.offset", "must be finite".into())?;
        check(
            s.gamma > 0.0 && s.gamma <= 1.0,
            "solver.gamma",
            format!("must lie in (0, 1], got {}", s.gamma),
        )?;
        check(
            s.tolerance > 0.0,
            "solver.tolerance",
            format!("must be positive, got {}", s.tolerance),
        )?;
        check(s.max_iters >= 1, "solver.max_iters", "must be at least 1".into())?;
        check(
            s.sampler.num_reads >= 1,
            "solver.num_reads",
            "must be at least 1".into(),
        )?;
        check(s.sampler.sweeps >= 1, "solver.sweeps", "must be at least 1".into())?;
        check(
            (0.0..1.0).contains(&s.sampler.noise_p),
            "solver.noise_p",
            format!("must lie in [0, 1), got {}", s.sampler.noise_p),
        )?;
        s.sampler
            .validate()
            .map_err(|e| invalid("solver.beta_initial", e.to_string()))?;

        for &b in &self.sweep.blocks {
            check((1..=n).contains(&b), "sweep.blocks", format!("{b} not in 1..={n}"))?;
        }
        for &r in &self.sweep.bits {
            check((1..=52).contains(&r), "sweep.bits", format!("{r} not in 1..=52"))?;
        }
        for &g in &self.sweep.gammas {
            check(g > 0.0 && g <= 1.0, "sweep.gammas", format!("{g} not in (0, 1]"))?;
        }
        for name in &self.sweep.backends {
            Backend::parse(name).map_err(|e| invalid("sweep.backends", e.to_string()))?;
        }
        Ok(())
    }

    pub fn require_sweep(&self) -> Result<(), HarnessError> {
        if self.sweep.present {
            Ok(())
        } else {
            Err(invalid("sweep", "section required in sweep mode"))
        }
    }

    /// Flag, then config file, then `QAHEAT_OUT_DIR`, then `./out`.
    pub fn out_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}
