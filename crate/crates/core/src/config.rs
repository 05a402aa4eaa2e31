//! Run configuration: a flat `key = value` file with `[section]` headers.
//!
//! ```text
//! [source]
//! map = 2 1 1 1
//! ceiling = trig
//! c0 = 1.0
//! terms = 0.1 1 0 0.0; 0.05 1 1 0.3
//!
//! [target]
//! map = auto            # h∘f∘h⁻¹ for linear or affine h
//! ceiling = constant
//! c0 = 1.2
//!
//! [conjugacy]
//! kind = linear
//! matrix = 1 1 0 1
//! ```
//!
//! `#` starts a comment. Every key is checked; the first problem is reported
//! as a [`ConfigError`] naming `section.key`.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::ceiling::{CeilingFunction, CosineTerm};
use crate::equivalence::EquivalencePair;
use crate::smoothing::BumpShape;
use crate::suspension::{SuspensionPoint, SuspensionSystem};
use crate::torus::{BaseConjugacy, HyperbolicToralMap, TorusPoint, UnimodularMatrix};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    /// `section.key`, or just the section for header problems.
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, line: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{} (line {}): {}", self.key, line, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

type Parsed<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Debug, PartialEq)]
pub enum ConjugacySpec {
    Identity,
    Linear([i64; 4]),
    Affine { matrix: [i64; 4], offset: [f64; 2] },
}

/// A validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub source_map: [i64; 4],
    pub source_ceiling: CeilingFunction,
    /// `None` means the conjugate of the source map.
    pub target_map: Option<[i64; 4]>,
    pub target_ceiling: CeilingFunction,
    pub conjugacy: ConjugacySpec,
    pub shape: BumpShape,
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    /// Sampled flow times lie in `[−max_time, max_time]`.
    pub max_time: f64,
    /// Fibers tabulated by `smooth-build`.
    pub fibers: usize,
    /// Rows per fiber table.
    pub table_rows: usize,
    /// Interior probes and section points for `derivative-report`.
    pub probes: usize,
    pub section_points: usize,
    pub fd_step: f64,
    pub out: Option<PathBuf>,
    pub point: Option<[f64; 3]>,
    pub times: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            source_map: [2, 1, 1, 1],
            source_ceiling: CeilingFunction::constant(1.0).expect("positive constant"),
            target_map: None,
            target_ceiling: CeilingFunction::constant(1.0).expect("positive constant"),
            conjugacy: ConjugacySpec::Identity,
            shape: BumpShape::default(),
            seed: 0,
            samples: 1000,
            tolerance: 1e-9,
            max_time: 20.0,
            fibers: 4,
            table_rows: 101,
            probes: 100,
            section_points: 50,
            fd_step: 1e-5,
            out: None,
            point: None,
            times: None,
        }
    }
}

struct Entry {
    section: String,
    key: String,
    value: String,
    line: usize,
    used: std::cell::Cell<bool>,
}

struct Entries(Vec<Entry>);

impl Entries {
    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        let found = self.0.iter().find(|e| e.section == section && e.key == key);
        if let Some(e) = found {
            e.used.set(true);
        }
        found
    }
}

impl Entry {
    fn name(&self) -> String {
        format!("{}.{}", self.section, self.key)
    }

    fn error(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::new(self.name(), Some(self.line), message)
    }

    fn parse<T: std::str::FromStr>(&self, what: &str) -> Parsed<T> {
        self.value
            .parse()
            .map_err(|_| self.error(format!("expected {what}, got {:?}", self.value)))
    }

    fn list<T: std::str::FromStr>(&self, what: &str, len: usize) -> Parsed<Vec<T>> {
        let items: Vec<&str> = self.value.split_whitespace().collect();
        if items.len() != len {
            return Err(self.error(format!("expected {len} {what} values, got {}", items.len())));
        }
        items
            .iter()
            .map(|s| s.parse().map_err(|_| self.error(format!("expected {what}, got {s:?}"))))
            .collect()
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("source", &["map", "ceiling", "c0", "terms", "alpha"]),
    ("target", &["map", "ceiling", "c0", "terms", "alpha"]),
    ("conjugacy", &["kind", "matrix", "offset"]),
    ("smoothing", &["shape", "delta"]),
    (
        "run",
        &[
            "seed",
            "samples",
            "tolerance",
            "max_time",
            "fibers",
            "table_rows",
            "probes",
            "section_points",
            "fd_step",
            "out",
        ],
    ),
    ("flow", &["point", "times"]),
];

fn lex(text: &str) -> Parsed<Entries> {
    let mut section: Option<String> = None;
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::new(content, Some(line), "unterminated section header"))?
                .trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError::new(name, Some(line), "unknown section"));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::new(content, Some(line), "expected `key = value`"))?;
        let key = key.trim();
        let sec = section
            .clone()
            .ok_or_else(|| ConfigError::new(key, Some(line), "key outside of any section"))?;
        let known = SECTIONS
            .iter()
            .find(|(s, _)| *s == sec)
            .is_some_and(|(_, keys)| keys.contains(&key));
        if !known {
            return Err(ConfigError::new(format!("{sec}.{key}"), Some(line), "unknown key"));
        }
        if entries.iter().any(|e: &Entry| e.section == sec && e.key == key) {
            return Err(ConfigError::new(format!("{sec}.{key}"), Some(line), "duplicate key"));
        }
        entries.push(Entry {
            section: sec,
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
            used: std::cell::Cell::new(false),
        });
    }
    Ok(Entries(entries))
}

/// Parses `start:step:end` (inclusive, counted in whole steps) or a
/// comma-separated list.
pub fn parse_times(text: &str) -> std::result::Result<Vec<f64>, String> {
    let text = text.trim();
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad number {p:?}")))
            .collect::<std::result::Result<_, _>>()?;
        let (start, step, end) = (nums[0], nums[1], nums[2]);
        if step.is_nan() || step <= 0.0 || end.is_nan() || end < start || !start.is_finite() || !end.is_finite() {
            return Err(format!("bad range {text:?}"));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize;
        if count > 10_000_000 {
            return Err(format!("range {text:?} has too many points"));
        }
        return Ok((0..=count).map(|i| start + i as f64 * step).collect());
    }
    text.split(',')
        .map(|p| {
            let v: f64 = p.trim().parse().map_err(|_| format!("bad number {p:?}"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("non-finite time {p:?}"))
            }
        })
        .collect()
}

fn parse_terms(entry: &Entry) -> Parsed<Vec<CosineTerm>> {
    entry
        .value
        .split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let items: Vec<&str> = t.split_whitespace().collect();
            if items.len() != 4 {
                return Err(entry.error(format!("term {t:?} needs `amplitude k1 k2 phase`")));
            }
            let f = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| entry.error(format!("bad number {s:?} in term {t:?}")))
            };
            let k = |s: &str| {
                s.parse::<i64>()
                    .map_err(|_| entry.error(format!("bad frequency {s:?} in term {t:?}")))
            };
            Ok(CosineTerm::new(f(items[0])?, k(items[1])?, k(items[2])?, f(items[3])?))
        })
        .collect()
}

fn parse_ceiling(entries: &Entries, section: &str) -> Parsed<CeilingFunction> {
    let kind = entries
        .get(section, "ceiling")
        .ok_or_else(|| ConfigError::new(format!("{section}.ceiling"), None, "missing"))?;
    let c0 = entries
        .get(section, "c0")
        .ok_or_else(|| ConfigError::new(format!("{section}.c0"), None, "missing"))?;
    let c0_value: f64 = c0.parse("a number")?;
    let ceiling = match kind.value.as_str() {
        "constant" => {
            if let Some(t) = entries.get(section, "terms") {
                return Err(t.error("constant ceilings take no terms"));
            }
            CeilingFunction::constant(c0_value).map_err(|e| c0.error(e.to_string()))?
        }
        "trig" => {
            let terms = match entries.get(section, "terms") {
                Some(t) => parse_terms(t)?,
                None => Vec::new(),
            };
            CeilingFunction::trig(c0_value, terms).map_err(|e| c0.error(e.to_string()))?
        }
        other => return Err(kind.error(format!("expected `constant` or `trig`, got {other:?}"))),
    };
    match entries.get(section, "alpha") {
        Some(a) => ceiling
            .with_alpha(a.parse("a number")?)
            .map_err(|e| a.error(e.to_string())),
        None => Ok(ceiling),
    }
}

fn parse_matrix(entry: &Entry) -> Parsed<[i64; 4]> {
    let v: Vec<i64> = entry.list("integer", 4)?;
    Ok([v[0], v[1], v[2], v[3]])
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Parsed<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(path.display().to_string(), None, e.to_string()))?;
        Self::parse(&text)
    }

    /// Parses and validates, including construction of the equivalence pair.
    pub fn parse(text: &str) -> Parsed<Self> {
        let entries = lex(text)?;
        let mut cfg = RunConfig::default();

        let source_map = entries
            .get("source", "map")
            .ok_or_else(|| ConfigError::new("source.map", None, "missing"))?;
        cfg.source_map = parse_matrix(source_map)?;
        let [a, b, c, d] = cfg.source_map;
        HyperbolicToralMap::new(a, b, c, d).map_err(|e| source_map.error(e.to_string()))?;
        cfg.source_ceiling = parse_ceiling(&entries, "source")?;

        let target_map = entries
            .get("target", "map")
            .ok_or_else(|| ConfigError::new("target.map", None, "missing"))?;
        if target_map.value != "auto" {
            let m = parse_matrix(target_map)?;
            let [a, b, c, d] = m;
            HyperbolicToralMap::new(a, b, c, d).map_err(|e| target_map.error(e.to_string()))?;
            cfg.target_map = Some(m);
        }
        cfg.target_ceiling = parse_ceiling(&entries, "target")?;

        if let Some(kind) = entries.get("conjugacy", "kind") {
            let matrix = || -> Parsed<[i64; 4]> {
                let e = entries
                    .get("conjugacy", "matrix")
                    .ok_or_else(|| ConfigError::new("conjugacy.matrix", None, "missing"))?;
                let m = parse_matrix(e)?;
                UnimodularMatrix::new(m[0], m[1], m[2], m[3]).map_err(|err| e.error(err.to_string()))?;
                Ok(m)
            };
            cfg.conjugacy = match kind.value.as_str() {
                "identity" => ConjugacySpec::Identity,
                "linear" => ConjugacySpec::Linear(matrix()?),
                "affine" => {
                    let e = entries
                        .get("conjugacy", "offset")
                        .ok_or_else(|| ConfigError::new("conjugacy.offset", None, "missing"))?;
                    let o: Vec<f64> = e.list("number", 2)?;
                    ConjugacySpec::Affine {
                        matrix: matrix()?,
                        offset: [o[0], o[1]],
                    }
                }
                other => return Err(kind.error(format!("expected `identity`, `linear` or `affine`, got {other:?}"))),
            };
        }

        let shape_entry = entries.get("smoothing", "shape");
        let delta = match entries.get("smoothing", "delta") {
            Some(e) => Some((e.parse::<f64>("a number")?, e)),
            None => None,
        };
        cfg.shape = match shape_entry.map(|e| (e.value.as_str(), e)) {
            None | Some(("plateau", _)) => {
                let d = delta.map_or(0.1, |(d, _)| d);
                if !(d > 0.0 && d < 1.0) {
                    let e = delta.map(|(_, e)| e).expect("default delta is valid");
                    return Err(e.error(format!("delta {d} not in (0, 1)")));
                }
                BumpShape::Plateau { delta: d }
            }
            Some(("exponential", _)) => BumpShape::Exponential,
            Some((other, e)) => return Err(e.error(format!("expected `plateau` or `exponential`, got {other:?}"))),
        };

        let positive_count = |key: &str, default: usize| -> Parsed<usize> {
            match entries.get("run", key) {
                Some(e) => {
                    let v: usize = e.parse("a non-negative integer")?;
                    Ok(v)
                }
                None => Ok(default),
            }
        };
        let positive_real = |key: &str, default: f64| -> Parsed<f64> {
            match entries.get("run", key) {
                Some(e) => {
                    let v: f64 = e.parse("a number")?;
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(e.error(format!("expected a positive number, got {v}")));
                    }
                    Ok(v)
                }
                None => Ok(default),
            }
        };
        if let Some(e) = entries.get("run", "seed") {
            cfg.seed = e.parse("an unsigned 64-bit integer")?;
        }
        cfg.samples = positive_count("samples", cfg.samples)?;
        cfg.fibers = positive_count("fibers", cfg.fibers)?;
        cfg.table_rows = positive_count("table_rows", cfg.table_rows)?;
        if cfg.table_rows < 2 {
            return Err(ConfigError::new("run.table_rows", None, "need at least 2 rows"));
        }
        cfg.probes = positive_count("probes", cfg.probes)?;
        cfg.section_points = positive_count("section_points", cfg.section_points)?;
        cfg.tolerance = positive_real("tolerance", cfg.tolerance)?;
        cfg.max_time = positive_real("max_time", cfg.max_time)?;
        cfg.fd_step = positive_real("fd_step", cfg.fd_step)?;
        cfg.out = entries.get("run", "out").map(|e| PathBuf::from(&e.value));

        if let Some(e) = entries.get("flow", "point") {
            let v: Vec<f64> = e.list("number", 3)?;
            cfg.point = Some([v[0], v[1], v[2]]);
        }
        if let Some(e) = entries.get("flow", "times") {
            cfg.times = Some(parse_times(&e.value).map_err(|m| e.error(m))?);
        }

        if let Some(e) = entries.0.iter().find(|e| !e.used.get()) {
            return Err(e.error("not applicable with the other settings in this file"));
        }
        cfg.pair().map_err(|e| {
            let key = match e {
                crate::error::Error::ConjugacyMismatch { .. } | crate::error::Error::NotHyperbolic(_) => "target.map",
                _ => "conjugacy",
            };
            ConfigError::new(key, None, e.to_string())
        })?;
        Ok(cfg)
    }

    pub fn conjugacy(&self) -> crate::error::Result<BaseConjugacy> {
        let matrix = |m: [i64; 4]| UnimodularMatrix::new(m[0], m[1], m[2], m[3]);
        Ok(match &self.conjugacy {
            ConjugacySpec::Identity => BaseConjugacy::Identity,
            ConjugacySpec::Linear(m) => BaseConjugacy::Linear(matrix(*m)?),
            ConjugacySpec::Affine { matrix: m, offset } => BaseConjugacy::Affine {
                matrix: matrix(*m)?,
                offset: TorusPoint::new(offset[0], offset[1]),
            },
        })
    }

    pub fn source(&self) -> crate::error::Result<SuspensionSystem> {
        let [a, b, c, d] = self.source_map;
        Ok(SuspensionSystem::new(
            HyperbolicToralMap::new(a, b, c, d)?,
            self.source_ceiling.clone(),
        ))
    }

    pub fn pair(&self) -> crate::error::Result<EquivalencePair> {
        let source = self.source()?;
        let h = self.conjugacy()?;
        let g = match self.target_map {
            Some([a, b, c, d]) => HyperbolicToralMap::new(a, b, c, d)?,
            None => h
                .conjugate_map(source.map())
                .ok_or(crate::error::Error::NotInvertible)?,
        };
        EquivalencePair::new(source, SuspensionSystem::new(g, self.target_ceiling.clone()), h)
    }

    /// The `[flow] point` as a normalized source point.
    pub fn flow_point(&self, system: &SuspensionSystem) -> Option<SuspensionPoint> {
        self.point
            .map(|[x1, x2, s]| system.normalize(TorusPoint::new(x1, x2), s))
    }
}
