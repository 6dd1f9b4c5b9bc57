//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # lines starting with '#' are comments
//! suite = thm12
//! n = 1
//! sigma = 0.5
//! j_grid = 4, 16, 64
//! x_samples = 0; 0.25; 0.5
//! ```
//!
//! Lists are comma separated. Points in `x_samples` are separated by `;`,
//! their coordinates by `,`; a point with fewer coordinates than `n` is padded
//! with zeros.
//!
//! | key | meaning |
//! |-----|---------|
//! | `suite` | `oracles`, `thm11_b`, `thm12` or `thm13` |
//! | `n`, `sigma` | dimension and order |
//! | `p`, `q` | exponent of the equation and decay rate of the blow-up family |
//! | `j_grid` | indices of the mollified sequence |
//! | `lambda_grid` | parameters of the blow-up family |
//! | `index_grid`, `radius_grid` | grids of the tail-mass limit |
//! | `x_samples` | evaluation points |
//! | `seed`, `oracle_points` | random points of the constant-field oracle |
//! | `near_radius`, `rel_tol`, `abs_tol`, `max_subdiv`, `richardson_steps` | quadrature |
//! | `far_policy` | `analytic_tail` or `mapped_quadrature` |
//! | `execution` | `parallel` or `sequential` |
//! | `out`, `csv_dir` | output paths, not part of the hash |

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::limits::{DEFAULT_INDEX_GRID, DEFAULT_RADIUS_GRID};
use crate::quadrature::{FarPolicy, QuadConfig};
use crate::specfun::FracParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Oracles,
    Thm11B,
    Thm12,
    Thm13,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracles" => Ok(Suite::Oracles),
            "thm11_b" | "thm11" => Ok(Suite::Thm11B),
            "thm12" => Ok(Suite::Thm12),
            "thm13" => Ok(Suite::Thm13),
            other => Err(Error::InvalidParameter(format!("unknown suite '{other}'"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Oracles => "oracles",
            Suite::Thm11B => "thm11_b",
            Suite::Thm12 => "thm12",
            Suite::Thm13 => "thm13",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub n: usize,
    pub sigma: f64,
    pub p: f64,
    pub q: f64,
    pub j_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub index_grid: Vec<f64>,
    pub radius_grid: Vec<f64>,
    /// `None` selects the suite default.
    pub x_samples: Option<Vec<Vec<f64>>>,
    pub seed: u64,
    pub oracle_points: usize,
    pub quad: QuadConfig,
    pub out: Option<PathBuf>,
    pub csv_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            suite: Suite::Oracles,
            n: 1,
            sigma: 0.5,
            p: 3.0,
            q: 1.0,
            j_grid: vec![4.0, 16.0, 64.0],
            lambda_grid: vec![1.0, 10.0, 100.0],
            index_grid: DEFAULT_INDEX_GRID.to_vec(),
            radius_grid: DEFAULT_RADIUS_GRID.to_vec(),
            x_samples: None,
            seed: 7,
            oracle_points: 20,
            quad: QuadConfig::default(),
            out: None,
            csv_dir: None,
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::InvalidParameter(format!("cannot parse '{value}' for key '{key}'"))
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad(key, value))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(key, s)).collect()
}

fn points(key: &str, value: &str) -> Result<Vec<Vec<f64>>> {
    value.split(';').filter(|s| !s.trim().is_empty()).map(|s| list(key, s)).collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn for_suite(suite: Suite) -> Self {
        Self { suite, ..Self::default() }
    }

    /// Sets one key; used both by the file parser and by flag overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "suite" | "theorem" => self.suite = value.parse()?,
            "n" => self.n = num(key, value)?,
            "sigma" => self.sigma = num(key, value)?,
            "p" => self.p = num(key, value)?,
            "q" => self.q = num(key, value)?,
            "j_grid" => self.j_grid = list(key, value)?,
            "lambda_grid" => self.lambda_grid = list(key, value)?,
            "index_grid" => self.index_grid = list(key, value)?,
            "radius_grid" => self.radius_grid = list(key, value)?,
            "x_samples" => self.x_samples = Some(points(key, value)?),
            "seed" => self.seed = num(key, value)?,
            "oracle_points" => self.oracle_points = num(key, value)?,
            "near_radius" => self.quad.near_radius = num(key, value)?,
            "rel_tol" => self.quad.rel_tol = num(key, value)?,
            "abs_tol" => self.quad.abs_tol = num(key, value)?,
            "max_subdiv" => self.quad.max_subdiv = num(key, value)?,
            "richardson_steps" => self.quad.richardson_steps = num(key, value)?,
            "far_policy" => {
                self.quad.far_policy = match value {
                    "analytic_tail" => FarPolicy::AnalyticTail,
                    "mapped_quadrature" => FarPolicy::MappedQuadrature,
                    _ => return Err(bad(key, value)),
                }
            }
            "execution" => {
                self.quad.execution = match value {
                    "parallel" => Execution::Parallel,
                    "sequential" => Execution::Sequential,
                    _ => return Err(bad(key, value)),
                }
            }
            "out" => self.out = Some(PathBuf::from(value)),
            "csv_dir" => self.csv_dir = Some(PathBuf::from(value)),
            other => return Err(Error::InvalidParameter(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn params(&self) -> Result<FracParams> {
        FracParams::new(self.n, self.sigma)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.quad.validate()?;
        for (name, grid) in [
            ("j_grid", &self.j_grid),
            ("lambda_grid", &self.lambda_grid),
            ("index_grid", &self.index_grid),
            ("radius_grid", &self.radius_grid),
        ] {
            if grid.is_empty() || !grid.iter().all(|v| *v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be a nonempty list of positive numbers")));
            }
            if !grid.windows(2).all(|w| w[1] > w[0]) {
                return Err(Error::InvalidParameter(format!("{name} must be increasing")));
            }
        }
        if self.j_grid[0] < 1.0 || self.lambda_grid[0] < 1.0 {
            return Err(Error::InvalidParameter("j_grid and lambda_grid entries must be at least 1".into()));
        }
        if self.p == 0.0 {
            return Err(Error::InvalidParameter("p must be nonzero".into()));
        }
        if self.suite == Suite::Thm13 && !(self.q > -2.0 * self.sigma) {
            return Err(Error::InvalidParameter(format!("q must exceed -2 sigma = {}", -2.0 * self.sigma)));
        }
        if let Some(xs) = &self.x_samples {
            if xs.is_empty() || xs.iter().any(|x| x.len() > self.n) {
                return Err(Error::InvalidParameter(format!(
                    "x_samples must be nonempty points of dimension {}",
                    self.n
                )));
            }
        }
        Ok(())
    }

    /// Sample points padded to dimension `n`, or `default` scaled along `e1`.
    pub fn samples_or(&self, default: &[f64]) -> Vec<Vec<f64>> {
        match &self.x_samples {
            Some(xs) => xs
                .iter()
                .map(|x| {
                    let mut y = x.clone();
                    y.resize(self.n, 0.0);
                    y
                })
                .collect(),
            None => default
                .iter()
                .map(|&t| {
                    let mut y = vec![0.0; self.n];
                    y[0] = t;
                    y
                })
                .collect(),
        }
    }

    /// Canonical `key = value` text of every field that affects results.
    pub fn canonical(&self) -> String {
        let q = &self.quad;
        let mut lines = vec![
            format!("suite = {}", self.suite),
            format!("n = {}", self.n),
            format!("sigma = {:?}", self.sigma),
            format!("p = {:?}", self.p),
            format!("q = {:?}", self.q),
            format!("j_grid = {}", fmt_list(&self.j_grid)),
            format!("lambda_grid = {}", fmt_list(&self.lambda_grid)),
            format!("index_grid = {}", fmt_list(&self.index_grid)),
            format!("radius_grid = {}", fmt_list(&self.radius_grid)),
            format!("seed = {}", self.seed),
            format!("oracle_points = {}", self.oracle_points),
            format!("near_radius = {:?}", q.near_radius),
            format!("rel_tol = {:?}", q.rel_tol),
            format!("abs_tol = {:?}", q.abs_tol),
            format!("max_subdiv = {}", q.max_subdiv),
            format!("richardson_steps = {}", q.richardson_steps),
            format!(
                "far_policy = {}",
                match q.far_policy {
                    FarPolicy::AnalyticTail => "analytic_tail",
                    FarPolicy::MappedQuadrature => "mapped_quadrature",
                }
            ),
        ];
        if let Some(xs) = &self.x_samples {
            lines.push(format!("x_samples = {}", xs.iter().map(|x| fmt_list(x)).collect::<Vec<_>>().join(";")));
        }
        lines.join("\n") + "\n"
    }

    /// SHA-256 of [`Self::canonical`]. The execution mode is left out since
    /// results do not depend on it.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_roundtrips() {
        let cfg = ExperimentConfig::parse(
            "# run\nsuite = thm12\nn = 2\nsigma=0.25\nj_grid = 4, 16\nx_samples = 0; 0.5,1\nexecution = sequential\n",
        )
        .unwrap();
        assert_eq!(cfg.suite, Suite::Thm12);
        assert_eq!(cfg.n, 2);
        assert_eq!(cfg.j_grid, vec![4.0, 16.0]);
        assert_eq!(cfg.samples_or(&[]), vec![vec![0.0, 0.0], vec![0.5, 1.0]]);
        assert_eq!(cfg.quad.execution, Execution::Sequential);
        let again = ExperimentConfig::parse(&cfg.canonical()).unwrap();
        assert_eq!(again.hash(), cfg.hash());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("j_grid = 4, 2").is_err());
        assert!(ExperimentConfig::parse("bogus = 1").is_err());
        assert!(ExperimentConfig::parse("n = one").is_err());
        assert!(ExperimentConfig::parse("sigma = 1.5").is_err());
        assert!(ExperimentConfig::parse("just text").is_err());
    }

    #[test]
    fn output_paths_do_not_change_hash() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.set("out", "/tmp/r.json").unwrap();
        b.set("execution", "sequential").unwrap();
        assert_eq!(a.hash(), b.hash());
    }
}
