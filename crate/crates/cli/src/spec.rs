//! Experiment specification: defaults, config file and command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use digraph_heat::geometry::DEFAULT_VERTEX_BUDGET;
use digraph_heat::graph::{builtin_graph, GraphSpec, Part};
use digraph_heat::hypotheses::DEFAULT_SKEW_TOL;
use digraph_heat::semigroup::{default_window, parse_p};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Validate,
    CheckHypotheses,
    Simulate,
    FitDecay,
    Counterexample,
    Oscillate,
}

impl Action {
    pub fn file_stem(self) -> &'static str {
        match self {
            Action::Validate => "validate",
            Action::CheckHypotheses => "check-hypotheses",
            Action::Simulate => "simulate",
            Action::FitDecay => "fit-decay",
            Action::Counterexample => "counterexample",
            Action::Oscillate => "oscillate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PartArg {
    Full,
    Sym,
    Skew,
}

impl From<PartArg> for Part {
    fn from(p: PartArg) -> Part {
        match p {
            PartArg::Full => Part::Full,
            PartArg::Sym => Part::Sym,
            PartArg::Skew => Part::Skew,
        }
    }
}

/// Settings shared by the config file and the command line. Every field is
/// optional; unset fields fall back to per-action defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Overrides {
    /// Graph family: example-2.2, z-lattice, z2-advection, z2-skew-perturbed
    #[arg(long, global = true)]
    pub graph: Option<String>,
    /// Amplitude of z2-skew-perturbed
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Dimension of z-lattice
    #[arg(long, global = true)]
    pub d: Option<usize>,
    #[arg(long, global = true)]
    pub r_min: Option<usize>,
    #[arg(long, global = true)]
    pub r_max: Option<usize>,
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    /// Norm exponents, comma separated (`1,2,inf`)
    #[arg(long, global = true, value_delimiter = ',')]
    pub p: Option<Vec<String>>,
    /// Size of the oscillator perturbation
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Per-shell skew-mass convergence threshold
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub part: Option<PartArg>,
    #[arg(long, global = true)]
    pub rtol: Option<f64>,
    #[arg(long, global = true)]
    pub atol: Option<f64>,
    #[arg(long, global = true)]
    pub truncation_margin: Option<usize>,
    #[arg(long, global = true)]
    pub richardson_check: Option<bool>,
    #[arg(long, global = true)]
    pub vertex_budget: Option<usize>,
    /// Number of log-spaced sample times
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub max_shells: Option<usize>,
    /// Fit window `lo,hi`
    #[arg(long, global = true, value_delimiter = ',')]
    pub window: Option<Vec<f64>>,
    /// CSV input of fit-decay (columns t, norm_kind, value)
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
}

impl Overrides {
    /// `self` wins over `base` field by field.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            graph: self.graph.or(base.graph),
            a: self.a.or(base.a),
            d: self.d.or(base.d),
            r_min: self.r_min.or(base.r_min),
            r_max: self.r_max.or(base.r_max),
            t_max: self.t_max.or(base.t_max),
            p: self.p.or(base.p),
            eps: self.eps.or(base.eps),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
            tol: self.tol.or(base.tol),
            part: self.part.or(base.part),
            rtol: self.rtol.or(base.rtol),
            atol: self.atol.or(base.atol),
            truncation_margin: self.truncation_margin.or(base.truncation_margin),
            richardson_check: self.richardson_check.or(base.richardson_check),
            vertex_budget: self.vertex_budget.or(base.vertex_budget),
            samples: self.samples.or(base.samples),
            max_shells: self.max_shells.or(base.max_shells),
            window: self.window.or(base.window),
            input: self.input.or(base.input),
        }
    }

    pub fn from_file(path: &Path) -> Result<Overrides> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Fully resolved experiment, embedded verbatim in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub action: Action,
    pub graph: GraphSpec,
    pub seed: u64,
    pub r_min: usize,
    pub r_max: usize,
    pub t_max: f64,
    pub p: Vec<String>,
    pub eps: f64,
    pub tol: f64,
    pub out: PathBuf,
    pub part: PartArg,
    pub rtol: f64,
    pub atol: f64,
    pub truncation_margin: usize,
    pub richardson_check: bool,
    pub vertex_budget: usize,
    pub samples: usize,
    pub max_shells: usize,
    pub window: [f64; 2],
    pub input: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn resolve(action: Action, o: Overrides) -> Result<ExperimentSpec> {
        let default_graph = match action {
            Action::Counterexample => "z2-advection",
            Action::Oscillate => "z2-skew-perturbed",
            _ => "z-lattice",
        };
        let name = o.graph.unwrap_or_else(|| default_graph.to_string());
        if action == Action::Counterexample && name != "z2-advection" {
            bail!("counterexample runs on z2-advection only (got --graph {name})");
        }
        let graph = GraphSpec {
            a: match name.as_str() {
                "z2-skew-perturbed" => Some(o.a.unwrap_or(0.5)),
                _ => o.a,
            },
            d: match name.as_str() {
                "z-lattice" => Some(o.d.unwrap_or(2)),
                _ => o.d,
            },
            name,
        };
        // fails early on unknown names and bad parameters
        let g = builtin_graph(&graph)?;
        let dim = g.dimension_hint().unwrap_or(2.0);

        let t_max = o.t_max.unwrap_or(match action {
            Action::Counterexample => 400.0,
            _ => 200.0,
        });
        let p = o.p.unwrap_or_else(|| match action {
            Action::Simulate | Action::Oscillate => vec!["1".into(), "2".into(), "inf".into()],
            _ => vec!["inf".into()],
        });
        for s in &p {
            parse_p(s)?;
        }
        let window = match o.window {
            Some(w) if w.len() == 2 && w[0] < w[1] => [w[0], w[1]],
            Some(w) => bail!("--window needs lo,hi with lo < hi, got {w:?}"),
            None => default_window(t_max),
        };
        let max_shells = o.max_shells.unwrap_or(if dim <= 1.0 {
            20_000
        } else if dim <= 2.0 {
            600
        } else if dim <= 3.0 {
            60
        } else {
            24
        });
        let spec = ExperimentSpec {
            action,
            graph,
            seed: o.seed.unwrap_or(0),
            r_min: o.r_min.unwrap_or(4),
            r_max: o.r_max.unwrap_or(32),
            t_max,
            p,
            eps: o.eps.unwrap_or(0.01),
            tol: o.tol.unwrap_or(DEFAULT_SKEW_TOL),
            out: o.out.unwrap_or_else(|| PathBuf::from("out")),
            part: o.part.unwrap_or(PartArg::Full),
            rtol: o.rtol.unwrap_or(1e-8),
            atol: o.atol.unwrap_or(1e-10),
            truncation_margin: o.truncation_margin.unwrap_or(8),
            richardson_check: o.richardson_check.unwrap_or(true),
            vertex_budget: o.vertex_budget.unwrap_or(match action {
                Action::Counterexample => 4_000_000,
                _ => DEFAULT_VERTEX_BUDGET,
            }),
            samples: o.samples.unwrap_or(40),
            max_shells,
            window,
            input: o.input,
        };
        if spec.action == Action::FitDecay && spec.input.is_none() {
            bail!("fit-decay needs --input <CSV>");
        }
        Ok(spec)
    }

    pub fn ps(&self) -> Vec<f64> {
        self.p.iter().map(|s| parse_p(s).expect("validated")).collect()
    }
}
