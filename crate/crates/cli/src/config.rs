//! Run configuration: defaults, command-line flags and a TOML file, merged in
//! that order so that file values win.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use symcap::hamiltonian::{default_candidate_family, CandidateSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Spectrum,
    BuildX,
    Dimension,
    Ledger,
    GcdSweep,
    Embed2d,
    Squeeze,
    Energy,
    All,
}

impl Suite {
    /// The concrete suites `self` stands for, in report order.
    pub fn expand(self) -> Vec<Suite> {
        use Suite::*;
        match self {
            All => vec![Spectrum, BuildX, Dimension, Ledger, GcdSweep, Embed2d, Squeeze, Energy],
            s => vec![s],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Spectrum => "spectrum",
            Suite::BuildX => "build-x",
            Suite::Dimension => "dimension",
            Suite::Ledger => "ledger",
            Suite::GcdSweep => "gcd-sweep",
            Suite::Embed2d => "embed2d",
            Suite::Squeeze => "squeeze",
            Suite::Energy => "energy",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Loop areas against their exact values.
    pub area: f64,
    /// Coordinate bounds of sampled sets.
    pub containment: f64,
    /// Closed-form constants such as the split value.
    pub constant: f64,
    /// `|det − 1|` of planar embeddings.
    pub jacobian: f64,
    /// Symplecticity defect of constructed maps.
    pub symplectic: f64,
    /// Flows with a closed-form solution.
    pub flow: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { area: 1e-6, containment: 1e-9, constant: 1e-9, jacobian: 1e-4, symplectic: 1e-5, flow: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub suite: Suite,
    /// Complex half-dimension of the ambient space.
    pub n: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub loop_samples: usize,
    /// Random loops per winding class.
    pub random_loops: usize,
    /// Approximate size of the exported sample of `X`.
    pub samples: usize,
    pub levels: usize,
    /// Poisson grid of the planar embedding.
    pub grid: usize,
    pub flow_steps: usize,
    /// Sweep resolution of the split search.
    pub resolution: usize,
    /// Radius of explicit witnesses inside the unit ball.
    pub witness_r: f64,
    /// Area of the target disc in the planar embedding.
    pub target_area: f64,
    pub svg: bool,
    pub tolerances: Tolerances,
    pub candidates: Vec<CandidateSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            suite: Suite::All,
            n: 2,
            seed: 0,
            out: PathBuf::from("symcap-out"),
            loop_samples: 2048,
            random_loops: 100,
            samples: 100_000,
            levels: 8,
            grid: 512,
            flow_steps: 128,
            resolution: 1000,
            witness_r: 0.99,
            target_area: 1.1,
            svg: true,
            tolerances: Tolerances::default(),
            candidates: default_candidate_family(),
        }
    }
}

/// Values read from a config file; anything present overrides the flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub suite: Option<Suite>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub loop_samples: Option<usize>,
    pub random_loops: Option<usize>,
    pub samples: Option<usize>,
    pub levels: Option<usize>,
    pub grid: Option<usize>,
    pub flow_steps: Option<usize>,
    pub resolution: Option<usize>,
    pub witness_r: Option<f64>,
    pub target_area: Option<f64>,
    pub svg: Option<bool>,
    pub tolerances: Option<Tolerances>,
    pub candidates: Option<Vec<CandidateSpec>>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        FileConfig::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn apply(self, c: &mut RunConfig) {
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        take!(suite, n, seed, out, loop_samples, random_loops, samples, levels, grid, flow_steps, resolution);
        take!(witness_r, target_area, svg, tolerances, candidates);
    }
}

impl RunConfig {
    pub fn for_suite(suite: Suite) -> Self {
        RunConfig { suite, ..RunConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            bail!("n must be at least 2, got {}", self.n);
        }
        let counts = [
            ("loop_samples", self.loop_samples),
            ("random_loops", self.random_loops),
            ("samples", self.samples),
            ("levels", self.levels),
            ("grid", self.grid),
            ("flow_steps", self.flow_steps),
            ("resolution", self.resolution),
        ];
        for (name, v) in counts {
            if v == 0 {
                bail!("{name} must be positive");
            }
        }
        if self.grid < 16 {
            bail!("grid must be at least 16, got {}", self.grid);
        }
        if self.loop_samples < 64 {
            bail!("loop_samples must be at least 64, got {}", self.loop_samples);
        }
        if !(self.witness_r > 0.0 && self.witness_r < 1.0) {
            bail!("witness_r must lie in (0, 1), got {}", self.witness_r);
        }
        if !(self.target_area > 1.0 && self.target_area.is_finite()) {
            bail!("target_area must exceed the unit square's area, got {}", self.target_area);
        }
        let t = &self.tolerances;
        for (name, v) in [("area", t.area), ("containment", t.containment), ("constant", t.constant), ("jacobian", t.jacobian), ("symplectic", t.symplectic), ("flow", t.flow)] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("tolerance {name} must be positive, got {v}");
            }
        }
        for spec in &self.candidates {
            if spec.count == 0 || !(spec.budget > 0.0) || !(spec.support_radius > 0.0) || !(spec.cutoff_width > 0.0) {
                bail!("invalid candidate family {spec:?}");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use symcap::hamiltonian::CandidateKind;

    #[test]
    fn file_values_override_and_candidates_parse() {
        let text = r#"
            suite = "gcd-sweep"
            levels = 6

            [tolerances]
            area = 1e-8

            [[candidates]]
            kind = "shear"
            count = 2
            budget = 1.5
            support_radius = 2.0
            cutoff_width = 0.5
            seed = 11
        "#;
        let mut c = RunConfig { levels: 9, n: 3, ..RunConfig::default() };
        FileConfig::parse(text).unwrap().apply(&mut c);
        assert_eq!((c.suite, c.levels, c.n), (Suite::GcdSweep, 6, 3));
        assert_eq!(c.tolerances.area, 1e-8);
        assert_eq!(c.tolerances.jacobian, Tolerances::default().jacobian);
        assert_eq!(c.candidates.len(), 1);
        assert_eq!(c.candidates[0].kind, CandidateKind::Shear);
        c.validate().unwrap();
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(FileConfig::parse("grid = -4").is_err());
        assert!(FileConfig::parse("suite = \"everything\"").is_err());
        for bad in [
            RunConfig { n: 1, ..RunConfig::default() },
            RunConfig { grid: 0, ..RunConfig::default() },
            RunConfig { witness_r: 1.0, ..RunConfig::default() },
            RunConfig { tolerances: Tolerances { flow: 0.0, ..Tolerances::default() }, ..RunConfig::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        assert_eq!(Suite::All.expand().len(), 8);
    }
}
