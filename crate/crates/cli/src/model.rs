//! JSON model files: one alphabet plus named potentials, interactions,
//! specifications and measures that commands refer to by name.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use shiftgibbs::interaction::{Interaction, LocalTerm, PowerLawPair, Terms};
use shiftgibbs::potential::{potential_from_interaction, Potential};
use shiftgibbs::shift::{Alphabet, Config, Symbol};
use shiftgibbs::specification::{phi_from_spec_with_anchor, Specification};
use shiftgibbs::transfer::{equilibrium_markov, MarkovMeasure};
use shiftgibbs::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Nesting depth at which name resolution gives up, which catches cycles.
const MAX_DEPTH: usize = 16;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub alphabet: AlphabetSpec,
    #[serde(default)]
    pub potentials: BTreeMap<String, PotentialSpec>,
    #[serde(default)]
    pub interactions: BTreeMap<String, InteractionSpec>,
    #[serde(default)]
    pub specifications: BTreeMap<String, SpecificationSpec>,
    #[serde(default)]
    pub measures: BTreeMap<String, MeasureSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphabetSpec {
    pub symbols: Vec<String>,
    /// Label of the distinguished letter; the first symbol if omitted.
    pub background: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    FiniteRange { range: usize, table: Vec<f64> },
    Zero,
    Constant { value: f64 },
    BernoulliLog { p: Vec<f64> },
    Ising { beta: f64, h: f64 },
    Dyson { h: f64, beta: f64, alpha: f64 },
    FromInteraction { interaction: String },
    FromSpecification { specification: String, anchor: Option<String> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalSpec {
    pub sites: Vec<i64>,
    pub table: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub coupling: f64,
    pub alpha: f64,
    pub start: u64,
    pub end: Option<u64>,
    pub table: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionSpec {
    Empty,
    Ising {
        beta: f64,
        h: f64,
    },
    Dyson {
        h: f64,
        beta: f64,
        alpha: f64,
    },
    Terms {
        #[serde(default)]
        locals: Vec<LocalSpec>,
        #[serde(default)]
        pairs: Vec<PairSpec>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpecificationSpec {
    Interaction { interaction: String },
    Cocycle { potential: String },
    Independent { probs: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Uniform,
    Bernoulli {
        p: Vec<f64>,
    },
    LetterMatrix {
        rows: Vec<Vec<f64>>,
    },
    Equilibrium {
        potential: String,
    },
    Markov {
        measure: MarkovMeasure,
    },
    /// A measure dumped by the `measure` command, relative to the model file.
    File {
        path: PathBuf,
    },
}

/// A parsed model with its alphabet built and its location remembered.
#[derive(Debug)]
pub struct Model {
    file: ModelFile,
    alphabet: Alphabet,
    dir: PathBuf,
    budget: Option<u64>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

impl Model {
    pub fn load(path: &Path) -> Result<Model> {
        let text =
            std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Model::parse(&text, dir)
    }

    pub fn parse(text: &str, dir: PathBuf) -> Result<Model> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| invalid(format!("model file: {e}")))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        let bg = match &file.alphabet.background {
            None => 0,
            Some(l) => file
                .alphabet
                .symbols
                .iter()
                .position(|s| s == l)
                .ok_or_else(|| invalid(format!("background '{l}' is not a symbol")))? as Symbol,
        };
        let alphabet = Alphabet::new(file.alphabet.symbols.clone(), bg)?;
        Ok(Model { file, alphabet, dir, budget: None })
    }

    pub fn with_budget(mut self, budget: Option<u64>) -> Self {
        self.budget = budget;
        self
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn letter(&self, label: &str) -> Result<Symbol> {
        self.alphabet.index_of(label).ok_or_else(|| invalid(format!("unknown symbol '{label}'")))
    }

    /// A configuration: constant `fill` (the background letter if `None`)
    /// with an overlay written as `site=label,site=label`.
    pub fn config(&self, fill: Option<&str>, overlay: Option<&str>) -> Result<Config> {
        let bg = match fill {
            Some(l) => self.letter(l)?,
            None => self.alphabet.background(),
        };
        let mut c = Config::constant(bg);
        for item in overlay.unwrap_or("").split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (site, label) =
                item.split_once('=').ok_or_else(|| invalid(format!("overlay entry '{item}' is not site=label")))?;
            let site: i64 = site.trim().parse().map_err(|_| invalid(format!("bad site in '{item}'")))?;
            c = c.with(site, self.letter(label.trim())?);
        }
        Ok(c)
    }

    fn lookup<'a, T>(map: &'a BTreeMap<String, T>, kind: &str, name: &str) -> Result<&'a T> {
        map.get(name).ok_or_else(|| invalid(format!("unknown {kind} '{name}'")))
    }

    pub fn potential(&self, name: &str) -> Result<Potential> {
        self.potential_at(name, 0)
    }

    fn potential_at(&self, name: &str, depth: usize) -> Result<Potential> {
        if depth > MAX_DEPTH {
            return Err(invalid(format!("reference cycle through potential '{name}'")));
        }
        let a = self.alphabet.clone();
        match Model::lookup(&self.file.potentials, "potential", name)? {
            PotentialSpec::FiniteRange { range, table } => Potential::finite_range(a, *range, table.clone()),
            PotentialSpec::Zero => Ok(Potential::zero(a)),
            PotentialSpec::Constant { value } => Ok(Potential::constant(a, *value)),
            PotentialSpec::BernoulliLog { p } => Potential::bernoulli_log(a, p),
            PotentialSpec::Ising { beta, h } => Potential::ising(a, *beta, *h),
            PotentialSpec::Dyson { h, beta, alpha } => Potential::dyson(a, *h, *beta, *alpha),
            PotentialSpec::FromInteraction { interaction } => {
                Ok(potential_from_interaction(&self.interaction(interaction)?))
            }
            PotentialSpec::FromSpecification { specification, anchor } => {
                let spec = self.specification_at(specification, depth + 1)?;
                let anchor = match anchor {
                    Some(l) => self.letter(l)?,
                    None => self.alphabet.background(),
                };
                phi_from_spec_with_anchor(&spec, anchor)
            }
        }
    }

    pub fn interaction(&self, name: &str) -> Result<Interaction> {
        let a = self.alphabet.clone();
        let k = a.size();
        match Model::lookup(&self.file.interactions, "interaction", name)? {
            InteractionSpec::Empty => Ok(Interaction::empty(a)),
            InteractionSpec::Ising { beta, h } => Interaction::ising(a, *beta, *h),
            InteractionSpec::Dyson { h, beta, alpha } => Interaction::dyson(a, *h, *beta, *alpha),
            InteractionSpec::Terms { locals, pairs } => {
                let locals = locals
                    .iter()
                    .map(|l| LocalTerm::new(l.sites.clone(), l.table.clone(), k))
                    .collect::<Result<Vec<_>>>()?;
                let pairs = pairs
                    .iter()
                    .map(|p| PowerLawPair::new(p.coupling, p.alpha, p.start, p.end, p.table.clone(), k))
                    .collect::<Result<Vec<_>>>()?;
                Interaction::new(a, Terms::new(locals, pairs))
            }
        }
    }

    pub fn specification(&self, name: &str) -> Result<Specification> {
        self.specification_at(name, 0)
    }

    fn specification_at(&self, name: &str, depth: usize) -> Result<Specification> {
        let spec = match Model::lookup(&self.file.specifications, "specification", name)? {
            SpecificationSpec::Interaction { interaction } => {
                Specification::from_interaction(self.interaction(interaction)?)
            }
            SpecificationSpec::Cocycle { potential } => {
                Specification::from_cocycle(self.potential_at(potential, depth + 1)?)
            }
            SpecificationSpec::Independent { probs } => Specification::independent(self.alphabet.clone(), probs)?,
        };
        Ok(match self.budget {
            Some(b) => spec.with_budget(b),
            None => spec,
        })
    }

    pub fn measure(&self, name: &str) -> Result<MarkovMeasure> {
        let k = self.alphabet.size();
        let m = match Model::lookup(&self.file.measures, "measure", name)? {
            MeasureSpec::Uniform => MarkovMeasure::uniform(k)?,
            MeasureSpec::Bernoulli { p } => MarkovMeasure::bernoulli(p)?,
            MeasureSpec::LetterMatrix { rows } => MarkovMeasure::from_letter_matrix(rows.clone())?,
            MeasureSpec::Equilibrium { potential } => equilibrium_markov(&self.potential(potential)?)?,
            MeasureSpec::Markov { measure } => measure.clone(),
            MeasureSpec::File { path } => {
                let full = self.dir.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| invalid(format!("cannot read {}: {e}", full.display())))?;
                serde_json::from_str(&text).map_err(|e| invalid(format!("measure file {}: {e}", full.display())))?
            }
        };
        if m.alphabet_size() != k {
            return Err(Error::AlphabetMismatch(format!("measure '{name}' has {} letters", m.alphabet_size())));
        }
        Ok(m)
    }
}
