use std::path::Path;
use std::sync::Arc;

use fqcircle_core::arcs::{CircleInstance, DivisorSearch};
use fqcircle_core::{Budget, Curve, SymmetricForm};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Parsed experiment configuration. Every section is optional at parse time;
/// each subcommand checks for the sections it needs.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentSection>,
    pub instance: Option<InstanceSection>,
    pub budget: Option<BudgetSection>,
    pub census: Option<CensusSection>,
    pub arcs: Option<ArcsSection>,
    pub artinian: Option<ArtinianSection>,
    pub weyl: Option<WeylSection>,
    pub shrink: Option<ShrinkSection>,
    pub bounds: Option<BoundsSection>,
    pub fujita: Option<FujitaSection>,
    pub output: Option<OutputSection>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub id: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSection {
    /// Curve spec, e.g. `p=3 k=1 kind=hyperelliptic h=x^3+x+1`.
    pub curve: String,
    /// The form has `n + 1` variables.
    pub n: usize,
    pub form: String,
    pub e: u32,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    #[serde(default = "default_max_enum")]
    pub max_enum: u64,
    /// Field size cap.
    #[serde(default = "default_max_q")]
    pub max_q: u32,
    /// Cap on functionals examined one by one; larger circles must be sampled.
    #[serde(default = "default_max_functionals")]
    pub max_functionals: u64,
}

impl Default for BudgetSection {
    fn default() -> Self {
        BudgetSection { max_enum: default_max_enum(), max_q: default_max_q(), max_functionals: default_max_functionals() }
    }
}

fn default_max_enum() -> u64 {
    1 << 30
}

fn default_max_q() -> u32 {
    64
}

fn default_max_functionals() -> u64 {
    1 << 20
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CensusSection {
    /// Extension degrees for the dimension probe.
    #[serde(default)]
    pub tower: Vec<u32>,
}

/// Divisor search space. The degree cap defaults to `⌊de/2⌋ + 1`, point
/// degree to 2 and multiplicity to 4.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub max_degree: Option<u32>,
    pub max_point_degree: Option<u32>,
    pub max_multiplicity: Option<u32>,
}

impl SearchSection {
    pub fn search(&self, inst: &CircleInstance) -> DivisorSearch {
        DivisorSearch::new(
            self.max_degree.unwrap_or(inst.factoring_bound()),
            self.max_point_degree.unwrap_or(default_point_degree()),
            self.max_multiplicity.unwrap_or(4),
        )
    }
}

fn default_point_degree() -> u32 {
    2
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ArcsSection {
    #[serde(flatten)]
    pub search: SearchSection,
    /// Point degree for the major-arc divisors.
    #[serde(default = "default_point_degree")]
    pub major_point_degree: u32,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ArtinianSection {
    pub q: Vec<u32>,
    pub d: Vec<u32>,
    pub n: Vec<usize>,
    pub r_max: u32,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WeylSection {
    /// Seeded functionals to test; absent means the whole circle.
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ShrinkSection {
    /// Seeded functionals to test; absent means the whole circle.
    pub samples: Option<usize>,
    #[serde(flatten)]
    pub search: SearchSection,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    /// `[n, d, g, e]` rows; absent means the hypothesis table.
    pub rows: Option<Vec<[u32; 4]>>,
    pub frontier: Option<FrontierSection>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FrontierSection {
    pub n: u32,
    pub d: u32,
    pub g: u32,
    pub e_min: u32,
    pub e_max: u32,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FujitaSection {
    pub d: u32,
    pub n: u32,
    pub g_c: u64,
    pub e_m: u64,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<String>,
    pub format: Option<String>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        if text.trim().is_empty() {
            return Err(CliError::Config("configuration is empty".into()));
        }
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn budget(&self) -> Budget {
        Budget { max_enum: self.budget.clone().unwrap_or_default().max_enum as u128 }
    }

    pub fn functional_budget(&self) -> Budget {
        Budget { max_enum: self.budget.clone().unwrap_or_default().max_functionals as u128 }
    }

    pub fn id(&self, subcommand: &str) -> String {
        self.experiment.as_ref().and_then(|e| e.id.clone()).unwrap_or_else(|| subcommand.to_string())
    }

    pub fn instance(&self) -> Result<CircleInstance, CliError> {
        let sec = self.instance.as_ref().ok_or_else(|| CliError::Config("missing [instance] section".into()))?;
        let curve = Curve::parse(&sec.curve).map_err(|e| CliError::Config(format!("instance.curve: {e}")))?;
        let max_q = self.budget.clone().unwrap_or_default().max_q;
        if curve.q() > max_q {
            return Err(CliError::Config(format!("q = {} exceeds budget.max_q = {max_q}", curve.q())));
        }
        let curve = Arc::new(curve);
        let form = SymmetricForm::parse(&curve.field, sec.n, &sec.form).map_err(|e| CliError::Config(format!("instance.form: {e}")))?;
        CircleInstance::new(curve, form, sec.e).map_err(|e| CliError::Config(format!("instance: {e}")))
    }
}
