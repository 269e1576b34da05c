//! Input specifications: states, lattice-size ranges, scenarios.

use std::fmt;
use std::str::FromStr;

use mqs_core::certifier::StateDocument;
use mqs_core::channels::{rows_to_matrix, CatMode, ChannelDocument};
use mqs_core::rng::task_rng;
use mqs_core::{C64, DensityState, LatticeConfig, PureState, SubsystemSupport};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Inclusive range of lattice sizes, written `A:B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NRange {
    pub start: usize,
    pub end: usize,
}

impl NRange {
    pub fn single(n: usize) -> Self {
        Self { start: n, end: n }
    }

    pub fn sizes(&self) -> Vec<usize> {
        (self.start..=self.end).collect()
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl FromStr for NRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected A:B, got {s:?}"))?;
        let start: usize = a.trim().parse().map_err(|_| format!("bad range start {a:?}"))?;
        let end: usize = b.trim().parse().map_err(|_| format!("bad range end {b:?}"))?;
        if start == 0 || end < start {
            return Err(format!("range {s:?} must satisfy 1 <= A <= B"));
        }
        Ok(Self { start, end })
    }
}

impl fmt::Display for NRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

impl Serialize for NRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NRange {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A family of states indexed by the number of sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Cat,
    Zero,
    Tilted { alpha: f64 },
    RandomProduct { seed: u64 },
    Random { seed: u64 },
    ClassicalMixture,
    MaximallyMixed,
    ProductMixture { components: usize, seed: u64 },
    RandomMixed { rank: usize, seed: u64 },
    /// Explicit amplitudes; fixes `N`.
    Pure { amplitudes: Vec<[f64; 2]> },
    /// Explicit density matrix; fixes `N`.
    Mixed { matrix: Vec<Vec<[f64; 2]>> },
}

/// A concrete state on a lattice.
#[derive(Debug, Clone)]
pub enum BuiltState {
    Pure(PureState),
    Mixed(DensityState),
}

impl BuiltState {
    pub fn lattice(&self) -> &LatticeConfig {
        match self {
            BuiltState::Pure(p) => p.lattice(),
            BuiltState::Mixed(m) => m.lattice(),
        }
    }

    pub fn to_density(&self) -> Result<DensityState, CliError> {
        Ok(match self {
            BuiltState::Pure(p) => p.to_density()?,
            BuiltState::Mixed(m) => m.clone(),
        })
    }
}

impl From<StateDocument> for StateSpec {
    fn from(doc: StateDocument) -> Self {
        match doc {
            StateDocument::Pure { amplitudes } => StateSpec::Pure { amplitudes },
            StateDocument::Mixed { matrix } => StateSpec::Mixed { matrix },
        }
    }
}

fn qubit_count(dim: usize) -> Result<usize, CliError> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(CliError::Invalid(format!("state dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

impl StateSpec {
    pub fn name(&self) -> &'static str {
        match self {
            StateSpec::Cat => "cat",
            StateSpec::Zero => "zero",
            StateSpec::Tilted { .. } => "tilted",
            StateSpec::RandomProduct { .. } => "random-product",
            StateSpec::Random { .. } => "random",
            StateSpec::ClassicalMixture => "classical-mixture",
            StateSpec::MaximallyMixed => "maximally-mixed",
            StateSpec::ProductMixture { .. } => "product-mixture",
            StateSpec::RandomMixed { .. } => "random-mixed",
            StateSpec::Pure { .. } => "pure",
            StateSpec::Mixed { .. } => "mixed",
        }
    }

    /// Builds a state from its command-line name and the optional flags.
    pub fn from_flags(
        name: &str,
        alpha: Option<f64>,
        seed: u64,
        components: Option<usize>,
        rank: Option<usize>,
    ) -> Result<Self, CliError> {
        let needs_alpha = || alpha.ok_or_else(|| CliError::Invalid(format!("state {name} needs --alpha")));
        Ok(match name {
            "cat" => StateSpec::Cat,
            "zero" => StateSpec::Zero,
            "tilted" => StateSpec::Tilted { alpha: needs_alpha()? },
            "random-product" => StateSpec::RandomProduct { seed },
            "random" => StateSpec::Random { seed },
            "classical-mixture" => StateSpec::ClassicalMixture,
            "maximally-mixed" => StateSpec::MaximallyMixed,
            "product-mixture" => StateSpec::ProductMixture {
                components: components.unwrap_or(10),
                seed,
            },
            "random-mixed" => StateSpec::RandomMixed {
                rank: rank.unwrap_or(2),
                seed,
            },
            other => return Err(CliError::Invalid(format!("unknown state {other:?}"))),
        })
    }

    pub fn is_pure(&self) -> bool {
        matches!(
            self,
            StateSpec::Cat
                | StateSpec::Zero
                | StateSpec::Tilted { .. }
                | StateSpec::RandomProduct { .. }
                | StateSpec::Random { .. }
                | StateSpec::Pure { .. }
        )
    }

    /// The lattice size fixed by an explicit state, if any.
    pub fn fixed_sites(&self) -> Result<Option<usize>, CliError> {
        match self {
            StateSpec::Pure { amplitudes } => qubit_count(amplitudes.len()).map(Some),
            StateSpec::Mixed { matrix } => qubit_count(matrix.len()).map(Some),
            _ => Ok(None),
        }
    }

    /// The state on `n` qubits. Random families draw from stream `n` of their seed.
    pub fn build(&self, n: usize) -> Result<BuiltState, CliError> {
        if let Some(fixed) = self.fixed_sites()? {
            if fixed != n {
                return Err(CliError::Invalid(format!("explicit state has {fixed} sites, requested {n}")));
            }
        }
        let lat = LatticeConfig::qubits(n)?;
        Ok(match self {
            StateSpec::Cat => BuiltState::Pure(PureState::cat(lat)?),
            StateSpec::Zero => BuiltState::Pure(PureState::all_zero(lat)?),
            StateSpec::Tilted { alpha } => BuiltState::Pure(PureState::tilted(lat, *alpha)?),
            StateSpec::RandomProduct { seed } => {
                BuiltState::Pure(PureState::random_product(lat, &mut task_rng(*seed, n as u64))?)
            }
            StateSpec::Random { seed } => BuiltState::Pure(PureState::random(lat, &mut task_rng(*seed, n as u64))?),
            StateSpec::ClassicalMixture => BuiltState::Mixed(DensityState::classical_mixture(lat)?),
            StateSpec::MaximallyMixed => BuiltState::Mixed(DensityState::maximally_mixed(lat)?),
            StateSpec::ProductMixture { components, seed } => {
                if *components == 0 {
                    return Err(CliError::Invalid("product-mixture needs at least one component".into()));
                }
                BuiltState::Mixed(DensityState::random_product_mixture(
                    lat,
                    *components,
                    &mut task_rng(*seed, n as u64),
                )?)
            }
            StateSpec::RandomMixed { rank, seed } => {
                BuiltState::Mixed(DensityState::random(lat, *rank, &mut task_rng(*seed, n as u64))?)
            }
            StateSpec::Pure { amplitudes } => BuiltState::Pure(PureState::new(
                lat,
                amplitudes.iter().map(|z| C64::new(z[0], z[1])).collect(),
            )?),
            StateSpec::Mixed { matrix } => BuiltState::Mixed(DensityState::new(lat, rows_to_matrix(matrix)?)?),
        })
    }
}

/// Named scenario pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    CatCreation,
    LocalProjection,
    SpinFlip,
    ClassicalMixture,
    Custom,
}

impl ScenarioName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::CatCreation => "cat-creation",
            ScenarioName::LocalProjection => "local-projection",
            ScenarioName::SpinFlip => "spin-flip",
            ScenarioName::ClassicalMixture => "classical-mixture",
            ScenarioName::Custom => "custom",
        }
    }

    /// Parameter keys accepted by the scenario.
    fn allowed(&self) -> &'static [&'static str] {
        match self {
            ScenarioName::CatCreation => &["n", "n_range", "support", "mode", "state"],
            ScenarioName::LocalProjection => &["n", "n_range", "alpha"],
            ScenarioName::SpinFlip => &["n", "n_range", "state"],
            ScenarioName::ClassicalMixture => &["n", "n_range", "seed", "budget"],
            ScenarioName::Custom => &["state", "channel", "operator", "seed", "budget"],
        }
    }

    /// Lattice sizes used when neither `n` nor `n_range` is given.
    pub fn default_range(&self) -> NRange {
        NRange { start: 4, end: 10 }
    }
}

/// Which sites a cat creator acts on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SupportSpec {
    Sites(Vec<usize>),
    /// `"half"` (the leading `N/2` sites) or `"leading:K"`.
    Named(String),
}

impl SupportSpec {
    pub fn resolve(&self, lattice: &LatticeConfig) -> Result<SubsystemSupport, CliError> {
        let n = lattice.n_sites();
        Ok(match self {
            SupportSpec::Sites(s) => SubsystemSupport::new(s.clone(), lattice)?,
            SupportSpec::Named(name) if name == "half" => SubsystemSupport::leading((n / 2).max(1), lattice)?,
            SupportSpec::Named(name) => match name.strip_prefix("leading:").map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 && k <= n => SubsystemSupport::leading(k, lattice)?,
                _ => return Err(CliError::Invalid(format!("bad support {name:?}"))),
            },
        })
    }
}

impl FromStr for SupportSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "half" || s.starts_with("leading:") {
            return Ok(SupportSpec::Named(s.to_string()));
        }
        s.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad site {t:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(SupportSpec::Sites)
    }
}

/// Scenario parameters; which keys are legal depends on the scenario.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_range: Option<NRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<SupportSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<CatMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<Vec<f64>>,
}

impl ScenarioParams {
    fn present(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut push = |present: bool, key: &'static str| {
            if present {
                keys.push(key);
            }
        };
        push(self.n.is_some(), "n");
        push(self.n_range.is_some(), "n_range");
        push(self.alpha.is_some(), "alpha");
        push(self.support.is_some(), "support");
        push(self.mode.is_some(), "mode");
        push(self.seed.is_some(), "seed");
        push(self.budget.is_some(), "budget");
        push(self.state.is_some(), "state");
        push(self.channel.is_some(), "channel");
        push(self.operator.is_some(), "operator");
        keys
    }
}

/// A scenario together with its parameters, as given on the command line or in
/// a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    #[serde(default)]
    pub parameters: ScenarioParams,
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("scenario config: {e}")))
    }

    /// Checks the parameters against the scenario's schema.
    pub fn validate(&self) -> Result<(), CliError> {
        let allowed = self.name.allowed();
        let p = &self.parameters;
        for key in p.present() {
            if !allowed.contains(&key) {
                return Err(CliError::Invalid(format!(
                    "scenario {} does not take parameter {key:?} (allowed: {})",
                    self.name.as_str(),
                    allowed.join(", ")
                )));
            }
        }
        if p.n.is_some() && p.n_range.is_some() {
            return Err(CliError::Invalid("give either n or n_range, not both".into()));
        }
        if let Some(b) = p.budget {
            if b == 0 {
                return Err(CliError::Invalid("budget must be at least 1".into()));
            }
        }
        match self.name {
            ScenarioName::LocalProjection => match p.alpha {
                Some(a) if a > 0.0 && a <= 0.5 => {}
                Some(a) => return Err(CliError::Invalid(format!("alpha must lie in (0, 1/2], got {a}"))),
                None => return Err(CliError::Invalid("local-projection needs alpha".into())),
            },
            ScenarioName::CatCreation | ScenarioName::SpinFlip => {
                if let Some(s) = &p.state {
                    if !s.is_pure() {
                        return Err(CliError::Invalid(format!(
                            "scenario {} needs a pure input state",
                            self.name.as_str()
                        )));
                    }
                }
            }
            ScenarioName::Custom => {
                if p.state.is_none() || p.channel.is_none() {
                    return Err(CliError::Invalid("custom scenario needs state and channel".into()));
                }
            }
            ScenarioName::ClassicalMixture => {}
        }
        let sizes = self.sizes()?;
        let min = match self.name {
            ScenarioName::LocalProjection | ScenarioName::CatCreation => 2,
            _ => 1,
        };
        if let Some(&n) = sizes.iter().find(|&&n| n < min) {
            return Err(CliError::Invalid(format!("scenario {} needs N >= {min}, got {n}", self.name.as_str())));
        }
        Ok(())
    }

    /// Lattice sizes the scenario runs on.
    pub fn sizes(&self) -> Result<Vec<usize>, CliError> {
        let p = &self.parameters;
        if self.name == ScenarioName::Custom {
            let doc = p
                .channel
                .as_ref()
                .ok_or_else(|| CliError::Invalid("custom scenario needs channel".into()))?;
            return Ok(vec![doc.n_sites]);
        }
        Ok(match (p.n, p.n_range) {
            (Some(n), _) => vec![n],
            (None, Some(r)) => r.sizes(),
            (None, None) => self.name.default_range().sizes(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_parse() {
        assert_eq!("4:12".parse::<NRange>().unwrap().sizes().len(), 9);
        assert!("5:4".parse::<NRange>().is_err());
        assert!("0:4".parse::<NRange>().is_err());
        assert!("4-5".parse::<NRange>().is_err());
    }

    #[test]
    fn scenario_schema() {
        let spec = ScenarioSpec::from_json(r#"{"name":"local-projection","parameters":{"n":4,"alpha":0.5}}"#).unwrap();
        spec.validate().unwrap();
        let bad = ScenarioSpec::from_json(r#"{"name":"local-projection","parameters":{"n":4,"alpha":0.7}}"#).unwrap();
        assert!(bad.validate().is_err());
        let extra = ScenarioSpec::from_json(r#"{"name":"spin-flip","parameters":{"n":4,"alpha":0.5}}"#).unwrap();
        assert!(extra.validate().is_err());
        assert!(ScenarioSpec::from_json(r#"{"name":"spin-flip","parameters":{"bogus":1}}"#).is_err());
        let mixed = ScenarioSpec::from_json(
            r#"{"name":"cat-creation","parameters":{"n":4,"state":{"kind":"classical-mixture"}}}"#,
        )
        .unwrap();
        assert!(mixed.validate().is_err());
    }

    #[test]
    fn random_families_are_seeded_per_size() {
        let spec = StateSpec::RandomProduct { seed: 3 };
        let a = match spec.build(4).unwrap() {
            BuiltState::Pure(p) => p,
            _ => unreachable!(),
        };
        let b = match spec.build(4).unwrap() {
            BuiltState::Pure(p) => p,
            _ => unreachable!(),
        };
        assert_eq!(a.amplitudes(), b.amplitudes());
    }

    #[test]
    fn supports() {
        let lat = LatticeConfig::qubits(6).unwrap();
        assert_eq!("half".parse::<SupportSpec>().unwrap().resolve(&lat).unwrap().sites(), &[1, 2, 3]);
        assert_eq!("2,5".parse::<SupportSpec>().unwrap().resolve(&lat).unwrap().sites(), &[2, 5]);
        assert_eq!("leading:2".parse::<SupportSpec>().unwrap().resolve(&lat).unwrap().sites(), &[1, 2]);
        assert!("leading:9".parse::<SupportSpec>().unwrap().resolve(&lat).is_err());
    }
}
