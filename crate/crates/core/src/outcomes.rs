//! Nested outcome spaces, value tables, quasi-linear utility and the efficient
//! outcome functions `f_0` and `f_0^{-i}`.

use std::fmt;

use thiserror::Error;

use crate::lattice::{AwarenessLattice, Level};
use crate::scalar::Scalar;
use crate::types::{AgentId, PayoffType, TypeSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutcomeId(u16);

impl OutcomeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub label: String,
    /// Agents whose participation the outcome needs.
    pub requires_agents: Vec<AgentId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OutcomeError {
    #[error("duplicate outcome `{0}`")]
    DuplicateOutcome(String),
    #[error("unknown outcome `{0}`")]
    UnknownOutcome(String),
    #[error("outcome space at level `{0}` is empty")]
    EmptyOutcomeSpace(String),
    #[error(
        "outcome spaces not nested: `{outcome}` is feasible at `{lower}` but not at `{upper}`"
    )]
    NotNested {
        outcome: String,
        lower: String,
        upper: String,
    },
    #[error("missing value for agent {agent}, type `{ty}`, outcome `{outcome}`")]
    MissingValue {
        agent: String,
        ty: String,
        outcome: String,
    },
    #[error("profile mixes awareness levels; f_0 needs a common level")]
    MixedLevels,
    #[error("outcome `{outcome}` requires unknown agent index {agent}")]
    UnknownAgent { outcome: String, agent: u16 },
}

/// `X_0^ℓ` for every level, nested along the order.
#[derive(Debug, Clone)]
pub struct OutcomeSpaces {
    outcomes: Vec<Outcome>,
    // per level, sorted by label so the first maximiser wins ties
    per_level: Vec<Vec<OutcomeId>>,
}

impl OutcomeSpaces {
    /// `per_level[ℓ]` lists the outcome indices feasible at `ℓ`.
    pub fn new(
        lattice: &AwarenessLattice,
        outcomes: Vec<Outcome>,
        per_level: Vec<Vec<usize>>,
        n_agents: usize,
    ) -> Result<Self, OutcomeError> {
        let mut seen = std::collections::HashSet::new();
        for o in &outcomes {
            if !seen.insert(o.label.as_str()) {
                return Err(OutcomeError::DuplicateOutcome(o.label.clone()));
            }
            if let Some(a) = o.requires_agents.iter().find(|a| a.index() >= n_agents) {
                return Err(OutcomeError::UnknownAgent {
                    outcome: o.label.clone(),
                    agent: a.0,
                });
            }
        }
        assert_eq!(per_level.len(), lattice.len());
        let mut levels: Vec<Vec<OutcomeId>> = per_level
            .into_iter()
            .map(|ids| {
                let mut v: Vec<OutcomeId> = ids.into_iter().map(|i| OutcomeId(i as u16)).collect();
                v.sort_by(|a, b| outcomes[a.index()].label.cmp(&outcomes[b.index()].label));
                v.dedup();
                v
            })
            .collect();
        for l in lattice.levels() {
            if levels[l.index()].is_empty() {
                return Err(OutcomeError::EmptyOutcomeSpace(
                    lattice.label(l).to_string(),
                ));
            }
        }
        for lo in lattice.levels() {
            for hi in lattice.up_set(lo) {
                if let Some(x) = levels[lo.index()]
                    .iter()
                    .find(|x| !levels[hi.index()].contains(x))
                {
                    return Err(OutcomeError::NotNested {
                        outcome: outcomes[x.index()].label.clone(),
                        lower: lattice.label(lo).to_string(),
                        upper: lattice.label(hi).to_string(),
                    });
                }
            }
        }
        levels.shrink_to_fit();
        Ok(Self {
            outcomes,
            per_level: levels,
        })
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = OutcomeId> {
        (0..self.outcomes.len()).map(|i| OutcomeId(i as u16))
    }

    pub fn outcome(&self, x: OutcomeId) -> &Outcome {
        &self.outcomes[x.index()]
    }

    pub fn label(&self, x: OutcomeId) -> &str {
        &self.outcomes[x.index()].label
    }

    pub fn by_label(&self, label: &str) -> Result<OutcomeId, OutcomeError> {
        self.outcomes
            .iter()
            .position(|o| o.label == label)
            .map(|i| OutcomeId(i as u16))
            .ok_or_else(|| OutcomeError::UnknownOutcome(label.to_string()))
    }

    /// `X_0^ℓ`, in tie-break (label) order.
    pub fn at(&self, level: Level) -> &[OutcomeId] {
        &self.per_level[level.index()]
    }

    /// `x ∈ X_0^level`.
    pub fn is_feasible(&self, x: OutcomeId, level: Level) -> bool {
        self.per_level[level.index()].contains(&x)
    }
}

/// `v_i(x_0, t_i)` for every agent, type and outcome expressible at or below
/// the type's level.
#[derive(Debug, Clone)]
pub struct ValueTable<S> {
    // values[agent][type][outcome]
    values: Vec<Vec<Vec<Option<S>>>>,
}

impl<S: Scalar> ValueTable<S> {
    pub fn empty(ts: &TypeSystem, n_outcomes: usize) -> Self {
        let values = ts
            .agent_ids()
            .map(|a| vec![vec![None; n_outcomes]; ts.n_types(a)])
            .collect();
        Self { values }
    }

    pub fn set(&mut self, t: PayoffType, x: OutcomeId, v: S) {
        self.values[t.agent.index()][t.index()][x.index()] = Some(v);
    }

    pub fn get(&self, t: PayoffType, x: OutcomeId) -> Option<&S> {
        self.values[t.agent.index()][t.index()][x.index()].as_ref()
    }

    /// Every type must value every outcome feasible at its own level.
    pub fn check_complete(
        &self,
        ts: &TypeSystem,
        spaces: &OutcomeSpaces,
    ) -> Result<(), OutcomeError> {
        for a in ts.agent_ids() {
            for t in ts.all_types(a) {
                for &x in spaces.at(ts.level(t)) {
                    if self.get(t, x).is_none() {
                        return Err(missing(ts, spaces, t, x));
                    }
                }
            }
        }
        Ok(())
    }

    /// `v_i(x_0, t_i)`.
    pub fn value(
        &self,
        ts: &TypeSystem,
        spaces: &OutcomeSpaces,
        t: PayoffType,
        x: OutcomeId,
    ) -> Result<S, OutcomeError> {
        self.get(t, x)
            .cloned()
            .ok_or_else(|| missing(ts, spaces, t, x))
    }
}

fn missing(ts: &TypeSystem, spaces: &OutcomeSpaces, t: PayoffType, x: OutcomeId) -> OutcomeError {
    OutcomeError::MissingValue {
        agent: ts.agent_name(t.agent).to_string(),
        ty: ts.label(t).to_string(),
        outcome: spaces.label(x).to_string(),
    }
}

/// Feasible set used by `f_0^{-i}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MarginalMode {
    /// Maximise over all of `X_0^{λ̌(t)}`.
    Literal,
    /// Additionally drop outcomes that require the excluded agent.
    #[default]
    ExcludeParticipation,
}

impl MarginalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MarginalMode::Literal => "literal",
            MarginalMode::ExcludeParticipation => "exclude-participation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "literal" => Some(MarginalMode::Literal),
            "exclude-participation" => Some(MarginalMode::ExcludeParticipation),
            _ => None,
        }
    }
}

impl fmt::Display for MarginalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The physical side of an economy: type system, outcome spaces, values.
/// Borrowed view; cheap to copy.
pub struct Economy<'a, S> {
    pub types: &'a TypeSystem,
    pub outcomes: &'a OutcomeSpaces,
    pub values: &'a ValueTable<S>,
}

impl<S> Clone for Economy<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S> Copy for Economy<'_, S> {}

impl<'a, S: Scalar> Economy<'a, S> {
    pub fn value(&self, t: PayoffType, x: OutcomeId) -> Result<S, OutcomeError> {
        self.values.value(self.types, self.outcomes, t, x)
    }

    /// `Σ_i v_i(x_0, t_i)`.
    pub fn welfare(&self, x: OutcomeId, profile: &[PayoffType]) -> Result<S, OutcomeError> {
        self.welfare_except(x, profile, None)
    }

    /// `Σ_{j ≠ skip} v_j(x_0, t_j)`.
    pub fn welfare_except(
        &self,
        x: OutcomeId,
        profile: &[PayoffType],
        skip: Option<AgentId>,
    ) -> Result<S, OutcomeError> {
        let mut acc = S::zero();
        for &t in profile {
            if Some(t.agent) == skip {
                continue;
            }
            acc = acc + self.value(t, x)?;
        }
        Ok(acc)
    }

    fn common_level(&self, profile: &[PayoffType]) -> Result<Level, OutcomeError> {
        let mut it = profile.iter().map(|&t| self.types.level(t));
        let first = it.next().unwrap_or(self.types.lattice().bottom());
        if it.all(|l| l == first) {
            Ok(first)
        } else {
            Err(OutcomeError::MixedLevels)
        }
    }

    /// `f_0`: welfare maximiser over `X_0^ℓ` for a profile at common level `ℓ`;
    /// ties go to the lexicographically smallest outcome label.
    pub fn efficient_outcome(&self, profile: &[PayoffType]) -> Result<OutcomeId, OutcomeError> {
        let level = self.common_level(profile)?;
        self.argmax(level, profile, None, |_| true)
    }

    /// `f_0^{-i}`: maximiser of the opponents' welfare.
    pub fn marginal_efficient_outcome(
        &self,
        profile: &[PayoffType],
        excluded: AgentId,
        mode: MarginalMode,
    ) -> Result<OutcomeId, OutcomeError> {
        let level = self.common_level(profile)?;
        self.marginal_at(level, profile, excluded, mode)
    }

    /// `f_0^{-i}` over `X_0^{level}`, reading only the opponents' components
    /// of `profile`.
    pub fn marginal_at(
        &self,
        level: Level,
        profile: &[PayoffType],
        excluded: AgentId,
        mode: MarginalMode,
    ) -> Result<OutcomeId, OutcomeError> {
        let feasible = |x: OutcomeId| match mode {
            MarginalMode::Literal => true,
            MarginalMode::ExcludeParticipation => {
                !self.outcomes.outcome(x).requires_agents.contains(&excluded)
            }
        };
        self.argmax(level, profile, Some(excluded), feasible)
    }

    fn argmax(
        &self,
        level: Level,
        profile: &[PayoffType],
        skip: Option<AgentId>,
        feasible: impl Fn(OutcomeId) -> bool,
    ) -> Result<OutcomeId, OutcomeError> {
        let mut best: Option<(OutcomeId, S)> = None;
        for &x in self.outcomes.at(level) {
            if !feasible(x) {
                continue;
            }
            let w = self.welfare_except(x, profile, skip)?;
            match &best {
                Some((_, bw)) if w <= *bw => {}
                _ => best = Some((x, w)),
            }
        }
        best.map(|(x, _)| x).ok_or_else(|| {
            OutcomeError::EmptyOutcomeSpace(self.types.lattice().label(level).to_string())
        })
    }

    /// Quasi-linear utility `v(x_0, t) + transfer`.
    pub fn utility(&self, x: OutcomeId, transfer: S, t: PayoffType) -> Result<S, OutcomeError> {
        Ok(self.value(t, x)? + transfer)
    }
}
