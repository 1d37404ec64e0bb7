//! A complete, cross-validated problem instance.

use std::sync::Arc;

use thiserror::Error;

use crate::engine::{run_truthful, EngineError, Trace};
use crate::lattice::{AwarenessLattice, LatticeError};
use crate::outcomes::{Economy, OutcomeError, OutcomeSpaces, ValueTable};
use crate::scalar::Scalar;
use crate::transfers::{MechanismTables, TransferError, TransferResult, TransferScheme};
use crate::types::{NatureDraw, TypeError, TypeSystem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
    #[error("projection family invalid: {0}")]
    Projection(String),
    #[error("draw {index}: {reason}")]
    Draw { index: usize, reason: String },
}

/// Which nature draws a scenario runs over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DrawSpec {
    Explicit(Vec<NatureDraw>),
    /// Every top-level type profile with every awareness profile.
    All,
}

#[derive(Debug, Clone)]
pub struct Scenario<S> {
    pub name: Option<String>,
    pub types: TypeSystem,
    pub outcomes: OutcomeSpaces,
    pub values: ValueTable<S>,
    pub draws: DrawSpec,
    pub scheme: TransferScheme<S>,
    /// Items when the lattice was declared as a powerset.
    pub powerset_items: Option<Vec<String>>,
}

impl<S: Scalar> Scenario<S> {
    pub fn new(
        name: Option<String>,
        types: TypeSystem,
        outcomes: OutcomeSpaces,
        values: ValueTable<S>,
        draws: DrawSpec,
        scheme: TransferScheme<S>,
    ) -> Result<Self, ValidationError> {
        let report = types.validate();
        if let Some(v) = report.violations.first() {
            return Err(ValidationError::Projection(types.describe_violation(v)));
        }
        values.check_complete(&types, &outcomes)?;
        let s = Self {
            name,
            types,
            outcomes,
            values,
            draws,
            scheme,
            powerset_items: None,
        };
        if let DrawSpec::Explicit(draws) = &s.draws {
            for (index, d) in draws.iter().enumerate() {
                s.check_draw(d)
                    .map_err(|reason| ValidationError::Draw { index, reason })?;
            }
        }
        Ok(s)
    }

    fn check_draw(&self, d: &NatureDraw) -> Result<(), String> {
        let ts = &self.types;
        ts.check_profile(&d.true_types).map_err(|e| e.to_string())?;
        if d.awareness.len() != ts.n_agents() {
            return Err(format!("expected {} awareness levels", ts.n_agents()));
        }
        let top = ts.lattice().top();
        if let Some(t) = d.true_types.iter().find(|&&t| ts.level(t) != top) {
            return Err(format!(
                "true type `{}` is not at the top level",
                ts.label(*t)
            ));
        }
        Ok(())
    }

    pub fn lattice(&self) -> &AwarenessLattice {
        self.types.lattice()
    }

    pub fn lattice_arc(&self) -> &Arc<AwarenessLattice> {
        self.types.lattice_arc()
    }

    pub fn economy(&self) -> Economy<'_, S> {
        Economy {
            types: &self.types,
            outcomes: &self.outcomes,
            values: &self.values,
        }
    }

    /// Number of draws `draws()` yields, saturating.
    pub fn draw_count(&self) -> usize {
        match &self.draws {
            DrawSpec::Explicit(d) => d.len(),
            DrawSpec::All => {
                let ts = &self.types;
                let l = ts.lattice().len();
                ts.agent_ids()
                    .fold(ts.profile_count(ts.lattice().top()), |acc, _| {
                        acc.saturating_mul(l)
                    })
            }
        }
    }

    pub fn draws(&self) -> Vec<NatureDraw> {
        match &self.draws {
            DrawSpec::Explicit(d) => d.clone(),
            DrawSpec::All => all_draws(&self.types),
        }
    }

    pub fn tables(&self, cap: usize) -> Result<MechanismTables<S>, TransferError> {
        MechanismTables::build(self.economy(), &self.scheme, cap)
    }

    pub fn with_scheme(&self, scheme: TransferScheme<S>) -> Self {
        let mut s = self.clone();
        s.scheme = scheme;
        s
    }

    /// Truthful run plus transfers for one draw.
    pub fn run_truthful(
        &self,
        draw: &NatureDraw,
        tables: &MechanismTables<S>,
    ) -> Result<(Trace, TransferResult<S>), RunError> {
        let trace = run_truthful(&self.types, draw)?;
        let result = tables.transfers(&self.types, &trace)?;
        Ok((trace, result))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
}

/// Every top-level type profile crossed with every awareness profile.
pub fn all_draws(ts: &TypeSystem) -> Vec<NatureDraw> {
    let lat = ts.lattice();
    let top_profiles = ts.profiles_at(lat.top());
    let mut awareness: Vec<Vec<_>> = vec![Vec::new()];
    for _ in ts.agent_ids() {
        awareness = awareness
            .into_iter()
            .flat_map(|p| {
                lat.levels().map(move |l| {
                    let mut q = p.clone();
                    q.push(l);
                    q
                })
            })
            .collect();
    }
    let mut out = Vec::with_capacity(top_profiles.len() * awareness.len());
    for t in &top_profiles {
        for a in &awareness {
            out.push(NatureDraw {
                true_types: t.clone(),
                awareness: a.clone(),
            });
        }
    }
    out
}
