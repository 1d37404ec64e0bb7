//! Dynamic elaboration VCG transfers: the Groves term `y_i^ℓ`, the first full
//! revealer `i*`, the awareness bonus recursion `m_i` and the adjustment `a_i`.

use std::collections::HashMap;

use thiserror::Error;

use crate::engine::Trace;
use crate::lattice::Level;
use crate::outcomes::{Economy, MarginalMode, OutcomeError, OutcomeId};
use crate::scalar::Scalar;
use crate::types::{AgentId, PayoffType, TypeSystem};

/// Default bound on `Σ_ℓ |T^ℓ|` for table construction; `ELABMECH_CAP` overrides it.
pub const DEFAULT_PROFILE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransferError {
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
    #[error("profile enumeration needs {needed} entries, cap is {cap}")]
    CombinatorialCap { needed: usize, cap: usize },
    #[error("trace has not stopped")]
    TraceNotStopped,
    #[error("final profile is not at its pooled level")]
    MixedFinalProfile,
}

/// Read-only view of a profile with one agent's component hidden.
#[derive(Debug, Clone, Copy)]
pub struct Opponents<'p> {
    profile: &'p [PayoffType],
    excluded: AgentId,
}

impl<'p> Opponents<'p> {
    pub fn new(profile: &'p [PayoffType], excluded: AgentId) -> Self {
        Self { profile, excluded }
    }

    pub fn excluded(&self) -> AgentId {
        self.excluded
    }

    pub fn iter(&self) -> impl Iterator<Item = PayoffType> + 'p {
        let ex = self.excluded;
        self.profile.iter().copied().filter(move |t| t.agent != ex)
    }

    pub fn key(&self) -> Vec<PayoffType> {
        self.iter().collect()
    }
}

/// Explicit `y_i^ℓ(t_{-i})` entries with a fallback value.
#[derive(Debug, Clone, PartialEq)]
pub struct YTable<S> {
    pub entries: HashMap<(AgentId, Level, Vec<PayoffType>), S>,
    pub default: S,
}

/// The family `(y_i^ℓ)`.
#[derive(Debug, Clone, PartialEq)]
pub enum GrovesFamily<S> {
    Zero,
    /// `y_i^ℓ(t_{-i}) = −Σ_{j≠i} v_j(f_0^{-i}, t_j)` at level `ℓ`.
    Clarke(MarginalMode),
    Constant(S),
    Table(YTable<S>),
}

impl<S: Scalar> GrovesFamily<S> {
    pub fn y(
        &self,
        econ: Economy<'_, S>,
        level: Level,
        opponents: Opponents<'_>,
    ) -> Result<S, OutcomeError> {
        match self {
            GrovesFamily::Zero => Ok(S::zero()),
            GrovesFamily::Constant(c) => Ok(c.clone()),
            GrovesFamily::Table(t) => Ok(t
                .entries
                .get(&(opponents.excluded(), level, opponents.key()))
                .unwrap_or(&t.default)
                .clone()),
            GrovesFamily::Clarke(mode) => {
                let mut best: Option<S> = None;
                for &x in econ.outcomes.at(level) {
                    if *mode == MarginalMode::ExcludeParticipation
                        && econ
                            .outcomes
                            .outcome(x)
                            .requires_agents
                            .contains(&opponents.excluded())
                    {
                        continue;
                    }
                    let mut w = S::zero();
                    for t in opponents.iter() {
                        w = w + econ.value(t, x)?;
                    }
                    best = Some(match best {
                        Some(b) => b.max_of(w),
                        None => w,
                    });
                }
                best.map(|b| -b).ok_or_else(|| {
                    OutcomeError::EmptyOutcomeSpace(econ.types.lattice().label(level).to_string())
                })
            }
        }
    }
}

/// Clarke pivot family.
pub fn clarke_family<S: Scalar>(mode: MarginalMode) -> GrovesFamily<S> {
    GrovesFamily::Clarke(mode)
}

/// Transfer configuration: a Groves family plus whether awareness bonuses apply.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferScheme<S> {
    pub groves: GrovesFamily<S>,
    pub awareness_bonus: bool,
}

impl<S: Scalar> TransferScheme<S> {
    pub fn new(groves: GrovesFamily<S>) -> Self {
        Self {
            groves,
            awareness_bonus: true,
        }
    }

    pub fn clarke(mode: MarginalMode) -> Self {
        Self::new(GrovesFamily::Clarke(mode))
    }

    pub fn without_bonus(mut self) -> Self {
        self.awareness_bonus = false;
        self
    }
}

impl<S: Scalar> Default for TransferScheme<S> {
    fn default() -> Self {
        Self::clarke(MarginalMode::default())
    }
}

/// `m_i(ℓ)` for one agent, indexed by level.
#[derive(Debug, Clone, PartialEq)]
pub struct AwarenessBonusTable<S> {
    pub agent: AgentId,
    values: Vec<S>,
}

impl<S: Scalar> AwarenessBonusTable<S> {
    pub fn get(&self, level: Level) -> &S {
        &self.values[level.index()]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferBreakdown<S> {
    pub welfare: S,
    pub y: S,
    pub bonus: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferResult<S> {
    pub outcome: OutcomeId,
    pub final_level: Level,
    pub revealer: Option<AgentId>,
    pub transfers: Vec<S>,
    pub breakdown: Vec<TransferBreakdown<S>>,
}

impl<S: Scalar> TransferResult<S> {
    /// `−Σ_i f_i`.
    pub fn surplus(&self) -> S {
        surplus(&self.transfers)
    }
}

pub fn surplus<S: Scalar>(transfers: &[S]) -> S {
    transfers.iter().fold(S::zero(), |acc, f| acc - f.clone())
}

/// `i*`: the unique agent who reported at the final pooled level strictly
/// before everyone else did.
pub fn first_full_revealer(ts: &TypeSystem, trace: &Trace) -> Option<AgentId> {
    let level = trace.final_level()?;
    let first = ts
        .agent_ids()
        .map(|a| trace.first_stage_at(ts, a, level))
        .collect::<Vec<_>>();
    let earliest = first.iter().flatten().min()?;
    let mut hits = ts
        .agent_ids()
        .filter(|a| first[a.index()] == Some(*earliest));
    let who = hits.next()?;
    hits.next().is_none().then_some(who)
}

/// `a_i`: the revealer collects `m_{i*}(λ̌)`, everyone else pays an equal
/// share. With a single agent there is nobody to pay.
pub fn awareness_adjustment<S: Scalar>(
    ts: &TypeSystem,
    trace: &Trace,
    bonus: &[AwarenessBonusTable<S>],
) -> Vec<S> {
    let n = ts.n_agents();
    let mut out = vec![S::zero(); n];
    let (Some(who), Some(level)) = (first_full_revealer(ts, trace), trace.final_level()) else {
        return out;
    };
    let m = bonus[who.index()].get(level).clone();
    if n > 1 {
        let share = m.clone() / S::from_i64(n as i64 - 1);
        for (j, slot) in out.iter_mut().enumerate() {
            if j != who.index() {
                *slot = -share.clone();
            }
        }
    }
    out[who.index()] = m;
    out
}

/// Per-level lookup tables shared by transfers, bonus recursion and checkers.
#[derive(Debug, Clone)]
struct LevelTable<S> {
    strides: Vec<usize>,
    f0: Vec<OutcomeId>,
    welfare: Vec<S>,
    // [agent][profile]: Σ_{j≠i} v_j(f_0(t), t_j)
    others: Vec<Vec<S>>,
    // [agent][profile]: y_i^ℓ(t_{-i})
    y: Vec<Vec<S>>,
}

/// `f_0`, welfare and `y` tabulated on every profile of every level, plus the
/// bonus tables. Built once per scenario and scheme.
#[derive(Debug, Clone)]
pub struct MechanismTables<S> {
    scheme: TransferScheme<S>,
    levels: Vec<LevelTable<S>>,
    bonus: Vec<AwarenessBonusTable<S>>,
}

/// Number of profile entries the tables for `ts` need.
pub fn table_size(ts: &TypeSystem) -> usize {
    ts.lattice()
        .levels()
        .map(|l| ts.profile_count(l))
        .fold(0usize, |acc, n| acc.saturating_add(n))
}

impl<S: Scalar> MechanismTables<S> {
    pub fn build(
        econ: Economy<'_, S>,
        scheme: &TransferScheme<S>,
        cap: usize,
    ) -> Result<Self, TransferError> {
        let ts = econ.types;
        let needed = table_size(ts);
        if needed > cap {
            return Err(TransferError::CombinatorialCap { needed, cap });
        }
        let n = ts.n_agents();
        let mut levels = Vec::with_capacity(ts.lattice().len());
        for level in ts.lattice().levels() {
            let profiles = ts.profiles_at(level);
            let mut strides = vec![1usize; n];
            for i in (0..n.saturating_sub(1)).rev() {
                strides[i] = strides[i + 1] * ts.space_len(AgentId((i + 1) as u16), level);
            }
            let mut table = LevelTable {
                strides,
                f0: Vec::with_capacity(profiles.len()),
                welfare: Vec::with_capacity(profiles.len()),
                others: vec![Vec::with_capacity(profiles.len()); n],
                y: vec![Vec::with_capacity(profiles.len()); n],
            };
            for p in &profiles {
                let x = econ.efficient_outcome(p)?;
                let values = p
                    .iter()
                    .map(|&t| econ.value(t, x))
                    .collect::<Result<Vec<S>, _>>()?;
                let w = values.iter().fold(S::zero(), |acc, v| acc + v.clone());
                for (i, vi) in values.iter().enumerate() {
                    table.others[i].push(w.clone() - vi.clone());
                    let y = scheme
                        .groves
                        .y(econ, level, Opponents::new(p, AgentId(i as u16)))?;
                    table.y[i].push(y);
                }
                table.f0.push(x);
                table.welfare.push(w);
            }
            levels.push(table);
        }
        let mut tables = Self {
            scheme: scheme.clone(),
            levels,
            bonus: Vec::new(),
        };
        tables.bonus = ts
            .agent_ids()
            .map(|a| {
                if scheme.awareness_bonus {
                    tables.m_recursion(econ, a)
                } else {
                    Ok(AwarenessBonusTable {
                        agent: a,
                        values: vec![S::zero(); ts.lattice().len()],
                    })
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(tables)
    }

    pub fn scheme(&self) -> &TransferScheme<S> {
        &self.scheme
    }

    pub fn bonus_tables(&self) -> &[AwarenessBonusTable<S>] {
        &self.bonus
    }

    pub fn bonus(&self, agent: AgentId) -> &AwarenessBonusTable<S> {
        &self.bonus[agent.index()]
    }

    /// Index of a common-level profile inside its level table.
    pub fn profile_index(&self, ts: &TypeSystem, level: Level, profile: &[PayoffType]) -> usize {
        let strides = &self.levels[level.index()].strides;
        profile
            .iter()
            .zip(strides)
            .map(|(&t, s)| ts.position(t) * s)
            .sum()
    }

    pub fn f0(&self, level: Level, idx: usize) -> OutcomeId {
        self.levels[level.index()].f0[idx]
    }

    pub fn welfare(&self, level: Level, idx: usize) -> &S {
        &self.levels[level.index()].welfare[idx]
    }

    /// `Σ_{j≠i} v_j(f_0(t), t_j)`.
    pub fn others_welfare(&self, agent: AgentId, level: Level, idx: usize) -> &S {
        &self.levels[level.index()].others[agent.index()][idx]
    }

    /// `y_i^ℓ(t_{-i})`.
    pub fn y(&self, agent: AgentId, level: Level, idx: usize) -> &S {
        &self.levels[level.index()].y[agent.index()][idx]
    }

    // The max is split: the bracket is a sum of a part depending on
    // (ℓ', t', t_i) and a part depending on (t_i, t_{-i}).
    fn m_recursion(
        &self,
        econ: Economy<'_, S>,
        agent: AgentId,
    ) -> Result<AwarenessBonusTable<S>, TransferError> {
        let ts = econ.types;
        let lat = ts.lattice();
        let i = agent.index();
        let mut m: Vec<Option<S>> = vec![None; lat.len()];
        m[lat.bottom().index()] = Some(S::zero());
        for &level in lat.topo_ascending() {
            if m[level.index()].is_some() {
                continue;
            }
            let below: Vec<Level> = lat
                .down_set(level)
                .into_iter()
                .filter(|&l| l != level)
                .collect();
            let table = &self.levels[level.index()];
            let own: Vec<PayoffType> = ts.space(agent, level).collect();
            let mut best: Option<S> = None;
            for (pos, &ti) in own.iter().enumerate() {
                // min over t_{-i} of Σ_j v_j(f_0(t), t_j) + y_i^ℓ(t_{-i})
                let mut worst: Option<S> = None;
                for idx in 0..table.f0.len() {
                    if (idx / table.strides[i]) % own.len() != pos {
                        continue;
                    }
                    let c = table.welfare[idx].clone() + table.y[i][idx].clone();
                    worst = Some(match worst {
                        Some(w) if c >= w => w,
                        _ => c,
                    });
                }
                let mut dev: Option<S> = None;
                for &lo in &below {
                    let lt = &self.levels[lo.index()];
                    let m_lo = m[lo.index()].clone().expect("lower levels come first");
                    for idx in 0..lt.f0.len() {
                        let c = m_lo.clone()
                            + econ.value(ti, lt.f0[idx])?
                            + lt.others[i][idx].clone()
                            + lt.y[i][idx].clone();
                        dev = Some(match dev {
                            Some(d) => d.max_of(c),
                            None => c,
                        });
                    }
                }
                if let (Some(d), Some(w)) = (dev, worst) {
                    let c = d - w;
                    best = Some(match best {
                        Some(b) => b.max_of(c),
                        None => c,
                    });
                }
            }
            m[level.index()] = Some(best.unwrap_or_else(S::zero));
        }
        Ok(AwarenessBonusTable {
            agent,
            values: m
                .into_iter()
                .map(|v| v.expect("every level visited"))
                .collect(),
        })
    }

    /// `f_i` for every agent from a stopped trace.
    pub fn transfers(
        &self,
        ts: &TypeSystem,
        trace: &Trace,
    ) -> Result<TransferResult<S>, TransferError> {
        if !trace.stopped {
            return Err(TransferError::TraceNotStopped);
        }
        let profile = trace
            .final_profile()
            .ok_or(TransferError::TraceNotStopped)?;
        let level = trace.final_level().ok_or(TransferError::TraceNotStopped)?;
        if profile.iter().any(|&t| ts.level(t) != level) {
            return Err(TransferError::MixedFinalProfile);
        }
        let idx = self.profile_index(ts, level, profile);
        let bonus = if self.scheme.awareness_bonus {
            awareness_adjustment(ts, trace, &self.bonus)
        } else {
            vec![S::zero(); ts.n_agents()]
        };
        let mut transfers = Vec::with_capacity(ts.n_agents());
        let mut breakdown = Vec::with_capacity(ts.n_agents());
        for (a, b) in ts.agent_ids().zip(bonus) {
            let welfare = self.others_welfare(a, level, idx).clone();
            let y = self.y(a, level, idx).clone();
            transfers.push(welfare.clone() + y.clone() + b.clone());
            breakdown.push(TransferBreakdown {
                welfare,
                y,
                bonus: b,
            });
        }
        Ok(TransferResult {
            outcome: self.f0(level, idx),
            final_level: level,
            revealer: first_full_revealer(ts, trace),
            transfers,
            breakdown,
        })
    }
}

/// `m_i(ℓ)` on every level for one agent.
pub fn m_table<S: Scalar>(
    econ: Economy<'_, S>,
    agent: AgentId,
    groves: &GrovesFamily<S>,
    cap: usize,
) -> Result<AwarenessBonusTable<S>, TransferError> {
    let tables = MechanismTables::build(econ, &TransferScheme::new(groves.clone()), cap)?;
    Ok(tables.bonus(agent).clone())
}

/// Transfers for a stopped trace under `scheme`.
pub fn vcg_transfers<S: Scalar>(
    econ: Economy<'_, S>,
    trace: &Trace,
    scheme: &TransferScheme<S>,
    cap: usize,
) -> Result<TransferResult<S>, TransferError> {
    MechanismTables::build(econ, scheme, cap)?.transfers(econ.types, trace)
}

/// Cap from `ELABMECH_CAP` when set and parseable.
pub fn cap_from_env(default: usize) -> usize {
    std::env::var("ELABMECH_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(default)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{io::example1, Money, Scenario};

    fn m(v: i64) -> Money {
        Money::from_integer(v)
    }

    fn trace(s: &Scenario, stages: &[[&str; 3]]) -> Trace {
        let ts = &s.types;
        let stages: Vec<Vec<PayoffType>> = stages
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(i, l)| ts.type_by_label(AgentId(i as u16), l).unwrap())
                    .collect()
            })
            .collect();
        let announcements = stages.iter().map(|p| ts.pooled_awareness(p)).collect();
        let stopped = stages.len() >= 2 && stages[stages.len() - 1] == stages[stages.len() - 2];
        Trace {
            stages,
            announcements,
            stopped,
        }
    }

    #[test]
    fn revealer_unique_tied_and_absent() {
        let s: Scenario = example1();
        let ts = &s.types;
        let unique = trace(
            &s,
            &[
                ["t1'", "t2[]", "t3[]"],
                ["t1'", "t2'", "t3"],
                ["t1'", "t2'", "t3"],
            ],
        );
        assert_eq!(first_full_revealer(ts, &unique), Some(AgentId(0)));
        let tied = trace(
            &s,
            &[
                ["t1'", "t2'", "t3[]"],
                ["t1'", "t2'", "t3"],
                ["t1'", "t2'", "t3"],
            ],
        );
        assert_eq!(first_full_revealer(ts, &tied), None);
        let example = trace(
            &s,
            &[
                ["t1", "t2", "t3[]"],
                ["t1'", "t2'", "t3"],
                ["t1'", "t2'", "t3"],
            ],
        );
        assert_eq!(first_full_revealer(ts, &example), None);
    }

    #[test]
    fn adjustment_splits_among_payers() {
        let s: Scenario = example1();
        let ts = &s.types;
        let top = s.lattice().top();
        let bonus: Vec<AwarenessBonusTable<Money>> = ts
            .agent_ids()
            .map(|a| {
                let mut values = vec![m(0); s.lattice().len()];
                values[top.index()] = m(6);
                AwarenessBonusTable { agent: a, values }
            })
            .collect();
        let unique = trace(
            &s,
            &[
                ["t1'", "t2[]", "t3[]"],
                ["t1'", "t2'", "t3"],
                ["t1'", "t2'", "t3"],
            ],
        );
        let a = awareness_adjustment(ts, &unique, &bonus);
        assert_eq!(a, vec![m(6), m(-3), m(-3)]);
        assert_eq!(a.iter().fold(m(0), |x, y| x + y), m(0));
        let tied = trace(
            &s,
            &[
                ["t1'", "t2'", "t3[]"],
                ["t1'", "t2'", "t3"],
                ["t1'", "t2'", "t3"],
            ],
        );
        assert_eq!(awareness_adjustment(ts, &tied, &bonus), vec![m(0); 3]);
    }

    #[test]
    fn clarke_terms_on_example1() {
        let s: Scenario = example1();
        let t = trace(
            &s,
            &[
                ["t1", "t2", "t3[]"],
                ["t1'", "t2'", "t3"],
                ["t1'", "t2'", "t3"],
            ],
        );
        let econ = s.economy();
        let r = vcg_transfers(econ, &t, &TransferScheme::default(), DEFAULT_PROFILE_CAP).unwrap();
        let ys: Vec<Money> = r.breakdown.iter().map(|b| b.y).collect();
        assert_eq!(ys, vec![m(-100), m(-20), m(0)]);
        assert_eq!(r.transfers, vec![m(0), m(0), m(-80)]);
        let lit = vcg_transfers(
            econ,
            &t,
            &TransferScheme::clarke(MarginalMode::Literal),
            DEFAULT_PROFILE_CAP,
        )
        .unwrap();
        assert_eq!(lit.breakdown[1].y, m(-100));
        assert_eq!(lit.transfers[1], m(-80));
    }

    #[test]
    fn zero_family_pays_realised_welfare_of_others() {
        let s: Scenario = example1();
        let t = trace(
            &s,
            &[
                ["t1", "t2", "t3[]"],
                ["t1'", "t2'", "t3"],
                ["t1'", "t2'", "t3"],
            ],
        );
        let scheme = TransferScheme::new(GrovesFamily::Zero).without_bonus();
        let r = vcg_transfers(s.economy(), &t, &scheme, DEFAULT_PROFILE_CAP).unwrap();
        assert_eq!(r.transfers, vec![m(100), m(20), m(-80)]);
    }

    #[test]
    fn bonus_is_zero_at_bottom() {
        let s: Scenario = example1();
        let tables = s.tables(DEFAULT_PROFILE_CAP).unwrap();
        for b in tables.bonus_tables() {
            assert_eq!(*b.get(s.lattice().bottom()), m(0));
        }
    }

    #[test]
    fn unstopped_traces_are_rejected() {
        let s: Scenario = example1();
        let mut t = trace(
            &s,
            &[
                ["t1", "t2", "t3[]"],
                ["t1'", "t2'", "t3"],
                ["t1'", "t2'", "t3"],
            ],
        );
        t.stopped = false;
        let tables = s.tables(DEFAULT_PROFILE_CAP).unwrap();
        assert!(matches!(
            tables.transfers(&s.types, &t),
            Err(TransferError::TraceNotStopped)
        ));
    }

    #[test]
    fn table_cap_is_enforced() {
        let s: Scenario = example1();
        assert!(matches!(
            s.tables(3),
            Err(TransferError::CombinatorialCap { .. })
        ));
    }
}
