//! Lightweight run representation shared by the exhaustive searches.
//!
//! The engine proper validates every report; the searches below generate only
//! admissible reports from precomputed tables and step much faster. Witnesses
//! are replayed through the engine before they are reported.

use std::collections::HashMap;

use crate::engine::{Scripted, Trace};
use crate::lattice::Level;
use crate::outcomes::{Economy, OutcomeId};
use crate::scalar::Scalar;
use crate::transfers::MechanismTables;
use crate::types::{AgentId, PayoffType, TypeSystem};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct Play {
    pub reports: Vec<PayoffType>,
    pub anns: Vec<Level>,
    pub stopped: bool,
}

impl Play {
    pub fn new() -> Self {
        Self {
            reports: Vec::new(),
            anns: Vec::new(),
            stopped: false,
        }
    }

    pub fn stages(&self) -> usize {
        self.anns.len()
    }

    pub fn last(&self, n: usize) -> Option<&[PayoffType]> {
        (!self.anns.is_empty()).then(|| &self.reports[self.reports.len() - n..])
    }

    pub fn last_ann(&self) -> Option<Level> {
        self.anns.last().copied()
    }

    pub fn push(&mut self, ts: &TypeSystem, profile: &[PayoffType]) {
        let n = profile.len();
        let repeat = self.last(n) == Some(profile);
        self.reports.extend_from_slice(profile);
        self.anns.push(ts.pooled_awareness(profile));
        self.stopped = repeat;
    }

    pub fn child(&self, ts: &TypeSystem, profile: &[PayoffType]) -> Self {
        let mut c = self.clone();
        c.push(ts, profile);
        c
    }

    pub fn to_trace(&self, n: usize) -> Trace {
        Trace {
            stages: self.reports.chunks(n).map(<[PayoffType]>::to_vec).collect(),
            announcements: self.anns.clone(),
            stopped: self.stopped,
        }
    }

    /// Agent `j`'s moves keyed by the announcement history it saw.
    pub fn script(&self, n: usize, j: AgentId, into: &mut Scripted) {
        for k in 0..self.stages() {
            into.moves
                .insert(self.anns[..k].to_vec(), self.reports[k * n + j.index()]);
        }
    }

    /// Per agent, the first stage its report sat at `level`.
    pub fn first_at(&self, ts: &TypeSystem, n: usize, agent: usize, level: Level) -> Option<usize> {
        (0..self.stages()).find(|&k| ts.level(self.reports[k * n + agent]) == level)
    }
}

/// Admissible report sets indexed by (agent, previous report, floor, awareness).
pub(crate) struct Admissible {
    n_levels: usize,
    // [agent][(prev + 1) * n_levels * n_levels + floor * n_levels + aware]
    sets: Vec<Vec<Vec<PayoffType>>>,
}

impl Admissible {
    pub fn new(ts: &TypeSystem) -> Self {
        let lat = ts.lattice();
        let nl = lat.len();
        let sets = ts
            .agent_ids()
            .map(|a| {
                let nt = ts.n_types(a);
                let mut v = vec![Vec::new(); (nt + 1) * nl * nl];
                for aware in lat.levels() {
                    let first: Vec<PayoffType> = ts
                        .all_types(a)
                        .filter(|&t| lat.leq(ts.level(t), aware))
                        .collect();
                    for floor in lat.levels() {
                        v[floor.index() * nl + aware.index()] = first.clone();
                    }
                }
                for prev in ts.all_types(a) {
                    for floor in lat.levels() {
                        let up = ts.upset(prev, floor);
                        for aware in lat.levels() {
                            v[(prev.index() + 1) * nl * nl + floor.index() * nl + aware.index()] =
                                up.iter()
                                    .copied()
                                    .filter(|&t| lat.leq(ts.level(t), aware))
                                    .collect();
                        }
                    }
                }
                v
            })
            .collect();
        Self { n_levels: nl, sets }
    }

    /// Reports agent `j` may make next in `play` with awareness `aware`.
    pub fn options(&self, play: &Play, n: usize, j: usize, aware: Level) -> &[PayoffType] {
        let nl = self.n_levels;
        let slot = match (play.last(n), play.last_ann()) {
            (Some(prev), Some(ann)) => {
                (prev[j].index() + 1) * nl * nl + ann.index() * nl + aware.index()
            }
            _ => aware.index(),
        };
        &self.sets[j][slot]
    }
}

/// Outcome, every agent's transfer, and the sum of the awareness adjustments.
pub(crate) fn settle<S: Scalar>(
    econ: Economy<'_, S>,
    tables: &MechanismTables<S>,
    play: &Play,
) -> (OutcomeId, Vec<S>, S) {
    let ts = econ.types;
    let n = ts.n_agents();
    let profile = play.last(n).expect("settled plays are nonempty");
    let level = play.last_ann().expect("nonempty");
    let idx = tables.profile_index(ts, level, profile);
    let mut transfers: Vec<S> = (0..n)
        .map(|j| {
            let a = AgentId(j as u16);
            tables.others_welfare(a, level, idx).clone() + tables.y(a, level, idx).clone()
        })
        .collect();
    let mut bonus_sum = S::zero();
    if tables.scheme().awareness_bonus {
        let firsts: Vec<Option<usize>> = (0..n).map(|j| play.first_at(ts, n, j, level)).collect();
        if let Some(&earliest) = firsts.iter().flatten().min() {
            let hits: Vec<usize> = (0..n).filter(|&j| firsts[j] == Some(earliest)).collect();
            if let [who] = hits[..] {
                let m = tables.bonus(AgentId(who as u16)).get(level).clone();
                let share = if n > 1 {
                    m.clone() / S::from_i64(n as i64 - 1)
                } else {
                    S::zero()
                };
                for (j, f) in transfers.iter_mut().enumerate() {
                    let a = if j == who { m.clone() } else { -share.clone() };
                    *f = f.clone() + a.clone();
                    bonus_sum = bonus_sum + a;
                }
            }
        }
    }
    (tables.f0(level, idx), transfers, bonus_sum)
}

/// Calls `f` on every profile of the Cartesian product; stops early when `f`
/// returns `true`.
pub(crate) fn for_each_profile<E>(
    lists: &[&[PayoffType]],
    mut f: impl FnMut(&[PayoffType]) -> Result<bool, E>,
) -> Result<bool, E> {
    if lists.iter().any(|l| l.is_empty()) {
        return Ok(false);
    }
    let mut idx = vec![0usize; lists.len()];
    let mut buf: Vec<PayoffType> = lists.iter().map(|l| l[0]).collect();
    loop {
        if f(&buf)? {
            return Ok(true);
        }
        let mut k = lists.len();
        loop {
            if k == 0 {
                return Ok(false);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < lists[k].len() {
                buf[k] = lists[k][idx[k]];
                break;
            }
            idx[k] = 0;
            buf[k] = lists[k][0];
        }
    }
}

/// Memo key summarising everything a continuation depends on: the last
/// profile and, per agent and level, the first stage the agent reached it.
pub(crate) fn state_key(ts: &TypeSystem, play: &Play, n: usize) -> (Vec<PayoffType>, Vec<u8>) {
    let nl = ts.lattice().len();
    let mut first = vec![u8::MAX; n * nl];
    for k in 0..play.stages() {
        for j in 0..n {
            let slot = &mut first[j * nl + ts.level(play.reports[k * n + j]).index()];
            if *slot == u8::MAX {
                *slot = k as u8;
            }
        }
    }
    (
        play.last(n).map(<[PayoffType]>::to_vec).unwrap_or_default(),
        first,
    )
}

pub(crate) type Memo<S> = HashMap<(Vec<PayoffType>, Vec<u8>), (S, Vec<PayoffType>)>;
