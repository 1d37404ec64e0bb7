//! Non-recursive reference value for the awareness bonus `m_i(ℓ)`.
//!
//! Expands the recursion into an explicit maximum over strictly descending
//! chains `ℓ = ℓ_0 ▷ ℓ_1 ▷ … ▷ bottom`, each step maximised over all profile
//! pairs. Shares no tables with the transfer module.

use std::collections::HashMap;

use crate::lattice::Level;
use crate::outcomes::Economy;
use crate::scalar::Scalar;
use crate::transfers::{GrovesFamily, Opponents, TransferError};
use crate::types::AgentId;

fn step<S: Scalar>(
    econ: Economy<'_, S>,
    y: &GrovesFamily<S>,
    agent: AgentId,
    upper: Level,
    lower: Level,
) -> Result<S, TransferError> {
    let ts = econ.types;
    let i = agent.index();
    let uppers = ts.profiles_at(upper);
    let lowers = ts.profiles_at(lower);
    let mut best: Option<S> = None;
    for lo in &lowers {
        let x_lo = econ.efficient_outcome(lo)?;
        let y_lo = y.y(econ, lower, Opponents::new(lo, agent))?;
        for up in &uppers {
            let x_up = econ.efficient_outcome(up)?;
            let mut term = econ.value(up[i], x_lo)? + y_lo.clone()
                - y.y(econ, upper, Opponents::new(up, agent))?;
            for (j, &t) in lo.iter().enumerate() {
                if j != i {
                    term = term + econ.value(t, x_lo)?;
                }
            }
            for &t in up.iter() {
                term = term - econ.value(t, x_up)?;
            }
            best = Some(match best {
                Some(b) => b.max_of(term),
                None => term,
            });
        }
    }
    Ok(best.expect("type spaces are nonempty"))
}

/// Every strictly descending chain from `from` down to the bottom.
pub fn descending_chains(lat: &crate::lattice::AwarenessLattice, from: Level) -> Vec<Vec<Level>> {
    if from == lat.bottom() {
        return vec![vec![from]];
    }
    let mut out = Vec::new();
    for l in lat.levels() {
        if lat.lt(l, from) {
            for mut tail in descending_chains(lat, l) {
                tail.insert(0, from);
                out.push(tail);
            }
        }
    }
    out
}

/// `m_i(level)` as an explicit maximum over chains.
pub fn oracle_m<S: Scalar>(
    econ: Economy<'_, S>,
    agent: AgentId,
    y: &GrovesFamily<S>,
    level: Level,
    cap: usize,
) -> Result<S, TransferError> {
    let ts = econ.types;
    let lat = ts.lattice();
    let chains = descending_chains(lat, level);
    let mut steps: HashMap<(Level, Level), S> = HashMap::new();
    let mut work = 0usize;
    let mut best: Option<S> = None;
    for chain in &chains {
        let mut total = S::zero();
        for pair in chain.windows(2) {
            let key = (pair[0], pair[1]);
            if let std::collections::hash_map::Entry::Vacant(slot) = steps.entry(key) {
                work = work.saturating_add(
                    ts.profile_count(pair[0])
                        .saturating_mul(ts.profile_count(pair[1])),
                );
                if work > cap {
                    return Err(TransferError::CombinatorialCap { needed: work, cap });
                }
                slot.insert(step(econ, y, agent, pair[0], pair[1])?);
            }
            total = total + steps[&key].clone();
        }
        best = Some(match best {
            Some(b) => b.max_of(total),
            None => total,
        });
    }
    Ok(best.unwrap_or_else(S::zero))
}
