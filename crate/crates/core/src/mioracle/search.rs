use std::collections::BTreeSet;

use rayon::prelude::*;

use super::{bayes_accuracy, dpi_check, modified_mi, modified_variable, permutation_index, Coarsening, DiscreteWorld, DpiReport};
use crate::error::Result;

/// Largest number of coarsenings examined before a partial report.
pub const DEFAULT_BUDGET: u64 = 1_000_000;
/// Required gap I(X′; Y) − I(X̃′; Y) for a witness.
pub const WITNESS_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// Position in the enumeration order.
    pub index: u64,
    pub k: Coarsening,
    pub mi_plain: f64,
    pub mi_coarse: f64,
    pub bayes_plain: f64,
    pub bayes_coarse: f64,
    pub dpi: DpiReport,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SearchOutcome {
    Found(Witness),
    /// Every candidate examined, none lowers I(X̃′; Y).
    None { examined: u64 },
    /// Budget ran out before the space was exhausted; no witness among the
    /// examined prefix. `total` is `None` when it overflows u64.
    Partial { examined: u64, total: Option<u64> },
}

/// Enumerates coarsenings in a fixed order and returns the first witness.
///
/// Only the images of rankings that actually occur in the world affect
/// X̃′, so the search ranges over those images (n!^m maps for m occurring
/// rankings); all other rankings map to themselves. Candidate `i` is read as
/// a mixed-radix number whose most significant digit is the image of the
/// lowest-indexed occurring ranking. Threads split the range and the lowest
/// witness index wins.
pub fn conjecture_search(world: &DiscreteWorld, budget: u64) -> Result<SearchOutcome> {
    world.validate()?;
    let n = world.ranking_count();
    let occurring: Vec<usize> =
        world.rankings.iter().flatten().map(|r| permutation_index(r)).collect::<BTreeSet<_>>().into_iter().collect();
    let total = (0..occurring.len()).try_fold(1u64, |acc, _| acc.checked_mul(n as u64));
    let limit = total.map_or(budget, |t| t.min(budget));
    let identity = Coarsening::identity(world.pixels);
    let (mi_plain, _) = modified_mi(world, &identity)?;
    let bayes_plain = bayes_accuracy(&modified_variable(world, &identity, world.drop)?.table)?;

    let candidate = |index: u64| {
        let mut map = identity.map.clone();
        let mut rest = index;
        for &a in occurring.iter().rev() {
            map[a] = (rest % n as u64) as usize;
            rest /= n as u64;
        }
        Coarsening { map }
    };
    let found = (0..limit)
        .into_par_iter()
        .map(|i| -> Result<Option<Witness>> {
            let k = candidate(i);
            let (_, mi_coarse) = modified_mi(world, &k)?;
            if mi_plain <= mi_coarse + WITNESS_MARGIN {
                return Ok(None);
            }
            let dpi = dpi_check(world, &k)?;
            if !dpi.holds {
                return Ok(None);
            }
            let bayes_coarse = bayes_accuracy(&modified_variable(world, &k, world.drop)?.table)?;
            Ok(Some(Witness { index: i, k, mi_plain, mi_coarse, bayes_plain, bayes_coarse, dpi }))
        })
        .find_first(|r| !matches!(r, Ok(None)));
    match found {
        Some(Ok(Some(w))) => Ok(SearchOutcome::Found(w)),
        Some(Err(e)) => Err(e),
        _ if total == Some(limit) => Ok(SearchOutcome::None { examined: limit }),
        _ => Ok(SearchOutcome::Partial { examined: limit, total }),
    }
}
