use serde::{Deserialize, Serialize};

use super::density::{lower_density_est, MIN_HORIZON};
use super::IndexSet;
use crate::error::{Error, Result};

/// Pairwise disjoint sets `A_1, ..., A_K` with `|j - j'| >= max(k, k')` for
/// distinct `j ∈ A_k`, `j' ∈ A_k'`, and `A_k ⊂ [k, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleFamily {
    pub sets: Vec<IndexSet>,
    pub target_densities: Vec<f64>,
    pub horizon: u64,
}

#[derive(Serialize, Deserialize)]
struct ScheduleDoc {
    horizon: u64,
    sets: Vec<Vec<u64>>,
    target_densities: Vec<f64>,
}

impl Serialize for ScheduleFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ScheduleDoc {
            horizon: self.horizon,
            sets: self.sets.iter().map(|a| a.elems().to_vec()).collect(),
            target_densities: self.target_densities.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ScheduleFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = ScheduleDoc::deserialize(d)?;
        let sets = doc
            .sets
            .into_iter()
            .map(|v| IndexSet::new(v, doc.horizon))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        Ok(ScheduleFamily {
            sets,
            target_densities: doc.target_densities,
            horizon: doc.horizon,
        })
    }
}

impl ScheduleFamily {
    /// Builds a family from explicit sets `A_1, A_2, ...` (1-based in meaning).
    pub fn from_sets(sets: Vec<Vec<u64>>, horizon: u64) -> Result<Self> {
        let k = sets.len();
        Ok(Self {
            sets: sets.into_iter().map(|v| IndexSet::new(v, horizon)).collect::<Result<_>>()?,
            target_densities: vec![0.0; k],
            horizon,
        })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// `A_k` for `k >= 1`.
    pub fn set(&self, k: usize) -> &IndexSet {
        &self.sets[k - 1]
    }

    /// Whether every `A_k` lies in `[k, inf)`.
    pub fn respects_offsets(&self) -> bool {
        self.sets
            .iter()
            .enumerate()
            .all(|(i, a)| a.elems().first().map_or(true, |&e| e >= (i + 1) as u64))
    }

    /// Which set (1-based) each element of the union belongs to, sorted by element.
    pub fn labelled_union(&self) -> Vec<(u64, usize)> {
        let mut all: Vec<(u64, usize)> = self
            .sets
            .iter()
            .enumerate()
            .flat_map(|(i, a)| a.elems().iter().map(move |&e| (e, i + 1)))
            .collect();
        all.sort_unstable();
        all
    }
}

/// Exact check of disjointness and separation by one sweep over the merged
/// elements. Adjacent pairs suffice: gaps along a chain add up and each is at
/// least 1.
pub fn verify_separation(fam: &ScheduleFamily) -> bool {
    let all = fam.labelled_union();
    all.windows(2).all(|w| {
        let (j, k) = w[0];
        let (j2, k2) = w[1];
        j != j2 && j2 - j >= k.max(k2) as u64
    })
}

/// Deterministic greedy scheduler. Sweeps `n = 0, 1, ...` and looks at the
/// set `A_k` (`k <= n`) that is furthest behind its target count, measured in
/// steps: `n - #A_k / d_k`, ties to smaller `k`. The set receives `n` when it
/// is behind and `n` keeps distance `max(k, k')` from the last element of
/// every `A_k'`; otherwise `n` stays unused, so that sparse sets needing wide
/// gaps are not starved by dense ones.
pub fn generate_schedules(k_count: usize, horizon: u64, base_density: f64) -> Result<ScheduleFamily> {
    if k_count == 0 {
        return Err(Error::out_of_range("K", k_count, "[1, inf)"));
    }
    if !(base_density > 0.0 && base_density <= 0.25) {
        return Err(Error::out_of_range("base_density", base_density, "(0, 1/4]"));
    }
    if horizon < MIN_HORIZON {
        return Err(Error::InsufficientHorizon {
            horizon,
            required: MIN_HORIZON,
        });
    }
    let targets: Vec<f64> = (1..=k_count).map(|k| base_density.powi(k as i32)).collect();
    let mut sets: Vec<Vec<u64>> = vec![Vec::new(); k_count];
    let mut last: Vec<Option<u64>> = vec![None; k_count];
    for n in 0..=horizon {
        let mut choice: Option<(usize, f64)> = None;
        for k in 1..=k_count.min(n as usize) {
            let deficit = targets[k - 1] * n as f64 - sets[k - 1].len() as f64;
            let lateness = deficit / targets[k - 1];
            if deficit > 0.0 && choice.map_or(true, |(_, l)| lateness > l) {
                choice = Some((k, lateness));
            }
        }
        if let Some((k, _)) = choice {
            let admissible = last
                .iter()
                .enumerate()
                .all(|(i, l)| l.map_or(true, |l| n - l >= k.max(i + 1) as u64));
            if admissible {
                sets[k - 1].push(n);
                last[k - 1] = Some(n);
            }
        }
    }
    let fam = ScheduleFamily {
        sets: sets
            .into_iter()
            .map(|v| IndexSet::from_sorted_unchecked(v, horizon))
            .collect(),
        target_densities: targets.clone(),
        horizon,
    };
    for (i, a) in fam.sets.iter().enumerate() {
        let achieved = lower_density_est(a)?;
        let required = targets[i] / 2.0;
        if achieved < required {
            return Err(Error::ScheduleGeneration {
                k: i + 1,
                achieved,
                required,
            });
        }
    }
    debug_assert!(verify_separation(&fam));
    Ok(fam)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: every pair, quadratic time.
    fn brute_force_separated(fam: &ScheduleFamily) -> bool {
        let all = fam.labelled_union();
        for a in 0..all.len() {
            for b in a + 1..all.len() {
                let (j, k) = all[a];
                let (j2, k2) = all[b];
                if j == j2 || j.abs_diff(j2) < k.max(k2) as u64 {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn single_set_schedule() {
        let fam = generate_schedules(1, 10_000, 0.25).unwrap();
        assert!(verify_separation(&fam));
        assert!(lower_density_est(fam.set(1)).unwrap() >= 1.0 / 8.0);
    }

    #[test]
    fn two_sets_are_separated_and_dense_enough() {
        let fam = generate_schedules(2, 100_000, 0.25).unwrap();
        assert!(brute_force_separated(&ScheduleFamily {
            sets: fam.sets.iter().map(|a| IndexSet::truncated(a.elems().iter().copied().take(3000), fam.horizon)).collect(),
            ..fam.clone()
        }));
        assert!(verify_separation(&fam));
        assert!(lower_density_est(fam.set(1)).unwrap() >= 1.0 / 8.0);
        assert!(lower_density_est(fam.set(2)).unwrap() >= 1.0 / 32.0);
        assert!(fam.respects_offsets());
    }

    #[test]
    fn six_sets_base_one_eighth() {
        let fam = generate_schedules(6, 100_000, 0.125).unwrap();
        assert!(verify_separation(&fam));
        assert!(fam.respects_offsets());
    }

    #[test]
    fn separation_examples() {
        let bad = ScheduleFamily::from_sets(vec![vec![0, 1], vec![2]], 10).unwrap();
        assert!(!verify_separation(&bad));
        assert!(!brute_force_separated(&bad));
        let good = ScheduleFamily::from_sets(vec![vec![10], vec![20]], 30).unwrap();
        assert!(verify_separation(&good));
        let overlap = ScheduleFamily::from_sets(vec![vec![5], vec![5]], 30).unwrap();
        assert!(!verify_separation(&overlap));
    }

    #[test]
    fn sweep_agrees_with_pairwise_oracle_on_small_families() {
        for sets in [
            vec![vec![1, 2, 3], vec![6, 9]],
            vec![vec![1, 3], vec![5]],
            vec![vec![2, 4], vec![7], vec![11]],
            vec![vec![1], vec![3], vec![6]],
        ] {
            let fam = ScheduleFamily::from_sets(sets, 20).unwrap();
            assert_eq!(verify_separation(&fam), brute_force_separated(&fam));
        }
    }

    #[test]
    fn parameter_checks() {
        assert!(generate_schedules(0, 1000, 0.25).is_err());
        assert!(generate_schedules(2, 1000, 0.3).is_err());
        assert!(generate_schedules(2, 50, 0.25).is_err());
    }

    #[test]
    fn starvation_names_the_first_set() {
        // with base 1/4 and tiny horizon, deep sets cannot reach half their quota
        match generate_schedules(12, 100, 0.25) {
            Err(Error::ScheduleGeneration { k, .. }) => assert!(k >= 1),
            other => panic!("expected starvation, got {other:?}"),
        }
    }
}
