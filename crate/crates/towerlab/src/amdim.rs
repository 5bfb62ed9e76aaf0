//! Approximately equivariant maps into the simplex of finitely supported
//! probability measures on the group, built from a Lebesgue tower
//! collection, together with their exact l1 equivariance defect.
//!
//! On a zero-dimensional system the construction simplifies: the bump
//! function of a tower base degenerates to the indicator of the base, a
//! cell witnesses the Lebesgue condition iff it lies in a level tV_i with
//! F^n t ⊆ S_i, and the weight of the contribution of level t is k/n where
//! k is the Følner layer of t in the shape.

use crate::cantor::System;
use crate::error::{Error, Result};
use crate::group::{folner_layering, FiniteGroupSet, GroupElement};
use crate::par::maybe_par_map;
use crate::rat::{rat, Rat};
use crate::towers::{chromatic_number, is_e_lebesgue, TowerCollection};
use std::collections::BTreeMap;

/// A cell-wise finitely supported probability vector on the group.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexMap {
    pub system: System,
    pub resolution: u32,
    /// declared support bound d+1 (the chromatic bound of the input)
    pub support_bound: u32,
    /// layering depth n used in the construction
    pub depth: u32,
    pub vectors: BTreeMap<u64, BTreeMap<GroupElement, Rat>>,
}

/// Build the simplex map of a tower collection: requires the collection to
/// be F^n-Lebesgue for symmetric F containing e and n >= 2. Each cell x
/// receives the vector t -> sum_i (k_i(t)/n) / H(x) over towers whose level
/// tV_i contains x, where k_i is the Følner layer of t in S_i and H is the
/// total unnormalized mass (H >= 1 by the Lebesgue condition).
pub fn build_simplex_map(
    ts: &TowerCollection,
    f: &FiniteGroupSet,
    n: u32,
) -> Result<SimplexMap> {
    if n < 2 {
        return Err(Error::invalid("layering depth n must be at least 2"));
    }
    if ts.towers.is_empty() {
        return Err(Error::invalid("empty tower collection"));
    }
    let sys = ts.towers[0].base.system.clone();
    let group = sys.group().clone();
    if !f.contains(&group.identity()) || !f.is_symmetric(&group)? {
        return Err(Error::invalid("F must be symmetric and contain the identity"));
    }
    // F^n as an n-fold product set
    let mut fn_set = FiniteGroupSet::singleton(group.identity());
    for _ in 0..n {
        fn_set = fn_set.product(&group, f)?;
    }
    let leb = is_e_lebesgue(ts, &fn_set)?;
    if !leb.holds {
        return Err(Error::invalid(format!(
            "collection is not F^n-Lebesgue (uncovered: {:?}, unwitnessed: {:?})",
            leb.uncovered_cell, leb.unwitnessed_cell
        )));
    }
    let chrom = chromatic_number(ts)?;
    let resolution = leb.resolution;

    // per-cell contributions (t, k) with k >= 1
    let mut contributions: BTreeMap<u64, Vec<(GroupElement, u32)>> = BTreeMap::new();
    for tower in &ts.towers {
        let layers = folner_layering(&group, &tower.shape, f, n)?;
        let mut layer_of: BTreeMap<&GroupElement, u32> = BTreeMap::new();
        for (k, layer) in layers.iter().enumerate() {
            for t in layer.iter() {
                layer_of.insert(t, k as u32);
            }
        }
        for (t, level) in tower.levels()? {
            let k = layer_of[&t];
            if k == 0 {
                continue;
            }
            let level = level.refine(resolution)?;
            for &c in &level.cells {
                contributions.entry(c).or_default().push((t.clone(), k));
            }
        }
    }

    let full = sys.full_set(resolution)?;
    let cells: Vec<u64> = full.cells.iter().copied().collect();
    let vectors_vec = maybe_par_map(&cells, |c| -> Result<BTreeMap<GroupElement, Rat>> {
        let contrib = contributions
            .get(c)
            .ok_or_else(|| Error::AlgorithmIncomplete(format!("cell {c} has H = 0")))?;
        let mut h_total = rat(0, 1);
        let mut vector: BTreeMap<GroupElement, Rat> = BTreeMap::new();
        for (t, k) in contrib {
            let w = rat(*k as i64, n as i64);
            h_total += w;
            *vector.entry(t.clone()).or_insert_with(|| rat(0, 1)) += w;
        }
        // the Lebesgue condition guarantees a full-weight level: H >= 1
        if h_total < rat(1, 1) {
            return Err(Error::AlgorithmIncomplete(format!("cell {c} has H < 1")));
        }
        for v in vector.values_mut() {
            *v /= h_total;
        }
        Ok(vector)
    });
    let mut vectors = BTreeMap::new();
    for (c, v) in cells.into_iter().zip(vectors_vec) {
        let v = v?;
        // normalization and support invariants, exact
        let total: Rat = v.values().fold(rat(0, 1), |a, &b| a + b);
        if total != rat(1, 1) {
            return Err(Error::AlgorithmIncomplete(format!("cell {c} vector sums to {total}")));
        }
        if v.len() as u32 > chrom.number {
            return Err(Error::AlgorithmIncomplete(format!(
                "cell {c} support {} exceeds chromatic bound {}",
                v.len(),
                chrom.number
            )));
        }
        vectors.insert(c, v);
    }
    Ok(SimplexMap { system: sys, resolution, support_bound: chrom.number, depth: n, vectors })
}

/// Exact l1 equivariance defect max over cells x and s in F of
/// ||phi(sx) - s phi(x)||_1, where (s v)(t) = v(s^{-1} t).
pub fn equivariance_defect(map: &SimplexMap, f: &FiniteGroupSet) -> Result<Rat> {
    let sys = &map.system;
    let group = sys.group().clone();
    let mut worst = rat(0, 1);
    for s in f.iter() {
        let shift = sys.act_resolution_shift(s)?;
        let work_res = map.resolution + shift;
        let full = sys.full_set(work_res)?;
        let cells: Vec<u64> = full.cells.iter().copied().collect();
        let sinv = group.inv(s)?;
        let defects = maybe_par_map(&cells, |&c| -> Result<Rat> {
            // phi is constant on map-resolution cells; at work_res the image
            // of a cell under s sits inside a single map-resolution cell
            let x_cell = sys.coarsen_cell(c, work_res, map.resolution)?;
            let images = sys.act_cell(s, c, work_res)?;
            let mut parents: Vec<u64> = images
                .iter()
                .map(|&y| sys.coarsen_cell(y, work_res + shift, map.resolution))
                .collect::<Result<_>>()?;
            parents.dedup();
            if parents.len() != 1 {
                return Err(Error::AlgorithmIncomplete(
                    "image of a working cell straddles map cells".into(),
                ));
            }
            let phi_x = &map.vectors[&x_cell];
            let phi_sx = &map.vectors[&parents[0]];
            // support union of phi(sx) and s·phi(x)
            let mut keys: Vec<GroupElement> = phi_sx.keys().cloned().collect();
            for t in phi_x.keys() {
                keys.push(group.mul(s, t)?);
            }
            keys.sort();
            keys.dedup();
            let mut sum = rat(0, 1);
            for t in keys {
                let a = phi_sx.get(&t).copied().unwrap_or_else(|| rat(0, 1));
                let st = group.mul(&sinv, &t)?;
                let b = phi_x.get(&st).copied().unwrap_or_else(|| rat(0, 1));
                let d = a - b;
                sum += if d < rat(0, 1) { -d } else { d };
            }
            Ok(sum)
        });
        for d in defects {
            let d = d?;
            if d > worst {
                worst = d;
            }
        }
    }
    Ok(worst)
}
