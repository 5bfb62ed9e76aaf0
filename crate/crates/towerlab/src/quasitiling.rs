//! Ornstein–Weiss quasitiling: scale planning, the greedy tiling pass with
//! an explicit disjointness witness, disjointification, and exact tilings
//! for quotient-ladder groups.

use crate::error::{Error, Result};
use crate::group::{
    folner_defect, ladder_transversal, t_boundary, FiniteGroupSet, GroupDescriptor, GroupElement,
};
use crate::rat::{format_rat, rat, to_big, Rat};
use num::{BigRational, One};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Nested tiles T_1 ⊆ ... ⊆ T_n with the boundary smallness condition
/// |∂_{T_{i-1}} T_i| <= (β/8)|T_i| and enough scales that (1-β/2)^n < β.
#[derive(Debug, Clone)]
pub struct TileSystem {
    pub tiles: Vec<FiniteGroupSet>,
    pub beta: Rat,
}

impl TileSystem {
    pub fn new(group: &GroupDescriptor, tiles: Vec<FiniteGroupSet>, beta: Rat) -> Result<Self> {
        if beta <= rat(0, 1) || beta >= rat(1, 2) {
            return Err(Error::invalid("beta must lie in (0, 1/2)"));
        }
        if tiles.is_empty() {
            return Err(Error::invalid("need at least one tile"));
        }
        if !tiles[0].contains(&group.identity()) {
            return Err(Error::invalid("T_1 must contain the identity"));
        }
        for i in 1..tiles.len() {
            if !tiles[i - 1].is_subset(&tiles[i]) {
                return Err(Error::invalid(format!("tiles must be nested (T_{} ⊄ T_{})", i, i + 1)));
            }
            let boundary = t_boundary(group, &tiles[i - 1], &tiles[i])?;
            // |∂_{T_{i-1}} T_i| <= (β/8)|T_i|
            if rat(boundary.len() as i64, 1) > beta / rat(8, 1) * rat(tiles[i].len() as i64, 1) {
                return Err(Error::invalid(format!(
                    "boundary condition fails at scale {}: |∂| = {} > (β/8)|T| = {}",
                    i + 1,
                    boundary.len(),
                    format_rat(&(beta / rat(8, 1) * rat(tiles[i].len() as i64, 1)))
                )));
            }
        }
        // (1 - β/2)^n < β
        let shrink = BigRational::one() - to_big(beta) / BigRational::from_integer(2.into());
        let mut pow = BigRational::one();
        for _ in 0..tiles.len() {
            pow *= shrink.clone();
        }
        if pow >= to_big(beta) {
            return Err(Error::invalid(format!(
                "too few scales: (1-β/2)^{} is not below β",
                tiles.len()
            )));
        }
        Ok(TileSystem { tiles, beta })
    }

    /// Convenience system: n-1 singleton scales below one top tile. The
    /// boundary of a singleton tile is empty, so the invariants reduce to
    /// the scale-count inequality.
    pub fn padded(group: &GroupDescriptor, top: FiniteGroupSet, beta: Rat) -> Result<Self> {
        let n = plan_scales(beta)?;
        let mut tiles = vec![FiniteGroupSet::singleton(group.identity()); n as usize - 1];
        tiles.push(top);
        TileSystem::new(group, tiles, beta)
    }
}

/// Smallest n with (1 - β/2)^n < β.
pub fn plan_scales(beta: Rat) -> Result<u32> {
    if beta <= rat(0, 1) || beta >= rat(1, 2) {
        return Err(Error::invalid("beta must lie in (0, 1/2)"));
    }
    let shrink = BigRational::one() - to_big(beta) / BigRational::from_integer(2.into());
    let target = to_big(beta);
    let mut pow = BigRational::one();
    let mut n = 0u32;
    loop {
        pow *= shrink.clone();
        n += 1;
        if pow < target {
            return Ok(n);
        }
        if n > 1_000_000 {
            return Err(Error::ResourceExhausted("scale planning did not converge".into()));
        }
    }
}

/// One accepted tile: its scale, center, and the shrunk witness tile
/// (full tile minus everything accepted earlier).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacedTile {
    pub scale: usize,
    pub center: GroupElement,
    pub shrunk: FiniteGroupSet,
}

/// A quasitiling of the ambient set: β-disjoint translated tiles covering
/// at least (1-β) of it, in acceptance order.
#[derive(Debug, Clone)]
pub struct QuasiTiling {
    pub ambient: FiniteGroupSet,
    pub beta: Rat,
    pub tiles: Vec<FiniteGroupSet>,
    pub placements: Vec<PlacedTile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TilingReport {
    pub ambient_size: usize,
    pub union_size: usize,
    pub coverage: crate::rat::JsonRat,
    pub witness_ok: bool,
    pub inside_ambient: bool,
    pub coverage_ok: bool,
}

impl QuasiTiling {
    /// Exact validation of all quasitiling invariants.
    pub fn validate(&self, group: &GroupDescriptor) -> Result<TilingReport> {
        let mut union: BTreeSet<GroupElement> = BTreeSet::new();
        let mut inside = true;
        let mut witness_ok = true;
        let mut witness_union: BTreeSet<GroupElement> = BTreeSet::new();
        for p in &self.placements {
            let tile = &self.tiles[p.scale];
            let full = tile.translate_right(group, &p.center)?;
            inside &= full.is_subset(&self.ambient);
            for g in full.iter() {
                union.insert(g.clone());
            }
            // witness: shrunk ⊆ tile, large enough, translates disjoint
            if !p.shrunk.is_subset(tile) {
                witness_ok = false;
            }
            if rat(p.shrunk.len() as i64, 1) < (rat(1, 1) - self.beta) * rat(tile.len() as i64, 1) {
                witness_ok = false;
            }
            let placed = p.shrunk.translate_right(group, &p.center)?;
            for g in placed.iter() {
                if !witness_union.insert(g.clone()) {
                    witness_ok = false;
                }
            }
        }
        let coverage = rat(union.len() as i64, self.ambient.len().max(1) as i64);
        let coverage_ok = coverage >= rat(1, 1) - self.beta;
        Ok(TilingReport {
            ambient_size: self.ambient.len(),
            union_size: union.len(),
            coverage: coverage.into(),
            witness_ok,
            inside_ambient: inside,
            coverage_ok,
        })
    }
}

/// Greedy quasitiling: scales from coarsest to finest, candidate centers in
/// lexicographic order; a center is accepted when its full tile lies in E
/// and retains at least (1-β) of its points after removing everything
/// accepted so far. Deterministic.
pub fn quasitile(
    group: &GroupDescriptor,
    ambient: &FiniteGroupSet,
    sys: &TileSystem,
) -> Result<QuasiTiling> {
    if ambient.is_empty() {
        return Err(Error::invalid("ambient set must be nonempty"));
    }
    let top = sys.tiles.last().unwrap();
    let defect = folner_defect(group, ambient, top)?;
    let threshold = sys.beta / rat(4, 1);
    if defect >= threshold {
        return Err(Error::InvarianceViolation { defect, threshold });
    }
    let mut covered: BTreeSet<GroupElement> = BTreeSet::new();
    let mut placements = Vec::new();
    for scale in (0..sys.tiles.len()).rev() {
        let tile = &sys.tiles[scale];
        // candidate centers: T c ⊆ E, i.e. c in the intersection of t^{-1}E
        let mut candidates: Option<FiniteGroupSet> = None;
        for t in tile.iter() {
            let tinv = group.inv(t)?;
            let shifted = ambient.translate(group, &tinv)?;
            candidates = Some(match candidates {
                None => shifted,
                Some(acc) => acc.intersection(&shifted),
            });
        }
        let candidates = candidates.unwrap();
        let need = (rat(1, 1) - sys.beta) * rat(tile.len() as i64, 1);
        for c in candidates.iter() {
            let placed = tile.translate_right(group, c)?;
            let fresh: Vec<&GroupElement> =
                placed.iter().filter(|g| !covered.contains(*g)).collect();
            if rat(fresh.len() as i64, 1) >= need {
                let cinv = group.inv(c)?;
                let shrunk: FiniteGroupSet = fresh
                    .iter()
                    .map(|g| group.mul(g, &cinv))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .collect();
                for g in placed.iter() {
                    covered.insert(g.clone());
                }
                placements.push(PlacedTile { scale, center: c.clone(), shrunk });
            }
        }
    }
    let tiling = QuasiTiling {
        ambient: ambient.clone(),
        beta: sys.beta,
        tiles: sys.tiles.clone(),
        placements,
    };
    let report = tiling.validate(group)?;
    if !(report.witness_ok && report.inside_ambient && report.coverage_ok) {
        return Err(Error::AlgorithmIncomplete(format!(
            "greedy pass did not reach (1-β) coverage: covered {} of {}",
            report.union_size, report.ambient_size
        )));
    }
    Ok(tiling)
}

/// Resolve overlaps of the full tiles into genuinely disjoint translated
/// tiles; earlier-accepted tiles keep their points. Returns the disjoint
/// sets (shrunk tile translated by its center) in acceptance order.
pub fn disjointify(group: &GroupDescriptor, q: &QuasiTiling) -> Result<Vec<FiniteGroupSet>> {
    let mut taken: BTreeSet<GroupElement> = BTreeSet::new();
    let mut out = Vec::with_capacity(q.placements.len());
    for p in &q.placements {
        let full = q.tiles[p.scale].translate_right(group, &p.center)?;
        let fresh: Vec<GroupElement> =
            full.iter().filter(|g| !taken.contains(*g)).cloned().collect();
        if rat(fresh.len() as i64, 1)
            < (rat(1, 1) - q.beta) * rat(q.tiles[p.scale].len() as i64, 1)
        {
            return Err(Error::invalid(
                "placement retains less than (1-β) of its tile; input is not β-disjoint",
            ));
        }
        for g in &fresh {
            taken.insert(g.clone());
        }
        out.push(FiniteGroupSet::new(fresh));
    }
    Ok(out)
}

/// Exact tiling of a ladder group at a given depth: the canonical
/// transversal F_k tiles G with centers the ladder subgroup N_k.
#[derive(Debug, Clone)]
pub struct LadderTiling {
    pub depth: usize,
    pub shape: FiniteGroupSet,
}

pub fn exact_tiling_ladder(group: &GroupDescriptor, depth: usize) -> Result<LadderTiling> {
    let shape = ladder_transversal(group, depth)?;
    Ok(LadderTiling { depth, shape })
}

impl LadderTiling {
    /// Verify inside a finite window that every element has exactly one
    /// factorization f·c with f in the shape and c in the subgroup.
    pub fn verify_window(&self, group: &GroupDescriptor, window: &FiniteGroupSet) -> Result<bool> {
        for w in window.iter() {
            let mut count = 0;
            for f in self.shape.iter() {
                // c = f^{-1} w must lie in the depth subgroup
                let c = group.mul(&group.inv(f)?, w)?;
                if crate::group::in_ladder_subgroup(group, &c, self.depth)? {
                    count += 1;
                }
            }
            if count != 1 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupDescriptor;

    #[test]
    fn plan_scales_values() {
        assert_eq!(plan_scales(rat(1, 4)).unwrap(), 11);
        assert_eq!(plan_scales(rat(2, 5)).unwrap(), 5);
        // independent check loop for beta = 0.49
        let beta = rat(49, 100);
        let n = plan_scales(beta).unwrap();
        let shrink = to_big(rat(1, 1) - beta / rat(2, 1));
        let mut pow = BigRational::one();
        for _ in 0..n - 1 {
            pow *= shrink.clone();
        }
        assert!(pow >= to_big(beta), "minimality: one fewer scale must fail");
        pow *= shrink;
        assert!(pow < to_big(beta));
        assert_eq!(n, 3);
    }

    #[test]
    fn plan_scales_rejects_bad_beta() {
        assert!(plan_scales(rat(0, 1)).is_err());
        assert!(plan_scales(rat(1, 2)).is_err());
        assert!(plan_scales(rat(3, 4)).is_err());
    }

    #[test]
    fn plan_scales_minimal_property() {
        for (num, den) in [(1i64, 4i64), (1, 10), (2, 5), (49, 100), (1, 100)] {
            let beta = rat(num, den);
            let n = plan_scales(beta).unwrap();
            let shrink = to_big(rat(1, 1) - beta / rat(2, 1));
            let mut pow = BigRational::one();
            for _ in 0..n {
                pow *= shrink.clone();
            }
            assert!(pow < to_big(beta));
            if n > 1 {
                let mut prev = BigRational::one();
                for _ in 0..n - 1 {
                    prev *= shrink.clone();
                }
                assert!(prev >= to_big(beta));
            }
        }
    }

    #[test]
    fn tile_system_invariants_enforced() {
        let z = GroupDescriptor::z();
        // valid padded system
        let sys = TileSystem::padded(&z, FiniteGroupSet::z_interval(0, 6), rat(1, 4)).unwrap();
        assert_eq!(sys.tiles.len(), 11);
        // not nested
        let bad = TileSystem::new(
            &z,
            vec![FiniteGroupSet::z_interval(0, 3), FiniteGroupSet::z_interval(1, 2)],
            rat(1, 4),
        );
        assert!(bad.is_err());
        // too few scales
        let bad = TileSystem::new(&z, vec![FiniteGroupSet::singleton(GroupElement::Z(0))], rat(1, 4));
        assert!(bad.is_err());
        // boundary condition violated: two real interval scales back to back
        let mut tiles = vec![FiniteGroupSet::singleton(GroupElement::Z(0)); 9];
        tiles.push(FiniteGroupSet::z_interval(0, 4));
        tiles.push(FiniteGroupSet::z_interval(0, 9));
        assert!(TileSystem::new(&z, tiles, rat(1, 4)).is_err());
    }

    #[test]
    fn quasitile_interval_instance() {
        let z = GroupDescriptor::z();
        let e = FiniteGroupSet::z_interval(0, 199);
        let sys = TileSystem::padded(&z, FiniteGroupSet::z_interval(0, 6), rat(1, 4)).unwrap();
        let q = quasitile(&z, &e, &sys).unwrap();
        let report = q.validate(&z).unwrap();
        assert!(report.witness_ok && report.inside_ambient && report.coverage_ok);
        // the greedy top pass tiles exactly and singletons fill the rest
        assert_eq!(report.coverage.0, rat(1, 1));
        let disjoint = disjointify(&z, &q).unwrap();
        let total: usize = disjoint.iter().map(|d| d.len()).sum();
        assert_eq!(total, 200);
    }

    #[test]
    fn quasitile_rejects_non_invariant_ambient() {
        let z = GroupDescriptor::z();
        let e = FiniteGroupSet::z_interval(0, 19);
        let sys = TileSystem::padded(&z, FiniteGroupSet::z_interval(0, 6), rat(1, 4)).unwrap();
        match quasitile(&z, &e, &sys) {
            Err(Error::InvarianceViolation { defect, threshold }) => {
                assert_eq!(defect, rat(12, 20));
                assert_eq!(threshold, rat(1, 16));
            }
            other => panic!("expected invariance violation, got {other:?}"),
        }
    }

    #[test]
    fn quasitile_z2_exact_fit() {
        let g = GroupDescriptor::zd(2);
        // E = {0..99}^2 with 3x3 top tiles at beta = 2/5: exact grid fit
        // plus singleton fill reaches full coverage
        let mut cells = Vec::new();
        for x in 0..100i64 {
            for y in 0..100 {
                cells.push(GroupElement::Zd(vec![x, y]));
            }
        }
        let e = FiniteGroupSet::new(cells);
        let mut top = Vec::new();
        for x in 0..3i64 {
            for y in 0..3 {
                top.push(GroupElement::Zd(vec![x, y]));
            }
        }
        let sys = TileSystem::padded(&g, FiniteGroupSet::new(top), rat(2, 5)).unwrap();
        let q = quasitile(&g, &e, &sys).unwrap();
        let report = q.validate(&g).unwrap();
        assert_eq!(report.coverage.0, rat(1, 1));
    }

    #[test]
    fn disjointify_overlapping_pair() {
        let z = GroupDescriptor::z();
        let tile = FiniteGroupSet::z_interval(0, 9);
        let q = QuasiTiling {
            ambient: FiniteGroupSet::z_interval(0, 17),
            beta: rat(1, 5),
            tiles: vec![tile.clone()],
            placements: vec![
                PlacedTile { scale: 0, center: GroupElement::Z(0), shrunk: tile.clone() },
                PlacedTile { scale: 0, center: GroupElement::Z(8), shrunk: FiniteGroupSet::z_interval(2, 9) },
            ],
        };
        let parts = disjointify(&z, &q).unwrap();
        assert_eq!(parts[0], FiniteGroupSet::z_interval(0, 9));
        assert_eq!(parts[1], FiniteGroupSet::z_interval(10, 17));
        assert_eq!(parts[1].len(), 8); // 8 >= 0.8 * 10
        // disjoint input comes back unchanged
        let q2 = QuasiTiling {
            ambient: FiniteGroupSet::z_interval(0, 19),
            beta: rat(1, 5),
            tiles: vec![tile.clone()],
            placements: vec![
                PlacedTile { scale: 0, center: GroupElement::Z(0), shrunk: tile.clone() },
                PlacedTile { scale: 0, center: GroupElement::Z(10), shrunk: tile.clone() },
            ],
        };
        let parts = disjointify(&z, &q2).unwrap();
        assert_eq!(parts[0], FiniteGroupSet::z_interval(0, 9));
        assert_eq!(parts[1], FiniteGroupSet::z_interval(10, 19));
    }

    #[test]
    fn ladder_tiling_z() {
        let g = GroupDescriptor::z_ladder(2, 5);
        let t = exact_tiling_ladder(&g, 3).unwrap();
        assert_eq!(t.shape, FiniteGroupSet::z_interval(0, 7));
        let window = FiniteGroupSet::z_interval(-100, 100);
        assert!(t.verify_window(&g, &window).unwrap());
        // depth 0: the trivial tiling by the whole group
        let t0 = exact_tiling_ladder(&g, 0).unwrap();
        assert_eq!(t0.shape, FiniteGroupSet::singleton(GroupElement::Z(0)));
        assert!(t0.verify_window(&g, &window).unwrap());
    }

    #[test]
    fn ladder_tiling_z2() {
        let g = GroupDescriptor::zd_ladder(2, 2, 3);
        let t = exact_tiling_ladder(&g, 2).unwrap();
        assert_eq!(t.shape.len(), 16);
        let mut window = Vec::new();
        for x in -10..=10i64 {
            for y in -10..=10 {
                window.push(GroupElement::Zd(vec![x, y]));
            }
        }
        assert!(t.verify_window(&g, &FiniteGroupSet::new(window)).unwrap());
    }

    #[test]
    fn ladder_tiling_requires_ladder() {
        let g = GroupDescriptor::z();
        assert!(exact_tiling_ladder(&g, 1).is_err());
    }

    #[test]
    fn ladder_tiling_heisenberg_window() {
        use crate::group::{GroupKind, Ladder};
        let g = GroupDescriptor {
            kind: GroupKind::Heisenberg,
            ladder: Some(Ladder { base: GroupKind::Heisenberg, moduli: vec![2, 4] }),
        };
        let t = exact_tiling_ladder(&g, 1).unwrap();
        assert_eq!(t.shape.len(), 8);
        let window = crate::group::word_ball(&g, 3).unwrap();
        assert!(t.verify_window(&g, &window).unwrap());
    }
}
