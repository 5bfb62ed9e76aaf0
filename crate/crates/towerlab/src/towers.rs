//! Towers, castles and tower collections: verification, first-return
//! decompositions, doubling, the E-Lebesgue condition, chromatic numbers,
//! refinement against targets, and pullback along product projections.

use crate::cantor::{CantorSystem, ClopenSet, System, SystemSpec};
use crate::error::{Error, Result};
use crate::group::{FiniteGroupSet, GroupElement};
use crate::par::maybe_par_map;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// A tower (V, S): clopen base V and finite shape S with the levels sV
/// pairwise disjoint.
#[derive(Debug, Clone)]
pub struct Tower {
    pub base: ClopenSet,
    pub shape: FiniteGroupSet,
}

impl Tower {
    pub fn new(base: ClopenSet, shape: FiniteGroupSet) -> Self {
        Tower { base, shape }
    }

    /// Normalize so that e lies in the shape (replace S by St^{-1} and V by
    /// tV for the smallest t in S).
    pub fn normalized(&self) -> Result<Tower> {
        let group = self.base.system.group().clone();
        let e = group.identity();
        if self.shape.contains(&e) || self.shape.is_empty() {
            return Ok(self.clone());
        }
        let t = self.shape.iter().next().unwrap().clone();
        let tinv = group.inv(&t)?;
        let base = self.base.act(&t)?;
        let shape = self.shape.translate_right(&group, &tinv)?;
        Ok(Tower { base, shape })
    }

    /// All levels (s, sV), at their natural resolutions.
    pub fn levels(&self) -> Result<Vec<(GroupElement, ClopenSet)>> {
        let shape: Vec<GroupElement> = self.shape.iter().cloned().collect();
        let results = maybe_par_map(&shape, |s| self.base.act(s));
        let mut out = Vec::with_capacity(shape.len());
        for (s, r) in shape.into_iter().zip(results) {
            out.push((s, r?));
        }
        Ok(out)
    }

    /// Union of the levels SV.
    pub fn footprint(&self) -> Result<ClopenSet> {
        let mut acc = self.base.system.empty_set(self.base.resolution)?;
        for (_, level) in self.levels()? {
            acc = acc.union(&level)?;
        }
        Ok(acc)
    }
}

/// A castle: finitely many towers whose footprints are pairwise disjoint.
#[derive(Debug, Clone)]
pub struct Castle {
    pub towers: Vec<Tower>,
}

/// A collection of towers whose footprints may overlap.
#[derive(Debug, Clone)]
pub struct TowerCollection {
    pub towers: Vec<Tower>,
}

impl From<Castle> for TowerCollection {
    fn from(c: Castle) -> Self {
        TowerCollection { towers: c.towers }
    }
}

/// Where a castle verification failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CastleViolation {
    /// two levels of one tower overlap: (tower, shape elements)
    LevelOverlap { tower: usize, s: String, t: String },
    /// two tower footprints overlap
    FootprintOverlap { tower_a: usize, tower_b: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CastleReport {
    pub valid: bool,
    pub violations: Vec<CastleViolation>,
    /// whether the castle levels partition the whole space
    pub partitions_space: bool,
}

/// Check per-tower level disjointness and cross-tower footprint
/// disjointness; also reports whether the levels partition X.
pub fn verify_castle(castle: &Castle) -> Result<CastleReport> {
    let mut violations = Vec::new();
    let mut footprints: Vec<ClopenSet> = Vec::new();
    for (i, tower) in castle.towers.iter().enumerate() {
        let levels = tower.levels()?;
        for a in 0..levels.len() {
            for b in a + 1..levels.len() {
                if !levels[a].1.is_disjoint_from(&levels[b].1)? {
                    violations.push(CastleViolation::LevelOverlap {
                        tower: i,
                        s: levels[a].0.to_string(),
                        t: levels[b].0.to_string(),
                    });
                }
            }
        }
        footprints.push(tower.footprint()?);
    }
    for a in 0..footprints.len() {
        for b in a + 1..footprints.len() {
            if !footprints[a].is_disjoint_from(&footprints[b])? {
                violations.push(CastleViolation::FootprintOverlap { tower_a: a, tower_b: b });
            }
        }
    }
    let partitions_space = if castle.towers.is_empty() {
        false
    } else {
        let sys = &castle.towers[0].base.system;
        let mut union = sys.empty_set(0)?;
        for f in &footprints {
            union = union.union(f)?;
        }
        let full = sys.full_set(union.resolution)?;
        violations.is_empty() && union.same_set(&full)?
    };
    Ok(CastleReport { valid: violations.is_empty(), violations, partitions_space })
}

/// Witness that a collection satisfies the E-Lebesgue condition: for each
/// cell, a tower index and shape element t with the cell inside tV_i and
/// Et ⊆ S_i.
#[derive(Debug, Clone)]
pub struct LebesgueReport {
    pub holds: bool,
    /// resolution at which cells were examined
    pub resolution: u32,
    /// cell -> (tower, t) for covered-and-witnessed cells
    pub certificate: BTreeMap<u64, (usize, GroupElement)>,
    /// a cell not covered by any level at all, if one exists
    pub uncovered_cell: Option<u64>,
    /// a covered cell with no witness satisfying Et ⊆ S_i
    pub unwitnessed_cell: Option<u64>,
}

/// Decide the E-Lebesgue property of a collection: every cell lies in some
/// level tV_i with Et ⊆ S_i.
pub fn is_e_lebesgue(
    ts: &TowerCollection,
    e: &FiniteGroupSet,
) -> Result<LebesgueReport> {
    if ts.towers.is_empty() {
        return Err(Error::invalid("empty tower collection"));
    }
    let sys = ts.towers[0].base.system.clone();
    let group = sys.group().clone();
    // Each (i, t) with Et ⊆ S_i contributes its level as a witness zone.
    let mut level_sets: Vec<(usize, GroupElement, ClopenSet, bool)> = Vec::new();
    let mut resolution = 0u32;
    for (i, tower) in ts.towers.iter().enumerate() {
        for (t, level) in tower.levels()? {
            let et = e.product(&group, &FiniteGroupSet::singleton(t.clone()))?;
            let good = et.is_subset(&tower.shape);
            resolution = resolution.max(level.resolution);
            level_sets.push((i, t, level, good));
        }
    }
    let full = sys.full_set(resolution)?;
    let mut certificate = BTreeMap::new();
    let mut covered: BTreeSet<u64> = BTreeSet::new();
    for (i, t, level, good) in &level_sets {
        let level = level.refine(resolution)?;
        for &c in &level.cells {
            covered.insert(c);
            if *good {
                certificate.entry(c).or_insert_with(|| (*i, t.clone()));
            }
        }
    }
    let uncovered_cell = full.cells.iter().find(|c| !covered.contains(c)).copied();
    let unwitnessed_cell = full
        .cells
        .iter()
        .find(|c| covered.contains(c) && !certificate.contains_key(c))
        .copied();
    let holds = uncovered_cell.is_none() && unwitnessed_cell.is_none();
    Ok(LebesgueReport { holds, resolution, certificate, uncovered_cell, unwitnessed_cell })
}

/// Weaker cover-level Lebesgue condition: every cell's E-orbit stays inside
/// a single footprint. Implied by the tower condition, not conversely.
pub fn is_e_lebesgue_cover(ts: &TowerCollection, e: &FiniteGroupSet) -> Result<bool> {
    if ts.towers.is_empty() {
        return Err(Error::invalid("empty tower collection"));
    }
    let sys = ts.towers[0].base.system.clone();
    let mut footprints = Vec::new();
    let mut resolution = 0;
    for tower in &ts.towers {
        let f = tower.footprint()?;
        resolution = resolution.max(f.resolution);
        footprints.push(f);
    }
    // orbit of each cell under E
    let full = sys.full_set(resolution)?;
    for &c in &full.cells {
        let cell = sys.cells(resolution, [c])?;
        let mut orbit = cell.clone();
        for s in e.iter() {
            orbit = orbit.union(&cell.act(s)?)?;
        }
        let mut ok = false;
        for f in &footprints {
            if orbit.is_subset_of(f)? {
                ok = true;
                break;
            }
        }
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Chromatic number of the footprint family: least number of disjoint
/// subfamilies. Exact backtracking up to `exact_cap` towers; above the cap
/// the greedy bound is returned with `exact = false`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChromaticResult {
    pub number: u32,
    pub exact: bool,
}

pub const CHROMATIC_EXACT_CAP: usize = 20;

pub fn chromatic_number(ts: &TowerCollection) -> Result<ChromaticResult> {
    chromatic_number_capped(ts, CHROMATIC_EXACT_CAP)
}

pub fn chromatic_number_capped(ts: &TowerCollection, cap: usize) -> Result<ChromaticResult> {
    let n = ts.towers.len();
    if n == 0 {
        return Ok(ChromaticResult { number: 0, exact: true });
    }
    let mut footprints = Vec::with_capacity(n);
    for t in &ts.towers {
        footprints.push(t.footprint()?);
    }
    let mut adj = vec![vec![false; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            if !footprints[a].is_disjoint_from(&footprints[b])? {
                adj[a][b] = true;
                adj[b][a] = true;
            }
        }
    }
    let greedy = greedy_coloring(&adj);
    if n > cap {
        return Ok(ChromaticResult { number: greedy, exact: false });
    }
    for k in 1..=greedy {
        let mut colors = vec![u32::MAX; n];
        if color_backtrack(&adj, &mut colors, 0, k) {
            return Ok(ChromaticResult { number: k, exact: true });
        }
    }
    Ok(ChromaticResult { number: greedy, exact: true })
}

fn greedy_coloring(adj: &[Vec<bool>]) -> u32 {
    let n = adj.len();
    let mut colors = vec![u32::MAX; n];
    let mut used_max = 0;
    for v in 0..n {
        let mut taken: BTreeSet<u32> = BTreeSet::new();
        for u in 0..n {
            if adj[v][u] && colors[u] != u32::MAX {
                taken.insert(colors[u]);
            }
        }
        let mut c = 0;
        while taken.contains(&c) {
            c += 1;
        }
        colors[v] = c;
        used_max = used_max.max(c + 1);
    }
    used_max
}

fn color_backtrack(adj: &[Vec<bool>], colors: &mut [u32], v: usize, k: u32) -> bool {
    if v == adj.len() {
        return true;
    }
    let mut max_used = 0;
    for &c in colors[..v].iter() {
        if c != u32::MAX {
            max_used = max_used.max(c + 1);
        }
    }
    for c in 0..k.min(max_used + 1) {
        if (0..v).all(|u| !adj[v][u] || colors[u] != c) {
            colors[v] = c;
            if color_backtrack(adj, colors, v + 1, k) {
                return true;
            }
            colors[v] = u32::MAX;
        }
    }
    false
}

/// First-return decomposition of a minimal Z-system over a nonempty clopen
/// base V: towers (V_i, {0,...,n_i - 1}) indexed by return time, whose
/// levels partition X.
pub fn first_return_decomposition(sys: &System, v: &ClopenSet, cap: u64) -> Result<Castle> {
    if v.is_empty() {
        return Err(Error::invalid("first-return base must be nonempty"));
    }
    if sys.group().kind != crate::group::GroupKind::Z {
        return Err(Error::unsupported("first-return decomposition requires a Z action"));
    }
    // remaining = points of V with return time > n after step n
    let mut remaining = v.clone();
    let mut towers = Vec::new();
    for n in 1..=cap {
        if remaining.is_empty() {
            break;
        }
        // return time exactly n: avoided V through times 1..n-1 and T^n x in V
        let back = GroupElement::Z(-(n as i64));
        let exact = remaining.intersection(&v.act(&back)?)?;
        if !exact.is_empty() {
            towers.push(Tower::new(exact.clone(), FiniteGroupSet::z_interval(0, n as i64 - 1)));
            remaining = remaining.difference(&exact)?;
        }
    }
    if !remaining.is_empty() {
        return Err(Error::CapExceeded { cap });
    }
    let castle = Castle { towers };
    let report = verify_castle(&castle)?;
    if !report.valid || !report.partitions_space {
        return Err(Error::AlgorithmIncomplete(
            "first-return castle failed verification (is the system minimal?)".into(),
        ));
    }
    Ok(castle)
}

/// Double a castle for the Lebesgue condition: the collection consisting of
/// the castle together with its image under act(-N) (bases shifted by -N,
/// shapes unchanged). For symmetric E with N greater than twice the radius
/// of E and shapes much longer than N, the result is E-Lebesgue.
pub fn double_castle(castle: &Castle, n: i64) -> Result<TowerCollection> {
    if n <= 0 {
        return Err(Error::invalid("shift N must be positive"));
    }
    let mut towers = castle.towers.clone();
    for tower in &castle.towers {
        let shifted_base = tower.base.act(&GroupElement::Z(-n))?;
        towers.push(Tower::new(shifted_base, tower.shape.clone()));
    }
    Ok(TowerCollection { towers })
}

/// Split castle bases so that every level is contained in or disjoint from
/// every target set. The footprint is preserved exactly.
pub fn refine_castle_to(castle: &Castle, targets: &[ClopenSet]) -> Result<Castle> {
    let mut towers = Vec::new();
    for tower in &castle.towers {
        let group = tower.base.system.group().clone();
        // trace of each (s, target) pulled back to the base
        let mut traces: Vec<ClopenSet> = Vec::new();
        for s in tower.shape.iter() {
            let sinv = group.inv(s)?;
            for target in targets {
                let trace = tower.base.intersection(&target.act(&sinv)?)?;
                traces.push(trace);
            }
        }
        // split base cells by membership profile across all traces
        let mut resolution = tower.base.resolution;
        for t in &traces {
            resolution = resolution.max(t.resolution);
        }
        let base = tower.base.refine(resolution)?;
        let traces: Vec<ClopenSet> = traces
            .into_iter()
            .map(|t| t.refine(resolution))
            .collect::<Result<_>>()?;
        let mut profiles: BTreeMap<Vec<bool>, Vec<u64>> = BTreeMap::new();
        for &c in &base.cells {
            let profile: Vec<bool> = traces.iter().map(|t| t.cells.contains(&c)).collect();
            profiles.entry(profile).or_default().push(c);
        }
        for (_, cells) in profiles {
            let piece = tower.base.system.cells(resolution, cells)?;
            towers.push(Tower::new(piece, tower.shape.clone()));
        }
    }
    Ok(Castle { towers })
}

/// Pull a castle on one factor of a product system back along the
/// coordinate projection: bases become preimages, shapes are unchanged.
pub fn pullback_castle(castle: &Castle, product: &System, factor: usize) -> Result<Castle> {
    let factors = match product.spec() {
        SystemSpec::Product { factors } => factors.clone(),
        _ => return Err(Error::unsupported("pullback target must be a product system")),
    };
    if factor >= factors.len() {
        return Err(Error::invalid("factor index out of range"));
    }
    let mut towers = Vec::new();
    for tower in &castle.towers {
        if CantorSystem::build(factors[factor].clone())?.as_ref() != tower.base.system.as_ref() {
            return Err(Error::invalid("castle does not live on the named factor"));
        }
        let r = tower.base.resolution;
        let full = product.full_set(r)?;
        let mut cells = BTreeSet::new();
        for &cell in &full.cells {
            let coords = product.product_decode(cell, r)?;
            if tower.base.cells.contains(&coords[factor]) {
                cells.insert(cell);
            }
        }
        towers.push(Tower::new(product.cells(r, cells)?, tower.shape.clone()));
    }
    Ok(Castle { towers })
}
