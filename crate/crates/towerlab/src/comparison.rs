//! Deciding and certifying the subequivalence relation A ≺_m B on clopen
//! sets.
//!
//! A witness is a clopen partition of A with one translation per piece and
//! an (m+1)-coloring such that same-colored images are pairwise disjoint
//! subsets of B. Verification is exact at the witness resolution. The
//! search is a semi-decision: on systems whose action permutes cells it is
//! encoded as a degree-constrained assignment and solved by integer
//! max-flow; otherwise a budgeted exact backtracking search runs. NotFound
//! is never a disproof unless the structural counting bound fails.

use crate::cantor::{ClopenSet, measure_margin};
use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::group::{word_ball, FiniteGroupSet, GroupElement};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct WitnessPiece {
    pub cells: ClopenSet,
    pub translation: GroupElement,
    pub color: u32,
}

#[derive(Debug, Clone)]
pub struct ComparisonWitness {
    pub pieces: Vec<WitnessPiece>,
}

impl ComparisonWitness {
    pub fn empty() -> Self {
        ComparisonWitness { pieces: Vec::new() }
    }

    pub fn max_color(&self) -> u32 {
        self.pieces.iter().map(|p| p.color).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum WitnessViolation {
    PiecesOverlap { piece_a: usize, piece_b: usize },
    PiecesDoNotCoverA,
    PieceOutsideA { piece: usize },
    ImageOutsideB { piece: usize },
    SameColorImagesOverlap { piece_a: usize, piece_b: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessReport {
    pub ok: bool,
    pub violations: Vec<WitnessViolation>,
}

/// Exact check of all witness conditions at the witness resolution.
pub fn verify_witness(
    a: &ClopenSet,
    b: &ClopenSet,
    witness: &ComparisonWitness,
) -> Result<WitnessReport> {
    let mut violations = Vec::new();
    let n = witness.pieces.len();
    for i in 0..n {
        let pi = &witness.pieces[i];
        if !pi.cells.is_subset_of(a)? {
            violations.push(WitnessViolation::PieceOutsideA { piece: i });
        }
        for j in i + 1..n {
            if !pi.cells.is_disjoint_from(&witness.pieces[j].cells)? {
                violations.push(WitnessViolation::PiecesOverlap { piece_a: i, piece_b: j });
            }
        }
    }
    // union of pieces equals A
    let mut union = a.system.empty_set(a.resolution)?;
    for p in &witness.pieces {
        union = union.union(&p.cells)?;
    }
    if !union.same_set(a)? {
        violations.push(WitnessViolation::PiecesDoNotCoverA);
    }
    // images: inside B and per-color disjoint
    let mut images = Vec::with_capacity(n);
    for (i, p) in witness.pieces.iter().enumerate() {
        let img = p.cells.act(&p.translation)?;
        if !img.is_subset_of(b)? {
            violations.push(WitnessViolation::ImageOutsideB { piece: i });
        }
        images.push(img);
    }
    for i in 0..n {
        for j in i + 1..n {
            if witness.pieces[i].color == witness.pieces[j].color
                && !images[i].is_disjoint_from(&images[j])?
            {
                violations.push(WitnessViolation::SameColorImagesOverlap { piece_a: i, piece_b: j });
            }
        }
    }
    Ok(WitnessReport { ok: violations.is_empty(), violations })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchBudget {
    pub radius: u32,
    pub max_resolution: u32,
    /// (resolution, radius) pairs actually attempted, in order
    pub attempts: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NotFoundReason {
    /// true when the counting bound |cells(A)| > (m+1)|cells(B)| rules the
    /// witness out at every resolution (cell-permuting systems only)
    pub structurally_impossible: bool,
    pub detail: String,
    pub budget: SearchBudget,
    /// measure margin warning: search ran although min mu(B) - mu(A) <= 0
    pub margin_warning: Option<String>,
}

#[derive(Debug, Clone)]
pub enum SearchOutcome {
    Found { witness: ComparisonWitness, budget: SearchBudget, margin_warning: Option<String> },
    NotFound(NotFoundReason),
}

impl SearchOutcome {
    pub fn witness(&self) -> Option<&ComparisonWitness> {
        match self {
            SearchOutcome::Found { witness, .. } => Some(witness),
            SearchOutcome::NotFound(_) => None,
        }
    }
}

/// The escalation schedule: resolution +1, then radius +2, alternating,
/// each clamped at its cap, starting from (start_res, min(2, radius)).
fn schedule(start_res: u32, max_res: u32, radius: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    let mut res = start_res;
    let mut rad = radius.min(2);
    out.push((res, rad));
    let mut grow_res = true;
    while res < max_res || rad < radius {
        if grow_res && res < max_res {
            res += 1;
        } else if rad < radius {
            rad = (rad + 2).min(radius);
        } else if res < max_res {
            res += 1;
        }
        grow_res = !grow_res;
        if out.last() != Some(&(res, rad)) {
            out.push((res, rad));
        }
    }
    out
}

/// Search for a witness of A ≺_m B using translations from the word ball
/// of the given radius, escalating resolution up to max_resolution.
pub fn find_witness(
    a: &ClopenSet,
    b: &ClopenSet,
    m: u32,
    radius: u32,
    max_resolution: u32,
) -> Result<SearchOutcome> {
    if !a.same_system(b) {
        return Err(Error::invalid("comparison requires sets on one system"));
    }
    let margin = measure_margin(a, b)?;
    let margin_warning = if margin <= crate::rat::rat(0, 1) {
        Some(format!(
            "measure margin {} is not positive; the comparison hypothesis mu(A) < mu(B) fails",
            crate::rat::format_rat(&margin)
        ))
    } else {
        None
    };
    let start_res = a.resolution.max(b.resolution);
    let max_resolution = max_resolution.max(start_res);
    let mut budget = SearchBudget { radius, max_resolution, attempts: Vec::new() };

    if a.is_empty() {
        return Ok(SearchOutcome::Found {
            witness: ComparisonWitness::empty(),
            budget,
            margin_warning,
        });
    }

    let permuting = a.system.is_permuting();
    if permuting {
        // counting bound: translations act as cell bijections, so the pieces
        // inject (per color) into cells(B); the cell ratio is refinement
        // invariant.
        let af = a.refine(start_res)?;
        let bf = b.refine(start_res)?;
        if af.len() > (m as usize + 1) * bf.len() {
            return Ok(SearchOutcome::NotFound(NotFoundReason {
                structurally_impossible: true,
                detail: format!(
                    "|cells(A)| = {} exceeds (m+1)|cells(B)| = {}; translations are cell bijections",
                    af.len(),
                    (m as usize + 1) * bf.len()
                ),
                budget,
                margin_warning,
            }));
        }
    }

    for (res, rad) in schedule(start_res, max_resolution, radius) {
        budget.attempts.push((res, rad));
        let ball = word_ball(a.system.group(), rad)?;
        let found = if permuting {
            assignment_search(a, b, m, &ball, res)?
        } else {
            backtracking_search(a, b, m, &ball, res)?
        };
        if let Some(witness) = found {
            return Ok(SearchOutcome::Found { witness, budget, margin_warning });
        }
    }
    Ok(SearchOutcome::NotFound(NotFoundReason {
        structurally_impossible: false,
        detail: "budgets exhausted without a witness".into(),
        budget,
        margin_warning,
    }))
}

/// Flow encoding on cell-permuting systems: unit supply per A-cell, arcs
/// (A-cell, translation) -> B-cell for images inside B, B-cell capacity
/// m+1. A saturating flow yields the assignment; pieces landing on one
/// B-cell get distinct colors.
fn assignment_search(
    a: &ClopenSet,
    b: &ClopenSet,
    m: u32,
    ball: &FiniteGroupSet,
    res: u32,
) -> Result<Option<ComparisonWitness>> {
    let af = a.refine(res)?;
    let bf = b.refine(res)?;
    let a_cells: Vec<u64> = af.cells.iter().copied().collect();
    let b_cells: Vec<u64> = bf.cells.iter().copied().collect();
    let b_index: BTreeMap<u64, usize> = b_cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();

    let mut net = FlowNetwork::new(a_cells.len() + b_cells.len() + 2);
    let source = a_cells.len() + b_cells.len();
    let sink = source + 1;
    for (ai, _) in a_cells.iter().enumerate() {
        net.add_edge(source, ai, 1);
    }
    // one arc per (A-cell, B-cell), labeled by the first translation in
    // ball order that realizes it (lexicographic tie-break)
    let mut arc_info: Vec<(usize, usize, usize, GroupElement)> = Vec::new();
    for (ai, &ac) in a_cells.iter().enumerate() {
        let mut targets: BTreeMap<usize, GroupElement> = BTreeMap::new();
        for s in ball.iter() {
            let img = af.system.act_cell(s, ac, res)?;
            debug_assert_eq!(img.len(), 1);
            if let Some(&bi) = b_index.get(&img[0]) {
                targets.entry(bi).or_insert_with(|| s.clone());
            }
        }
        for (bi, s) in targets {
            let eid = net.add_edge(ai, a_cells.len() + bi, 1);
            arc_info.push((eid, ai, bi, s));
        }
    }
    for (bi, _) in b_cells.iter().enumerate() {
        net.add_edge(a_cells.len() + bi, sink, m as u64 + 1);
    }
    let flow = net.max_flow(source, sink);
    if flow < a_cells.len() as u64 {
        return Ok(None);
    }
    // color pieces by arrival index at their B-cell
    let mut arrivals: BTreeMap<usize, u32> = BTreeMap::new();
    let mut grouped: BTreeMap<(GroupElement, u32), Vec<u64>> = BTreeMap::new();
    for (eid, ai, bi, s) in arc_info {
        if net.flow_on(eid) == 1 {
            let color_slot = arrivals.entry(bi).or_insert(0);
            let color = *color_slot;
            *color_slot += 1;
            grouped.entry((s, color)).or_default().push(a_cells[ai]);
        }
    }
    let mut pieces = Vec::new();
    for ((s, color), cells) in grouped {
        pieces.push(WitnessPiece {
            cells: af.system.cells(res, cells)?,
            translation: s,
            color,
        });
    }
    Ok(Some(ComparisonWitness { pieces }))
}

/// Budgeted exact backtracking for non-permuting systems. Cells of A are
/// assigned (translation, color) in sorted order; same-color image cells
/// (tracked at the finest image resolution) must stay disjoint and inside
/// B. Sound and deterministic; completeness is only claimed for the
/// permuting encoding.
fn backtracking_search(
    a: &ClopenSet,
    b: &ClopenSet,
    m: u32,
    ball: &FiniteGroupSet,
    res: u32,
) -> Result<Option<ComparisonWitness>> {
    let af = a.refine(res)?;
    let a_cells: Vec<u64> = af.cells.iter().copied().collect();
    if a_cells.is_empty() {
        return Ok(Some(ComparisonWitness::empty()));
    }
    let mut max_shift = 0;
    for s in ball.iter() {
        max_shift = max_shift.max(af.system.act_resolution_shift(s)?);
    }
    let top = res + max_shift;
    let btop = b.refine(top)?;
    // precompute candidate moves: per A-cell, (s, image cells at top)
    let mut moves: Vec<Vec<(GroupElement, Vec<u64>)>> = Vec::with_capacity(a_cells.len());
    for &ac in &a_cells {
        let mut opts = Vec::new();
        for s in ball.iter() {
            let shift = af.system.act_resolution_shift(s)?;
            let img = af.system.act_cell(s, ac, res)?;
            let mut img_top = Vec::new();
            for c in img {
                img_top.extend(af.system.refine_cell(c, res + shift, top)?);
            }
            img_top.sort_unstable();
            if img_top.iter().all(|c| btop.cells.contains(c)) {
                opts.push((s.clone(), img_top));
            }
        }
        moves.push(opts);
    }
    let colors = m as usize + 1;
    let mut occupied: Vec<std::collections::BTreeSet<u64>> = vec![Default::default(); colors];
    let mut chosen: Vec<(usize, u32)> = Vec::with_capacity(a_cells.len());
    let mut steps = 0u64;
    const STEP_CAP: u64 = 2_000_000;

    fn rec(
        idx: usize,
        moves: &[Vec<(GroupElement, Vec<u64>)>],
        occupied: &mut [std::collections::BTreeSet<u64>],
        chosen: &mut Vec<(usize, u32)>,
        steps: &mut u64,
    ) -> bool {
        if idx == moves.len() {
            return true;
        }
        *steps += 1;
        if *steps > STEP_CAP {
            return false;
        }
        for (mi, (_, img)) in moves[idx].iter().enumerate() {
            for color in 0..occupied.len() as u32 {
                let occ = &occupied[color as usize];
                if img.iter().all(|c| !occ.contains(c)) {
                    for &c in img {
                        occupied[color as usize].insert(c);
                    }
                    chosen.push((mi, color));
                    if rec(idx + 1, moves, occupied, chosen, steps) {
                        return true;
                    }
                    chosen.pop();
                    for &c in img {
                        occupied[color as usize].remove(&c);
                    }
                }
            }
        }
        false
    }

    if !rec(0, &moves, &mut occupied, &mut chosen, &mut steps) {
        return Ok(None);
    }
    let mut grouped: BTreeMap<(GroupElement, u32), Vec<u64>> = BTreeMap::new();
    for (i, &(mi, color)) in chosen.iter().enumerate() {
        let s = moves[i][mi].0.clone();
        grouped.entry((s, color)).or_default().push(a_cells[i]);
    }
    let mut pieces = Vec::new();
    for ((s, color), cells) in grouped {
        pieces.push(WitnessPiece { cells: af.system.cells(res, cells)?, translation: s, color });
    }
    Ok(Some(ComparisonWitness { pieces }))
}

/// The clopen subequivalence recursion: turn a cover of A (with per-color
/// disjoint images) into a genuine partition carrying the same translations
/// and colors. Pieces are processed in lexicographic (color, index) order;
/// earlier colors keep what they claimed, and within a color each piece
/// loses the cover sets of its predecessors.
pub fn disjointify_cover(
    pieces: &[(ClopenSet, GroupElement, u32)],
    a: &ClopenSet,
) -> Result<ComparisonWitness> {
    // cover check
    let mut union = a.system.empty_set(a.resolution)?;
    for (c, _, _) in pieces {
        union = union.union(c)?;
    }
    if !a.is_subset_of(&union)? {
        return Err(Error::invalid("pieces do not cover A"));
    }
    let mut order: Vec<usize> = (0..pieces.len()).collect();
    order.sort_by_key(|&i| (pieces[i].2, i));
    let mut taken = a.system.empty_set(a.resolution)?;
    let mut current_color = None;
    let mut same_color_earlier = a.system.empty_set(a.resolution)?;
    let mut taken_before_color = a.system.empty_set(a.resolution)?;
    let mut out = Vec::new();
    for &i in &order {
        let (cover, s, color) = &pieces[i];
        if current_color != Some(*color) {
            current_color = Some(*color);
            taken_before_color = taken.clone();
            same_color_earlier = a.system.empty_set(a.resolution)?;
        }
        let piece = a
            .difference(&taken_before_color)?
            .intersection(cover)?
            .difference(&same_color_earlier)?;
        same_color_earlier = same_color_earlier.union(cover)?;
        taken = taken.union(&piece)?;
        if !piece.is_empty() {
            out.push(WitnessPiece { cells: piece, translation: s.clone(), color: *color });
        }
    }
    Ok(ComparisonWitness { pieces: out })
}

/// Compose plain-comparison witnesses A ≺ B and B ≺ C into one for A ≺ C.
pub fn compose_witnesses(
    w1: &ComparisonWitness,
    w2: &ComparisonWitness,
) -> Result<ComparisonWitness> {
    if w1.max_color() != 0 || w2.max_color() != 0 {
        return Err(Error::unsupported("witness composition is defined for m = 0"));
    }
    let mut pieces = Vec::new();
    for p in &w1.pieces {
        let group = p.cells.system.group().clone();
        let img = p.cells.act(&p.translation)?;
        for q in &w2.pieces {
            let overlap = img.intersection(&q.cells)?;
            if overlap.is_empty() {
                continue;
            }
            let sinv = group.inv(&p.translation)?;
            let back = overlap.act(&sinv)?;
            let ts = group.mul(&q.translation, &p.translation)?;
            pieces.push(WitnessPiece { cells: back, translation: ts, color: 0 });
        }
    }
    Ok(ComparisonWitness { pieces })
}
