//! The clopen type semigroup S(X,G): nonnegative integer weight functions
//! on cells up to piecewise-translation equidecomposability, with the
//! algebraic order, states induced by invariant measures, and
//! almost-unperforation probes.

use crate::cantor::{ClopenSet, MassEstimate, System};
use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::group::{word_ball, GroupElement};
use crate::rat::{format_rat, rat};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// An element of C(X, Z_{>=0}) at a finite resolution: finitely many
/// nonzero cell weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeElement {
    pub system: System,
    pub resolution: u32,
    pub weights: BTreeMap<u64, u64>,
}

impl TypeElement {
    pub fn new(system: System, resolution: u32, weights: BTreeMap<u64, u64>) -> Result<Self> {
        let n = system.cell_count(resolution)?;
        if let Some((&c, _)) = weights.iter().find(|(&c, _)| c >= n) {
            return Err(Error::invalid(format!("cell {c} out of range")));
        }
        let weights = weights.into_iter().filter(|&(_, w)| w > 0).collect();
        Ok(TypeElement { system, resolution, weights })
    }

    pub fn zero(system: System, resolution: u32) -> Result<Self> {
        TypeElement::new(system, resolution, BTreeMap::new())
    }

    /// The indicator function of a clopen set.
    pub fn indicator(a: &ClopenSet) -> Self {
        TypeElement {
            system: a.system.clone(),
            resolution: a.resolution,
            weights: a.cells.iter().map(|&c| (c, 1)).collect(),
        }
    }

    /// Reconstruct f = sum of indicators from its layer decomposition
    /// A_j = {f >= j}.
    pub fn from_layers(layers: &[ClopenSet]) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("need at least one layer"));
        }
        let mut acc = TypeElement::zero(layers[0].system.clone(), layers[0].resolution)?;
        for l in layers {
            acc = acc.add(&TypeElement::indicator(l))?;
        }
        Ok(acc)
    }

    /// Layer decomposition: clopen sets A_j = {x : f(x) >= j} for
    /// j = 1..max(f); f equals the sum of their indicators.
    pub fn layers(&self) -> Result<Vec<ClopenSet>> {
        let max = self.weights.values().copied().max().unwrap_or(0);
        let mut out = Vec::new();
        for j in 1..=max {
            let cells: Vec<u64> = self
                .weights
                .iter()
                .filter(|&(_, &w)| w >= j)
                .map(|(&c, _)| c)
                .collect();
            out.push(self.system.cells(self.resolution, cells)?);
        }
        Ok(out)
    }

    pub fn refine(&self, r: u32) -> Result<TypeElement> {
        if r < self.resolution {
            return Err(Error::invalid("refine cannot coarsen"));
        }
        if r == self.resolution {
            return Ok(self.clone());
        }
        let mut weights = BTreeMap::new();
        for (&c, &w) in &self.weights {
            for child in self.system.refine_cell(c, self.resolution, r)? {
                weights.insert(child, w);
            }
        }
        Ok(TypeElement { system: self.system.clone(), resolution: r, weights })
    }

    fn aligned(&self, other: &TypeElement) -> Result<(TypeElement, TypeElement)> {
        if self.system != other.system {
            return Err(Error::invalid("type elements live on different systems"));
        }
        let r = self.resolution.max(other.resolution);
        Ok((self.refine(r)?, other.refine(r)?))
    }

    /// Pointwise sum; [f] + [g] = [f + g].
    pub fn add(&self, other: &TypeElement) -> Result<TypeElement> {
        let (mut a, b) = self.aligned(other)?;
        for (c, w) in b.weights {
            *a.weights.entry(c).or_insert(0) += w;
        }
        Ok(a)
    }

    /// Scalar multiple n·f (equals n-fold add).
    pub fn scale(&self, n: u64) -> TypeElement {
        let weights = if n == 0 {
            BTreeMap::new()
        } else {
            self.weights.iter().map(|(&c, &w)| (c, w * n)).collect()
        };
        TypeElement { system: self.system.clone(), resolution: self.resolution, weights }
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.values().sum()
    }

    pub fn equals(&self, other: &TypeElement) -> Result<bool> {
        let (a, b) = self.aligned(other)?;
        Ok(a.weights == b.weights)
    }

    /// Pointwise f <= g.
    pub fn dominated_by(&self, other: &TypeElement) -> Result<bool> {
        let (a, b) = self.aligned(other)?;
        Ok(a.weights
            .iter()
            .all(|(c, &w)| w <= b.weights.get(c).copied().unwrap_or(0)))
    }

    /// Image alpha_s(f): weight w on cell c becomes weight w on sc.
    pub fn act(&self, s: &GroupElement) -> Result<TypeElement> {
        let shift = self.system.act_resolution_shift(s)?;
        let mut weights = BTreeMap::new();
        for (&c, &w) in &self.weights {
            for img in self.system.act_cell(s, c, self.resolution)? {
                weights.insert(img, w);
            }
        }
        Ok(TypeElement {
            system: self.system.clone(),
            resolution: self.resolution + shift,
            weights,
        })
    }

    /// State induced by oracle measure idx: sum of weight * cell mass.
    pub fn state(&self, idx: usize) -> Result<MassEstimate> {
        let mut value = rat(0, 1);
        let mut error = rat(0, 1);
        for (&c, &w) in &self.weights {
            let m = self.system.cell_mass(idx, c, self.resolution)?;
            value += rat(w as i64, 1) * m.value;
            error += rat(w as i64, 1) * m.error;
        }
        Ok(MassEstimate { value, error })
    }
}

/// Witness that f ~ g (or f subequidecomposes into g): functions h_i and
/// translations s_i with sum h_i = f and sum alpha_{s_i}(h_i) = g
/// (resp. <= g pointwise).
#[derive(Debug, Clone)]
pub struct EquidecompWitness {
    pub parts: Vec<(TypeElement, GroupElement)>,
}

impl EquidecompWitness {
    /// Exact witness identities, checked independently of the solver.
    /// Returns (sum h_i, sum alpha_{s_i} h_i).
    pub fn sides(&self, system: &System, resolution: u32) -> Result<(TypeElement, TypeElement)> {
        let mut lhs = TypeElement::zero(system.clone(), resolution)?;
        let mut rhs = TypeElement::zero(system.clone(), resolution)?;
        for (h, s) in &self.parts {
            lhs = lhs.add(h)?;
            rhs = rhs.add(&h.act(s)?)?;
        }
        Ok((lhs, rhs))
    }

    pub fn verifies_equality(&self, f: &TypeElement, g: &TypeElement) -> Result<bool> {
        let (lhs, rhs) = self.sides(&f.system, f.resolution)?;
        Ok(lhs.equals(f)? && rhs.equals(g)?)
    }

    pub fn verifies_subequivalence(&self, f: &TypeElement, g: &TypeElement) -> Result<bool> {
        let (lhs, rhs) = self.sides(&f.system, f.resolution)?;
        Ok(lhs.equals(f)? && rhs.dominated_by(g)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TransportFailure {
    /// an exact oracle state separates [f] from [g]
    SeparatedByState { measure: usize, state_f: String, state_g: String },
    /// budgets exhausted without a transport plan
    BudgetExhausted { radius: u32, max_resolution: u32 },
}

#[derive(Debug, Clone)]
pub enum TransportOutcome {
    Found(EquidecompWitness),
    NotFound(TransportFailure),
}

impl TransportOutcome {
    pub fn witness(&self) -> Option<&EquidecompWitness> {
        match self {
            TransportOutcome::Found(w) => Some(w),
            TransportOutcome::NotFound(_) => None,
        }
    }
}

fn state_gate(f: &TypeElement, g: &TypeElement) -> Result<Option<TransportFailure>> {
    for idx in 0..f.system.measure_count() {
        let sf = f.state(idx)?;
        let sg = g.state(idx)?;
        // only exact states can separate
        if sf.error == rat(0, 1) && sg.error == rat(0, 1) && sf.value != sg.value {
            return Ok(Some(TransportFailure::SeparatedByState {
                measure: idx,
                state_f: format_rat(&sf.value),
                state_g: format_rat(&sg.value),
            }));
        }
    }
    Ok(None)
}

/// Solve the integer transportation problem: supplies f, demands g, arcs
/// labeled by translations from the word ball. `exact_demand` selects
/// equidecomposition (= g) versus subequidecomposition (<= g).
fn transport(
    f: &TypeElement,
    g: &TypeElement,
    radius: u32,
    max_resolution: u32,
    exact_demand: bool,
) -> Result<TransportOutcome> {
    if f.system != g.system {
        return Err(Error::invalid("type elements live on different systems"));
    }
    if !f.system.is_permuting() {
        return Err(Error::unsupported(
            "transportation solving requires a cell-permuting action (odometers and their products)",
        ));
    }
    let start = f.resolution.max(g.resolution);
    let max_resolution = max_resolution.max(start);
    let total_f = f.total_weight();
    let total_g = g.total_weight();
    if exact_demand && total_f != total_g {
        // translations preserve cell counts, so totals are invariant
        return Ok(TransportOutcome::NotFound(TransportFailure::BudgetExhausted {
            radius,
            max_resolution,
        }));
    }
    for res in start..=max_resolution {
        for rad in [radius.min(2), radius] {
            let ball = word_ball(f.system.group(), rad)?;
            let ff = f.refine(res)?;
            let gg = g.refine(res)?;
            let f_cells: Vec<(u64, u64)> = ff.weights.iter().map(|(&c, &w)| (c, w)).collect();
            let g_cells: Vec<(u64, u64)> = gg.weights.iter().map(|(&c, &w)| (c, w)).collect();
            let g_index: BTreeMap<u64, usize> =
                g_cells.iter().enumerate().map(|(i, &(c, _))| (c, i)).collect();
            let mut net = FlowNetwork::new(f_cells.len() + g_cells.len() + 2);
            let source = f_cells.len() + g_cells.len();
            let sink = source + 1;
            for (fi, &(_, w)) in f_cells.iter().enumerate() {
                net.add_edge(source, fi, w);
            }
            let mut arcs = Vec::new();
            for (fi, &(fc, _)) in f_cells.iter().enumerate() {
                let mut targets: BTreeMap<usize, GroupElement> = BTreeMap::new();
                for s in ball.iter() {
                    let img = ff.system.act_cell(s, fc, res)?;
                    debug_assert_eq!(img.len(), 1);
                    if let Some(&gi) = g_index.get(&img[0]) {
                        targets.entry(gi).or_insert_with(|| s.clone());
                    }
                }
                for (gi, s) in targets {
                    let eid = net.add_edge(fi, f_cells.len() + gi, u64::MAX / 4);
                    arcs.push((eid, fi, s));
                }
            }
            for (gi, &(_, w)) in g_cells.iter().enumerate() {
                net.add_edge(f_cells.len() + gi, sink, w);
            }
            let flow = net.max_flow(source, sink);
            let want = if exact_demand { total_f.max(total_g) } else { total_f };
            if flow == want {
                // group shipped mass by translation
                let mut by_s: BTreeMap<GroupElement, BTreeMap<u64, u64>> = BTreeMap::new();
                for (eid, fi, s) in arcs {
                    let shipped = net.flow_on(eid);
                    if shipped > 0 {
                        *by_s.entry(s).or_default().entry(f_cells[fi].0).or_insert(0) += shipped;
                    }
                }
                let mut parts = Vec::new();
                for (s, weights) in by_s {
                    parts.push((TypeElement::new(f.system.clone(), res, weights)?, s));
                }
                return Ok(TransportOutcome::Found(EquidecompWitness { parts }));
            }
            if rad == radius {
                break;
            }
        }
    }
    Ok(TransportOutcome::NotFound(TransportFailure::BudgetExhausted { radius, max_resolution }))
}

/// Search for an equidecomposition witness f ~ g. States gate the search:
/// a separating exact state returns NotFound immediately.
pub fn find_equidecomposition(
    f: &TypeElement,
    g: &TypeElement,
    radius: u32,
    max_resolution: u32,
) -> Result<TransportOutcome> {
    if let Some(sep) = state_gate(f, g)? {
        return Ok(TransportOutcome::NotFound(sep));
    }
    if f.equals(g)? {
        // identity witness h_1 = f, s_1 = e
        return Ok(TransportOutcome::Found(EquidecompWitness {
            parts: vec![(f.clone(), f.system.group().identity())],
        }));
    }
    transport(f, g, radius, max_resolution, true)
}

/// Search for a subequidecomposition of f into g; success certifies
/// [f] <= [g] in the algebraic order.
pub fn leq(
    f: &TypeElement,
    g: &TypeElement,
    radius: u32,
    max_resolution: u32,
) -> Result<TransportOutcome> {
    for idx in 0..f.system.measure_count() {
        let sf = f.state(idx)?;
        let sg = g.state(idx)?;
        if sf.error == rat(0, 1) && sg.error == rat(0, 1) && sf.value > sg.value {
            return Ok(TransportOutcome::NotFound(TransportFailure::SeparatedByState {
                measure: idx,
                state_f: format_rat(&sf.value),
                state_g: format_rat(&sg.value),
            }));
        }
    }
    if f.dominated_by(g)? {
        return Ok(TransportOutcome::Found(EquidecompWitness {
            parts: vec![(f.clone(), f.system.group().identity())],
        }));
    }
    transport(f, g, radius, max_resolution, false)
}

/// Compose subequidecomposition witnesses (f into g, g into k) into a
/// witness of f into k. Requires a cell-permuting action.
pub fn compose_leq(
    w1: &EquidecompWitness,
    w2: &EquidecompWitness,
    system: &System,
) -> Result<EquidecompWitness> {
    if !system.is_permuting() {
        return Err(Error::unsupported("witness composition requires a permuting action"));
    }
    let group = system.group().clone();
    let mut res = 0u32;
    for (h, _) in w1.parts.iter().chain(w2.parts.iter()) {
        res = res.max(h.resolution);
    }
    // arrivals of w1 per cell: (cell, s, weight)
    let mut arrivals: BTreeMap<u64, Vec<(GroupElement, u64)>> = BTreeMap::new();
    for (h, s) in &w1.parts {
        let h = h.refine(res)?;
        for (&c, &w) in &h.weights {
            let img = system.act_cell(s, c, res)?;
            arrivals.entry(img[0]).or_default().push((s.clone(), w));
        }
    }
    // departures of w2 per cell: (t, weight)
    let mut departures: BTreeMap<u64, Vec<(GroupElement, u64)>> = BTreeMap::new();
    for (h, t) in &w2.parts {
        let h = h.refine(res)?;
        for (&c, &w) in &h.weights {
            departures.entry(c).or_default().push((t.clone(), w));
        }
    }
    // match arrived mass to departures cell by cell (arrived <= departing
    // since sum alpha(h) <= g = sum h')
    let mut composed: BTreeMap<GroupElement, BTreeMap<u64, u64>> = BTreeMap::new();
    for (cell, arr) in arrivals {
        let mut dep = departures.remove(&cell).unwrap_or_default();
        let mut di = 0usize;
        for (s, mut w) in arr {
            let sinv = group.inv(&s)?;
            let origin = system.act_cell(&sinv, cell, res)?[0];
            while w > 0 {
                if di >= dep.len() {
                    return Err(Error::invalid(
                        "witness composition: arrived mass exceeds departures",
                    ));
                }
                let take = w.min(dep[di].1);
                let ts = group.mul(&dep[di].0, &s)?;
                *composed.entry(ts).or_default().entry(origin).or_insert(0) += take;
                w -= take;
                dep[di].1 -= take;
                if dep[di].1 == 0 {
                    di += 1;
                }
            }
        }
    }
    let mut parts = Vec::new();
    for (s, weights) in composed {
        parts.push((TypeElement::new(system.clone(), res, weights)?, s));
    }
    Ok(EquidecompWitness { parts })
}

/// Outcome of an almost-unperforation probe: whether (n+1)f <= ng holds at
/// the budgets, and if so whether f <= g could also be certified. An
/// established premise with an exhausted-conclusion budget is INCONCLUSIVE;
/// it is never reported as a perforation counterexample.
#[derive(Debug, Clone)]
pub enum UnperforationProbe {
    PremiseNotEstablished(TransportFailure),
    BothHold { premise: EquidecompWitness, conclusion: EquidecompWitness },
    Inconclusive { premise: EquidecompWitness, conclusion_failure: TransportFailure },
}

impl UnperforationProbe {
    pub fn label(&self) -> &'static str {
        match self {
            UnperforationProbe::PremiseNotEstablished(_) => "PREMISE-NOT-ESTABLISHED",
            UnperforationProbe::BothHold { .. } => "BOTH-HOLD",
            UnperforationProbe::Inconclusive { .. } => "INCONCLUSIVE",
        }
    }
}

/// Probe almost unperforation: try (n+1)f <= ng, then f <= g.
pub fn probe_almost_unperforation(
    f: &TypeElement,
    g: &TypeElement,
    n: u64,
    radius: u32,
    max_resolution: u32,
) -> Result<UnperforationProbe> {
    if n < 1 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let premise = leq(&f.scale(n + 1), &g.scale(n), radius, max_resolution)?;
    let premise = match premise {
        TransportOutcome::Found(w) => w,
        TransportOutcome::NotFound(reason) => {
            return Ok(UnperforationProbe::PremiseNotEstablished(reason))
        }
    };
    match leq(f, g, radius, max_resolution)? {
        TransportOutcome::Found(conclusion) => {
            Ok(UnperforationProbe::BothHold { premise, conclusion })
        }
        TransportOutcome::NotFound(reason) => Ok(UnperforationProbe::Inconclusive {
            premise,
            conclusion_failure: reason,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::CantorSystem;

    fn odo8() -> System {
        CantorSystem::z_odometer(2, 3).unwrap()
    }

    fn elem(sys: &System, cells: &[(u64, u64)]) -> TypeElement {
        TypeElement::new(sys.clone(), 3, cells.iter().copied().collect()).unwrap()
    }

    #[test]
    fn add_examples() {
        let sys = odo8();
        let f = elem(&sys, &[(0, 1), (3, 2)]);
        let zero = TypeElement::zero(sys.clone(), 3).unwrap();
        assert!(f.add(&zero).unwrap().equals(&f).unwrap());
        let a = sys.cells(3, [1, 2]).unwrap();
        let ind = TypeElement::indicator(&a);
        let doubled = ind.add(&ind).unwrap();
        assert!(doubled.equals(&ind.scale(2)).unwrap());
    }

    #[test]
    fn layers_reconstruct() {
        let sys = odo8();
        let a1 = sys.cells(3, [0, 1, 2]).unwrap();
        let a2 = sys.cells(3, [1]).unwrap();
        let f = TypeElement::from_layers(&[a1.clone(), a2.clone()]).unwrap();
        assert_eq!(f.weights.get(&1), Some(&2));
        assert_eq!(f.weights.get(&0), Some(&1));
        let layers = f.layers().unwrap();
        assert_eq!(layers.len(), 2);
        assert!(layers[0].same_set(&a1).unwrap());
        assert!(layers[1].same_set(&a2).unwrap());
    }

    #[test]
    fn state_examples() {
        let sys = odo8();
        let x = TypeElement::indicator(&sys.full_set(3).unwrap());
        assert_eq!(x.state(0).unwrap().value, rat(1, 1));
        let f = elem(&sys, &[(0, 1), (5, 1)]);
        assert_eq!(f.state(0).unwrap().value, rat(1, 4));
        let g = elem(&sys, &[(2, 3)]);
        let sum = f.add(&g).unwrap();
        assert_eq!(
            sum.state(0).unwrap().value,
            f.state(0).unwrap().value + g.state(0).unwrap().value
        );
    }

    #[test]
    fn identity_equidecomposition() {
        let sys = odo8();
        let f = elem(&sys, &[(2, 2)]);
        let out = find_equidecomposition(&f, &f, 4, 3).unwrap();
        let w = out.witness().unwrap();
        assert!(w.verifies_equality(&f, &f).unwrap());
    }

    #[test]
    fn odometer_cells_transport() {
        let sys = odo8();
        let f = elem(&sys, &[(0, 1), (3, 1)]);
        let g = elem(&sys, &[(1, 1), (6, 1)]);
        let out = find_equidecomposition(&f, &g, 8, 3).unwrap();
        let w = out.witness().expect("same totals on one orbit must transport");
        assert!(w.verifies_equality(&f, &g).unwrap());
    }

    #[test]
    fn split_whole_space_onto_doubled_cell() {
        // f = 1_X at depth 1, g = 2 * 1_{[0 mod 2]}
        let sys = CantorSystem::z_odometer(2, 2).unwrap();
        let f = TypeElement::indicator(&sys.full_set(1).unwrap());
        let g = TypeElement::new(sys.clone(), 1, [(0u64, 2u64)].into_iter().collect()).unwrap();
        let out = find_equidecomposition(&f, &g, 4, 2).unwrap();
        let w = out.witness().expect("witness exists");
        assert!(w.verifies_equality(&f, &g).unwrap());
    }

    #[test]
    fn state_gate_separates() {
        let sys = odo8();
        let f = elem(&sys, &[(0, 3)]);
        let g = elem(&sys, &[(1, 1)]);
        match find_equidecomposition(&f, &g, 8, 3).unwrap() {
            TransportOutcome::NotFound(TransportFailure::SeparatedByState { state_f, state_g, .. }) => {
                assert_eq!(state_f, "3/8");
                assert_eq!(state_g, "1/8");
            }
            _ => panic!("states must separate"),
        }
    }

    #[test]
    fn leq_examples() {
        let sys = odo8();
        let f = elem(&sys, &[(0, 1), (4, 1)]);
        // reflexive
        let w = leq(&f, &f, 4, 3).unwrap();
        assert!(w.witness().unwrap().verifies_subequivalence(&f, &f).unwrap());
        // 2 cells into 3 cells
        let g = elem(&sys, &[(1, 1), (2, 1), (7, 1)]);
        let out = leq(&f, &g, 8, 3).unwrap();
        assert!(out.witness().unwrap().verifies_subequivalence(&f, &g).unwrap());
        // gate: mu(f) > mu(g)
        let big = elem(&sys, &[(0, 5)]);
        assert!(matches!(
            leq(&big, &g, 8, 3).unwrap(),
            TransportOutcome::NotFound(TransportFailure::SeparatedByState { .. })
        ));
    }

    #[test]
    fn leq_transitive_via_composition() {
        let sys = odo8();
        let f = elem(&sys, &[(0, 2)]);
        let g = elem(&sys, &[(2, 2), (3, 1)]);
        let k = elem(&sys, &[(5, 2), (6, 2)]);
        let w1 = leq(&f, &g, 8, 3).unwrap().witness().unwrap().clone();
        let w2 = leq(&g, &k, 8, 3).unwrap().witness().unwrap().clone();
        let composed = compose_leq(&w1, &w2, &sys).unwrap();
        assert!(composed.verifies_subequivalence(&f, &k).unwrap());
    }

    #[test]
    fn states_invariant_under_witness() {
        let sys = odo8();
        let f = elem(&sys, &[(0, 1), (3, 1)]);
        let g = elem(&sys, &[(1, 1), (6, 1)]);
        let w = find_equidecomposition(&f, &g, 8, 3).unwrap().witness().unwrap().clone();
        assert!(w.verifies_equality(&f, &g).unwrap());
        assert_eq!(f.state(0).unwrap().value, g.state(0).unwrap().value);
    }

    #[test]
    fn probe_examples() {
        let sys = odo8();
        // premise holds (6 <= 6 cells), conclusion found (2 <= 3)
        let f = elem(&sys, &[(0, 1), (1, 1)]);
        let g = elem(&sys, &[(4, 1), (5, 1), (6, 1)]);
        let probe = probe_almost_unperforation(&f, &g, 2, 8, 3).unwrap();
        assert!(matches!(probe, UnperforationProbe::BothHold { .. }));
        // f = g with f nonzero: the premise (n+1)f <= nf already fails at
        // the state gate, which is the honest non-counterexample outcome
        let probe = probe_almost_unperforation(&f, &f, 2, 8, 3).unwrap();
        assert!(matches!(probe, UnperforationProbe::PremiseNotEstablished(_)));
        // the zero element makes both sides trivial
        let zero = TypeElement::zero(sys.clone(), 3).unwrap();
        let probe = probe_almost_unperforation(&zero, &zero, 2, 8, 3).unwrap();
        assert!(matches!(probe, UnperforationProbe::BothHold { .. }));
        // premise fails at the gate when (n+1) mu(f) > n mu(g)
        let big = elem(&sys, &[(0, 2)]);
        let small = elem(&sys, &[(1, 2)]);
        let probe = probe_almost_unperforation(&big, &small, 2, 8, 3).unwrap();
        assert!(matches!(
            probe,
            UnperforationProbe::PremiseNotEstablished(TransportFailure::SeparatedByState { .. })
        ));
    }
}
