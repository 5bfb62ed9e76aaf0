//! Exact arithmetic and Følner calculus for the built-in finitely generated
//! amenable groups: Z, Z^d, the discrete Heisenberg group H3(Z), the
//! lamplighter group Z/2 wr Z, and quotient ladders (decreasing chains of
//! finite-index normal subgroups) over Z, Z^d and Heisenberg.
//!
//! Elements carry canonical integer coordinates and all set operations are
//! exact; no floats appear anywhere.

use crate::error::{Error, Result};
use crate::rat::{rat, Rat};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// A group element in canonical coordinates.
///
/// * `Z(n)` — the integer n.
/// * `Zd(v)` — an integer vector.
/// * `Heis(a, b, c)` — upper unitriangular coordinates with
///   (a,b,c)(a',b',c') = (a+a', b+b', c+c'+a*b').
/// * `Lamp(lamps, pos)` — lamplighter element: finite set of lit lamps and
///   the lamplighter position; (f,p)(g,q) = (f xor (g shifted by p), p+q).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GroupElement {
    Z(i64),
    Zd(Vec<i64>),
    Heis(i64, i64, i64),
    Lamp(BTreeSet<i64>, i64),
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Z(n) => write!(f, "{n}"),
            GroupElement::Zd(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            GroupElement::Heis(a, b, c) => write!(f, "({a},{b},{c})"),
            GroupElement::Lamp(l, p) => {
                let lamps: Vec<String> = l.iter().map(|x| x.to_string()).collect();
                write!(f, "[{};{}]", lamps.join(","), p)
            }
        }
    }
}

/// Ambient group kinds. `window` bounds lamplighter supports; products whose
/// lamp support or position leaves `[-window, window]` are hard errors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum GroupKind {
    Z,
    Zd { d: u32 },
    Heisenberg,
    Lamplighter { window: i64 },
}

/// A decreasing chain of finite-index normal subgroups with trivial
/// intersection, described by one modulus per depth. Depth k of a `Z`
/// ladder is the subgroup moduli[k-1]·Z; for `Zd` and `Heisenberg` the
/// modulus applies to every coordinate (congruence subgroups).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ladder {
    pub base: GroupKind,
    /// moduli[k-1] = modulus at depth k; each must properly divide the next.
    pub moduli: Vec<u64>,
}

impl Ladder {
    pub fn validate(&self) -> Result<()> {
        match self.base {
            GroupKind::Z | GroupKind::Zd { .. } | GroupKind::Heisenberg => {}
            _ => return Err(Error::unsupported("ladder base must be Z, Zd or Heisenberg")),
        }
        let mut prev = 1u64;
        for &m in &self.moduli {
            if m <= prev || m % prev != 0 {
                return Err(Error::invalid(format!(
                    "ladder moduli must be a strictly increasing divisibility chain, got {m} after {prev}"
                )));
            }
            prev = m;
        }
        Ok(())
    }

    /// Modulus at depth k (depth 0 is the whole group, modulus 1).
    pub fn modulus(&self, depth: usize) -> Result<u64> {
        if depth == 0 {
            return Ok(1);
        }
        self.moduli
            .get(depth - 1)
            .copied()
            .ok_or_else(|| Error::unsupported(format!("ladder not defined to depth {depth}")))
    }

    pub fn max_depth(&self) -> usize {
        self.moduli.len()
    }
}

/// Group descriptor: the group kind, its symmetric generating set, and an
/// optional quotient ladder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupDescriptor {
    #[serde(flatten)]
    pub kind: GroupKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Ladder>,
}

impl GroupDescriptor {
    pub fn z() -> Self {
        GroupDescriptor { kind: GroupKind::Z, ladder: None }
    }

    pub fn zd(d: u32) -> Self {
        GroupDescriptor { kind: GroupKind::Zd { d }, ladder: None }
    }

    pub fn heisenberg() -> Self {
        GroupDescriptor { kind: GroupKind::Heisenberg, ladder: None }
    }

    pub fn lamplighter(window: i64) -> Self {
        GroupDescriptor { kind: GroupKind::Lamplighter { window }, ladder: None }
    }

    /// Z with the ladder m, m^2, ..., m^depth.
    pub fn z_ladder(m: u64, depth: usize) -> Self {
        let moduli = (1..=depth as u32).map(|k| m.pow(k)).collect();
        GroupDescriptor {
            kind: GroupKind::Z,
            ladder: Some(Ladder { base: GroupKind::Z, moduli }),
        }
    }

    /// Z^d with the ladder (m^k Z)^d.
    pub fn zd_ladder(d: u32, m: u64, depth: usize) -> Self {
        let moduli = (1..=depth as u32).map(|k| m.pow(k)).collect();
        GroupDescriptor {
            kind: GroupKind::Zd { d },
            ladder: Some(Ladder { base: GroupKind::Zd { d }, moduli }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let GroupKind::Zd { d } = self.kind {
            if d == 0 {
                return Err(Error::invalid("Zd requires d >= 1"));
            }
        }
        if let Some(l) = &self.ladder {
            l.validate()?;
            if l.base != self.kind {
                return Err(Error::invalid("ladder base must match the group kind"));
            }
        }
        Ok(())
    }

    pub fn identity(&self) -> GroupElement {
        match &self.kind {
            GroupKind::Z => GroupElement::Z(0),
            GroupKind::Zd { d } => GroupElement::Zd(vec![0; *d as usize]),
            GroupKind::Heisenberg => GroupElement::Heis(0, 0, 0),
            GroupKind::Lamplighter { .. } => GroupElement::Lamp(BTreeSet::new(), 0),
        }
    }

    /// The built-in symmetric generating set.
    pub fn generators(&self) -> Vec<GroupElement> {
        match &self.kind {
            GroupKind::Z => vec![GroupElement::Z(-1), GroupElement::Z(1)],
            GroupKind::Zd { d } => {
                let d = *d as usize;
                let mut gens = Vec::with_capacity(2 * d);
                for i in 0..d {
                    for sign in [-1i64, 1] {
                        let mut v = vec![0i64; d];
                        v[i] = sign;
                        gens.push(GroupElement::Zd(v));
                    }
                }
                gens
            }
            GroupKind::Heisenberg => vec![
                GroupElement::Heis(-1, 0, 0),
                GroupElement::Heis(1, 0, 0),
                GroupElement::Heis(0, -1, 0),
                GroupElement::Heis(0, 1, 0),
            ],
            GroupKind::Lamplighter { .. } => {
                let mut lamp = BTreeSet::new();
                lamp.insert(0);
                vec![
                    GroupElement::Lamp(lamp, 0),
                    GroupElement::Lamp(BTreeSet::new(), -1),
                    GroupElement::Lamp(BTreeSet::new(), 1),
                ]
            }
        }
    }

    /// Group multiplication a·b in canonical form.
    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        match (&self.kind, a, b) {
            (GroupKind::Z, GroupElement::Z(x), GroupElement::Z(y)) => Ok(GroupElement::Z(x + y)),
            (GroupKind::Zd { d }, GroupElement::Zd(x), GroupElement::Zd(y)) => {
                if x.len() != *d as usize || y.len() != *d as usize {
                    return Err(Error::invalid("Zd element dimension mismatch"));
                }
                Ok(GroupElement::Zd(x.iter().zip(y).map(|(p, q)| p + q).collect()))
            }
            (GroupKind::Heisenberg, GroupElement::Heis(a1, b1, c1), GroupElement::Heis(a2, b2, c2)) => {
                Ok(GroupElement::Heis(a1 + a2, b1 + b2, c1 + c2 + a1 * b2))
            }
            (GroupKind::Lamplighter { window }, GroupElement::Lamp(f, p), GroupElement::Lamp(g, q)) => {
                let mut lamps = f.clone();
                for &i in g {
                    let shifted = i + p;
                    if !lamps.insert(shifted) {
                        lamps.remove(&shifted);
                    }
                }
                let pos = p + q;
                let w = *window;
                if pos.abs() > w || lamps.iter().any(|&i| i.abs() > w) {
                    return Err(Error::ResourceExhausted(format!(
                        "lamplighter product leaves the support window [-{w}, {w}]"
                    )));
                }
                Ok(GroupElement::Lamp(lamps, pos))
            }
            _ => Err(Error::invalid("group element kind does not match descriptor")),
        }
    }

    pub fn inv(&self, a: &GroupElement) -> Result<GroupElement> {
        match (&self.kind, a) {
            (GroupKind::Z, GroupElement::Z(x)) => Ok(GroupElement::Z(-x)),
            (GroupKind::Zd { .. }, GroupElement::Zd(x)) => {
                Ok(GroupElement::Zd(x.iter().map(|p| -p).collect()))
            }
            (GroupKind::Heisenberg, GroupElement::Heis(a, b, c)) => {
                Ok(GroupElement::Heis(-a, -b, -c + a * b))
            }
            (GroupKind::Lamplighter { .. }, GroupElement::Lamp(f, p)) => {
                let lamps = f.iter().map(|&i| i - p).collect();
                Ok(GroupElement::Lamp(lamps, -p))
            }
            _ => Err(Error::invalid("group element kind does not match descriptor")),
        }
    }
}

/// A finite subset of the group: sorted, duplicate-free element list.
/// Serializes as a plain array.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct FiniteGroupSet {
    elements: Vec<GroupElement>,
}

impl<'de> serde::Deserialize<'de> for FiniteGroupSet {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<GroupElement>::deserialize(de)?;
        Ok(FiniteGroupSet::new(v))
    }
}

impl FiniteGroupSet {
    pub fn new(mut elements: Vec<GroupElement>) -> Self {
        elements.sort();
        elements.dedup();
        FiniteGroupSet { elements }
    }

    pub fn empty() -> Self {
        FiniteGroupSet { elements: Vec::new() }
    }

    pub fn singleton(g: GroupElement) -> Self {
        FiniteGroupSet { elements: vec![g] }
    }

    /// The integer interval {lo, ..., hi} in Z.
    pub fn z_interval(lo: i64, hi: i64) -> Self {
        FiniteGroupSet::new((lo..=hi).map(GroupElement::Z).collect())
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.elements.binary_search(g).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroupElement> {
        self.elements.iter()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn union(&self, other: &FiniteGroupSet) -> FiniteGroupSet {
        let mut v = self.elements.clone();
        v.extend(other.elements.iter().cloned());
        FiniteGroupSet::new(v)
    }

    pub fn intersection(&self, other: &FiniteGroupSet) -> FiniteGroupSet {
        let v = self
            .elements
            .iter()
            .filter(|g| other.contains(g))
            .cloned()
            .collect();
        FiniteGroupSet { elements: v }
    }

    pub fn difference(&self, other: &FiniteGroupSet) -> FiniteGroupSet {
        let v = self
            .elements
            .iter()
            .filter(|g| !other.contains(g))
            .cloned()
            .collect();
        FiniteGroupSet { elements: v }
    }

    pub fn symmetric_difference(&self, other: &FiniteGroupSet) -> FiniteGroupSet {
        self.difference(other).union(&other.difference(self))
    }

    pub fn is_disjoint(&self, other: &FiniteGroupSet) -> bool {
        let (small, big) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        !small.elements.iter().any(|g| big.contains(g))
    }

    pub fn is_subset(&self, other: &FiniteGroupSet) -> bool {
        self.elements.iter().all(|g| other.contains(g))
    }

    /// Left translate t·F.
    pub fn translate(&self, group: &GroupDescriptor, t: &GroupElement) -> Result<FiniteGroupSet> {
        let mut v = Vec::with_capacity(self.len());
        for g in &self.elements {
            v.push(group.mul(t, g)?);
        }
        Ok(FiniteGroupSet::new(v))
    }

    /// Right translate F·t.
    pub fn translate_right(&self, group: &GroupDescriptor, t: &GroupElement) -> Result<FiniteGroupSet> {
        let mut v = Vec::with_capacity(self.len());
        for g in &self.elements {
            v.push(group.mul(g, t)?);
        }
        Ok(FiniteGroupSet::new(v))
    }

    pub fn inverses(&self, group: &GroupDescriptor) -> Result<FiniteGroupSet> {
        let mut v = Vec::with_capacity(self.len());
        for g in &self.elements {
            v.push(group.inv(g)?);
        }
        Ok(FiniteGroupSet::new(v))
    }

    pub fn is_symmetric(&self, group: &GroupDescriptor) -> Result<bool> {
        Ok(self.inverses(group)? == *self)
    }

    /// Product set A·B.
    pub fn product(&self, group: &GroupDescriptor, other: &FiniteGroupSet) -> Result<FiniteGroupSet> {
        let mut v = Vec::with_capacity(self.len() * other.len());
        for a in &self.elements {
            for b in &other.elements {
                v.push(group.mul(a, b)?);
            }
        }
        Ok(FiniteGroupSet::new(v))
    }
}

impl FromIterator<GroupElement> for FiniteGroupSet {
    fn from_iter<I: IntoIterator<Item = GroupElement>>(iter: I) -> Self {
        FiniteGroupSet::new(iter.into_iter().collect())
    }
}

/// Default cap on enumerated set sizes, overridable via TOWERLAB_CELL_CAP.
pub fn size_cap() -> usize {
    std::env::var("TOWERLAB_CELL_CAP")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1_000_000)
}

/// Word ball of radius r with respect to the built-in symmetric generators.
/// Contains the identity and is symmetric.
pub fn word_ball(group: &GroupDescriptor, r: u32) -> Result<FiniteGroupSet> {
    let cap = size_cap();
    let gens = group.generators();
    let mut seen: BTreeSet<GroupElement> = BTreeSet::new();
    seen.insert(group.identity());
    let mut frontier: Vec<GroupElement> = vec![group.identity()];
    for _ in 0..r {
        let mut next = Vec::new();
        for g in &frontier {
            for s in &gens {
                let h = group.mul(s, g)?;
                if seen.insert(h.clone()) {
                    if seen.len() > cap {
                        return Err(Error::ResourceExhausted(format!(
                            "word ball exceeds cap {cap}"
                        )));
                    }
                    next.push(h);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(FiniteGroupSet::new(seen.into_iter().collect()))
}

/// The Følner defect max_{t in K} |tF Δ F| / |F|, as an exact rational.
/// F is (K, δ)-invariant iff the defect is strictly below δ.
pub fn folner_defect(
    group: &GroupDescriptor,
    f: &FiniteGroupSet,
    k: &FiniteGroupSet,
) -> Result<Rat> {
    if f.is_empty() {
        return Err(Error::invalid("Følner defect of the empty set is undefined"));
    }
    let mut worst = 0usize;
    for t in k.iter() {
        let tf = f.translate(group, t)?;
        let d = tf.symmetric_difference(f).len();
        worst = worst.max(d);
    }
    Ok(rat(worst as i64, f.len() as i64))
}

pub fn is_invariant(
    group: &GroupDescriptor,
    f: &FiniteGroupSet,
    k: &FiniteGroupSet,
    delta: Rat,
) -> Result<bool> {
    Ok(folner_defect(group, f, k)? < delta)
}

/// Boundary of E with respect to the tile T: the set of g whose translate
/// Tg meets both E and its complement. For T = {e} the boundary is empty.
pub fn t_boundary(
    group: &GroupDescriptor,
    tile: &FiniteGroupSet,
    e: &FiniteGroupSet,
) -> Result<FiniteGroupSet> {
    if !tile.contains(&group.identity()) {
        return Err(Error::invalid("tile must contain the identity"));
    }
    // Tg meets E iff g lies in t^{-1}E for some t in T; enumerate those
    // candidates, then test the straddling condition.
    let mut candidates: BTreeSet<GroupElement> = BTreeSet::new();
    for t in tile.iter() {
        let tinv = group.inv(t)?;
        for x in e.iter() {
            candidates.insert(group.mul(&tinv, x)?);
        }
    }
    let mut out = Vec::new();
    for g in candidates {
        let tg = FiniteGroupSet::singleton(g.clone()).translates_from(group, tile)?;
        let hits = tg.iter().filter(|x| e.contains(x)).count();
        if hits > 0 && hits < tg.len() {
            out.push(g);
        }
    }
    Ok(FiniteGroupSet::new(out))
}

impl FiniteGroupSet {
    // T·g for a singleton {g}; helper for t_boundary.
    fn translates_from(&self, group: &GroupDescriptor, tile: &FiniteGroupSet) -> Result<FiniteGroupSet> {
        let g = &self.elements[0];
        let mut v = Vec::with_capacity(tile.len());
        for t in tile.iter() {
            v.push(group.mul(t, g)?);
        }
        Ok(FiniteGroupSet::new(v))
    }
}

/// Følner layering of S with respect to a symmetric F containing e:
/// with C_k = ∩_{t in F^k} tS, the layers are B_n = C_n,
/// B_k = C_k \ C_{k+1} for 0 < k < n, and B_0 = S \ C_1.
///
/// The layers partition S. For every s in F and k >= 1,
/// sB_k ⊆ B_{k-1} ∪ B_k ∪ B_{k+1} (with B_{n+1} empty), and
/// sB_0 ∩ S ⊆ B_0 ∪ B_1; elements of B_0 may leave S.
pub fn folner_layering(
    group: &GroupDescriptor,
    s: &FiniteGroupSet,
    f: &FiniteGroupSet,
    n: u32,
) -> Result<Vec<FiniteGroupSet>> {
    if n == 0 {
        return Err(Error::invalid("layering depth n must be positive"));
    }
    if !f.contains(&group.identity()) {
        return Err(Error::invalid("F must contain the identity"));
    }
    if !f.is_symmetric(group)? {
        return Err(Error::invalid("F must be symmetric"));
    }
    // C_{k+1} = ∩_{t in F} t·C_k, starting from C_0 = S.
    let mut chain = Vec::with_capacity(n as usize + 1);
    chain.push(s.clone());
    for _ in 0..n {
        let prev = chain.last().unwrap();
        let mut inter: Option<FiniteGroupSet> = None;
        for t in f.iter() {
            let ts = prev.translate(group, t)?;
            inter = Some(match inter {
                None => ts,
                Some(acc) => acc.intersection(&ts),
            });
        }
        let mut next = inter.unwrap_or_else(FiniteGroupSet::empty);
        next = next.intersection(s);
        chain.push(next);
    }
    let mut layers = Vec::with_capacity(n as usize + 1);
    for k in 0..n as usize {
        layers.push(chain[k].difference(&chain[k + 1]));
    }
    layers.push(chain[n as usize].clone());
    Ok(layers)
}

/// Check the layering contract; returns the first violated inclusion if any.
pub fn check_layering(
    group: &GroupDescriptor,
    s: &FiniteGroupSet,
    f: &FiniteGroupSet,
    layers: &[FiniteGroupSet],
) -> Result<Option<String>> {
    let n = layers.len() - 1;
    // partition of S
    let mut union = FiniteGroupSet::empty();
    let mut total = 0;
    for b in layers {
        total += b.len();
        union = union.union(b);
    }
    if union != *s || total != s.len() {
        return Ok(Some("layers do not partition S".into()));
    }
    for (k, b) in layers.iter().enumerate() {
        for t in f.iter() {
            let tb = b.translate(group, t)?;
            let tb = if k == 0 { tb.intersection(s) } else { tb };
            for g in tb.iter() {
                let lo = k.saturating_sub(1);
                let hi = (k + 1).min(n);
                let ok = layers[lo..=hi].iter().any(|b| b.contains(g));
                if !ok {
                    return Ok(Some(format!("shift of layer {k} by {t} escapes layers {}..={}",
                        k.saturating_sub(1), (k + 1).min(n))));
                }
            }
        }
    }
    Ok(None)
}

fn minimal_z_interval(group: &GroupDescriptor, k: &FiniteGroupSet, delta: Rat) -> Result<FiniteGroupSet> {
    for len in 1..=(size_cap() as i64) {
        let f = FiniteGroupSet::z_interval(0, len - 1);
        if folner_defect(group, &f, k)? < delta {
            return Ok(f);
        }
    }
    Err(Error::ResourceExhausted("no interval within cap reaches the requested invariance".into()))
}

fn zd_box(d: usize, len: i64) -> FiniteGroupSet {
    let mut v = vec![vec![0i64; d]];
    for i in 0..d {
        let mut next = Vec::with_capacity(v.len() * len as usize);
        for base in &v {
            for x in 0..len {
                let mut b = base.clone();
                b[i] = x;
                next.push(b);
            }
        }
        v = next;
    }
    FiniteGroupSet::new(v.into_iter().map(GroupElement::Zd).collect())
}

/// Produce a (K, δ)-invariant finite set for the given group:
/// minimal intervals for Z, minimal boxes for Z^d, box-times-box sets in
/// Heisenberg coordinates, inverted boxes for the lamplighter, and ladder
/// transversals when a ladder is present.
pub fn folner_sequence(
    group: &GroupDescriptor,
    k: &FiniteGroupSet,
    delta: Rat,
) -> Result<FiniteGroupSet> {
    if delta <= rat(0, 1) {
        return Err(Error::invalid("delta must be positive"));
    }
    if let Some(ladder) = &group.ladder {
        // transversals F_depth are Følner along the ladder; pick the first
        // that clears the gate.
        for depth in 0..=ladder.max_depth() {
            let f = ladder_transversal(group, depth)?;
            if folner_defect(group, &f, k)? < delta {
                return Ok(f);
            }
        }
        return Err(Error::ResourceExhausted(
            "no ladder transversal reaches the requested invariance; extend the ladder".into(),
        ));
    }
    match group.kind {
        GroupKind::Z => minimal_z_interval(group, k, delta),
        GroupKind::Zd { d } => {
            let cap = size_cap();
            let mut len = 1i64;
            loop {
                let f = zd_box(d as usize, len);
                if f.len() > cap {
                    return Err(Error::ResourceExhausted("Zd box exceeds cap".into()));
                }
                if folner_defect(group, &f, k)? < delta {
                    return Ok(f);
                }
                len += 1;
            }
        }
        GroupKind::Heisenberg => {
            let cap = size_cap();
            let mut len = 1i64;
            loop {
                let mut v = Vec::new();
                for a in 0..len {
                    for b in 0..len {
                        for c in 0..len * len {
                            v.push(GroupElement::Heis(a, b, c));
                        }
                    }
                }
                if v.len() > cap {
                    return Err(Error::ResourceExhausted("Heisenberg box exceeds cap".into()));
                }
                let f = FiniteGroupSet::new(v);
                if folner_defect(group, &f, k)? < delta {
                    return Ok(f);
                }
                len += 1;
            }
        }
        GroupKind::Lamplighter { window } => {
            // Inverted boxes {(f, q) : q in (-n, 0], supp f ⊆ [q, q+n)} are
            // left Følner; plain boxes are only right Følner.
            let cap = size_cap();
            let mut n = 1i64;
            loop {
                if n > window {
                    return Err(Error::ResourceExhausted(
                        "lamplighter Følner set exceeds the support window".into(),
                    ));
                }
                let mut v = Vec::new();
                for q in (-n + 1)..=0 {
                    let positions: Vec<i64> = (q..q + n).collect();
                    for mask in 0u64..(1u64 << positions.len()) {
                        let lamps: BTreeSet<i64> = positions
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| mask >> i & 1 == 1)
                            .map(|(_, &p)| p)
                            .collect();
                        v.push(GroupElement::Lamp(lamps, q));
                    }
                }
                if v.len() > cap {
                    return Err(Error::ResourceExhausted("lamplighter set exceeds cap".into()));
                }
                let f = FiniteGroupSet::new(v);
                if folner_defect(group, &f, k)? < delta {
                    return Ok(f);
                }
                n += 1;
            }
        }
    }
}

/// Canonical transversal (complete set of coset representatives) for the
/// ladder subgroup at the given depth: intervals for Z, boxes for Z^d,
/// coordinate cubes for Heisenberg. The Z and Z^d transversals form Følner
/// sequences; the Heisenberg cubes are complete representative sets but
/// keep a translation defect bounded away from zero, so invariance gates
/// will reject them.
pub fn ladder_transversal(group: &GroupDescriptor, depth: usize) -> Result<FiniteGroupSet> {
    let ladder = group
        .ladder
        .as_ref()
        .ok_or_else(|| Error::unsupported("group has no ladder"))?;
    let m = ladder.modulus(depth)? as i64;
    match ladder.base {
        GroupKind::Z => Ok(FiniteGroupSet::z_interval(0, m - 1)),
        GroupKind::Zd { d } => Ok(zd_box(d as usize, m)),
        GroupKind::Heisenberg => {
            let mut v = Vec::new();
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        v.push(GroupElement::Heis(a, b, c));
                    }
                }
            }
            Ok(FiniteGroupSet::new(v))
        }
        _ => Err(Error::unsupported("ladder base not supported")),
    }
}

/// Whether g lies in the ladder subgroup at the given depth.
pub fn in_ladder_subgroup(group: &GroupDescriptor, g: &GroupElement, depth: usize) -> Result<bool> {
    let ladder = group
        .ladder
        .as_ref()
        .ok_or_else(|| Error::unsupported("group has no ladder"))?;
    let m = ladder.modulus(depth)? as i64;
    Ok(match g {
        GroupElement::Z(x) => x.rem_euclid(m) == 0,
        GroupElement::Zd(v) => v.iter().all(|x| x.rem_euclid(m) == 0),
        GroupElement::Heis(a, b, c) => {
            a.rem_euclid(m) == 0 && b.rem_euclid(m) == 0 && c.rem_euclid(m) == 0
        }
        GroupElement::Lamp(..) => return Err(Error::unsupported("no lamplighter ladder")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn z() -> GroupDescriptor {
        GroupDescriptor::z()
    }

    #[test]
    fn word_ball_z() {
        let b0 = word_ball(&z(), 0).unwrap();
        assert_eq!(b0, FiniteGroupSet::singleton(GroupElement::Z(0)));
        let b3 = word_ball(&z(), 3).unwrap();
        assert_eq!(b3, FiniteGroupSet::z_interval(-3, 3));
        assert_eq!(b3.len(), 7);
    }

    #[test]
    fn word_ball_z2_diamond() {
        let g = GroupDescriptor::zd(2);
        let b = word_ball(&g, 2).unwrap();
        // |{v : |v1|+|v2| <= r}| = 2r^2 + 2r + 1
        assert_eq!(b.len(), 13);
        assert!(b.contains(&g.identity()));
        assert!(b.is_symmetric(&g).unwrap());
    }

    #[test]
    fn folner_defect_interval() {
        let f = FiniteGroupSet::z_interval(0, 31);
        let k = FiniteGroupSet::singleton(GroupElement::Z(1));
        assert_eq!(folner_defect(&z(), &f, &k).unwrap(), rat(2, 32));
        assert_eq!(folner_defect(&z(), &f, &k).unwrap(), rat(1, 16));
    }

    #[test]
    fn folner_defect_identity_translate_is_zero() {
        let k = FiniteGroupSet::singleton(GroupElement::Z(0));
        for hi in [0, 3, 17] {
            let f = FiniteGroupSet::z_interval(-2, hi);
            assert_eq!(folner_defect(&z(), &f, &k).unwrap(), rat(0, 1));
        }
    }

    #[test]
    fn folner_defect_empty_errors() {
        let k = FiniteGroupSet::singleton(GroupElement::Z(1));
        assert!(folner_defect(&z(), &FiniteGroupSet::empty(), &k).is_err());
    }

    #[test]
    fn smallest_invariant_interval() {
        // smallest {0,...,L-1} with 2/L < 1/10 is L = 21
        let k = FiniteGroupSet::singleton(GroupElement::Z(1));
        let f = folner_sequence(&z(), &k, rat(1, 10)).unwrap();
        assert_eq!(f, FiniteGroupSet::z_interval(0, 20));
        // one shorter fails: 2/20 = 1/10 is not strictly below
        let f20 = FiniteGroupSet::z_interval(0, 19);
        assert!(!is_invariant(&z(), &f20, &k, rat(1, 10)).unwrap());
    }

    #[test]
    fn folner_sequence_z2_box() {
        let g = GroupDescriptor::zd(2);
        let k = FiniteGroupSet::new(g.generators());
        let f = folner_sequence(&g, &k, rat(1, 20)).unwrap();
        // defect of an L-box under a unit generator is 2L/L^2 = 2/L; minimal
        // L with 2/L < 1/20 is 41.
        assert_eq!(f.len(), 41 * 41);
        assert_eq!(folner_defect(&g, &f, &k).unwrap(), rat(2, 41));
    }

    #[test]
    fn folner_sequence_ladder() {
        let g = GroupDescriptor::z_ladder(2, 5);
        let k = FiniteGroupSet::singleton(GroupElement::Z(1));
        let f = folner_sequence(&g, &k, rat(1, 10)).unwrap();
        assert_eq!(f, FiniteGroupSet::z_interval(0, 31));
    }

    #[test]
    fn t_boundary_examples() {
        let e = FiniteGroupSet::z_interval(0, 9);
        let t1 = FiniteGroupSet::singleton(GroupElement::Z(0));
        assert!(t_boundary(&z(), &t1, &e).unwrap().is_empty());

        let t2 = FiniteGroupSet::z_interval(0, 1);
        let b = t_boundary(&z(), &t2, &e).unwrap();
        assert_eq!(
            b,
            FiniteGroupSet::new(vec![GroupElement::Z(-1), GroupElement::Z(9)])
        );

        let t5 = FiniteGroupSet::z_interval(0, 4);
        let e100 = FiniteGroupSet::z_interval(0, 99);
        let b = t_boundary(&z(), &t5, &e100).unwrap();
        let expected = FiniteGroupSet::z_interval(-4, -1).union(&FiniteGroupSet::z_interval(96, 99));
        assert_eq!(b, expected);
        assert_eq!(b.len(), 8);
    }

    #[test]
    fn t_boundary_misses_interior() {
        let e = FiniteGroupSet::z_interval(0, 99);
        let t = FiniteGroupSet::z_interval(0, 4);
        let b = t_boundary(&z(), &t, &e).unwrap();
        for g in FiniteGroupSet::z_interval(0, 95).iter() {
            // Tg ⊆ E here, so g must not be reported
            assert!(!b.contains(g));
        }
    }

    #[test]
    fn layering_small_example() {
        let s = FiniteGroupSet::z_interval(0, 9);
        let f = FiniteGroupSet::z_interval(-1, 1);
        let layers = folner_layering(&z(), &s, &f, 2).unwrap();
        assert_eq!(layers[2], FiniteGroupSet::z_interval(2, 7));
        assert_eq!(
            layers[1],
            FiniteGroupSet::new(vec![GroupElement::Z(1), GroupElement::Z(8)])
        );
        assert_eq!(
            layers[0],
            FiniteGroupSet::new(vec![GroupElement::Z(0), GroupElement::Z(9)])
        );
        assert!(check_layering(&z(), &s, &f, &layers).unwrap().is_none());
    }

    #[test]
    fn layering_trivial_f() {
        let s = FiniteGroupSet::z_interval(3, 12);
        let f = FiniteGroupSet::singleton(GroupElement::Z(0));
        let layers = folner_layering(&z(), &s, &f, 4).unwrap();
        assert_eq!(layers[4], s);
        for b in &layers[0..4] {
            assert!(b.is_empty());
        }
    }

    #[test]
    fn layering_long_interval_top_layer() {
        let s = FiniteGroupSet::z_interval(0, 999);
        let f = FiniteGroupSet::z_interval(-1, 1);
        let layers = folner_layering(&z(), &s, &f, 10).unwrap();
        assert_eq!(layers[10].len(), 980);
        assert!(check_layering(&z(), &s, &f, &layers).unwrap().is_none());
    }

    #[test]
    fn layering_rejects_bad_f() {
        let s = FiniteGroupSet::z_interval(0, 9);
        let not_symmetric = FiniteGroupSet::new(vec![GroupElement::Z(0), GroupElement::Z(1)]);
        assert!(folner_layering(&z(), &s, &not_symmetric, 2).is_err());
        let no_identity = FiniteGroupSet::new(vec![GroupElement::Z(-1), GroupElement::Z(1)]);
        assert!(folner_layering(&z(), &s, &no_identity, 2).is_err());
    }

    fn random_element(g: &GroupDescriptor, rng: &mut StdRng) -> GroupElement {
        match g.kind {
            GroupKind::Z => GroupElement::Z(rng.gen_range(-50..=50)),
            GroupKind::Zd { d } => {
                GroupElement::Zd((0..d).map(|_| rng.gen_range(-20..=20)).collect())
            }
            GroupKind::Heisenberg => GroupElement::Heis(
                rng.gen_range(-8..=8),
                rng.gen_range(-8..=8),
                rng.gen_range(-8..=8),
            ),
            GroupKind::Lamplighter { .. } => {
                let mut lamps = BTreeSet::new();
                for _ in 0..rng.gen_range(0..4) {
                    lamps.insert(rng.gen_range(-6..=6));
                }
                GroupElement::Lamp(lamps, rng.gen_range(-6..=6))
            }
        }
    }

    #[test]
    fn group_axioms_random_triples() {
        let groups = [
            GroupDescriptor::z(),
            GroupDescriptor::zd(3),
            GroupDescriptor::heisenberg(),
            GroupDescriptor::lamplighter(64),
        ];
        let mut rng = StdRng::seed_from_u64(7);
        for g in &groups {
            let e = g.identity();
            for _ in 0..10_000 {
                let a = random_element(g, &mut rng);
                let b = random_element(g, &mut rng);
                let c = random_element(g, &mut rng);
                let ab_c = g.mul(&g.mul(&a, &b).unwrap(), &c).unwrap();
                let a_bc = g.mul(&a, &g.mul(&b, &c).unwrap()).unwrap();
                assert_eq!(ab_c, a_bc, "associativity in {:?}", g.kind);
                assert_eq!(g.mul(&e, &a).unwrap(), a);
                assert_eq!(g.mul(&a, &e).unwrap(), a);
                let ainv = g.inv(&a).unwrap();
                assert_eq!(g.mul(&a, &ainv).unwrap(), e);
                assert_eq!(g.mul(&ainv, &a).unwrap(), e);
            }
        }
    }

    #[test]
    fn lamplighter_window_is_hard_error() {
        let g = GroupDescriptor::lamplighter(4);
        let far = GroupElement::Lamp(BTreeSet::new(), 4);
        let step = GroupElement::Lamp(BTreeSet::new(), 1);
        assert!(g.mul(&far, &step).is_err());
    }

    #[test]
    fn heisenberg_folner_box() {
        let g = GroupDescriptor::heisenberg();
        let k = FiniteGroupSet::new(g.generators());
        let f = folner_sequence(&g, &k, rat(1, 2)).unwrap();
        assert!(folner_defect(&g, &f, &k).unwrap() < rat(1, 2));
    }

    #[test]
    fn lamplighter_folner_inverted_box() {
        let g = GroupDescriptor::lamplighter(64);
        let k = FiniteGroupSet::new(g.generators());
        let f = folner_sequence(&g, &k, rat(1, 2)).unwrap();
        assert!(folner_defect(&g, &f, &k).unwrap() < rat(1, 2));
    }

    #[test]
    fn descriptor_json_round_trip() {
        let g = GroupDescriptor::zd(2);
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"kind":"Zd","d":2}"#);
        let back: GroupDescriptor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }
}
