//! Concrete Cantor dynamical systems with exact clopen-set algebra at
//! finite resolution.
//!
//! Cells at resolution r are indexed 0..cell_count(r):
//! * odometers — cosets of the depth-r ladder subgroup,
//! * substitution subshifts — admissible words over the centered window
//!   [-r, r], indexed in sorted order,
//! * products — tuples of factor cells in mixed radix.
//!
//! The group acts exactly on clopen sets. Odometer and product-of-odometer
//! actions permute same-resolution cells; the shift action on a subshift
//! re-windows, so its image lands at resolution r + |s|.

pub mod subshift;

use crate::error::{Error, Result};
use crate::group::{size_cap, GroupDescriptor, GroupElement, GroupKind};
use crate::rat::{rat, Rat};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::sync::Arc;
use subshift::{Subshift, SubstitutionRules};

fn default_freq_len() -> usize {
    1 << 20
}

/// Serializable system description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SystemSpec {
    ProfiniteOdometer {
        group: GroupDescriptor,
    },
    SubstitutionSubshift {
        rules: SubstitutionRules,
        #[serde(default = "default_freq_len")]
        freq_len: usize,
    },
    Product {
        factors: Vec<SystemSpec>,
    },
}

#[derive(Debug)]
enum SystemKind {
    Odometer,
    Subshift(Subshift),
    Product(Vec<Arc<CantorSystem>>),
}

/// A Cantor system handle: the acting group plus the cell machinery.
/// Immutable after construction (internal caches are synchronized).
#[derive(Debug)]
pub struct CantorSystem {
    spec: SystemSpec,
    group: GroupDescriptor,
    kind: SystemKind,
}

impl PartialEq for CantorSystem {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

pub type System = Arc<CantorSystem>;

impl CantorSystem {
    pub fn build(spec: SystemSpec) -> Result<System> {
        let sys = Self::build_inner(&spec)?;
        Ok(sys)
    }

    fn build_inner(spec: &SystemSpec) -> Result<System> {
        match spec {
            SystemSpec::ProfiniteOdometer { group } => {
                group.validate()?;
                if group.ladder.is_none() {
                    return Err(Error::invalid("odometer requires a group with a ladder"));
                }
                Ok(Arc::new(CantorSystem {
                    spec: spec.clone(),
                    group: group.clone(),
                    kind: SystemKind::Odometer,
                }))
            }
            SystemSpec::SubstitutionSubshift { rules, freq_len } => {
                let sub = Subshift::new(rules, *freq_len)?;
                Ok(Arc::new(CantorSystem {
                    spec: spec.clone(),
                    group: GroupDescriptor::z(),
                    kind: SystemKind::Subshift(sub),
                }))
            }
            SystemSpec::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::invalid("product needs at least one factor"));
                }
                let built: Vec<System> = factors
                    .iter()
                    .map(Self::build_inner)
                    .collect::<Result<_>>()?;
                let kind0 = built[0].group.kind.clone();
                if built.iter().any(|f| f.group.kind != kind0) {
                    return Err(Error::unsupported(
                        "product factors must share the acting group (diagonal action)",
                    ));
                }
                Ok(Arc::new(CantorSystem {
                    spec: spec.clone(),
                    group: GroupDescriptor { kind: kind0, ladder: None },
                    kind: SystemKind::Product(built),
                }))
            }
        }
    }

    /// Mod-m odometer over Z to the given ladder depth.
    pub fn z_odometer(m: u64, depth: usize) -> Result<System> {
        Self::build(SystemSpec::ProfiniteOdometer { group: GroupDescriptor::z_ladder(m, depth) })
    }

    pub fn thue_morse(freq_len: usize) -> Result<System> {
        Self::build(SystemSpec::SubstitutionSubshift {
            rules: subshift::thue_morse(),
            freq_len,
        })
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    /// Whether the action maps resolution-r cells bijectively to
    /// resolution-r cells (true for odometers and their products).
    pub fn is_permuting(&self) -> bool {
        match &self.kind {
            SystemKind::Odometer => true,
            SystemKind::Subshift(_) => false,
            SystemKind::Product(fs) => fs.iter().all(|f| f.is_permuting()),
        }
    }

    fn odometer_modulus(&self, r: u32) -> Result<u64> {
        let ladder = self.group.ladder.as_ref().expect("odometer has ladder");
        ladder.modulus(r as usize)
    }

    fn odometer_dim(&self) -> u32 {
        match self.group.kind {
            GroupKind::Z => 1,
            GroupKind::Zd { d } => d,
            GroupKind::Heisenberg => 3,
            _ => unreachable!("validated at construction"),
        }
    }

    pub fn cell_count(&self, r: u32) -> Result<u64> {
        let n = match &self.kind {
            SystemKind::Odometer => {
                let m = self.odometer_modulus(r)?;
                let mut n = 1u64;
                for _ in 0..self.odometer_dim() {
                    n = n
                        .checked_mul(m)
                        .ok_or_else(|| Error::ResourceExhausted("cell count overflow".into()))?;
                }
                n
            }
            SystemKind::Subshift(sub) => sub.language(2 * r as usize + 1)?.len() as u64,
            SystemKind::Product(fs) => {
                let mut n = 1u64;
                for f in fs {
                    n = n
                        .checked_mul(f.cell_count(r)?)
                        .ok_or_else(|| Error::ResourceExhausted("cell count overflow".into()))?;
                }
                n
            }
        };
        if n as usize > size_cap() {
            return Err(Error::ResourceExhausted(format!(
                "cell count {n} at resolution {r} exceeds cap {}",
                size_cap()
            )));
        }
        Ok(n)
    }

    // odometer coordinate helpers ------------------------------------------

    fn decode_coords(&self, cell: u64, m: u64) -> Vec<u64> {
        let d = self.odometer_dim() as usize;
        let mut v = Vec::with_capacity(d);
        let mut c = cell;
        for _ in 0..d {
            v.push(c % m);
            c /= m;
        }
        v
    }

    fn encode_coords(&self, coords: &[u64], m: u64) -> u64 {
        let mut c = 0u64;
        for &x in coords.iter().rev() {
            c = c * m + x;
        }
        c
    }

    fn odometer_act(&self, s: &GroupElement, cell: u64, r: u32) -> Result<u64> {
        let m = self.odometer_modulus(r)? as i64;
        let coords = self.decode_coords(cell, m as u64);
        let moved: Vec<u64> = match (&self.group.kind, s) {
            (GroupKind::Z, GroupElement::Z(n)) => vec![(coords[0] as i64 + n).rem_euclid(m) as u64],
            (GroupKind::Zd { d }, GroupElement::Zd(v)) => {
                if v.len() != *d as usize {
                    return Err(Error::invalid("element dimension mismatch"));
                }
                coords
                    .iter()
                    .zip(v)
                    .map(|(&c, &n)| (c as i64 + n).rem_euclid(m) as u64)
                    .collect()
            }
            (GroupKind::Heisenberg, GroupElement::Heis(a, b, c)) => {
                let (x, y, z) = (coords[0] as i64, coords[1] as i64, coords[2] as i64);
                vec![
                    (a + x).rem_euclid(m) as u64,
                    (b + y).rem_euclid(m) as u64,
                    (c + z + a * y).rem_euclid(m) as u64,
                ]
            }
            _ => return Err(Error::invalid("group element does not act on this odometer")),
        };
        Ok(self.encode_coords(&moved, m as u64))
    }

    /// Extra resolution the image of a resolution-r set needs under s.
    pub fn act_resolution_shift(&self, s: &GroupElement) -> Result<u32> {
        match &self.kind {
            SystemKind::Odometer => Ok(0),
            SystemKind::Subshift(_) => match s {
                GroupElement::Z(n) => Ok(n.unsigned_abs() as u32),
                _ => Err(Error::invalid("subshift carries a Z action")),
            },
            SystemKind::Product(fs) => {
                let mut worst = 0;
                for f in fs {
                    worst = worst.max(f.act_resolution_shift(s)?);
                }
                Ok(worst)
            }
        }
    }

    /// Image of a single cell under s, returned at resolution
    /// r + act_resolution_shift(s), sorted.
    pub fn act_cell(&self, s: &GroupElement, cell: u64, r: u32) -> Result<Vec<u64>> {
        match &self.kind {
            SystemKind::Odometer => Ok(vec![self.odometer_act(s, cell, r)?]),
            SystemKind::Subshift(sub) => {
                let n = match s {
                    GroupElement::Z(n) => *n,
                    _ => return Err(Error::invalid("subshift carries a Z action")),
                };
                let len = 2 * r as usize + 1;
                let lang = sub.language(len)?;
                let w = &lang[cell as usize];
                let r2 = r + n.unsigned_abs() as u32;
                let len2 = 2 * r2 as usize + 1;
                let lang2 = sub.language(len2)?;
                // y in image iff y_{j-n} = w_j for j in [-r, r]; index i of
                // position p in a word over [-rho, rho] is p + rho.
                let mut out = Vec::new();
                for (i, u) in lang2.iter().enumerate() {
                    let mut ok = true;
                    for j in -(r as i64)..=(r as i64) {
                        let pos = j - n + r2 as i64;
                        if u[pos as usize] != w[(j + r as i64) as usize] {
                            ok = false;
                            break;
                        }
                    }
                    if ok {
                        out.push(i as u64);
                    }
                }
                Ok(out)
            }
            SystemKind::Product(fs) => {
                let shift = self.act_resolution_shift(s)?;
                let r2 = r + shift;
                let coords = self.product_decode(cell, r)?;
                let mut per_factor: Vec<Vec<u64>> = Vec::with_capacity(fs.len());
                for (f, &c) in fs.iter().zip(&coords) {
                    let fshift = f.act_resolution_shift(s)?;
                    let moved = f.act_cell(s, c, r)?;
                    // lift from r + fshift to r + shift
                    let mut lifted = Vec::new();
                    for mc in moved {
                        lifted.extend(f.refine_cell(mc, r + fshift, r2)?);
                    }
                    lifted.sort_unstable();
                    lifted.dedup();
                    per_factor.push(lifted);
                }
                self.product_combine(&per_factor, r2)
            }
        }
    }

    fn product_factors(&self) -> &[System] {
        match &self.kind {
            SystemKind::Product(fs) => fs,
            _ => unreachable!(),
        }
    }

    pub fn product_decode(&self, cell: u64, r: u32) -> Result<Vec<u64>> {
        let fs = self.product_factors();
        let mut coords = Vec::with_capacity(fs.len());
        let mut c = cell;
        for f in fs {
            let q = f.cell_count(r)?;
            coords.push(c % q);
            c /= q;
        }
        Ok(coords)
    }

    pub fn product_encode(&self, coords: &[u64], r: u32) -> Result<u64> {
        let fs = self.product_factors();
        let mut c = 0u64;
        for (f, &x) in fs.iter().zip(coords).rev() {
            c = c * f.cell_count(r)? + x;
        }
        Ok(c)
    }

    fn product_combine(&self, per_factor: &[Vec<u64>], r: u32) -> Result<Vec<u64>> {
        let mut combos: Vec<Vec<u64>> = vec![Vec::new()];
        for options in per_factor.iter().rev() {
            let mut next = Vec::with_capacity(combos.len() * options.len());
            for &o in options {
                for c in &combos {
                    let mut v = vec![o];
                    v.extend_from_slice(c);
                    next.push(v);
                }
            }
            combos = next;
        }
        let mut out = Vec::with_capacity(combos.len());
        for c in combos {
            out.push(self.product_encode(&c, r)?);
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Children of a cell when passing from resolution r to r2 >= r.
    pub fn refine_cell(&self, cell: u64, r: u32, r2: u32) -> Result<Vec<u64>> {
        if r2 < r {
            return Err(Error::invalid("refine cannot coarsen"));
        }
        if r2 == r {
            return Ok(vec![cell]);
        }
        match &self.kind {
            SystemKind::Odometer => {
                let m = self.odometer_modulus(r)?;
                let m2 = self.odometer_modulus(r2)?;
                let ratio = m2 / m;
                let coords = self.decode_coords(cell, m);
                let dim = coords.len();
                let mut cells = Vec::new();
                let mut stack = vec![Vec::<u64>::new()];
                for &coord in coords.iter().take(dim) {
                    let mut next = Vec::with_capacity(stack.len() * ratio as usize);
                    for base in &stack {
                        for j in 0..ratio {
                            let mut b = base.clone();
                            b.push(coord + j * m);
                            next.push(b);
                        }
                    }
                    stack = next;
                }
                for c in stack {
                    cells.push(self.encode_coords(&c, m2));
                }
                cells.sort_unstable();
                Ok(cells)
            }
            SystemKind::Subshift(sub) => {
                let len = 2 * r as usize + 1;
                let len2 = 2 * r2 as usize + 1;
                let lang = sub.language(len)?;
                let w = &lang[cell as usize];
                let lang2 = sub.language(len2)?;
                let off = (r2 - r) as usize;
                let mut out = Vec::new();
                for (i, u) in lang2.iter().enumerate() {
                    if &u[off..off + len] == w.as_slice() {
                        out.push(i as u64);
                    }
                }
                Ok(out)
            }
            SystemKind::Product(fs) => {
                let coords = self.product_decode(cell, r)?;
                let mut per_factor = Vec::with_capacity(fs.len());
                for (f, &c) in fs.iter().zip(&coords) {
                    per_factor.push(f.refine_cell(c, r, r2)?);
                }
                self.product_combine(&per_factor, r2)
            }
        }
    }

    /// Unique ancestor of a cell at a coarser resolution.
    pub fn coarsen_cell(&self, cell: u64, r: u32, r_coarse: u32) -> Result<u64> {
        if r_coarse > r {
            return Err(Error::invalid("coarsen target must not exceed the cell resolution"));
        }
        if r_coarse == r {
            return Ok(cell);
        }
        match &self.kind {
            SystemKind::Odometer => {
                let m = self.odometer_modulus(r)?;
                let mc = self.odometer_modulus(r_coarse)?;
                let coords = self.decode_coords(cell, m);
                let reduced: Vec<u64> = coords.iter().map(|&c| c % mc).collect();
                Ok(self.encode_coords(&reduced, mc))
            }
            SystemKind::Subshift(sub) => {
                let len = 2 * r as usize + 1;
                let lang = sub.language(len)?;
                let w = &lang[cell as usize];
                let off = (r - r_coarse) as usize;
                let middle = &w[off..off + 2 * r_coarse as usize + 1];
                let lang_c = sub.language(2 * r_coarse as usize + 1)?;
                lang_c
                    .binary_search_by(|probe| probe.as_slice().cmp(middle))
                    .map(|i| i as u64)
                    .map_err(|_| Error::invalid("cell has no admissible ancestor"))
            }
            SystemKind::Product(fs) => {
                let coords = self.product_decode(cell, r)?;
                let mut reduced = Vec::with_capacity(coords.len());
                for (f, &c) in fs.iter().zip(&coords) {
                    reduced.push(f.coarsen_cell(c, r, r_coarse)?);
                }
                let fs_counts: Vec<u64> = fs
                    .iter()
                    .map(|f| f.cell_count(r_coarse))
                    .collect::<Result<_>>()?;
                let mut out = 0u64;
                for (&x, &q) in reduced.iter().zip(&fs_counts).rev() {
                    out = out * q + x;
                }
                Ok(out)
            }
        }
    }

    /// Number of invariant-measure oracles defined for the system.
    pub fn measure_count(&self) -> usize {
        match &self.kind {
            SystemKind::Odometer | SystemKind::Subshift(_) => 1,
            SystemKind::Product(fs) => fs.iter().map(|f| f.measure_count()).product(),
        }
    }

    /// Exact-or-bounded mass of a single cell under measure `idx`.
    pub fn cell_mass(&self, idx: usize, cell: u64, r: u32) -> Result<MassEstimate> {
        match &self.kind {
            SystemKind::Odometer => {
                if idx != 0 {
                    return Err(Error::unsupported("odometer has a single invariant measure"));
                }
                let q = self.cell_count(r)? as i64;
                Ok(MassEstimate { value: rat(1, q), error: rat(0, 1) })
            }
            SystemKind::Subshift(sub) => {
                if idx != 0 {
                    return Err(Error::unsupported("subshift oracle has a single measure"));
                }
                let len = 2 * r as usize + 1;
                let (_, counts, n) = sub.word_counts(len)?;
                let positions = (n - len + 1) as i64;
                Ok(MassEstimate {
                    value: rat(counts[cell as usize] as i64, positions),
                    error: rat(2 * len as i64, n as i64),
                })
            }
            SystemKind::Product(fs) => {
                let coords = self.product_decode(cell, r)?;
                let mut value = rat(1, 1);
                let mut error = rat(0, 1);
                let mut rem = idx;
                for (f, &c) in fs.iter().zip(&coords) {
                    let k = f.measure_count();
                    let m = f.cell_mass(rem % k, c, r)?;
                    // (v ± e)(v' ± e'): error bound v e' + v' e + e e'
                    error = value * m.error + m.value * error + error * m.error;
                    value *= m.value;
                    rem /= k;
                }
                Ok(MassEstimate { value, error })
            }
        }
    }

    /// Full space at the given resolution.
    pub fn full_set(self: &Arc<Self>, r: u32) -> Result<ClopenSet> {
        let n = self.cell_count(r)?;
        Ok(ClopenSet {
            system: self.clone(),
            resolution: r,
            cells: (0..n).collect(),
        })
    }

    pub fn empty_set(self: &Arc<Self>, r: u32) -> Result<ClopenSet> {
        self.cell_count(r)?;
        Ok(ClopenSet { system: self.clone(), resolution: r, cells: BTreeSet::new() })
    }

    pub fn cells(self: &Arc<Self>, r: u32, cells: impl IntoIterator<Item = u64>) -> Result<ClopenSet> {
        let n = self.cell_count(r)?;
        let cells: BTreeSet<u64> = cells.into_iter().collect();
        if let Some(&bad) = cells.iter().find(|&&c| c >= n) {
            return Err(Error::invalid(format!("cell {bad} out of range at resolution {r}")));
        }
        Ok(ClopenSet { system: self.clone(), resolution: r, cells })
    }

    /// Human-readable cell label (odometer coset / subshift word / tuple).
    pub fn cell_label(&self, cell: u64, r: u32) -> Result<String> {
        Ok(match &self.kind {
            SystemKind::Odometer => {
                let m = self.odometer_modulus(r)?;
                let coords = self.decode_coords(cell, m);
                if coords.len() == 1 {
                    format!("{} mod {}", coords[0], m)
                } else {
                    let parts: Vec<String> = coords.iter().map(|c| c.to_string()).collect();
                    format!("({}) mod {}", parts.join(","), m)
                }
            }
            SystemKind::Subshift(sub) => {
                let lang = sub.language(2 * r as usize + 1)?;
                format!("[{}]@-{}", sub.word_to_string(&lang[cell as usize]), r)
            }
            SystemKind::Product(fs) => {
                let coords = self.product_decode(cell, r)?;
                let parts: Vec<String> = fs
                    .iter()
                    .zip(&coords)
                    .map(|(f, &c)| f.cell_label(c, r))
                    .collect::<Result<_>>()?;
                format!("({})", parts.join(" x "))
            }
        })
    }

    /// Cylinder set of a subshift: the points whose coordinates starting at
    /// `start` spell `word`, expressed over the minimal centered window.
    pub fn cylinder(self: &Arc<Self>, word: &str, start: i64) -> Result<ClopenSet> {
        let sub = match &self.kind {
            SystemKind::Subshift(sub) => sub,
            _ => return Err(Error::unsupported("cylinder sets require a subshift")),
        };
        let end = start + word.len() as i64 - 1;
        let r = start.abs().max(end.abs()) as u32;
        let len = 2 * r as usize + 1;
        let lang = sub.language(len)?;
        let letters: Vec<u8> = word
            .chars()
            .map(|c| {
                sub.alphabet
                    .iter()
                    .position(|&a| a == c)
                    .map(|i| i as u8)
                    .ok_or_else(|| Error::invalid(format!("unknown letter {c}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut cells = BTreeSet::new();
        for (i, u) in lang.iter().enumerate() {
            let off = (start + r as i64) as usize;
            if u[off..off + letters.len()] == letters[..] {
                cells.insert(i as u64);
            }
        }
        Ok(ClopenSet { system: self.clone(), resolution: r, cells })
    }
}

/// A measure value with an exact error bound (zero for odometers).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MassEstimate {
    pub value: Rat,
    pub error: Rat,
}

/// A clopen subset of a Cantor system at a finite resolution.
#[derive(Debug, Clone)]
pub struct ClopenSet {
    pub system: System,
    pub resolution: u32,
    pub cells: BTreeSet<u64>,
}

impl ClopenSet {
    pub fn same_system(&self, other: &ClopenSet) -> bool {
        self.system == other.system
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    /// Re-express at a finer resolution; refine(A, res(A)) = A.
    pub fn refine(&self, r: u32) -> Result<ClopenSet> {
        if r < self.resolution {
            return Err(Error::invalid("refine cannot coarsen"));
        }
        if r == self.resolution {
            return Ok(self.clone());
        }
        let mut cells = BTreeSet::new();
        for &c in &self.cells {
            for child in self.system.refine_cell(c, self.resolution, r)? {
                cells.insert(child);
            }
        }
        if cells.len() > size_cap() {
            return Err(Error::ResourceExhausted("refined set exceeds cell cap".into()));
        }
        Ok(ClopenSet { system: self.system.clone(), resolution: r, cells })
    }

    fn aligned(&self, other: &ClopenSet) -> Result<(ClopenSet, ClopenSet)> {
        if !self.same_system(other) {
            return Err(Error::invalid("clopen sets live on different systems"));
        }
        let r = self.resolution.max(other.resolution);
        Ok((self.refine(r)?, other.refine(r)?))
    }

    pub fn union(&self, other: &ClopenSet) -> Result<ClopenSet> {
        let (mut a, b) = self.aligned(other)?;
        a.cells.extend(b.cells);
        Ok(a)
    }

    pub fn intersection(&self, other: &ClopenSet) -> Result<ClopenSet> {
        let (a, b) = self.aligned(other)?;
        let cells = a.cells.intersection(&b.cells).copied().collect();
        Ok(ClopenSet { cells, ..a })
    }

    pub fn difference(&self, other: &ClopenSet) -> Result<ClopenSet> {
        let (a, b) = self.aligned(other)?;
        let cells = a.cells.difference(&b.cells).copied().collect();
        Ok(ClopenSet { cells, ..a })
    }

    pub fn complement(&self) -> Result<ClopenSet> {
        let full = self.system.full_set(self.resolution)?;
        full.difference(self)
    }

    pub fn same_set(&self, other: &ClopenSet) -> Result<bool> {
        let (a, b) = self.aligned(other)?;
        Ok(a.cells == b.cells)
    }

    pub fn is_subset_of(&self, other: &ClopenSet) -> Result<bool> {
        let (a, b) = self.aligned(other)?;
        Ok(a.cells.is_subset(&b.cells))
    }

    pub fn is_disjoint_from(&self, other: &ClopenSet) -> Result<bool> {
        let (a, b) = self.aligned(other)?;
        Ok(a.cells.is_disjoint(&b.cells))
    }

    /// Exact image sA. Output resolution is
    /// resolution + act_resolution_shift(s).
    pub fn act(&self, s: &GroupElement) -> Result<ClopenSet> {
        let shift = self.system.act_resolution_shift(s)?;
        let mut cells = BTreeSet::new();
        for &c in &self.cells {
            for img in self.system.act_cell(s, c, self.resolution)? {
                cells.insert(img);
            }
        }
        Ok(ClopenSet {
            system: self.system.clone(),
            resolution: self.resolution + shift,
            cells,
        })
    }

    /// Mass under oracle measure `idx` with its error bound.
    pub fn measure(&self, idx: usize) -> Result<MassEstimate> {
        let mut value = rat(0, 1);
        let mut error = rat(0, 1);
        for &c in &self.cells {
            let m = self.system.cell_mass(idx, c, self.resolution)?;
            value += m.value;
            error += m.error;
        }
        Ok(MassEstimate { value, error })
    }

    pub fn measure_value(&self, idx: usize) -> Result<Rat> {
        Ok(self.measure(idx)?.value)
    }
}

/// Conservative lower bound on min over oracle measures of mu(B) - mu(A):
/// point estimates minus both error bounds. Positive margin gates the
/// comparison searches.
pub fn measure_margin(a: &ClopenSet, b: &ClopenSet) -> Result<Rat> {
    if !a.same_system(b) {
        return Err(Error::invalid("measure margin needs sets on one system"));
    }
    let k = a.system.measure_count();
    if k == 0 {
        return Err(Error::unsupported("no measure oracle defined"));
    }
    let mut best: Option<Rat> = None;
    for idx in 0..k {
        let ma = a.measure(idx)?;
        let mb = b.measure(idx)?;
        let margin = (mb.value - mb.error) - (ma.value + ma.error);
        best = Some(match best {
            None => margin,
            Some(m) => m.min(margin),
        });
    }
    Ok(best.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn odo8() -> System {
        CantorSystem::z_odometer(2, 3).unwrap()
    }

    #[test]
    fn odometer_refine_example() {
        // class 1 mod 4 refined to level 3 -> {1 mod 8, 5 mod 8}
        let sys = odo8();
        let a = sys.cells(2, [1]).unwrap();
        let fine = a.refine(3).unwrap();
        assert_eq!(fine.cells, BTreeSet::from([1, 5]));
    }

    #[test]
    fn refine_full_space() {
        let sys = odo8();
        let x = sys.full_set(0).unwrap();
        let fine = x.refine(3).unwrap();
        assert_eq!(fine.cells.len(), 8);
    }

    #[test]
    fn refine_identity() {
        let sys = odo8();
        let a = sys.cells(2, [1, 3]).unwrap();
        assert!(a.refine(2).unwrap().same_set(&a).unwrap());
        assert!(a.refine(1).is_err());
    }

    #[test]
    fn odometer_act_carries() {
        let sys = odo8();
        let a = sys.cells(3, [0]).unwrap();
        let moved = a.act(&GroupElement::Z(1)).unwrap();
        assert_eq!(moved.cells, BTreeSet::from([1]));
        let wrapped = sys.cells(3, [7]).unwrap().act(&GroupElement::Z(1)).unwrap();
        assert_eq!(wrapped.cells, BTreeSet::from([0]));
    }

    #[test]
    fn act_identity_and_composition() {
        let sys = odo8();
        let a = sys.cells(3, [2, 5]).unwrap();
        assert!(a.act(&GroupElement::Z(0)).unwrap().same_set(&a).unwrap());
        let ab = a.act(&GroupElement::Z(3)).unwrap().act(&GroupElement::Z(2)).unwrap();
        let direct = a.act(&GroupElement::Z(5)).unwrap();
        assert!(ab.same_set(&direct).unwrap());
    }

    #[test]
    fn odometer_measure_uniform() {
        let sys = odo8();
        let a = sys.cells(3, [5]).unwrap();
        assert_eq!(a.measure_value(0).unwrap(), rat(1, 8));
        let x = sys.full_set(3).unwrap();
        assert_eq!(x.measure_value(0).unwrap(), rat(1, 1));
        // invariance is exact
        let moved = a.act(&GroupElement::Z(3)).unwrap();
        assert_eq!(moved.measure_value(0).unwrap(), rat(1, 8));
    }

    #[test]
    fn measure_margin_examples() {
        let sys = odo8();
        let a = sys.cells(3, [0, 1]).unwrap();
        let b = sys.cells(3, [4, 5, 6]).unwrap();
        assert_eq!(measure_margin(&a, &b).unwrap(), rat(1, 8));
        assert_eq!(measure_margin(&a, &a).unwrap(), rat(0, 1));
        let x = sys.full_set(3).unwrap();
        let empty = sys.empty_set(3).unwrap();
        assert_eq!(measure_margin(&x, &empty).unwrap(), rat(-1, 1));
    }

    #[test]
    fn boolean_algebra_random_triples() {
        let sys = odo8();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..1000 {
            let pick = |rng: &mut StdRng| {
                let r = rng.gen_range(1..=3u32);
                let n = sys.cell_count(r).unwrap();
                let cells: Vec<u64> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
                sys.cells(r, cells).unwrap()
            };
            let a = pick(&mut rng);
            let b = pick(&mut rng);
            let c = pick(&mut rng);
            // distributivity
            let lhs = a.intersection(&b.union(&c).unwrap()).unwrap();
            let rhs = a.intersection(&b).unwrap().union(&a.intersection(&c).unwrap()).unwrap();
            assert!(lhs.same_set(&rhs).unwrap());
            // De Morgan
            let lhs = a.union(&b).unwrap().complement().unwrap();
            let rhs = a.complement().unwrap().intersection(&b.complement().unwrap()).unwrap();
            assert!(lhs.same_set(&rhs).unwrap());
            // difference
            let lhs = a.difference(&b).unwrap();
            let rhs = a.intersection(&b.complement().unwrap()).unwrap();
            assert!(lhs.same_set(&rhs).unwrap());
        }
    }

    #[test]
    fn oracle_refinement_consistent() {
        let sys = odo8();
        for r in 0..3u32 {
            let n = sys.cell_count(r).unwrap();
            for c in 0..n {
                let parent = sys.cell_mass(0, c, r).unwrap().value;
                let mut total = rat(0, 1);
                for child in sys.refine_cell(c, r, r + 1).unwrap() {
                    total += sys.cell_mass(0, child, r + 1).unwrap().value;
                }
                assert_eq!(parent, total);
            }
        }
    }

    #[test]
    fn freeness_on_cells() {
        let sys = odo8();
        // s = 3 is outside 8Z, so no cell at depth 3 is fixed
        for c in 0..8u64 {
            let a = sys.cells(3, [c]).unwrap();
            let moved = a.act(&GroupElement::Z(3)).unwrap();
            assert!(!moved.same_set(&a).unwrap());
        }
    }

    #[test]
    fn subshift_cylinder_and_shift() {
        let sys = CantorSystem::thue_morse(1 << 14).unwrap();
        let zero = sys.cylinder("0", 0).unwrap();
        assert_eq!(zero.resolution, 0);
        assert_eq!(zero.cells.len(), 1);
        // shift by 5 re-windows to resolution 5
        let moved = zero.act(&GroupElement::Z(5)).unwrap();
        assert_eq!(moved.resolution, 5);
        let direct = sys.cylinder("0", -5).unwrap().refine(5).unwrap();
        assert!(moved.same_set(&direct).unwrap());
    }

    #[test]
    fn subshift_act_composition() {
        let sys = CantorSystem::thue_morse(1 << 14).unwrap();
        let a = sys.cylinder("01", 0).unwrap();
        let ab = a.act(&GroupElement::Z(2)).unwrap().act(&GroupElement::Z(-3)).unwrap();
        let direct = a.act(&GroupElement::Z(-1)).unwrap();
        assert!(ab.same_set(&direct).unwrap());
    }

    #[test]
    fn subshift_refine_keeps_admissibility() {
        let sys = CantorSystem::thue_morse(1 << 14).unwrap();
        let a = sys.cylinder("01", 0).unwrap();
        let fine = a.refine(a.resolution + 1).unwrap();
        // refined cells carry 01 in the middle-right slots; counting against
        // the full language keeps only admissible extensions
        assert!(!fine.is_empty());
        let back_total: usize = fine.cells.len();
        assert!(back_total >= a.cells.len());
        assert!(fine.is_subset_of(&a).unwrap());
        assert!(a.refine(fine.resolution).unwrap().same_set(&fine).unwrap());
    }

    #[test]
    fn thue_morse_cylinder_mass_half() {
        let sys = CantorSystem::thue_morse(1 << 16).unwrap();
        let zero = sys.cylinder("0", 0).unwrap();
        let m = zero.measure(0).unwrap();
        assert_eq!(m.value, rat(1, 2));
        assert!(m.error > rat(0, 1));
    }

    #[test]
    fn subshift_masses_sum_to_one() {
        let sys = CantorSystem::thue_morse(1 << 12).unwrap();
        for r in 0..3u32 {
            let x = sys.full_set(r).unwrap();
            assert_eq!(x.measure(0).unwrap().value, rat(1, 1));
        }
    }

    #[test]
    fn subshift_masses_refinement_consistent_within_bounds() {
        let sys = CantorSystem::thue_morse(1 << 12).unwrap();
        for r in 0..2u32 {
            for c in 0..sys.cell_count(r).unwrap() {
                let parent = sys.cell_mass(0, c, r).unwrap();
                let mut child_total = rat(0, 1);
                let mut child_err = rat(0, 1);
                for child in sys.refine_cell(c, r, r + 1).unwrap() {
                    let m = sys.cell_mass(0, child, r + 1).unwrap();
                    child_total += m.value;
                    child_err += m.error;
                }
                let gap = parent.value - child_total;
                let gap = if gap < rat(0, 1) { -gap } else { gap };
                assert!(gap <= parent.error + child_err);
            }
        }
    }

    #[test]
    fn subshift_masses_translation_invariant_within_bounds() {
        let sys = CantorSystem::thue_morse(1 << 12).unwrap();
        let a = sys.cylinder("01", 0).unwrap();
        let ma = a.measure(0).unwrap();
        let moved = a.act(&GroupElement::Z(3)).unwrap();
        let mm = moved.measure(0).unwrap();
        let gap = ma.value - mm.value;
        let gap = if gap < rat(0, 1) { -gap } else { gap };
        assert!(gap <= ma.error + mm.error);
    }

    #[test]
    fn product_diagonal_action_cycles() {
        // mod-2 x mod-3 odometer with diagonal Z action is the mod-6 odometer
        let spec = SystemSpec::Product {
            factors: vec![
                SystemSpec::ProfiniteOdometer { group: GroupDescriptor::z_ladder(2, 3) },
                SystemSpec::ProfiniteOdometer { group: GroupDescriptor::z_ladder(3, 3) },
            ],
        };
        let sys = CantorSystem::build(spec).unwrap();
        assert_eq!(sys.cell_count(1).unwrap(), 6);
        assert!(sys.is_permuting());
        // the diagonal +1 orbit visits all 6 cells
        let mut seen = BTreeSet::new();
        let mut a = sys.cells(1, [0]).unwrap();
        for _ in 0..6 {
            seen.insert(*a.cells.iter().next().unwrap());
            a = a.act(&GroupElement::Z(1)).unwrap();
        }
        assert_eq!(seen.len(), 6);
        // product measure is uniform 1/6 per cell
        let c = sys.cells(1, [4]).unwrap();
        assert_eq!(c.measure_value(0).unwrap(), rat(1, 6));
    }

    #[test]
    fn product_with_subshift_factor() {
        let spec = SystemSpec::Product {
            factors: vec![
                SystemSpec::ProfiniteOdometer { group: GroupDescriptor::z_ladder(2, 4) },
                SystemSpec::SubstitutionSubshift { rules: subshift::thue_morse(), freq_len: 1 << 12 },
            ],
        };
        let sys = CantorSystem::build(spec).unwrap();
        assert!(!sys.is_permuting());
        let x = sys.full_set(1).unwrap();
        let moved = x.act(&GroupElement::Z(1)).unwrap();
        assert!(moved.same_set(&x.refine(moved.resolution).unwrap()).unwrap());
        assert_eq!(x.measure(0).unwrap().value, rat(1, 1));
    }

    #[test]
    fn coarsen_inverts_refine() {
        let sys = odo8();
        for r in 0..3u32 {
            for r2 in r..=3u32 {
                for c in 0..sys.cell_count(r).unwrap() {
                    for child in sys.refine_cell(c, r, r2).unwrap() {
                        assert_eq!(sys.coarsen_cell(child, r2, r).unwrap(), c);
                    }
                }
            }
        }
        let tm = CantorSystem::thue_morse(1 << 12).unwrap();
        for c in 0..tm.cell_count(1).unwrap() {
            for child in tm.refine_cell(c, 1, 3).unwrap() {
                assert_eq!(tm.coarsen_cell(child, 3, 1).unwrap(), c);
            }
        }
    }

    #[test]
    fn system_spec_json_round_trip() {
        let spec = SystemSpec::ProfiniteOdometer { group: GroupDescriptor::z_ladder(2, 5) };
        let s = serde_json::to_string(&spec).unwrap();
        let back: SystemSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
    }
}
