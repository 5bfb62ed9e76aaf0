//! Serializable artifact forms and the CLI report envelope.
//!
//! Clopen sets serialize as (resolution, sorted cell list); castles as a
//! bare array of {base, shape}; rationals as exact "p/q" strings. Identical
//! inputs produce byte-identical reports when timings are suppressed.

use crate::afcheck::AFCertificate;
use crate::amdim::SimplexMap;
use crate::cantor::{ClopenSet, System};
use crate::comparison::{ComparisonWitness, WitnessPiece};
use crate::error::Result;
use crate::group::{FiniteGroupSet, GroupElement};
use crate::quasitiling::{PlacedTile, QuasiTiling};
use crate::rat::JsonRat;
use crate::towers::{Castle, Tower, TowerCollection};
use crate::typesemigroup::{EquidecompWitness, TypeElement};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClopenSetData {
    pub resolution: u32,
    pub cells: Vec<u64>,
}

impl ClopenSetData {
    pub fn from_set(a: &ClopenSet) -> Self {
        ClopenSetData {
            resolution: a.resolution,
            cells: a.cells.iter().copied().collect(),
        }
    }

    pub fn into_set(&self, system: &System) -> Result<ClopenSet> {
        system.cells(self.resolution, self.cells.iter().copied())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TowerData {
    pub base: ClopenSetData,
    pub shape: FiniteGroupSet,
}

pub type CastleData = Vec<TowerData>;

pub fn castle_to_data(c: &Castle) -> CastleData {
    c.towers
        .iter()
        .map(|t| TowerData { base: ClopenSetData::from_set(&t.base), shape: t.shape.clone() })
        .collect()
}

pub fn castle_from_data(data: &CastleData, system: &System) -> Result<Castle> {
    let towers = data
        .iter()
        .map(|t| Ok(Tower::new(t.base.into_set(system)?, t.shape.clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok(Castle { towers })
}

pub fn collection_from_data(data: &CastleData, system: &System) -> Result<TowerCollection> {
    Ok(TowerCollection { towers: castle_from_data(data, system)?.towers })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessPieceData {
    pub cells: ClopenSetData,
    pub translation: GroupElement,
    pub color: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessData {
    pub pieces: Vec<WitnessPieceData>,
}

pub fn witness_to_data(w: &ComparisonWitness) -> WitnessData {
    WitnessData {
        pieces: w
            .pieces
            .iter()
            .map(|p| WitnessPieceData {
                cells: ClopenSetData::from_set(&p.cells),
                translation: p.translation.clone(),
                color: p.color,
            })
            .collect(),
    }
}

pub fn witness_from_data(data: &WitnessData, system: &System) -> Result<ComparisonWitness> {
    let pieces = data
        .pieces
        .iter()
        .map(|p| {
            Ok(WitnessPiece {
                cells: p.cells.into_set(system)?,
                translation: p.translation.clone(),
                color: p.color,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonWitness { pieces })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypeElementData {
    pub resolution: u32,
    /// sparse (cell, weight) pairs, sorted by cell
    pub weights: Vec<(u64, u64)>,
}

pub fn type_element_to_data(f: &TypeElement) -> TypeElementData {
    TypeElementData {
        resolution: f.resolution,
        weights: f.weights.iter().map(|(&c, &w)| (c, w)).collect(),
    }
}

pub fn type_element_from_data(data: &TypeElementData, system: &System) -> Result<TypeElement> {
    TypeElement::new(system.clone(), data.resolution, data.weights.iter().copied().collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquidecompWitnessData {
    pub parts: Vec<(TypeElementData, GroupElement)>,
}

pub fn equidecomp_to_data(w: &EquidecompWitness) -> EquidecompWitnessData {
    EquidecompWitnessData {
        parts: w
            .parts
            .iter()
            .map(|(h, s)| (type_element_to_data(h), s.clone()))
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuasiTilingData {
    pub beta: JsonRat,
    pub ambient: FiniteGroupSet,
    pub tiles: Vec<FiniteGroupSet>,
    pub placements: Vec<PlacedTile>,
}

pub fn tiling_to_data(q: &QuasiTiling) -> QuasiTilingData {
    QuasiTilingData {
        beta: q.beta.into(),
        ambient: q.ambient.clone(),
        tiles: q.tiles.clone(),
        placements: q.placements.clone(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimplexMapData {
    pub resolution: u32,
    pub support_bound: u32,
    pub depth: u32,
    pub cells: Vec<(u64, Vec<(GroupElement, JsonRat)>)>,
}

pub fn simplex_map_to_data(m: &SimplexMap) -> SimplexMapData {
    SimplexMapData {
        resolution: m.resolution,
        support_bound: m.support_bound,
        depth: m.depth,
        cells: m
            .vectors
            .iter()
            .map(|(&c, v)| {
                (c, v.iter().map(|(t, &w)| (t.clone(), JsonRat(w))).collect())
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateData {
    pub castle: CastleData,
    pub n: u64,
    pub k_set: FiniteGroupSet,
    pub delta: JsonRat,
    pub diameter_resolution: u32,
    pub subshapes: Vec<FiniteGroupSet>,
    pub remainder_witness: WitnessData,
}

pub fn certificate_to_data(c: &AFCertificate) -> CertificateData {
    CertificateData {
        castle: castle_to_data(&c.castle),
        n: c.n,
        k_set: c.k_set.clone(),
        delta: JsonRat(c.delta),
        diameter_resolution: c.diameter_resolution,
        subshapes: c.subshapes.clone(),
        remainder_witness: witness_to_data(&c.remainder_witness),
    }
}

pub fn certificate_from_data(data: &CertificateData, system: &System) -> Result<AFCertificate> {
    Ok(AFCertificate {
        castle: castle_from_data(&data.castle, system)?,
        n: data.n,
        k_set: data.k_set.clone(),
        delta: data.delta.0,
        diameter_resolution: data.diameter_resolution,
        subshapes: data.subshapes.clone(),
        remainder_witness: witness_from_data(&data.remainder_witness, system)?,
    })
}

/// The CLI report envelope. Budgets are echoed so NOT-FOUND results stay
/// interpretable; timings are omitted under --no-timing so identical
/// invocations produce byte-identical reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub inputs: serde_json::Value,
    pub budgets: serde_json::Value,
    pub outcome: String,
    pub artifact: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<u128>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            inputs: serde_json::Value::Null,
            budgets: serde_json::Value::Null,
            outcome: String::new(),
            artifact: serde_json::Value::Null,
            timings_ms: None,
        }
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::CantorSystem;

    #[test]
    fn clopen_set_round_trip() {
        let sys = CantorSystem::z_odometer(2, 3).unwrap();
        let a = sys.cells(3, [1, 5, 6]).unwrap();
        let data = ClopenSetData::from_set(&a);
        let json = serde_json::to_string(&data).unwrap();
        assert_eq!(json, r#"{"resolution":3,"cells":[1,5,6]}"#);
        let back: ClopenSetData = serde_json::from_str(&json).unwrap();
        assert!(back.into_set(&sys).unwrap().same_set(&a).unwrap());
    }

    #[test]
    fn castle_round_trip() {
        let sys = CantorSystem::z_odometer(2, 3).unwrap();
        let castle = Castle {
            towers: vec![Tower::new(
                sys.cells(3, [0]).unwrap(),
                FiniteGroupSet::z_interval(0, 7),
            )],
        };
        let data = castle_to_data(&castle);
        let json = serde_json::to_string(&data).unwrap();
        let parsed: CastleData = serde_json::from_str(&json).unwrap();
        let back = castle_from_data(&parsed, &sys).unwrap();
        assert_eq!(back.towers.len(), 1);
        assert_eq!(back.towers[0].shape, castle.towers[0].shape);
    }

    #[test]
    fn report_is_deterministic() {
        let mut r = Report::new("test");
        r.outcome = "PASS".into();
        let a = r.to_json_pretty().unwrap();
        let b = r.to_json_pretty().unwrap();
        assert_eq!(a, b);
        assert!(!a.contains("timings"));
    }
}
