use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AttestationError, PublicKey};
use crate::grid::{CellId, HexGrid};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessEntry {
    pub witness_id: String,
    pub pk_hex: String,
    pub x: i64,
    pub y: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProverEntry {
    pub prover_id: String,
    pub pk_hex: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
struct RegistryFile {
    witnesses: Vec<WitnessEntry>,
    #[serde(default)]
    provers: Vec<ProverEntry>,
}

#[derive(Clone, Debug)]
pub struct RegisteredWitness {
    pub pk: PublicKey,
    pub position: (i64, i64),
}

/// Static table of witness and prover keys known to a verifier.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    witnesses: BTreeMap<String, RegisteredWitness>,
    provers: BTreeMap<String, PublicKey>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_witness(
        &mut self,
        witness_id: &str,
        pk: PublicKey,
        position: (i64, i64),
    ) -> Result<(), AttestationError> {
        if self.witnesses.contains_key(witness_id) {
            return Err(AttestationError::Duplicate(witness_id.into()));
        }
        self.witnesses
            .insert(witness_id.into(), RegisteredWitness { pk, position });
        Ok(())
    }

    pub fn add_prover(&mut self, prover_id: &str, pk: PublicKey) -> Result<(), AttestationError> {
        if self.provers.contains_key(prover_id) {
            return Err(AttestationError::Duplicate(prover_id.into()));
        }
        self.provers.insert(prover_id.into(), pk);
        Ok(())
    }

    pub fn witness(&self, witness_id: &str) -> Option<&RegisteredWitness> {
        self.witnesses.get(witness_id)
    }

    pub fn witness_cell(&self, witness_id: &str, grid: &HexGrid) -> Option<CellId> {
        self.witness(witness_id)
            .map(|w| grid.locate(w.position.0 as f64, w.position.1 as f64))
    }

    pub fn prover(&self, prover_id: &str) -> Option<&PublicKey> {
        self.provers.get(prover_id)
    }

    pub fn is_known_prover(&self, pk: &PublicKey) -> bool {
        self.provers.values().any(|p| p == pk)
    }

    pub fn prover_id_of(&self, pk: &PublicKey) -> Option<&str> {
        self.provers
            .iter()
            .find(|(_, p)| *p == pk)
            .map(|(id, _)| id.as_str())
    }

    pub fn witness_ids(&self) -> impl Iterator<Item = &str> {
        self.witnesses.keys().map(String::as_str)
    }

    pub fn to_json(&self) -> String {
        let file = RegistryFile {
            witnesses: self
                .witnesses
                .iter()
                .map(|(id, w)| WitnessEntry {
                    witness_id: id.clone(),
                    pk_hex: w.pk.to_hex(),
                    x: w.position.0,
                    y: w.position.1,
                })
                .collect(),
            provers: self
                .provers
                .iter()
                .map(|(id, pk)| ProverEntry {
                    prover_id: id.clone(),
                    pk_hex: pk.to_hex(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("registry serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, AttestationError> {
        let file: RegistryFile =
            serde_json::from_str(s).map_err(|e| AttestationError::Malformed(e.to_string()))?;
        let mut reg = Registry::new();
        for w in file.witnesses {
            reg.add_witness(&w.witness_id, PublicKey::from_hex(&w.pk_hex)?, (w.x, w.y))?;
        }
        for p in file.provers {
            reg.add_prover(&p.prover_id, PublicKey::from_hex(&p.pk_hex)?)?;
        }
        Ok(reg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attestation::{keygen, GroupProfile};

    #[test]
    fn json_round_trip_and_duplicates() {
        let mut r = Registry::new();
        r.add_witness("w1", keygen(1, GroupProfile::Pallas).public(), (10, -20))
            .unwrap();
        r.add_witness("w2", keygen(2, GroupProfile::Test).public(), (0, 5))
            .unwrap();
        r.add_prover("alice", keygen(3, GroupProfile::Pallas).public())
            .unwrap();
        assert!(r
            .add_witness("w1", keygen(4, GroupProfile::Pallas).public(), (0, 0))
            .is_err());
        let back = Registry::from_json(&r.to_json()).unwrap();
        assert_eq!(back.to_json(), r.to_json());
        assert_eq!(back.witness("w1").unwrap().position, (10, -20));
        assert_eq!(
            back.prover_id_of(&keygen(3, GroupProfile::Pallas).public()),
            Some("alice")
        );
    }
}
