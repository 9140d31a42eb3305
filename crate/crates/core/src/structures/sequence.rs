use std::sync::Arc;

use super::{FiniteStructure, StructureError};

/// Finite stand-in for an indexed family of structures: labelled entries with
/// strictly increasing labels over one shared signature.
#[derive(Debug, Clone)]
pub struct StructureSequence {
    entries: Vec<(u64, Arc<FiniteStructure>)>,
}

impl StructureSequence {
    pub fn new(entries: Vec<(u64, Arc<FiniteStructure>)>) -> Result<Self, StructureError> {
        let Some((_, first)) = entries.first() else {
            return Err(StructureError::Sequence("sequence is empty".into()));
        };
        let sig = first.signature();
        for w in entries.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(StructureError::Sequence(format!(
                    "labels must increase strictly ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some((label, _)) = entries.iter().find(|(_, m)| m.signature() != sig) {
            return Err(StructureError::Sequence(format!("structure {label} has a different signature")));
        }
        Ok(Self { entries })
    }

    /// Paley graphs labelled by their orders.
    pub fn paley(qs: &[u64]) -> Result<Self, StructureError> {
        let entries = qs
            .iter()
            .map(|&q| Ok((q, Arc::new(super::paley(q)?))))
            .collect::<Result<Vec<_>, StructureError>>()?;
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<u64> {
        self.entries.iter().map(|(l, _)| *l).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &Arc<FiniteStructure>)> {
        self.entries.iter().map(|(l, m)| (*l, m))
    }
}
