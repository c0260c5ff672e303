//! Topology-aware head identifiers, gate masks and attribution containers.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Attention head address within an encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HeadId {
    pub layer: usize,
    pub head: usize,
}

impl HeadId {
    pub fn new(layer: usize, head: usize) -> Self {
        Self { layer, head }
    }
}

impl fmt::Display for HeadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}.H{}", self.layer, self.head)
    }
}

/// Layer and head counts of a gated model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelTopology {
    pub layers: usize,
    pub heads_per_layer: usize,
}

impl ModelTopology {
    pub fn new(layers: usize, heads_per_layer: usize) -> Result<Self> {
        if layers == 0 || heads_per_layer == 0 {
            return Err(Error::Topology(format!(
                "topology {layers}x{heads_per_layer} has no heads"
            )));
        }
        Ok(Self {
            layers,
            heads_per_layer,
        })
    }

    /// 12 layers of 12 heads, the layout of base-size encoders.
    pub fn base_encoder() -> Self {
        Self {
            layers: 12,
            heads_per_layer: 12,
        }
    }

    pub fn total(&self) -> usize {
        self.layers * self.heads_per_layer
    }

    /// Row-major (layer-major) flat index of `id`.
    pub fn head_index(&self, id: HeadId) -> Result<usize> {
        if id.layer >= self.layers || id.head >= self.heads_per_layer {
            return Err(Error::Topology(format!(
                "{id} outside topology {}x{}",
                self.layers, self.heads_per_layer
            )));
        }
        Ok(id.layer * self.heads_per_layer + id.head)
    }

    pub fn head_id(&self, index: usize) -> Result<HeadId> {
        if index >= self.total() {
            return Err(Error::Topology(format!(
                "flat index {index} outside topology of {} heads",
                self.total()
            )));
        }
        Ok(HeadId::new(
            index / self.heads_per_layer,
            index % self.heads_per_layer,
        ))
    }

    /// CSV column labels `L{layer}.H{head}` in flat order.
    pub fn column_labels(&self) -> Vec<String> {
        (0..self.total())
            .map(|i| HeadId::new(i / self.heads_per_layer, i % self.heads_per_layer).to_string())
            .collect()
    }

    pub fn check_mask(&self, mask: &GateMask) -> Result<()> {
        if mask.len() != self.total() {
            return Err(Error::Topology(format!(
                "mask of length {} does not match topology of {} heads",
                mask.len(),
                self.total()
            )));
        }
        Ok(())
    }
}

/// On/off state of every head, in flat order. Bit `true` means the head is active.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GateMask {
    bits: Vec<bool>,
}

impl GateMask {
    pub fn all_on(topology: &ModelTopology) -> Self {
        Self {
            bits: vec![true; topology.total()],
        }
    }

    pub fn all_off(topology: &ModelTopology) -> Self {
        Self {
            bits: vec![false; topology.total()],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Builds a mask from 0/1 integers; anything else is rejected.
    pub fn from_ints(values: &[u8]) -> Result<Self> {
        values
            .iter()
            .map(|&v| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Input(format!("mask entry {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bits)
    }

    /// Mask with only the listed flat indices active.
    pub fn from_active(total: usize, active: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut bits = vec![false; total];
        for i in active {
            *bits.get_mut(i).ok_or_else(|| {
                Error::Topology(format!("flat index {i} outside mask of length {total}"))
            })? = true;
        }
        Ok(Self { bits })
    }

    /// Copy with `index` switched off. Idempotent.
    pub fn without(&self, index: usize) -> Result<Self> {
        self.with_bit(index, false)
    }

    /// Copy with `index` switched on. Idempotent.
    pub fn with(&self, index: usize) -> Result<Self> {
        self.with_bit(index, true)
    }

    fn with_bit(&self, index: usize, value: bool) -> Result<Self> {
        if index >= self.bits.len() {
            return Err(Error::Topology(format!(
                "flat index {index} outside mask of length {}",
                self.bits.len()
            )));
        }
        let mut bits = self.bits.clone();
        bits[index] = value;
        Ok(Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_active(&self, index: usize) -> bool {
        self.bits.get(index).copied().unwrap_or(false)
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn to_ints(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| u8::from(b)).collect()
    }

    /// Hex SHA-256 of the 0/1 byte sequence.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_ints());
        hex::encode(hasher.finalize())
    }
}

impl Serialize for GateMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_ints().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GateMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let ints = Vec::<u8>::deserialize(deserializer)?;
        GateMask::from_ints(&ints).map_err(serde::de::Error::custom)
    }
}

/// One head's attribution estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShvEstimate<T> {
    pub mean: T,
    pub variance: T,
    pub samples: usize,
    pub converged: bool,
}

impl<T: Scalar> ShvEstimate<T> {
    /// Estimate with no sampling error.
    pub fn exact(value: T) -> Self {
        Self {
            mean: value,
            variance: T::zero(),
            samples: 0,
            converged: true,
        }
    }
}

/// Attribution vector of one paradigm, one estimate per head in flat order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShvVector<T> {
    pub paradigm_id: String,
    pub estimates: Vec<ShvEstimate<T>>,
}

impl<T: Scalar> ShvVector<T> {
    pub fn means(&self) -> Vec<T> {
        self.estimates.iter().map(|e| e.mean).collect()
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    pub fn all_converged(&self) -> bool {
        self.estimates.iter().all(|e| e.converged)
    }
}

/// Attribution vectors of several paradigms over one topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShvMatrix<T> {
    pub topology: ModelTopology,
    pub rows: Vec<ShvVector<T>>,
}

impl<T: Scalar> ShvMatrix<T> {
    pub fn new(topology: ModelTopology, rows: Vec<ShvVector<T>>) -> Result<Self> {
        for row in &rows {
            if row.len() != topology.total() {
                return Err(Error::Topology(format!(
                    "row `{}` has {} estimates, topology has {} heads",
                    row.paradigm_id,
                    row.len(),
                    topology.total()
                )));
            }
        }
        Ok(Self { topology, rows })
    }

    pub fn paradigm_ids(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.paradigm_id.as_str()).collect()
    }

    /// Row-major means, one `Vec` per paradigm.
    pub fn means(&self) -> Vec<Vec<T>> {
        self.rows.iter().map(ShvVector::means).collect()
    }

    pub fn row(&self, paradigm_id: &str) -> Option<&ShvVector<T>> {
        self.rows.iter().find(|r| r.paradigm_id == paradigm_id)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t12() -> ModelTopology {
        ModelTopology::new(12, 12).unwrap()
    }

    #[test]
    fn head_index_examples() {
        let t = t12();
        assert_eq!(t.head_index(HeadId::new(0, 0)).unwrap(), 0);
        assert_eq!(t.head_index(HeadId::new(11, 11)).unwrap(), 143);
        assert_eq!(t.head_index(HeadId::new(1, 3)).unwrap(), 15);
        assert!(matches!(
            t.head_index(HeadId::new(12, 0)),
            Err(Error::Topology(_))
        ));
        assert!(t.head_index(HeadId::new(0, 12)).is_err());
        assert_eq!(t.total(), 144);
    }

    #[test]
    fn empty_topology_rejected() {
        assert!(ModelTopology::new(0, 12).is_err());
        assert!(ModelTopology::new(3, 0).is_err());
    }

    #[test]
    fn mask_examples() {
        let t = ModelTopology::new(2, 2).unwrap();
        let on = GateMask::all_on(&t);
        assert_eq!(on.to_ints(), vec![1, 1, 1, 1]);
        let m = on.without(2).unwrap();
        assert_eq!(m.to_ints(), vec![1, 1, 0, 1]);
        assert_eq!(m.without(2).unwrap().to_ints(), vec![1, 1, 0, 1]);
        assert!(matches!(m.without(4), Err(Error::Topology(_))));
        assert_eq!(on.popcount(), 4);
    }

    #[test]
    fn mask_serializes_as_int_array() {
        let m = GateMask::from_ints(&[1, 0, 1]).unwrap();
        assert_eq!(serde_json::to_string(&m).unwrap(), "[1,0,1]");
        let back: GateMask = serde_json::from_str("[1,0,1]").unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<GateMask>("[1,2]").is_err());
    }

    #[test]
    fn digest_distinguishes_masks() {
        let a = GateMask::from_ints(&[1, 0]).unwrap();
        let b = GateMask::from_ints(&[0, 1]).unwrap();
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest(), a.clone().digest());
    }

    #[test]
    fn column_labels_are_layer_major() {
        let t = ModelTopology::new(2, 3).unwrap();
        assert_eq!(
            t.column_labels(),
            vec!["L0.H0", "L0.H1", "L0.H2", "L1.H0", "L1.H1", "L1.H2"]
        );
    }

    proptest! {
        #[test]
        fn head_index_round_trips(layers in 1usize..20, heads in 1usize..20, raw in 0usize..400) {
            let t = ModelTopology::new(layers, heads).unwrap();
            let idx = raw % t.total();
            let id = t.head_id(idx).unwrap();
            prop_assert_eq!(t.head_index(id).unwrap(), idx);
        }

        #[test]
        fn without_never_increases_popcount(bits in proptest::collection::vec(any::<bool>(), 1..64), raw in 0usize..64) {
            let m = GateMask::from_bits(bits);
            let idx = raw % m.len();
            let after = m.without(idx).unwrap();
            prop_assert!(after.popcount() <= m.popcount());
            prop_assert!(m.popcount() - after.popcount() <= 1);
            prop_assert!(!after.is_active(idx));
        }
    }
}
