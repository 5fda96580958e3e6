//! Per-transmission energy accounting.

use serde::{Deserialize, Serialize};

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyMode {
    /// `e_tx + e_rx` per packet-hop.
    #[default]
    Unit,
    /// `(e_tx + e_rx) * packet_bytes` per packet-hop.
    LinearInBytes,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub e_tx: f64,
    pub e_rx: f64,
    pub mode: EnergyMode,
}

impl Default for EnergyModel {
    /// One unit per transmission, receptions free.
    fn default() -> Self {
        EnergyModel { e_tx: 1.0, e_rx: 0.0, mode: EnergyMode::Unit }
    }
}

impl EnergyModel {
    pub fn per_transmission(&self, packet_bytes: u64) -> f64 {
        let base = self.e_tx + self.e_rx;
        match self.mode {
            EnergyMode::Unit => base,
            EnergyMode::LinearInBytes => base * packet_bytes as f64,
        }
    }

    pub fn cost(&self, transmissions: usize, packet_bytes: u64) -> f64 {
        transmissions as f64 * self.per_transmission(packet_bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_and_linear() {
        let u = EnergyModel::default();
        assert_eq!(u.cost(7, 10_000), 7.0);
        let l = EnergyModel { e_tx: 2e-6, e_rx: 1e-6, mode: EnergyMode::LinearInBytes };
        assert!((l.cost(2, 1000) - 6e-3).abs() < 1e-12);
    }
}
