//! DC network matrices.

use crate::error::ModelError;
use crate::system::SystemModel;
use serde::{Deserialize, Serialize};

/// Incidence and angle-to-flow matrices of a system, in dense row-major form.
///
/// Rows of `line_bus` and `angle_to_flow` are lines, columns are bus positions.
/// A line from bus `i` to bus `j` has `+1` at `i` and `-1` at `j`, so its flow
/// is `susceptance * (theta_i - theta_j)` and positive flow leaves bus `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMatrices {
    pub line_bus: Vec<Vec<f64>>,
    /// Bus x thermal-unit incidence.
    pub thermal_incidence: Vec<Vec<f64>>,
    /// Bus x renewable-unit incidence.
    pub renewable_incidence: Vec<Vec<f64>>,
    pub angle_to_flow: Vec<Vec<f64>>,
    /// Bus position whose angle is fixed to zero.
    pub reference_bus: usize,
}

impl NetworkMatrices {
    /// Net flow into each bus for the given line flows (`-A' f`).
    pub fn nodal_inflow(&self, flows: &[f64]) -> Vec<f64> {
        let n_bus = self.thermal_incidence.len();
        let mut out = vec![0.0; n_bus];
        for (row, f) in self.line_bus.iter().zip(flows) {
            for (b, a) in row.iter().enumerate() {
                out[b] -= a * f;
            }
        }
        out
    }

    /// Line flows implied by bus angles (`S theta`).
    pub fn flows_from_angles(&self, angles: &[f64]) -> Vec<f64> {
        self.angle_to_flow
            .iter()
            .map(|row| row.iter().zip(angles).map(|(s, t)| s * t).sum())
            .collect()
    }
}

/// Build the incidence matrices with the given bus id as the angle reference.
pub fn build_network_matrices(system: &SystemModel, reference_bus: usize) -> Result<NetworkMatrices, ModelError> {
    let reference = system
        .bus_position(reference_bus)
        .ok_or(ModelError::UnknownBus { bus: reference_bus, context: "reference bus".into() })?;
    let n_bus = system.n_buses();
    let position = |id: usize, context: &str| {
        system.bus_position(id).ok_or_else(|| ModelError::UnknownBus { bus: id, context: context.to_string() })
    };

    let mut line_bus = vec![vec![0.0; n_bus]; system.n_lines()];
    let mut angle_to_flow = vec![vec![0.0; n_bus]; system.n_lines()];
    for (l, line) in system.lines.iter().enumerate() {
        let from = position(line.from_bus, &format!("line {}", line.id))?;
        let to = position(line.to_bus, &format!("line {}", line.id))?;
        line_bus[l][from] = 1.0;
        line_bus[l][to] = -1.0;
        angle_to_flow[l][from] = line.susceptance;
        angle_to_flow[l][to] = -line.susceptance;
    }

    let mut thermal_incidence = vec![vec![0.0; system.n_thermal()]; n_bus];
    for (i, unit) in system.thermal_units.iter().enumerate() {
        thermal_incidence[position(unit.bus, &format!("thermal {}", unit.id))?][i] = 1.0;
    }
    let mut renewable_incidence = vec![vec![0.0; system.n_renewable()]; n_bus];
    for (r, unit) in system.renewable_units.iter().enumerate() {
        renewable_incidence[position(unit.bus, &format!("renewable {}", unit.id))?][r] = 1.0;
    }

    Ok(NetworkMatrices { line_bus, thermal_incidence, renewable_incidence, angle_to_flow, reference_bus: reference })
}

/// Network matrices referenced at the first bus.
pub fn default_network(system: &SystemModel) -> Result<NetworkMatrices, ModelError> {
    let first = system.buses.first().ok_or(ModelError::EmptySystem)?;
    build_network_matrices(system, first.id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{Bus, TransmissionLine};

    fn ring(n: usize) -> SystemModel {
        SystemModel {
            buses: (0..n).map(|id| Bus { id, demand: vec![1.0] }).collect(),
            lines: (0..n)
                .map(|l| TransmissionLine {
                    id: l,
                    from_bus: l,
                    to_bus: (l + 1) % n,
                    susceptance: 1.0 + l as f64,
                    capacity: 10.0,
                })
                .collect(),
            thermal_units: vec![],
            renewable_units: vec![],
            horizon: 1,
            nominal_forecast: vec![],
        }
    }

    #[test]
    fn single_line_incidence() {
        let mut s = ring(2);
        s.lines.truncate(1);
        s.lines[0].susceptance = 4.0;
        let m = build_network_matrices(&s, 0).unwrap();
        assert_eq!(m.line_bus, vec![vec![1.0, -1.0]]);
        assert_eq!(m.angle_to_flow, vec![vec![4.0, -4.0]]);
    }

    #[test]
    fn ring_rows_have_one_plus_and_one_minus() {
        let s = ring(4);
        let m = build_network_matrices(&s, 2).unwrap();
        assert_eq!(m.reference_bus, 2);
        for row in &m.line_bus {
            assert_eq!(row.iter().filter(|v| **v == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|v| **v == -1.0).count(), 1);
        }
        // each ring bus is the tail of one line and the head of another
        for b in 0..4 {
            let col: f64 = m.line_bus.iter().map(|r| r[b]).sum();
            assert_eq!(col, 0.0);
        }
    }

    #[test]
    fn angle_to_flow_is_susceptance_times_incidence() {
        let s = ring(5);
        let m = build_network_matrices(&s, 0).unwrap();
        for (l, line) in s.lines.iter().enumerate() {
            for b in 0..5 {
                assert_eq!(m.angle_to_flow[l][b], line.susceptance * m.line_bus[l][b]);
            }
        }
    }

    #[test]
    fn unknown_reference_bus_is_an_error() {
        assert!(build_network_matrices(&ring(3), 99).is_err());
    }

    #[test]
    fn relabeling_buses_permutes_columns() {
        let s = ring(4);
        let base = build_network_matrices(&s, 0).unwrap();
        // reverse the bus list; ids stay attached to their data
        let mut permuted = s.clone();
        permuted.buses.reverse();
        let m = build_network_matrices(&permuted, 0).unwrap();
        for l in 0..4 {
            for pos in 0..4 {
                let id = permuted.buses[pos].id;
                assert_eq!(m.line_bus[l][pos], base.line_bus[l][id]);
                assert_eq!(m.angle_to_flow[l][pos], base.angle_to_flow[l][id]);
            }
        }
    }
}
