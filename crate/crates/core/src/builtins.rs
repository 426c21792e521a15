//! Named states and devices.

use crate::devices::Device;
use crate::error::{Error, Result};
use crate::quantum::PureState;

pub const STATE_NAMES: [&str; 4] = ["EPR", "GHZ", "O2", "K"];
pub const DEVICE_NAMES: [&str; 4] = ["EPR", "EPR2", "GHZ", "K"];

/// Named pure states, all on qubits.
pub fn state(name: &str) -> Result<PureState> {
    match name {
        "EPR" => PureState::from_real(vec![2, 2], &[1.0, 0.0, 0.0, 1.0]),
        "GHZ" => PureState::from_real(vec![2; 3], &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
        "O2" => PureState::from_real(vec![2; 3], &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, -0.5]),
        "K" => PureState::from_real(vec![2; 3], &[0.0, -1.0, -1.0, 0.0, -1.0, 0.0, 0.0, 1.0]),
        other => Err(Error::domain(format!(
            "unknown builtin state '{other}' (known: {})",
            STATE_NAMES.join(", ")
        ))),
    }
}

fn bit_labels(n: usize) -> Vec<Vec<String>> {
    vec![vec!["0".to_string(), "1".to_string()]; n]
}

fn all(k: usize) -> Vec<Vec<usize>> {
    (0..1usize << k)
        .map(|r| (0..k).map(|i| r >> (k - 1 - i) & 1).collect())
        .collect()
}

fn tuples(codes: &[&str]) -> Vec<Vec<usize>> {
    codes
        .iter()
        .map(|c| c.bytes().map(|b| usize::from(b - b'0')).collect())
        .collect()
}

/// Named devices with answers coded by `-1 ↦ 0`, `+1 ↦ 1`.
pub fn device(name: &str) -> Result<Device> {
    match name {
        "EPR" => Device::from_fn(vec![vec!["*".to_string()]; 2], bit_labels(2), |_| {
            tuples(&["00", "11"])
        }),
        "EPR2" => Device::from_fn(bit_labels(2), bit_labels(2), |q| {
            if q[0] == q[1] {
                tuples(&["00", "11"])
            } else {
                all(2)
            }
        }),
        "GHZ" => Device::from_fn(bit_labels(3), bit_labels(3), |q| {
            let xs: Vec<usize> = (0..3).filter(|&i| q[i] == 1).collect();
            match xs.len() {
                0 => tuples(&["000", "111"]),
                // Z sites agree, the X site is free
                1 => all(3)
                    .into_iter()
                    .filter(|r| {
                        let zs: Vec<usize> = (0..3).filter(|&i| i != xs[0]).map(|i| r[i]).collect();
                        zs[0] == zs[1]
                    })
                    .collect(),
                _ => all(3),
            }
        }),
        "K" => Device::from_fn(bit_labels(3), bit_labels(3), |q| match q {
            [1, 1, 1] => tuples(&["001", "010", "100", "111"]),
            [0, 0, 1] | [0, 1, 0] | [1, 0, 0] => tuples(&["000", "011", "101", "110"]),
            _ => all(3),
        }),
        other => Err(Error::domain(format!(
            "unknown builtin device '{other}' (known: {})",
            DEVICE_NAMES.join(", ")
        ))),
    }
}
