//! Reference interactions between a classical register `G` (factor 0) and a
//! quantum system `S` (factor 1).

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::{controlled_unitary_channel, Channel};
use crate::linalg::{self, c, kron, CMatrix, C64};
use crate::nogo::Condition;

/// Dimension of the superselected two-spin system used by the sector fixture.
pub const SECTOR_SYSTEM_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureId {
    EntanglingCnot,
    DecoheredCnot,
    SectorMeasurement,
    ControlledUnitary,
    Identity,
}

impl FixtureId {
    pub const ALL: [FixtureId; 5] = [
        FixtureId::EntanglingCnot,
        FixtureId::DecoheredCnot,
        FixtureId::SectorMeasurement,
        FixtureId::ControlledUnitary,
        FixtureId::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FixtureId::EntanglingCnot => "entangling-cnot",
            FixtureId::DecoheredCnot => "decohered-cnot",
            FixtureId::SectorMeasurement => "sector-measurement",
            FixtureId::ControlledUnitary => "controlled-unitary",
            FixtureId::Identity => "identity",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub id: FixtureId,
    pub description: &'static str,
    pub channel: Channel,
    /// Generators of the operator algebra of `S`.
    pub generators: Vec<CMatrix>,
    pub expected_violated: Vec<Condition>,
}

fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

fn hadamard() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)])
        * C64::new(FRAC_1_SQRT_2, 0.0)
}

fn qubit_generators() -> Vec<CMatrix> {
    vec![pauli_x(), pauli_z()]
}

/// `|g, s> -> |g XOR s, s>`: `S` controls, `G` is the target.
pub fn cnot_unitary() -> CMatrix {
    let mut u = linalg::zeros(4, 4);
    for g in 0..2 {
        for s in 0..2 {
            u[(((g ^ s) * 2) + s, g * 2 + s)] = C64::new(1.0, 0.0);
        }
    }
    u
}

pub fn entangling_cnot() -> Channel {
    Channel::unitary(vec![2, 2], cnot_unitary()).expect("CNOT is unitary")
}

/// CNOT followed by complete dephasing of `G`.
pub fn decohered_cnot() -> Channel {
    let dephase = Channel::dephasing(vec![2, 2], 0).expect("valid factor");
    Channel::compose(&dephase, &entangling_cnot()).expect("matching dims")
}

/// Columns: singlet, then the triplet `|00>`, `(|01> + |10>)/sqrt 2`, `|11>`.
pub fn singlet_triplet_basis() -> CMatrix {
    let h = FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    CMatrix::from_row_slice(
        4,
        4,
        &[
            z, c(1.0, 0.0), z, z, //
            c(h, 0.0), z, c(h, 0.0), z, //
            c(-h, 0.0), z, c(h, 0.0), z, //
            z, z, z, c(1.0, 0.0),
        ],
    )
}

/// Total spin components `(sigma_a (x) I + I (x) sigma_a) / 2` of two
/// spin-1/2 particles. They act as zero on the singlet and irreducibly on
/// the triplet.
pub fn total_spin_generators() -> Vec<CMatrix> {
    let i2 = linalg::identity(2);
    [pauli_x(), pauli_y(), pauli_z()]
        .iter()
        .map(|s| (kron(s, &i2) + kron(&i2, s)) * C64::new(0.5, 0.0))
        .collect()
}

/// `(rho_0 (+) rho_1) (x) |g><g| -> rho_0 (x) |g><g| (+) rho_1 (x) |g+1><g+1|`:
/// `G` is flipped iff `S` is in the triplet sector.
pub fn sector_measurement() -> Channel {
    let v = singlet_triplet_basis();
    let singlet = v.column(0).into_owned();
    let p0 = &singlet * singlet.adjoint();
    let p1 = linalg::identity(4) - &p0;
    let u = kron(&linalg::identity(2), &p0) + kron(&pauli_x(), &p1);
    Channel::unitary(vec![2, SECTOR_SYSTEM_DIM], u).expect("sector measurement is unitary")
}

/// `|0><0| (x) I + |1><1| (x) H`.
pub fn controlled_unitary() -> Channel {
    controlled_unitary_channel(vec![linalg::identity(2), hadamard()]).expect("unitary blocks")
}

pub fn fixtures() -> Vec<Fixture> {
    FixtureId::ALL
        .iter()
        .map(|&id| match id {
            FixtureId::EntanglingCnot => Fixture {
                id,
                description: "qubit S measured in Z by a quantum G through a CNOT",
                channel: entangling_cnot(),
                generators: qubit_generators(),
                expected_violated: vec![Condition::GClassical],
            },
            FixtureId::DecoheredCnot => Fixture {
                id,
                description: "qubit S measured in Z by a classical bit G through a decohered CNOT",
                channel: decohered_cnot(),
                generators: qubit_generators(),
                expected_violated: vec![Condition::Reversible],
            },
            FixtureId::SectorMeasurement => Fixture {
                id,
                description: "total-angular-momentum sector of two spin-1/2 read out by a classical bit",
                channel: sector_measurement(),
                generators: total_spin_generators(),
                expected_violated: vec![Condition::FullyNonclassical],
            },
            FixtureId::ControlledUnitary => Fixture {
                id,
                description: "classical bit G controls a Hadamard on S; no back-reaction",
                channel: controlled_unitary(),
                generators: qubit_generators(),
                expected_violated: vec![Condition::Signalling],
            },
            FixtureId::Identity => Fixture {
                id,
                description: "no interaction",
                channel: Channel::identity(vec![2, 2]).expect("valid dims"),
                generators: qubit_generators(),
                expected_violated: vec![Condition::Signalling],
            },
        })
        .collect()
}
