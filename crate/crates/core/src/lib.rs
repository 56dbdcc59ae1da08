//! Fermionic Fock-space toolkit for building Deutsch-Hayden representations
//! of a three-particle spin system and checking their operator identities.
//!
//! Continuum fields are reduced to a finite set of modes: six physical
//! (spin × region) wavepacket modes, three auxiliary modes and optional probe
//! modes orthogonal to every packet.

pub mod dhrep;
pub mod error;
pub mod expm;
pub mod fock;
pub mod model;
pub mod qubit;
pub mod sparse;
pub mod wavepackets;

pub use dhrep::{
    build_entangled_transform, build_unentangled_transform, conjugate, field_section, locality_report,
    noaux_locality_report, noaux_transform, removal_generator, vacuum_action, DhFactorParams, DhFlavor, DhTransform,
    FieldSection, LocalityReport, NoAuxReport, NoAuxSetup, Provenance, SpinFrame,
};
pub use error::{Error, Result};
pub use fock::{
    algebra, annihilator, creator, expectation, matrix_exponential, mode_operator, normalized_distance,
    number_operator, operator_distance, vacuum_state, AlgebraKind, FockOperator, FockState, ModeLabel, ModeRegistry,
    Region, Spin,
};
pub use model::{
    build_state, direction_grid, entangling_generator, evolve, localized_spin_operator, rotated_creator,
    spin_correlation, spin_expectation, OccupationDescriptor, Order, SpinDirection, SpinVectors, SystemConfig,
};
pub use sparse::CsrMatrix;
pub use wavepackets::{
    aperture_report, build_aperture, gaussian_packet, inner, wsw_report, ApertureFunction, Grid, GridFunction,
    LayoutSpec, PacketLayout,
};
