//! Generalized iterated function systems: maps on `X^m → X`, their extension
//! to `X^m`, attractors on grids, Hutchinson measures, and chaos-game orbits.

pub mod defaults;
pub mod ergodic;
pub mod error;
pub mod examples;
pub mod extension;
pub mod fde;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod measure;
pub mod orbit;
pub mod schema;
pub mod sets;
pub mod system;
pub mod transport;
pub mod validate;
pub mod weights;

pub use ergodic::{
    ergodic_average, extended_ergodic_average, holonomic_defect, visitation_frequency, ErgodicReport, Region,
};
pub use error::{Error, Result};
pub use extension::{build_extension, certify_contractivity, power_system, ExtendedIfs, PowerSystem};
pub use fde::{closed_form_orbit, coefficients, compile_fde, iterate_fde, CompiledFde, FdeSpec, LinearOrder2, Rhs};
pub use geometry::Bounds;
pub use grid::{hausdorff_distance, GridSet};
pub use measure::{
    extended_markov_step, iterate_extended_measure, iterate_measure, markov_step, DiscreteMeasure, PruneRule,
};
pub use orbit::{chaos_ensemble, chaos_orbit, orbit_closure, History, Orbit, OrbitStream};
pub use schema::{load_system, parse_system, LoadedSystem, SystemSpec};
pub use sets::{extended_step, hutchinson_step, iterate_attractor, iterate_extended_attractor};
pub use system::{GifsMap, GifsSystem};
pub use transport::{wasserstein, Transport, TransportPlan};
pub use validate::{validate_system, ValidationReport};
pub use weights::WeightSystem;
