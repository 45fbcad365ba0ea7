//! Default parameters shared by the library entry points and the CLI.

/// Grid resolution for sets and measure pruning.
pub const EPS: f64 = 1.0 / 512.0;
/// Post-burn-in orbit length.
pub const STEPS: usize = 100_000;
/// Discarded leading orbit points.
pub const BURN_IN: usize = 1_000;
/// Successive-gap tolerance for measure iteration.
pub const TOL: f64 = 1e-3;
/// Fixed seed; runs are never seeded from the clock.
pub const SEED: u64 = 0x5EED_5EED;

/// Random window pairs drawn by `validate_system` and friends.
pub const VALIDATION_SAMPLES: usize = 10_000;
/// Largest word space a power system may enumerate.
pub const WORD_CAP: usize = 4096;
/// Largest number of `(map, cell tuple)` evaluations in one set step.
pub const TUPLE_BUDGET: u64 = 1 << 30;
/// Largest number of occupied cells any set iterate may hold.
pub const CELL_BUDGET: usize = 1 << 22;
/// Largest total grid size (bits) a [`crate::grid::GridSet`] may allocate.
pub const GRID_BITS_CAP: u64 = 1 << 30;
/// Largest unpruned atom count produced by a Markov step.
pub const ATOM_BUDGET: usize = 1 << 24;
/// Largest support (per side) the min-cost-flow transport accepts.
pub const TRANSPORT_CAP: usize = 512;
/// Iteration cap for set and measure fixed-point loops.
pub const MAX_ITER: usize = 500;

/// Tolerance on weight sums: `|Σ p_j − 1| ≤ SUM_TOL`.
pub const SUM_TOL: f64 = 1e-9;
/// Slack added to Lipschitz comparisons made on samples.
pub const LIP_SLACK: f64 = 1e-9;
