//! Localization, counting and entropy bounds, and the final free-energy
//! ledger that combines them.

pub mod counting;
pub mod ledger;
pub mod sandwich;

pub use counting::{
    box_count_bound, calibrate_kappa, count_constant, entropy_bound, ground_state_count, ground_state_sum,
    occupation_table, OccupationRow, OccupationTable,
    kinetic_lower_bound, max_occupation, min_c_eta, mu_opt_bound, mu_opt_constant, shell_series, tail_condition,
    tail_sum_bound, weyl_count_constant, MaxOccupation, MuScan, TailCondition, TailSumReport,
};
pub use ledger::{
    assemble_ledger, cutoff_scale, delta_estimate, headline_deficit, ideal_box_side, BoundLedger, DeltaEstimate,
    LedgerConstants,
};
pub use sandwich::{
    norm_sandwich_check, random_instance, Polynomial, ProductState, SandwichInstance, SandwichOptions, SandwichReport,
};
