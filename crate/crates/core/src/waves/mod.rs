//! Traveling-wave construction for the memory-free and the full system.

pub mod branches;
pub mod full;
pub mod tuples;

pub use branches::{invert_on_branch, jump_partner, jump_partner_in, reachability_set, Branch, BranchMap, Fold};
pub use full::{
    closed_form_wave, construct_admissible_wave, full_rhs_p, generic_wave, shooting_wave, wave_bounds, AdmissibleWave,
    ConstructionPath, JumpPoint, StepShape, WaveBounds, WaveRequest, WaveSegment,
};
pub use tuples::{
    antisymmetric_pair, antisymmetry_defect, find_stable_tuples, heteroclinic_check, lambda_matched_pairs, orbit_energy,
    stable_pairs, MatchedPair, OrbitOutcome, PhaseOrbit, WaveTuple,
};
