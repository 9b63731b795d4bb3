//! Post-processing: wave speeds, comoving profiles, profile comparison,
//! plateau extraction and figure data.

pub mod compare;
pub mod figures;
pub mod plateau;
pub mod speed;

pub use compare::{aligned_distance, compare_profiles, jump_positions, l1_distance, wave_for_measurement, ComparisonReport};
pub use figures::{figure_config, reproduce_figure, FigureId, FigureOutput};
pub use plateau::{extract_plateaus, plateau_mismatch, PlateauFit};
pub use speed::{circular_shift, measure_wave_speed, shift_profile, Field, WaveMeasurement};
