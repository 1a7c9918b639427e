//! Closed-form layer: constants, constant solutions, condition checkers and
//! verification suites.

pub mod conditions;
pub mod constants;
pub mod estimates;
pub mod families;
pub mod report;
pub mod suites;

pub use conditions::{beta_underbar, check_conditions, tent_level_bound, ConditionFlags, ConditionInputs};
pub use constants::{bubble_integrals, constants_kqkm, k_q, k_q_quadrature, s_infinity_beta, sobolev_s, BallConstants};
pub use estimates::{beta_star_estimate, phi_value, sobolev_constant_cs, BetaStarEstimate};
pub use report::{auto_select_method, classify_regime, ClassifyOptions, MethodChoice, RegimeReport, SplitCounts};
pub use families::{constant_energy, constant_solutions, ConstantFamily, FamilyKind};
pub use suites::{bubble_suite, fit_exponents, quintic_cutoff, tent_suite, BubbleRecord, ExponentFit, ScalingCheck, TentRecord};
