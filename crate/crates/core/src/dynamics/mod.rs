//! Furstenberg measures, Lyapunov exponents, reflection cocycles, roof functions
//! and the arithmetic-set detector.

mod arithmetic;
mod cocycle;
mod furstenberg;
mod lyapunov;
mod roof;

pub use arithmetic::{
    arithmetic_set_detect, convergents, ArithmeticVerdict, Arithmeticity, PairRatio, DEFAULT_DENOM_BOUND, DEFAULT_TOL,
};
pub use cocycle::{reflection_cocycle, verify_polar_decomposition, PolarCheck, ProjectiveOrbit, Space, DEGENERATE_Y};
pub use furstenberg::{sample_furstenberg, FurstenbergKind, FurstenbergSample, FurstenbergSummary, BURN_IN, HISTOGRAM_BINS};
pub use lyapunov::{lyapunov_exponents, LyapunovEstimate, REORTHOGONALIZE_EVERY};
pub use roof::{
    cohomology_check, f_prime, fixed_point_identity, roof_function, theta_minus, transfer_function_u, CohomologyCheck,
    FixedPointCheck, Roof, RoofSample, TransferValue, TwoSidedWord,
};
