use crate::error::Result;
use crate::model::{GrowthLaw, RateFunction};

use super::RngStream;

/// Lifetime with survival `exp(-int_0^a B)` obtained from the uniform `u`.
pub fn lifetime_from_uniform(rate: &RateFunction, u: f64) -> Result<f64> {
    rate.invert_hazard(0.0, -u.ln())
}

/// Division size `chi >= birth_size` with survival `exp(-int_xi^chi B)`.
pub fn division_size_from_uniform(rate: &RateFunction, birth_size: f64, u: f64) -> Result<f64> {
    rate.invert_hazard(birth_size, -u.ln())
}

/// Size added between birth and division, with survival `exp(-int_0^z B)`.
pub fn increment_from_uniform(rate: &RateFunction, u: f64) -> Result<f64> {
    rate.invert_hazard(0.0, -u.ln())
}

pub fn sample_lifetime_age(rate: &RateFunction, rng: &mut RngStream) -> Result<f64> {
    rate.invert_hazard(0.0, rng.exponential())
}

pub fn sample_division_size(rate: &RateFunction, birth_size: f64, rng: &mut RngStream) -> Result<f64> {
    rate.invert_hazard(birth_size, rng.exponential())
}

pub fn sample_increment(rate: &RateFunction, rng: &mut RngStream) -> Result<f64> {
    rate.invert_hazard(0.0, rng.exponential())
}

/// Time needed to grow from `birth_size` by `increment`.
pub fn increment_lifetime(growth: &GrowthLaw, birth_size: f64, increment: f64) -> f64 {
    growth.flow_time(birth_size, birth_size + increment)
}
