//! Exact probabilities of one synchronous round.

mod envelopes;
mod hmajority;
mod law;
mod moments;
mod symmetric;

pub use envelopes::{birthday_envelope, race_ratio_envelope, BirthdayEnvelope, RatioEnvelope};
pub use hmajority::{hmajority_law, HMajorityLaw, MAX_COMPOSITIONS};
pub use law::{
    adoption_cells, adoption_profile, adoption_profile_from_densities, h_distribution,
    AdoptionCells, AdoptionProfile, HDistribution,
};
pub use moments::{expected_next, second_moment_next, SecondMoment};
pub use symmetric::{symmetric_excluding, SymmetricTable, LOG_DOMAIN_DEGREE};
