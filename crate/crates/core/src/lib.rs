pub mod rng;
pub mod sde;
pub mod dataset;
pub mod features;
pub mod learners;
pub mod metrics;
pub mod incidence;
pub mod io;
pub mod pipeline;
