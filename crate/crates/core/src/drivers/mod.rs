//! Sample-path generators for the driving semimartingales.

mod markov;
mod mollified;
mod qwiener;
mod rng;

pub use markov::{markov_limit_covariance, simulate_markov_driver, MarkovDriverSpec};
pub use mollified::{simulate_mollified_noise, MollifiedNoiseSpec};
pub use qwiener::{simulate_qwiener, QWienerSpec};
pub use rng::{replicate_rng, StreamKind};
