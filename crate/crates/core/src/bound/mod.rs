//! Error-event analysis on the reduced product graph: minimum distance,
//! multiplicity spectrum, distance profile and symbol-error upper bounds.

mod events;
mod graph;
mod profile;
mod spectrum;
mod transfer;

pub use events::{
    distance_to_merge, enumerate_error_events, min_distance, EnumerationCaps, ErrorEventTable, EventClass, EventKey,
};
pub use graph::{build_product_graph, quantize, ProductEdge, ProductGraph, ProductState, D2_QUANTUM};
pub use profile::{distance_profile, DistanceProfile};
pub use spectrum::{dmin_and_theta, error_spectrum, q_function, series_bound, DistanceSpectrum, LengthWeight, SpectrumTerm};
pub use transfer::{transfer_bound, TransferBound};

#[cfg(test)]
mod tests;
