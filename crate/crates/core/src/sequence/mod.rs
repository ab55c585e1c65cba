//! Sequence schedule, fingerprint simulation, dictionary and compression bases.

mod compression;
mod dictionary;
mod epg;
mod schedule;

pub use compression::{autocal_basis, svd_compress, AutocalBasis, CompressionBasis};
pub use dictionary::{build_dictionary, Dictionary, TissueGrid};
pub use epg::{epg_fingerprint, EpgSimulator, DEFAULT_MAX_STATES};
pub use schedule::{make_schedule, SequenceSchedule};
