//! Criterion checks, witness selection and the explicit vector construction.

mod ak;
mod check;
mod construct;
mod cover;
mod dense;
mod diagnostics;
pub mod gamma;
mod subseq;
mod witness;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use ak::{gen_ak_sequence, AkSequence, AK_MAX};
pub use check::{check_criterion, CertificateRow, CriterionOptions, CriterionReport, Verdict, VectorReport};
pub use construct::{
    construct_hypercyclic_vector, ConstructOptions, ConstructionPlan, LevelChecks, LevelResidual, OrbitPoint, SeriesEval, SeriesTerm,
    SeriesVector,
};
pub use cover::{cover_gamma, cover_radius, CellMembers, CoverCell};
pub use dense::DenseSequence;
pub use diagnostics::{
    gamma_diagnostics, weight_series_check, GammaDiagnostics, NullSequenceReport, SeriesClass, SeriesReport, SeriesSide,
    WeightSeriesReport, MAX_SERIES_TERMS,
};
pub use gamma::{pow2_scalar, GammaSpec};
pub use subseq::{extract_exponential_subsequence, extract_ln, Extraction};
pub use witness::{select_gamma_witnesses, GammaSequence, WitnessSelection, MAX_WITNESSES};

/// The four displayed inequalities that the level-by-level choice of
/// schedule indices must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Inequality {
    /// Forward-sum tail of every earlier target on `[k_l, inf)`.
    Tail,
    /// Cross terms of the current target seen from any schedule point.
    SelfCross,
    /// Cross terms of earlier targets seen from the current schedule.
    EarlierCross,
    /// `||T^q S^q y - y||`.
    Inverse,
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Inequality::Tail => "tail",
            Inequality::SelfCross => "self-cross",
            Inequality::EarlierCross => "earlier-cross",
            Inequality::Inverse => "inverse",
        };
        f.write_str(s)
    }
}
