//! S-machine workbench: free-group words, S-machines, the adding machine,
//! the composition S∘Z, group presentations and bound analysis.

pub mod adding;
pub mod analysis;
pub mod composition;
pub mod machine;
pub mod presentation;
pub mod word;

pub use machine::{AdmissibleWord, Computation, Hardware, Machine, RuleId, SRule};
pub use word::{GroupWord, Letter, LetterId, LetterKind, SignedLetter};
