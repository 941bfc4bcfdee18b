//! Few-shot semantic role labeling with text-completion models.
//!
//! The pipeline runs in four stages for every marked predicate: pick a sense from the frame
//! files by multiple choice ([`prompting::build_sense_prompt`]), collect the roles of that
//! sense ([`framebank::FrameBank::retrieve_roles`]), ask for a role-to-argument JSON object
//! ([`prompting::build_label_prompt`], [`extraction::parse_argument_json`]) and ground each
//! argument in the sentence by fuzzy matching ([`matcher::ground_prediction`]).
//! [`runner`] wires the stages to a completion [`gateway`] and scores the result with
//! [`evaluation`].

pub mod corpus;
pub mod evaluation;
pub mod extraction;
pub mod framebank;
pub mod gateway;
pub mod matcher;
pub mod prompting;
pub mod runner;

pub use corpus::{ArgumentSpan, Corpus, PredicateInstance, RoleLabel, Sentence};
pub use evaluation::{EvalReport, ScoredTuple};
pub use extraction::RawPrediction;
pub use framebank::{FrameBank, NonCoreInventory, Roleset};
pub use matcher::{MatchParams, MatchResult, Prediction};
pub use prompting::{PromptBundle, PromptVariant};
