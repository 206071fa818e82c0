//! Generation experiments: prompts, example selection, provider calls and
//! run persistence.

pub mod examples;
pub mod prompt;
pub mod provider;
pub mod run;

pub use examples::{select_examples, ExampleSelection, ExampleSelectionError};
pub use prompt::{build_io_spec, build_prompt, Condition, IoSpecification, Prompt, TEMPLATE_VERSION};
pub use provider::{
    request_generation, EchoExampleTransport, FixedTransport, Generation, ProviderConfig, ProviderError,
    ScriptedTransport, Transport, TransportError, UreqTransport,
};
pub use run::{
    parse_generation, run_experiment, ExperimentOptions, ExperimentOutcome, ParseFailure, RunKey, RunRecord, Validity,
};
