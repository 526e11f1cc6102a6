//! Synthesis-route tooling around a retrosynthesis language model: route
//! and training-pair generation, response benchmarks, per-slot
//! building-block indexes, route reconstruction and the inference client.

pub mod compat;
pub mod index;
pub mod library;
pub mod llm;
pub mod reconstruct;
pub mod response;
pub mod route;
pub mod templates;
pub mod tokenize;
pub mod validate;

pub use compat::{compatible_bbs, CompatibilityTable};
pub use index::{Hit, IndexError, IndexSet, SlotIndex};
pub use library::{BuildingBlockLibrary, LibraryError};
pub use reconstruct::{reconstruct, ReconContext, ReconstructionConfig, ReconstructionResult};
pub use response::{parse_response, LlmResponse, ResponseStep};
pub use route::{GeneratorConfig, PromptResponsePair, RouteGenerator, RouteShape, SynthesisRoute};
pub use templates::{TemplateError, TemplateSet};
pub use validate::{benchmark_corpus, BenchmarkReport};
