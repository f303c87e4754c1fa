//! Tokenizer, prompt templates and the small causal language model.

pub mod checkpoint;
pub mod encode;
pub mod gradcheck;
pub mod model;
pub mod pretrain;
pub mod prompt;
pub mod tokenizer;
pub mod trace;

pub use checkpoint::{load_backbone, save_backbone, BackboneSidecar};
pub use encode::{encode_prompt, encode_target};
pub use model::{teacher_forced, Activations, BackboneLm, ModelDims, Params, SteerSite, TokenTarget};
pub use pretrain::{pretrain, AdamConfig, LmExample, PretrainOutcome};
pub use prompt::{PromptTemplate, TemplateMode};
pub use tokenizer::{build_vocab, Tokenizer, BOS, EOS, PAD};
pub use trace::{trace_window, DistributionTrace};
