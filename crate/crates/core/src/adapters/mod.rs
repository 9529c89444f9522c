//! Adapter artifacts: safetensors files, LoRA adapters and their merging,
//! loss masks for training data, and training recipes.

mod lora;
mod masking;
mod recipe;
pub mod safetensors;

pub use lora::{load_adapter, merge, AdapterConfig, LoraAdapter, LoraModule, Matrix, MergeSpec, TensorNaming};
pub use masking::{mask_labels, spans_from_mask, MaskedExample, Vocab, IGNORE_INDEX};
pub use recipe::{
    emit_training_recipe, RecipeOverrides, TrainingRecipe, DEFAULT_GENERATION_LENGTH, DEFAULT_INPUT_MAX_TOKEN_LENGTH,
    DEFAULT_LEARNING_RATE, DEFAULT_NUM_EPOCH, DEFAULT_PER_GPU_BATCH_SIZE,
};
pub use safetensors::{read_safetensors, write_safetensors, Dtype, Tensor, TensorFile};
