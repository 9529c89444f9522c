use serde::{Deserialize, Serialize};

pub const DEFAULT_LEARNING_RATE: f64 = 5e-5;
pub const DEFAULT_NUM_EPOCH: u32 = 3;
pub const DEFAULT_PER_GPU_BATCH_SIZE: u32 = 4;
pub const DEFAULT_INPUT_MAX_TOKEN_LENGTH: u32 = 256;
pub const DEFAULT_GENERATION_LENGTH: u32 = 256;

/// Finetuning hyperparameters for an external trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecipe {
    pub author_id: String,
    pub train_data: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_data: Option<String>,
    pub learning_rate: f64,
    pub num_epoch: u32,
    pub per_gpu_batch_size: u32,
    pub input_max_token_length: u32,
    pub generation_length: u32,
    /// Names of the fields set by overrides rather than defaults.
    pub overridden: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecipeOverrides {
    pub learning_rate: Option<f64>,
    pub num_epoch: Option<u32>,
    pub per_gpu_batch_size: Option<u32>,
    pub input_max_token_length: Option<u32>,
    pub generation_length: Option<u32>,
}

pub fn emit_training_recipe(
    author_id: &str,
    train_data: &str,
    valid_data: Option<&str>,
    overrides: &RecipeOverrides,
) -> TrainingRecipe {
    let mut overridden = Vec::new();
    let mut pick = |name: &str, value: Option<u32>, default: u32| {
        if value.is_some() {
            overridden.push(name.to_string());
        }
        value.unwrap_or(default)
    };
    let num_epoch = pick("num_epoch", overrides.num_epoch, DEFAULT_NUM_EPOCH);
    let per_gpu_batch_size = pick(
        "per_gpu_batch_size",
        overrides.per_gpu_batch_size,
        DEFAULT_PER_GPU_BATCH_SIZE,
    );
    let input_max_token_length = pick(
        "input_max_token_length",
        overrides.input_max_token_length,
        DEFAULT_INPUT_MAX_TOKEN_LENGTH,
    );
    let generation_length = pick(
        "generation_length",
        overrides.generation_length,
        DEFAULT_GENERATION_LENGTH,
    );
    if overrides.learning_rate.is_some() {
        overridden.insert(0, "learning_rate".to_string());
    }
    TrainingRecipe {
        author_id: author_id.to_string(),
        train_data: train_data.to_string(),
        valid_data: valid_data.map(str::to_string),
        learning_rate: overrides.learning_rate.unwrap_or(DEFAULT_LEARNING_RATE),
        num_epoch,
        per_gpu_batch_size,
        input_max_token_length,
        generation_length,
        overridden,
    }
}

impl TrainingRecipe {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("recipe serializes");
        s.push('\n');
        s
    }
}
