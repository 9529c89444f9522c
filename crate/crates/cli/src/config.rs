use std::path::{Path, PathBuf};

use anyhow::Context as _;
use idiolect::corpus::TokenizerScheme;
use serde::{Deserialize, Serialize};

use crate::input_error;

/// Paths to replacement lexicon files; unset entries use the bundled data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconPaths {
    pub pos: Option<PathBuf>,
    pub subjectivity: Option<PathBuf>,
    pub concreteness: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub honorifics: Option<PathBuf>,
    pub reporting_verbs: Option<PathBuf>,
    pub first_names: Option<PathBuf>,
    pub places: Option<PathBuf>,
}

impl LexiconPaths {
    fn all(&self) -> [&Option<PathBuf>; 8] {
        [
            &self.pos,
            &self.subjectivity,
            &self.concreteness,
            &self.abbreviations,
            &self.honorifics,
            &self.reporting_verbs,
            &self.first_names,
            &self.places,
        ]
    }

    /// Fields set here replace those of `base`.
    pub fn overlay(&self, base: &LexiconPaths) -> LexiconPaths {
        let pick = |a: &Option<PathBuf>, b: &Option<PathBuf>| a.clone().or_else(|| b.clone());
        LexiconPaths {
            pos: pick(&self.pos, &base.pos),
            subjectivity: pick(&self.subjectivity, &base.subjectivity),
            concreteness: pick(&self.concreteness, &base.concreteness),
            abbreviations: pick(&self.abbreviations, &base.abbreviations),
            honorifics: pick(&self.honorifics, &base.honorifics),
            reporting_verbs: pick(&self.reporting_verbs, &base.reporting_verbs),
            first_names: pick(&self.first_names, &base.first_names),
            places: pick(&self.places, &base.places),
        }
    }
}

/// JSON run configuration. Every field is optional and mirrors a flag.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub tokenizer: Option<TokenizerScheme>,
    pub token_sidecars: Option<PathBuf>,
    pub chunk_size: Option<usize>,
    pub lexicons: LexiconPaths,
    pub annotations: Option<PathBuf>,
    pub chunks: Option<PathBuf>,
    pub generations: Option<PathBuf>,
    pub reference_profiles: Option<PathBuf>,
    pub generation_profiles: Option<PathBuf>,
    pub reference_embeddings: Option<PathBuf>,
    pub generation_embeddings: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub nll: Vec<PathBuf>,
    pub names: Option<PathBuf>,
    pub adapters: Vec<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    /// Every referenced path must exist.
    pub fn validate(&self) -> anyhow::Result<()> {
        let singles = [
            &self.corpus,
            &self.token_sidecars,
            &self.annotations,
            &self.chunks,
            &self.generations,
            &self.reference_profiles,
            &self.generation_profiles,
            &self.reference_embeddings,
            &self.generation_embeddings,
            &self.predictions,
            &self.names,
        ];
        let paths = singles
            .into_iter()
            .chain(self.lexicons.all())
            .flatten()
            .chain(&self.nll)
            .chain(&self.adapters);
        for path in paths {
            if !path.exists() {
                return Err(input_error(format!(
                    "config references missing path {}",
                    path.display()
                )));
            }
        }
        if self.chunk_size == Some(0) {
            return Err(input_error("chunk_size must be positive"));
        }
        Ok(())
    }
}
