use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::PosTag;
use crate::seed::fnv1a;
use crate::{Error, Result};

const BUILTIN_POS: &str = include_str!("../../data/pos.tsv");
const BUILTIN_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");
const BUILTIN_HONORIFICS: &str = include_str!("../../data/honorifics.txt");
const BUILTIN_REPORTING_VERBS: &str = include_str!("../../data/reporting_verbs.txt");
const BUILTIN_FIRST_NAMES: &str = include_str!("../../data/first_names.txt");
const BUILTIN_PLACES: &str = include_str!("../../data/places.txt");

/// Identity of each loaded lexicon, recorded in output metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconIds {
    pub pos: String,
    pub subjectivity: String,
    pub concreteness: String,
    pub abbreviations: String,
    pub honorifics: String,
    pub reporting_verbs: String,
    pub first_names: String,
    pub places: String,
}

/// Word lists and scores used by the tagger, the name detector and the
/// lexical features. All keys are stored lowercased.
#[derive(Debug, Clone)]
pub struct Lexicons {
    pub pos: HashMap<String, PosTag>,
    pub subjectivity: HashMap<String, f64>,
    pub concreteness: HashMap<String, f64>,
    pub abbreviations: HashSet<String>,
    pub honorifics: HashSet<String>,
    pub reporting_verbs: HashSet<String>,
    pub first_names: HashSet<String>,
    pub places: HashSet<String>,
    pub ids: LexiconIds,
}

fn content_id(name: &str, content: &str) -> String {
    format!("{name}#{:016x}", fnv1a(content.as_bytes()))
}

fn data_lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_list(content: &str) -> HashSet<String> {
    data_lines(content).map(|(_, l)| l.to_lowercase()).collect()
}

fn parse_tsv<'a>(content: &'a str, name: &'a str) -> impl Iterator<Item = Result<(usize, String, &'a str)>> + 'a {
    data_lines(content).map(move |(line, l)| {
        let (word, value) = l.split_once('\t').ok_or_else(|| Error::InvalidLexicon {
            source_name: name.to_string(),
            line,
            detail: "expected word<TAB>value".into(),
        })?;
        Ok((line, word.trim().to_lowercase(), value.trim()))
    })
}

fn parse_scores(content: &str, name: &str, lo: f64, hi: f64) -> Result<HashMap<String, f64>> {
    let mut scores = HashMap::new();
    for entry in parse_tsv(content, name) {
        let (line, word, value) = entry?;
        let bad = |detail: String| Error::InvalidLexicon {
            source_name: name.to_string(),
            line,
            detail,
        };
        let score: f64 = value
            .parse()
            .map_err(|_| bad(format!("score {value:?} is not a number")))?;
        if !(lo..=hi).contains(&score) {
            return Err(bad(format!("score {score} outside [{lo}, {hi}]")));
        }
        scores.insert(word, score);
    }
    Ok(scores)
}

impl Lexicons {
    /// Empty lexicons: every lookup misses.
    pub fn empty() -> Lexicons {
        let none = "none".to_string();
        Lexicons {
            pos: HashMap::new(),
            subjectivity: HashMap::new(),
            concreteness: HashMap::new(),
            abbreviations: HashSet::new(),
            honorifics: HashSet::new(),
            reporting_verbs: HashSet::new(),
            first_names: HashSet::new(),
            places: HashSet::new(),
            ids: LexiconIds {
                pos: none.clone(),
                subjectivity: none.clone(),
                concreteness: none.clone(),
                abbreviations: none.clone(),
                honorifics: none.clone(),
                reporting_verbs: none.clone(),
                first_names: none.clone(),
                places: none,
            },
        }
    }

    /// The bundled closed-class POS lexicon and gazetteers. Subjectivity and
    /// concreteness ratings are not bundled and start empty.
    pub fn builtin() -> Lexicons {
        let mut lex = Lexicons::empty();
        lex.set_pos(BUILTIN_POS, "builtin:pos.tsv")
            .expect("bundled POS lexicon is valid");
        lex.abbreviations = parse_list(BUILTIN_ABBREVIATIONS);
        lex.honorifics = parse_list(BUILTIN_HONORIFICS);
        lex.reporting_verbs = parse_list(BUILTIN_REPORTING_VERBS);
        lex.first_names = parse_list(BUILTIN_FIRST_NAMES);
        lex.places = parse_list(BUILTIN_PLACES);
        lex.ids.abbreviations = content_id("builtin:abbreviations.txt", BUILTIN_ABBREVIATIONS);
        lex.ids.honorifics = content_id("builtin:honorifics.txt", BUILTIN_HONORIFICS);
        lex.ids.reporting_verbs = content_id("builtin:reporting_verbs.txt", BUILTIN_REPORTING_VERBS);
        lex.ids.first_names = content_id("builtin:first_names.txt", BUILTIN_FIRST_NAMES);
        lex.ids.places = content_id("builtin:places.txt", BUILTIN_PLACES);
        lex
    }

    /// Replaces the POS lexicon with `word<TAB>tag` lines.
    pub fn set_pos(&mut self, content: &str, name: &str) -> Result<()> {
        let mut pos = HashMap::new();
        for entry in parse_tsv(content, name) {
            let (line, word, value) = entry?;
            let tag: PosTag = value.parse().map_err(|_| Error::InvalidLexicon {
                source_name: name.to_string(),
                line,
                detail: format!("unknown tag {value:?}"),
            })?;
            pos.insert(word, tag);
        }
        self.pos = pos;
        self.ids.pos = content_id(name, content);
        Ok(())
    }

    /// Replaces subjectivity scores (`word<TAB>score`, score in [0, 1]).
    pub fn set_subjectivity(&mut self, content: &str, name: &str) -> Result<()> {
        self.subjectivity = parse_scores(content, name, 0.0, 1.0)?;
        self.ids.subjectivity = content_id(name, content);
        Ok(())
    }

    /// Replaces concreteness ratings (`word<TAB>rating`, rating in [1, 5]).
    pub fn set_concreteness(&mut self, content: &str, name: &str) -> Result<()> {
        self.concreteness = parse_scores(content, name, 1.0, 5.0)?;
        self.ids.concreteness = content_id(name, content);
        Ok(())
    }

    pub fn set_abbreviations(&mut self, content: &str, name: &str) {
        self.abbreviations = parse_list(content);
        self.ids.abbreviations = content_id(name, content);
    }

    pub fn set_honorifics(&mut self, content: &str, name: &str) {
        self.honorifics = parse_list(content);
        self.ids.honorifics = content_id(name, content);
    }

    pub fn set_reporting_verbs(&mut self, content: &str, name: &str) {
        self.reporting_verbs = parse_list(content);
        self.ids.reporting_verbs = content_id(name, content);
    }

    pub fn set_first_names(&mut self, content: &str, name: &str) {
        self.first_names = parse_list(content);
        self.ids.first_names = content_id(name, content);
    }

    pub fn set_places(&mut self, content: &str, name: &str) {
        self.places = parse_list(content);
        self.ids.places = content_id(name, content);
    }

    pub fn tag_of(&self, word: &str) -> Option<PosTag> {
        self.pos.get(&word.to_lowercase()).copied()
    }

    pub fn subjectivity_of(&self, word: &str) -> Option<f64> {
        self.subjectivity.get(&word.to_lowercase()).copied()
    }

    pub fn concreteness_of(&self, word: &str) -> Option<f64> {
        self.concreteness.get(&word.to_lowercase()).copied()
    }

    /// `word` followed by a period is a known abbreviation. Entries may be
    /// listed with or without their trailing period.
    pub fn is_abbreviation(&self, word: &str) -> bool {
        let lower = word.to_lowercase();
        self.abbreviations.contains(&format!("{lower}.")) || self.abbreviations.contains(&lower)
    }

    pub fn is_honorific(&self, word: &str) -> bool {
        self.honorifics.contains(&word.to_lowercase())
    }

    pub fn is_reporting_verb(&self, word: &str) -> bool {
        self.reporting_verbs.contains(&word.to_lowercase())
    }

    pub fn is_first_name(&self, word: &str) -> bool {
        self.first_names.contains(&word.to_lowercase())
    }

    pub fn is_place(&self, word: &str) -> bool {
        self.places.contains(&word.to_lowercase())
    }
}
