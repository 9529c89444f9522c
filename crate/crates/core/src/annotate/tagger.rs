use super::{Lexicons, PosTag};

/// Suffix rules, tried in order on the lowercased word. A rule only fires
/// when at least three characters remain before the suffix.
const SUFFIX_RULES: &[(&str, PosTag)] = &[
    ("ly", PosTag::Adv),
    ("ness", PosTag::Noun),
    ("tion", PosTag::Noun),
    ("sion", PosTag::Noun),
    ("ment", PosTag::Noun),
    ("ity", PosTag::Noun),
    ("ship", PosTag::Noun),
    ("ism", PosTag::Noun),
    ("ance", PosTag::Noun),
    ("ence", PosTag::Noun),
    ("ous", PosTag::Adj),
    ("ful", PosTag::Adj),
    ("less", PosTag::Adj),
    ("able", PosTag::Adj),
    ("ible", PosTag::Adj),
    ("ive", PosTag::Adj),
    ("ical", PosTag::Adj),
    ("ish", PosTag::Adj),
    ("ing", PosTag::Verb),
    ("ed", PosTag::Verb),
    ("ize", PosTag::Verb),
    ("ise", PosTag::Verb),
    ("ify", PosTag::Verb),
];

const MIN_STEM: usize = 3;

fn is_opening_quote(token: &str) -> bool {
    matches!(token, "\"" | "'" | "\u{201c}" | "\u{2018}" | "(" | "[")
}

fn suffix_tag(word: &str) -> Option<PosTag> {
    let lower = word.to_lowercase();
    SUFFIX_RULES
        .iter()
        .find(|(suffix, _)| lower.ends_with(suffix) && lower.chars().count() >= suffix.chars().count() + MIN_STEM)
        .map(|&(_, tag)| tag)
}

/// Tags one sentence with the ordered rule table:
///
/// 1. no alphanumeric character → PUNCT
/// 2. POS lexicon hit (case-folded) → lexicon tag, except that a
///    capitalized, non-initial hit on an open-class tag (NOUN, VERB, ADJ,
///    ADV) becomes PROPN (`Bingo Little`, `Will`)
/// 3. capitalized first-name or place gazetteer hit → PROPN
/// 4. numeric → OTHER
/// 5. capitalized and not sentence-initial → PROPN
/// 6. suffix rules (`-ly` ADV, `-ness`/`-tion`/… NOUN, `-ous`/`-ful`/… ADJ,
///    `-ing`/`-ed`/… VERB)
/// 7. otherwise OTHER
///
/// A token is sentence-initial when no word precedes it in the sentence or
/// it directly follows an opening quote or bracket.
pub fn pos_tag<S: AsRef<str>>(tokens: &[S], lexicons: &Lexicons) -> Vec<PosTag> {
    let mut tags = Vec::with_capacity(tokens.len());
    let mut seen_word = false;
    for (i, token) in tokens.iter().enumerate() {
        let token = token.as_ref();
        if !token.chars().any(char::is_alphanumeric) {
            tags.push(PosTag::Punct);
            continue;
        }
        let initial = !seen_word || (i > 0 && is_opening_quote(tokens[i - 1].as_ref()));
        seen_word = true;
        let capitalized = token.chars().next().is_some_and(char::is_uppercase);

        let tag = if let Some(tag) = lexicons.tag_of(token) {
            let open_class = matches!(tag, PosTag::Noun | PosTag::Verb | PosTag::Adj | PosTag::Adv);
            if capitalized && !initial && open_class {
                PosTag::Propn
            } else {
                tag
            }
        } else if capitalized && (lexicons.is_first_name(token) || lexicons.is_place(token)) {
            PosTag::Propn
        } else if token.chars().all(|c| c.is_numeric() || c == '.' || c == ',') {
            PosTag::Other
        } else if capitalized && !initial {
            PosTag::Propn
        } else {
            suffix_tag(token).unwrap_or(PosTag::Other)
        };
        tags.push(tag);
    }
    tags
}
