//! Raw text to normalized tokens: alphabetic-run tokenization, stopword
//! removal, then lexicon lemmatization, in that order.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");
const ENGLISH_LEMMAS: &str = include_str!("../data/lemmas_en.tsv");

/// A non-empty run of alphabetic characters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Token(String);

impl Token {
    /// Returns `None` unless `s` is non-empty and entirely alphabetic.
    pub fn new(s: impl Into<String>) -> Option<Self> {
        let s = s.into();
        if is_token_text(&s) {
            Some(Token(s))
        } else {
            None
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

fn is_token_text(s: &str) -> bool {
    !s.is_empty() && s.chars().all(char::is_alphabetic)
}

impl TryFrom<String> for Token {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        Token::new(s.clone()).ok_or_else(|| format!("not a token: {s:?}"))
    }
}

impl From<Token> for String {
    fn from(t: Token) -> String {
        t.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PreprocessConfig {
    pub lowercase: bool,
    pub min_token_length: usize,
    /// `None` selects the bundled English list.
    pub stopword_path: Option<PathBuf>,
    /// `None` selects the bundled English lexicon.
    pub lexicon_path: Option<PathBuf>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            lowercase: true,
            min_token_length: 2,
            stopword_path: None,
            lexicon_path: None,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_token_length == 0 {
            return Err(Error::Config("min_token_length must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct StopwordList {
    entries: HashSet<String>,
}

impl StopwordList {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopwordList {
            entries: words
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    /// One word per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        Self::from_words(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    /// The NLTK English list.
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Surface form to lemma lookup table. Every lemma is a valid token and is
/// never itself remapped, so lemmatizing twice equals lemmatizing once.
#[derive(Clone, Debug, Default)]
pub struct LemmaLexicon {
    map: HashMap<String, Token>,
}

impl LemmaLexicon {
    pub fn from_pairs<I, A, B>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: AsRef<str>,
        B: AsRef<str>,
    {
        let mut map = HashMap::new();
        for (i, (surface, lemma)) in pairs.into_iter().enumerate() {
            insert_entry(&mut map, surface.as_ref(), lemma.as_ref())
                .map_err(|reason| lexicon_error(Path::new("<inline>"), i + 1, reason))?;
        }
        Self::checked(map, Path::new("<inline>"))
    }

    /// `surface<TAB>lemma` per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, lemma) = line
                .split_once('\t')
                .ok_or_else(|| lexicon_error(origin, i + 1, "expected surface<TAB>lemma".into()))?;
            insert_entry(&mut map, surface.trim(), lemma.trim())
                .map_err(|reason| lexicon_error(origin, i + 1, reason))?;
        }
        Self::checked(map, origin)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Small English lexicon of plural and verb inflections.
    pub fn english() -> Self {
        Self::parse(ENGLISH_LEMMAS, Path::new("<bundled lemmas_en.tsv>"))
            .expect("bundled lexicon is well formed")
    }

    pub fn get(&self, surface: &str) -> Option<&Token> {
        self.map.get(surface)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn checked(map: HashMap<String, Token>, origin: &Path) -> Result<Self> {
        let mut chained: Vec<_> = map
            .iter()
            .filter(|(_, lemma)| map.get(lemma.as_str()).is_some_and(|l| l != *lemma))
            .map(|(surface, lemma)| format!("{surface} -> {lemma}"))
            .collect();
        if !chained.is_empty() {
            chained.sort();
            return Err(Error::BadLexicon {
                path: origin.to_path_buf(),
                line: 0,
                reason: format!("lemma is itself remapped: {}", chained.join(", ")),
            });
        }
        Ok(LemmaLexicon { map })
    }
}

fn insert_entry(
    map: &mut HashMap<String, Token>,
    surface: &str,
    lemma: &str,
) -> std::result::Result<(), String> {
    let surface = surface.to_lowercase();
    if !is_token_text(&surface) {
        return Err(format!("surface form {surface:?} is not alphabetic"));
    }
    let lemma = Token::new(lemma.to_lowercase())
        .ok_or_else(|| format!("lemma {lemma:?} is not alphabetic"))?;
    map.entry(surface).or_insert(lemma);
    Ok(())
}

fn lexicon_error(path: &Path, line: usize, reason: String) -> Error {
    Error::BadLexicon {
        path: path.to_path_buf(),
        line,
        reason,
    }
}

/// Maximal runs of alphabetic characters, lowercased when configured, shorter
/// than `min_token_length` characters dropped.
pub fn tokenize(raw: &str, config: &PreprocessConfig) -> Vec<Token> {
    raw.split(|c: char| !c.is_alphabetic())
        .filter(|run| !run.is_empty())
        .filter_map(|run| {
            let surface = if config.lowercase {
                // Some uppercase letters lowercase to a letter plus a combining mark.
                run.to_lowercase()
                    .chars()
                    .filter(|c| c.is_alphabetic())
                    .collect()
            } else {
                run.to_string()
            };
            (surface.chars().count() >= config.min_token_length).then_some(Token(surface))
        })
        .filter(|t| !t.0.is_empty())
        .collect()
}

/// Drops tokens whose lowercased surface is a stopword.
pub fn remove_stopwords(tokens: Vec<Token>, stops: &StopwordList) -> Vec<Token> {
    tokens
        .into_iter()
        .filter(|t| {
            if t.0.chars().any(char::is_uppercase) {
                !stops.contains(&t.0.to_lowercase())
            } else {
                !stops.contains(&t.0)
            }
        })
        .collect()
}

pub fn lemmatize(token: Token, lexicon: &LemmaLexicon) -> Token {
    match lexicon.get(token.as_str()) {
        Some(lemma) => lemma.clone(),
        None => token,
    }
}

/// Everything needed to preprocess text, loaded once.
#[derive(Clone, Debug)]
pub struct Preprocessor {
    pub config: PreprocessConfig,
    pub stops: StopwordList,
    pub lexicon: LemmaLexicon,
}

impl Preprocessor {
    pub fn new(
        config: PreprocessConfig,
        stops: StopwordList,
        lexicon: LemmaLexicon,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Preprocessor {
            config,
            stops,
            lexicon,
        })
    }

    /// Loads the stopword list and lexicon named by `config`, falling back to
    /// the bundled English resources.
    pub fn from_config(config: PreprocessConfig) -> Result<Self> {
        let stops = match &config.stopword_path {
            Some(p) => StopwordList::load(p)?,
            None => StopwordList::english(),
        };
        let lexicon = match &config.lexicon_path {
            Some(p) => LemmaLexicon::load(p)?,
            None => LemmaLexicon::english(),
        };
        Self::new(config, stops, lexicon)
    }

    pub fn run(&self, raw: &str) -> Vec<Token> {
        preprocess(raw, &self.config, &self.stops, &self.lexicon)
    }
}

pub fn preprocess(
    raw: &str,
    config: &PreprocessConfig,
    stops: &StopwordList,
    lexicon: &LemmaLexicon,
) -> Vec<Token> {
    remove_stopwords(tokenize(raw, config), stops)
        .into_iter()
        .map(|t| lemmatize(t, lexicon))
        .collect()
}
