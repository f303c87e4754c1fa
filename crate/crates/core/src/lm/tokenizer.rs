//! Greedy longest-match tokenizer with byte fallback.
//!
//! Id layout: `0..3` specials (`<pad>`, `<bos>`, `<eos>`), `3..259` raw
//! bytes, then text pieces. Any string tokenizes: characters with no matching
//! piece are emitted as their UTF-8 bytes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
const BYTE_BASE: u32 = 3;
const FIRST_PIECE: u32 = BYTE_BASE + 256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tokenizer {
    pieces: Vec<String>,
    index: HashMap<String, u32>,
    max_piece_chars: usize,
}

/// JSON sidecar layout.
#[derive(Serialize, Deserialize)]
struct VocabFile {
    specials: Vec<String>,
    byte_fallback: usize,
    pieces: Vec<String>,
}

impl Tokenizer {
    /// Builds a tokenizer over the given text pieces (ids assigned in order).
    pub fn from_pieces(pieces: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(pieces.len());
        let mut max_piece_chars = 0;
        for (i, p) in pieces.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::Invalid("empty vocabulary piece".into()));
            }
            if index.insert(p.clone(), FIRST_PIECE + i as u32).is_some() {
                return Err(Error::Invalid(format!("duplicate vocabulary piece {p:?}")));
            }
            max_piece_chars = max_piece_chars.max(p.chars().count());
        }
        Ok(Tokenizer {
            pieces,
            index,
            max_piece_chars,
        })
    }

    pub fn vocab_size(&self) -> usize {
        FIRST_PIECE as usize + self.pieces.len()
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    pub fn piece_id(&self, piece: &str) -> Option<u32> {
        self.index.get(piece).copied()
    }

    /// Human-readable token, `<0xNN>` for byte fallbacks.
    pub fn token_str(&self, id: u32) -> String {
        match id {
            PAD => "<pad>".into(),
            BOS => "<bos>".into(),
            EOS => "<eos>".into(),
            b if b < FIRST_PIECE => format!("<0x{:02X}>", b - BYTE_BASE),
            p => self
                .pieces
                .get((p - FIRST_PIECE) as usize)
                .cloned()
                .unwrap_or_else(|| format!("<unk:{p}>")),
        }
    }

    pub fn tokenize(&self, text: &str) -> Vec<u32> {
        let bounds: Vec<usize> = text
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(text.len()))
            .collect();
        let nchars = bounds.len() - 1;
        let mut out = Vec::new();
        let mut i = 0;
        while i < nchars {
            let longest = self.max_piece_chars.min(nchars - i);
            let hit = (1..=longest)
                .rev()
                .find_map(|l| self.index.get(&text[bounds[i]..bounds[i + l]]).map(|&id| (id, l)));
            match hit {
                Some((id, l)) => {
                    out.push(id);
                    i += l;
                }
                None => {
                    out.extend(text[bounds[i]..bounds[i + 1]].bytes().map(|b| BYTE_BASE + u32::from(b)));
                    i += 1;
                }
            }
        }
        out
    }

    /// Inverse of [`Tokenizer::tokenize`]; special tokens render as nothing.
    pub fn detokenize(&self, ids: &[u32]) -> String {
        let mut bytes = Vec::new();
        for &id in ids {
            match id {
                PAD | BOS | EOS => {}
                b if b < FIRST_PIECE => bytes.push((b - BYTE_BASE) as u8),
                p => {
                    if let Some(s) = self.pieces.get((p - FIRST_PIECE) as usize) {
                        bytes.extend_from_slice(s.as_bytes());
                    }
                }
            }
        }
        match String::from_utf8(bytes) {
            Ok(s) => s,
            Err(e) => String::from_utf8_lossy(e.as_bytes()).into_owned(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&VocabFile {
            specials: vec!["<pad>".into(), "<bos>".into(), "<eos>".into()],
            byte_fallback: 256,
            pieces: self.pieces.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: VocabFile = serde_json::from_str(text)?;
        if f.specials.len() != 3 || f.byte_fallback != 256 {
            return Err(Error::Checkpoint("unsupported vocabulary layout".into()));
        }
        Tokenizer::from_pieces(f.pieces)
    }
}

/// Splits text into word pieces: an optional single leading space followed by
/// a run of alphanumerics. Other characters are not part of any piece.
fn word_pieces(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let idx: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < idx.len() {
        let start = i;
        if idx[i].1 == ' ' && i + 1 < idx.len() && idx[i + 1].1.is_alphanumeric() {
            i += 1;
        }
        if idx[i].1.is_alphanumeric() {
            while i < idx.len() && idx[i].1.is_alphanumeric() {
                i += 1;
            }
            let end = idx.get(i).map_or(text.len(), |&(b, _)| b);
            out.push(&text[idx[start].0..end]);
        } else {
            i = start + 1;
        }
    }
    out
}

/// Builds a vocabulary: every character of the corpus, then the most frequent
/// multi-character word pieces and character bigrams up to `max_size` total
/// text pieces. Ties break by codepoint order, so the result depends only on
/// the corpus contents.
pub fn build_vocab<S: AsRef<str>>(corpus: &[S], max_size: usize) -> Result<Tokenizer> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut alphabet: Vec<char> = corpus.iter().flat_map(|s| s.as_ref().chars()).collect();
    alphabet.sort_unstable();
    alphabet.dedup();
    if max_size < alphabet.len() {
        return Err(Error::VocabTooSmall {
            max_size,
            alphabet: alphabet.len(),
        });
    }

    let mut words: HashMap<&str, u64> = HashMap::new();
    let mut bigrams: HashMap<String, u64> = HashMap::new();
    for s in corpus {
        let s = s.as_ref();
        for w in word_pieces(s) {
            if w.chars().count() >= 2 {
                *words.entry(w).or_insert(0) += 1;
            }
        }
        let chars: Vec<char> = s.chars().collect();
        for pair in chars.windows(2) {
            *bigrams.entry(pair.iter().collect()).or_insert(0) += 1;
        }
    }
    let mut candidates: HashMap<String, u64> = bigrams;
    for (w, n) in words {
        let slot = candidates.entry(w.to_string()).or_insert(0);
        *slot = (*slot).max(n);
    }
    let mut ranked: Vec<(String, u64)> = candidates.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut pieces: Vec<String> = alphabet.iter().map(|c| c.to_string()).collect();
    pieces.extend(ranked.into_iter().take(max_size - alphabet.len()).map(|(s, _)| s));
    Tokenizer::from_pieces(pieces)
}
