use crate::lm::tokenizer::{Tokenizer, BOS, EOS};

/// Separator placed between a participant's responses in a target sequence.
pub const RESPONSE_SEPARATOR: &str = ", ";

/// `[BOS] ++ tokenize(prompt)`.
pub fn encode_prompt(tok: &Tokenizer, prompt: &str) -> Vec<u32> {
    let mut ids = vec![BOS];
    ids.extend(tok.tokenize(prompt));
    ids
}

/// Responses joined by `", "` and closed with EOS. Each word is tokenized on
/// its own so its pieces match the candidate tokenization used in scoring.
pub fn encode_target<S: AsRef<str>>(tok: &Tokenizer, responses: &[S]) -> Vec<u32> {
    let sep = tok.tokenize(RESPONSE_SEPARATOR);
    let mut ids = Vec::new();
    for (i, r) in responses.iter().enumerate() {
        if i > 0 {
            ids.extend_from_slice(&sep);
        }
        ids.extend(tok.tokenize(r.as_ref()));
    }
    ids.push(EOS);
    ids
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_layout() {
        let tok = Tokenizer::from_pieces(vec!["warm".into(), "hot".into()]).unwrap();
        let ids = encode_target(&tok, &["warm", "hot"]);
        let mut want = tok.tokenize("warm");
        want.extend(tok.tokenize(", "));
        want.extend(tok.tokenize("hot"));
        want.push(EOS);
        assert_eq!(ids, want);
        assert_eq!(tok.detokenize(&ids[..ids.len() - 1]), "warm, hot");
        assert_eq!(encode_prompt(&tok, "hot")[0], BOS);
    }
}
