//! SMOG readability grade.

use crate::corpus::tokenize;

/// Vowel-group syllable estimate for one lowercase token.
///
/// Consecutive vowels (`aeiouy`) form one group. A trailing silent `e`
/// (an `e` after a consonant, except in a consonant + `le` ending) is not
/// counted. Tokens with letters have at least one syllable; tokens without
/// letters have none.
pub fn syllables(word: &str) -> usize {
    let chars: Vec<char> = word
        .chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_alphabetic())
        .collect();
    if chars.is_empty() {
        return 0;
    }
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0;
    let mut prev_vowel = false;
    for &c in &chars {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let n = chars.len();
    if groups > 1 && n >= 2 && chars[n - 1] == 'e' && !is_vowel(chars[n - 2]) {
        let consonant_le = n >= 3 && chars[n - 2] == 'l' && !is_vowel(chars[n - 3]);
        if !consonant_le {
            groups -= 1;
        }
    }
    groups.max(1)
}

pub fn is_polysyllable(word: &str) -> bool {
    syllables(word) >= 3
}

/// Sentence and polysyllable counts used by [`smog_index`].
pub fn smog_counts(text: &str) -> (usize, usize) {
    let stream = tokenize(text);
    let poly = stream.tokens.iter().filter(|t| is_polysyllable(t)).count();
    (stream.sentence_count(), poly)
}

/// `1.0430 * sqrt(polysyllables * 30 / sentences) + 3.1291`, or 0 for text
/// without sentences.
pub fn smog_index(text: &str) -> f64 {
    let (sentences, poly) = smog_counts(text);
    smog_from_counts(sentences, poly)
}

pub fn smog_from_counts(sentences: usize, polysyllables: usize) -> f64 {
    if sentences == 0 {
        return 0.0;
    }
    1.0430 * (polysyllables as f64 * 30.0 / sentences as f64).sqrt() + 3.1291
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn syllable_heuristic() {
        assert_eq!(syllables("cat"), 1);
        assert_eq!(syllables("make"), 1);
        assert_eq!(syllables("table"), 2);
        assert_eq!(syllables("information"), 4);
        assert_eq!(syllables("tendonitis"), 4);
        assert_eq!(syllables("queue"), 1);
        assert_eq!(syllables("the"), 1);
        assert_eq!(syllables("2021"), 0);
        assert!(is_polysyllable("ibuprofen"));
        assert!(!is_polysyllable("ankle"));
    }

    #[test]
    fn constant_when_no_polysyllables() {
        let text = "The cat sat. ".repeat(30);
        assert_eq!(smog_counts(&text), (30, 0));
        assert_eq!(smog_index(&text), 3.1291);
    }

    #[test]
    fn empty_text_scores_zero() {
        assert_eq!(smog_index(""), 0.0);
        assert_eq!(smog_index("  ...  "), 0.0);
    }

    #[test]
    fn ten_sentence_paragraph() {
        // polysyllables by hand: achilles, tendonitis, inflammation;
        // physical, therapy; ibuprofen; medication; recovery; comfortable;
        // exercises, regularly; surgery, ultimately → 13
        let text = "Achilles tendonitis causes inflammation. Rest helps a lot. \
                    Physical therapy is good. Ice the heel. Take ibuprofen if needed. \
                    Ask about medication. Recovery takes weeks. Wear comfortable shoes. \
                    Do the exercises regularly. Surgery is ultimately rare.";
        assert_eq!(smog_counts(text), (10, 13));
        // 1.0430 * sqrt(13 * 30 / 10) + 3.1291, evaluated separately
        let expected = 9.642632912329528;
        assert!(
            (smog_index(text) - expected).abs() < 1e-6,
            "{}",
            smog_index(text)
        );
    }

    proptest! {
        #[test]
        fn adding_polysyllables_never_lowers_smog(base in "[a-z ]{0,60}", extra in 0usize..10) {
            let text = format!("{base} end.");
            let more = format!("{base} {} end.", "information ".repeat(extra));
            prop_assert_eq!(smog_counts(&text).0, smog_counts(&more).0);
            prop_assert!(smog_index(&more) >= smog_index(&text));
        }
    }
}
