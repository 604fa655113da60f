use crate::{Error, Result};
use std::collections::HashMap;

const MAX_N: usize = 4;

/// Smoothing for short or toy corpora. Off by default: a zero n-gram
/// precision annihilates the score, as in the standard corpus metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Smoothing {
    #[default]
    None,
    /// Add one to match and candidate counts for orders above unigram.
    AddOne,
}

/// Corpus BLEU-4 with its components.
#[derive(Debug, Clone, Copy)]
pub struct BleuScore {
    /// In [0, 100].
    pub score: f64,
    pub precisions: [f64; MAX_N],
    pub brevity_penalty: f64,
    pub hyp_tokens: usize,
    pub ref_tokens: usize,
}

/// Case-insensitive corpus BLEU-4 against a single reference per sentence:
/// geometric mean of modified 1..4-gram precisions times the brevity
/// penalty.
pub fn bleu4(hypotheses: &[String], references: &[String], smoothing: Smoothing) -> Result<BleuScore> {
    if hypotheses.len() != references.len() {
        return Err(Error::Eval(format!(
            "{} hypotheses against {} references",
            hypotheses.len(),
            references.len()
        )));
    }
    let mut matches = [0usize; MAX_N];
    let mut totals = [0usize; MAX_N];
    let mut hyp_tokens = 0usize;
    let mut ref_tokens = 0usize;

    for (hyp, reference) in hypotheses.iter().zip(references) {
        let h: Vec<String> = hyp.split_whitespace().map(str::to_lowercase).collect();
        let r: Vec<String> = reference.split_whitespace().map(str::to_lowercase).collect();
        hyp_tokens += h.len();
        ref_tokens += r.len();
        for n in 1..=MAX_N {
            let r_counts = ngram_counts(&r, n);
            let mut h_counts = ngram_counts(&h, n);
            for (gram, count) in h_counts.drain() {
                let allowed = r_counts.get(&gram).copied().unwrap_or(0);
                matches[n - 1] += count.min(allowed);
            }
            totals[n - 1] += h.len().saturating_sub(n - 1);
        }
    }

    let mut precisions = [0.0; MAX_N];
    let mut log_sum = 0.0;
    let mut zero = false;
    for n in 0..MAX_N {
        let (mut m, mut t) = (matches[n] as f64, totals[n] as f64);
        if smoothing == Smoothing::AddOne && n > 0 {
            m += 1.0;
            t += 1.0;
        }
        let p = if t > 0.0 { m / t } else { 0.0 };
        precisions[n] = p;
        if p > 0.0 {
            log_sum += p.ln();
        } else {
            zero = true;
        }
    }

    let brevity_penalty = if hyp_tokens == 0 {
        0.0
    } else if hyp_tokens > ref_tokens {
        1.0
    } else {
        (1.0 - ref_tokens as f64 / hyp_tokens as f64).exp()
    };
    let score = if zero || hyp_tokens == 0 {
        0.0
    } else {
        100.0 * brevity_penalty * (log_sum / MAX_N as f64).exp()
    };
    Ok(BleuScore {
        score,
        precisions,
        brevity_penalty,
        hyp_tokens,
        ref_tokens,
    })
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    if tokens.len() >= n {
        for i in 0..=tokens.len() - n {
            *counts.entry(&tokens[i..i + n]).or_insert(0) += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn perfect_match_scores_one_hundred() {
        let h = lines(&["the committee approved the annual budget today"]);
        let b = bleu4(&h, &h, Smoothing::None).unwrap();
        assert_eq!(b.score, 100.0);
        assert_eq!(b.precisions, [1.0; 4]);
    }

    #[test]
    fn any_zero_four_gram_annihilates_the_score() {
        let h = lines(&["a b c d e", "f g h i"]);
        let r = lines(&["a x c y e", "f z h w"]);
        let b = bleu4(&h, &r, Smoothing::None).unwrap();
        assert_eq!(b.score, 0.0);
        assert!(b.precisions[0] > 0.0);
        assert_eq!(b.precisions[3], 0.0);
    }

    #[test]
    fn cat_on_the_mat_matches_the_reference_implementation() {
        // independent reference gives precisions 5/6, 3/5, 1/4, 0/3 -> 0.0
        let h = lines(&["the cat sat on the mat"]);
        let r = lines(&["the cat is on the mat"]);
        let b = bleu4(&h, &r, Smoothing::None).unwrap();
        assert!((b.precisions[0] - 5.0 / 6.0).abs() < 1e-12);
        assert!((b.precisions[1] - 3.0 / 5.0).abs() < 1e-12);
        assert!((b.precisions[2] - 1.0 / 4.0).abs() < 1e-12);
        assert_eq!(b.precisions[3], 0.0);
        assert!((b.score - 0.0).abs() < 0.01);
    }

    #[test]
    fn partial_overlap_matches_the_frozen_reference_score() {
        // frozen from the independent reference implementation
        let h = lines(&[
            "the delegation arrived in the capital on monday evening",
            "officials said the talks would continue next week",
            "markets reacted calmly to the announcement",
        ]);
        let r = lines(&[
            "the delegation arrived in the capital late on monday",
            "officials said that talks will continue next week",
            "markets reacted calmly to this announcement",
        ]);
        let b = bleu4(&h, &r, Smoothing::None).unwrap();
        assert!((b.score - 49.14049449284441).abs() < 0.01);
    }

    #[test]
    fn brevity_penalty_matches_the_frozen_reference_score() {
        let h = lines(&["the president spoke", "trade volumes rose sharply this quarter"]);
        let r = lines(&[
            "the president spoke at the opening ceremony",
            "trade volumes rose sharply this quarter overall",
        ]);
        let b = bleu4(&h, &r, Smoothing::None).unwrap();
        assert!((b.score - 57.375342073743276).abs() < 0.01);
        assert!((b.brevity_penalty - 0.5737534207374327).abs() < 1e-9);
    }

    #[test]
    fn matching_is_case_insensitive() {
        let h = lines(&["The Quick Brown fox jumps over the lazy dog"]);
        let r = lines(&["the quick brown FOX jumps over THE lazy dog"]);
        let b = bleu4(&h, &r, Smoothing::None).unwrap();
        assert_eq!(b.score, 100.0);
    }

    #[test]
    fn count_mismatch_is_an_error() {
        let h = lines(&["a"]);
        let r = lines(&["a", "b"]);
        assert!(bleu4(&h, &r, Smoothing::None).is_err());
    }

    #[test]
    fn consistent_reordering_leaves_the_score_unchanged() {
        let h = lines(&["a b c d e f", "x y z w v u", "m n o p q"]);
        let r = lines(&["a b c d x f", "x y z w v k", "m n o r q"]);
        let base = bleu4(&h, &r, Smoothing::AddOne).unwrap();
        let perm = [2usize, 0, 1];
        let hp: Vec<String> = perm.iter().map(|&i| h[i].clone()).collect();
        let rp: Vec<String> = perm.iter().map(|&i| r[i].clone()).collect();
        let permuted = bleu4(&hp, &rp, Smoothing::AddOne).unwrap();
        assert!((base.score - permuted.score).abs() < 1e-12);
    }

    #[test]
    fn smoothing_rescues_toy_corpora() {
        let h = lines(&["a b c d e"]);
        let r = lines(&["a x c y e"]);
        let none = bleu4(&h, &r, Smoothing::None).unwrap();
        let smoothed = bleu4(&h, &r, Smoothing::AddOne).unwrap();
        assert_eq!(none.score, 0.0);
        assert!(smoothed.score > 0.0);
    }
}
