//! N-gram sequence-entropy model over the 77-token encoding.
//!
//! Stands in for a generative model's token probabilities: any
//! autoregressive provider satisfies the sequence-entropy formula, so the
//! distribution source is a trait.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::chess::{token_alphabet, TokenSeq77};

/// Provider of next-token distributions for entropy computation.
pub trait TokenDistribution {
    /// Probabilities of the possible next tokens given the preceding
    /// context; must sum to 1.
    fn next_probs(&self, context: &[u8]) -> Vec<f64>;
}

/// Average token-level entropy of a sequence under `model`, in nats:
/// the mean over positions of the Shannon entropy of the conditional
/// next-token distribution.
pub fn sequence_entropy<M: TokenDistribution + ?Sized>(model: &M, seq: &TokenSeq77) -> f64 {
    let bytes = seq.as_bytes();
    let mut total = 0.0;
    for i in 0..bytes.len() {
        let probs = model.next_probs(&bytes[..i]);
        let mut h = 0.0;
        for p in probs {
            if p > 0.0 {
                h -= p * libm::log(p);
            }
        }
        total += h;
    }
    total / bytes.len() as f64
}

/// Add-one-smoothed n-gram model with backoff to shorter contexts.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyModel {
    /// N-gram order: contexts up to `order - 1` tokens.
    order: usize,
    /// Token counts per context, all context lengths from 0 to order-1.
    contexts: BTreeMap<Vec<u8>, BTreeMap<u8, u32>>,
    alphabet: Vec<u8>,
    /// FNV-1a over the training corpus, for provenance checks.
    fingerprint: u64,
    /// Corpus percentile entropy stored at training time, the default
    /// novelty-gate threshold.
    threshold: f64,
}

const FORMAT_VERSION: u32 = 1;
/// Corpus entropy percentile used for the stored default threshold.
const THRESHOLD_PERCENTILE: f64 = 0.30;
/// Cap on the number of sequences scanned for the percentile.
const THRESHOLD_SAMPLE_CAP: usize = 20_000;

fn fnv1a(corpus: &[TokenSeq77]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for seq in corpus {
        for &b in seq.as_bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

impl EntropyModel {
    /// Trains the model on a token corpus and stores the corpus-percentile
    /// entropy as the default gate threshold.
    pub fn train(corpus: &[TokenSeq77], order: usize) -> EntropyModel {
        let order = order.max(1);
        let mut contexts: BTreeMap<Vec<u8>, BTreeMap<u8, u32>> = BTreeMap::new();
        for seq in corpus {
            let bytes = seq.as_bytes();
            for i in 0..bytes.len() {
                for ctx_len in 0..order.min(i + 1) {
                    let ctx = bytes[i - ctx_len..i].to_vec();
                    *contexts.entry(ctx).or_default().entry(bytes[i]).or_insert(0) += 1;
                }
            }
        }
        let mut model = EntropyModel {
            order,
            contexts,
            alphabet: token_alphabet(),
            fingerprint: fnv1a(corpus),
            threshold: 0.0,
        };
        model.threshold = model.corpus_percentile(corpus);
        model
    }

    fn corpus_percentile(&self, corpus: &[TokenSeq77]) -> f64 {
        if corpus.is_empty() {
            return 0.0;
        }
        let stride = corpus.len().div_ceil(THRESHOLD_SAMPLE_CAP);
        let mut entropies: Vec<f64> = corpus
            .iter()
            .step_by(stride)
            .map(|seq| sequence_entropy(self, seq))
            .collect();
        entropies.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
        let idx = ((entropies.len() - 1) as f64 * THRESHOLD_PERCENTILE) as usize;
        entropies[idx]
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Default entropy-gate threshold: the training corpus percentile.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Longest trained suffix of `context`, down to the empty context.
    fn backoff<'a>(&'a self, context: &[u8]) -> Option<&'a BTreeMap<u8, u32>> {
        let max_len = context.len().min(self.order - 1);
        for ctx_len in (0..=max_len).rev() {
            let suffix = &context[context.len() - ctx_len..];
            if let Some(counts) = self.contexts.get(suffix) {
                return Some(counts);
            }
        }
        None
    }

    /// Versioned text rendering with the corpus fingerprint; line-based,
    /// deterministic.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("ngram-model v{FORMAT_VERSION}\n"));
        out.push_str(&format!("order {}\n", self.order));
        out.push_str(&format!("fingerprint {:016x}\n", self.fingerprint));
        out.push_str(&format!("threshold {}\n", self.threshold));
        for (ctx, counts) in &self.contexts {
            for (&tok, &count) in counts {
                out.push_str(&format!(
                    "{}|{}|{}\n",
                    core::str::from_utf8(ctx).expect("ascii"),
                    tok as char,
                    count
                ));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<EntropyModel, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty model file")?;
        if header.trim() != format!("ngram-model v{FORMAT_VERSION}") {
            return Err(format!("unsupported model header: {header}"));
        }
        let mut order = 0usize;
        let mut fingerprint = 0u64;
        let mut threshold = 0.0f64;
        for _ in 0..3 {
            let line = lines.next().ok_or("truncated model header")?;
            let (key, value) = line
                .split_once(' ')
                .ok_or_else(|| format!("bad header line: {line}"))?;
            match key {
                "order" => order = value.parse().map_err(|_| "bad order")?,
                "fingerprint" => {
                    fingerprint = u64::from_str_radix(value, 16).map_err(|_| "bad fingerprint")?
                }
                "threshold" => threshold = value.parse().map_err(|_| "bad threshold")?,
                _ => return Err(format!("unknown header key: {key}")),
            }
        }
        if order == 0 {
            return Err(String::from("order must be at least 1"));
        }
        let mut contexts: BTreeMap<Vec<u8>, BTreeMap<u8, u32>> = BTreeMap::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '|');
            let ctx = parts.next().ok_or("bad count line")?.as_bytes().to_vec();
            let tok = parts
                .next()
                .and_then(|t| t.bytes().next())
                .ok_or("bad token field")?;
            let count: u32 = parts
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or("bad count field")?;
            contexts.entry(ctx).or_default().insert(tok, count);
        }
        Ok(EntropyModel {
            order,
            contexts,
            alphabet: token_alphabet(),
            fingerprint,
            threshold,
        })
    }
}

impl TokenDistribution for EntropyModel {
    fn next_probs(&self, context: &[u8]) -> Vec<f64> {
        let counts = self.backoff(context);
        let total: u32 = counts
            .map(|c| c.values().sum())
            .unwrap_or(0);
        let denom = total as f64 + self.alphabet.len() as f64;
        self.alphabet
            .iter()
            .map(|tok| {
                let c = counts.and_then(|m| m.get(tok)).copied().unwrap_or(0);
                (c as f64 + 1.0) / denom
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chess::{random_legal_position, Position};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct TwoSymbolUniform;

    impl TokenDistribution for TwoSymbolUniform {
        fn next_probs(&self, _context: &[u8]) -> Vec<f64> {
            alloc::vec![0.5, 0.5]
        }
    }

    #[test]
    fn uniform_two_symbol_entropy_is_ln2() {
        let seq = Position::startpos().encode77();
        let h = sequence_entropy(&TwoSymbolUniform, &seq);
        assert!((h - core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn distributions_sum_to_one() {
        let start = Position::startpos();
        let corpus: Vec<TokenSeq77> = start
            .legal_moves()
            .into_iter()
            .take(5)
            .map(|m| start.apply_move(m).unwrap().encode77())
            .collect();
        let model = EntropyModel::train(&corpus, 4);
        for ctx in [&b""[..], b"r", b"rnbq", b"zz"] {
            let probs = model.next_probs(ctx);
            assert_eq!(probs.len(), 31);
            let sum: f64 = probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "context {ctx:?} sums to {sum}");
        }
    }

    #[test]
    fn repeated_corpus_entropy_shrinks_toward_zero() {
        // With the order covering the whole sequence, every context is
        // deterministic; growing multiplicity then drives the smoothed
        // entropy toward zero.
        let seq = Position::startpos().encode77();
        let mut prev = f64::INFINITY;
        for copies in [3usize, 30, 300] {
            let model = EntropyModel::train(&alloc::vec![seq; copies], 80);
            let h = sequence_entropy(&model, &seq);
            assert!(h < prev, "{copies} copies: {h} !< {prev}");
            prev = h;
        }
        assert!(prev < 0.7, "smoothing floor at 300 copies, got {prev}");
    }

    #[test]
    fn typical_positions_score_below_random_ones() {
        // Corpus of short random walks from the start position; queries
        // from the same family must average lower entropy than uniformly
        // random boards of similar piece count.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let walk = |rng: &mut ChaCha8Rng| -> Position {
            use rand::seq::SliceRandom;
            let mut p = Position::startpos();
            for _ in 0..rng.gen_range(2..6) {
                let moves = p.legal_moves();
                let m = *moves.choose(rng).expect("opening positions have moves");
                p = p.apply_move(m).unwrap();
            }
            p
        };
        let corpus: Vec<TokenSeq77> = (0..300).map(|_| walk(&mut rng).encode77()).collect();
        let model = EntropyModel::train(&corpus, 4);

        let mut typical_total = 0.0;
        let mut random_total = 0.0;
        for _ in 0..100 {
            typical_total += sequence_entropy(&model, &walk(&mut rng).encode77());
            let p = random_legal_position(&mut rng, 30);
            random_total += sequence_entropy(&model, &p.encode77());
        }
        assert!(
            typical_total < random_total,
            "typical mean {} vs random mean {}",
            typical_total / 100.0,
            random_total / 100.0
        );
    }

    #[test]
    fn text_round_trip_preserves_the_model() {
        let corpus: Vec<TokenSeq77> = {
            let start = Position::startpos();
            start
                .legal_moves()
                .into_iter()
                .take(6)
                .map(|m| start.apply_move(m).unwrap().encode77())
                .collect()
        };
        let model = EntropyModel::train(&corpus, 3);
        let text = model.to_text();
        let reloaded = EntropyModel::from_text(&text).unwrap();
        assert_eq!(model, reloaded);
        assert_eq!(model.fingerprint(), reloaded.fingerprint());
        let seq = Position::startpos().encode77();
        assert_eq!(
            sequence_entropy(&model, &seq),
            sequence_entropy(&reloaded, &seq)
        );

        assert!(EntropyModel::from_text("bogus").is_err());
    }

    #[test]
    fn threshold_is_a_low_corpus_percentile() {
        let start = Position::startpos();
        let corpus: Vec<TokenSeq77> = start
            .legal_moves()
            .into_iter()
            .map(|m| start.apply_move(m).unwrap().encode77())
            .collect();
        let model = EntropyModel::train(&corpus, 4);
        let entropies: Vec<f64> = corpus
            .iter()
            .map(|s| sequence_entropy(&model, s))
            .collect();
        let below = entropies
            .iter()
            .filter(|&&h| h < model.threshold())
            .count();
        // Roughly 30% of the corpus sits below the stored threshold.
        assert!(below <= corpus.len() * 2 / 5);
        assert!(below >= corpus.len() / 5);
    }
}
