//! Synthetic multi-token retrieval task. Each sample hides the m tokens of
//! one class's marker set at random positions among distractor tokens; the
//! label is recoverable only from the joint identity of those markers, so
//! good attention is inherently multi-modal.

use crate::error::{Error, Result};
use reweight_core::rng::SplitMix64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub tokens: Vec<usize>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeedleTask {
    pub samples: Vec<Sample>,
    pub relevant_count: usize,
    pub seq_len: usize,
    pub vocab: usize,
    pub classes: usize,
}

impl NeedleTask {
    /// Marker tokens of one class: the m consecutive ids starting at class*m.
    pub fn class_tokens(class: usize, m: usize) -> std::ops::Range<usize> {
        class * m..(class + 1) * m
    }
}

/// Deterministically generate a balanced task.
///
/// Tokens [0, classes*m) are reserved as class markers; distractors are
/// drawn uniformly from the rest of the vocabulary. Labels are balanced to
/// within one count and the sample order is shuffled.
pub fn make_needle_task(
    seed: u64,
    seq_len: usize,
    m: usize,
    vocab: usize,
    classes: usize,
    n_samples: usize,
) -> Result<NeedleTask> {
    if m < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 relevant tokens per sample, got {m}"
        )));
    }
    if m >= seq_len {
        return Err(Error::InvalidInput(format!(
            "relevant count {m} must be smaller than the sequence length {seq_len}"
        )));
    }
    if classes < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 classes, got {classes}"
        )));
    }
    if vocab <= classes * m {
        return Err(Error::InvalidInput(format!(
            "vocabulary {vocab} leaves no distractor tokens beyond the {} class markers",
            classes * m
        )));
    }
    if n_samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }

    let mut rng = SplitMix64::new(seed);
    let distractor_base = classes * m;
    let distractor_count = vocab - distractor_base;

    let mut labels: Vec<usize> = (0..n_samples).map(|i| i % classes).collect();
    rng.shuffle(&mut labels);

    let samples = labels
        .into_iter()
        .map(|label| {
            let mut positions: Vec<usize> = (0..seq_len).collect();
            rng.shuffle(&mut positions);
            let mut tokens = vec![0usize; seq_len];
            let mut markers: Vec<usize> = NeedleTask::class_tokens(label, m).collect();
            rng.shuffle(&mut markers);
            for (slot, marker) in positions[..m].iter().zip(markers) {
                tokens[*slot] = marker;
            }
            for &slot in &positions[m..] {
                tokens[slot] = distractor_base + rng.next_index(distractor_count);
            }
            Sample { tokens, label }
        })
        .collect();

    Ok(NeedleTask {
        samples,
        relevant_count: m,
        seq_len,
        vocab,
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sample_per_class_when_n_equals_classes() {
        let task = make_needle_task(0, 8, 2, 20, 4, 4).unwrap();
        let mut seen = vec![0usize; 4];
        for s in &task.samples {
            seen[s.label] += 1;
        }
        assert_eq!(seen, vec![1, 1, 1, 1]);
    }

    #[test]
    fn same_seed_gives_identical_dataset() {
        let a = make_needle_task(9, 16, 3, 40, 4, 100).unwrap();
        let b = make_needle_task(9, 16, 3, 40, 4, 100).unwrap();
        assert_eq!(a, b);
        let c = make_needle_task(10, 16, 3, 40, 4, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn class_histogram_is_balanced() {
        let task = make_needle_task(7, 32, 3, 64, 4, 4096).unwrap();
        let mut hist = vec![0usize; 4];
        for s in &task.samples {
            hist[s.label] += 1;
        }
        assert_eq!(hist, vec![1024, 1024, 1024, 1024]);
    }

    #[test]
    fn each_sample_contains_its_full_marker_set_once() {
        let task = make_needle_task(3, 12, 3, 30, 3, 60).unwrap();
        for s in &task.samples {
            let markers: Vec<usize> = NeedleTask::class_tokens(s.label, 3).collect();
            for marker in &markers {
                assert_eq!(
                    s.tokens.iter().filter(|t| *t == marker).count(),
                    1,
                    "marker {marker} missing or duplicated in {:?}",
                    s.tokens
                );
            }
            // No other class's markers appear.
            for t in &s.tokens {
                if *t < 9 {
                    assert!(markers.contains(t), "foreign marker {t} in sample");
                }
            }
        }
    }

    #[test]
    fn infeasible_dimensions_rejected() {
        assert!(make_needle_task(0, 8, 1, 20, 4, 4).is_err());
        assert!(make_needle_task(0, 8, 8, 20, 4, 4).is_err());
        assert!(make_needle_task(0, 8, 2, 8, 4, 4).is_err());
        assert!(make_needle_task(0, 8, 2, 20, 4, 0).is_err());
        assert!(make_needle_task(0, 8, 2, 20, 1, 4).is_err());
    }
}
