//! Skip-gram training loop over category-list sentences.
//!
//! Parameters live in a shared store of `f64` bit patterns inside relaxed
//! atomics. Sequential mode walks the store from one thread and is
//! bit-reproducible; parallel mode lets workers race on it, which is the
//! usual lock-free word2vec arrangement and is statistically benign.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::matrix::EmbeddingMatrix;
use super::sgns::sigmoid;
use super::vocab::Vocabulary;
use super::{EmbeddingConfig, EmbeddingError, TrainMode};
use crate::corpus::Corpus;

/// Learning rate never drops below this fraction of its initial value.
const LR_FLOOR: f64 = 1e-4;
/// Attempts to redraw a negative that collided with the context word
/// before giving up on that slot.
const NEGATIVE_RETRIES: usize = 8;

struct AtomicParams {
    dimension: usize,
    input: Vec<AtomicU64>,
    output: Vec<AtomicU64>,
}

impl AtomicParams {
    /// Input rows uniform in [-0.5/k, 0.5/k] from `rng`, output rows zero.
    fn init(vocab_size: usize, dimension: usize, rng: &mut ChaCha8Rng) -> Self {
        let half = 0.5 / dimension as f64;
        let input = (0..vocab_size * dimension)
            .map(|_| AtomicU64::new(rng.gen_range(-half..half).to_bits()))
            .collect();
        let output = (0..vocab_size * dimension)
            .map(|_| AtomicU64::new(0f64.to_bits()))
            .collect();
        AtomicParams {
            dimension,
            input,
            output,
        }
    }

    #[inline]
    fn load(slot: &AtomicU64) -> f64 {
        f64::from_bits(slot.load(Ordering::Relaxed))
    }

    #[inline]
    fn add(slot: &AtomicU64, delta: f64) {
        let next = f64::from_bits(slot.load(Ordering::Relaxed)) + delta;
        slot.store(next.to_bits(), Ordering::Relaxed);
    }

    fn to_vec(slots: &[AtomicU64]) -> Vec<f64> {
        slots.iter().map(Self::load).collect()
    }
}

/// Draws negatives from the unigram distribution raised to the 0.75 power.
struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    fn new(frequencies: &[u64]) -> Self {
        let mut cumulative = Vec::with_capacity(frequencies.len());
        let mut total = 0.0;
        for &f in frequencies {
            total += (f as f64).powf(0.75);
            cumulative.push(total);
        }
        NegativeTable { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let x = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= x)
            .min(self.cumulative.len() - 1)
    }
}

/// One exact gradient-ascent step on the shared store, replaying the math
/// of [`super::sgns::pair_gradient`] followed by its `apply`: for each
/// target the coefficient is computed from a snapshot of the center row,
/// context-row updates land immediately, and the accumulated center update
/// lands last. For distinct targets the result is bit-identical to the
/// pure-function path.
fn update_pair(
    params: &AtomicParams,
    center: usize,
    context: usize,
    negatives: &[usize],
    learning_rate: f64,
    center_snapshot: &mut Vec<f64>,
    center_accum: &mut Vec<f64>,
) -> Result<(), String> {
    let k = params.dimension;
    center_snapshot.clear();
    center_snapshot.extend(
        params.input[center * k..(center + 1) * k]
            .iter()
            .map(AtomicParams::load),
    );
    center_accum.clear();
    center_accum.resize(k, 0.0);

    let step = |target: usize, label: f64, center_accum: &mut [f64]| -> Result<(), String> {
        let row = &params.output[target * k..(target + 1) * k];
        let mut dot = 0.0;
        for d in 0..k {
            dot += AtomicParams::load(&row[d]) * center_snapshot[d];
        }
        if !dot.is_finite() {
            return Err(format!(
                "dot(input[{center}], output[{target}]) = {dot}"
            ));
        }
        let g = label - sigmoid(dot);
        for d in 0..k {
            center_accum[d] += g * AtomicParams::load(&row[d]);
            AtomicParams::add(&row[d], learning_rate * (g * center_snapshot[d]));
        }
        Ok(())
    };

    step(context, 1.0, center_accum)?;
    for &n in negatives {
        step(n, 0.0, center_accum)?;
    }

    let row = &params.input[center * k..(center + 1) * k];
    for d in 0..k {
        AtomicParams::add(&row[d], learning_rate * center_accum[d]);
    }
    Ok(())
}

/// In-vocabulary index lists per record; lists with fewer than two
/// surviving categories are dropped.
fn build_sentences(corpus: &Corpus, vocab: &Vocabulary) -> Vec<Vec<u32>> {
    corpus
        .records()
        .iter()
        .filter_map(|rec| {
            let ids: Vec<u32> = rec
                .categories
                .iter()
                .filter_map(|c| vocab.get(c).map(|i| i as u32))
                .collect();
            (ids.len() >= 2).then_some(ids)
        })
        .collect()
}

fn pairs_in_sentence(len: usize, window: usize) -> u64 {
    let mut pairs = 0u64;
    for i in 0..len {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(len - 1);
        pairs += (hi - lo) as u64;
    }
    pairs
}

/// Deterministic per-worker stream key (SplitMix64 over seed/epoch/worker).
fn worker_seed(seed: u64, epoch: u64, worker: u64) -> u64 {
    let mut z = seed
        .wrapping_add(epoch.wrapping_mul(0x9e3779b97f4a7c15))
        .wrapping_add(worker.wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

struct WorkerCtx<'a> {
    params: &'a AtomicParams,
    sentences: &'a [Vec<u32>],
    table: &'a NegativeTable,
    config: &'a EmbeddingConfig,
    grand_total: u64,
    counter: &'a AtomicU64,
    failed: &'a AtomicBool,
    failure: &'a Mutex<Option<EmbeddingError>>,
}

fn run_worker(ctx: &WorkerCtx, order: &[u32], epoch: usize, mut rng: ChaCha8Rng) {
    let window = ctx.config.window;
    let lr0 = ctx.config.learning_rate;
    let mut snapshot = Vec::with_capacity(ctx.params.dimension);
    let mut accum = Vec::with_capacity(ctx.params.dimension);
    let mut negatives = Vec::with_capacity(ctx.config.negatives);

    for &si in order {
        if ctx.failed.load(Ordering::Relaxed) {
            return;
        }
        let sentence = &ctx.sentences[si as usize];
        for i in 0..sentence.len() {
            let center = sentence[i] as usize;
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(sentence.len() - 1);
            for (j, &word) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                if j == i {
                    continue;
                }
                let context = word as usize;
                let done = ctx.counter.fetch_add(1, Ordering::Relaxed);
                let remaining = 1.0 - done as f64 / ctx.grand_total as f64;
                let lr = lr0 * remaining.max(LR_FLOOR);

                negatives.clear();
                for _ in 0..ctx.config.negatives {
                    for _ in 0..NEGATIVE_RETRIES {
                        let n = ctx.table.sample(&mut rng);
                        if n != context {
                            negatives.push(n);
                            break;
                        }
                    }
                }

                if let Err(what) = update_pair(
                    ctx.params,
                    center,
                    context,
                    &negatives,
                    lr,
                    &mut snapshot,
                    &mut accum,
                ) {
                    let mut slot = ctx.failure.lock().unwrap();
                    if slot.is_none() {
                        *slot = Some(EmbeddingError::NonFinite {
                            epoch,
                            pairs_done: done,
                            what,
                        });
                    }
                    ctx.failed.store(true, Ordering::Relaxed);
                    return;
                }
            }
        }
    }
}

/// Progress handed to the callback after each epoch.
#[derive(Debug, Clone, Copy)]
pub struct EpochStats {
    pub epoch: usize,
    pub epochs: usize,
    pub pairs_done: u64,
}

/// Trains embeddings over the corpus; see [`train_embeddings`].
pub fn train_embeddings_with_progress(
    corpus: &Corpus,
    vocab: &Vocabulary,
    config: &EmbeddingConfig,
    mut on_epoch: impl FnMut(EpochStats),
) -> Result<EmbeddingMatrix, EmbeddingError> {
    config.validate()?;
    if vocab.is_empty() {
        return Err(EmbeddingError::EmptyVocabulary {
            min_count: vocab.min_count(),
        });
    }
    let sentences = build_sentences(corpus, vocab);
    if sentences.is_empty() {
        return Err(EmbeddingError::NoUsableSentences);
    }

    let per_epoch: u64 = sentences
        .iter()
        .map(|s| pairs_in_sentence(s.len(), config.window))
        .sum();
    let grand_total = per_epoch * config.epochs as u64;

    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let params = AtomicParams::init(vocab.len(), config.dimension, &mut master);
    let table = NegativeTable::new(vocab.frequencies());
    let counter = AtomicU64::new(0);
    let failed = AtomicBool::new(false);
    let failure = Mutex::new(None);

    let workers = match config.mode {
        TrainMode::Sequential => 1,
        TrainMode::Parallel { workers: 0 } => std::thread::available_parallelism()
            .map(usize::from)
            .unwrap_or(4),
        TrainMode::Parallel { workers } => workers,
    }
    .min(sentences.len())
    .max(1);

    let ctx = WorkerCtx {
        params: &params,
        sentences: &sentences,
        table: &table,
        config,
        grand_total,
        counter: &counter,
        failed: &failed,
        failure: &failure,
    };

    let mut order: Vec<u32> = (0..sentences.len() as u32).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut master);
        if workers == 1 {
            let rng = ChaCha8Rng::seed_from_u64(worker_seed(config.seed, epoch as u64, 0));
            run_worker(&ctx, &order, epoch, rng);
        } else {
            let chunk = order.len().div_ceil(workers);
            std::thread::scope(|scope| {
                for (w, part) in order.chunks(chunk).enumerate() {
                    let rng =
                        ChaCha8Rng::seed_from_u64(worker_seed(config.seed, epoch as u64, w as u64));
                    let ctx = &ctx;
                    scope.spawn(move || run_worker(ctx, part, epoch, rng));
                }
            });
        }
        if failed.load(Ordering::Relaxed) {
            break;
        }
        on_epoch(EpochStats {
            epoch,
            epochs: config.epochs,
            pairs_done: counter.load(Ordering::Relaxed),
        });
    }

    if let Some(err) = failure.lock().unwrap().take() {
        return Err(err);
    }

    let input = AtomicParams::to_vec(&params.input);
    let output = AtomicParams::to_vec(&params.output);
    debug_assert!(
        (0..vocab.len()).all(|w| input[w * config.dimension..(w + 1) * config.dimension]
            .iter()
            .any(|&v| v != 0.0)),
        "initialization keeps every input row nonzero"
    );
    Ok(EmbeddingMatrix::from_parts(
        vocab.clone(),
        config.dimension,
        input,
        output,
    ))
}

/// Trains the knowledge space from the corpus's category lists.
///
/// Each record contributes its in-vocabulary categories as one sentence;
/// sentences shorter than two are skipped. With `TrainMode::Sequential`
/// and a fixed seed the result is bit-identical across runs.
pub fn train_embeddings(
    corpus: &Corpus,
    vocab: &Vocabulary,
    config: &EmbeddingConfig,
) -> Result<EmbeddingMatrix, EmbeddingError> {
    train_embeddings_with_progress(corpus, vocab, config, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::QuestionRecord;
    use crate::embedding::sgns::{pair_gradient, SgnsParams};
    use crate::embedding::{build_vocabulary, cosine_similarity};

    fn corpus_of(category_lists: &[Vec<&str>]) -> Corpus {
        let records = category_lists
            .iter()
            .enumerate()
            .map(|(i, cats)| QuestionRecord {
                id: format!("q{i}"),
                title_length: 1,
                categories: cats.iter().map(|s| s.to_string()).collect(),
                followers: 0,
                answers: None,
                created: "2017-01-01".parse().unwrap(),
            })
            .collect();
        Corpus::new(records, "2018-05-31".parse().unwrap()).unwrap()
    }

    /// Two clusters whose members always co-occur and never mix.
    fn two_cluster_corpus(sentences_per_cluster: usize) -> Corpus {
        let mut lists = Vec::new();
        for _ in 0..sentences_per_cluster {
            lists.push(vec!["A", "B", "C"]);
            lists.push(vec!["D", "E", "F"]);
        }
        corpus_of(&lists)
    }

    fn small_config(seed: u64) -> EmbeddingConfig {
        EmbeddingConfig {
            dimension: 10,
            epochs: 5,
            negatives: 3,
            learning_rate: 0.025,
            window: 8,
            min_count: 1,
            seed,
            mode: TrainMode::Sequential,
        }
    }

    #[test]
    fn atomic_update_matches_pure_gradient_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (n, k) = (5, 7);
        let mut pure = SgnsParams::zeros(n, k);
        for v in pure.input.iter_mut().chain(pure.output.iter_mut()) {
            *v = rng.gen_range(-0.4..0.4);
        }
        let atomic = AtomicParams {
            dimension: k,
            input: pure.input.iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
            output: pure.output.iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
        };

        let (center, context, negatives, lr) = (2usize, 0usize, vec![4usize, 1, 3], 0.025);
        let mut snapshot = Vec::new();
        let mut accum = Vec::new();
        update_pair(&atomic, center, context, &negatives, lr, &mut snapshot, &mut accum).unwrap();
        pair_gradient(&pure, center, context, &negatives).apply(&mut pure, lr);

        assert_eq!(AtomicParams::to_vec(&atomic.input), pure.input);
        assert_eq!(AtomicParams::to_vec(&atomic.output), pure.output);
    }

    #[test]
    fn sequential_training_is_bit_reproducible() {
        let corpus = two_cluster_corpus(30);
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        let config = small_config(42);
        let a = train_embeddings(&corpus, &vocab, &config).unwrap();
        let b = train_embeddings(&corpus, &vocab, &config).unwrap();
        assert_eq!(a.input_flat(), b.input_flat());
        assert_eq!(a.output_flat(), b.output_flat());
    }

    #[test]
    fn different_seeds_differ() {
        let corpus = two_cluster_corpus(10);
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        let a = train_embeddings(&corpus, &vocab, &small_config(1)).unwrap();
        let b = train_embeddings(&corpus, &vocab, &small_config(2)).unwrap();
        assert_ne!(a.input_flat(), b.input_flat());
    }

    fn mean_cosine(matrix: &EmbeddingMatrix, pairs: &[(&str, &str)]) -> f64 {
        let mut total = 0.0;
        for (a, b) in pairs {
            total += cosine_similarity(matrix.vector(a).unwrap(), matrix.vector(b).unwrap())
                .unwrap();
        }
        total / pairs.len() as f64
    }

    #[test]
    fn clusters_separate_and_neighbors_rank_cluster_mates_first() {
        let corpus = two_cluster_corpus(150);
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        let matrix = train_embeddings(&corpus, &vocab, &small_config(42)).unwrap();

        let within = mean_cosine(
            &matrix,
            &[("A", "B"), ("A", "C"), ("B", "C"), ("D", "E"), ("D", "F"), ("E", "F")],
        );
        let between = mean_cosine(
            &matrix,
            &[
                ("A", "D"), ("A", "E"), ("A", "F"),
                ("B", "D"), ("B", "E"), ("B", "F"),
                ("C", "D"), ("C", "E"), ("C", "F"),
            ],
        );
        assert!(
            within - between > 0.2,
            "within {within} vs between {between}"
        );

        let neighbors = crate::embedding::nearest_neighbors(&matrix, "A", 5).unwrap();
        let names: Vec<&str> = neighbors.iter().map(|(n, _)| n.as_str()).collect();
        assert!(
            names[0..2].contains(&"B") && names[0..2].contains(&"C"),
            "cluster mates should rank first: {names:?}"
        );
    }

    #[test]
    fn parallel_mode_produces_finite_vectors() {
        let corpus = two_cluster_corpus(50);
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        let config = EmbeddingConfig {
            mode: TrainMode::Parallel { workers: 2 },
            ..small_config(7)
        };
        let matrix = train_embeddings(&corpus, &vocab, &config).unwrap();
        assert!(matrix.input_flat().iter().all(|v| v.is_finite()));
        let within = mean_cosine(&matrix, &[("A", "B"), ("D", "E")]);
        let between = mean_cosine(&matrix, &[("A", "D"), ("B", "E")]);
        assert!(within > between);
    }

    #[test]
    fn all_short_sentences_is_an_error() {
        let corpus = corpus_of(&[vec!["A"], vec!["B"], vec!["A"]]);
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        let err = train_embeddings(&corpus, &vocab, &small_config(3)).unwrap_err();
        assert!(matches!(err, EmbeddingError::NoUsableSentences));
    }

    #[test]
    fn exploding_learning_rate_reports_non_finite() {
        let lists: Vec<Vec<&str>> = (0..10).map(|_| vec!["A", "B", "C"]).collect();
        let corpus = corpus_of(&lists);
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        let config = EmbeddingConfig {
            learning_rate: 1e200,
            epochs: 3,
            ..small_config(5)
        };
        let err = train_embeddings(&corpus, &vocab, &config).unwrap_err();
        assert!(
            matches!(err, EmbeddingError::NonFinite { .. }),
            "expected non-finite abort, got {err:?}"
        );
    }

    #[test]
    fn pair_counting_respects_window() {
        assert_eq!(pairs_in_sentence(2, 8), 2);
        assert_eq!(pairs_in_sentence(4, 8), 12);
        assert_eq!(pairs_in_sentence(4, 1), 6);
        assert_eq!(pairs_in_sentence(1, 8), 0);
    }

    #[test]
    fn negative_table_tracks_powered_frequencies() {
        let table = NegativeTable::new(&[80, 10, 10]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut counts = [0u64; 3];
        let draws = 200_000;
        for _ in 0..draws {
            counts[table.sample(&mut rng)] += 1;
        }
        let weights: Vec<f64> = [80u64, 10, 10]
            .iter()
            .map(|&f| (f as f64).powf(0.75))
            .collect();
        let total: f64 = weights.iter().sum();
        for w in 0..3 {
            let expected = weights[w] / total;
            let observed = counts[w] as f64 / draws as f64;
            assert!(
                (observed - expected).abs() < 0.01,
                "word {w}: observed {observed}, expected {expected}"
            );
        }
    }
}
