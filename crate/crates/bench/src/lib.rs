//! Shared fixtures for the pipeline benchmarks: a small trained recognizer,
//! generated word images and a synthetic page, all fully seeded.

use mashq_core::config::Config;
use mashq_core::harness::{generate_corpus, Corpus, GlyphSet, Split};
use mashq_core::lexicon::{train, Lexicon, Recognizer};
use mashq_core::raster::BinaryImage;

/// Deterministic three-bar page for the skew benchmarks.
pub fn three_bar_page() -> BinaryImage {
    let mut page = BinaryImage::blank(360, 240);
    for (top, bottom) in [(60, 63), (120, 123), (180, 183)] {
        for y in top..bottom {
            for x in 40..320 {
                page.set(x, y, 1);
            }
        }
    }
    page
}

/// A lexicon small enough to train in benchmark setup.
pub fn bench_lexicon() -> Lexicon {
    let entries = ["aci", "ekm", "gjo", "lpd", "mnop"]
        .iter()
        .map(|w| (w.to_string(), w.chars().map(|c| c.to_string()).collect()))
        .collect();
    Lexicon::new(entries).unwrap()
}

/// Training configuration sized for benchmark setup time.
pub fn bench_config() -> Config {
    Config { codebook_size: 32, em_iters: 4, kmeans_iters: 10, ..Config::default() }
}

/// Generated word images at the benchmark noise level.
pub fn bench_corpus(seed: u64, per_word: usize) -> Corpus {
    generate_corpus(&GlyphSet::builtin(), &bench_lexicon(), per_word, 0.03, 5.0, seed, Split::Train)
        .unwrap()
}

/// A recognizer trained on the benchmark fixtures.
pub fn bench_recognizer() -> Recognizer {
    let corpus = bench_corpus(77, 8);
    train(&corpus.to_samples(), &bench_lexicon(), &bench_config(), 77).unwrap()
}
