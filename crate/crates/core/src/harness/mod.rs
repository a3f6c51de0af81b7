//! Synthetic-corpus generation and end-to-end evaluation: the machinery for
//! training and scoring the recognizer without external data, reporting the
//! familiar three-row comparison (each single stream and their combination).

mod glyphs;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::lexicon::{train, Lexicon, Recognizer, Sample};
use crate::multistream::{rank_words, StreamWeights};
use crate::raster::{add_salt_pepper, load_pnm, rotate, save_pbm, BinaryImage, PnmImage};

/// A character-label to prototype-image alphabet of consistent height.
#[derive(Debug, Clone)]
pub struct GlyphSet {
    alphabet: BTreeMap<String, BinaryImage>,
    height: usize,
}

impl GlyphSet {
    pub fn new(alphabet: BTreeMap<String, BinaryImage>) -> Result<Self> {
        let Some(height) = alphabet.values().next().map(|g| g.height) else {
            return Err(Error::invalid("glyph set must not be empty"));
        };
        for (label, glyph) in &alphabet {
            if glyph.is_blank() {
                return Err(Error::invalid(format!("glyph `{label}` is blank")));
            }
            if glyph.height != height {
                return Err(Error::invalid(format!(
                    "glyph `{label}` has height {} but the set uses {height}",
                    glyph.height
                )));
            }
        }
        Ok(GlyphSet { alphabet, height })
    }

    /// The sixteen-glyph alphabet shipped with the toolkit.
    pub fn builtin() -> GlyphSet {
        let alphabet = glyphs::GLYPH_ART
            .iter()
            .map(|(label, art)| (label.to_string(), BinaryImage::from_ascii(art)))
            .collect();
        GlyphSet::new(alphabet).expect("builtin glyphs are well formed")
    }

    /// Load `<label>.pbm` prototypes from a directory.
    pub fn from_dir(dir: &Path) -> Result<GlyphSet> {
        let mut alphabet = BTreeMap::new();
        let mut paths: Vec<_> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
        paths.sort();
        for path in paths {
            if path.extension().and_then(|e| e.to_str()) != Some("pbm") {
                continue;
            }
            let label = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::invalid(format!("bad glyph file name {}", path.display())))?
                .to_string();
            match load_pnm(&fs::read(&path)?)? {
                PnmImage::Binary(img) => alphabet.insert(label, img),
                PnmImage::Gray(_) => {
                    return Err(Error::invalid(format!("{}: glyphs must be bilevel", path.display())))
                }
            };
        }
        GlyphSet::new(alphabet)
    }

    pub fn get(&self, label: &str) -> Option<&BinaryImage> {
        self.alphabet.get(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.alphabet.keys().map(String::as_str)
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

/// Which split a corpus belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    fn parse(s: &str) -> Result<Split> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(format!("unknown split `{other}`"))),
        }
    }
}

/// One generated word image with the seed that produced it.
#[derive(Debug, Clone)]
pub struct CorpusSample {
    pub label: String,
    pub image: BinaryImage,
    pub seed: u64,
}

/// A labeled set of word images.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub samples: Vec<CorpusSample>,
    pub split: Split,
    pub seed: u64,
}

/// Render one word: glyphs concatenated right to left with random 0..=3 px
/// spacing, rotated by a uniform angle in [-skew, skew], then salt-and-pepper
/// noise. Fully determined by `sample_seed`.
fn render_sample(
    glyph_set: &GlyphSet,
    spelling: &[String],
    noise_p: f64,
    skew_deg: f64,
    sample_seed: u64,
) -> Result<BinaryImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
    let mut parts = Vec::with_capacity(spelling.len());
    for label in spelling {
        let glyph = glyph_set
            .get(label)
            .ok_or_else(|| Error::UnknownCharacter(label.clone()))?;
        parts.push(glyph);
    }
    let spacings: Vec<usize> =
        (0..spelling.len().saturating_sub(1)).map(|_| rng.gen_range(0..=3)).collect();

    let width: usize = parts.iter().map(|g| g.width).sum::<usize>() + spacings.iter().sum::<usize>();
    let mut word = BinaryImage::blank(width, glyph_set.height());
    let mut right = width;
    for (idx, glyph) in parts.iter().enumerate() {
        let x0 = right - glyph.width;
        for y in 0..glyph.height {
            for x in 0..glyph.width {
                if glyph.get(x, y) == 1 {
                    word.set(x0 + x, y, 1);
                }
            }
        }
        right = x0.saturating_sub(spacings.get(idx).copied().unwrap_or(0));
    }

    let theta = rng.gen_range(-skew_deg..=skew_deg);
    let rotated = rotate(&word, theta);
    let noise_seed = rng.gen::<u64>();
    Ok(add_salt_pepper(&rotated, noise_p, noise_seed))
}

/// Generate `n_per_word` samples of every lexicon word. Per-sample seeds are
/// drawn from a master generator over words in lexicographic order, so the
/// same arguments always produce a bit-identical corpus.
pub fn generate_corpus(
    glyph_set: &GlyphSet,
    lexicon: &Lexicon,
    n_per_word: usize,
    noise_p: f64,
    skew_deg: f64,
    seed: u64,
    split: Split,
) -> Result<Corpus> {
    if n_per_word < 1 {
        return Err(Error::invalid("n_per_word must be >= 1"));
    }
    if !(0.0..=0.5).contains(&noise_p) {
        return Err(Error::invalid("noise_p must be in [0, 0.5]"));
    }
    if !(0.0..=20.0).contains(&skew_deg.abs()) {
        return Err(Error::invalid("|skew_deg| must be <= 20"));
    }
    let skew_deg = skew_deg.abs();

    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(lexicon.len() * n_per_word);
    for word in lexicon.words() {
        let spelling = lexicon.spelling(word).unwrap().to_vec();
        for _ in 0..n_per_word {
            let sample_seed = master.gen::<u64>();
            let image = render_sample(glyph_set, &spelling, noise_p, skew_deg, sample_seed)?;
            samples.push(CorpusSample { label: word.to_string(), image, seed: sample_seed });
        }
    }
    Ok(Corpus { samples, split, seed })
}

impl Corpus {
    /// Strip the generation metadata for training.
    pub fn to_samples(&self) -> Vec<Sample> {
        self.samples
            .iter()
            .map(|s| Sample { label: s.label.clone(), image: s.image.clone() })
            .collect()
    }

    /// Write `<split>/<word>/<seq>.pbm` files plus `manifest.tsv`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut manifest =
            format!("# mashq-corpus v1 split={} seed={}\n", self.split.dir_name(), self.seed);
        let mut seq_within: BTreeMap<&str, usize> = BTreeMap::new();
        for sample in &self.samples {
            let seq = seq_within.entry(sample.label.as_str()).or_insert(0);
            let rel = format!("{}/{}/{:03}.pbm", self.split.dir_name(), sample.label, seq);
            *seq += 1;
            let path = dir.join(&rel);
            fs::create_dir_all(path.parent().unwrap())?;
            fs::write(&path, save_pbm(&sample.image))?;
            manifest.push_str(&format!("{rel}\t{}\t{}\n", sample.label, sample.seed));
        }
        fs::write(dir.join("manifest.tsv"), manifest)?;
        Ok(())
    }

    /// Read a corpus directory written by [`Corpus::save`].
    pub fn load(dir: &Path) -> Result<Corpus> {
        let manifest = fs::read_to_string(dir.join("manifest.tsv"))?;
        let mut split = Split::Train;
        let mut seed = 0u64;
        let mut samples = Vec::new();
        for (lineno, line) in manifest.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                for tok in rest.split_whitespace() {
                    if let Some(v) = tok.strip_prefix("split=") {
                        split = Split::parse(v)?;
                    } else if let Some(v) = tok.strip_prefix("seed=") {
                        seed = v
                            .parse()
                            .map_err(|_| Error::invalid(format!("manifest: bad seed `{v}`")))?;
                    }
                }
                continue;
            }
            let mut cols = line.split('\t');
            let (rel, label, sample_seed) = match (cols.next(), cols.next(), cols.next()) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => {
                    return Err(Error::invalid(format!(
                        "manifest line {}: expected path TAB label TAB seed",
                        lineno + 1
                    )))
                }
            };
            let sample_seed: u64 = sample_seed
                .parse()
                .map_err(|_| Error::invalid(format!("manifest: bad sample seed `{sample_seed}`")))?;
            let image = match load_pnm(&fs::read(dir.join(rel))?)? {
                PnmImage::Binary(img) => img,
                PnmImage::Gray(_) => {
                    return Err(Error::invalid(format!("{rel}: corpus images must be bilevel")))
                }
            };
            samples.push(CorpusSample { label: label.to_string(), image, seed: sample_seed });
        }
        Ok(Corpus { samples, split, seed })
    }
}

/// Accuracy of the two single-stream recognizers and their combination.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Exactly three rows, in order: stream-SW, stream-VH2D, combined.
    pub rows: Vec<(String, f64)>,
    pub sample_count: usize,
    /// (truth, prediction) counts of the combined recognizer.
    pub confusions: BTreeMap<(String, String), usize>,
}

impl EvalReport {
    pub fn accuracy(&self, row: &str) -> Option<f64> {
        self.rows.iter().find(|(name, _)| name == row).map(|(_, acc)| *acc)
    }

    /// The report as TSV, rates with one decimal.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("recognizer\trate\n");
        for (name, rate) in &self.rows {
            out.push_str(&format!("{name}\t{rate:.1}\n"));
        }
        out
    }
}

/// Score every test sample once per stream, then decide under three weight
/// settings: (1, 0), (0, 1) and the recognizer's configured fusion weights.
pub fn evaluate(rec: &Recognizer, test: &Corpus) -> Result<EvalReport> {
    if test.samples.is_empty() {
        return Err(Error::invalid("empty test corpus"));
    }
    let settings = [
        ("stream-SW", StreamWeights::new(1.0, 0.0).unwrap()),
        ("stream-VH2D", StreamWeights::new(0.0, 1.0).unwrap()),
        ("combined", rec.weights()),
    ];
    let mut correct = [0usize; 3];
    let mut confusions: BTreeMap<(String, String), usize> = BTreeMap::new();
    for sample in &test.samples {
        let table = rec.score_table(&sample.image)?;
        for (i, (_, weights)) in settings.iter().enumerate() {
            let ranked = rank_words(&table, weights);
            let top = &ranked[0].word;
            if *top == sample.label {
                correct[i] += 1;
            }
            if i == 2 {
                *confusions.entry((sample.label.clone(), top.clone())).or_insert(0) += 1;
            }
        }
    }
    let n = test.samples.len();
    let rows = settings
        .iter()
        .enumerate()
        .map(|(i, (name, _))| (name.to_string(), 100.0 * correct[i] as f64 / n as f64))
        .collect();
    Ok(EvalReport { rows, sample_count: n, confusions })
}

/// The twenty-word evaluation vocabulary over the builtin glyph set. The
/// words are prefix-free and include the near-pairs (dot, position and scale
/// contrasts) that give each stream a different failure mode.
pub fn benchmark_lexicon() -> Lexicon {
    const WORDS: [&str; 20] = [
        "aci", "bci", "cfa", "dgf", "ekm", "fkm", "gjo", "hjo", "hba", "icga", "jgia", "kelo",
        "lpc", "lpd", "mnop", "mpon", "njh", "okld", "pbem", "ponm",
    ];
    let entries = WORDS
        .iter()
        .map(|w| (w.to_string(), w.chars().map(|c| c.to_string()).collect()))
        .collect();
    Lexicon::new(entries).expect("benchmark lexicon is well formed")
}

/// Mixed into the benchmark seed to derive the test-split seed.
const TEST_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

/// Benchmark settings pinned by the acceptance suite.
pub const BENCHMARK_TRAIN_PER_WORD: usize = 10;
pub const BENCHMARK_TEST_PER_WORD: usize = 5;
pub const BENCHMARK_NOISE: f64 = 0.03;
pub const BENCHMARK_SKEW: f64 = 5.0;

/// Result of a fusion-weight grid search.
#[derive(Debug, Clone)]
pub struct WeightSearch {
    /// (stream-SW weight, fused accuracy) at each grid point.
    pub grid: Vec<(f64, f64)>,
    pub best: StreamWeights,
}

/// Sweep the stream-SW weight over {0.0, 0.1, ..., 1.0} on a validation
/// corpus and pick the most accurate fusion. Ties prefer the weight closest
/// to an even split, then the smaller weight.
pub fn grid_search_weights(rec: &Recognizer, validation: &Corpus) -> Result<WeightSearch> {
    if validation.samples.is_empty() {
        return Err(Error::invalid("empty validation corpus"));
    }
    let tables: Vec<_> = validation
        .samples
        .iter()
        .map(|s| rec.score_table(&s.image))
        .collect::<Result<Vec<_>>>()?;

    let mut grid = Vec::with_capacity(11);
    for step in 0..=10u32 {
        let w1 = step as f64 / 10.0;
        let weights = StreamWeights::new(w1, 1.0 - w1).unwrap();
        let correct = tables
            .iter()
            .zip(&validation.samples)
            .filter(|(table, sample)| rank_words(table, &weights)[0].word == sample.label)
            .count();
        grid.push((w1, 100.0 * correct as f64 / validation.samples.len() as f64));
    }

    let &(best_w1, _) = grid
        .iter()
        .max_by(|(w_x, acc_x), (w_y, acc_y)| {
            acc_x
                .total_cmp(acc_y)
                .then_with(|| (w_y - 0.5).abs().total_cmp(&(w_x - 0.5).abs()))
                .then_with(|| w_y.total_cmp(w_x))
        })
        .unwrap();
    Ok(WeightSearch { grid, best: StreamWeights::new(best_w1, 1.0 - best_w1).unwrap() })
}

/// Outcome of one benchmark run.
#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub recognizer: Recognizer,
    pub report: EvalReport,
}

/// Train on the builtin glyphs and benchmark lexicon at the pinned settings
/// and evaluate on a fresh test split derived from the same seed.
pub fn run_benchmark(seed: u64) -> Result<BenchmarkRun> {
    let glyph_set = GlyphSet::builtin();
    let lexicon = benchmark_lexicon();
    let config = Config::default();
    let train_corpus = generate_corpus(
        &glyph_set,
        &lexicon,
        BENCHMARK_TRAIN_PER_WORD,
        BENCHMARK_NOISE,
        BENCHMARK_SKEW,
        seed,
        Split::Train,
    )?;
    let test_corpus = generate_corpus(
        &glyph_set,
        &lexicon,
        BENCHMARK_TEST_PER_WORD,
        BENCHMARK_NOISE,
        BENCHMARK_SKEW,
        seed ^ TEST_SEED_MIX,
        Split::Test,
    )?;
    let recognizer = train(&train_corpus.to_samples(), &lexicon, &config, seed)?;
    let report = evaluate(&recognizer, &test_corpus)?;
    Ok(BenchmarkRun { recognizer, report })
}
