//! `mashq`: train and run the two-stream word recognizer from the shell.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mashq_core::config::Config;
use mashq_core::features::{extract_streams, StreamSequence};
use mashq_core::harness::{benchmark_lexicon, evaluate, generate_corpus, Corpus, GlyphSet, Split};
use mashq_core::lexicon::{load_bundle, save_bundle, train, Lexicon};
use mashq_core::preprocess::{binarize_otsu, deskew, estimate_skew_hough, median3x3};
use mashq_core::raster::{crop, load_pnm, save_pbm, BBox, BinaryImage, PnmImage};
use mashq_core::segment::{segment_lines, segment_words};
use mashq_core::Error;

#[derive(Parser)]
#[command(name = "mashq", version, about = "Two-stream HMM word recognition toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Binarize and denoise a page, estimate its skew and write the
    /// deskewed image. Prints the estimated angle.
    Preprocess {
        /// Input PBM/PGM page.
        input: PathBuf,
        /// Output PBM path.
        #[arg(short, long)]
        output: PathBuf,
        /// Optional config file (skew search range and step).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Split a page into lines and words; writes word images and a box TSV.
    Segment {
        /// Input PBM/PGM page (already deskewed).
        input: PathBuf,
        /// Directory for the word images.
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Dump both feature streams of a word image as TSV.
    Features {
        /// Input word image (PBM/PGM).
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate a synthetic corpus from glyph prototypes.
    Gen {
        /// Output corpus directory.
        #[arg(long)]
        out: PathBuf,
        /// Directory of `<label>.pbm` glyphs; defaults to the builtin set.
        #[arg(long)]
        glyphs: Option<PathBuf>,
        /// Lexicon TSV; defaults to the builtin benchmark lexicon.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Corpus split to generate.
        #[arg(long, default_value = "train")]
        split: String,
        #[arg(long, default_value_t = 10)]
        n_per_word: usize,
        /// Salt-and-pepper flip probability.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Per-sample rotation is uniform in [-skew, skew] degrees.
        #[arg(long, default_value_t = 0.0)]
        skew: f64,
        /// Generation seed; the same seed reproduces the corpus exactly.
        #[arg(long)]
        seed: u64,
    },
    /// Train a recognizer on a corpus directory and write a bundle.
    Train {
        /// Corpus directory (as written by `gen`).
        #[arg(long)]
        corpus: PathBuf,
        /// Lexicon TSV; defaults to the builtin benchmark lexicon.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Config file (key = value); built-in defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Training seed (codebook initialization).
        #[arg(long)]
        seed: u64,
        /// Output bundle directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank every lexicon word against a word image.
    Recognize {
        /// Recognizer bundle directory.
        #[arg(long)]
        bundle: PathBuf,
        /// Input word image (PBM/PGM).
        input: PathBuf,
    },
    /// Score a test corpus with both single streams and their combination.
    Evaluate {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successful exits.
            let _ = err.print();
            return match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed pipe on stdout (e.g. `mashq ... | head`) is not an error.
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("mashq: {err}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<Config, Error> {
    match path {
        Some(p) => Config::parse(&fs::read_to_string(p)?),
        None => Ok(Config::default()),
    }
}

fn load_lexicon(path: &Option<PathBuf>) -> Result<Lexicon, Error> {
    match path {
        Some(p) => Lexicon::parse_tsv(&fs::read_to_string(p)?),
        None => Ok(benchmark_lexicon()),
    }
}

fn load_binary(path: &Path) -> Result<BinaryImage, Error> {
    match load_pnm(&fs::read(path)?)? {
        PnmImage::Binary(img) => Ok(img),
        PnmImage::Gray(img) => Ok(binarize_otsu(&img)),
    }
}

fn run(command: Command) -> Result<(), Error> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Preprocess { input, output, config } => {
            let cfg = load_config(&config)?;
            let page = median3x3(&load_binary(&input)?);
            let est = estimate_skew_hough(&page, cfg.skew_range, cfg.skew_step)?;
            let fixed = deskew(&page, &est);
            fs::write(&output, save_pbm(&fixed))?;
            writeln!(out, "skew_degrees\t{:.2}", est.angle)?;
            Ok(())
        }
        Command::Segment { input, out_dir, config } => {
            let cfg = load_config(&config)?;
            let page = load_binary(&input)?;
            fs::create_dir_all(&out_dir)?;
            writeln!(out, "line\tword\tx0\ty0\tx1\ty1\tpath")?;
            for (li, band) in segment_lines(&page, cfg.line_alpha)?.iter().enumerate() {
                let line =
                    crop(&page, BBox { x0: 0, y0: band.top, x1: page.width, y1: band.bottom });
                for word_box in segment_words(&line, cfg.word_gap)? {
                    let b = word_box.bbox;
                    let image = crop(&line, b);
                    let name = format!("line{li:02}_word{:02}.pbm", word_box.order_index);
                    let path = out_dir.join(&name);
                    fs::write(&path, save_pbm(&image))?;
                    writeln!(
                        out,
                        "{li}\t{}\t{}\t{}\t{}\t{}\t{}",
                        word_box.order_index,
                        b.x0,
                        band.top + b.y0,
                        b.x1,
                        band.top + b.y1,
                        path.display()
                    )?;
                }
            }
            Ok(())
        }
        Command::Features { input, config } => {
            let cfg = load_config(&config)?;
            let word = load_binary(&input)?;
            let (sw, vh) = extract_streams(&word, &cfg.feature_params())?;
            print_stream(&mut out, &sw)?;
            print_stream(&mut out, &vh)?;
            Ok(())
        }
        Command::Gen { out: out_path, glyphs, lexicon, split, n_per_word, noise, skew, seed } => {
            let glyph_set = match &glyphs {
                Some(dir) => GlyphSet::from_dir(dir)?,
                None => GlyphSet::builtin(),
            };
            let lex = load_lexicon(&lexicon)?;
            let split = match split.as_str() {
                "train" => Split::Train,
                "test" => Split::Test,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "split must be `train` or `test`, got `{other}`"
                    )))
                }
            };
            let corpus = generate_corpus(&glyph_set, &lex, n_per_word, noise, skew, seed, split)?;
            corpus.save(&out_path)?;
            writeln!(out, "generated\t{}\t{}", corpus.samples.len(), out_path.display())?;
            Ok(())
        }
        Command::Train { corpus, lexicon, config, seed, out: out_path } => {
            let cfg = load_config(&config)?;
            let lex = load_lexicon(&lexicon)?;
            let data = Corpus::load(&corpus)?;
            let rec = train(&data.to_samples(), &lex, &cfg, seed)?;
            save_bundle(&rec, &out_path)?;
            writeln!(out, "trained\t{}\t{}", data.samples.len(), out_path.display())?;
            Ok(())
        }
        Command::Recognize { bundle, input } => {
            let rec = load_bundle(&bundle)?;
            let word = load_binary(&input)?;
            let result = rec.recognize(&word)?;
            writeln!(out, "rank\tword\tfused\tsw\tvh2d")?;
            for (rank, c) in result.ranking.iter().enumerate() {
                writeln!(out, "{rank}\t{}\t{}\t{}\t{}", c.word, c.fused, c.per_stream[0], c.per_stream[1])?;
            }
            Ok(())
        }
        Command::Evaluate { bundle, corpus } => {
            let rec = load_bundle(&bundle)?;
            let data = Corpus::load(&corpus)?;
            let report = evaluate(&rec, &data)?;
            write!(out, "{}", report.to_tsv())?;
            Ok(())
        }
    }
}

fn print_stream(out: &mut impl Write, stream: &StreamSequence) -> Result<(), Error> {
    let dims = stream.vectors.first().map(Vec::len).unwrap_or(0);
    writeln!(out, "# mashq-features v1 stream={} dims={dims}", stream.stream_id)?;
    for (i, vec) in stream.vectors.iter().enumerate() {
        let vals: Vec<String> = vec.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}\t{i}\t{}", stream.stream_id, vals.join("\t"))?;
    }
    Ok(())
}
