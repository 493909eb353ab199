//! The `needscope` command line.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use needscope_core::{load_dataset, Dataset, FeatureSpace, Need, Region};
use needscope_features::bovw::{build_vocabulary, encode, profile_descriptors, Vocabulary};
use needscope_features::surf::dump::DescriptorRecord;
use needscope_features::surf::{extract, GrayMatrix};
use needscope_features::tags::{build_dictionary, histogram, FixtureReader, RecognizerClient, TagSource};
use needscope_features::text::{profile_tokens, tokenize, train_skipgram, user_vector};
use needscope_glocal::{train, TrainingData};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::corpus::{load_images, Corpus};
use crate::error::{HarnessError, Result};
use crate::featfile::{read_descriptor_store, read_features, read_labels, write_descriptors, write_features, FeatureTable};
use crate::loso::run_loso;
use crate::report::{emit_report, EvaluationReport};
use crate::synth::{generate, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "needscope", version, about = "Predict Glasser needs from profile images, tags and captions")]
pub struct Cli {
    /// Experiment configuration (TOML); flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for extraction and folds.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct DatasetArg {
    /// Dataset root holding `profiles/`.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate a dataset, writing a JSON summary.
    Ingest {
        #[command(flatten)]
        data: DatasetArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// SURF descriptors of every image, one CSV row per keypoint.
    ExtractSurf {
        #[command(flatten)]
        data: DatasetArg,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        octaves: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        keep: Option<f64>,
        #[arg(long)]
        upright: bool,
    },
    /// Cluster sampled descriptors into a visual vocabulary.
    BuildVocab {
        #[command(flatten)]
        data: DatasetArg,
        #[arg(long)]
        descriptors: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Bag-of-visual-words feature file.
    Encode {
        #[command(flatten)]
        data: DatasetArg,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        descriptors: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Tag histogram feature file from recognizer fixtures.
    BuildTags {
        #[command(flatten)]
        data: DatasetArg,
        #[arg(long)]
        source: TagSource,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        min_score: Option<f64>,
    },
    /// Skip-gram embeddings per region, plus the text feature file.
    EmbedText {
        #[command(flatten)]
        data: DatasetArg,
        /// `all` or one region name.
        #[arg(long, default_value = "all")]
        region: String,
        #[arg(long)]
        dim: Option<usize>,
        /// Directory for `embeddings-<region>.txt` and `text.csv`.
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit GLOCAL on a feature file and a label file.
    TrainGlocal {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        g: Option<usize>,
        #[arg(long)]
        lambda1: Option<f64>,
        #[arg(long)]
        lambda2: Option<f64>,
        #[arg(long)]
        lambda3: Option<f64>,
        #[arg(long)]
        lambda4: Option<f64>,
        #[arg(long)]
        max_sweeps: Option<usize>,
    },
    /// Leave-one-subject-out evaluation.
    Evaluate {
        #[command(flatten)]
        data: DatasetArg,
        /// Comma-separated base spaces.
        #[arg(long, value_delimiter = ',')]
        spaces: Option<Vec<FeatureSpace>>,
        #[arg(long)]
        fusion: bool,
        /// Fit vocabularies, dictionaries and embeddings once on all
        /// profiles. Leaks test content; for comparison only.
        #[arg(long)]
        fast_leaky: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
    },
    /// Write a synthetic dataset with planted label structure.
    SynthGen {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Generator settings (JSON); flags override it.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Re-render a saved report as a table, CSV and SVG.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code: 0 success, 1 invalid input, 2 runtime failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command, cfg))
}

fn dataset_at(root: &Path) -> Result<Dataset> {
    require_dataset(root)?;
    Ok(load_dataset(root)?.0)
}

fn require_dataset(root: &Path) -> Result<()> {
    if !needscope_core::io::profiles_dir(root).is_dir() {
        return Err(HarnessError::Validation(format!("no dataset at {}: expected a profiles/ directory", root.display())));
    }
    Ok(())
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, body).map_err(|e| HarnessError::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(fs::File::open(path).map_err(|e| HarnessError::io(path, e))?))
}

fn dispatch(command: Command, mut cfg: ExperimentConfig) -> Result<()> {
    match command {
        Command::Ingest { data, output } => {
            require_dataset(&data.input)?;
            let (dataset, report) = load_dataset(&data.input)?;
            let json = serde_json::to_string_pretty(&report).expect("load report serializes");
            match output {
                Some(path) => write_text(&path, &json)?,
                None => stdout(&format!("{json}\n"))?,
            }
            log::info!("{} profiles, {} images, {} captions", dataset.len(), dataset.image_count(), dataset.caption_count());
        }
        Command::ExtractSurf { data, output, octaves, threshold, keep, upright } => {
            cfg.surf_octaves = octaves.unwrap_or(cfg.surf_octaves);
            cfg.surf_threshold = threshold.unwrap_or(cfg.surf_threshold);
            cfg.surf_keep_fraction = keep.unwrap_or(cfg.surf_keep_fraction);
            cfg.surf_upright |= upright;
            cfg.validate()?;
            let dataset = dataset_at(&data.input)?;
            let params = cfg.surf();
            let images = load_images(&data.input, &dataset)?;
            let per_image: Vec<Vec<DescriptorRecord>> = images
                .par_iter()
                .map(|(key, img)| {
                    let found = extract(&GrayMatrix::from_gray(img)?, &params)?;
                    Ok(found.into_iter().map(|(keypoint, descriptor)| DescriptorRecord { id: key.clone(), keypoint, descriptor }).collect())
                })
                .collect::<Result<_>>()?;
            write_descriptors(&output, &per_image.concat())?;
        }
        Command::BuildVocab { data, descriptors, output, fraction, k } => {
            cfg.vocab_image_fraction = fraction.unwrap_or(cfg.vocab_image_fraction);
            cfg.vocab_k = k.unwrap_or(cfg.vocab_k);
            cfg.validate()?;
            let dataset = dataset_at(&data.input)?;
            let store = read_descriptor_store(&descriptors)?;
            let vocab = build_vocabulary(&dataset, &store, &cfg.vocabulary())?;
            let mut buf = Vec::new();
            vocab.write(&mut buf).map_err(|e| HarnessError::io(&output, e))?;
            write_text(&output, &String::from_utf8(buf).expect("vocabulary is text"))?;
        }
        Command::Encode { data, vocab, descriptors, output } => {
            let dataset = dataset_at(&data.input)?;
            let vocab = Vocabulary::read(open(&vocab)?)?;
            let store = read_descriptor_store(&descriptors)?;
            let mut rows = Vec::new();
            for p in dataset.profiles() {
                let ds: Vec<&[f64]> = profile_descriptors(&store, &p.id).into_iter().map(|d| d.values()).collect();
                rows.push((p.id.clone(), encode(&ds, &vocab)?.values));
            }
            write_features(&output, &FeatureTable { space: FeatureSpace::BoVW, dim: vocab.k(), rows })?;
        }
        Command::BuildTags { data, source, output, min_score } => {
            cfg.tag_min_score = min_score.or(cfg.tag_min_score);
            cfg.validate()?;
            let dataset = dataset_at(&data.input)?;
            let reader = FixtureReader { root: data.input.clone() };
            let observations = dataset.profiles().iter().map(|p| reader.recognize(&p.id, &p.image_refs, source)).collect::<std::result::Result<Vec<_>, _>>()?;
            let dict = build_dictionary(observations.iter().flatten(), source);
            let rows = dataset
                .profiles()
                .iter()
                .zip(&observations)
                .map(|(p, obs)| (p.id.clone(), histogram(obs, &dict, cfg.tag_min_score).vector.values))
                .collect();
            log::info!("{:?} dictionary: {} tags", source, dict.len());
            write_features(&output, &FeatureTable { space: source.space(), dim: dict.len(), rows })?;
        }
        Command::EmbedText { data, region, dim, output } => {
            cfg.text_dim = dim.unwrap_or(cfg.text_dim);
            cfg.validate()?;
            let dataset = dataset_at(&data.input)?;
            let params = cfg.skipgram();
            let groups = dataset.by_region();
            let selected: Vec<(&Region, &Vec<usize>)> = groups.iter().filter(|(r, _)| region == "all" || r.as_str() == region).collect();
            if selected.is_empty() {
                return Err(HarnessError::Validation(format!("no profiles in region {region:?}")));
            }
            let mut rows = Vec::new();
            for (r, members) in selected {
                let sentences: Vec<Vec<String>> = members
                    .iter()
                    .flat_map(|&i| dataset.profiles()[i].captions.iter())
                    .map(|c| tokenize(&c.caption, &c.hashtags))
                    .filter(|s| !s.is_empty())
                    .collect();
                if sentences.is_empty() {
                    return Err(needscope_features::FeatureError::RegionWithoutText(r.to_string()).into());
                }
                let table = train_skipgram(&sentences, &params)?;
                let path = output.join(format!("embeddings-{r}.txt"));
                let mut buf = Vec::new();
                table.write(&mut buf).map_err(|e| HarnessError::io(&path, e))?;
                write_text(&path, &String::from_utf8(buf).expect("embeddings are text"))?;
                for &i in members {
                    let p = &dataset.profiles()[i];
                    rows.push((p.id.clone(), user_vector(&profile_tokens(p), &table).vector.values));
                }
            }
            rows.sort_by(|a, b| a.0.cmp(&b.0));
            write_features(&output.join("text.csv"), &FeatureTable { space: FeatureSpace::Text, dim: cfg.text_dim, rows })?;
        }
        Command::TrainGlocal { features, labels, output, k, g, lambda1, lambda2, lambda3, lambda4, max_sweeps } => {
            cfg.glocal_k = k.unwrap_or(cfg.glocal_k);
            cfg.glocal_g = g.unwrap_or(cfg.glocal_g);
            cfg.lambda1 = lambda1.unwrap_or(cfg.lambda1);
            cfg.lambda2 = lambda2.unwrap_or(cfg.lambda2);
            cfg.lambda3 = lambda3.unwrap_or(cfg.lambda3);
            cfg.lambda4 = lambda4.unwrap_or(cfg.lambda4);
            cfg.glocal_max_sweeps = max_sweeps.unwrap_or(cfg.glocal_max_sweeps);
            cfg.validate()?;
            let table = read_features(&features)?;
            let label_rows = read_labels(&labels)?;
            let mut y = DMatrix::from_element(Need::COUNT, table.rows.len(), -1i8);
            for (j, (id, _)) in table.rows.iter().enumerate() {
                let set = label_rows
                    .iter()
                    .find(|(lid, _)| lid == id)
                    .map(|(_, s)| *s)
                    .ok_or_else(|| HarnessError::Validation(format!("profile {id:?} has features but no labels")))?;
                y.set_column(j, &nalgebra::Vector5::from(set.signs()));
            }
            let data = TrainingData::new(table.matrix(), &y)?;
            let model = train(&data, &cfg.glocal()).map_err(|e| match e {
                needscope_glocal::GlocalError::InvalidParams(m) => HarnessError::Config(m),
                e => e.into(),
            })?;
            if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
            }
            model.save(&output)?;
            log::info!("{} sweeps, final objective {}", model.sweeps, model.trace.last().copied().unwrap_or(f64::NAN));
        }
        Command::Evaluate { data, spaces, fusion, fast_leaky, out, svg } => {
            if let Some(spaces) = spaces {
                cfg.spaces = spaces;
            }
            cfg.fusion |= fusion;
            cfg.fast_leaky |= fast_leaky;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            cfg.validate()?;
            require_dataset(&data.input)?;
            let corpus = Corpus::load(&data.input, &cfg)?;
            let report = run_loso(&corpus, &cfg)?;
            emit_report(&report, &cfg.output_dir, svg)?;
            stdout(&report.table())?;
        }
        Command::SynthGen { n, out, spec } => {
            let mut s = match spec {
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
                    serde_json::from_str(&text).map_err(|source| HarnessError::Json { path, source })?
                }
                None => SynthSpec::default(),
            };
            s.n = n.unwrap_or(s.n);
            generate(&s, cfg.seed)?.write(&out)?;
        }
        Command::Report { input, out, svg } => {
            let report = EvaluationReport::load(&input)?;
            if let Some(dir) = out {
                emit_report(&report, &dir, svg)?;
            }
            stdout(&report.table())?;
        }
    }
    Ok(())
}


/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn stdout(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(HarnessError::io("<stdout>", e)),
        _ => Ok(()),
    }
}
