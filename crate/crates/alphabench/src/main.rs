use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alphabench::config::{load_manifest, load_moments, read_json, to_json_string, write_json};
use alphabench::dataset_io::{augment_manifest, ingest, stats_csv};
use alphabench::emit::{self, Format};
use alphabench::eval::{run_eval, EvalConfig};
use alphabench::io::{load_rgb, load_rgba, save_rgb, BitDepth};
use alphabench::plugin::PluginSpec;
use alphabench::{afs, atc, Error, Result};
use alphabench_core::dataset::Xorshift64Star;
use alphabench_core::losses::{abmse_closed, abmse_mc, DyadicSampler, GaussianSampler, UniformSampler};
use alphabench_core::metrics::{frechet_distance, gaussian_stats, SqrtMethod};
use alphabench_core::moments::{ChannelHistogram, MomentAccumulator};
use alphabench_core::report::{compare, MetricReport};
use alphabench_core::surgery::{extend_decoder_last_conv, extend_encoder_first_conv};
use alphabench_core::{blend, default_moments, to_signed, Background, CanonicalBackgroundSet, Domain, RgbImage};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "alphabench", version, about = "RGBA reconstruction benchmark toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Composite an RGBA image over a solid background.
    Blend {
        #[arg(long)]
        input: PathBuf,
        /// Canonical colour name or `r,g,b` in [0, 1].
        #[arg(long)]
        background: String,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: u8,
    },
    /// Score predictions against ground truth over the nine backgrounds.
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Comma-separated built-in metrics (mse, psnr, ssim).
        #[arg(long, value_delimiter = ',', default_value = "psnr,ssim")]
        metrics: Vec<String>,
        /// Directory of per-background AFS1 feature files for rFID.
        #[arg(long)]
        features: Option<PathBuf>,
        /// JSON list of plugin declarations.
        #[arg(long)]
        plugins: Option<PathBuf>,
        /// `stem,label` CSV for subtype breakdowns.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value = "eval")]
        dataset: String,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Closed-form background-averaged MSE, with an optional Monte-Carlo check.
    Abmse {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Signed-domain moments JSON; defaults to the built-in moments.
        #[arg(long)]
        moments: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        mc_samples: u64,
        #[arg(long, value_enum, default_value_t = SamplerKind::ThreePoint)]
        sampler: SamplerKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fréchet distance between two AFS1 feature files.
    Fid {
        #[arg(long)]
        gt_features: PathBuf,
        #[arg(long)]
        pred_features: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Eigen)]
        method: Method,
    },
    /// Estimate per-channel background moments over a directory of images.
    Moments {
        #[arg(long)]
        images: PathBuf,
        #[arg(long, value_enum, default_value_t = DomainArg::Signed)]
        domain: DomainArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Per-channel value histogram as `channel,bin,count` CSV.
    Histogram {
        #[arg(long)]
        images: PathBuf,
        #[arg(long, default_value_t = 256)]
        bins: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Combine foregrounds and mattes into RGBA files plus a manifest.
    Ingest {
        #[arg(long)]
        fg: PathBuf,
        #[arg(long)]
        matte: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reassign the train/test split of a manifest.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to rewriting the input manifest.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Split counts and mean resolution per manifest.
    Stats {
        #[arg(long, required = true)]
        manifest: Vec<PathBuf>,
    },
    /// Composite entries over random solid colours.
    Augment {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        probability: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Weight surgery on ATC1 containers.
    Surgery {
        #[command(subcommand)]
        action: SurgeryCmd,
    },
    /// Render a report or compare two reports.
    Report {
        /// Baseline and candidate report JSON files.
        #[arg(long, num_args = 2, value_names = ["BASELINE", "CANDIDATE"], conflicts_with = "render")]
        compare: Option<Vec<PathBuf>>,
        #[arg(long)]
        render: Option<PathBuf>,
        #[arg(long, default_value = "markdown")]
        format: String,
        /// Allowed gap between a stored overall and the background mean;
        /// the default admits tables transcribed at four decimals.
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

#[derive(Subcommand)]
enum SurgeryCmd {
    /// Extend the encoder stem to 4 inputs and the decoder head to 4 outputs.
    Extend {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        encoder_conv: String,
        #[arg(long)]
        decoder_conv: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// List tensors and shapes.
    Inspect {
        #[arg(long)]
        weights: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerKind {
    SymmetricTwoPoint,
    SkewedTwoPoint,
    ThreePoint,
    Uniform,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Eigen,
    NewtonSchulz,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Unit,
    Signed,
}

fn parse_background(s: &str) -> Result<Background> {
    if let Some(named) = CanonicalBackgroundSet::get(s) {
        return Ok(named.into());
    }
    let parts: Vec<f32> = s
        .split(',')
        .map(|p| p.trim().parse::<f32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Input(format!("background {s:?} is neither a canonical name nor r,g,b")))?;
    let rgb: [f32; 3] = parts
        .try_into()
        .map_err(|_| Error::Input(format!("background {s:?} needs three components")))?;
    Ok(Background::solid(rgb)?)
}

fn depth(bits: u8) -> Result<BitDepth> {
    match bits {
        8 => Ok(BitDepth::Eight),
        16 => Ok(BitDepth::Sixteen),
        other => Err(Error::Input(format!("bit depth must be 8 or 16, got {other}"))),
    }
}

fn emit_text(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.into(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn png_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::Io {
            path: dir.into(),
            source: e,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Input(format!("no PNG files in {}", dir.display())));
    }
    Ok(files)
}

fn load_corpus(dir: &Path) -> Result<Vec<RgbImage>> {
    png_files(dir)?.par_iter().map(|p| load_rgb(p)).collect()
}

fn parent_dir(p: &Path) -> &Path {
    p.parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Blend {
            input,
            background,
            output,
            depth: bits,
        } => {
            let x = load_rgba(&input)?;
            save_rgb(&output, &blend(&x, &parse_background(&background)?)?, depth(bits)?)
        }
        Cmd::Eval {
            gt,
            pred,
            metrics,
            features,
            plugins,
            labels,
            dataset,
            threads,
            format,
            output,
        } => {
            let mut config = EvalConfig::new(dataset, gt, pred);
            config.metrics = metrics
                .iter()
                .filter(|m| !m.is_empty())
                .map(|m| m.parse())
                .collect::<Result<_>>()?;
            config.features_dir = features;
            config.plugins = match plugins {
                Some(p) => read_json::<Vec<PluginSpec>>(&p)?,
                None => Vec::new(),
            };
            config.labels = labels;
            config.threads = threads;
            let format: Format = format.parse()?;
            let report = run_eval(&config)?;
            emit_text(&emit::report(&report, format), output.as_deref())
        }
        Cmd::Abmse {
            gt,
            pred,
            moments,
            mc_samples,
            sampler,
            seed,
        } => {
            let m = match moments {
                Some(p) => load_moments(&p)?,
                None => default_moments(),
            };
            let x = to_signed(&load_rgba(&gt)?);
            let xh = to_signed(&load_rgba(&pred)?);
            let closed = abmse_closed(&x, &xh, &m)?;
            let mut out = serde_json::json!({ "closed": closed });
            if mc_samples > 0 {
                let mut rng = Xorshift64Star::new(seed);
                let est = match sampler {
                    SamplerKind::SymmetricTwoPoint => {
                        abmse_mc(&x, &xh, &DyadicSampler::symmetric_two_point(&m), mc_samples, &mut rng)
                    }
                    SamplerKind::SkewedTwoPoint => {
                        abmse_mc(&x, &xh, &DyadicSampler::skewed_two_point(&m), mc_samples, &mut rng)
                    }
                    SamplerKind::ThreePoint => abmse_mc(&x, &xh, &DyadicSampler::three_point(&m), mc_samples, &mut rng),
                    SamplerKind::Uniform => abmse_mc(&x, &xh, &UniformSampler::matching(&m), mc_samples, &mut rng),
                    SamplerKind::Gaussian => abmse_mc(&x, &xh, &GaussianSampler::matching(&m), mc_samples, &mut rng),
                }?;
                out["mc"] = est.estimate.into();
                out["stderr"] = est.stderr.into();
                out["mc_samples"] = est.n_samples.into();
            }
            emit_text(&to_json_string(&out), None)
        }
        Cmd::Fid {
            gt_features,
            pred_features,
            method,
        } => {
            let a = afs::FeatureFile::read(&gt_features)?;
            let b = afs::FeatureFile::read(&pred_features)?;
            afs::check_compatible(&a, &b)?;
            let method = match method {
                Method::Eigen => SqrtMethod::Eigen,
                Method::NewtonSchulz => SqrtMethod::NewtonSchulz,
            };
            let d = frechet_distance(&gaussian_stats(&a.features)?, &gaussian_stats(&b.features)?, method)?;
            println!("{d}");
            Ok(())
        }
        Cmd::Moments { images, domain, output } => {
            let domain = match domain {
                DomainArg::Unit => Domain::Unit,
                DomainArg::Signed => Domain::Signed,
            };
            let partials: Vec<MomentAccumulator> = png_files(&images)?
                .par_iter()
                .map(|p| {
                    let mut acc = MomentAccumulator::new(domain);
                    acc.push(&load_rgb(p)?);
                    Ok(acc)
                })
                .collect::<Result<_>>()?;
            let mut total = MomentAccumulator::new(domain);
            for p in &partials {
                total.merge(p)?;
            }
            let m = total.finish()?;
            match output {
                Some(p) => write_json(&p, &m),
                None => emit_text(&to_json_string(&m), None),
            }
        }
        Cmd::Histogram { images, bins, output } => {
            let mut h = ChannelHistogram::new(bins)?;
            for img in load_corpus(&images)? {
                h.push(&img);
            }
            let mut csv = String::from("channel,bin,count\n");
            for (c, name) in ["r", "g", "b"].iter().enumerate() {
                for (i, n) in h.counts(c).iter().enumerate() {
                    csv.push_str(&format!("{name},{i},{n}\n"));
                }
            }
            emit_text(&csv, output.as_deref())
        }
        Cmd::Ingest {
            fg,
            matte,
            out,
            name,
            test_fraction,
            seed,
        } => {
            let name = name.unwrap_or_else(|| fg.file_name().unwrap_or_default().to_string_lossy().into_owned());
            let m = ingest(&fg, &matte, &out, &name, test_fraction, seed)?;
            eprintln!("ingested {} entries into {}", m.entries.len(), out.display());
            Ok(())
        }
        Cmd::Split {
            manifest,
            test_fraction,
            seed,
            output,
        } => {
            let mut m = load_manifest(&manifest)?;
            m.resplit(test_fraction, seed)?;
            write_json(output.as_deref().unwrap_or(&manifest), &m)
        }
        Cmd::Stats { manifest } => {
            let ms = manifest.iter().map(|p| load_manifest(p)).collect::<Result<Vec<_>>>()?;
            emit_text(&stats_csv(&ms)?, None)
        }
        Cmd::Augment {
            manifest,
            out,
            probability,
            seed,
        } => {
            let m = load_manifest(&manifest)?;
            let records = augment_manifest(&m, parent_dir(&manifest), &out, probability, seed)?;
            write_json(&out.join("augment.json"), &records)
        }
        Cmd::Surgery { action } => match action {
            SurgeryCmd::Extend {
                weights,
                encoder_conv,
                decoder_conv,
                output,
            } => {
                let mut c = atc::read(&weights)?;
                let missing = |n: &str| Error::Input(format!("{} has no tensor {n:?}", weights.display()));
                let enc = extend_encoder_first_conv(c.get(&encoder_conv).ok_or_else(|| missing(&encoder_conv))?)?;
                let dec = extend_decoder_last_conv(c.get(&decoder_conv).ok_or_else(|| missing(&decoder_conv))?)?;
                c.replace(&encoder_conv, enc)?;
                c.replace(&decoder_conv, dec)?;
                atc::write(&c, &output)
            }
            SurgeryCmd::Inspect { weights } => {
                let c = atc::read(&weights)?;
                println!("source: {}", c.source);
                for (name, t) in c.iter() {
                    println!(
                        "{name}: {k}x{k}x{}x{}",
                        t.in_channels(),
                        t.out_channels(),
                        k = t.kernel()
                    );
                }
                Ok(())
            }
        },
        Cmd::Report {
            compare: pair,
            render,
            format,
            tolerance,
        } => {
            let format: Format = format.parse()?;
            let load = |p: &Path| -> Result<MetricReport> {
                let r: MetricReport = read_json(p)?;
                r.validate(tolerance)?;
                Ok(r)
            };
            match (pair, render) {
                (Some(p), None) => {
                    let c = compare(&load(&p[0])?, &load(&p[1])?)?;
                    emit_text(&emit::comparison(&c, format), None)
                }
                (None, Some(p)) => emit_text(&emit::report(&load(&p)?, format), None),
                _ => Err(Error::Input(
                    "report needs --compare BASELINE CANDIDATE or --render REPORT".into(),
                )),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
