//! Reference plugin: scores each manifest pair by RGB mean squared error.

use std::path::Path;
use std::process::ExitCode;

use alphabench::io::load_rgb;
use alphabench::plugin::{read_manifest, write_scores};

fn run(manifest: &Path) -> alphabench::Result<Vec<f64>> {
    read_manifest(manifest)?
        .iter()
        .map(|(gt, pred)| Ok(alphabench_core::metrics::mse(&load_rgb(gt)?, &load_rgb(pred)?)?))
        .collect()
}

fn main() -> ExitCode {
    let Some(manifest) = std::env::args_os().nth(1) else {
        eprintln!("usage: alphabench-mse-scorer MANIFEST");
        return ExitCode::from(2);
    };
    match run(Path::new(&manifest)) {
        Ok(scores) => match write_scores(std::io::stdout().lock(), &scores) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
