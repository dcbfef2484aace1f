use std::fs;
use std::io::Write;

use anyhow::{Context, Result};
use clap::Parser;
use s3fse::io::{read_cube, write_labels, write_view_csv};
use s3fse::synth::synth_generate;
use s3fse_cli::args::{expand_config, parse_d_values, Cli, Command};
use s3fse_cli::experiment::{eval_projection, extract_views, fit_only};
use s3fse_cli::{run_experiment, sweep_dimension};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let argv = expand_config(std::env::args_os().collect())?;
    let cli = Cli::parse_from(argv);
    match cli.command {
        Command::Synth(args) => {
            let spec = args.synthetic.spec(args.seed)?;
            let data = synth_generate(&spec).context("data: synthetic generation")?;
            fs::create_dir_all(&args.out)?;
            for view in data.dataset.views() {
                write_view_csv(&args.out.join(format!("{}.csv", view.name())), view)?;
            }
            let codes: Vec<i64> = data
                .dataset
                .labels()
                .classes()
                .iter()
                .map(|&c| c as i64)
                .collect();
            write_labels(&args.out.join("labels.txt"), &codes)?;
            let mut f = fs::File::create(args.out.join("noise_columns.txt"))?;
            for (view, cols) in data.dataset.views().iter().zip(&data.noise_columns) {
                let list: Vec<String> = cols.iter().map(|c| c.to_string()).collect();
                writeln!(f, "{}={}", view.name(), list.join(","))?;
            }
            log::info!(
                "wrote {} samples to {}",
                data.dataset.n_samples(),
                args.out.display()
            );
        }
        Command::Features(args) => {
            let cube = read_cube(&args.cube)
                .with_context(|| format!("data: reading cube {}", args.cube.display()))?;
            let (gabor, dmp) = args.imaging.specs()?;
            fs::create_dir_all(&args.out)?;
            for view in extract_views(&cube, &gabor, &dmp)? {
                write_view_csv(&args.out.join(format!("{}.csv", view.name())), &view)?;
                log::info!("{}: {} features", view.name(), view.dim());
            }
        }
        Command::Fit(args) => {
            let (p, trace) = fit_only(&args.config()?)?;
            log::info!(
                "fit: d = {}, {} iterations, converged = {}",
                p.d(),
                trace.iterations,
                trace.converged
            );
        }
        Command::Eval(args) => {
            let outcome = eval_projection(&args.experiment.config()?, &args.projection)?;
            log::info!("OA {:.4}", outcome.overall_accuracy);
        }
        Command::Run(args) => {
            for o in run_experiment(&args.config()?)? {
                log::info!(
                    "{}: OA {:.4}, {:.3}s",
                    o.method,
                    o.overall_accuracy,
                    o.runtime_seconds
                );
            }
        }
        Command::Sweep(args) => {
            let d_values = parse_d_values(&args.d_values)?;
            sweep_dimension(&args.experiment.config()?, &d_values)?;
        }
    }
    Ok(())
}
