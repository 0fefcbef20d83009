//! Command-line front end: inference, directory evaluation, region-partition
//! comparison, loss gradient checking and a small forward-cost bench.

use clap::{Parser, Subcommand};
use edn_core::error::{EdnError, Result};
use edn_core::graph::{build_model, forward, synthetic_image, EdnModel, NetworkConfig};
use edn_core::io::{
    self, eval_csv, fmt6, load_image_ppm, load_map_pgm, load_mask_pgm, load_run_config,
    partition_csv, save_map_pgm, save_weights, PartitionRow, RegionColumns,
};
use edn_core::loss::run_grad_check;
use edn_core::metrics::{
    aggregate, evaluate_pair, partition_regions, region_mae, relative_improvement, MetricsReport,
    MetricsRow, RegionLabel, SaliencyMap,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "edn", about = "Salient object detection: inference and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run inference on one image and write the final prediction map.
    Infer {
        /// Run configuration file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Weights file; parameters are seeded from the config when omitted.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Input image (binary PPM, P6).
        #[arg(long)]
        image: PathBuf,
        /// Output prediction (binary PGM, P5).
        #[arg(long)]
        out: PathBuf,
        /// Also dump side outputs p1..p5 into this directory.
        #[arg(long, value_name = "DIR")]
        all_sides: Option<PathBuf>,
    },
    /// Evaluate a directory of predictions against ground-truth masks.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-region MAE comparison of two prediction sets against one GT set.
    PartitionEval {
        #[arg(long)]
        pred_a: PathBuf,
        #[arg(long)]
        pred_b: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check analytic loss gradients against central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Forward wall time and analytic MAC totals, dense vs depthwise-separable.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        repeat: usize,
    },
    /// Initialize a model from the config seed and save its weights file.
    ExportWeights {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<NetworkConfig> {
    match path {
        Some(p) => load_run_config(p),
        None => Ok(NetworkConfig::default()),
    }
}

fn load_model(config: &NetworkConfig, weights: &Option<PathBuf>) -> Result<EdnModel> {
    match weights {
        Some(p) => io::load_weights(config, p),
        None => build_model(config),
    }
}

fn cmd_infer(
    config: Option<PathBuf>,
    weights: Option<PathBuf>,
    image: PathBuf,
    out: PathBuf,
    all_sides: Option<PathBuf>,
) -> Result<()> {
    let cfg = load_config(&config)?;
    let model = load_model(&cfg, &weights)?;
    let input = load_image_ppm(&image, cfg.input_side)?;
    let outputs = forward(&model, &input)?;
    save_map_pgm(&SaliencyMap::from_prediction(outputs.final_prediction())?, &out)?;
    if let Some(dir) = all_sides {
        std::fs::create_dir_all(&dir)?;
        for (i, pred) in outputs.predictions.iter().enumerate() {
            let path = dir.join(format!("p{}.pgm", i + 1));
            save_map_pgm(&SaliencyMap::from_prediction(pred)?, &path)?;
        }
    }
    Ok(())
}

fn cmd_eval(pred: &Path, gt: &Path, out: &Path) -> Result<()> {
    let pairs = io::pair_pgm_directories(&[pred, gt])?;
    let mut per_image: Vec<(String, Option<MetricsRow>)> = Vec::new();
    let mut evaluated: Vec<MetricsRow> = Vec::new();
    for (stem, paths) in pairs {
        let p = load_map_pgm(&paths[0])?;
        let g = load_mask_pgm(&paths[1])?;
        if g.fg_count() == 0 {
            eprintln!("warning: `{stem}` skipped (empty ground-truth mask)");
            per_image.push((stem, None));
            continue;
        }
        let row = evaluate_pair(&p, &g)?;
        evaluated.push(row);
        per_image.push((stem, Some(row)));
    }
    let report = MetricsReport {
        aggregate: aggregate(&evaluated),
        per_image,
    };
    std::fs::write(out, eval_csv(&report))?;
    Ok(())
}

struct RegionAccumulator {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl RegionAccumulator {
    fn new() -> Self {
        RegionAccumulator { a: Vec::new(), b: Vec::new() }
    }

    fn aggregate(&self) -> RegionColumns {
        if self.a.is_empty() {
            return RegionColumns::nan();
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (ma, mb) = (mean(&self.a), mean(&self.b));
        RegionColumns {
            mae_a: ma,
            mae_b: mb,
            rel_impv: relative_improvement(ma, mb).unwrap_or(f64::NAN),
        }
    }
}

fn cmd_partition_eval(pred_a: &Path, pred_b: &Path, gt: &Path, out: &Path) -> Result<()> {
    let regions = [RegionLabel::Center, RegionLabel::Boundary, RegionLabel::Other];
    let pairs = io::pair_pgm_directories(&[pred_a, pred_b, gt])?;
    let mut rows: Vec<(String, PartitionRow)> = Vec::new();
    let mut accs = [RegionAccumulator::new(), RegionAccumulator::new(), RegionAccumulator::new()];
    for (stem, paths) in pairs {
        let pa = load_map_pgm(&paths[0])?;
        let pb = load_map_pgm(&paths[1])?;
        let g = load_mask_pgm(&paths[2])?;
        if g.fg_count() == 0 {
            eprintln!("warning: `{stem}` skipped (empty ground-truth mask)");
            rows.push((
                stem,
                PartitionRow {
                    center: RegionColumns::nan(),
                    boundary: RegionColumns::nan(),
                    other: RegionColumns::nan(),
                },
            ));
            continue;
        }
        let part = partition_regions(&g)?;
        let mut cols = [RegionColumns::nan(); 3];
        for (slot, (&region, acc)) in regions.iter().zip(&mut accs).enumerate() {
            // Empty regions leave NaN cells; any other failure aborts.
            match (
                region_mae(&pa, &g, &part, region),
                region_mae(&pb, &g, &part, region),
            ) {
                (Ok(ma), Ok(mb)) => {
                    acc.a.push(ma);
                    acc.b.push(mb);
                    cols[slot] = RegionColumns {
                        mae_a: ma,
                        mae_b: mb,
                        rel_impv: relative_improvement(ma, mb).unwrap_or(f64::NAN),
                    };
                }
                (Err(EdnError::Undefined(_)), _) | (_, Err(EdnError::Undefined(_))) => {}
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        rows.push((
            stem,
            PartitionRow { center: cols[0], boundary: cols[1], other: cols[2] },
        ));
    }
    let aggregate = PartitionRow {
        center: accs[0].aggregate(),
        boundary: accs[1].aggregate(),
        other: accs[2].aggregate(),
    };
    std::fs::write(out, partition_csv(&rows, &aggregate))?;
    Ok(())
}

fn cmd_gradcheck(seed: u64) -> Result<()> {
    let report = run_grad_check(seed, 100, 6, 1e-4);
    println!(
        "gradcheck: instances={} pixels={} max_rel_err={:.3e} tol={:.0e} => {}",
        report.instances,
        report.pixels_per_instance,
        report.max_rel_err,
        report.tolerance,
        if report.pass { "PASS" } else { "FAIL" }
    );
    if report.pass {
        Ok(())
    } else {
        Err(EdnError::Validation(format!(
            "gradient check failed: max relative error {:.3e} exceeds {:.0e}",
            report.max_rel_err, report.tolerance
        )))
    }
}

fn cmd_bench(config: Option<PathBuf>, repeat: usize) -> Result<()> {
    let base = load_config(&config)?;
    let image = synthetic_image(base.input_side, base.seed);
    let mut wall = [0.0f64; 2];
    for (slot, lite) in [false, true].into_iter().enumerate() {
        let cfg = NetworkConfig { lite, ..base.clone() };
        let model = build_model(&cfg)?;
        let start = Instant::now();
        for _ in 0..repeat.max(1) {
            forward(&model, &image)?;
        }
        let ms = start.elapsed().as_secs_f64() * 1e3 / repeat.max(1) as f64;
        wall[slot] = ms;
        println!(
            "bench: lite={lite} total_macs={} forward_ms={}",
            model.total_macs(),
            fmt6(ms)
        );
    }
    println!(
        "bench: lite_faster={} speedup={}",
        wall[1] < wall[0],
        fmt6(wall[0] / wall[1])
    );
    Ok(())
}

fn cmd_export_weights(config: Option<PathBuf>, out: &Path) -> Result<()> {
    let cfg = load_config(&config)?;
    let model = build_model(&cfg)?;
    save_weights(&model, out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Infer { config, weights, image, out, all_sides } => {
            cmd_infer(config, weights, image, out, all_sides)
        }
        Command::Eval { pred, gt, out } => cmd_eval(&pred, &gt, &out),
        Command::PartitionEval { pred_a, pred_b, gt, out } => {
            cmd_partition_eval(&pred_a, &pred_b, &gt, &out)
        }
        Command::Gradcheck { seed } => cmd_gradcheck(seed),
        Command::Bench { config, repeat } => cmd_bench(config, repeat),
        Command::ExportWeights { config, out } => cmd_export_weights(config, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
