//! Planner matrix over sampled starting positions, as tables and CSV files.
//!
//! cargo run --release --example monte_carlo -- [samples] [seed]

use ilqgames::batch::{export_batch, histogram, render_table, run_batch, ExperimentConfig, ExportFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = ExperimentConfig::default();
    cfg.batch.samples = args.first().map_or(Ok(4), |s| s.parse())?;
    cfg.batch.seed = args.get(1).map_or(Ok(0), |s| s.parse())?;
    cfg.validate()?;

    let result = run_batch(&cfg.batch_spec())?;
    print!("{}", render_table(&result));
    println!("converged planning steps: {:.1}%", 100.0 * result.converged_fraction());

    println!("\novertaking times against a sequential opponent at the largest ratio:");
    let ratio = cfg.batch.ratios.iter().copied().fold(f64::MIN, f64::max);
    for bin in histogram(&result)
        .iter()
        .filter(|b| b.ratio == ratio && b.opponent.label() == "sequential" && b.count > 0)
    {
        println!("  {:>16} [{:5.1}, {:5.1}) s: {}", bin.ego.label(), bin.bin_start, bin.bin_end, "#".repeat(bin.count));
    }

    let dir = std::env::temp_dir().join("ilqgames-batch");
    for path in export_batch(&result, ExportFormat::Csv, &dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
