//! Cross-validation tables and emulator frequency CSVs.

use std::io::Write;

use bdt_core::averaging::Summary;
use bdt_core::diagnostics::EmulatorConfig;
use bdt_core::{CvReport, MoveFrequencies};

/// One row per fold and strategy.
pub fn write_folds<W: Write>(dataset: &str, reports: &[CvReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dataset",
        "strategy",
        "fold",
        "seed",
        "n_train",
        "n_test",
        "accuracy",
        "entropy",
        "splits",
        "total_nodes",
        "acceptance_burn_in",
        "acceptance_post",
    ])?;
    for r in reports {
        for f in &r.folds {
            w.write_record([
                dataset.to_string(),
                r.strategy.label().to_string(),
                f.fold.to_string(),
                f.seed.to_string(),
                f.n_train.to_string(),
                f.n_test.to_string(),
                f.accuracy.to_string(),
                f.entropy.to_string(),
                f.splits.to_string(),
                f.total_nodes.to_string(),
                f.acceptance.burn_in.to_string(),
                f.acceptance.post.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Aggregate rows `dataset, strategy, metric, mean, two_sigma`. Accuracy is in
/// percent; `entropy_total` is the sum over all held-out rows and has no spread.
pub fn write_summary<W: Write>(dataset: &str, reports: &[CvReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dataset", "strategy", "metric", "mean", "two_sigma"])?;
    for r in reports {
        let pct = Summary {
            mean: 100.0 * r.accuracy.mean,
            two_sigma: 100.0 * r.accuracy.two_sigma,
        };
        let rows = [
            ("accuracy_pct", pct),
            ("entropy_per_fold", r.entropy),
            (
                "entropy_total",
                Summary {
                    mean: r.entropy_total,
                    two_sigma: 0.0,
                },
            ),
            ("splits", r.splits),
            ("total_nodes", r.total_nodes),
            (
                "restratified",
                Summary {
                    mean: f64::from(u8::from(r.restratified)),
                    two_sigma: 0.0,
                },
            ),
        ];
        for (metric, s) in rows {
            w.write_record([
                dataset.to_string(),
                r.strategy.label().to_string(),
                metric.to_string(),
                s.mean.to_string(),
                s.two_sigma.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_frequencies<W: Write>(
    cfg: &EmulatorConfig,
    f: &MoveFrequencies,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["move", "nominal", "realized"])?;
    for (name, nominal, realized) in [
        ("birth", cfg.p_birth, f.birth),
        ("death", cfg.p_death, f.death),
        ("change", cfg.p_change, f.change),
    ] {
        w.write_record([name.to_string(), nominal.to_string(), realized.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
