//! Trace, summary and diagnostics CSV writers.

use std::io::Write;

use bdt_core::diagnostics::TraceSummary;
use bdt_core::sampler::TraceRecord;
use bdt_core::ChainOutput;

pub fn write_trace<W: Write>(trace: &[TraceRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "iteration",
        "phase",
        "log_lik",
        "k",
        "move",
        "accepted",
        "special",
    ])?;
    for r in trace {
        w.write_record([
            r.iteration.to_string(),
            r.phase.as_str().to_string(),
            r.log_lik.to_string(),
            r.k.to_string(),
            r.kind.as_str().to_string(),
            u8::from(r.accepted).to_string(),
            r.special().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_k_histogram<W: Write>(summary: &TraceSummary, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phase", "k", "share"])?;
    for (phase, s) in [("burn_in", &summary.burn_in), ("post", &summary.post)] {
        for (k, share) in &s.k_histogram {
            w.write_record([phase.to_string(), k.to_string(), share.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `key,value` rows describing a finished chain.
pub fn write_run_summary<W: Write>(
    out: &ChainOutput,
    summary: &TraceSummary,
    w: W,
) -> csv::Result<()> {
    let freq = out.realized_move_frequencies();
    let rows: Vec<(&str, String)> = vec![
        ("retained_samples", out.samples.len().to_string()),
        ("acceptance_burn_in", out.acceptance.burn_in.to_string()),
        ("acceptance_post", out.acceptance.post.to_string()),
        ("mean_splits", out.mean_splits().to_string()),
        ("mean_total_nodes", out.mean_total_nodes().to_string()),
        ("mean_log_lik_post", summary.post.mean_log_lik.to_string()),
        ("realized_birth", freq[0].to_string()),
        ("realized_death", freq[1].to_string()),
        ("realized_change", freq[2].to_string()),
        (
            "redraws",
            out.trace
                .iter()
                .map(|r| u64::from(r.redraws))
                .sum::<u64>()
                .to_string(),
        ),
        (
            "forced_rejections",
            out.trace.iter().filter(|r| r.forced).count().to_string(),
        ),
        (
            "swept_changes",
            out.trace.iter().filter(|r| r.swept).count().to_string(),
        ),
    ];
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["key", "value"])?;
    for (k, v) in rows {
        w.write_record([k, v.as_str()])?;
    }
    w.flush()?;
    Ok(())
}
