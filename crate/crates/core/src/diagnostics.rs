//! Move-frequency emulator and chain-trace summaries.
//!
//! The emulator is state free: every drawn birth or change carries an independent
//! "unavailable" mark with a fixed probability, and the realized frequencies of the
//! moves that complete are counted.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;
use crate::sampler::{AcceptanceRates, Phase, Strategy, TraceRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct EmulatorConfig {
    pub p_birth: f64,
    pub p_death: f64,
    pub p_change: f64,
    /// Probability that a drawn move is a birth and is unavailable.
    pub p_birth_unavailable: f64,
    /// Probability that a drawn move is a change and is unavailable.
    pub p_change_unavailable: f64,
    /// Sweeping only: share of unavailable changes that are redrawn instead of
    /// completing as a death.
    pub case3_fraction: f64,
    pub mode: Strategy,
    pub trials: u64,
    pub seed: u64,
}

impl EmulatorConfig {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            self.p_birth,
            self.p_death,
            self.p_change,
            self.p_birth_unavailable,
            self.p_change_unavailable,
            self.case3_fraction,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidProbabilities(
                "emulator probabilities must lie in [0, 1]".into(),
            ));
        }
        if ((self.p_birth + self.p_death + self.p_change) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidProbabilities(
                "birth, death and change probabilities must sum to 1".into(),
            ));
        }
        if self.p_birth_unavailable > self.p_birth || self.p_change_unavailable > self.p_change {
            return Err(Error::InvalidProbabilities(
                "an unavailable probability exceeds its move probability".into(),
            ));
        }
        let redraw = match self.mode {
            Strategy::Standard => self.p_birth_unavailable + self.p_change_unavailable,
            Strategy::Sweeping => {
                self.p_birth_unavailable + self.p_change_unavailable * self.case3_fraction
            }
        };
        if redraw >= 1.0 {
            return Err(Error::InvalidProbabilities(
                "no move can ever complete".into(),
            ));
        }
        if self.trials < 1 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveFrequencies {
    pub birth: f64,
    pub death: f64,
    pub change: f64,
    pub trials: u64,
    /// Draws discarded before a move completed, summed over all trials.
    pub redraws: u64,
}

/// Draws moves until `trials` of them complete and returns the realized shares.
pub fn emulate_moves(cfg: &EmulatorConfig) -> Result<MoveFrequencies> {
    cfg.validate()?;
    let mut rng = rng::seeded(cfg.seed);
    let birth_ok = cfg.p_birth - cfg.p_birth_unavailable;
    let birth_end = cfg.p_birth;
    let death_end = birth_end + cfg.p_death;
    let change_ok_end = death_end + (cfg.p_change - cfg.p_change_unavailable);

    let mut counts = [0u64; 3];
    let mut redraws = 0u64;
    for _ in 0..cfg.trials {
        loop {
            let u: f64 = rng.random();
            let done = if u < birth_ok {
                Some(0)
            } else if u < birth_end {
                None
            } else if u < death_end {
                Some(1)
            } else if u < change_ok_end {
                Some(2)
            } else {
                match cfg.mode {
                    Strategy::Standard => None,
                    Strategy::Sweeping => {
                        let v: f64 = rng.random();
                        if v < cfg.case3_fraction {
                            None
                        } else {
                            Some(1)
                        }
                    }
                }
            };
            match done {
                Some(slot) => {
                    counts[slot] += 1;
                    break;
                }
                None => redraws += 1,
            }
        }
    }
    let total = cfg.trials as f64;
    Ok(MoveFrequencies {
        birth: counts[0] as f64 / total,
        death: counts[1] as f64 / total,
        change: counts[2] as f64 / total,
        trials: cfg.trials,
        redraws,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSummary {
    pub iterations: usize,
    pub acceptance: f64,
    /// `(k, share of iterations)` sorted by `k`; shares sum to one.
    pub k_histogram: Vec<(usize, f64)>,
    pub mean_log_lik: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    /// `(iteration, log likelihood)` for every record.
    pub log_lik: Vec<(usize, f64)>,
    pub k: Vec<(usize, usize)>,
    pub burn_in: PhaseSummary,
    pub post: PhaseSummary,
}

impl TraceSummary {
    pub fn acceptance(&self) -> AcceptanceRates {
        AcceptanceRates {
            burn_in: self.burn_in.acceptance,
            post: self.post.acceptance,
        }
    }

    pub fn phase(&self, phase: Phase) -> &PhaseSummary {
        match phase {
            Phase::BurnIn => &self.burn_in,
            Phase::Post => &self.post,
        }
    }
}

pub fn summarize_trace(trace: &[TraceRecord]) -> Result<TraceSummary> {
    if trace.is_empty() {
        return Err(Error::EmptyChain);
    }
    Ok(TraceSummary {
        log_lik: trace.iter().map(|r| (r.iteration, r.log_lik)).collect(),
        k: trace.iter().map(|r| (r.iteration, r.k)).collect(),
        burn_in: summarize_phase(trace.iter().filter(|r| r.phase == Phase::BurnIn)),
        post: summarize_phase(trace.iter().filter(|r| r.phase == Phase::Post)),
    })
}

fn summarize_phase<'a>(records: impl Iterator<Item = &'a TraceRecord>) -> PhaseSummary {
    let mut hist = BTreeMap::new();
    let (mut n, mut accepted, mut ll) = (0usize, 0usize, 0.0);
    for r in records {
        n += 1;
        accepted += r.accepted as usize;
        ll += r.log_lik;
        *hist.entry(r.k).or_insert(0usize) += 1;
    }
    if n == 0 {
        return PhaseSummary {
            iterations: 0,
            acceptance: 0.0,
            k_histogram: Vec::new(),
            mean_log_lik: 0.0,
        };
    }
    PhaseSummary {
        iterations: n,
        acceptance: accepted as f64 / n as f64,
        k_histogram: hist
            .into_iter()
            .map(|(k, c)| (k, c as f64 / n as f64))
            .collect(),
        mean_log_lik: ll / n as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proposals::MoveKind;
    use alloc::vec;

    fn fig(mode: Strategy, pbu: f64, pcu: f64) -> EmulatorConfig {
        EmulatorConfig {
            p_birth: 0.2,
            p_death: 0.2,
            p_change: 0.6,
            p_birth_unavailable: pbu,
            p_change_unavailable: pcu,
            case3_fraction: 0.1,
            mode,
            trials: 200_000,
            seed: 11,
        }
    }

    #[test]
    fn no_distortion_without_unavailable_moves() {
        for mode in [Strategy::Standard, Strategy::Sweeping] {
            let f = emulate_moves(&fig(mode, 0.0, 0.0)).unwrap();
            assert!((f.birth - 0.2).abs() < 0.003);
            assert!((f.death - 0.2).abs() < 0.003);
            assert!((f.change - 0.6).abs() < 0.003);
            assert_eq!(f.redraws, 0);
        }
    }

    #[test]
    fn frequencies_sum_to_one() {
        let f = emulate_moves(&fig(Strategy::Sweeping, 0.07, 0.2)).unwrap();
        assert!((f.birth + f.death + f.change - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut c = fig(Strategy::Standard, 0.1, 0.3);
        c.p_change = 0.7;
        assert!(emulate_moves(&c).is_err());
        assert!(emulate_moves(&fig(Strategy::Standard, 0.3, 0.1)).is_err());
        let mut c = fig(Strategy::Standard, 0.4, 0.6);
        c.p_birth = 0.4;
        c.p_death = 0.0;
        assert!(emulate_moves(&c).is_err());
        let mut c = fig(Strategy::Standard, 0.1, 0.1);
        c.trials = 0;
        assert!(emulate_moves(&c).is_err());
    }

    fn record(iteration: usize, phase: Phase, k: usize, accepted: bool) -> TraceRecord {
        TraceRecord {
            iteration,
            phase,
            log_lik: -(k as f64),
            k,
            kind: MoveKind::Birth,
            accepted,
            redraws: 0,
            swept: false,
            unavailable: false,
            forced: false,
        }
    }

    #[test]
    fn all_rejected_trace_is_flat() {
        let trace: Vec<_> = (0..100)
            .map(|i| record(i, Phase::BurnIn, 1, false))
            .collect();
        let s = summarize_trace(&trace).unwrap();
        assert!(s.k.iter().all(|&(_, k)| k == 1));
        assert_eq!(s.burn_in.acceptance, 0.0);
        assert_eq!(s.burn_in.k_histogram, vec![(1, 1.0)]);
        assert_eq!(s.post.iterations, 0);
    }

    #[test]
    fn histograms_normalized_per_phase() {
        let trace: Vec<_> = (0..90)
            .map(|i| {
                record(
                    i,
                    if i < 30 { Phase::BurnIn } else { Phase::Post },
                    1 + i % 4,
                    i % 3 == 0,
                )
            })
            .collect();
        let s = summarize_trace(&trace).unwrap();
        for phase in [Phase::BurnIn, Phase::Post] {
            let total: f64 = s.phase(phase).k_histogram.iter().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
        assert!((s.acceptance().post - 20.0 / 60.0).abs() < 1e-12);
        assert!(summarize_trace(&[]).is_err());
    }
}
