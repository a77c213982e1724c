//! Event-level simulation of single-photon runs: random phases, photon loss,
//! Born-rule sampling of the beamsplitter output, dark clicks, misalignment
//! flips and sifting.
//!
//! Trial `i` draws from its own ChaCha8 stream (`seed`, stream `i`), so tallies
//! do not depend on how trials are split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::fock::{beamsplitter_transform, encode_phases, output_state, Port, PortBasis, PhaseSetting, TwoPartyFockState, TIME_BINS};
use crate::scalar::{to_f64, Real};
use crate::sifting::{extract_bits, sift, DetectionOutcome, SiftDecision};

const DETECTOR_BINS: usize = 2 * TIME_BINS;
const MASKS: usize = 1 << DETECTOR_BINS;
const CHUNK: u64 = 1 << 14;

/// Born-rule sample of an output-port state, read out by threshold detectors.
pub fn sample_outcome<T: Real, R: Rng + ?Sized>(state: &TwoPartyFockState<T>, rng: &mut R) -> Result<DetectionOutcome> {
    if state.basis() != PortBasis::Output {
        return Err(Error::BasisMismatch { expected: PortBasis::Output, found: state.basis() });
    }
    let norm = to_f64(state.norm_sqr());
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(norm));
    }
    let u: f64 = rng.random::<f64>() * norm;
    let mut acc = 0.0;
    let mut last = None;
    for (p, a) in state.iter() {
        acc += to_f64(a.norm_sqr());
        last = Some(p);
        if u < acc {
            return DetectionOutcome::from_pattern(p);
        }
    }
    DetectionOutcome::from_pattern(last.expect("normalized state has a term"))
}

/// Which photons reached the beamsplitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LossPattern {
    pub a_survived: bool,
    pub b_survived: bool,
}

impl LossPattern {
    fn index(self) -> usize {
        (self.a_survived as usize) << 1 | self.b_survived as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub index: u64,
    pub phase_setting: PhaseSetting<f64>,
    pub loss_pattern: LossPattern,
    /// Detector-bin mask of dark clicks, bit `slot*3 + bin-1` with `c` as slot 0.
    pub dark_pattern: u8,
    /// Signal and dark clicks combined.
    pub click_mask: u8,
    /// `None` when more than two detector-bins fired.
    pub outcome: Option<DetectionOutcome>,
    pub decision: SiftDecision,
    /// Only set for kept events.
    pub error: Option<bool>,
}

/// Click-mask CDFs for each of the 16 settings and 4 loss patterns.
struct OutcomeTables {
    cdf: Vec<Vec<(u8, f64)>>,
}

impl OutcomeTables {
    fn build() -> Self {
        let mut cdf = Vec::with_capacity(64);
        for k in 0..16u8 {
            let ps = PhaseSetting::<f64>::from_index(k);
            for loss in 0..4usize {
                let state = match loss {
                    0b11 => output_state(&ps),
                    0b10 => beamsplitter_transform(&encode_phases(ps.phi_a1, ps.phi_a2, Port::A).expect("input port"))
                        .expect("input basis"),
                    0b01 => beamsplitter_transform(&encode_phases(ps.phi_b1, ps.phi_b2, Port::B).expect("input port"))
                        .expect("input basis"),
                    _ => TwoPartyFockState::vacuum(PortBasis::Output),
                };
                let mut acc = 0.0;
                let mut table = Vec::new();
                for (p, a) in state.iter() {
                    acc += a.norm_sqr();
                    table.push((p.occupied_mask(), acc));
                }
                cdf.push(table);
            }
        }
        Self { cdf }
    }

    fn sample(&self, setting: u8, loss: LossPattern, u: f64) -> u8 {
        let table = &self.cdf[setting as usize * 4 + loss.index()];
        let total = table.last().map_or(0.0, |t| t.1);
        let u = u * total;
        table.iter().find(|(_, c)| u < *c).or(table.last()).map_or(0, |t| t.0)
    }
}

/// Simulator with precomputed outcome tables; parameters are fixed at construction.
pub struct Simulator {
    eta_a: f64,
    eta_b: f64,
    p_dark: f64,
    e_d: f64,
    tables: OutcomeTables,
}

impl Simulator {
    pub fn new<T: Real>(params: &ChannelParams<T>) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            eta_a: to_f64(params.eta_a),
            eta_b: to_f64(params.eta_b),
            p_dark: to_f64(params.p_dark),
            e_d: to_f64(params.e_d),
            tables: OutcomeTables::build(),
        })
    }

    fn rng(seed: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        rng
    }

    /// Runs trial `index` of the run seeded by `seed`.
    pub fn trial(&self, seed: u64, index: u64) -> TrialRecord {
        let mut rng = Self::rng(seed, index);
        let setting = rng.random_range(0..16u8);
        let loss_pattern = LossPattern { a_survived: rng.random::<f64>() < self.eta_a, b_survived: rng.random::<f64>() < self.eta_b };
        let signal = self.tables.sample(setting, loss_pattern, rng.random::<f64>());
        let mut dark_pattern = 0u8;
        if self.p_dark > 0.0 {
            for bit in 0..DETECTOR_BINS {
                if rng.random::<f64>() < self.p_dark {
                    dark_pattern |= 1 << bit;
                }
            }
        }
        let click_mask = signal | dark_pattern;
        let phase_setting = PhaseSetting::from_index(setting);
        let outcome = DetectionOutcome::from_mask(click_mask).ok();
        let decision = outcome.as_ref().map_or(SiftDecision::Inconclusive, sift);
        let error = extract_bits(&decision, &phase_setting).map(|(x, y)| {
            let misaligned = rng.random::<f64>() < self.e_d;
            (x != y) ^ misaligned
        });
        TrialRecord { index, phase_setting, loss_pattern, dark_pattern, click_mask, outcome, decision, error }
    }

    /// Records for trials `0..n_trials`, in order.
    pub fn records(&self, n_trials: u64, seed: u64) -> impl Iterator<Item = TrialRecord> + '_ {
        (0..n_trials).map(move |i| self.trial(seed, i))
    }

    pub fn run(&self, n_trials: u64, seed: u64) -> Result<EmpiricalEstimates> {
        if n_trials == 0 {
            return Err(Error::ZeroTrials);
        }
        let chunks = n_trials.div_ceil(CHUNK);
        let tallies: Vec<Tally> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut t = Tally::default();
                for i in c * CHUNK..((c + 1) * CHUNK).min(n_trials) {
                    t.add(&self.trial(seed, i));
                }
                t
            })
            .collect();
        let total = tallies.into_iter().fold(Tally::default(), |mut acc, t| {
            acc.merge(&t);
            acc
        });
        Ok(total.estimates(n_trials, seed))
    }
}

#[derive(Clone, Debug)]
struct Tally {
    by_mask: [u64; MASKS],
    keep: u64,
    errors: u64,
    discard: u64,
}

impl Default for Tally {
    fn default() -> Self {
        Self { by_mask: [0; MASKS], keep: 0, errors: 0, discard: 0 }
    }
}

impl Tally {
    fn add(&mut self, r: &TrialRecord) {
        self.by_mask[r.click_mask as usize] += 1;
        match r.decision {
            SiftDecision::Keep { .. } => self.keep += 1,
            SiftDecision::Discard => self.discard += 1,
            SiftDecision::Inconclusive => {}
        }
        if r.error == Some(true) {
            self.errors += 1;
        }
    }

    fn merge(&mut self, o: &Tally) {
        for (a, b) in self.by_mask.iter_mut().zip(o.by_mask.iter()) {
            *a += b;
        }
        self.keep += o.keep;
        self.errors += o.errors;
        self.discard += o.discard;
    }

    fn estimates(&self, n_trials: u64, seed: u64) -> EmpiricalEstimates {
        let n = n_trials as f64;
        let y = self.keep as f64 / n;
        let (e, e_se) = if self.keep > 0 {
            let e = self.errors as f64 / self.keep as f64;
            (e, (e * (1.0 - e) / self.keep as f64).sqrt())
        } else {
            (f64::NAN, f64::NAN)
        };
        let multi_click = self.by_mask.iter().enumerate().filter(|(m, _)| m.count_ones() > 2).map(|(_, c)| c).sum();
        EmpiricalEstimates {
            n_trials,
            seed,
            keep: self.keep,
            errors: self.errors,
            discard: self.discard,
            multi_click,
            outcome_counts: self.by_mask,
            y11_hat: y,
            y11_stderr: (y * (1.0 - y) / n).sqrt(),
            e_b_hat: e,
            e_b_stderr: e_se,
        }
    }
}

/// Tallies and binomial standard errors of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalEstimates {
    pub n_trials: u64,
    pub seed: u64,
    pub keep: u64,
    pub errors: u64,
    pub discard: u64,
    /// Trials with more than two detector-bins firing; never kept.
    pub multi_click: u64,
    /// Counts indexed by the six-bit click mask.
    pub outcome_counts: [u64; MASKS],
    pub y11_hat: f64,
    pub y11_stderr: f64,
    /// NaN when nothing was kept.
    pub e_b_hat: f64,
    pub e_b_stderr: f64,
}

impl EmpiricalEstimates {
    /// Relative frequency of a click mask.
    pub fn frequency(&self, mask: u8) -> f64 {
        self.outcome_counts[mask as usize] as f64 / self.n_trials as f64
    }

    /// Frequencies of the announcements with at most two clicks.
    pub fn outcome_frequencies(&self) -> Vec<(DetectionOutcome, f64)> {
        (0..MASKS as u8)
            .filter_map(|m| DetectionOutcome::from_mask(m).ok().map(|o| (o, self.frequency(m))))
            .collect()
    }

    /// `z`-sigma half-widths for `(Y11, e_b)`.
    pub fn half_widths(&self, z: f64) -> (f64, f64) {
        (z * self.y11_stderr, z * self.e_b_stderr)
    }
}

/// Simulates `n_trials` single-photon rounds.
pub fn run_trials<T: Real>(params: &ChannelParams<T>, n_trials: u64, seed: u64) -> Result<EmpiricalEstimates> {
    Simulator::new(params)?.run(n_trials, seed)
}
