//! Shot-noise sampling of coincidence counts and a timestamp-level
//! coincidence counter.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interference::{ChannelProbabilities, CoincidenceChannel, Detector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionConfig {
    /// Pairs per second reaching the beamsplitter.
    pub pair_rate: f64,
    /// Seconds per acquisition.
    pub duration: f64,
    /// Per-detector efficiency, indexed by [`Detector`].
    pub efficiency: [f64; 4],
    /// Per-detector dark counts per second.
    pub dark_rate: [f64; 4],
    /// Seconds.
    pub coincidence_window: f64,
    /// RMS arrival jitter of pair photons, seconds.
    pub jitter: f64,
    pub rng_seed: u64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        AcquisitionConfig {
            pair_rate: 0.0,
            duration: 1.0,
            efficiency: [1.0; 4],
            dark_rate: [0.0; 4],
            coincidence_window: 5e-9,
            jitter: 0.1e-9,
            rng_seed: 0,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(Error::InvalidParameter(format!("{what} out of range: {v}")))
        };
        if !(self.pair_rate >= 0.0 && self.pair_rate.is_finite()) {
            return bad("pair_rate", self.pair_rate);
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return bad("duration", self.duration);
        }
        if !(self.coincidence_window > 0.0 && self.coincidence_window.is_finite()) {
            return bad("coincidence_window", self.coincidence_window);
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return bad("jitter", self.jitter);
        }
        for &e in &self.efficiency {
            if !(0.0..=1.0).contains(&e) {
                return bad("efficiency", e);
            }
        }
        for &r in &self.dark_rate {
            if !(r >= 0.0 && r.is_finite()) {
                return bad("dark_rate", r);
            }
        }
        Ok(())
    }

    pub fn pairs(&self) -> f64 {
        self.pair_rate * self.duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChannelCounts {
    pub coincidences: [u64; 6],
    pub singles: [u64; 4],
}

impl ChannelCounts {
    pub fn get(&self, ch: CoincidenceChannel) -> u64 {
        self.coincidences[ch.index()]
    }

    pub fn singles_at(&self, d: Detector) -> u64 {
        self.singles[d.index()]
    }
}

/// Mean counts behind [`sample_counts`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExpectedCounts {
    /// True pair coincidences per channel.
    pub coincidences: [f64; 6],
    /// Pairs with both photons on one detector that produced a click.
    pub bunched: [f64; 4],
    /// Accidental coincidences per channel.
    pub accidentals: [f64; 6],
    pub singles: [f64; 4],
}

impl ExpectedCounts {
    pub fn channel_mean(&self, ch: CoincidenceChannel) -> f64 {
        self.coincidences[ch.index()] + self.accidentals[ch.index()]
    }
}

/// Accidental coincidence rate `2·W·r₁·r₂` for singles rates `r1`, `r2` (1/s)
/// and window `W` (s).
pub fn accidental_rate(r1: f64, r2: f64, window: f64) -> f64 {
    2.0 * window * r1 * r2
}

/// Per-pair click probability of each detector.
fn click_probabilities(probs: &ChannelProbabilities, eff: &[f64; 4]) -> [f64; 4] {
    let mut q = [0.0; 4];
    for ch in CoincidenceChannel::ALL {
        let (x, y) = ch.detectors();
        q[x.index()] += probs.get(ch) * eff[x.index()];
        q[y.index()] += probs.get(ch) * eff[y.index()];
    }
    for d in Detector::ALL {
        let e = eff[d.index()];
        q[d.index()] += probs.bunched_at(d) * (1.0 - (1.0 - e) * (1.0 - e));
    }
    q
}

pub fn expected_counts(probs: &ChannelProbabilities, cfg: &AcquisitionConfig) -> ExpectedCounts {
    let n = cfg.pairs();
    let eff = &cfg.efficiency;
    let q = click_probabilities(probs, eff);
    let mut out = ExpectedCounts::default();
    let mut rates = [0.0; 4];
    for d in Detector::ALL {
        let i = d.index();
        rates[i] = cfg.pair_rate * q[i] + cfg.dark_rate[i];
        out.singles[i] = rates[i] * cfg.duration;
        let e = eff[i];
        out.bunched[i] = n * probs.bunched_at(d) * (1.0 - (1.0 - e) * (1.0 - e));
    }
    for ch in CoincidenceChannel::ALL {
        let (x, y) = ch.detectors();
        let i = ch.index();
        out.coincidences[i] = n * probs.get(ch) * eff[x.index()] * eff[y.index()];
        out.accidentals[i] =
            accidental_rate(rates[x.index()], rates[y.index()], cfg.coincidence_window)
                * cfg.duration;
    }
    out
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite mean");
    let x: f64 = d.sample(rng);
    x as u64
}

/// Poisson-sampled counts seeded from `cfg.rng_seed`.
pub fn sample_counts(probs: &ChannelProbabilities, cfg: &AcquisitionConfig) -> ChannelCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    sample_counts_with_rng(probs, cfg, &mut rng)
}

pub fn sample_counts_with_rng<R: Rng + ?Sized>(
    probs: &ChannelProbabilities,
    cfg: &AcquisitionConfig,
    rng: &mut R,
) -> ChannelCounts {
    let mean = expected_counts(probs, cfg);
    let mut out = ChannelCounts::default();
    for ch in CoincidenceChannel::ALL {
        out.coincidences[ch.index()] = poisson(mean.channel_mean(ch), rng);
    }
    for d in Detector::ALL {
        out.singles[d.index()] = poisson(mean.singles[d.index()], rng);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimestampStream {
    pub detector: Detector,
    /// Arrival times in seconds, strictly increasing.
    pub times: Vec<f64>,
}

impl TimestampStream {
    pub fn new(detector: Detector, times: Vec<f64>) -> Result<Self> {
        let s = TimestampStream { detector, times };
        s.check_sorted()?;
        Ok(s)
    }

    pub fn check_sorted(&self) -> Result<()> {
        match self.times.windows(2).position(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
            Some(i) => Err(Error::UnsortedStream {
                detector: self.detector.to_string(),
                index: i + 1,
            }),
            None => Ok(()),
        }
    }
}

pub fn generate_timestamps(
    probs: &ChannelProbabilities,
    cfg: &AcquisitionConfig,
) -> [TimestampStream; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    generate_timestamps_with_rng(probs, cfg, &mut rng)
}

/// Emits pair events at common Poisson times (photons jittered by `cfg.jitter`)
/// plus independent dark counts on every detector.
pub fn generate_timestamps_with_rng<R: Rng + ?Sized>(
    probs: &ChannelProbabilities,
    cfg: &AcquisitionConfig,
    rng: &mut R,
) -> [TimestampStream; 4] {
    let mut times: [Vec<f64>; 4] = Default::default();
    let eff = cfg.efficiency;

    // outcomes: six coincidence channels, then four bunched
    let mut weights: Vec<f64> = probs.coincidence.to_vec();
    weights.extend_from_slice(&probs.bunched);
    let weights: Vec<f64> = weights.into_iter().map(|w| w.max(0.0)).collect();
    let chooser = WeightedIndex::new(&weights).ok();

    let n_pairs = poisson(cfg.pairs(), rng);
    let jitter = Normal::new(0.0, cfg.jitter).expect("finite jitter");
    if let Some(chooser) = chooser {
        for _ in 0..n_pairs {
            let t0 = rng.random::<f64>() * cfg.duration;
            let k = chooser.sample(rng);
            if k < 6 {
                let (x, y) = CoincidenceChannel::ALL[k].detectors();
                for d in [x, y] {
                    if rng.random::<f64>() < eff[d.index()] {
                        times[d.index()].push(t0 + jitter.sample(rng));
                    }
                }
            } else {
                let d = Detector::ALL[k - 6];
                let e = eff[d.index()];
                if rng.random::<f64>() < 1.0 - (1.0 - e) * (1.0 - e) {
                    times[d.index()].push(t0 + jitter.sample(rng));
                }
            }
        }
    }
    for d in Detector::ALL {
        let n_dark = poisson(cfg.dark_rate[d.index()] * cfg.duration, rng);
        for _ in 0..n_dark {
            times[d.index()].push(rng.random::<f64>() * cfg.duration);
        }
    }
    let mut out = Detector::ALL.map(|d| TimestampStream {
        detector: d,
        times: Vec::new(),
    });
    for (stream, mut t) in out.iter_mut().zip(times) {
        t.sort_unstable_by(f64::total_cmp);
        t.dedup();
        stream.times = t;
    }
    out
}

/// Greedy two-pointer match of two sorted streams: each event pairs with at
/// most one event of the other stream within `window`.
fn count_pairs(s1: &[f64], s2: &[f64], window: f64) -> u64 {
    let (mut i, mut j, mut n) = (0usize, 0usize, 0u64);
    while i < s1.len() && j < s2.len() {
        let dt = s1[i] - s2[j];
        if dt.abs() <= window {
            n += 1;
            i += 1;
            j += 1;
        } else if dt < 0.0 {
            i += 1;
        } else {
            j += 1;
        }
    }
    n
}

/// Counts coincidences between every detector pair. Streams may come in any
/// order; a detector without a stream has no events.
///
/// Each pair of streams is merged once with two pointers, each event joining at
/// most one coincidence. Budget: 10⁷ events in total in under 2 s on one core
/// (optimized build).
pub fn count_coincidences(streams: &[TimestampStream], window: f64) -> Result<ChannelCounts> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "coincidence window must be positive, got {window}"
        )));
    }
    let mut by_det: [&[f64]; 4] = [&[]; 4];
    for s in streams {
        s.check_sorted()?;
        by_det[s.detector.index()] = &s.times;
    }
    let mut out = ChannelCounts::default();
    for d in Detector::ALL {
        out.singles[d.index()] = by_det[d.index()].len() as u64;
    }
    for ch in CoincidenceChannel::ALL {
        let (x, y) = ch.detectors();
        out.coincidences[ch.index()] = count_pairs(by_det[x.index()], by_det[y.index()], window);
    }
    Ok(out)
}

/// One `detector<TAB>time_seconds` line per event, merged across detectors in
/// time order.
pub fn write_timestamps(streams: &[TimestampStream]) -> String {
    let mut events: Vec<(f64, Detector)> = streams
        .iter()
        .flat_map(|s| s.times.iter().map(move |&t| (t, s.detector)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = String::with_capacity(events.len() * 24);
    for (t, d) in events {
        let _ = writeln!(out, "{}\t{}", d.name(), t);
    }
    out
}

pub fn parse_timestamps(text: &str) -> Result<[TimestampStream; 4]> {
    let mut out = Detector::ALL.map(|d| TimestampStream {
        detector: d,
        times: Vec::new(),
    });
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        let mut parts = line.split('\t');
        let (Some(det), Some(t), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err("expected `detector<TAB>time_seconds`".into()));
        };
        let det: Detector = det.trim().parse().map_err(err)?;
        let t: f64 = t
            .trim()
            .parse()
            .map_err(|e| err(format!("bad time `{t}`: {e}")))?;
        if !t.is_finite() {
            return Err(err(format!("non-finite time `{t}`")));
        }
        out[det.index()].times.push(t);
    }
    for s in &out {
        s.check_sorted()?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probs_with(ch: CoincidenceChannel, p: f64) -> ChannelProbabilities {
        let mut probs = ChannelProbabilities::default();
        probs.coincidence[ch.index()] = p;
        probs.bunched[0] = 1.0 - p;
        probs
    }

    #[test]
    fn zero_probability_without_darks_gives_zero() {
        let cfg = AcquisitionConfig {
            pair_rate: 1e4,
            duration: 10.0,
            ..Default::default()
        };
        let counts = sample_counts(&probs_with(CoincidenceChannel::HcHd, 0.0), &cfg);
        assert_eq!(counts.get(CoincidenceChannel::HcHd), 0);
    }

    #[test]
    fn plateau_mean_matches_pair_budget() {
        let cfg = AcquisitionConfig {
            pair_rate: 23_224.0,
            duration: 1.0,
            ..Default::default()
        };
        let mean = expected_counts(&probs_with(CoincidenceChannel::HcHd, 0.25), &cfg);
        assert!((mean.coincidences[CoincidenceChannel::HcHd.index()] - 5806.0).abs() < 1e-9);
        let acc = mean.accidentals[CoincidenceChannel::HcHd.index()];
        assert!(acc > 0.0 && acc < 2.0, "{acc}");
    }

    #[test]
    fn same_seed_same_counts() {
        let cfg = AcquisitionConfig {
            pair_rate: 500.0,
            duration: 50.0,
            dark_rate: [100.0; 4],
            rng_seed: 42,
            ..Default::default()
        };
        let p = probs_with(CoincidenceChannel::VcHd, 0.3);
        assert_eq!(sample_counts(&p, &cfg), sample_counts(&p, &cfg));
        assert_eq!(generate_timestamps(&p, &cfg), generate_timestamps(&p, &cfg));
        let other = AcquisitionConfig { rng_seed: 43, ..cfg };
        assert_ne!(sample_counts(&p, &cfg), sample_counts(&p, &other));
    }

    #[test]
    fn empty_streams_without_sources() {
        let cfg = AcquisitionConfig::default();
        let streams = generate_timestamps(&probs_with(CoincidenceChannel::HcHd, 0.25), &cfg);
        assert!(streams.iter().all(|s| s.times.is_empty()));
    }

    #[test]
    fn accidental_rate_values() {
        assert_eq!(accidental_rate(0.0, 5e5, 5e-9), 0.0);
        assert!((accidental_rate(1e5, 1e5, 5e-9) - 100.0).abs() < 1e-9);
        let (x, y) = (accidental_rate(3e4, 7e5, 5e-9), accidental_rate(7e5, 3e4, 5e-9));
        assert!((x - y).abs() < 1e-12 * x);
    }

    #[test]
    fn counter_window_edges() {
        let a = TimestampStream::new(Detector::Hc, vec![1.0e-6]).unwrap();
        let b = TimestampStream::new(Detector::Vd, vec![1.0e-6 + 1e-9]).unwrap();
        let c = count_coincidences(&[a.clone(), b], 5e-9).unwrap();
        assert_eq!(c.get(CoincidenceChannel::HcVd), 1);
        let b = TimestampStream::new(Detector::Vd, vec![1.0e-6 + 10e-9]).unwrap();
        let c = count_coincidences(&[a, b], 5e-9).unwrap();
        assert_eq!(c.get(CoincidenceChannel::HcVd), 0);
    }

    #[test]
    fn counter_uses_each_event_once() {
        let a = TimestampStream::new(Detector::Hc, vec![0.0, 1e-9]).unwrap();
        let b = TimestampStream::new(Detector::Hd, vec![0.5e-9]).unwrap();
        let c = count_coincidences(&[a, b], 5e-9).unwrap();
        assert_eq!(c.get(CoincidenceChannel::HcHd), 1);
        assert_eq!(c.singles_at(Detector::Hc), 2);
    }

    #[test]
    fn counter_rejects_unsorted() {
        let a = TimestampStream {
            detector: Detector::Hc,
            times: vec![2.0, 1.0],
        };
        assert!(matches!(
            count_coincidences(&[a], 5e-9),
            Err(Error::UnsortedStream { index: 1, .. })
        ));
        assert!(TimestampStream::new(Detector::Hc, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn timestamp_text_round_trip() {
        let cfg = AcquisitionConfig {
            pair_rate: 1000.0,
            duration: 0.5,
            dark_rate: [50.0; 4],
            rng_seed: 3,
            ..Default::default()
        };
        let streams = generate_timestamps(&probs_with(CoincidenceChannel::HcVd, 0.5), &cfg);
        let text = write_timestamps(&streams);
        assert_eq!(parse_timestamps(&text).unwrap(), streams);
    }

    #[test]
    fn timestamp_parse_errors() {
        assert!(matches!(
            parse_timestamps("Hc 1.0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_timestamps("Xx\t1.0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_timestamps("Hc\t2.0\nHc\t1.0\n"),
            Err(Error::UnsortedStream { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = AcquisitionConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.coincidence_window = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = AcquisitionConfig {
            efficiency: [1.2, 1.0, 1.0, 1.0],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
