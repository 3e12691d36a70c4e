//! Event-density aware dynamic sampling.
//!
//! Frames are ranked by their share of the video's events. The densest
//! frames whose cumulative share first exceeds `tau` form the high-density
//! set; the rest form the low-density set. A fixed ratio of the sample
//! budget is drawn from each set by weighted sampling without replacement.

use std::io::{BufRead, BufReader, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::framing::FrameSequence;
use crate::{Error, Result};

/// Slack applied when comparing cumulative densities against `tau`, so that
/// e.g. `0.5 + 0.3 + 0.15` counts as reaching `0.95`, not exceeding it.
pub const DENSITY_TOLERANCE: f64 = 1e-9;

/// Normalized per-frame event shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub density: Vec<f64>,
    /// Whether the raw window counts (rather than rendered counts) were used.
    pub from_raw: bool,
}

impl DensityProfile {
    pub fn from_counts(counts: &[u64], from_raw: bool) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::DegenerateDensity);
        }
        Ok(Self {
            density: counts.iter().map(|&n| n as f64 / total as f64).collect(),
            from_raw,
        })
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }
}

/// `d_i = n_i / sum_j n_j` over raw or rendered frame counts.
pub fn compute_density(frames: &FrameSequence, use_raw: bool) -> Result<DensityProfile> {
    let counts = if use_raw {
        frames.raw_counts()
    } else {
        frames.rendered_counts()
    };
    DensityProfile::from_counts(&counts, use_raw)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    /// High-density frames, densest first.
    pub high: Vec<usize>,
    /// Remaining frames, densest first.
    pub low: Vec<usize>,
}

/// Frame indices by density, descending; ties go to the lower index.
fn density_order(profile: &DensityProfile) -> Vec<usize> {
    let d = &profile.density;
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
    order
}

/// Shortest densest prefix whose cumulative density strictly exceeds `tau`.
pub fn nucleus_partition(profile: &DensityProfile, tau: f64) -> Partition {
    let order = density_order(profile);
    let mut cum = 0.0;
    let mut cut = order.len();
    for (rank, &i) in order.iter().enumerate() {
        cum += profile.density[i];
        if cum > tau + DENSITY_TOLERANCE {
            cut = rank + 1;
            break;
        }
    }
    let (high, low) = order.split_at(cut);
    Partition {
        high: high.to_vec(),
        low: low.to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdsConfig {
    pub tau: f64,
    pub ratio_high: f64,
    pub sample_count: usize,
    pub seed: u64,
}

impl Default for EdsConfig {
    fn default() -> Self {
        Self {
            tau: 0.95,
            ratio_high: 0.8,
            sample_count: 256,
            seed: 0,
        }
    }
}

impl EdsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Config(format!("tau {} not in (0, 1)", self.tau)));
        }
        if !(0.0..=1.0).contains(&self.ratio_high) {
            return Err(Error::Config(format!("ratio_high {} not in [0, 1]", self.ratio_high)));
        }
        if self.sample_count == 0 {
            return Err(Error::Config("sample_count must be >= 1".into()));
        }
        Ok(())
    }

    /// Quota for the high-density set: `round(ratio_high * sample_count)`.
    pub fn high_quota(&self) -> usize {
        (self.ratio_high * self.sample_count as f64 + 0.5).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    High,
    Low,
}

impl Provenance {
    fn as_str(self) -> &'static str {
        match self {
            Provenance::High => "high",
            Provenance::Low => "low",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    /// Strictly increasing frame indices.
    pub indices: Vec<usize>,
    pub provenance: Vec<Provenance>,
    pub seed: u64,
    /// More samples were requested than frames exist; every frame was taken.
    pub truncated: bool,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn count(&self, p: Provenance) -> usize {
        self.provenance.iter().filter(|&&q| q == p).count()
    }

    /// One `index,provenance` line per sample.
    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        for (i, p) in self.indices.iter().zip(&self.provenance) {
            writeln!(sink, "{i},{}", p.as_str())?;
        }
        Ok(())
    }

    pub fn read<R: Read>(source: R) -> Result<Self> {
        let mut indices = Vec::new();
        let mut provenance = Vec::new();
        for (n, line) in BufReader::new(source).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = n + 1;
            let (i, p) = line.split_once(',').ok_or_else(|| Error::Row {
                row,
                message: "expected index,provenance".into(),
            })?;
            let i = i.trim().parse::<usize>().map_err(|e| Error::Row {
                row,
                message: e.to_string(),
            })?;
            let p = match p.trim() {
                "high" => Provenance::High,
                "low" => Provenance::Low,
                other => {
                    return Err(Error::Row {
                        row,
                        message: format!("unknown provenance {other:?}"),
                    })
                }
            };
            if indices.last().is_some_and(|&last| last >= i) {
                return Err(Error::Row {
                    row,
                    message: "indices must be strictly increasing".into(),
                });
            }
            indices.push(i);
            provenance.push(p);
        }
        Ok(Self {
            indices,
            provenance,
            seed: 0,
            truncated: false,
        })
    }
}

/// Draws `k` items from `pool` without replacement, each draw proportional
/// to the remaining weights. Falls back to uniform when they sum to zero.
fn weighted_draws<R: Rng>(pool: &[usize], weights: &[f64], k: usize, rng: &mut R) -> Vec<usize> {
    let mut items: Vec<(usize, f64)> = pool.iter().map(|&i| (i, weights[i].max(0.0))).collect();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k.min(items.len()) {
        let total: f64 = items.iter().map(|it| it.1).sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = items.len() - 1;
            for (j, it) in items.iter().enumerate() {
                if it.1 > 0.0 {
                    pick = j;
                    if r < it.1 {
                        break;
                    }
                    r -= it.1;
                }
            }
            pick
        } else {
            rng.random_range(0..items.len())
        };
        out.push(items.remove(pick).0);
    }
    out
}

/// Density-aware sampling of `config.sample_count` frames.
///
/// `round(ratio_high * n)` frames come from the high-density set and the
/// rest from the low-density set, each drawn proportionally to density
/// without replacement. A set smaller than its quota gives all of its
/// frames and passes the shortfall to the other set.
pub fn eds_sample(profile: &DensityProfile, config: &EdsConfig) -> Result<SampleSet> {
    config.validate()?;
    let t = profile.len();
    if config.sample_count >= t {
        return Ok(SampleSet {
            indices: (0..t).collect(),
            provenance: provenance_of(profile, config.tau, t),
            seed: config.seed,
            truncated: config.sample_count > t,
        });
    }

    let part = nucleus_partition(profile, config.tau);
    let mut want_high = config.high_quota();
    let mut want_low = config.sample_count - want_high;
    if part.high.len() < want_high {
        want_low += want_high - part.high.len();
        want_high = part.high.len();
    }
    if part.low.len() < want_low {
        want_high += want_low - part.low.len();
        want_low = part.low.len();
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let high = weighted_draws(&part.high, &profile.density, want_high, &mut rng);
    let low = weighted_draws(&part.low, &profile.density, want_low, &mut rng);

    let mut tagged: Vec<(usize, Provenance)> = high
        .into_iter()
        .map(|i| (i, Provenance::High))
        .chain(low.into_iter().map(|i| (i, Provenance::Low)))
        .collect();
    tagged.sort_unstable_by_key(|p| p.0);
    Ok(SampleSet {
        indices: tagged.iter().map(|p| p.0).collect(),
        provenance: tagged.iter().map(|p| p.1).collect(),
        seed: config.seed,
        truncated: false,
    })
}

/// Uniform sampling without replacement, sorted. Used as the baseline
/// sampler in ablations.
pub fn uniform_sample(frames: usize, count: usize, seed: u64) -> Vec<usize> {
    if count >= frames {
        return (0..frames).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, frames, count).into_vec();
    picked.sort_unstable();
    picked
}

fn provenance_of(profile: &DensityProfile, tau: f64, t: usize) -> Vec<Provenance> {
    let part = nucleus_partition(profile, tau);
    let mut out = vec![Provenance::Low; t];
    for i in part.high {
        out[i] = Provenance::High;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(d: &[f64]) -> DensityProfile {
        DensityProfile {
            density: d.to_vec(),
            from_raw: true,
        }
    }

    #[test]
    fn density_examples() {
        let p = DensityProfile::from_counts(&[2, 3, 5], true).unwrap();
        assert_eq!(p.density, vec![0.2, 0.3, 0.5]);
        assert_eq!(DensityProfile::from_counts(&[7], true).unwrap().density, vec![1.0]);
        assert_eq!(DensityProfile::from_counts(&[1, 1, 1, 1], true).unwrap().density, vec![0.25; 4]);
        assert!(matches!(DensityProfile::from_counts(&[0, 0], true), Err(Error::DegenerateDensity)));
    }

    #[test]
    fn nucleus_reaching_tau_is_not_exceeding_it() {
        let p = profile(&[0.5, 0.3, 0.15, 0.04, 0.01]);
        let part = nucleus_partition(&p, 0.95);
        assert_eq!(part.high, vec![0, 1, 2, 3]);
        assert_eq!(part.low, vec![4]);
    }

    #[test]
    fn nucleus_uniform_takes_everything() {
        let p = profile(&[0.1; 10]);
        let part = nucleus_partition(&p, 0.95);
        assert_eq!(part.high, (0..10).collect::<Vec<_>>());
        assert!(part.low.is_empty());
    }

    #[test]
    fn nucleus_tiny_tau_takes_densest() {
        let p = profile(&[0.2, 0.2, 0.5, 0.1]);
        assert_eq!(nucleus_partition(&p, 1e-6).high, vec![2]);
        // ties go to the lower index
        let p = profile(&[0.25, 0.5, 0.25]);
        assert_eq!(nucleus_partition(&p, 0.6).high, vec![1, 0]);
    }

    #[test]
    fn full_count_is_identity() {
        let p = profile(&[0.1, 0.2, 0.3, 0.4]);
        let cfg = EdsConfig {
            sample_count: 4,
            ..EdsConfig::default()
        };
        let s = eds_sample(&p, &cfg).unwrap();
        assert_eq!(s.indices, vec![0, 1, 2, 3]);
        assert!(!s.truncated);
        let s = eds_sample(&p, &EdsConfig::default()).unwrap();
        assert_eq!(s.indices.len(), 4);
        assert!(s.truncated);
    }

    #[test]
    fn same_seed_same_samples() {
        let d: Vec<f64> = (1..=30).map(|i| i as f64 / 465.0).collect();
        let cfg = EdsConfig {
            sample_count: 10,
            seed: 42,
            ..EdsConfig::default()
        };
        let a = eds_sample(&profile(&d), &cfg).unwrap();
        assert_eq!(a, eds_sample(&profile(&d), &cfg).unwrap());
        assert!(a.indices.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(a.count(Provenance::High), 8);
        assert_eq!(a.count(Provenance::Low), 2);
    }

    #[test]
    fn shortfall_spills_to_low_set() {
        let p = profile(&[0.98, 0.01, 0.01]);
        let cfg = EdsConfig {
            sample_count: 2,
            ..EdsConfig::default()
        };
        for seed in 0..20 {
            let s = eds_sample(&p, &EdsConfig { seed, ..cfg.clone() }).unwrap();
            assert_eq!(s.len(), 2);
            assert_eq!(s.indices[0], 0);
            assert_eq!(s.provenance, vec![Provenance::High, Provenance::Low]);
        }
    }

    #[test]
    fn zero_density_low_set_falls_back_to_uniform() {
        let p = profile(&[0.6, 0.4, 0.0, 0.0, 0.0]);
        let cfg = EdsConfig {
            sample_count: 3,
            ratio_high: 0.0,
            tau: 0.5,
            ..EdsConfig::default()
        };
        let mut seen = [false; 5];
        for seed in 0..50 {
            let s = eds_sample(&p, &EdsConfig { seed, ..cfg.clone() }).unwrap();
            assert_eq!(s.len(), 3);
            for i in s.indices {
                seen[i] = true;
            }
        }
        assert!(seen[2] && seen[3] && seen[4]);
    }

    #[test]
    fn sample_file_round_trip() {
        let s = SampleSet {
            indices: vec![1, 4, 9],
            provenance: vec![Provenance::High, Provenance::Low, Provenance::High],
            seed: 0,
            truncated: false,
        };
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "1,high\n4,low\n9,high\n");
        assert_eq!(SampleSet::read(&buf[..]).unwrap(), s);
        assert!(SampleSet::read("3,high\n2,low\n".as_bytes()).is_err());
    }

    #[test]
    fn uniform_sample_is_sorted_and_distinct() {
        let s = uniform_sample(50, 12, 3);
        assert_eq!(s.len(), 12);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(uniform_sample(5, 12, 3), vec![0, 1, 2, 3, 4]);
    }
}
