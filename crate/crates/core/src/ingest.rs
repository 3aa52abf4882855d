//! Parsing of snapshot files and directories into typed in-memory series,
//! plus a synthetic run generator for end-to-end testing.
//!
//! The canonical on-disk layout is a directory of ASCII files, one file per
//! recording snapshot, named by timestamp (`YYYY.MM.DD.HH.MM.SS`). Each line
//! is one sampling instant; columns are tab-separated accelerometer channels.

use std::f64::consts::PI;
use std::path::Path;

use chrono::NaiveDateTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// One recorded file: all channels at one timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct VibrationSnapshot {
    pub timestamp: NaiveDateTime,
    /// Identifier used in manifests and image provenance (filename stem for
    /// disk runs, `synth-NNNNN` for generated ones).
    pub id: String,
    /// One sample vector per channel; all channels have identical length.
    channels: Vec<Vec<f64>>,
}

impl VibrationSnapshot {
    pub fn new(timestamp: NaiveDateTime, id: String, channels: Vec<Vec<f64>>) -> Result<Self> {
        let n = channels.first().map(|c| c.len()).unwrap_or(0);
        if n == 0 {
            return Err(Error::EmptySnapshot { path: id });
        }
        if let Some(bad) = channels.iter().find(|c| c.len() != n) {
            return Err(Error::Shape(format!(
                "snapshot {id}: channel length {} != {n}",
                bad.len()
            )));
        }
        Ok(Self {
            timestamp,
            id,
            channels,
        })
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn samples_per_channel(&self) -> usize {
        self.channels[0].len()
    }

    pub fn channel(&self, index: usize) -> Result<&[f64]> {
        self.channels
            .get(index)
            .map(Vec::as_slice)
            .ok_or(Error::ChannelRange {
                requested: index,
                available: self.channels.len(),
            })
    }
}

/// One snapshot reduced to a single channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSignal {
    pub timestamp: NaiveDateTime,
    pub id: String,
    pub samples: Vec<f64>,
}

/// A time-ordered run of snapshots restricted to one channel.
///
/// Invariants checked at construction: timestamps strictly increasing, all
/// snapshots the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSeries {
    pub channel_index: usize,
    snapshots: Vec<SnapshotSignal>,
}

impl SignalSeries {
    pub fn new(channel_index: usize, snapshots: Vec<SnapshotSignal>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::EmptyRun(Path::new("<empty series>").to_path_buf()));
        }
        let expected = snapshots[0].samples.len();
        for (i, s) in snapshots.iter().enumerate() {
            if s.samples.len() != expected {
                return Err(Error::SampleCount {
                    index: i,
                    id: s.id.clone(),
                    expected,
                    found: s.samples.len(),
                });
            }
            if i > 0 && s.timestamp <= snapshots[i - 1].timestamp {
                return Err(Error::TimestampOrder {
                    index: i,
                    id: s.id.clone(),
                });
            }
        }
        Ok(Self {
            channel_index,
            snapshots,
        })
    }

    pub fn snapshots(&self) -> &[SnapshotSignal] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn samples_per_snapshot(&self) -> usize {
        self.snapshots[0].samples.len()
    }
}

/// Parses one snapshot file body: tab-separated columns, one row per sampling
/// instant. Returns the channel-major sample matrix, so
/// `channels[c][r]` is column `c` of row `r`.
///
/// Whitespace-only lines are skipped; any other deviation aborts with the
/// offending 1-based line number.
pub fn parse_snapshot_file(raw_bytes: &[u8], expected_channels: usize) -> Result<Vec<Vec<f64>>> {
    parse_snapshot_named(raw_bytes, expected_channels, "<memory>")
}

pub(crate) fn parse_snapshot_named(
    raw_bytes: &[u8],
    expected_channels: usize,
    path: &str,
) -> Result<Vec<Vec<f64>>> {
    let text = std::str::from_utf8(raw_bytes).map_err(|_| Error::EmptySnapshot {
        path: format!("{path}: not ASCII text"),
    })?;
    let mut channels: Vec<Vec<f64>> = vec![Vec::new(); expected_channels];
    let mut rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = 0usize;
        for (c, field) in line.split('\t').enumerate() {
            fields += 1;
            if fields > expected_channels {
                break;
            }
            let value: f64 = field
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::MalformedField {
                    path: path.to_string(),
                    line: lineno + 1,
                    field: field.trim().to_string(),
                })?;
            channels[c].push(value);
        }
        if fields != expected_channels {
            return Err(Error::ColumnCount {
                path: path.to_string(),
                line: lineno + 1,
                expected: expected_channels,
                found: line.split('\t').count(),
            });
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptySnapshot {
            path: path.to_string(),
        });
    }
    // A short column can only come from a parse abort mid-row, which already
    // returned; truncate defensively to the row count.
    for ch in &mut channels {
        ch.truncate(rows);
    }
    Ok(channels)
}

/// Decodes the `YYYY.MM.DD.HH.MM.SS` filename convention.
pub fn parse_filename_timestamp(name: &str) -> Result<NaiveDateTime> {
    let stem = name.strip_suffix(".txt").unwrap_or(name);
    NaiveDateTime::parse_from_str(stem, "%Y.%m.%d.%H.%M.%S").map_err(|_| Error::TimestampFormat {
        name: name.to_string(),
    })
}

/// Loads all snapshot files in `directory`, keeping one channel, ordered by
/// the filename-derived timestamp. The channel count of the first file (in
/// timestamp order) fixes the expected layout for the rest.
pub fn load_run(directory: &Path, channel_index: usize) -> Result<SignalSeries> {
    let mut entries: Vec<(NaiveDateTime, String, std::path::PathBuf)> = Vec::new();
    let read = std::fs::read_dir(directory).map_err(|e| Error::io(directory, e))?;
    for entry in read {
        let entry = entry.map_err(|e| Error::io(directory, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().to_string();
        if name.starts_with('.') {
            continue;
        }
        let ts = parse_filename_timestamp(&name)?;
        let stem = name.strip_suffix(".txt").unwrap_or(&name).to_string();
        entries.push((ts, stem, path));
    }
    if entries.is_empty() {
        return Err(Error::EmptyRun(directory.to_path_buf()));
    }
    entries.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));

    let mut expected_channels = None;
    let mut snapshots = Vec::with_capacity(entries.len());
    for (ts, id, path) in entries {
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let n_channels = match expected_channels {
            Some(n) => n,
            None => {
                let first_line = bytes
                    .split(|&b| b == b'\n')
                    .find(|l| !l.iter().all(|b| b.is_ascii_whitespace()))
                    .unwrap_or(&[]);
                let n = first_line.split(|&b| b == b'\t').count();
                if channel_index >= n {
                    return Err(Error::ChannelRange {
                        requested: channel_index,
                        available: n,
                    });
                }
                expected_channels = Some(n);
                n
            }
        };
        let channels = parse_snapshot_named(&bytes, n_channels, &path.to_string_lossy())?;
        let samples = channels
            .into_iter()
            .nth(channel_index)
            .expect("channel_index checked against first file");
        snapshots.push(SnapshotSignal {
            timestamp: ts,
            id,
            samples,
        });
    }
    SignalSeries::new(channel_index, snapshots)
}

/// Degradation profile for [`synth_run`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SynthProfile {
    /// Amplitude of the rotation carrier tone.
    pub base_amplitude: f64,
    /// Standard deviation of the broadband noise floor at zero wear.
    pub noise_level: f64,
    /// How strongly the wear envelope grows over the run; 0 means no wear.
    pub wear_growth_rate: f64,
    pub snapshots: usize,
    pub samples_per_snapshot: usize,
}

impl SynthProfile {
    fn validate(&self) -> Result<()> {
        if !(self.base_amplitude > 0.0) {
            return Err(Error::Profile("base_amplitude must be > 0".into()));
        }
        if !(self.noise_level > 0.0) {
            return Err(Error::Profile("noise_level must be > 0".into()));
        }
        if !(self.wear_growth_rate >= 0.0) {
            return Err(Error::Profile("wear_growth_rate must be >= 0".into()));
        }
        if self.snapshots == 0 || self.samples_per_snapshot == 0 {
            return Err(Error::Profile(
                "snapshots and samples_per_snapshot must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Wear envelope at snapshot `k`: 1 at the start, growing quadratically to
    /// `1 + wear_growth_rate` at the end of the run. Monotone non-decreasing.
    pub fn envelope(&self, k: usize) -> f64 {
        if self.snapshots <= 1 {
            return 1.0;
        }
        let u = k as f64 / (self.snapshots - 1) as f64;
        1.0 + self.wear_growth_rate * u * u
    }
}

// Carrier period, fault burst spacing, and burst shape for the synthetic
// generator, in samples. The burst is a short damped oscillation, the classic
// impact-resonance signature on a worn raceway.
const CARRIER_PERIOD: f64 = 64.0;
const BURST_BASE_PERIOD: f64 = 256.0;
const BURST_LEN: usize = 48;
const BURST_DECAY: f64 = 10.0;
const BURST_TONE_PERIOD: f64 = 8.0;
const BURST_GAIN: f64 = 0.9;

/// Generates a deterministic run-to-failure recording.
///
/// Each snapshot is a carrier tone plus a broadband noise floor scaled by a
/// monotone wear envelope. Wear also injects periodic impact bursts whose
/// amplitude and repetition rate grow with the envelope, so that degradation
/// changes the waveform *shape*, not just its scale: downstream imaging
/// normalizes every window to full range, which erases pure amplitude
/// differences. With `wear_growth_rate = 0` every snapshot is statistically
/// identical and no bursts are emitted.
pub fn synth_run(profile: &SynthProfile, seed: u64) -> Result<SignalSeries> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = profile.samples_per_snapshot;
    let base_ts =
        NaiveDateTime::parse_from_str("2003.10.22.00.00.00", "%Y.%m.%d.%H.%M.%S").unwrap();

    let mut snapshots = Vec::with_capacity(profile.snapshots);
    for k in 0..profile.snapshots {
        let env = profile.envelope(k);
        let wear = env - 1.0;
        let phase: f64 = rng.gen::<f64>() * 2.0 * PI;
        let mut samples = vec![0.0f64; n];
        for (t, s) in samples.iter_mut().enumerate() {
            let carrier = profile.base_amplitude * (2.0 * PI * t as f64 / CARRIER_PERIOD + phase).sin();
            let noise: f64 = rng.sample(StandardNormal);
            *s = carrier + profile.noise_level * env * noise;
        }
        if wear > 0.0 {
            // Impact bursts: spacing shrinks and amplitude grows with wear.
            let period = (BURST_BASE_PERIOD / env).max(BURST_LEN as f64 + 1.0);
            let amp = profile.base_amplitude * BURST_GAIN * wear;
            let mut start = rng.gen::<f64>() * period;
            while (start as usize) < n {
                let s0 = start as usize;
                for tau in 0..BURST_LEN.min(n - s0) {
                    let g = (-(tau as f64) / BURST_DECAY).exp()
                        * (2.0 * PI * tau as f64 / BURST_TONE_PERIOD).sin();
                    samples[s0 + tau] += amp * g;
                }
                start += period;
            }
        }
        snapshots.push(SnapshotSignal {
            timestamp: base_ts + chrono::Duration::minutes(10 * k as i64),
            id: format!("synth-{k:05}"),
            samples,
        });
    }
    SignalSeries::new(0, snapshots)
}
