//! Leader velocity profiles: CSV ingestion with a deterministic train/test
//! split, and a synthetic generator standing in for recorded car-following
//! events.
//!
//! File schema: one file per event, header `step,velocity_mps`, filename
//! (minus extension) is the event id.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::PlatoonParams;
use crate::{Error, Result};

/// Control intervals per episode; profiles shorter than this are rejected.
pub const MIN_PROFILE_LEN: usize = 120;

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderProfile {
    pub id: String,
    /// One velocity sample per control interval, m/s.
    pub velocities: Vec<f64>,
    /// Implied accelerations that exceeded the limits when differenced.
    pub clip_events: usize,
}

impl LeaderProfile {
    /// Builds a profile from raw samples, validating finiteness and length
    /// and counting implied-acceleration clip events.
    pub fn new(id: String, velocities: Vec<f64>, params: &PlatoonParams) -> Result<Self> {
        if velocities.len() < MIN_PROFILE_LEN {
            return Err(Error::Data(format!(
                "profile '{id}': {} samples, need at least {MIN_PROFILE_LEN}",
                velocities.len()
            )));
        }
        if velocities.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Data(format!("profile '{id}': non-finite or negative velocity")));
        }
        let clip_events = velocities
            .windows(2)
            .filter(|w| {
                let acc = (w[1] - w[0]) / params.t;
                acc < params.acc_min || acc > params.acc_max
            })
            .count();
        Ok(Self { id, velocities, clip_events })
    }
}

/// Reads every `.csv` in `dir` as one profile.
pub fn read_profile_dir(dir: &Path, params: &PlatoonParams) -> Result<Vec<LeaderProfile>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
        .collect();
    if paths.is_empty() {
        return Err(Error::Data(format!("no .csv profiles in {}", dir.display())));
    }
    paths.sort();
    paths.iter().map(|p| read_profile_file(p, params)).collect()
}

pub fn read_profile_file(path: &Path, params: &PlatoonParams) -> Result<LeaderProfile> {
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Data(format!("bad profile filename {}", path.display())))?
        .to_string();
    let mut reader = csv::Reader::from_path(path)?;
    {
        let headers = reader.headers()?;
        if headers.len() < 2 || &headers[0] != "step" || &headers[1] != "velocity_mps" {
            return Err(Error::Data(format!(
                "profile '{id}': expected header 'step,velocity_mps', got {headers:?}"
            )));
        }
    }
    let mut velocities = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let v: f64 = record
            .get(1)
            .ok_or_else(|| Error::Data(format!("profile '{id}' row {row}: missing velocity")))?
            .parse()
            .map_err(|e| Error::Data(format!("profile '{id}' row {row}: {e}")))?;
        velocities.push(v);
    }
    LeaderProfile::new(id, velocities, params)
}

pub fn write_profile_file(dir: &Path, profile: &LeaderProfile) -> Result<PathBuf> {
    let path = dir.join(format!("{}.csv", profile.id));
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["step", "velocity_mps"])?;
    for (k, v) in profile.velocities.iter().enumerate() {
        w.write_record([k.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(path)
}

/// Splits profiles into train and test sets: sorted by id, then shuffled by
/// the split seed, then cut at `ratio`.
pub fn split_profiles(
    mut profiles: Vec<LeaderProfile>,
    ratio: f64,
    seed: u64,
) -> Result<(Vec<LeaderProfile>, Vec<LeaderProfile>)> {
    if profiles.is_empty() {
        return Err(Error::Data("no profiles to split".into()));
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::invalid(format!("split ratio {ratio} outside [0, 1]")));
    }
    profiles.sort_by(|a, b| a.id.cmp(&b.id));
    let mut rng = super::rng::substream(seed, "profile.split", 0);
    profiles.shuffle(&mut rng);
    let n_train = (profiles.len() as f64 * ratio).round() as usize;
    let test = profiles.split_off(n_train.min(profiles.len()));
    Ok((profiles, test))
}

/// Loads a profile directory and splits it.
pub fn load_profiles(
    dir: &Path,
    ratio: f64,
    seed: u64,
    params: &PlatoonParams,
) -> Result<(Vec<LeaderProfile>, Vec<LeaderProfile>)> {
    split_profiles(read_profile_dir(dir, params)?, ratio, seed)
}

/// Generates mean-reverting velocity walks around 10 m/s.
///
/// Increments are clipped so the implied acceleration stays inside the
/// platoon limits and the speed inside [0, 20] m/s.
pub fn synthetic_profiles<R: Rng>(
    n: usize,
    len: usize,
    params: &PlatoonParams,
    rng: &mut R,
) -> Vec<LeaderProfile> {
    let theta = 0.03;
    let sigma = 0.18;
    (0..n)
        .map(|i| {
            let mut v = 10.0 + 2.0 * rng.gen_range(-1.0..1.0);
            let mut velocities = Vec::with_capacity(len);
            velocities.push(v);
            while velocities.len() < len {
                let gauss: f64 = StandardNormal.sample(rng);
                let mut dv = theta * (10.0 - v) + sigma * gauss;
                // Slightly inside the limits so recomputed differences stay
                // in range despite rounding.
                let max_step = params.acc_max * params.t * 0.999;
                let min_step = params.acc_min * params.t * 0.999;
                dv = dv.clamp(min_step, max_step);
                v = (v + dv).clamp(0.0, 20.0);
                velocities.push(v);
            }
            LeaderProfile::new(format!("synthetic-{i:04}"), velocities, params)
                .expect("generator respects its own bounds")
        })
        .collect()
}

/// Convenience: raw velocity vectors for the trainer.
pub fn velocity_vectors(profiles: &[LeaderProfile]) -> Vec<Vec<f64>> {
    profiles.iter().map(|p| p.velocities.clone()).collect()
}
