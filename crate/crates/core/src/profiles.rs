//! Hourly capacity-factor series for the renewable sources.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub const PV_MEAN: f64 = 0.245;
pub const WIND_MEAN: f64 = 0.50;

/// Capacity factors in `[0, 1]` keyed by profile name (`pv`, `wind`).
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileSet {
    pub series: BTreeMap<String, Vec<f64>>,
}

impl ProfileSet {
    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.series.get(key).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.series.values().map(Vec::len).min().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mean(&self, key: &str) -> Option<f64> {
        let s = self.get(key)?;
        Some(s.iter().sum::<f64>() / s.len().max(1) as f64)
    }

    /// First `hours` values of every series.
    pub fn truncated(&self, hours: usize) -> ProfileSet {
        ProfileSet {
            series: self.series.iter().map(|(k, v)| (k.clone(), v[..hours.min(v.len())].to_vec())).collect(),
        }
    }

    /// CSV with header `hour,pv_cf,wind_cf` and six decimals.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ProfileError> {
        let mut w = csv::Writer::from_writer(out);
        let pv = self.get("pv").unwrap_or(&[]);
        let wind = self.get("wind").unwrap_or(&[]);
        w.write_record(["hour", "pv_cf", "wind_cf"])?;
        for h in 0..self.len() {
            w.write_record([h.to_string(), format!("{:.6}", pv[h]), format!("{:.6}", wind[h])])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("cannot read profiles: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed profile file: {0}")]
    Csv(#[from] csv::Error),
    #[error("profile file lacks column `{0}`")]
    MissingColumn(&'static str),
    #[error("row {row}: {column} = {value} is outside [0, 1]")]
    Range { row: usize, column: &'static str, value: f64 },
    #[error("row {row}: cannot read {column} value `{text}`")]
    Value { row: usize, column: &'static str, text: String },
    #[error("row {row}: hour is {found}, expected {expected}")]
    Hour { row: usize, found: String, expected: usize },
    #[error("profile file has {rows} rows, horizon needs {hours}")]
    TooShort { rows: usize, hours: usize },
}

/// Reads a profile CSV and keeps the first `hours` rows. Row numbers in errors
/// count data rows from 1.
pub fn read_profiles<R: Read>(input: R, hours: usize) -> Result<ProfileSet, ProfileError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &'static str| headers.iter().position(|h| h == name).ok_or(ProfileError::MissingColumn(name));
    let (hc, pc, wc) = (col("hour")?, col("pv_cf")?, col("wind_cf")?);
    let mut pv = Vec::new();
    let mut wind = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = k + 1;
        let hour = rec.get(hc).unwrap_or("");
        if hour.parse::<usize>().ok() != Some(k) {
            return Err(ProfileError::Hour { row, found: hour.to_string(), expected: k });
        }
        for (c, name, out) in [(pc, "pv_cf", &mut pv), (wc, "wind_cf", &mut wind)] {
            let text = rec.get(c).unwrap_or("");
            let value: f64 = text.parse().map_err(|_| ProfileError::Value { row, column: name, text: text.to_string() })?;
            if !(0.0..=1.0).contains(&value) {
                return Err(ProfileError::Range { row, column: name, value });
            }
            out.push(value);
        }
    }
    if pv.len() < hours {
        return Err(ProfileError::TooShort { rows: pv.len(), hours });
    }
    pv.truncate(hours);
    wind.truncate(hours);
    Ok(ProfileSet { series: BTreeMap::from([("pv".to_string(), pv), ("wind".to_string(), wind)]) })
}

pub fn load_profiles(path: &Path, hours: usize) -> Result<ProfileSet, ProfileError> {
    read_profiles(std::fs::File::open(path)?, hours)
}

/// Largest `a` in `[0, hi]` with `mean(f(a)) <= target`, by bisection.
fn calibrate(target: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn mean(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    v.sum::<f64>() / n as f64
}

/// Synthetic profiles with the requested means.
///
/// PV is a clear-sky sine between 06:00 and 18:00 scaled by a daily
/// cloudiness factor and clipped to `[0, 1]`. Wind is a logistic transform of
/// an hourly AR(1) process. Both are calibrated to the requested mean over the
/// generated series.
pub fn synth_profiles(seed: u64, hours: usize, pv_mean: f64, wind_mean: f64) -> ProfileSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = hours.max(1);
    let days = n.div_ceil(24);

    let mut cloud = Vec::with_capacity(days);
    let mut z = 0.0f64;
    for _ in 0..days {
        let e: f64 = rng.sample(StandardNormal);
        z = 0.6 * z + 0.8 * e;
        cloud.push(1.0 / (1.0 + (-(1.2 + 0.9 * z)).exp()));
    }
    let shape: Vec<f64> = (0..n)
        .map(|t| {
            let h = (t % 24) as f64 + 0.5;
            let s = (std::f64::consts::PI * (h - 6.0) / 12.0).sin();
            if (6.0..18.0).contains(&h) { s.max(0.0) * cloud[t / 24] } else { 0.0 }
        })
        .collect();
    let pv_at = |a: f64| mean(shape.iter().map(|s| (a * s).min(1.0)), n);
    let a = if pv_mean <= 0.0 { 0.0 } else { calibrate(pv_mean, 20.0, pv_at) };
    let pv: Vec<f64> = shape.iter().map(|s| (a * s).min(1.0)).collect();

    let mut w = Vec::with_capacity(n);
    let mut z = 0.0f64;
    let phi: f64 = 0.97;
    for _ in 0..n {
        let e: f64 = rng.sample(StandardNormal);
        z = phi * z + (1.0 - phi * phi).sqrt() * e;
        w.push(z);
    }
    let logistic = |b: f64, z: f64| 1.0 / (1.0 + (-(b + 1.6 * z)).exp());
    let wind: Vec<f64> = if wind_mean <= 0.0 {
        vec![0.0; n]
    } else if wind_mean >= 1.0 {
        vec![1.0; n]
    } else {
        // Shift `b` ranges over [-30, 30]; bisect on the offset from -30.
        let off = calibrate(wind_mean, 60.0, |o| mean(w.iter().map(|z| logistic(o - 30.0, *z)), n));
        w.iter().map(|z| logistic(off - 30.0, *z)).collect()
    };
    ProfileSet {
        series: BTreeMap::from([
            ("pv".to_string(), pv[..hours].to_vec()),
            ("wind".to_string(), wind[..hours].to_vec()),
        ]),
    }
}
