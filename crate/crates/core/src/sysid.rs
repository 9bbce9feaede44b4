//! Free-decay identification of the tilt spring-damper.
//!
//! Two successive positive roll peaks `phi1`, `phi2` one damped period `T`
//! apart give the logarithmic decrement and from it the model:
//!
//! ```text
//! delta = ln(phi1 / phi2)          zeta = delta / sqrt(4 pi^2 + delta^2)
//! wd    = 2 pi / T                 wn   = wd / sqrt(1 - zeta^2)
//! k     = I wn^2                   d    = 2 zeta sqrt(k I)
//! ```

use std::io::{Read, Write};

use crate::board::TiltModel;
use crate::error::{Error, Result};
use crate::scalar::{cast, Real};

/// Sampled roll response `(time s, roll rad)` with strictly increasing time.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeDecayTrace<T> {
    samples: Vec<(T, T)>,
}

pub const TRACE_CSV_HEADER: &str = "t,roll";

impl<T: Real> FreeDecayTrace<T> {
    pub fn new(samples: Vec<(T, T)>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "trace needs at least 3 samples, got {}",
                samples.len()
            )));
        }
        for (i, w) in samples.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidArgument(format!(
                    "trace time not strictly increasing at sample {}",
                    i + 1
                )));
            }
        }
        if samples
            .iter()
            .any(|(t, r)| !t.is_finite() || !r.is_finite())
        {
            return Err(Error::InvalidArgument(
                "trace contains non-finite values".into(),
            ));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(T, T)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Reads a `t,roll` CSV. `source` names the input in diagnostics.
    pub fn read_csv<R: Read>(reader: R, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "roll" {
            return Err(Error::Parse {
                path: source.to_string(),
                line: 1,
                message: format!("expected header `{TRACE_CSV_HEADER}`"),
            });
        }
        let mut samples = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let line = i + 2;
            let record = record?;
            let field = |idx: usize| -> Result<T> {
                let raw = record.get(idx).unwrap_or("");
                raw.parse::<f64>().map(cast).map_err(|_| Error::Parse {
                    path: source.to_string(),
                    line,
                    message: format!("invalid number `{raw}`"),
                })
            };
            if record.len() != 2 {
                return Err(Error::Parse {
                    path: source.to_string(),
                    line,
                    message: format!("expected 2 fields, got {}", record.len()),
                });
            }
            samples.push((field(0)?, field(1)?));
        }
        Self::new(samples)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        for (t, r) in &self.samples {
            writeln!(out, "{t},{r}")?;
        }
        Ok(())
    }

    /// Centred moving average; the window shrinks near the ends.
    pub fn smoothed(&self, window: usize) -> Self {
        if window <= 1 {
            return self.clone();
        }
        let half = window / 2;
        let n = self.samples.len();
        let samples = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(half);
                let hi = (i + half).min(n - 1);
                let sum = self.samples[lo..=hi]
                    .iter()
                    .fold(T::zero(), |acc, s| acc + s.1);
                (self.samples[i].0, sum / T::from_usize(hi - lo + 1).unwrap())
            })
            .collect();
        Self { samples }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakDetection<T> {
    /// Peaks at or below this roll amplitude are ignored (rad).
    pub noise_floor: T,
    /// Moving-average window applied before detection; off when `None`.
    pub smoothing_window: Option<usize>,
    /// Treat the first sample as a peak when the trace starts by falling,
    /// as it does for a deck released from rest.
    pub include_release: bool,
}

impl<T: Real> Default for PeakDetection<T> {
    fn default() -> Self {
        Self {
            noise_floor: cast(1e-4),
            smoothing_window: None,
            include_release: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak<T> {
    pub time: T,
    pub amplitude: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakPair<T> {
    pub phi1: T,
    pub phi2: T,
    pub period: T,
}

/// Refines a discrete maximum at `i` with a parabola through its neighbours.
fn refine<T: Real>(s: &[(T, T)], i: usize) -> Peak<T> {
    let (y0, y1, y2) = (s[i - 1].1, s[i].1, s[i + 1].1);
    let denom = y0 - cast::<T>(2.0) * y1 + y2;
    if denom >= T::zero() {
        return Peak {
            time: s[i].0,
            amplitude: y1,
        };
    }
    let half: T = cast(0.5);
    let offset = half * (y0 - y2) / denom;
    let spacing = half * (s[i + 1].0 - s[i - 1].0);
    Peak {
        time: s[i].0 + offset * spacing,
        amplitude: y1 - cast::<T>(0.25) * (y0 - y2) * offset,
    }
}

/// All positive peaks above the noise floor, in time order.
pub fn find_peaks<T: Real>(trace: &FreeDecayTrace<T>, cfg: &PeakDetection<T>) -> Vec<Peak<T>> {
    let filtered;
    let trace = match cfg.smoothing_window {
        Some(w) if w > 1 => {
            filtered = trace.smoothed(w);
            &filtered
        }
        _ => trace,
    };
    let s = trace.samples();
    let mut peaks = Vec::new();
    if cfg.include_release && s[0].1 > s[1].1 && s[0].1 > cfg.noise_floor {
        peaks.push(Peak {
            time: s[0].0,
            amplitude: s[0].1,
        });
    }
    for i in 1..s.len() - 1 {
        if s[i].1 > s[i - 1].1 && s[i].1 >= s[i + 1].1 && s[i].1 > cfg.noise_floor {
            peaks.push(refine(s, i));
        }
    }
    peaks
}

/// First two successive positive peaks and their separation.
pub fn detect_peaks<T: Real>(
    trace: &FreeDecayTrace<T>,
    cfg: &PeakDetection<T>,
) -> Result<PeakPair<T>> {
    let peaks = find_peaks(trace, cfg);
    match peaks.as_slice() {
        [first, second, ..] => Ok(PeakPair {
            phi1: first.amplitude,
            phi2: second.amplitude,
            period: second.time - first.time,
        }),
        _ => Err(Error::NoOscillation(format!(
            "found {} peak(s) above noise floor {}, need 2",
            peaks.len(),
            cfg.noise_floor
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentificationResult<T> {
    pub log_decrement: T,
    pub damping_ratio: T,
    pub damped_period: T,
    pub damped_frequency: T,
    pub natural_frequency: T,
    pub stiffness: T,
    pub damping: T,
}

impl<T: Real> IdentificationResult<T> {
    pub fn tilt_model(&self, inertia: T) -> Result<TiltModel<T>> {
        TiltModel::new(inertia, self.stiffness, self.damping)
    }
}

fn from_decrement<T: Real>(delta: T, period: T, inertia: T) -> IdentificationResult<T> {
    let two_pi = cast::<T>(2.0) * T::PI();
    let zeta = delta / (two_pi * two_pi + delta * delta).sqrt();
    let wd = two_pi / period;
    let wn = wd / (T::one() - zeta * zeta).sqrt();
    let stiffness = inertia * wn * wn;
    let damping = cast::<T>(2.0) * zeta * (stiffness * inertia).sqrt();
    IdentificationResult {
        log_decrement: delta,
        damping_ratio: zeta,
        damped_period: period,
        damped_frequency: wd,
        natural_frequency: wn,
        stiffness,
        damping,
    }
}

fn check_period_inertia<T: Real>(period: T, inertia: T) -> Result<()> {
    if !(period > T::zero() && period.is_finite()) {
        return Err(Error::Domain(format!(
            "period must be positive, got {period}"
        )));
    }
    if !(inertia > T::zero() && inertia.is_finite()) {
        return Err(Error::Domain(format!(
            "inertia must be positive, got {inertia}"
        )));
    }
    Ok(())
}

/// Identifies stiffness and damping from two successive peaks.
pub fn identify_from_peaks<T: Real>(
    phi1: T,
    phi2: T,
    period: T,
    inertia: T,
) -> Result<IdentificationResult<T>> {
    if !(phi2 > T::zero()) {
        return Err(Error::Domain(format!(
            "peaks must be positive, got {phi1}, {phi2}"
        )));
    }
    if !(phi1 > phi2) {
        return Err(Error::Domain(format!(
            "peaks do not decay ({phi1} -> {phi2})"
        )));
    }
    check_period_inertia(period, inertia)?;
    Ok(from_decrement((phi1 / phi2).ln(), period, inertia))
}

/// Detects peaks in `trace` and identifies the model from the first pair.
pub fn identify<T: Real>(
    trace: &FreeDecayTrace<T>,
    inertia: T,
    cfg: &PeakDetection<T>,
) -> Result<IdentificationResult<T>> {
    let p = detect_peaks(trace, cfg)?;
    identify_from_peaks(p.phi1, p.phi2, p.period, inertia)
}

/// Alternative to [`identify`] fitting `ln(phi_i) = a - delta i` over every
/// detected peak by least squares, with the period taken as the mean peak
/// spacing.
pub fn identify_multi_peak<T: Real>(
    trace: &FreeDecayTrace<T>,
    inertia: T,
    cfg: &PeakDetection<T>,
) -> Result<IdentificationResult<T>> {
    let peaks = find_peaks(trace, cfg);
    if peaks.len() < 2 {
        return Err(Error::NoOscillation(format!(
            "found {} peak(s), need 2",
            peaks.len()
        )));
    }
    let n = T::from_usize(peaks.len()).unwrap();
    let idx = |i: usize| T::from_usize(i).unwrap();
    let mean_i = peaks
        .iter()
        .enumerate()
        .fold(T::zero(), |a, (i, _)| a + idx(i))
        / n;
    let mean_l = peaks.iter().fold(T::zero(), |a, p| a + p.amplitude.ln()) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (i, p) in peaks.iter().enumerate() {
        let dx = idx(i) - mean_i;
        sxy = sxy + dx * (p.amplitude.ln() - mean_l);
        sxx = sxx + dx * dx;
    }
    let delta = -sxy / sxx;
    if !(delta > T::zero()) {
        return Err(Error::Domain("peaks do not decay".into()));
    }
    let period = (peaks[peaks.len() - 1].time - peaks[0].time) / (n - T::one());
    check_period_inertia(period, inertia)?;
    Ok(from_decrement(delta, period, inertia))
}

/// Roll inertia of a uniform cuboid about its longitudinal axis.
pub fn cuboid_roll_inertia<T: Real>(mass: T, width: T, height: T) -> Result<T> {
    for (name, v) in [("mass", mass), ("width", width), ("height", height)] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    Ok(mass * (width * width + height * height) / cast(12.0))
}
