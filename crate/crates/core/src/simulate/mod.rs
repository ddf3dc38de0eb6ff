//! Synthetic sessions from a lumped body-capacitance circuit.
//!
//! The body holds a charge `Q_B`; its potential is `Q_B / C_B`. When the
//! body capacitance changes the potential jumps by conservation of charge and
//! then relaxes back through the recharge path with time constant
//! `tau = C_total * VS / IS`. Motion is scripted as capacitance dips, one per
//! repetition, plus optional IMU pulses on the coupled channels.

pub mod presets;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::counting::RepetitionAnnotation;
use crate::error::{Error, Result};
use crate::ingest::SessionFile;
use crate::seeds;
use crate::types::{validate_session, Label, SampleFrame, Session, SessionMeta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitModel {
    /// Body to device, farads.
    pub c1: f64,
    /// Body to ground, farads.
    pub c2: f64,
    /// Device ground to earth, farads.
    pub c3: f64,
    /// Source potential, volts.
    pub vs: f64,
    /// Recharge current, amperes.
    pub is: f64,
    /// Body charge, coulombs.
    pub q_b: f64,
    /// Overrides the derived relaxation constant, seconds.
    #[serde(default)]
    pub tau: Option<f64>,
}

impl Default for CircuitModel {
    fn default() -> Self {
        CircuitModel {
            c1: 20e-12,
            c2: 100e-12,
            c3: 5e-12,
            vs: 1.0,
            is: 2.08e-10,
            q_b: 1e-11,
            tau: None,
        }
    }
}

impl CircuitModel {
    pub fn validate(&self) -> Result<()> {
        for (k, v) in [("c1", self.c1), ("c2", self.c2), ("c3", self.c3)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("model.{k}"), "capacitance must be positive"));
            }
        }
        if self.c2 < 10.0 * self.c3 {
            return Err(Error::config("model.c2", "must be at least 10 * c3"));
        }
        if !(self.vs > 0.0 && self.is > 0.0) {
            return Err(Error::config("model.vs", "source potential and recharge current must be positive"));
        }
        if !self.q_b.is_finite() {
            return Err(Error::config("model.q_b", "must be finite"));
        }
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::config("model.tau", "must be positive"));
            }
        }
        Ok(())
    }

    /// Resting body capacitance: C2 in parallel with C1 in series with C3.
    pub fn c_body(&self) -> f64 {
        self.c2 + self.c1 * self.c3 / (self.c1 + self.c3)
    }

    pub fn tau(&self) -> f64 {
        self.tau.unwrap_or(self.c_body() * self.vs / self.is)
    }
}

pub fn body_potential(q_b: f64, c_b: f64) -> Result<f64> {
    if !(c_b > 0.0) {
        return Err(Error::domain(format!("body capacitance must be positive, got {c_b}")));
    }
    Ok(q_b / c_b)
}

/// Deviation of the body potential from its resting value, in microvolts,
/// for a body-capacitance trajectory sampled at `fs`.
pub fn simulate_potential_response(cap: &[f64], m: &CircuitModel, fs: f64) -> Result<Vec<f64>> {
    if cap.is_empty() {
        return Err(Error::domain("capacitance trajectory is empty"));
    }
    if !(fs > 0.0) {
        return Err(Error::domain("sample rate must be positive"));
    }
    if let Some(i) = cap.iter().position(|c| !c.is_finite()) {
        return Err(Error::domain(format!("trajectory value {i} is not finite")));
    }
    m.validate()?;
    let decay = (-1.0 / (fs * m.tau())).exp();
    let mut out = Vec::with_capacity(cap.len());
    let mut d = 0.0;
    let mut prev = body_potential(m.q_b, cap[0])?;
    for &c in cap {
        let u = body_potential(m.q_b, c)?;
        d = d * decay + (u - prev);
        prev = u;
        out.push(d * 1e6);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    Acc,
    Gyro,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSigma {
    /// Microvolts.
    pub cap: f64,
    pub acc: f64,
    pub gyro: f64,
}

fn default_duty() -> f64 {
    0.6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExerciseScript {
    pub class: String,
    pub repetitions: usize,
    /// Seconds per repetition.
    pub period: f64,
    /// Fraction of each period spent moving.
    #[serde(default = "default_duty")]
    pub duty: f64,
    /// Peak body-potential deflection of the first repetition, microvolts.
    pub cap_amplitude: f64,
    /// Pulse amplitude per IMU axis: acc x, y, z then gyro x, y, z.
    #[serde(default)]
    pub imu_amplitude: [f64; 6],
    /// Relative amplitude change per repetition.
    #[serde(default)]
    pub amplitude_drift: f64,
    #[serde(default)]
    pub noise_sigma: NoiseSigma,
    #[serde(default)]
    pub coupled_channels: Vec<Coupling>,
}

impl ExerciseScript {
    pub fn validate(&self) -> Result<()> {
        let key = |f: &str| format!("scripts[{}].{f}", self.class);
        if self.repetitions == 0 {
            return Err(Error::config(key("repetitions"), "must be at least 1"));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::config(key("period"), "must be positive"));
        }
        if !(self.duty > 0.0 && self.duty <= 1.0) {
            return Err(Error::config(key("duty"), "must be in (0, 1]"));
        }
        if !(self.cap_amplitude >= 0.0 && self.cap_amplitude.is_finite()) {
            return Err(Error::config(key("cap_amplitude"), "must be nonnegative"));
        }
        if !(self.amplitude_drift > -1.0 && self.amplitude_drift.is_finite()) {
            return Err(Error::config(key("amplitude_drift"), "must be greater than -1"));
        }
        let n = self.noise_sigma;
        if [n.cap, n.acc, n.gyro].iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::config(key("noise_sigma"), "must be nonnegative"));
        }
        Ok(())
    }

    pub fn segment_samples(&self, fs: f64) -> usize {
        (self.repetitions as f64 * self.period * fs).round() as usize
    }

    fn rep_gain(&self, r: usize) -> f64 {
        (1.0 + self.amplitude_drift).powi(r as i32)
    }

    pub fn noise_free(&self) -> Self {
        ExerciseScript {
            noise_sigma: NoiseSigma::default(),
            ..self.clone()
        }
    }
}

/// A script placed on a session timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub script: ExerciseScript,
    pub label: Label,
    pub start: usize,
    pub len: usize,
}

fn dip_shape(phase: f64) -> f64 {
    let s = (std::f64::consts::PI * phase).sin();
    s * s
}

/// Samples of repetition `r` inside a placement as `(index, phase in [0, 1))`.
fn rep_samples(p: &Placement, r: usize, fs: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
    let per = p.script.period * fs;
    let active = (p.script.duty * per).round().max(2.0) as usize;
    let begin = (r as f64 * per).round() as usize;
    (0..active)
        .map(move |k| (begin + k, k as f64 / active as f64))
        .filter(move |&(i, _)| i < p.len)
        .map(move |(i, ph)| (p.start + i, ph))
}

/// Capacitance drop per microvolt of peak response for this script's
/// repetition shape (the response is linear to first order in the drop).
fn farads_per_microvolt(script: &ExerciseScript, m: &CircuitModel, fs: f64) -> Result<f64> {
    let probe = 1e-13;
    let per = (script.period * fs).round() as usize;
    let tail = (5.0 * m.tau() * fs).ceil() as usize;
    let p = Placement {
        script: ExerciseScript {
            repetitions: 1,
            ..script.clone()
        },
        label: Label(0),
        start: 0,
        len: per.max(2),
    };
    let mut cap = vec![m.c_body(); p.len + tail];
    for (i, ph) in rep_samples(&p, 0, fs) {
        cap[i] -= probe * dip_shape(ph);
    }
    let resp = simulate_potential_response(&cap, m, fs)?;
    let peak = resp.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::domain("repetition shape produces no positive deflection"));
    }
    Ok(probe / peak)
}

/// Renders placed scripts into frames. `rest_noise[i]` is the noise applied
/// to frame `i` outside any placement.
pub fn render(
    n: usize,
    placements: &[Placement],
    rest_noise: &[NoiseSigma],
    m: &CircuitModel,
    fs: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SampleFrame>> {
    m.validate()?;
    let mut cap = vec![m.c_body(); n];
    let mut imu = vec![[0.0f64; 6]; n];
    let mut noise = rest_noise.to_vec();
    noise.resize(n, NoiseSigma::default());
    for p in placements {
        let s = &p.script;
        s.validate()?;
        for i in p.start..(p.start + p.len).min(n) {
            noise[i] = s.noise_sigma;
        }
        let dc = if s.cap_amplitude > 0.0 {
            farads_per_microvolt(s, m, fs)? * s.cap_amplitude
        } else {
            0.0
        };
        for r in 0..s.repetitions {
            let g = s.rep_gain(r);
            for (i, ph) in rep_samples(p, r, fs) {
                if i >= n {
                    break;
                }
                cap[i] -= dc * g * dip_shape(ph);
                let wave = (2.0 * std::f64::consts::PI * ph).sin();
                let cwave = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * ph).cos();
                if s.coupled_channels.contains(&Coupling::Acc) {
                    for k in 0..3 {
                        imu[i][k] += s.imu_amplitude[k] * g * wave;
                    }
                }
                if s.coupled_channels.contains(&Coupling::Gyro) {
                    for k in 3..6 {
                        imu[i][k] += s.imu_amplitude[k] * g * cwave;
                    }
                }
            }
        }
    }
    let resp = simulate_potential_response(&cap, m, fs)?;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut draw = |sigma: f64| {
        let z: f64 = std_normal.sample(&mut *rng);
        if sigma > 0.0 {
            sigma * z
        } else {
            0.0
        }
    };
    Ok((0..n)
        .map(|i| {
            let ns = noise[i];
            let mut acc = [0.0; 3];
            let mut gyro = [0.0; 3];
            for k in 0..3 {
                acc[k] = imu[i][k] + draw(ns.acc);
                gyro[k] = imu[i][k + 3] + draw(ns.gyro);
            }
            SampleFrame {
                t: i as f64 / fs,
                acc,
                gyro,
                cap_uv: resp[i] + draw(ns.cap),
            }
        })
        .collect())
}

/// Lays scripts out back to back with `rest_gap` seconds before, between and
/// after them. Rest frames get the label set's null class, or DISCARD when it
/// has none, and carry the noise level of the preceding script.
pub fn generate_session(
    scripts: &[ExerciseScript],
    rest_gap: f64,
    m: &CircuitModel,
    meta: SessionMeta,
    seed: u64,
) -> Result<SessionFile> {
    if scripts.is_empty() {
        return Err(Error::config("scripts", "at least one script is required"));
    }
    let fs = meta.sample_rate_hz;
    if !(fs > 0.0) {
        return Err(Error::config("sample_rate_hz", "must be positive"));
    }
    if !(rest_gap >= 0.0) {
        return Err(Error::config("rest_gap", "must be nonnegative"));
    }
    let set = meta.label_set.label_set();
    let rest_label = set.null_class.unwrap_or(Label::DISCARD);
    let gap = (rest_gap * fs).round() as usize;

    let mut placements = Vec::with_capacity(scripts.len());
    let mut labels = vec![rest_label; gap];
    let mut rest_noise = vec![scripts[0].noise_sigma; gap];
    let mut reps = Vec::with_capacity(scripts.len());
    for s in scripts {
        s.validate()?;
        let label = set.require(&s.class)?;
        let start = labels.len();
        let len = s.segment_samples(fs);
        placements.push(Placement {
            script: s.clone(),
            label,
            start,
            len,
        });
        reps.push(RepetitionAnnotation {
            class: s.class.clone(),
            start_index: start,
            end_index: start + len,
            repetitions: s.repetitions,
        });
        labels.extend(std::iter::repeat_n(label, len));
        labels.extend(std::iter::repeat_n(rest_label, gap));
        rest_noise.extend(std::iter::repeat_n(s.noise_sigma, len + gap));
    }
    let mut rng = seeds::rng(seed, seeds::SIMULATE);
    let frames = render(labels.len(), &placements, &rest_noise, m, fs, &mut rng)?;
    let session = Session { meta, frames, labels };
    let bad = validate_session(&session);
    if !bad.is_empty() {
        return Err(Error::Validation(bad.iter().map(ToString::to_string).collect()));
    }
    Ok(SessionFile {
        session,
        repetitions: reps,
    })
}

/// Per-script noise-free cap signal power (mean square, µV²) inside each
/// script's segment.
pub fn clean_cap_power(scripts: &[ExerciseScript], rest_gap: f64, m: &CircuitModel, meta: SessionMeta) -> Result<Vec<f64>> {
    let clean: Vec<ExerciseScript> = scripts.iter().map(ExerciseScript::noise_free).collect();
    let sf = generate_session(&clean, rest_gap, m, meta, 0)?;
    Ok(sf
        .repetitions
        .iter()
        .map(|r| {
            let seg = &sf.session.frames[r.start_index..r.end_index];
            seg.iter().map(|f| f.cap_uv * f.cap_uv).sum::<f64>() / seg.len() as f64
        })
        .collect())
}

/// Noise standard deviation giving `snr_db` against a signal of power `power`.
pub fn sigma_for_snr(power: f64, snr_db: f64) -> f64 {
    (power / 10f64.powf(snr_db / 10.0)).sqrt()
}
