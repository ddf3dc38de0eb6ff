//! Scripted datasets for the three label sets.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{generate_session, render, sigma_for_snr, clean_cap_power, CircuitModel, Coupling, ExerciseScript, NoiseSigma, Placement};
use crate::error::{Error, Result};
use crate::ingest::SessionFile;
use crate::seeds;
use crate::types::{validate_session, AccUnit, Label, LabelSetId, SampleFrame, SensorPosition, Session, SessionMeta};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassProfile {
    pub class: &'static str,
    pub period: f64,
    pub duty: f64,
    /// Relative to the dataset's base cap amplitude.
    pub cap_gain: f64,
    pub imu_amplitude: [f64; 6],
    pub coupled: &'static [Coupling],
}

const IMU: &[Coupling] = &[Coupling::Acc, Coupling::Gyro];
const NONE: &[Coupling] = &[];

const fn p(class: &'static str, period: f64, duty: f64, cap_gain: f64, imu_amplitude: [f64; 6], coupled: &'static [Coupling]) -> ClassProfile {
    ClassProfile {
        class,
        period,
        duty,
        cap_gain,
        imu_amplitude,
        coupled,
    }
}

/// Leg lifts move only the leg, so a wrist-worn IMU sees no motion.
pub fn leg7_profiles() -> Vec<ClassProfile> {
    vec![
        p("leg-front-lift", 2.4, 0.6, 1.0, [0.0; 6], NONE),
        p("leg-side-lift", 3.0, 0.5, 1.7, [0.0; 6], NONE),
        p("leg-back-lift", 2.0, 0.7, 0.55, [0.0; 6], NONE),
        p("standard-squat", 3.2, 0.7, 2.4, [1.5, 0.3, 3.0, 10.0, 40.0, 5.0], IMU),
        p("cross-squat", 3.6, 0.6, 1.3, [2.5, 0.5, 2.0, 30.0, 20.0, 15.0], IMU),
        p("jump-squat", 2.2, 0.6, 3.2, [1.0, 0.5, 6.0, 5.0, 60.0, 10.0], IMU),
        p("side-squat", 2.8, 0.65, 0.8, [3.5, 0.5, 1.0, 15.0, 15.0, 40.0], IMU),
    ]
}

pub fn gym12_profiles() -> Vec<ClassProfile> {
    vec![
        p("Adductor", 3.0, 0.6, 1.2, [0.3, 0.2, 0.3, 4.0, 3.0, 5.0], IMU),
        p("Armcurl", 2.5, 0.7, 0.6, [2.0, 0.5, 4.0, 80.0, 10.0, 10.0], IMU),
        p("Benchpress", 3.0, 0.7, 0.9, [0.5, 3.5, 0.5, 10.0, 10.0, 30.0], IMU),
        p("Legcurl", 2.8, 0.6, 1.6, [0.2, 0.2, 0.4, 3.0, 5.0, 3.0], IMU),
        p("Legpress", 3.2, 0.7, 2.0, [0.4, 0.3, 0.2, 5.0, 3.0, 4.0], IMU),
        p("Riding", 0.9, 0.8, 0.8, [0.8, 0.3, 0.5, 10.0, 6.0, 8.0], IMU),
        p("Ropeskipping", 0.5, 0.8, 1.5, [4.0, 1.5, 6.0, 120.0, 40.0, 30.0], IMU),
        p("Running", 0.7, 0.8, 1.8, [6.0, 2.0, 4.0, 150.0, 60.0, 40.0], IMU),
        p("Squat", 3.0, 0.7, 2.2, [1.0, 0.3, 2.5, 10.0, 20.0, 6.0], IMU),
        p("Stairsclimber", 1.2, 0.8, 1.4, [1.5, 0.8, 2.5, 30.0, 20.0, 15.0], IMU),
        p("Walking", 1.1, 0.8, 1.0, [2.5, 1.0, 2.0, 60.0, 25.0, 20.0], IMU),
    ]
}

/// A1 start/stop, A2 idle, A3 walk alone, A4 carry alone, A5 carry together,
/// A6 lift, A7 drop, A8 screwing, A9 undefined, A10 out of camera.
pub fn collab_profiles() -> Vec<ClassProfile> {
    vec![
        p("A1", 2.0, 0.5, 0.3, [0.5, 0.5, 0.5, 10.0, 10.0, 10.0], IMU),
        p("A2", 4.0, 0.5, 0.15, [0.1, 0.1, 0.1, 2.0, 2.0, 2.0], IMU),
        p("A3", 1.1, 0.8, 0.7, [2.5, 1.0, 2.0, 60.0, 25.0, 20.0], IMU),
        p("A4", 1.2, 0.8, 1.1, [1.5, 2.0, 1.0, 20.0, 15.0, 30.0], IMU),
        p("A5", 1.2, 0.8, 1.8, [1.5, 2.0, 1.0, 20.0, 15.0, 30.0], IMU),
        p("A6", 2.0, 0.8, 2.6, [0.5, 4.0, 0.5, 10.0, 60.0, 10.0], IMU),
        p("A7", 2.0, 0.8, 2.2, [0.5, 4.0, 0.5, 10.0, 70.0, 10.0], IMU),
        p("A8", 1.5, 0.7, 0.4, [0.3, 0.3, 0.3, 120.0, 10.0, 10.0], IMU),
        p("A9", 2.5, 0.6, 0.5, [1.0, 1.0, 1.0, 20.0, 20.0, 20.0], IMU),
        p("A10", 3.0, 0.6, 0.2, [0.2, 0.2, 0.2, 5.0, 5.0, 5.0], IMU),
    ]
}

fn default_fs() -> f64 {
    20.0
}
fn default_rest_gap() -> f64 {
    3.0
}
fn default_base_amplitude() -> f64 {
    250.0
}
fn default_acc_sigma() -> f64 {
    0.2
}
fn default_gyro_sigma() -> f64 {
    3.0
}

/// Synthetic LEG7 or GYM12 dataset: every session runs each class once in a
/// shuffled order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub label_set: LabelSetId,
    pub n_users: usize,
    pub sessions_per_user: usize,
    pub reps_min: usize,
    pub reps_max: usize,
    /// Cap-channel SNR per segment; `None` disables all noise.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default = "default_acc_sigma")]
    pub acc_sigma: f64,
    #[serde(default = "default_gyro_sigma")]
    pub gyro_sigma: f64,
    #[serde(default = "default_rest_gap")]
    pub rest_gap: f64,
    #[serde(default = "default_fs")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_base_amplitude")]
    pub base_amplitude: f64,
    #[serde(default)]
    pub model: CircuitModel,
}

impl DatasetSpec {
    pub fn leg7(n_users: usize, sessions_per_user: usize) -> Self {
        DatasetSpec {
            label_set: LabelSetId::Leg7,
            n_users,
            sessions_per_user,
            reps_min: 10,
            reps_max: 30,
            snr_db: Some(15.0),
            acc_sigma: default_acc_sigma(),
            gyro_sigma: default_gyro_sigma(),
            rest_gap: default_rest_gap(),
            sample_rate_hz: default_fs(),
            base_amplitude: default_base_amplitude(),
            model: CircuitModel::default(),
        }
    }

    pub fn gym12(n_users: usize, sessions_per_user: usize) -> Self {
        DatasetSpec {
            label_set: LabelSetId::Gym12,
            reps_min: 8,
            reps_max: 20,
            ..DatasetSpec::leg7(n_users, sessions_per_user)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.sessions_per_user == 0 {
            return Err(Error::config("simulate.n_users", "need at least one user and one session"));
        }
        if self.reps_min == 0 || self.reps_min > self.reps_max {
            return Err(Error::config("simulate.reps_min", "need 1 <= reps_min <= reps_max"));
        }
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::config("simulate.sample_rate_hz", "must be positive"));
        }
        if !(self.acc_sigma >= 0.0 && self.gyro_sigma >= 0.0) {
            return Err(Error::config("simulate.acc_sigma", "noise must be nonnegative"));
        }
        if !matches!(self.label_set, LabelSetId::Leg7 | LabelSetId::Gym12) {
            return Err(Error::config("simulate.label_set", "scripted datasets exist for LEG7 and GYM12"));
        }
        self.model.validate()
    }
}

/// Per-user style: tempo, per-class amplitude habits, overall coupling
/// strength (cap_scale) and fatigue drift.
#[derive(Debug, Clone, PartialEq)]
pub struct UserStyle {
    pub period_scale: f64,
    pub cap_scale: f64,
    pub imu_scale: f64,
    pub class_gain: Vec<f64>,
    pub drift: f64,
}

pub fn user_style(seed: u64, user: usize, n_classes: usize) -> UserStyle {
    let mut rng = seeds::indexed(seed, "simulate/user", user as u64);
    UserStyle {
        period_scale: rng.random_range(0.9..1.1),
        cap_scale: rng.random_range(0.6..1.6),
        imu_scale: rng.random_range(0.8..1.2),
        class_gain: (0..n_classes).map(|_| rng.random_range(0.88..1.12)).collect(),
        drift: rng.random_range(-0.01..0.01),
    }
}

fn profiles_for(id: LabelSetId) -> Vec<ClassProfile> {
    match id {
        LabelSetId::Gym12 => gym12_profiles(),
        LabelSetId::Collab => collab_profiles(),
        _ => leg7_profiles(),
    }
}

fn script_for(prof: &ClassProfile, k: usize, style: &UserStyle, base: f64, reps: usize) -> ExerciseScript {
    let mut imu = prof.imu_amplitude;
    imu.iter_mut().for_each(|a| *a *= style.imu_scale);
    ExerciseScript {
        class: prof.class.to_string(),
        repetitions: reps,
        period: prof.period * style.period_scale,
        duty: prof.duty,
        cap_amplitude: base * prof.cap_gain * style.cap_scale * style.class_gain[k],
        imu_amplitude: imu,
        amplitude_drift: style.drift,
        noise_sigma: NoiseSigma::default(),
        coupled_channels: prof.coupled.to_vec(),
    }
}

pub fn user_id(user: usize) -> String {
    format!("u{user:02}")
}

/// Scripts for one session of `user`, with noise levels filled in.
pub fn session_scripts(spec: &DatasetSpec, seed: u64, user: usize, session: usize) -> Result<Vec<ExerciseScript>> {
    let profiles = profiles_for(spec.label_set);
    let style = user_style(seed, user, profiles.len());
    let mut rng = seeds::indexed(seed, "simulate/session", (user * 10_000 + session) as u64);
    let mut order: Vec<usize> = (0..profiles.len()).collect();
    order.shuffle(&mut rng);
    let mut scripts: Vec<ExerciseScript> = order
        .iter()
        .map(|&k| {
            let reps = rng.random_range(spec.reps_min..=spec.reps_max);
            script_for(&profiles[k], k, &style, spec.base_amplitude, reps)
        })
        .collect();
    if let Some(snr) = spec.snr_db {
        let power = clean_cap_power(&scripts, spec.rest_gap, &spec.model, meta(spec, user, session))?;
        for (s, p) in scripts.iter_mut().zip(power) {
            s.noise_sigma = NoiseSigma {
                cap: sigma_for_snr(p, snr),
                acc: spec.acc_sigma,
                gyro: spec.gyro_sigma,
            };
        }
    }
    Ok(scripts)
}

/// Leg exercises were recorded with the sensor on the calf, everything else
/// on the wrist.
pub fn position_for(set: LabelSetId) -> SensorPosition {
    match set {
        LabelSetId::Leg7 => SensorPosition::Calf,
        _ => SensorPosition::Wrist,
    }
}

fn meta(spec: &DatasetSpec, user: usize, session: usize) -> SessionMeta {
    SessionMeta {
        id: format!("{}-s{session:02}", user_id(user)),
        user_id: user_id(user),
        session_index: session as u32,
        sensor_position: position_for(spec.label_set),
        sample_rate_hz: spec.sample_rate_hz,
        label_set: spec.label_set,
        acc_unit: AccUnit::MetersPerSecondSquared,
        group_id: None,
    }
}

pub fn simulate_dataset(spec: &DatasetSpec, seed: u64) -> Result<Vec<SessionFile>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.n_users * spec.sessions_per_user);
    for user in 0..spec.n_users {
        for session in 0..spec.sessions_per_user {
            let scripts = session_scripts(spec, seed, user, session)?;
            let session_seed = seeds::substream(seed, &format!("simulate/{user}/{session}"));
            out.push(generate_session(
                &scripts,
                spec.rest_gap,
                &spec.model,
                meta(spec, user, session),
                session_seed,
            )?);
        }
    }
    Ok(out)
}

fn default_cycles() -> usize {
    4
}
fn default_cap_sigma() -> f64 {
    25.0
}

/// Group recordings for the collaboration task: every group member records
/// one session on a shared clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollabSpec {
    /// Group sizes, one entry per group.
    pub groups: Vec<usize>,
    #[serde(default = "default_cycles")]
    pub cycles: usize,
    #[serde(default = "default_cap_sigma")]
    pub cap_sigma: f64,
    #[serde(default = "default_acc_sigma")]
    pub acc_sigma: f64,
    #[serde(default = "default_gyro_sigma")]
    pub gyro_sigma: f64,
    #[serde(default = "default_fs")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_base_amplitude")]
    pub base_amplitude: f64,
    #[serde(default)]
    pub model: CircuitModel,
}

impl CollabSpec {
    pub fn new(groups: Vec<usize>) -> Self {
        CollabSpec {
            groups,
            cycles: default_cycles(),
            cap_sigma: default_cap_sigma(),
            acc_sigma: default_acc_sigma(),
            gyro_sigma: default_gyro_sigma(),
            sample_rate_hz: default_fs(),
            base_amplitude: default_base_amplitude(),
            model: CircuitModel::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() || self.groups.iter().any(|&g| g < 2) {
            return Err(Error::config("simulate.groups", "every group needs at least two members"));
        }
        if self.cycles == 0 {
            return Err(Error::config("simulate.cycles", "must be at least 1"));
        }
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::config("simulate.sample_rate_hz", "must be positive"));
        }
        if [self.cap_sigma, self.acc_sigma, self.gyro_sigma].iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::config("simulate.cap_sigma", "noise must be nonnegative"));
        }
        self.model.validate()
    }
}

/// `(class index, start, end)` in samples on the shared clock.
type Timeline = Vec<(usize, usize, usize)>;

fn collab_timelines(n_users: usize, cycles: usize, fs: f64, rng: &mut ChaCha8Rng) -> Vec<Timeline> {
    let s = |sec: f64| (sec * fs).round() as usize;
    let mut tl: Vec<Timeline> = vec![Vec::new(); n_users];
    let mut clock = vec![0usize; n_users];
    let push = |tl: &mut Vec<Timeline>, clock: &mut Vec<usize>, u: usize, class: usize, end: usize| {
        if end > clock[u] {
            tl[u].push((class, clock[u], end));
            clock[u] = end;
        }
    };
    let start_len = s(4.0);
    for u in 0..n_users {
        push(&mut tl, &mut clock, u, 0, start_len);
    }
    for _ in 0..cycles {
        // individual work until a common meeting point
        let meet = clock.iter().copied().max().unwrap_or(0) + s(rng.random_range(8.0..16.0));
        for u in 0..n_users {
            while clock[u] < meet {
                let class = [1, 2, 3, 7, 8][rng.random_range(0..5)];
                let class = if class == 8 && rng.random_bool(0.7) { 2 } else { class };
                let end = (clock[u] + s(rng.random_range(3.0..7.0))).min(meet);
                push(&mut tl, &mut clock, u, class, end);
            }
        }
        // lift: members join within a second of each other, all finish together
        let lift_end = meet + s(rng.random_range(2.5..3.5));
        for u in 0..n_users {
            let join = meet + s(rng.random_range(0.0..1.0));
            push(&mut tl, &mut clock, u, 1, join);
            push(&mut tl, &mut clock, u, 5, lift_end);
        }
        let carry_end = lift_end + s(rng.random_range(8.0..14.0));
        for u in 0..n_users {
            push(&mut tl, &mut clock, u, 4, carry_end);
        }
        for u in 0..n_users {
            let drop_end = carry_end + s(rng.random_range(2.0..3.5));
            push(&mut tl, &mut clock, u, 6, drop_end);
        }
    }
    let end = clock.iter().copied().max().unwrap_or(0) + s(4.0);
    for u in 0..n_users {
        push(&mut tl, &mut clock, u, 9, end);
    }
    tl
}

/// One session per group member. Users are named `g{group}-u{member}`; each
/// member's clock carries a small constant offset below half a sample.
pub fn simulate_collab(spec: &CollabSpec, seed: u64) -> Result<Vec<SessionFile>> {
    spec.validate()?;
    let fs = spec.sample_rate_hz;
    let profiles = collab_profiles();
    let noise = NoiseSigma {
        cap: spec.cap_sigma,
        acc: spec.acc_sigma,
        gyro: spec.gyro_sigma,
    };
    let mut out = Vec::new();
    let mut user_index = 0;
    for (g, &size) in spec.groups.iter().enumerate() {
        let mut rng = seeds::indexed(seed, "simulate/group", g as u64);
        let timelines = collab_timelines(size, spec.cycles, fs, &mut rng);
        for (m, tl) in timelines.iter().enumerate() {
            let style = user_style(seed, 1000 + user_index, profiles.len());
            user_index += 1;
            let n = tl.last().map_or(0, |x| x.2);
            let placements: Vec<Placement> = tl
                .iter()
                .map(|&(k, start, end)| {
                    let len = end - start;
                    let prof = &profiles[k];
                    let reps = ((len as f64 / fs) / prof.period).floor().max(1.0) as usize;
                    let mut script = script_for(prof, k, &style, spec.base_amplitude, reps);
                    script.period = len as f64 / fs / reps as f64;
                    script.amplitude_drift = 0.0;
                    script.noise_sigma = noise;
                    Placement {
                        script,
                        label: Label(k as u16),
                        start,
                        len,
                    }
                })
                .collect();
            let mut labels = vec![Label::DISCARD; n];
            for p in &placements {
                labels[p.start..p.start + p.len].fill(p.label);
            }
            let mut nrng = seeds::indexed(seed, seeds::SIMULATE, user_index as u64);
            let mut frames: Vec<SampleFrame> = render(n, &placements, &[], &spec.model, fs, &mut nrng)?;
            let offset = rng.random_range(0.0..0.4) / fs;
            frames.iter_mut().for_each(|f| f.t += offset);
            let meta = SessionMeta {
                id: format!("g{g}-u{m}-s00"),
                user_id: format!("g{g}-u{m}"),
                session_index: 0,
                sensor_position: SensorPosition::Wrist,
                sample_rate_hz: fs,
                label_set: LabelSetId::Collab,
                acc_unit: AccUnit::MetersPerSecondSquared,
                group_id: Some(format!("g{g}")),
            };
            let session = Session { meta, frames, labels };
            let bad = validate_session(&session);
            if !bad.is_empty() {
                return Err(Error::Validation(bad.iter().map(ToString::to_string).collect()));
            }
            out.push(SessionFile {
                session,
                repetitions: Vec::new(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::validate_session;

    #[test]
    fn leg_dataset_is_valid_and_deterministic() {
        let spec = DatasetSpec::leg7(2, 1);
        let a = simulate_dataset(&spec, 3).unwrap();
        let b = simulate_dataset(&spec, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        for sf in &a {
            assert!(validate_session(&sf.session).is_empty());
            assert_eq!(sf.repetitions.len(), 7);
            assert!(sf.repetitions.iter().all(|r| (10..=30).contains(&r.repetitions)));
        }
    }

    #[test]
    fn lift_segments_have_noise_only_imu() {
        let mut spec = DatasetSpec::leg7(1, 1);
        spec.snr_db = None;
        let sf = &simulate_dataset(&spec, 1).unwrap()[0];
        for r in &sf.repetitions {
            let seg = &sf.session.frames[r.start_index..r.end_index];
            let still = seg.iter().all(|f| f.acc == [0.0; 3] && f.gyro == [0.0; 3]);
            assert_eq!(still, r.class.starts_with("leg-"), "{}", r.class);
        }
    }

    #[test]
    fn collab_groups_share_a_clock() {
        let sessions = simulate_collab(&CollabSpec::new(vec![2, 3]), 4).unwrap();
        assert_eq!(sessions.len(), 5);
        let g0: Vec<_> = sessions.iter().filter(|s| s.session.meta.group_id.as_deref() == Some("g0")).collect();
        assert_eq!(g0.len(), 2);
        for sf in &sessions {
            assert!(validate_session(&sf.session).is_empty());
            // every member carries together at some point
            assert!(sf.session.labels.contains(&Label(4)));
        }
        let dt = (g0[0].session.frames[0].t - g0[1].session.frames[0].t).abs();
        assert!(dt < 0.5 / 20.0);
    }
}
