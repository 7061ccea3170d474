//! Seeded synthetic signature corpora.
//!
//! Every user owns a spatial shape (a few smooth harmonics split into
//! strokes), a writing rhythm (a speed profile along the trace) and a
//! pressure style. Genuine samples re-render the user's shape with the
//! user's own rhythm under small affine, timing, amplitude and sensor
//! jitter. A skilled forgery re-renders the target's shape, imitated less
//! precisely, with the forger's rhythm and pressure style at a slower pace.
//! Forgeries of user `n` are produced by the next users in id order.
//!
//! Each signature draws from its own RNG stream seeded from
//! `(seed, user, sample, kind)`, so output does not depend on generation
//! order.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{
    CorpusManifest, Sample, Signature, SignatureKind, UserEntry, AL_RANGE, AZ_RANGE, P_RANGE,
    X_RANGE, Y_RANGE,
};

const HARMONICS: usize = 3;
const SPEED_TERMS: usize = 3;
/// Number of preceding users that forge each user.
const FORGERS_PER_USER: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("need at least 2 users, got {0}")]
    TooFewUsers(usize),
    #[error("genuine and skilled counts must be positive")]
    EmptyCounts,
    #[error("invalid generator parameter: {0}")]
    InvalidParam(&'static str),
}

/// Generator settings. [`SynthParams::new`] gives the calibrated defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n_users: usize,
    pub n_genuine: usize,
    pub n_skilled: usize,
    pub seed: u64,
    pub sample_rate_hz: u32,
    /// Range of per-user base lengths in samples.
    pub min_len: usize,
    pub max_len: usize,
    /// Multiplier on all positions, about the tablet origin.
    pub extent: f64,
    /// Multiplier on all pressures.
    pub pressure_scale: f64,
    /// Sensor noise standard deviation on x and y, tablet units at extent 1.
    pub position_noise: f64,
    /// Sensor noise standard deviation on pressure at scale 1.
    pub pressure_noise: f64,
    /// Relative standard deviation of per-sample variation for genuine
    /// signatures (amplitudes, rhythm, length).
    pub genuine_jitter: f64,
    /// Relative imitation error of skilled forgeries.
    pub forgery_jitter: f64,
}

impl SynthParams {
    pub fn new(n_users: usize, n_genuine: usize, n_skilled: usize, seed: u64) -> Self {
        SynthParams {
            n_users,
            n_genuine,
            n_skilled,
            seed,
            sample_rate_hz: 100,
            min_len: 120,
            max_len: 200,
            extent: 1.0,
            pressure_scale: 1.0,
            position_noise: 60.0,
            pressure_noise: 30.0,
            genuine_jitter: 0.3,
            forgery_jitter: 0.15,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.n_users < 2 {
            return Err(SynthError::TooFewUsers(self.n_users));
        }
        if self.n_genuine == 0 || self.n_skilled == 0 {
            return Err(SynthError::EmptyCounts);
        }
        if self.min_len < 8 || self.max_len < self.min_len {
            return Err(SynthError::InvalidParam("length range"));
        }
        if !(self.extent > 0.0 && self.extent <= 1.0) {
            return Err(SynthError::InvalidParam("extent must lie in (0, 1]"));
        }
        if !(self.pressure_scale > 0.0 && self.pressure_scale <= 1.0) {
            return Err(SynthError::InvalidParam(
                "pressure_scale must lie in (0, 1]",
            ));
        }
        if self.sample_rate_hz == 0 {
            return Err(SynthError::InvalidParam("sample rate"));
        }
        let noise = [
            self.position_noise,
            self.pressure_noise,
            self.genuine_jitter,
            self.forgery_jitter,
        ];
        if noise.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SynthError::InvalidParam(
                "noise levels must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Corpus with the default generator settings.
pub fn generate_corpus(
    n_users: usize,
    n_genuine: usize,
    n_skilled: usize,
    seed: u64,
) -> Result<CorpusManifest, SynthError> {
    generate_corpus_with(&SynthParams::new(n_users, n_genuine, n_skilled, seed))
}

pub fn generate_corpus_with(params: &SynthParams) -> Result<CorpusManifest, SynthError> {
    params.validate()?;
    let styles: Vec<UserStyle> = (1..=params.n_users as u32)
        .map(|u| UserStyle::draw(params, u))
        .collect();
    let forgers = FORGERS_PER_USER.min(params.n_users - 1);
    let users = styles
        .iter()
        .enumerate()
        .map(|(idx, style)| {
            let user_id = idx as u32 + 1;
            let genuine = (1..=params.n_genuine as u32)
                .map(|k| render_genuine(params, style, user_id, k))
                .collect();
            let skilled = (1..=params.n_skilled as u32)
                .map(|k| {
                    let forger_idx = (idx + 1 + (k as usize - 1) % forgers) % params.n_users;
                    render_forgery(
                        params,
                        style,
                        &styles[forger_idx],
                        user_id,
                        forger_idx as u32 + 1,
                        k,
                    )
                })
                .collect();
            UserEntry {
                user_id,
                genuine,
                skilled,
            }
        })
        .collect();
    Ok(CorpusManifest {
        users,
        seed: Some(params.seed),
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for one `(user, sample, purpose)` triple.
fn stream(seed: u64, user: u32, sample: u32, purpose: u64) -> ChaCha8Rng {
    let mut h = splitmix64(seed);
    for part in [u64::from(user), u64::from(sample), purpose] {
        h = splitmix64(h ^ part);
    }
    ChaCha8Rng::seed_from_u64(h)
}

const PURPOSE_STYLE: u64 = 1;
const PURPOSE_GENUINE: u64 = 2;
const PURPOSE_SKILLED: u64 = 3;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

#[derive(Debug, Clone, Copy)]
struct Harmonic {
    amplitude: f64,
    frequency: f64,
    phase: f64,
}

#[derive(Debug, Clone)]
struct Shape {
    center: (f64, f64),
    x: [Harmonic; HARMONICS],
    y: [Harmonic; HARMONICS],
    drift: (f64, f64),
    /// Pen-up gaps as `(start, end)` in trace parameter, ascending.
    gaps: Vec<(f64, f64)>,
}

impl Shape {
    fn at(&self, s: f64) -> (f64, f64) {
        let eval = |hs: &[Harmonic; HARMONICS]| {
            hs.iter()
                .map(|h| h.amplitude * (TAU * h.frequency * s + h.phase).sin())
                .sum::<f64>()
        };
        (
            self.center.0 + eval(&self.x) + self.drift.0 * (s - 0.5),
            self.center.1 + eval(&self.y) + self.drift.1 * (s - 0.5),
        )
    }

    /// Stroke envelope in `[0, 1]`: zero inside gaps, rising and falling
    /// near stroke ends.
    fn envelope(&self, s: f64) -> f64 {
        let mut start = 0.0;
        for &(g0, g1) in self.gaps.iter().chain(std::iter::once(&(1.0, 1.0))) {
            if s < g0 {
                let u = ((s - start) / (g0 - start)).clamp(0.0, 1.0);
                return (PI * u).sin().powf(0.35);
            }
            if s < g1 {
                return 0.0;
            }
            start = g1;
        }
        0.0
    }

    /// Imitation of this shape with relative amplitude and phase errors.
    fn perturbed(&self, rng: &mut ChaCha8Rng, rel: f64) -> Shape {
        let jitter = |h: &Harmonic, rng: &mut ChaCha8Rng| Harmonic {
            amplitude: h.amplitude * (1.0 + rel * normal(rng)),
            frequency: h.frequency * (1.0 + 0.1 * rel * normal(rng)),
            phase: h.phase + rel * normal(rng),
        };
        let mut out = self.clone();
        for h in out.x.iter_mut().chain(out.y.iter_mut()) {
            *h = jitter(h, rng);
        }
        out
    }
}

/// Rhythm: relative pen speed along the trace.
#[derive(Debug, Clone)]
struct Rhythm {
    terms: [Harmonic; SPEED_TERMS],
}

impl Rhythm {
    fn speed(&self, t: f64) -> f64 {
        1.0 + self
            .terms
            .iter()
            .map(|h| h.amplitude * (TAU * h.frequency * t + h.phase).sin())
            .sum::<f64>()
    }

    fn perturbed(&self, rng: &mut ChaCha8Rng, rel: f64) -> Rhythm {
        let mut out = self.clone();
        for h in &mut out.terms {
            h.amplitude *= 1.0 + rel * normal(rng);
            h.phase += rel * normal(rng);
        }
        out.normalize();
        out
    }

    /// Keeps speed strictly positive.
    fn normalize(&mut self) {
        let total: f64 = self.terms.iter().map(|h| h.amplitude.abs()).sum();
        if total > 0.7 {
            for h in &mut self.terms {
                h.amplitude *= 0.7 / total;
            }
        }
    }

    /// Trace parameter reached at each of `len` uniform time steps.
    fn trace_positions(&self, len: usize) -> Vec<f64> {
        let dt = 1.0 / (len - 1) as f64;
        let mut cumulative = Vec::with_capacity(len);
        let mut acc = 0.0;
        let mut prev = self.speed(0.0);
        cumulative.push(0.0);
        for i in 1..len {
            let v = self.speed(i as f64 * dt);
            acc += 0.5 * (prev + v) * dt;
            prev = v;
            cumulative.push(acc);
        }
        cumulative.iter().map(|c| c / acc).collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct PressureStyle {
    peak: f64,
    depth: f64,
    frequency: f64,
    phase: f64,
}

impl PressureStyle {
    fn at(&self, s: f64, envelope: f64) -> f64 {
        self.peak * envelope * (1.0 + self.depth * (TAU * self.frequency * s + self.phase).sin())
    }
}

#[derive(Debug, Clone)]
struct UserStyle {
    shape: Shape,
    rhythm: Rhythm,
    pressure: PressureStyle,
    base_len: usize,
    azimuth: f64,
    altitude: f64,
}

impl UserStyle {
    fn draw(params: &SynthParams, user: u32) -> UserStyle {
        let mut rng = stream(params.seed, user, 0, PURPOSE_STYLE);
        let harmonics = |rng: &mut ChaCha8Rng, scale: f64| {
            std::array::from_fn(|_| Harmonic {
                amplitude: scale * rng.random_range(0.3..1.0),
                frequency: rng.random_range(0.5..3.5),
                phase: rng.random_range(0.0..TAU),
            })
        };
        let x = harmonics(&mut rng, 1300.0);
        let y = harmonics(&mut rng, 800.0);
        let strokes = rng.random_range(2..=4usize);
        let mut cuts: Vec<f64> = (1..strokes)
            .map(|i| i as f64 / strokes as f64 + rng.random_range(-0.08..0.08))
            .collect();
        cuts.sort_by(f64::total_cmp);
        let gaps = cuts.iter().map(|c| (c - 0.015, c + 0.015)).collect();
        let shape = Shape {
            center: (
                6350.0 + rng.random_range(-800.0..800.0),
                4850.0 + rng.random_range(-600.0..600.0),
            ),
            x,
            y,
            drift: (
                rng.random_range(-1500.0..1500.0),
                rng.random_range(-600.0..600.0),
            ),
            gaps,
        };
        let mut rhythm = Rhythm {
            terms: std::array::from_fn(|k| Harmonic {
                amplitude: rng.random_range(0.1..0.35),
                frequency: (k + 1) as f64 * rng.random_range(0.8..1.6),
                phase: rng.random_range(0.0..TAU),
            }),
        };
        rhythm.normalize();
        let pressure = PressureStyle {
            peak: rng.random_range(400.0..850.0),
            depth: rng.random_range(0.1..0.4),
            frequency: rng.random_range(1.0..5.0),
            phase: rng.random_range(0.0..TAU),
        };
        UserStyle {
            shape,
            rhythm,
            pressure,
            base_len: rng.random_range(params.min_len..=params.max_len),
            azimuth: rng.random_range(900.0..2700.0),
            altitude: rng.random_range(450.0..750.0),
        }
    }
}

struct Rendering<'a> {
    shape: &'a Shape,
    rhythm: &'a Rhythm,
    pressure: PressureStyle,
    len: usize,
    scale: f64,
    rotation: f64,
    shift: (f64, f64),
    azimuth: f64,
    altitude: f64,
}

impl Rendering<'_> {
    fn samples(&self, params: &SynthParams, rng: &mut ChaCha8Rng) -> Vec<Sample> {
        let (sin_r, cos_r) = self.rotation.sin_cos();
        let center = self.shape.center;
        let clamp = |v: f64, (lo, hi): (i32, i32)| {
            (v.round() as i64).clamp(i64::from(lo), i64::from(hi)) as i32
        };
        self.rhythm
            .trace_positions(self.len)
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                let (px, py) = self.shape.at(s);
                let (dx, dy) = (px - center.0, py - center.1);
                let x = center.0 + self.scale * (cos_r * dx - sin_r * dy) + self.shift.0;
                let y = center.1 + self.scale * (sin_r * dx + cos_r * dy) + self.shift.1;
                let x = params.extent * (x + params.position_noise * normal(rng));
                let y = params.extent * (y + params.position_noise * normal(rng));
                let envelope = self.shape.envelope(s);
                let p = params.pressure_scale
                    * (self.pressure.at(s, envelope)
                        + params.pressure_noise * envelope * normal(rng));
                let az = self.azimuth + 60.0 * (TAU * s).sin() + 5.0 * normal(rng);
                let al = self.altitude + 30.0 * (PI * s).cos() + 3.0 * normal(rng);
                Sample {
                    t: i as u32,
                    x: clamp(x, X_RANGE),
                    y: clamp(y, Y_RANGE),
                    p: clamp(p, P_RANGE),
                    az: clamp(az, AZ_RANGE),
                    al: clamp(al, AL_RANGE),
                }
            })
            .collect()
    }
}

fn jittered_len(base: usize, factor: f64) -> usize {
    (base as f64 * factor).round().max(8.0) as usize
}

fn render_genuine(params: &SynthParams, style: &UserStyle, user_id: u32, k: u32) -> Signature {
    let mut rng = stream(params.seed, user_id, k, PURPOSE_GENUINE);
    let j = params.genuine_jitter;
    let shape = style.shape.perturbed(&mut rng, 0.5 * j);
    let rhythm = style.rhythm.perturbed(&mut rng, j);
    let pressure = PressureStyle {
        peak: style.pressure.peak * (1.0 + j * normal(&mut rng)),
        phase: style.pressure.phase + j * normal(&mut rng),
        ..style.pressure
    };
    let rendering = Rendering {
        shape: &shape,
        rhythm: &rhythm,
        pressure,
        len: jittered_len(style.base_len, (0.5 * j * normal(&mut rng)).exp()),
        scale: 1.0 + 0.5 * j * normal(&mut rng),
        rotation: 0.5 * j * normal(&mut rng),
        shift: (150.0 * normal(&mut rng), 150.0 * normal(&mut rng)),
        azimuth: style.azimuth + 20.0 * normal(&mut rng),
        altitude: style.altitude + 10.0 * normal(&mut rng),
    };
    let samples = rendering.samples(params, &mut rng);
    Signature::new(
        user_id,
        k,
        SignatureKind::Genuine,
        None,
        params.sample_rate_hz,
        samples,
    )
    .expect("generator produces valid signatures")
}

fn render_forgery(
    params: &SynthParams,
    target: &UserStyle,
    forger: &UserStyle,
    user_id: u32,
    forger_id: u32,
    k: u32,
) -> Signature {
    let mut rng = stream(params.seed, user_id, k, PURPOSE_SKILLED);
    let j = params.forgery_jitter;
    let shape = target.shape.perturbed(&mut rng, j);
    let rhythm = forger.rhythm.perturbed(&mut rng, params.genuine_jitter);
    let pressure = PressureStyle {
        peak: forger.pressure.peak * (1.0 + params.genuine_jitter * normal(&mut rng)),
        ..forger.pressure
    };
    let slowdown = rng.random_range(1.15..1.5);
    let rendering = Rendering {
        shape: &shape,
        rhythm: &rhythm,
        pressure,
        len: jittered_len(target.base_len, slowdown),
        scale: 1.0 + 0.5 * j * normal(&mut rng),
        rotation: 0.5 * j * normal(&mut rng),
        shift: (300.0 * normal(&mut rng), 300.0 * normal(&mut rng)),
        azimuth: forger.azimuth + 20.0 * normal(&mut rng),
        altitude: forger.altitude + 10.0 * normal(&mut rng),
    };
    let samples = rendering.samples(params, &mut rng);
    Signature::new(
        user_id,
        k,
        SignatureKind::SkilledForgery,
        Some(forger_id),
        params.sample_rate_hz,
        samples,
    )
    .expect("generator produces valid signatures")
}
