// Copyright 2026 The qpair Authors
// SPDX-License-Identifier: Apache-2.0

//! Amplitude damping on Q-Pairs, erasure projection and fidelity statistics.
//!
//! A Q-Pair under the blockade constraint lives in a three-level space with
//! basis `[|g_A g_B>, |g_A r_B>, |r_A g_B>]`; `|r_A r_B>` is excluded.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use nalgebra::{Matrix2, Matrix3};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pulse::Species;

/// Rabi frequency of the default preset, rad/s.
pub const DEFAULT_OMEGA: f64 = TAU * 10e6;
/// Rydberg lifetime of the default preset, seconds.
pub const DEFAULT_LIFETIME: f64 = 60e-6;

/// Decay, timing and fidelity factors.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseParams {
    /// Rydberg decay rate, 1/s.
    pub gamma: f64,
    /// Single-qubit gate time, seconds.
    pub t_g: f64,
    /// Decay probability per gate step.
    pub p: f64,
    /// Duration of one displacement step, seconds.
    pub move_time: f64,
    pub f_x: f64,
    pub f_d_gamma: f64,
    pub f_d_mov: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        let gamma = 1.0 / DEFAULT_LIFETIME;
        let t_g = PI / DEFAULT_OMEGA;
        NoiseParams {
            gamma,
            t_g,
            p: gamma * t_g / 2.0,
            move_time: 500e-6,
            f_x: 0.9997,
            f_d_gamma: 0.99997,
            f_d_mov: 0.995,
        }
    }
}

impl NoiseParams {
    /// Parses `key=value` lines. Recognised keys: `gamma`, `lifetime`,
    /// `omega`, `t_g`, `p`, `move_time`, `f_x`, `f_d_gamma`, `f_d_mov`.
    ///
    /// Unset keys keep their defaults. Unless `p` is given it is derived as
    /// `gamma * t_g / 2`; `omega` sets `t_g = pi / omega`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut params = NoiseParams::default();
        let mut explicit_p = None;
        let mut omega = None;
        let mut t_g = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: n + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| err(format!("bad number {:?}", value.trim())))?;
            if !value.is_finite() {
                return Err(err(format!("non-finite value for {}", key.trim())));
            }
            match key.trim() {
                "gamma" => params.gamma = value,
                "lifetime" => params.gamma = 1.0 / value,
                "omega" => omega = Some(value),
                "t_g" => t_g = Some(value),
                "p" => explicit_p = Some(value),
                "move_time" => params.move_time = value,
                "f_x" => params.f_x = value,
                "f_d_gamma" => params.f_d_gamma = value,
                "f_d_mov" => params.f_d_mov = value,
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        if let Some(w) = omega {
            params.t_g = PI / w;
        }
        if let Some(t) = t_g {
            params.t_g = t;
        }
        params.p = explicit_p.unwrap_or(params.gamma * params.t_g / 2.0);
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::Probability(self.p));
        }
        for (name, v) in [
            ("gamma", self.gamma),
            ("t_g", self.t_g),
            ("move_time", self.move_time),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} must be >= 0"
                )));
            }
        }
        for (name, v) in [
            ("f_x", self.f_x),
            ("f_d_gamma", self.f_d_gamma),
            ("f_d_mov", self.f_d_mov),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Fidelity of one temporal translation: eight bit flips, two displacements.
    pub fn translation_fidelity(&self) -> f64 {
        self.f_x.powi(8) * (self.f_d_gamma * self.f_d_mov).powi(2)
    }
}

/// A set of Kraus operators on a qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    pub operators: Vec<Matrix2<C64>>,
}

impl KrausChannel {
    /// `max |sum K^dagger K - I|`.
    pub fn completeness_error(&self) -> f64 {
        let sum: Matrix2<C64> = self.operators.iter().map(|k| k.adjoint() * k).sum();
        (sum - Matrix2::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, rho: &Matrix2<C64>) -> Matrix2<C64> {
        self.operators.iter().map(|k| k * rho * k.adjoint()).sum()
    }

    /// Operators of the two-qubit product channel `self (A) x other (B)`,
    /// restricted to the three-level Q-Pair basis.
    pub fn tensor_qpair(&self, other: &KrausChannel) -> Vec<Matrix3<C64>> {
        let mut out = Vec::new();
        for ka in &self.operators {
            for kb in &other.operators {
                // full 4x4 in |a b> order, index = 2a + b; keep gg, g r_B, r_A g
                let idx = [(0usize, 0usize), (0, 1), (1, 0)];
                let m = Matrix3::from_fn(|i, j| {
                    let (ai, bi) = idx[i];
                    let (aj, bj) = idx[j];
                    ka[(ai, aj)] * kb[(bi, bj)]
                });
                if m.iter().any(|z| z.norm() > 0.0) {
                    out.push(m);
                }
            }
        }
        out
    }
}

/// `K0 = diag(1, sqrt(1-p))`, `K1 = sqrt(p) |g><r|`.
pub fn amplitude_damping(p: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::Probability(p));
    }
    let z = C64::new(0.0, 0.0);
    let k0 = Matrix2::new(C64::new(1.0, 0.0), z, z, C64::new((1.0 - p).sqrt(), 0.0));
    let k1 = Matrix2::new(z, C64::new(p.sqrt(), 0.0), z, z);
    Ok(KrausChannel {
        operators: vec![k0, k1],
    })
}

/// Q-Pair density over `[|g_A g_B>, |g_A r_B>, |r_A g_B>]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QPairDensity(pub Matrix3<C64>);

impl QPairDensity {
    /// Data qubit `alpha|g> + beta|r>` on A, aux in `g`.
    pub fn data_on_a(alpha: C64, beta: C64) -> Self {
        let v = nalgebra::Vector3::new(alpha, C64::new(0.0, 0.0), beta);
        QPairDensity(v * v.adjoint())
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigen().eigenvalues.min()
    }

    /// Blockade-conditioned bit flip of one species: swaps `|g g>` with the
    /// state where that species is excited; the other excited level is frozen.
    pub fn flip(&self, species: Species) -> Self {
        let perm: [usize; 3] = match species {
            Species::B => [1, 0, 2],
            Species::A => [2, 1, 0],
        };
        QPairDensity(Matrix3::from_fn(|i, j| self.0[(perm[i], perm[j])]))
    }

    /// 2x2 density of the qubit that is not the excited level `erased`.
    /// Basis `(g, r)` of the surviving species.
    pub fn reduced(&self, survivor: Species) -> Matrix2<C64> {
        let k = match survivor {
            Species::B => 1,
            Species::A => 2,
        };
        Matrix2::new(
            self.0[(0, 0)],
            self.0[(0, k)],
            self.0[(k, 0)],
            self.0[(k, k)],
        )
    }
}

/// Applies independent amplitude damping with probability `p` to both atoms.
pub fn apply_qpair_channel(rho: &QPairDensity, p: f64) -> Result<QPairDensity> {
    let ch = amplitude_damping(p)?;
    let ops = ch.tensor_qpair(&ch);
    Ok(QPairDensity(
        ops.iter().map(|k| k * rho.0 * k.adjoint()).sum(),
    ))
}

/// Projects out the `r` level of `species` and renormalises.
///
/// Returns the renormalised state and the discarded probability.
pub fn erase_rydberg(rho: &QPairDensity, species: Species) -> Result<(QPairDensity, f64)> {
    let k = match species {
        Species::B => 1,
        Species::A => 2,
    };
    let discarded = rho.0[(k, k)].re;
    let mut m = rho.0;
    for j in 0..3 {
        m[(k, j)] = C64::new(0.0, 0.0);
        m[(j, k)] = C64::new(0.0, 0.0);
    }
    let kept = m.trace().re;
    if kept <= 1e-300 {
        return Err(Error::TotalErasure);
    }
    Ok((QPairDensity(m / C64::new(kept, 0.0)), discarded))
}

fn check_amplitudes(alpha: C64, beta: C64) -> Result<()> {
    let n = alpha.norm_sqr() + beta.norm_sqr();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "|alpha|^2 + |beta|^2 = {n}, expected 1"
        )));
    }
    Ok(())
}

/// Closed-form data density after one noisy translation with erasure.
pub fn noisy_translation(alpha: C64, beta: C64, p: f64) -> Result<Matrix2<C64>> {
    check_amplitudes(alpha, beta)?;
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Probability(p));
    }
    let q = 1.0 - p;
    let n2 = (1.0 - p + p * p).powi(2);
    let (a2, b2) = (alpha.norm_sqr(), beta.norm_sqr());
    let r00 = (p * (1.0 - p + p * p) + a2 * q.powi(4)) / n2;
    let r01 = alpha * beta.conj() * (q.powi(3) / n2);
    let r11 = q * q * (p + q * q * b2) / n2;
    Ok(Matrix2::new(
        C64::new(r00, 0.0),
        r01,
        r01.conj(),
        C64::new(r11, 0.0),
    ))
}

/// Gate-by-gate version of [`noisy_translation`].
///
/// Each half flips the receiving atom, damps, flips the sending atom, damps,
/// and erases the sender's Rydberg level; the sender is then replaced.
pub fn noisy_translation_composed(
    alpha: C64,
    beta: C64,
    p: f64,
) -> Result<(Matrix2<C64>, [f64; 2])> {
    check_amplitudes(alpha, beta)?;
    let half = |rho: QPairDensity, to: Species, from: Species| -> Result<(QPairDensity, f64)> {
        let rho = apply_qpair_channel(&rho.flip(to), p)?;
        let rho = apply_qpair_channel(&rho.flip(from), p)?;
        erase_rydberg(&rho, from)
    };
    let start = QPairDensity::data_on_a(alpha, beta);
    let (mid, d1) = half(start, Species::B, Species::A)?;
    // mid lives on {gg, g r_B}; the fresh A atom starts in g
    let (end, d2) = half(mid, Species::A, Species::B)?;
    Ok((end.reduced(Species::A), [d1, d2]))
}

/// Single atom decaying for four gate times: damping with probability `4p`.
pub fn single_atom_decay_reference(alpha: C64, beta: C64, p: f64) -> Result<Matrix2<C64>> {
    check_amplitudes(alpha, beta)?;
    if !(0.0..0.25).contains(&p) {
        return Err(Error::DecayBudget(p));
    }
    let s = (1.0 - 4.0 * p).sqrt();
    let (a2, b2) = (alpha.norm_sqr(), beta.norm_sqr());
    Ok(Matrix2::new(
        C64::new(a2 + 4.0 * p * b2, 0.0),
        alpha * beta.conj() * s,
        alpha.conj() * beta * s,
        C64::new((1.0 - 4.0 * p) * b2, 0.0),
    ))
}

/// `<psi| rho |psi>` for `psi = (alpha, beta)`.
pub fn state_fidelity(alpha: C64, beta: C64, rho: &Matrix2<C64>) -> f64 {
    let psi = nalgebra::Vector2::new(alpha, beta);
    (psi.adjoint() * rho * psi)[(0, 0)].re
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Protocol {
    SingleAtom,
    QPair,
}

impl std::str::FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" | "single_atom" | "single-atom" => Ok(Protocol::SingleAtom),
            "qpair" | "q-pair" => Ok(Protocol::QPair),
            other => Err(Error::InvalidParameter(format!(
                "unknown protocol {other:?}"
            ))),
        }
    }
}

/// Haar-random single-qubit state `(cos(chi/2), e^{i phi} sin(chi/2))`.
pub fn haar_state<R: Rng>(rng: &mut R) -> (C64, C64) {
    let cos_chi: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..TAU);
    let half = cos_chi.clamp(-1.0, 1.0).acos() / 2.0;
    (C64::new(half.cos(), 0.0), C64::from_polar(half.sin(), phi))
}

/// Fidelity of one translation (or four-step single-atom decay) for a state.
pub fn protocol_fidelity(protocol: Protocol, alpha: C64, beta: C64, p: f64) -> Result<f64> {
    let rho = match protocol {
        Protocol::SingleAtom => single_atom_decay_reference(alpha, beta, p)?,
        Protocol::QPair => noisy_translation(alpha, beta, p)?,
    };
    Ok(state_fidelity(alpha, beta, &rho))
}

/// Samples per independently seeded worker stream.
pub const SAMPLE_CHUNK: usize = 16_384;

/// Mean and standard error of `f` over Haar-random states.
///
/// Chunk `k` draws from a ChaCha8 stream `k` under `seed`, so the result
/// does not depend on the number of worker threads.
pub fn haar_mean<F>(samples: usize, seed: u64, f: F) -> Result<(f64, f64)>
where
    F: Fn(C64, C64) -> Result<f64> + Sync,
{
    if samples == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    let partial: Vec<Result<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let n = SAMPLE_CHUNK.min(samples - k * SAMPLE_CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let (a, b) = haar_state(&mut rng);
                let v = f(a, b)?;
                s += v;
                s2 += v * v;
            }
            Ok((s, s2))
        })
        .collect();
    let (mut s, mut s2) = (0.0, 0.0);
    for r in partial {
        let (a, b) = r?;
        s += a;
        s2 += b;
    }
    let n = samples as f64;
    let mean = s / n;
    let var = if samples > 1 {
        ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok((mean, (var / n).sqrt()))
}

pub fn haar_average_fidelity(
    protocol: Protocol,
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Probability(p));
    }
    haar_mean(samples, seed, |a, b| protocol_fidelity(protocol, a, b, p))
}

/// Exact Haar average of `f` for integrands polynomial in `cos(chi)` up to
/// degree 9 and trigonometric in `phi` up to degree 11.
///
/// Five-point Gauss-Legendre in `cos(chi)`, twelve equispaced phases.
pub fn haar_quadrature<F: Fn(C64, C64) -> f64>(f: F) -> f64 {
    const NODES: [(f64, f64); 5] = [
        (0.0, 0.568_888_888_888_888_9),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
        (0.906_179_845_938_664, 0.236_926_885_056_189_08),
    ];
    const PHASES: usize = 12;
    let mut total = 0.0;
    for (u, w) in NODES {
        let half = u.acos() / 2.0;
        for k in 0..PHASES {
            let phi = TAU * k as f64 / PHASES as f64;
            total += w * f(C64::new(half.cos(), 0.0), C64::from_polar(half.sin(), phi));
        }
    }
    total / (2.0 * PHASES as f64)
}

/// Haar-mean fidelity change between damping before and after an exact X.
pub fn interleaving_gap(p: f64) -> Result<f64> {
    let ch = amplitude_damping(p)?;
    let x = Matrix2::new(
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
    );
    let mean = haar_quadrature(|a, b| {
        let psi = nalgebra::Vector2::new(a, b);
        let rho = psi * psi.adjoint();
        let target = x * psi;
        let after = x * ch.apply(&rho) * x;
        let before = ch.apply(&(x * rho * x));
        let f = |m: &Matrix2<C64>| (target.adjoint() * m * target)[(0, 0)].re;
        f(&after) - f(&before)
    });
    Ok(mean.abs())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParameter(
            "slope fit needs two or more paired points".into(),
        ));
    }
    if xs.iter().chain(ys).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParameter(
            "log-log fit needs positive values".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "slope fit needs distinct x values".into(),
        ));
    }
    Ok(sxy / sxx)
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn max_err(a: &Matrix2<C64>, b: &Matrix2<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn default_preset_values() {
        let params = NoiseParams::default();
        assert!((params.t_g - 0.05e-6).abs() < 1e-15);
        assert!((params.p - 0.0004).abs() < 5e-5);
        assert!((params.translation_fidelity() - 0.99).abs() < 0.005);
        let better = NoiseParams {
            f_d_mov: 0.999,
            ..params
        };
        assert!((better.translation_fidelity() - 0.995).abs() < 0.005);
    }

    #[test]
    fn preset_parsing() {
        let p = NoiseParams::parse(
            "# preset\nomega = 62831853.07179586\nlifetime=60e-6\nf_d_mov=0.999\n",
        )
        .unwrap();
        assert!((p.t_g - 5e-8).abs() < 1e-15);
        assert_eq!(p.f_d_mov, 0.999);
        let p = NoiseParams::parse("p=0.01").unwrap();
        assert_eq!(p.p, 0.01);
        assert!(matches!(
            NoiseParams::parse("p=1.5"),
            Err(Error::Probability(_))
        ));
        assert!(matches!(
            NoiseParams::parse("\nbogus=1"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            NoiseParams::parse("p"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn damping_limits() {
        let id = amplitude_damping(0.0).unwrap();
        let rho = Matrix2::new(c(0.3, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.7, 0.0));
        assert!(max_err(&id.apply(&rho), &rho) < 1e-15);
        let full = amplitude_damping(1.0).unwrap();
        let out = full.apply(&rho);
        assert!((out[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15 && out[(1, 1)].norm() < 1e-15);
        let k = amplitude_damping(0.0004).unwrap();
        assert!((k.operators[0][(1, 1)].re - 0.9996f64.sqrt()).abs() < 1e-15);
        assert!(k.completeness_error() < 1e-12);
        assert!(amplitude_damping(-0.1).is_err());
    }

    #[test]
    fn first_damping_matches_printed_matrix() {
        let (alpha, beta, p) = (c(0.6, 0.0), c(0.0, 0.8), 0.03);
        let rho = QPairDensity::data_on_a(alpha, beta).flip(Species::B);
        let out = apply_qpair_channel(&rho, p).unwrap();
        let ab = alpha * beta.conj();
        let expect = Matrix3::new(
            c(p, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(alpha.norm_sqr() * (1.0 - p), 0.0),
            ab * (1.0 - p),
            c(0.0, 0.0),
            ab.conj() * (1.0 - p),
            c(beta.norm_sqr() * (1.0 - p), 0.0),
        );
        assert!((out.0 - expect).iter().all(|z| z.norm() < 1e-15));
        // second damping after the A flip: A, B, C, D of the printed form
        let out = apply_qpair_channel(&out.flip(Species::A), p).unwrap();
        let q = 1.0 - p;
        assert!((out.0[(0, 0)].re - (p + q * q * beta.norm_sqr())).abs() < 1e-15);
        assert!((out.0[(0, 1)] - alpha.conj() * beta * q.powf(1.5)).norm() < 1e-15);
        assert!((out.0[(1, 1)].re - alpha.norm_sqr() * q * q).abs() < 1e-15);
        assert!((out.0[(2, 2)].re - p * q).abs() < 1e-15);
        let (_, d) = erase_rydberg(&out, Species::A).unwrap();
        assert!((d - p * q).abs() < 1e-15);
    }

    #[test]
    fn erasure_edge_cases() {
        let rho = QPairDensity::data_on_a(c(1.0, 0.0), c(0.0, 0.0));
        let (out, d) = erase_rydberg(&rho, Species::A).unwrap();
        assert_eq!(out, rho);
        assert_eq!(d, 0.0);
        let excited = QPairDensity::data_on_a(c(0.0, 0.0), c(1.0, 0.0));
        assert_eq!(
            erase_rydberg(&excited, Species::A),
            Err(Error::TotalErasure)
        );
    }

    #[test]
    fn maximally_mixed_trace_preserved() {
        let rho = QPairDensity(Matrix3::identity() / c(3.0, 0.0));
        for p in [0.0, 0.1, 0.5, 0.9] {
            assert!((apply_qpair_channel(&rho, p).unwrap().trace() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_form_limits() {
        let (alpha, beta) = (c(0.8, 0.0), c(0.0, 0.6));
        let pure = noisy_translation(alpha, beta, 0.0).unwrap();
        assert!((state_fidelity(alpha, beta, &pure) - 1.0).abs() < 1e-15);
        let p = 0.02;
        let ground = noisy_translation(c(1.0, 0.0), c(0.0, 0.0), p).unwrap();
        let n = 1.0 - p + p * p;
        assert!((ground[(0, 0)].re - (p * n + (1.0 - p).powi(4)) / (n * n)).abs() < 1e-15);
        assert!(ground[(0, 1)].norm() < 1e-15);
        assert!((ground.trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_matches_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let (a, b) = haar_state(&mut rng);
            let p: f64 = rng.random_range(0.0..0.5);
            let closed = noisy_translation(a, b, p).unwrap();
            let (composed, _) = noisy_translation_composed(a, b, p).unwrap();
            assert!(max_err(&closed, &composed) < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn single_atom_reference() {
        let rho = single_atom_decay_reference(c(0.0, 0.0), c(1.0, 0.0), 0.01).unwrap();
        assert!((rho[(0, 0)].re - 0.04).abs() < 1e-15 && (rho[(1, 1)].re - 0.96).abs() < 1e-15);
        assert_eq!(
            single_atom_decay_reference(c(1.0, 0.0), c(0.0, 0.0), 0.25),
            Err(Error::DecayBudget(0.25))
        );
        // equals one damping step of strength 4p
        let (a, b) = (c(0.6, 0.0), C64::from_polar(0.8, 1.1));
        let psi = nalgebra::Vector2::new(a, b);
        let damped = amplitude_damping(0.04)
            .unwrap()
            .apply(&(psi * psi.adjoint()));
        assert!(max_err(&damped, &single_atom_decay_reference(a, b, 0.01).unwrap()) < 1e-15);
        let f = state_fidelity(a, b, &single_atom_decay_reference(a, b, 1e-5).unwrap());
        assert!((f - (1.0 - 4e-5 * b.norm_sqr().powi(2))).abs() < 1e-8);
    }

    #[test]
    fn haar_moments() {
        let (m2, _) = haar_mean(200_000, 5, |a, _| Ok(a.norm_sqr())).unwrap();
        let (m4, _) = haar_mean(200_000, 5, |_, b| Ok(b.norm_sqr().powi(2))).unwrap();
        assert!((m2 - 0.5).abs() < 0.005);
        assert!((m4 - 1.0 / 3.0).abs() < 0.005);
    }

    #[test]
    fn haar_average_is_deterministic_and_exact_at_zero() {
        for protocol in [Protocol::SingleAtom, Protocol::QPair] {
            let (m, _) = haar_average_fidelity(protocol, 0.0, 1000, 1).unwrap();
            assert!((m - 1.0).abs() < 1e-14);
        }
        let a = haar_average_fidelity(Protocol::QPair, 0.01, 40_000, 9).unwrap();
        let b = haar_average_fidelity(Protocol::QPair, 0.01, 40_000, 9).unwrap();
        assert_eq!(a, b);
        assert!(haar_average_fidelity(Protocol::QPair, 0.01, 0, 9).is_err());
    }

    #[test]
    fn interleaving_order_is_immaterial() {
        for p in [1e-4, 1e-3, 1e-2] {
            assert!(interleaving_gap(p).unwrap() < 10.0 * p * p);
        }
    }

    #[test]
    fn quadrature_reproduces_haar_moments() {
        assert!((haar_quadrature(|a, _| a.norm_sqr()) - 0.5).abs() < 1e-14);
        assert!((haar_quadrature(|_, b| b.norm_sqr().powi(2)) - 1.0 / 3.0).abs() < 1e-14);
        assert!((haar_quadrature(|a, b| (a * b.conj()).re).abs()) < 1e-14);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = log_space(1e-4, 1e-2, 5);
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_err());
    }
}
