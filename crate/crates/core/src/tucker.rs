//! Constrained Tucker2 hybrid beamforming.
//!
//! The analog precoder/combiner pair shared by all subcarriers is found one
//! stream at a time. For each stream a rank-(1,1) Tucker2 factor pair
//! `(w, f)` of the residual channel tensor is fitted by projected alternating
//! least squares: a single power-iteration step per factor, followed by a
//! projection onto the constant-modulus set. The pair's subspace is then
//! deflated from the residual with the orthogonal projectors
//! `P_w = I - w w^H` and `P_f = I - f f^H` before the next stream.
//!
//! The digital stage is a per-subcarrier SVD of the effective channel
//! `W_RF^H H_m F_RF`, with the precoder rescaled to meet the per-subcarrier
//! power budget `‖F_RF F_BB,m‖²_F = N_s`.

use std::f64::consts::PI;

use nalgebra::DMatrixView;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{phase_project, svd, ComplexMatrix, ComplexTensor3, ComplexVector, FrobeniusNormSq};

/// Stopping rule for the per-stream ALS loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlsConfig {
    /// Threshold on the squared change of the objective between iterations.
    pub eps: f64,
    /// Maximum number of ALS iterations per stream.
    pub max_iters: usize,
}

impl Default for AlsConfig {
    fn default() -> Self {
        Self {
            eps: 1.0,
            max_iters: 10,
        }
    }
}

/// Outcome of fitting one `(w, f)` pair.
#[derive(Clone, Debug)]
pub struct StreamPair {
    pub w: ComplexVector,
    pub f: ComplexVector,
    /// Objective after initialization followed by one value per iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// True when the loop stopped on the `eps` criterion rather than the cap.
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamReport {
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

impl StreamReport {
    /// Whether every iteration left the objective no worse than before.
    pub fn is_monotone(&self) -> bool {
        self.trace.windows(2).all(|w| w[1] >= w[0])
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AlsReport {
    pub streams: Vec<StreamReport>,
}

impl AlsReport {
    pub fn mean_iterations(&self) -> f64 {
        if self.streams.is_empty() {
            return 0.0;
        }
        self.streams.iter().map(|s| s.iterations as f64).sum::<f64>() / self.streams.len() as f64
    }

    pub fn converged_fraction(&self) -> f64 {
        if self.streams.is_empty() {
            return 0.0;
        }
        self.streams.iter().filter(|s| s.converged).count() as f64 / self.streams.len() as f64
    }
}

/// Analog precoder (`N_t × N_s`) and combiner (`N_r × N_s`).
#[derive(Clone, Debug, PartialEq)]
pub struct AnalogPair {
    pub f_rf: ComplexMatrix,
    pub w_rf: ComplexMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridBeamformer {
    pub analog: AnalogPair,
    pub f_bb: Vec<ComplexMatrix>,
    pub w_bb: Vec<ComplexMatrix>,
}

impl HybridBeamformer {
    pub fn n_subcarriers(&self) -> usize {
        self.f_bb.len()
    }

    /// Effective precoder `F_RF · F_BB,m`.
    pub fn precoder(&self, m: usize) -> ComplexMatrix {
        &self.analog.f_rf * &self.f_bb[m]
    }

    /// Effective combiner `W_RF · W_BB,m`.
    pub fn combiner(&self, m: usize) -> ComplexMatrix {
        &self.analog.w_rf * &self.w_bb[m]
    }
}

/// `Σ_m |w^H H_m f|² / M`.
pub fn stream_objective(h: &ComplexTensor3, w: &ComplexVector, f: &ComplexVector) -> f64 {
    let m = h.dims()[2];
    let total: f64 = h.slices().map(|s| (s * f).dotc(w).norm_sqr()).sum();
    total / m as f64
}

/// `Σ_m H_m f f^H H_m^H w`: one power-iteration step for the combiner.
fn combiner_step(h: &ComplexTensor3, w: &ComplexVector, f: &ComplexVector) -> ComplexVector {
    let mut acc = ComplexVector::zeros(h.dims()[0]);
    for s in h.slices() {
        let y = s * f;
        let c = y.dotc(w);
        acc.axpy(c, &y, Complex64::new(1.0, 0.0));
    }
    acc
}

/// `Σ_m H_m^H w w^H H_m f`: one power-iteration step for the precoder.
fn precoder_step(h: &ComplexTensor3, w: &ComplexVector, f: &ComplexVector) -> ComplexVector {
    let mut acc = ComplexVector::zeros(h.dims()[1]);
    for s in h.slices() {
        let z = s.ad_mul(w);
        let c = z.dotc(f);
        acc.axpy(c, &z, Complex64::new(1.0, 0.0));
    }
    acc
}

/// Constant-modulus vector of length `n` with i.i.d. uniform phases.
pub fn random_constant_modulus<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexVector {
    let amp = 1.0 / (n as f64).sqrt();
    ComplexVector::from_fn(n, |_, _| Complex64::from_polar(amp, rng.random_range(0.0..2.0 * PI)))
}

/// Fits one `(w, f)` pair starting from random feasible phases.
pub fn als_stream_pair<R: Rng + ?Sized>(h_res: &ComplexTensor3, cfg: &AlsConfig, rng: &mut R) -> StreamPair {
    let [nr, nt, _] = h_res.dims();
    let w0 = random_constant_modulus(nr, rng);
    let f0 = random_constant_modulus(nt, rng);
    als_stream_pair_from(h_res, w0, f0, cfg)
}

/// Fits one `(w, f)` pair from the given starting point.
///
/// Each iteration updates `w` then `f` (using the new `w`), phase-projecting
/// after each half-step. After at least one iteration the loop stops once
/// `(δ_new - δ_old)² < eps`, and unconditionally after `cfg.max_iters`
/// iterations. With `max_iters == 0` the starting point is returned as is.
pub fn als_stream_pair_from(
    h_res: &ComplexTensor3,
    w0: ComplexVector,
    f0: ComplexVector,
    cfg: &AlsConfig,
) -> StreamPair {
    let [nr, nt, _] = h_res.dims();
    let w_scale = 1.0 / (nr as f64).sqrt();
    let f_scale = 1.0 / (nt as f64).sqrt();
    let mut w = w0;
    let mut f = f0;

    let mut previous = 0.0;
    let mut current = stream_objective(h_res, &w, &f);
    let mut trace = vec![current];
    let mut iterations = 0;
    let converged = loop {
        // The first pass always runs: comparing the random start against the
        // zero sentinel says nothing about convergence.
        if iterations > 0 && (current - previous).powi(2) < cfg.eps {
            break true;
        }
        if iterations >= cfg.max_iters {
            break false;
        }
        iterations += 1;
        w = phase_project(&combiner_step(h_res, &w, &f), w_scale);
        f = phase_project(&precoder_step(h_res, &w, &f), f_scale);
        previous = current;
        current = stream_objective(h_res, &w, &f);
        trace.push(current);
    };

    StreamPair {
        w,
        f,
        trace,
        iterations,
        converged,
    }
}

/// Removes the `(w, f)` subspace from every slice: `H_m ← P_w H_m P_f`.
///
/// Equivalent to `P_w · H_(1) · (I_M ⊗ P_f)` on the mode-1 unfolding, but
/// applied as rank-one corrections per slice.
pub fn residual_update(h_res: &ComplexTensor3, w: &ComplexVector, f: &ComplexVector) -> Result<ComplexTensor3> {
    let [nr, nt, _] = h_res.dims();
    if w.len() != nr || f.len() != nt {
        return Err(Error::arg(format!(
            "projector vectors of length ({}, {}) do not fit slices of {nr}×{nt}",
            w.len(),
            f.len()
        )));
    }
    let one = Complex64::new(1.0, 0.0);
    let mut out = h_res.clone();
    for k in 0..h_res.dims()[2] {
        let mut s = out.slice_mut(k);
        // H - w (w^H H), written as a conjugated rank-one update with H^H w.
        let z = s.ad_mul(w);
        s.gerc(-one, w, &z, one);
        // (P_w H) - (P_w H f) f^H
        let y = &s * f;
        s.gerc(-one, &y, f, one);
    }
    Ok(out)
}

/// Designs the analog pair stream by stream, calling `on_stream` with each
/// fitted pair and the residual tensor left after deflating it.
pub fn design_analog_with<R, F>(
    h: &ComplexTensor3,
    n_s: usize,
    cfg: &AlsConfig,
    rng: &mut R,
    mut on_stream: F,
) -> Result<(AnalogPair, AlsReport)>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &StreamPair, &ComplexTensor3),
{
    let [nr, nt, _] = h.dims();
    if n_s == 0 || n_s > nr.min(nt) {
        return Err(Error::arg(format!(
            "n_s = {n_s} must be in 1..={} for a {nr}×{nt} channel",
            nr.min(nt)
        )));
    }
    let mut f_rf = ComplexMatrix::zeros(nt, n_s);
    let mut w_rf = ComplexMatrix::zeros(nr, n_s);
    let mut report = AlsReport::default();
    let mut residual = h.clone();
    for i in 0..n_s {
        let pair = als_stream_pair(&residual, cfg, rng);
        residual = residual_update(&residual, &pair.w, &pair.f)?;
        on_stream(i, &pair, &residual);
        f_rf.set_column(i, &pair.f);
        w_rf.set_column(i, &pair.w);
        report.streams.push(StreamReport {
            iterations: pair.iterations,
            converged: pair.converged,
            trace: pair.trace,
        });
    }
    Ok((AnalogPair { f_rf, w_rf }, report))
}

pub fn design_analog<R: Rng + ?Sized>(
    h: &ComplexTensor3,
    n_s: usize,
    cfg: &AlsConfig,
    rng: &mut R,
) -> Result<(AnalogPair, AlsReport)> {
    design_analog_with(h, n_s, cfg, rng, |_, _, _| {})
}

/// Per-subcarrier SVD digital stage for a fixed analog pair.
pub fn design_digital(h: &ComplexTensor3, analog: &AnalogPair, n_s: usize) -> Result<HybridBeamformer> {
    let [nr, nt, m] = h.dims();
    let (f_rf, w_rf) = (&analog.f_rf, &analog.w_rf);
    if f_rf.nrows() != nt || w_rf.nrows() != nr {
        return Err(Error::arg(format!(
            "analog pair ({}×{}, {}×{}) does not match a {nr}×{nt} channel",
            f_rf.nrows(),
            f_rf.ncols(),
            w_rf.nrows(),
            w_rf.ncols()
        )));
    }
    if n_s == 0 || n_s > f_rf.ncols().min(w_rf.ncols()) {
        return Err(Error::arg(format!(
            "n_s = {n_s} exceeds the {} / {} RF chains",
            f_rf.ncols(),
            w_rf.ncols()
        )));
    }
    let w_rf_adj = w_rf.adjoint();
    let target = (n_s as f64).sqrt();
    let mut f_bb = Vec::with_capacity(m);
    let mut w_bb = Vec::with_capacity(m);
    for k in 0..m {
        let eff = effective_channel(&w_rf_adj, h.slice(k), f_rf);
        let dec = svd(&eff)?;
        let mut fb = dec.v.columns(0, n_s).into_owned();
        let wb = dec.u.columns(0, n_s).into_owned();
        let power = (f_rf * &fb).frobenius_norm_sq().sqrt();
        if power > 0.0 {
            fb *= Complex64::new(target / power, 0.0);
        }
        f_bb.push(fb);
        w_bb.push(wb);
    }
    Ok(HybridBeamformer {
        analog: analog.clone(),
        f_bb,
        w_bb,
    })
}

fn effective_channel(w_rf_adj: &ComplexMatrix, h_m: DMatrixView<'_, Complex64>, f_rf: &ComplexMatrix) -> ComplexMatrix {
    w_rf_adj * (h_m * f_rf)
}

/// Analog design followed by the digital stage.
pub fn design_hybrid<R: Rng + ?Sized>(
    h: &ComplexTensor3,
    n_s: usize,
    cfg: &AlsConfig,
    rng: &mut R,
) -> Result<(HybridBeamformer, AlsReport)> {
    let (analog, report) = design_analog(h, n_s, cfg, rng)?;
    let bf = design_digital(h, &analog, n_s)?;
    Ok((bf, report))
}
