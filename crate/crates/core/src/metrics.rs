//! Per-stream SINR, sum-rate, and the two reference designs: the
//! unconstrained fully-digital SVD beamformer and the averaged-covariance
//! phase-extraction hybrid baseline.

use nalgebra::{Dyn, Matrix, Storage};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{phase_project, svd, ComplexMatrix, ComplexTensor3};
use crate::tucker::{design_digital, AnalogPair, HybridBeamformer};

/// Received power `ρ` and noise variance `σ_n²` (both linear).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub rho: f64,
    pub noise_var: f64,
}

impl LinkBudget {
    pub fn new(rho: f64, noise_var: f64) -> Result<Self> {
        if !(rho > 0.0 && noise_var > 0.0 && rho.is_finite() && noise_var.is_finite()) {
            return Err(Error::arg(format!(
                "link budget needs positive finite powers, got rho={rho}, noise={noise_var}"
            )));
        }
        Ok(Self { rho, noise_var })
    }

    /// Unit noise variance, `ρ = 10^(snr_db/10)`.
    pub fn from_snr_db(snr_db: f64) -> Self {
        Self {
            rho: 10f64.powf(snr_db / 10.0),
            noise_var: 1.0,
        }
    }

    pub fn snr(&self) -> f64 {
        self.rho / self.noise_var
    }
}

/// SNR-independent quantities of one subcarrier link: `|w_k^H H f_i|²` for
/// every stream pair and `‖w_k‖²` for every combiner column.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamGains {
    n_s: usize,
    /// Row-major `n_s × n_s`, entry `(k, i)` = `|w_k^H H f_i|²`.
    power: Vec<f64>,
    combiner_norm_sq: Vec<f64>,
}

impl StreamGains {
    pub fn new<S>(h: &Matrix<Complex64, Dyn, Dyn, S>, f: &ComplexMatrix, w: &ComplexMatrix) -> Result<Self>
    where
        S: Storage<Complex64, Dyn, Dyn>,
    {
        if h.ncols() != f.nrows() || h.nrows() != w.nrows() {
            return Err(Error::arg(format!(
                "beamformers {}×{} / {}×{} do not fit a {}×{} channel",
                f.nrows(),
                f.ncols(),
                w.nrows(),
                w.ncols(),
                h.nrows(),
                h.ncols()
            )));
        }
        if f.ncols() != w.ncols() {
            return Err(Error::arg(format!(
                "precoder has {} streams but combiner has {}",
                f.ncols(),
                w.ncols()
            )));
        }
        let n_s = f.ncols();
        let g = w.adjoint() * (h * f);
        let mut power = Vec::with_capacity(n_s * n_s);
        for k in 0..n_s {
            for i in 0..n_s {
                power.push(g[(k, i)].norm_sqr());
            }
        }
        let combiner_norm_sq = w.column_iter().map(|c| c.norm_squared()).collect();
        Ok(Self {
            n_s,
            power,
            combiner_norm_sq,
        })
    }

    pub fn n_streams(&self) -> usize {
        self.n_s
    }

    pub fn sinr(&self, k: usize, budget: &LinkBudget) -> Result<f64> {
        if k >= self.n_s {
            return Err(Error::arg(format!(
                "stream index {k} out of range for {} streams",
                self.n_s
            )));
        }
        let per_stream = budget.rho / self.n_s as f64;
        let row = &self.power[k * self.n_s..(k + 1) * self.n_s];
        let signal = per_stream * row[k];
        if signal == 0.0 {
            return Ok(0.0);
        }
        let interference: f64 = row
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, p)| per_stream * p)
            .sum();
        Ok(signal / (interference + budget.noise_var * self.combiner_norm_sq[k]))
    }

    pub fn sum_rate(&self, budget: &LinkBudget) -> f64 {
        (0..self.n_s)
            .map(|k| (1.0 + self.sinr(k, budget).expect("k in range")).log2())
            .sum()
    }
}

/// SINR of stream `k` for effective precoder `f` and combiner `w`.
pub fn stream_sinr<S>(
    h_m: &Matrix<Complex64, Dyn, Dyn, S>,
    f: &ComplexMatrix,
    w: &ComplexMatrix,
    k: usize,
    budget: &LinkBudget,
) -> Result<f64>
where
    S: Storage<Complex64, Dyn, Dyn>,
{
    StreamGains::new(h_m, f, w)?.sinr(k, budget)
}

/// Achievable sum-rate (bits/s/Hz) of one subcarrier.
pub fn sum_rate<S>(h_m: &Matrix<Complex64, Dyn, Dyn, S>, f: &ComplexMatrix, w: &ComplexMatrix, budget: &LinkBudget) -> Result<f64>
where
    S: Storage<Complex64, Dyn, Dyn>,
{
    Ok(StreamGains::new(h_m, f, w)?.sum_rate(budget))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub per_subcarrier: Vec<f64>,
}

impl RateResult {
    pub fn from_gains(gains: &[StreamGains], budget: &LinkBudget) -> Self {
        Self {
            per_subcarrier: gains.iter().map(|g| g.sum_rate(budget)).collect(),
        }
    }

    /// Mean over subcarriers, summed in subcarrier order.
    pub fn average(&self) -> f64 {
        if self.per_subcarrier.is_empty() {
            return 0.0;
        }
        self.per_subcarrier.iter().sum::<f64>() / self.per_subcarrier.len() as f64
    }
}

pub fn hybrid_gains(h: &ComplexTensor3, bf: &HybridBeamformer) -> Result<Vec<StreamGains>> {
    let m = h.dims()[2];
    if bf.n_subcarriers() != m {
        return Err(Error::arg(format!(
            "beamformer covers {} subcarriers, channel has {m}",
            bf.n_subcarriers()
        )));
    }
    (0..m)
        .map(|k| StreamGains::new(&h.slice(k), &bf.precoder(k), &bf.combiner(k)))
        .collect()
}

pub fn hybrid_rates(h: &ComplexTensor3, bf: &HybridBeamformer, budget: &LinkBudget) -> Result<RateResult> {
    Ok(RateResult::from_gains(&hybrid_gains(h, bf)?, budget))
}

fn check_streams(h: &ComplexTensor3, n_s: usize) -> Result<()> {
    let [nr, nt, _] = h.dims();
    if n_s == 0 || n_s > nr.min(nt) {
        return Err(Error::arg(format!(
            "n_s = {n_s} must be in 1..={} for a {nr}×{nt} channel",
            nr.min(nt)
        )));
    }
    Ok(())
}

/// Fully-digital beamformers per subcarrier: top-`n_s` right/left singular
/// vectors with equal power per stream (`‖F_m‖²_F = n_s`).
pub fn optimal_beamformers(h: &ComplexTensor3, n_s: usize) -> Result<Vec<(ComplexMatrix, ComplexMatrix)>> {
    check_streams(h, n_s)?;
    h.slices()
        .map(|s| {
            let dec = svd(&s.into_owned())?;
            let f = dec.v.columns(0, n_s).into_owned();
            let w = dec.u.columns(0, n_s).into_owned();
            Ok((f, w))
        })
        .collect()
}

pub fn optimal_gains(h: &ComplexTensor3, n_s: usize) -> Result<Vec<StreamGains>> {
    optimal_beamformers(h, n_s)?
        .iter()
        .enumerate()
        .map(|(k, (f, w))| StreamGains::new(&h.slice(k), f, w))
        .collect()
}

pub fn optimal_digital(h: &ComplexTensor3, n_s: usize, budget: &LinkBudget) -> Result<RateResult> {
    Ok(RateResult::from_gains(&optimal_gains(h, n_s)?, budget))
}

/// Analog pair from the phases of the dominant eigenvectors of the
/// subcarrier-averaged transmit and receive covariances.
pub fn avg_cov_analog(h: &ComplexTensor3, n_s: usize) -> Result<AnalogPair> {
    check_streams(h, n_s)?;
    let [nr, nt, m] = h.dims();
    let mut tx_cov = ComplexMatrix::zeros(nt, nt);
    let mut rx_cov = ComplexMatrix::zeros(nr, nr);
    let one = Complex64::new(1.0, 0.0);
    let weight = Complex64::new(1.0 / m as f64, 0.0);
    for s in h.slices() {
        tx_cov.gemm_ad(weight, &s, &s, one);
        rx_cov.gemm(weight, &s, &s.adjoint(), one);
    }
    let tx = svd(&tx_cov)?;
    let rx = svd(&rx_cov)?;
    let f_scale = 1.0 / (nt as f64).sqrt();
    let w_scale = 1.0 / (nr as f64).sqrt();
    let mut f_rf = ComplexMatrix::zeros(nt, n_s);
    let mut w_rf = ComplexMatrix::zeros(nr, n_s);
    for i in 0..n_s {
        f_rf.set_column(i, &phase_project(&tx.u.column(i).into_owned(), f_scale));
        w_rf.set_column(i, &phase_project(&rx.u.column(i).into_owned(), w_scale));
    }
    Ok(AnalogPair { f_rf, w_rf })
}

/// Averaged-covariance analog stage followed by the SVD digital stage.
pub fn avg_cov_baseline(h: &ComplexTensor3, n_s: usize, budget: &LinkBudget) -> Result<(HybridBeamformer, RateResult)> {
    let analog = avg_cov_analog(h, n_s)?;
    let bf = design_digital(h, &analog, n_s)?;
    let rates = hybrid_rates(h, &bf, budget)?;
    Ok((bf, rates))
}
