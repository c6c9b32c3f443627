//! Tomography-free readout through the state-dependent displacement
//! observable `A(k) = U†σᶻ₁U`, `U = exp(−ikxσˣ₁/2)`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::hilbert::{
    linspace, mode_position, partial_trace_qubits, qubit, trace_of_product, trapezoid, Axis,
    CMatrix, DensityMatrix, HilbertSpace, Operator, C64, DELTA, ZERO,
};
use crate::lindblad::propagator;
use crate::protocols::{ProtocolSpec, SYSTEM_QUBIT};

/// Uniform, symmetric grid of wavenumbers in units of 1/Δ.
#[derive(Debug, Clone, PartialEq)]
pub struct KGrid {
    k: Vec<f64>,
}

/// Smallest admissible `k_max Δ`.
pub const MIN_K_MAX: f64 = 6.0;

impl KGrid {
    pub fn new(k_max: f64, points: usize) -> Result<Self> {
        if !(k_max * DELTA >= MIN_K_MAX) || !k_max.is_finite() {
            return Err(Error::InvalidParameter {
                name: "k_max",
                reason: format!("need k_max·Δ ≥ {MIN_K_MAX}, got {k_max}"),
            });
        }
        if points < 3 || points % 2 == 0 {
            return Err(Error::InvalidParameter {
                name: "points",
                reason: format!("need an odd count ≥ 3, got {points}"),
            });
        }
        Ok(Self {
            k: linspace(-k_max, k_max, points),
        })
    }

    /// k ∈ [−8/Δ, 8/Δ], 257 points.
    pub fn standard() -> Self {
        Self::new(8.0 / DELTA, 257).expect("valid standard grid")
    }

    pub fn values(&self) -> &[f64] {
        &self.k
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.k[1] - self.k[0]
    }

    pub fn k_max(&self) -> f64 {
        self.k[self.k.len() - 1]
    }
}

/// x ∈ [−10Δ, 10Δ], 801 points.
pub fn standard_x_grid() -> Vec<f64> {
    linspace(-10.0 * DELTA, 10.0 * DELTA, 801)
}

/// Spectral form of the truncated position operator, used to build
/// `cos(kx)` and `sin(kx)` consistently with the truncated `x`.
#[derive(Debug, Clone)]
pub struct PositionSpectrum {
    vectors: DMatrix<f64>,
    values: Vec<f64>,
}

impl PositionSpectrum {
    pub fn new(fock_cutoff: usize) -> Self {
        let x = mode_position(fock_cutoff).map(|z| z.re);
        let eig = SymmetricEigen::new(x);
        Self {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues.iter().copied().collect(),
        }
    }

    /// `f(x)` for a real function on the spectrum.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&l| f(l)),
        ));
        (&self.vectors * d * self.vectors.transpose()).map(|v| C64::new(v, 0.0))
    }
}

/// `cos(kx)σᶻ₁ + sin(kx)σʸ₁` via the closed form.
pub fn displaced_observable(space: HilbertSpace, k: f64) -> Result<Operator> {
    displaced_observable_with(space, k, &PositionSpectrum::new(space.fock_cutoff()))
}

pub fn displaced_observable_with(
    space: HilbertSpace,
    k: f64,
    spectrum: &PositionSpectrum,
) -> Result<Operator> {
    let cos = Operator::from_mode(space, &spectrum.apply(|l| (k * l).cos()))?;
    let sin = Operator::from_mode(space, &spectrum.apply(|l| (k * l).sin()))?;
    let z = Operator::pauli(space, SYSTEM_QUBIT, Axis::Z)?;
    let y = Operator::pauli(space, SYSTEM_QUBIT, Axis::Y)?;
    Ok(&(&cos * &z) + &(&sin * &y))
}

/// `U = exp(−ikxσˣ₁/2)`.
pub fn displacement_unitary(space: HilbertSpace, k: f64) -> Result<Operator> {
    let gen = &Operator::position(space) * &Operator::pauli(space, SYSTEM_QUBIT, Axis::X)?;
    Operator::new(space, propagator(&(gen * (k / 2.0)), 1.0))
}

/// `U†σᶻ₁U` by explicit conjugation.
pub fn displaced_observable_by_conjugation(space: HilbertSpace, k: f64) -> Result<Operator> {
    let u = displacement_unitary(space, k)?;
    let z = Operator::pauli(space, SYSTEM_QUBIT, Axis::Z)?;
    Ok(&(&u.adjoint() * &z) * &u)
}

/// Traces out `qubit` and re-prepares it in `spinor`, leaving every other
/// subsystem untouched.
pub fn reset_qubit(rho: &DensityMatrix, qubit_index: usize, spinor: &qubit::Spinor) -> Result<DensityMatrix> {
    let space = rho.space();
    space.check_qubit(qubit_index)?;
    let n = space.fock_cutoff();
    let nb = space.qubit_dim();
    let shift = space.n_qubits() - 1 - qubit_index;
    let m = rho.matrix();
    let mut out = CMatrix::zeros(space.dim(), space.dim());
    for b in 0..nb {
        let sb = spinor[space.qubit_bit(b, qubit_index)];
        for bp in 0..nb {
            let w = sb * spinor[space.qubit_bit(bp, qubit_index)].conj();
            if w == ZERO {
                continue;
            }
            let mut block = CMatrix::zeros(n, n);
            for bit in 0..2 {
                let r = (b & !(1 << shift)) | (bit << shift);
                let c = (bp & !(1 << shift)) | (bit << shift);
                block += m.view((r * n, c * n), (n, n));
            }
            out.view_mut((b * n, bp * n), (n, n)).copy_from(&(block * w));
        }
    }
    DensityMatrix::new(space, out)
}

/// Binomial sampling of the ±1 outcome of σᶻ₁ at each k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotNoise {
    pub shots: u64,
    pub seed: u64,
}

struct Sampler {
    shots: u64,
    rng: StdRng,
}

impl Sampler {
    fn measure(&mut self, mean: f64) -> Result<f64> {
        let p = ((1.0 + mean) / 2.0).clamp(0.0, 1.0);
        let dist = Binomial::new(self.shots, p).map_err(|e| Error::InvalidParameter {
            name: "shots",
            reason: e.to_string(),
        })?;
        let ups = dist.sample(&mut self.rng) as f64;
        Ok(2.0 * ups / self.shots as f64 - 1.0)
    }
}

/// `χ(k) = ⟨cos kx⟩ + i⟨sin kx⟩` from two preparations of the system ion:
/// `⟨A⟩` with it reset to the σᶻ eigenstate gives the cosine, with it reset
/// to the σʸ eigenstate the sine.
pub fn characteristic_function(
    rho: &DensityMatrix,
    kgrid: &KGrid,
    shot_noise: Option<ShotNoise>,
) -> Result<Vec<C64>> {
    let space = rho.space();
    let spectrum = PositionSpectrum::new(space.fock_cutoff());
    let rho_z = reset_qubit(rho, SYSTEM_QUBIT, &qubit::excited())?;
    let rho_y = reset_qubit(rho, SYSTEM_QUBIT, &qubit::plus_y())?;
    let mut sampler = match shot_noise {
        Some(ShotNoise { shots: 0, .. }) => {
            return Err(Error::InvalidParameter {
                name: "shots",
                reason: "must be positive".into(),
            })
        }
        Some(s) => Some(Sampler {
            shots: s.shots,
            rng: StdRng::seed_from_u64(s.seed),
        }),
        None => None,
    };
    let mut out = Vec::with_capacity(kgrid.len());
    for &k in kgrid.values() {
        let a = displaced_observable_with(space, k, &spectrum)?;
        let mut cos = trace_of_product(rho_z.matrix(), a.matrix()).re;
        let mut sin = trace_of_product(rho_y.matrix(), a.matrix()).re;
        if let Some(s) = sampler.as_mut() {
            cos = s.measure(cos)?;
            sin = s.measure(sin)?;
        }
        out.push(C64::new(cos, sin));
    }
    Ok(out)
}

/// Largest `|χ|` tolerated at the grid edge before the k range is declared
/// too short for the packet.
pub const EDGE_TOLERANCE: f64 = 1e-2;
/// Reconstructed densities below this are rejected rather than clipped.
pub const NEGATIVITY_FLOOR: f64 = -1e-3;

/// `P(x) = (1/2π)∫χ(k)e^{−ikx}dk` by the trapezoid rule, clipped and
/// renormalized to unit mass on `x_grid`.
pub fn reconstruct_distribution(chi: &[C64], kgrid: &KGrid, x_grid: &[f64]) -> Result<Vec<f64>> {
    if chi.len() != kgrid.len() {
        return Err(Error::DimensionMismatch {
            expected: kgrid.len(),
            actual: chi.len(),
        });
    }
    let x_max = x_grid.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let dk = kgrid.spacing();
    if PI / dk <= x_max {
        return Err(Error::GridTooCoarse(format!(
            "k spacing {dk} aliases beyond |x| = {:.3}, need < {x_max}",
            PI / dk
        )));
    }
    let edge = chi[0].norm().max(chi[chi.len() - 1].norm());
    if edge > EDGE_TOLERANCE {
        return Err(Error::GridTooCoarse(format!(
            "|χ| = {edge:.3e} at k_max = {}; the packet is narrower than the k range resolves",
            kgrid.k_max()
        )));
    }
    let k = kgrid.values();
    let mut p: Vec<f64> = x_grid
        .iter()
        .map(|&x| {
            let integrand: Vec<f64> = k
                .iter()
                .zip(chi)
                .map(|(&kk, &c)| (c * C64::from_polar(1.0, -kk * x)).re)
                .collect();
            trapezoid(k, &integrand) / (2.0 * PI)
        })
        .collect();
    for (x, v) in x_grid.iter().zip(p.iter_mut()) {
        if *v < NEGATIVITY_FLOOR {
            return Err(Error::NegativeDensity { x: *x, value: *v });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let mass = trapezoid(x_grid, &p);
    if mass <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    p.iter_mut().for_each(|v| *v /= mass);
    Ok(p)
}

fn x_sigma_z(rho: &DensityMatrix, qubit_index: usize) -> Result<f64> {
    let space = rho.space();
    let op = &Operator::position(space) * &Operator::pauli(space, qubit_index, Axis::Z)?;
    Ok(trace_of_product(rho.matrix(), op.matrix()).re)
}

fn rotate_about_x(rho: &DensityMatrix, qubit_index: usize, angle: f64) -> Result<DensityMatrix> {
    let r = Operator::from_qubit(rho.space(), qubit_index, &qubit::rotation(Axis::X, angle))?;
    rho.conjugate(&r)
}

/// `C = ⟨xσᶻ⟩ − i⟨xσʸ⟩`, reading the σʸ part as `⟨xσᶻ⟩` on the rotated
/// state `Φ = e^{−iπσˣ/4}Ψ`.
pub fn spacetime_correlation(rho: &DensityMatrix, spec: &ProtocolSpec) -> Result<C64> {
    check_space(rho, spec)?;
    let q = spec.decode.qubit;
    let re = x_sigma_z(rho, q)?;
    let phi = rotate_about_x(rho, q, FRAC_PI_2)?;
    let im = x_sigma_z(&phi, q)?;
    Ok(C64::new(re, -im))
}

/// `Tr[(x ⊗ Q)ρ]` with the protocol's stored correlation contraction `Q`.
pub fn spacetime_correlation_direct(rho: &DensityMatrix, spec: &ProtocolSpec) -> Result<C64> {
    check_space(rho, spec)?;
    let space = rho.space();
    let q = Operator::from_qubit(space, spec.decode.qubit, &spec.decode.correlation)?;
    let op = &Operator::position(space) * &q;
    Ok(trace_of_product(rho.matrix(), op.matrix()))
}

fn check_space(rho: &DensityMatrix, spec: &ProtocolSpec) -> Result<()> {
    if rho.space() != spec.space {
        return Err(Error::DimensionMismatch {
            expected: spec.space.dim(),
            actual: rho.space().dim(),
        });
    }
    Ok(())
}

/// Bound on `dk(|⟨x⟩| + Δ)` for the small-k regime.
pub const SMALL_K_LIMIT: f64 = 0.05;

/// Central difference `(⟨A⟩(dk) − ⟨A⟩(−dk))/2dk ≈ ⟨xσʸ₁⟩`.
pub fn small_k_derivative(rho: &DensityMatrix, spec: &ProtocolSpec, dk: f64) -> Result<f64> {
    check_space(rho, spec)?;
    let space = rho.space();
    let x = mode_position(space.fock_cutoff());
    let mean = partial_trace_qubits(rho).expectation(&x).re;
    let scale = dk.abs() * (mean.abs() + DELTA);
    if dk == 0.0 || !(scale < SMALL_K_LIMIT) {
        return Err(Error::InvalidParameter {
            name: "dk",
            reason: format!("dk·(|⟨x⟩| + Δ) = {scale:.3e} must lie in (0, {SMALL_K_LIMIT})"),
        });
    }
    let spectrum = PositionSpectrum::new(space.fock_cutoff());
    let at = |k: f64| -> Result<f64> {
        let a = displaced_observable_with(space, k, &spectrum)?;
        Ok(trace_of_product(rho.matrix(), a.matrix()).re)
    };
    Ok((at(dk)? - at(-dk)?) / (2.0 * dk))
}

/// `C` assembled from two small-k derivatives: the σʸ piece directly, the
/// σᶻ piece after `e^{+iπσˣ/4}` maps σʸ onto σᶻ.
pub fn correlation_from_derivatives(rho: &DensityMatrix, spec: &ProtocolSpec, dk: f64) -> Result<C64> {
    let xy = small_k_derivative(rho, spec, dk)?;
    let rotated = rotate_about_x(rho, spec.decode.qubit, -FRAC_PI_2)?;
    let xz = small_k_derivative(&rotated, spec, dk)?;
    Ok(C64::new(xz, -xy))
}
