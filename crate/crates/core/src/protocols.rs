//! Compiles reference-frame transformations into executable protocols.
//!
//! A transformation `x'_i = Σ α_ij x_j` of the simulated Dirac-like dynamics
//! `H = c p` is embedded in a qubit-doubled space with generator
//! `(α̃₁𝟙 + α̃₂σˣ₁)p`. The `α̃₁` part is realized through an auxiliary ion held
//! in the `+1` eigenstate of `σˣ₂`, so every term becomes a σˣ-conditioned
//! bichromatic sideband pair.
//!
//! Initialization kicks the motional ground state to mean momentum `p₀`
//! with `H_init = −p₀ x σˣ`, i.e. ηΩ̃·t_init = p₀Δ with both sideband phases
//! at π. On the `σˣ = +1` branch this produces `e^{+ip₀x}`, which makes the
//! decoded frame-a packet match `ψ(x, 0) = ψ₀(x)e^{ip₀x}`.

use std::fmt;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::hilbert::{
    qubit, reduce_with_qubit_operator, trace_of_product, DensityMatrix, HilbertSpace,
    ModeDensity, Operator, StateVector, C64, DELTA, ONE,
};
use crate::ion_model::{
    bichromatic_pair, rwa_hamiltonian, DeviceParams, LaserDrive, Quadrature,
    TimeDependentHamiltonian,
};

/// Ion carrying the enlarged-space spinor.
pub const SYSTEM_QUBIT: usize = 0;
/// Auxiliary ion used for initialization and for the `α̃₁𝟙` term.
pub const ANCILLA_QUBIT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    TimeParity,
    SpatialParity,
    GalileanBoost,
    General,
}

impl ProtocolKind {
    pub const NAMED: [ProtocolKind; 3] = [
        ProtocolKind::TimeParity,
        ProtocolKind::SpatialParity,
        ProtocolKind::GalileanBoost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::TimeParity => "time_parity",
            ProtocolKind::SpatialParity => "spatial_parity",
            ProtocolKind::GalileanBoost => "galilean_boost",
            ProtocolKind::General => "general",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time_parity" => Ok(ProtocolKind::TimeParity),
            "spatial_parity" => Ok(ProtocolKind::SpatialParity),
            "galilean_boost" => Ok(ProtocolKind::GalileanBoost),
            "general" => Ok(ProtocolKind::General),
            other => Err(Error::InvalidParameter {
                name: "protocol",
                reason: format!("unknown protocol `{other}`"),
            }),
        }
    }
}

/// Galilean coefficients `(α₀₀, α₀₁, α₁₀, α₁₁)` plus the simulated speed of
/// light and boost velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformSpec {
    pub a00: f64,
    /// Carried for completeness; it does not enter the embedding.
    pub a01: f64,
    pub a10: f64,
    pub a11: f64,
    pub c: f64,
    pub v: f64,
}

impl TransformSpec {
    pub fn time_parity(c: f64) -> Self {
        Self { a00: -1.0, a01: 0.0, a10: 0.0, a11: 1.0, c, v: 0.0 }
    }

    pub fn spatial_parity(c: f64) -> Self {
        Self { a00: 1.0, a01: 0.0, a10: 0.0, a11: -1.0, c, v: 0.0 }
    }

    pub fn galilean_boost(c: f64, v: f64) -> Self {
        Self { a00: 1.0, a01: 0.0, a10: -v, a11: 1.0, c, v }
    }

    pub fn identity(c: f64) -> Self {
        Self { a00: 1.0, a01: 0.0, a10: 0.0, a11: 1.0, c, v: 0.0 }
    }
}

/// (α̃₁, α̃₂) = ([c(α₁₁ + α₀₀) − α₁₀], [c(α₁₁ − α₀₀) + α₁₀]) / 2α₁₁.
pub fn embedding_coefficients(t: &TransformSpec) -> Result<(f64, f64)> {
    if t.a11 == 0.0 {
        return Err(Error::InvalidParameter {
            name: "a11",
            reason: "α₁₁ must be nonzero".into(),
        });
    }
    let d = 2.0 * t.a11;
    Ok((
        (t.c * (t.a11 + t.a00) - t.a10) / d,
        (t.c * (t.a11 - t.a00) + t.a10) / d,
    ))
}

/// A σˣ-conditioned coupling `g σˣ_q (a + a†)` or `i g σˣ_q (a† − a)`, with
/// `g = ηΩ̃` signed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub qubit: usize,
    pub strength: f64,
    pub quadrature: Quadrature,
}

impl Coupling {
    /// Mode displacement generated on the `σˣ_q = sign` branch after `t`.
    pub fn branch_displacement(&self, sign: f64, t: f64) -> C64 {
        match self.quadrature {
            Quadrature::Momentum => C64::new(self.strength * sign * t, 0.0),
            Quadrature::Position => C64::new(0.0, -self.strength * sign * t),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Stage {
    pub couplings: Vec<Coupling>,
    pub duration: f64,
    pub drives: Vec<LaserDrive>,
    pub rwa: Operator,
}

impl Stage {
    fn compile(
        space: HilbertSpace,
        couplings: Vec<Coupling>,
        duration: f64,
        lamb_dicke: f64,
    ) -> Result<Self> {
        let mut drives = Vec::new();
        for c in &couplings {
            drives.extend(bichromatic_pair(c.qubit, c.strength, lamb_dicke, c.quadrature)?);
        }
        let rwa = rwa_hamiltonian(space, &drives)?;
        Ok(Self {
            couplings,
            duration,
            drives,
            rwa,
        })
    }

    /// Lab-frame Hamiltonian with the fast terms, or its rotating-wave limit.
    pub fn hamiltonian(&self, space: HilbertSpace, rwa_only: bool) -> Result<TimeDependentHamiltonian> {
        if rwa_only || self.drives.is_empty() {
            Ok(TimeDependentHamiltonian::constant(self.rwa.clone()))
        } else {
            TimeDependentHamiltonian::lab(space, &self.drives)
        }
    }
}

/// Qubit contractions that map the enlarged-space state back to the two
/// simulated frames: `ψ_a = (1,1)Ψ`, `ψ_b = (1,1)σᶻΨ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeRule {
    pub qubit: usize,
    /// `(1,1)ᵀ(1,1) = 𝟙 + σˣ`
    pub frame_a: Matrix2<C64>,
    /// `σᶻ(1,1)ᵀ(1,1)σᶻ = 𝟙 − σˣ`
    pub frame_b: Matrix2<C64>,
    /// Contraction giving `∫ψ_a* x ψ_b`.
    pub correlation: Matrix2<C64>,
}

impl DecodeRule {
    fn parity(qubit: usize) -> Self {
        Self {
            qubit,
            frame_a: Matrix2::new(ONE, ONE, ONE, ONE),
            frame_b: Matrix2::new(ONE, -ONE, -ONE, ONE),
            // (σˣ + 𝟙)σᶻ
            correlation: (qubit::pauli(crate::hilbert::Axis::X) + qubit::identity())
                * qubit::pauli(crate::hilbert::Axis::Z),
        }
    }

    fn spatial(qubit: usize) -> Self {
        Self {
            correlation: Matrix2::new(ONE, -ONE, ONE, -ONE),
            ..Self::parity(qubit)
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub space: HilbertSpace,
    pub transform: TransformSpec,
    pub coefficients: (f64, f64),
    pub p0: f64,
    pub device: DeviceParams,
    /// Sideband Rabi frequency Ω̃ used for initialization and for the
    /// dominant evolution coupling.
    pub omega_tilde: f64,
    /// Qubit spinors prepared before initialization; the mode starts in
    /// its ground state.
    pub initial_qubits: Vec<qubit::Spinor>,
    pub init: Stage,
    pub evolution: Stage,
    pub decode: DecodeRule,
}

impl ProtocolSpec {
    pub fn initial_state(&self) -> StateVector {
        let mut vac = crate::hilbert::CVector::zeros(self.space.fock_cutoff());
        vac[0] = ONE;
        StateVector::product(self.space, &self.initial_qubits, &vac).expect("consistent sizes")
    }

    pub fn ideal_evolution(&self) -> &Operator {
        &self.evolution.rwa
    }

    pub fn init_hamiltonian(&self) -> &Operator {
        &self.init.rwa
    }

    /// Group velocities of the decoded frames, `(α̃₁ + α̃₂, α̃₁ − α̃₂)`.
    pub fn frame_velocities(&self) -> (f64, f64) {
        let (a1, a2) = self.coefficients;
        (a1 + a2, a1 - a2)
    }

    /// ηΩ̃ of the studied drive.
    pub fn coupling_strength(&self) -> f64 {
        self.device.lamb_dicke * self.omega_tilde
    }

    /// Evolution time reaching a given frame-a displacement `ct`.
    pub fn time_for_ct(&self, ct: f64) -> f64 {
        ct / self.transform.c
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be positive, got {v}"),
        })
    }
}

fn check_p0(p0: f64) -> Result<()> {
    if p0 >= 0.0 && p0.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "p0",
            reason: format!("must be non-negative, got {p0}"),
        })
    }
}

/// Initialization coupling `−p₀xσˣ_q` at strength ηΩ̃ = `g`, lasting `p₀Δ/g`.
fn init_stage(space: HilbertSpace, qubit: usize, p0: f64, g: f64, eta: f64) -> Result<Stage> {
    if p0 == 0.0 {
        return Stage::compile(space, Vec::new(), 0.0, eta);
    }
    let coupling = Coupling {
        qubit,
        strength: -g,
        quadrature: Quadrature::Position,
    };
    Stage::compile(space, vec![coupling], p0 * DELTA / g, eta)
}

fn compile_two_ion(
    kind: ProtocolKind,
    transform: TransformSpec,
    p0: f64,
    device: &DeviceParams,
    fock_cutoff: usize,
) -> Result<ProtocolSpec> {
    device.validate()?;
    check_positive("c", transform.c)?;
    check_p0(p0)?;
    let coefficients = embedding_coefficients(&transform)?;
    let (a1, a2) = coefficients;
    let space = HilbertSpace::new(2, fock_cutoff)?;
    // (α̃₁σˣ₂ + α̃₂σˣ₁)p = i(α̃/2Δ)σˣ(a† − a) on each ion.
    let mut couplings = Vec::new();
    if a1 != 0.0 {
        couplings.push(Coupling {
            qubit: ANCILLA_QUBIT,
            strength: a1 / (2.0 * DELTA),
            quadrature: Quadrature::Momentum,
        });
    }
    if a2 != 0.0 {
        couplings.push(Coupling {
            qubit: SYSTEM_QUBIT,
            strength: a2 / (2.0 * DELTA),
            quadrature: Quadrature::Momentum,
        });
    }
    let g = couplings
        .first()
        .map(|c| c.strength.abs())
        .ok_or_else(|| Error::InvalidParameter {
            name: "transform",
            reason: "embedding generator vanishes".into(),
        })?;
    let eta = device.lamb_dicke;
    Ok(ProtocolSpec {
        kind,
        space,
        transform,
        coefficients,
        p0,
        device: device.clone(),
        omega_tilde: g / eta,
        initial_qubits: vec![qubit::excited(), qubit::plus_x()],
        init: init_stage(space, ANCILLA_QUBIT, p0, g, eta)?,
        evolution: Stage::compile(space, couplings, 0.0, eta)?,
        decode: DecodeRule::parity(SYSTEM_QUBIT),
    })
}

/// Two ions: the system ion starts in `(1,0)ᵀ`, the ancilla in `|+⟩` carries
/// the momentum kick, and the evolution is `σˣ₁ c p`.
pub fn build_time_parity(
    c: f64,
    p0: f64,
    device: &DeviceParams,
    fock_cutoff: usize,
) -> Result<ProtocolSpec> {
    compile_two_ion(
        ProtocolKind::TimeParity,
        TransformSpec::time_parity(c),
        p0,
        device,
        fock_cutoff,
    )
}

/// One ion: a conditional kick `−p₀xσˣ₁` on `(1,0)ᵀ ⊗ |0⟩` prepares the
/// mirrored superposition, then the evolution is `σˣ₁ c p`.
pub fn build_spatial_parity(
    c: f64,
    p0: f64,
    device: &DeviceParams,
    fock_cutoff: usize,
) -> Result<ProtocolSpec> {
    device.validate()?;
    check_positive("c", c)?;
    check_p0(p0)?;
    let transform = TransformSpec::spatial_parity(c);
    let coefficients = embedding_coefficients(&transform)?;
    let space = HilbertSpace::new(1, fock_cutoff)?;
    let g = coefficients.1.abs() / (2.0 * DELTA);
    let eta = device.lamb_dicke;
    let evolution = vec![Coupling {
        qubit: SYSTEM_QUBIT,
        strength: coefficients.1 / (2.0 * DELTA),
        quadrature: Quadrature::Momentum,
    }];
    Ok(ProtocolSpec {
        kind: ProtocolKind::SpatialParity,
        space,
        transform,
        coefficients,
        p0,
        device: device.clone(),
        omega_tilde: g / eta,
        initial_qubits: vec![qubit::excited()],
        init: init_stage(space, SYSTEM_QUBIT, p0, g, eta)?,
        evolution: Stage::compile(space, evolution, 0.0, eta)?,
        decode: DecodeRule::spatial(SYSTEM_QUBIT),
    })
}

/// Two ions: `ℋ₁' = (c + v/2)σˣ₂p` on the ancilla and `ℋ₂ = −(v/2)σˣ₁p` on
/// the system ion; the studied Ω̃ is the one of `ℋ₁'`.
pub fn build_galilean_boost(
    c: f64,
    v: f64,
    p0: f64,
    device: &DeviceParams,
    fock_cutoff: usize,
) -> Result<ProtocolSpec> {
    if !v.is_finite() {
        return Err(Error::InvalidParameter {
            name: "v",
            reason: "must be finite".into(),
        });
    }
    compile_two_ion(
        ProtocolKind::GalileanBoost,
        TransformSpec::galilean_boost(c, v),
        p0,
        device,
        fock_cutoff,
    )
}

/// Any transform with α₁₁ ≠ 0, initialized like time parity.
pub fn build_general(
    transform: TransformSpec,
    p0: f64,
    device: &DeviceParams,
    fock_cutoff: usize,
) -> Result<ProtocolSpec> {
    compile_two_ion(ProtocolKind::General, transform, p0, device, fock_cutoff)
}

/// One decoded frame: its weight `Tr[Q ρ]` and the mode operator
/// `Tr_q[Qρ]` normalized by that weight.
#[derive(Debug, Clone)]
pub struct DecodedFrame {
    pub weight: f64,
    pub mode: ModeDensity,
}

impl DecodedFrame {
    fn from_contraction(raw: ModeDensity) -> Self {
        let weight = raw.trace().re;
        let scale = if weight.abs() > 1e-300 { 1.0 / weight } else { 0.0 };
        Self {
            weight,
            mode: ModeDensity::new(raw.matrix() * C64::new(scale, 0.0)),
        }
    }

    pub fn mean_position(&self) -> f64 {
        let x = crate::hilbert::mode_position(self.mode.fock_cutoff());
        self.mode.expectation(&x).re
    }

    pub fn distribution(&self, x_grid: &[f64]) -> Vec<f64> {
        self.mode.position_distribution(x_grid)
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedFrames {
    pub frame_a: DecodedFrame,
    pub frame_b: DecodedFrame,
    /// `∫ψ_a* x ψ_b dx`, unnormalized.
    pub correlation: C64,
}

pub fn decode_frames(rho: &DensityMatrix, spec: &ProtocolSpec) -> Result<SimulatedFrames> {
    if rho.space() != spec.space {
        return Err(Error::DimensionMismatch {
            expected: spec.space.dim(),
            actual: rho.space().dim(),
        });
    }
    let rule = &spec.decode;
    let a = reduce_with_qubit_operator(rho, rule.qubit, &rule.frame_a)?;
    let b = reduce_with_qubit_operator(rho, rule.qubit, &rule.frame_b)?;
    let corr = reduce_with_qubit_operator(rho, rule.qubit, &rule.correlation)?;
    let x = crate::hilbert::mode_position(spec.space.fock_cutoff());
    Ok(SimulatedFrames {
        frame_a: DecodedFrame::from_contraction(a),
        frame_b: DecodedFrame::from_contraction(b),
        correlation: trace_of_product(corr.matrix(), &x),
    })
}
