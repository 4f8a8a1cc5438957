"""Joint electron-nuclear spin system: operators, Hamiltonians, propagation, noise.

Conventions used throughout the package:

* Hilbert space is the 4-dimensional product of one electron spin-1/2 and one
  nuclear spin-1/2, with basis order |e,n> = |down,Down>, |down,Up>,
  |up,Down>, |up,Up> (electron-major; index = 2*electron + nucleus, where
  0 = spin-down / -1/2 and 1 = spin-up / +1/2).
* Frequencies are in MHz, times in microseconds, so phases are 2*pi*f*t.
  Noise sigmas and Rabi/hyperfine couplings are quoted in kHz at the API
  surface (matching the magnitudes people quote in the lab) and converted
  internally.
* All spin operators are built from S = sigma/2 (x) 1 and I = 1 (x) sigma/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SQRT2 = np.sqrt(2.0)

# Pauli matrices in the (down, up) single-spin basis.
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[-1, 0], [0, 1]], dtype=complex)
_ID = np.eye(2, dtype=complex)

# Electron (S) and nuclear (I) spin-1/2 operators on the joint space.
SX = np.kron(_SX, _ID) / 2
SY = np.kron(_SY, _ID) / 2
SZ = np.kron(_SZ, _ID) / 2
IX = np.kron(_ID, _SX) / 2
IY = np.kron(_ID, _SY) / 2
IZ = np.kron(_ID, _SZ) / 2
IDENT4 = np.eye(4, dtype=complex)

# Full Pauli operators (eigenvalues +-1), convenient for drive terms.
XE = np.kron(_SX, _ID)
YE = np.kron(_SY, _ID)
XN = np.kron(_ID, _SX)
YN = np.kron(_ID, _SY)


def sigma_from_t2(t2_us: float) -> float:
    """Quasi-static Gaussian detuning std (kHz) equivalent to a Gaussian
    free-induction decay exp[-(t/T2)^2], with T2 in microseconds.

    sigma = 1 / (sqrt(2) * pi * T2), converted from MHz to kHz.
    """
    if t2_us <= 0:
        raise ValueError("T2 must be positive")
    return 1e3 / (SQRT2 * np.pi * t2_us)


@dataclass(frozen=True)
class SpinSystemParams:
    """Physical constants of the electron-nucleus pair.

    b_ext in tesla, gamma_e in GHz/T, gamma_n in MHz/T, hyperfine couplings
    in kHz. Gyromagnetic ratios and the hyperfine coupling are signed
    (all negative for the silicon system this package models).
    """

    b_ext: float = 1.42
    gamma_e: float = -28.0
    gamma_n: float = -8.458
    a_hf: float = -448.5
    a_spectator: float = -120.0
    electron_loaded: bool = True
    full_hamiltonian: bool = False

    def __post_init__(self):
        if self.b_ext <= 0:
            raise ValueError("b_ext must be positive")
        # High-field regime guard: electron Zeeman splitting must dominate
        # the hyperfine coupling or the secular approximation is invalid.
        if not self.full_hamiltonian and self.a_hf != 0:
            if abs(self.f_e0) < 100 * abs(self.a_hf) * 1e-3:
                raise ValueError(
                    "electron Zeeman splitting below 100x |a_hf|; set "
                    "full_hamiltonian=True to work outside the high-field regime"
                )

    @property
    def f_e0(self) -> float:
        """Bare electron Larmor frequency |gamma_e * B|, MHz."""
        return abs(self.gamma_e) * 1e3 * self.b_ext

    @property
    def f_n0(self) -> float:
        """Bare nuclear Larmor frequency |gamma_n * B|, MHz."""
        return abs(self.gamma_n) * self.b_ext

    @property
    def a_mhz(self) -> float:
        return self.a_hf * 1e-3


class QuantumState:
    """Pure state (4 amplitudes) or density matrix (4x4) of the joint system."""

    __slots__ = ("_vec", "_rho")

    def __init__(self, vector=None, matrix=None):
        if (vector is None) == (matrix is None):
            raise ValueError("provide exactly one of vector, matrix")
        if vector is not None:
            vec = np.asarray(vector, dtype=complex).reshape(4)
            norm = np.linalg.norm(vec)
            if abs(norm - 1.0) > 1e-10:
                raise ValueError(f"state vector norm {norm} differs from 1")
            self._vec = vec
            self._rho = None
        else:
            rho = np.asarray(matrix, dtype=complex).reshape(4, 4)
            if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
                raise ValueError("density matrix not Hermitian")
            if abs(np.trace(rho).real - 1.0) > 1e-10:
                raise ValueError("density matrix trace differs from 1")
            if np.min(np.linalg.eigvalsh(rho)) < -1e-10:
                raise ValueError("density matrix has negative eigenvalues")
            self._vec = None
            self._rho = rho

    # -- constructors -----------------------------------------------------
    @classmethod
    def basis(cls, electron: str, nucleus: str) -> "QuantumState":
        """Basis state from labels 'down'/'up' for each spin."""
        idx = 2 * _spin_index(electron) + _spin_index(nucleus)
        vec = np.zeros(4, dtype=complex)
        vec[idx] = 1.0
        return cls(vector=vec)

    # -- views -------------------------------------------------------------
    @property
    def is_pure(self) -> bool:
        return self._vec is not None

    @property
    def vector(self) -> np.ndarray:
        if self._vec is None:
            raise ValueError("state is a density matrix")
        return self._vec

    def density_matrix(self) -> np.ndarray:
        if self._rho is not None:
            return self._rho
        return np.outer(self._vec, self._vec.conj())

    def populations(self) -> np.ndarray:
        """Born probabilities of the four joint basis states."""
        return np.real(np.diag(self.density_matrix())).clip(0.0)

    def electron_populations(self) -> np.ndarray:
        p = self.populations()
        return np.array([p[0] + p[1], p[2] + p[3]])

    def nuclear_populations(self) -> np.ndarray:
        p = self.populations()
        return np.array([p[0] + p[2], p[1] + p[3]])


def _spin_index(label: str) -> int:
    try:
        return {"down": 0, "up": 1}[label]
    except KeyError:
        raise ValueError(f"spin label must be 'down' or 'up', got {label!r}")


@dataclass(frozen=True)
class Hamiltonian:
    """4x4 Hermitian matrix in frequency units (MHz), tagged with its frame.

    frame is 'lab' or a (f_e_ref, f_n_ref) tuple of rotating-frame reference
    frequencies in MHz.
    """

    matrix: np.ndarray
    frame: object = "lab"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError("Hamiltonian must be 4x4")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("Hamiltonian not Hermitian")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class NoiseModel:
    """Quasi-static Gaussian noise widths (kHz) plus the spectator-nucleus
    detuning channel.

    sigma_ix: drive-axis (I_x) offset; sigma_iz / sigma_sz: nuclear / electron
    detuning offsets. With probability spectator_flip_prob a run executes with
    the ESR line detuned by the spectator hyperfine coupling.
    """

    sigma_ix: float = 0.0
    sigma_iz: float = 0.0
    sigma_sz: float = 0.0
    spectator_flip_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if min(self.sigma_ix, self.sigma_iz, self.sigma_sz) < 0:
            raise ValueError("noise sigmas must be >= 0")
        if not 0 <= self.spectator_flip_prob <= 1:
            raise ValueError("spectator_flip_prob must be in [0, 1]")

    @classmethod
    def from_coherence_times(
        cls,
        t2_rabi_n_us: float | None = None,
        t2_star_n_us: float | None = None,
        t2_star_e_us: float | None = None,
        spectator_flip_prob: float = 0.0,
        seed: int = 0,
    ) -> "NoiseModel":
        """Build from coherence times (us) via sigma = 1/(sqrt(2) pi T2)."""
        return cls(
            sigma_ix=sigma_from_t2(t2_rabi_n_us) if t2_rabi_n_us else 0.0,
            sigma_iz=sigma_from_t2(t2_star_n_us) if t2_star_n_us else 0.0,
            sigma_sz=sigma_from_t2(t2_star_e_us) if t2_star_e_us else 0.0,
            spectator_flip_prob=spectator_flip_prob,
            seed=seed,
        )


@dataclass(frozen=True)
class NoiseDraw:
    """One quasi-static draw, frozen for an entire pulse sequence. All in kHz."""

    delta_ix: float = 0.0
    delta_iz: float = 0.0
    delta_sz: float = 0.0
    spectator_detuned: bool = False

    @property
    def delta_ix_mhz(self) -> float:
        return self.delta_ix * 1e-3

    @property
    def delta_iz_mhz(self) -> float:
        return self.delta_iz * 1e-3

    @property
    def delta_sz_mhz(self) -> float:
        return self.delta_sz * 1e-3


ZERO_DRAW = NoiseDraw()


def sample_noise(model: NoiseModel, rng: np.random.Generator) -> NoiseDraw:
    """Draw one quasi-static noise realisation."""
    return NoiseDraw(
        delta_ix=model.sigma_ix * rng.standard_normal() if model.sigma_ix else 0.0,
        delta_iz=model.sigma_iz * rng.standard_normal() if model.sigma_iz else 0.0,
        delta_sz=model.sigma_sz * rng.standard_normal() if model.sigma_sz else 0.0,
        spectator_detuned=bool(rng.random() < model.spectator_flip_prob),
    )


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based per-trial generator; trial results are order-independent."""
    return np.random.default_rng(np.random.SeedSequence((seed, trial_index)))


# ---------------------------------------------------------------------------
# Hamiltonians


def build_static_hamiltonian(params: SpinSystemParams, secular: bool = True) -> Hamiltonian:
    """Static (drive-free) Hamiltonian H = -B(gamma_e S_z + gamma_n I_z) + A(S.I).

    With the secular flag the hyperfine term is truncated to A S_z I_z
    (the flip-flop terms are negligible in the high-field regime). When the
    electron is not loaded the hyperfine term is absent entirely.
    """
    b = params.b_ext
    h = -b * (params.gamma_e * 1e3) * SZ - b * params.gamma_n * IZ
    if params.electron_loaded and params.a_hf != 0:
        a = params.a_mhz
        if secular:
            h = h + a * (SZ @ IZ)
        else:
            h = h + a * (SX @ IX + SY @ IY + SZ @ IZ)
    return Hamiltonian(matrix=h, frame="lab")


def transition_frequencies(params: SpinSystemParams) -> dict:
    """Labelled transition frequencies (MHz) under the secular approximation.

    Keys: f_e0 / f_n0 (bare Larmor), f_e_nuc_up / f_e_nuc_down (ESR line
    conditioned on the nuclear state), f_n_elec_up / f_n_elec_down (NMR line
    conditioned on the electron state). Unloaded, all conditional lines
    collapse onto the bare frequencies.
    """
    alpha = -params.b_ext * params.gamma_e * 1e3  # electron Zeeman term, MHz
    beta = -params.b_ext * params.gamma_n
    a = params.a_mhz if params.electron_loaded else 0.0
    return {
        "f_e0": abs(alpha),
        "f_n0": abs(beta),
        "f_e_nuc_up": abs(alpha + a / 2),
        "f_e_nuc_down": abs(alpha - a / 2),
        "f_n_elec_up": abs(beta + a / 2),
        "f_n_elec_down": abs(beta - a / 2),
    }


@dataclass(frozen=True)
class Drive:
    """One co-rotating drive tone. frequency in MHz, phase in degrees,
    rabi in kHz."""

    channel: str  # 'ESR' | 'NMR'
    frequency: float
    phase: float = 0.0
    rabi: float = 0.0

    def __post_init__(self):
        if self.channel not in ("ESR", "NMR"):
            raise ValueError("channel must be 'ESR' or 'NMR'")
        if self.rabi < 0:
            raise ValueError("rabi must be >= 0")


def drive_operator(channel: str, phase_deg: float) -> np.ndarray:
    """Co-rotating drive axis operator (full Pauli, eigenvalues +-1)."""
    phi = np.deg2rad(phase_deg)
    if channel == "ESR":
        return np.cos(phi) * XE + np.sin(phi) * YE
    return np.cos(phi) * XN + np.sin(phi) * YN


def rotating_frame_hamiltonian(
    params: SpinSystemParams,
    drive: Drive | None = None,
    noise_draw: NoiseDraw = ZERO_DRAW,
    frame: tuple | None = None,
    charge_config: str = "qd1",
    qd2_frequency_offset: float = 0.0,
) -> Hamiltonian:
    """RWA Hamiltonian in the frame rotating at (f_e_ref, f_n_ref).

    Contains the detuning terms (including the quasi-static noise offsets on
    I_z / S_z, the additive I_x drive-amplitude noise, and the spectator
    detuning on the ESR line) plus the co-rotating drive term at the stated
    phase; counter-rotating terms are dropped. The drive, when present, must
    be resonant with its frame reference - off-frame tones are handled by the
    sequence engine via exact frame-change rotations.
    """
    alpha = -params.b_ext * params.gamma_e * 1e3
    beta = -params.b_ext * params.gamma_n
    if charge_config == "qd2":
        alpha = alpha + qd2_frequency_offset
    if noise_draw.spectator_detuned:
        alpha = alpha + abs(params.a_spectator) * 1e-3
    if frame is None:
        frame = (abs(alpha), abs(beta))
    f_e_ref, f_n_ref = frame

    loaded = charge_config in ("qd1", "qd2")
    h = (alpha - f_e_ref) * SZ + (beta - f_n_ref) * IZ
    if loaded and charge_config == "qd1" and params.a_hf != 0:
        h = h + params.a_mhz * (SZ @ IZ)
    h = h + noise_draw.delta_sz_mhz * SZ + noise_draw.delta_iz_mhz * IZ
    if noise_draw.delta_ix:
        h = h + noise_draw.delta_ix_mhz * XN / 2

    if drive is not None and drive.rabi > 0:
        addressed = params.f_e0 if drive.channel == "ESR" else params.f_n0
        if drive.rabi * 1e-3 > 0.1 * addressed:
            raise ValueError(
                "Rabi frequency exceeds 10% of the addressed transition "
                "frequency; rotating wave approximation invalid"
            )
        h = h + (drive.rabi * 1e-3 / 2) * drive_operator(drive.channel, drive.phase)
    return Hamiltonian(matrix=h, frame=(f_e_ref, f_n_ref))


# ---------------------------------------------------------------------------
# Propagation and channels


def unitary(h: Hamiltonian | np.ndarray, dt_us: float) -> np.ndarray:
    """Exact propagator U = exp(-2*pi*i H dt) via Hermitian eigendecomposition."""
    m = h.matrix if isinstance(h, Hamiltonian) else np.asarray(h, dtype=complex)
    w, v = np.linalg.eigh(m)
    phases = np.exp(-2j * np.pi * w * dt_us)
    return (v * phases) @ v.conj().T


def propagate(state: QuantumState, h: Hamiltonian, dt_us: float) -> QuantumState:
    """Evolve a state under a piecewise-constant Hamiltonian for dt_us."""
    if dt_us <= 0:
        raise ValueError("dt must be positive")
    u = unitary(h, dt_us)
    if state.is_pure:
        return QuantumState(vector=u @ state.vector)
    return QuantumState(matrix=u @ state.density_matrix() @ u.conj().T)


# Masks selecting coherences of one subsystem: element (i, j) is scaled iff the
# chosen subsystem's index differs between i and j.
_ELECTRON_IDX = np.array([0, 0, 1, 1])
_NUCLEAR_IDX = np.array([0, 1, 0, 1])
_MASK_ELECTRON = (_ELECTRON_IDX[:, None] != _ELECTRON_IDX[None, :])
_MASK_NUCLEAR = (_NUCLEAR_IDX[:, None] != _NUCLEAR_IDX[None, :])


def apply_dephasing_channel(state: QuantumState, p_err: float, subsystem: str) -> QuantumState:
    """Dephasing channel rho -> (1-p) rho + p diag_subsystem(rho).

    Scales every coherence of the chosen subsystem by (1 - p_err); the
    diagonal (and the other subsystem's internal coherences) are untouched.
    """
    if not 0 <= p_err <= 1:
        raise ValueError("p_err must be in [0, 1]")
    if subsystem == "electron":
        mask = _MASK_ELECTRON
    elif subsystem == "nuclear":
        mask = _MASK_NUCLEAR
    else:
        raise ValueError("subsystem must be 'electron' or 'nuclear'")
    rho = state.density_matrix()
    rho = np.where(mask, (1.0 - p_err) * rho, rho)
    return QuantumState(matrix=rho)


def partial_trace_electron(rho: np.ndarray) -> np.ndarray:
    """Trace out the electron, returning the 2x2 nuclear density matrix."""
    return rho.reshape(2, 2, 2, 2).trace(axis1=0, axis2=2)


def partial_trace_nucleus(rho: np.ndarray) -> np.ndarray:
    """Trace out the nucleus, returning the 2x2 electron density matrix."""
    return rho.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
