"""Control timelines: pulses, free evolution, charge events, measurements.

All elements are immutable values; builders are pure functions of their
inputs, so identical inputs produce element-wise identical timelines.
Durations are in microseconds, frequencies in MHz, Rabi rates in kHz,
phases in degrees.

Charge configurations: 'unloaded' (no electron), 'qd1' (electron on the dot
hosting the nucleus, hyperfine active), 'qd2' (electron on the neighbouring
dot, hyperfine off, ESR shifted by the inter-dot g-factor difference).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .core import SpinSystemParams, transition_frequencies

LOADED_CONFIGS = ("qd1", "qd2")
CHARGE_CONFIGS = ("unloaded",) + LOADED_CONFIGS

# Charge-event kinds and the (pre, post) configurations they connect.
_EVENT_TRANSITIONS = {
    "load_down": ("unloaded", "qd1"),
    "load_up": ("unloaded", "qd1"),
    "unload": (LOADED_CONFIGS, "unloaded"),
    "shuttle_1_to_2": ("qd1", "qd2"),
    "shuttle_2_to_1": ("qd2", "qd1"),
}


@dataclass(frozen=True)
class Pulse:
    """Drive pulse. Optional linear chirp sweeps frequency f_start -> f_stop
    over the pulse duration (the `frequency` field then sets the frame
    centre and is ignored for the instantaneous tone)."""

    channel: str  # 'ESR' | 'NMR'
    frequency: float
    rabi: float
    duration: float
    phase: float = 0.0
    chirp: tuple | None = None  # (f_start, f_stop) in MHz

    def __post_init__(self):
        if self.channel not in ("ESR", "NMR"):
            raise ValueError("channel must be 'ESR' or 'NMR'")
        if self.duration <= 0:
            raise ValueError("pulse duration must be positive")
        if self.rabi < 0:
            raise ValueError("rabi must be >= 0")
        if self.chirp is not None:
            object.__setattr__(self, "chirp", tuple(self.chirp))


@dataclass(frozen=True)
class Rotation:
    """Idealised instantaneous rotation of one subsystem (both hyperfine
    manifolds), used where pulse imperfections are not under study."""

    channel: str  # 'ESR' | 'NMR'
    angle: float  # degrees
    phase: float = 0.0

    def __post_init__(self):
        if self.channel not in ("ESR", "NMR"):
            raise ValueError("channel must be 'ESR' or 'NMR'")


@dataclass(frozen=True)
class FreeEvolution:
    duration: float
    charge_config: str = "unloaded"

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("duration must be >= 0")
        if self.charge_config not in CHARGE_CONFIGS:
            raise ValueError(f"unknown charge config {self.charge_config!r}")


@dataclass(frozen=True)
class ChargeEvent:
    """Load/unload/shuttle event. The ideal simulator treats these as
    instantaneous frame changes; ramp_time is carried for bookkeeping and
    for user-supplied dephasing tables. dephase_prob applies a dephasing
    channel to dephase_target when the event executes."""

    kind: str
    ramp_time: float = 1.0
    dephase_prob: float = 0.0
    dephase_target: str = "nuclear"

    def __post_init__(self):
        if self.kind not in _EVENT_TRANSITIONS:
            raise ValueError(f"unknown charge event kind {self.kind!r}")
        if not 0 <= self.dephase_prob <= 1:
            raise ValueError("dephase_prob must be in [0, 1]")
        if self.dephase_target not in ("nuclear", "electron"):
            raise ValueError("dephase_target must be 'nuclear' or 'electron'")


@dataclass(frozen=True)
class MeasureElectron:
    pass


@dataclass(frozen=True)
class MeasureNuclear:
    shots: int = 1

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")


_ELEMENT_TYPES = {
    "pulse": Pulse,
    "rotation": Rotation,
    "free": FreeEvolution,
    "charge": ChargeEvent,
    "measure_electron": MeasureElectron,
    "measure_nuclear": MeasureNuclear,
}
_TYPE_NAMES = {cls: name for name, cls in _ELEMENT_TYPES.items()}


@dataclass(frozen=True)
class PulseSequence:
    """Ordered control timeline plus the per-channel rotating-frame
    references (f_e_ref, f_n_ref, MHz) the engine simulates it in."""

    elements: tuple
    f_e_ref: float
    f_n_ref: float
    initial_config: str = "unloaded"
    qd2_frequency_offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if self.initial_config not in CHARGE_CONFIGS:
            raise ValueError(f"unknown charge config {self.initial_config!r}")
        validate_sequence(self)

    @property
    def total_duration(self) -> float:
        """Sum of element durations, exactly (charge events and ideal
        rotations are instantaneous)."""
        total = 0.0
        for el in self.elements:
            if isinstance(el, (Pulse, FreeEvolution)):
                total += el.duration
        return total

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "f_e_ref": self.f_e_ref,
            "f_n_ref": self.f_n_ref,
            "initial_config": self.initial_config,
            "qd2_frequency_offset": self.qd2_frequency_offset,
            "elements": [
                {"type": _TYPE_NAMES[type(el)], **asdict(el)} for el in self.elements
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PulseSequence":
        elements = []
        for spec in data["elements"]:
            spec = dict(spec)
            cls_ = _ELEMENT_TYPES[spec.pop("type")]
            elements.append(cls_(**spec))
        return cls(
            elements=tuple(elements),
            f_e_ref=data["f_e_ref"],
            f_n_ref=data["f_n_ref"],
            initial_config=data.get("initial_config", "unloaded"),
            qd2_frequency_offset=data.get("qd2_frequency_offset", 0.0),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PulseSequence":
        return cls.from_dict(json.loads(text))


def validate_sequence(seq: PulseSequence) -> None:
    """Check charge-configuration consistency along the timeline.

    ESR requires a loaded electron; NMR is allowed in any configuration;
    loading into an already-loaded configuration is rejected.
    """
    config = seq.initial_config
    for i, el in enumerate(seq.elements):
        if isinstance(el, (Pulse, Rotation)):
            if el.channel == "ESR" and config not in LOADED_CONFIGS:
                raise ValueError(f"element {i}: ESR pulse with no electron loaded")
        elif isinstance(el, FreeEvolution):
            if el.charge_config != config:
                raise ValueError(
                    f"element {i}: free evolution declared in {el.charge_config!r} "
                    f"but sequence is in {config!r}"
                )
        elif isinstance(el, ChargeEvent):
            pre, post = _EVENT_TRANSITIONS[el.kind]
            allowed = pre if isinstance(pre, tuple) else (pre,)
            if config not in allowed:
                raise ValueError(
                    f"element {i}: charge event {el.kind!r} invalid from {config!r}"
                )
            config = post


# ---------------------------------------------------------------------------
# Builders

#: Default drive strengths for the built-in protocols.
DEFAULT_ESR_RABI = 100.0  # kHz
DEFAULT_NMR_RABI = 2.0  # kHz
DEFAULT_PULSE_GAP = 0.2  # us, source-switching dead time between pulses
BELL_NMR_RABI = 1.0  # kHz, slower conditional NMR drive used in the entangler

ADIABATIC_DURATION = 650.0  # us
ADIABATIC_RABI = 100.0  # kHz
BROADBAND_SPAN = 2.8  # MHz


def pi_duration(rabi_khz: float) -> float:
    """pi-pulse duration (us) from Rabi frequency (kHz): t_pi = 1/(2 Omega)."""
    return 1e3 / (2 * rabi_khz)


def adiabatic_inversion(params: SpinSystemParams, target_line: str) -> Pulse:
    """Chirped ESR inversion pulse.

    Conditional lines sweep 350 kHz asymmetrically about the line (300 kHz
    below to 50 kHz above for the nuclear-up line, mirrored for nuclear-down);
    'broadband' sweeps 2.8 MHz symmetrically about the bare line, inverting
    the electron for either nuclear state.
    """
    freqs = transition_frequencies(params)
    if target_line == "f_e_nuc_up":
        line = freqs["f_e_nuc_up"]
        chirp = (line - 0.300, line + 0.050)
    elif target_line == "f_e_nuc_down":
        line = freqs["f_e_nuc_down"]
        chirp = (line - 0.050, line + 0.300)
    elif target_line == "broadband":
        line = freqs["f_e0"]
        chirp = (line - BROADBAND_SPAN / 2, line + BROADBAND_SPAN / 2)
    else:
        raise ValueError(f"unknown target line {target_line!r}")
    return Pulse(
        channel="ESR",
        frequency=(chirp[0] + chirp[1]) / 2,
        rabi=ADIABATIC_RABI,
        duration=ADIABATIC_DURATION,
        chirp=chirp,
    )


def _phase_pair(phase) -> tuple:
    if np.isscalar(phase):
        return (float(phase), float(phase))
    a, b = phase
    return (float(a), float(b))


def synchronized_esr_rabi(params: SpinSystemParams, k: int = 3) -> float:
    """Conditional-pulse Rabi frequency (kHz) synchronised with the
    hyperfine splitting: Omega = |A|/sqrt(4k^2 - 1), so that during a
    resonant pi/2 (pi) pulse the off-resonant manifold completes exactly
    k/2 (k) full generalised-Rabi cycles and returns to its pole. Larger k
    is slower but more selective."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return abs(params.a_hf) / np.sqrt(4.0 * k * k - 1.0)


def bell_circuit(
    params: SpinSystemParams,
    projection: tuple | None = None,
    esr_rabi: float | None = None,
    nmr_rabi: float = BELL_NMR_RABI,
    duration_scale: float = 1.0,
    gap: float = DEFAULT_PULSE_GAP,
) -> PulseSequence:
    """Entangling circuit preparing (|down,Down> + |up,Up>)/sqrt(2) from
    |down,Down>, with optional X-Y-plane projection pulses.

    The entangler is a conditional NMR pi/2 on the electron-down line
    followed by a conditional ESR pi on the nuclear-up line. Unconditional
    projection rotations are built from two consecutive conditional
    rotations. projection is (phi_n, phi_e) in degrees; each entry may be a
    scalar or a per-conditional-line pair (the two consecutive conditional
    pulses accumulate different deterministic phases, which the tomography
    driver calibrates out per line). The electron projection precedes the
    nuclear one so that the electron spends the least possible time in a
    superposition.

    esr_rabi defaults to the splitting-synchronised value, which suppresses
    off-resonant driving of the spectator ESR line. duration_scale
    multiplies every pulse duration (models pulse-length calibration error).
    gap is the dead time between consecutive pulses from the source
    switching; the joint two-qubit coherence is exposed to electron
    dephasing during these idle windows.
    """
    f = transition_frequencies(params)
    if esr_rabi is None:
        esr_rabi = synchronized_esr_rabi(params)
    t_pi_e = pi_duration(esr_rabi) * duration_scale
    t_pi_n = pi_duration(nmr_rabi) * duration_scale
    idle = [FreeEvolution(gap, "qd1")] if gap > 0 else []

    elements = [
        ChargeEvent(kind="load_down"),
        # Conditional NMR pi/2 on the electron-down line: nuclear superposition.
        Pulse("NMR", f["f_n_elec_down"], nmr_rabi, t_pi_n / 2),
        *idle,
        # Conditional ESR pi on the nuclear-up line: entangler.
        Pulse("ESR", f["f_e_nuc_up"], esr_rabi, t_pi_e),
    ]
    if projection is not None:
        phi_n, phi_e = (_phase_pair(p) for p in projection)
        elements += [
            *idle,
            # Unconditional electron pi/2 from two conditional pi/2 pulses.
            Pulse("ESR", f["f_e_nuc_up"], esr_rabi, t_pi_e / 2, phase=phi_e[0]),
            Pulse("ESR", f["f_e_nuc_down"], esr_rabi, t_pi_e / 2, phase=phi_e[1]),
            *idle,
            # Unconditional nuclear pi/2 from two conditional pi/2 pulses.
            Pulse("NMR", f["f_n_elec_down"], nmr_rabi, t_pi_n / 2, phase=phi_n[0]),
            Pulse("NMR", f["f_n_elec_up"], nmr_rabi, t_pi_n / 2, phase=phi_n[1]),
        ]
    elements += [MeasureNuclear(), MeasureElectron()]
    return PulseSequence(
        elements=tuple(elements),
        f_e_ref=f["f_e0"],
        f_n_ref=f["f_n0"],
        initial_config="unloaded",
    )


def ramsey_sequence(
    params: SpinSystemParams,
    tau: float,
    detuning_khz: float = 0.0,
    final_phase: float = 0.0,
    charge_config: str = "unloaded",
    ideal_pulses: bool = True,
    nmr_rabi: float = DEFAULT_NMR_RABI,
) -> PulseSequence:
    """Nuclear Ramsey: pi/2 - free(tau) - pi/2(phase) - measure.

    The detuning is implemented by offsetting the nuclear frame reference, so
    the coherence precesses at `detuning_khz` during free evolution.
    """
    f = transition_frequencies(params)
    line = f["f_n_elec_down"] if charge_config == "qd1" else f["f_n0"]
    f_n_ref = line - detuning_khz * 1e-3
    elements = []
    if charge_config == "qd1":
        elements.append(ChargeEvent(kind="load_down"))
    if ideal_pulses:
        halfpi = Rotation("NMR", 90.0)
        halfpi_final = Rotation("NMR", 90.0, phase=final_phase)
    else:
        halfpi = Pulse("NMR", line, nmr_rabi, pi_duration(nmr_rabi) / 2)
        halfpi_final = Pulse(
            "NMR", line, nmr_rabi, pi_duration(nmr_rabi) / 2, phase=final_phase
        )
    elements += [
        halfpi,
        FreeEvolution(tau, charge_config),
        halfpi_final,
        MeasureNuclear(),
    ]
    return PulseSequence(
        elements=tuple(elements),
        f_e_ref=f["f_e0"],
        f_n_ref=f_n_ref,
        initial_config="unloaded",
    )


def hahn_sequence(
    params: SpinSystemParams,
    tau: float,
    detuning_khz: float = 0.0,
    final_phase: float = 0.0,
    charge_config: str = "unloaded",
    ideal_pulses: bool = True,
    nmr_rabi: float = DEFAULT_NMR_RABI,
) -> PulseSequence:
    """Nuclear Hahn echo: pi/2 - tau - pi - tau - pi/2(phase) - measure.

    tau is the half-interval (total free evolution 2*tau).
    """
    f = transition_frequencies(params)
    line = f["f_n_elec_down"] if charge_config == "qd1" else f["f_n0"]
    f_n_ref = line - detuning_khz * 1e-3
    elements = []
    if charge_config == "qd1":
        elements.append(ChargeEvent(kind="load_down"))
    if ideal_pulses:
        halfpi = Rotation("NMR", 90.0)
        refocus = Rotation("NMR", 180.0)
        halfpi_final = Rotation("NMR", 90.0, phase=final_phase)
    else:
        t_pi = pi_duration(nmr_rabi)
        halfpi = Pulse("NMR", line, nmr_rabi, t_pi / 2)
        refocus = Pulse("NMR", line, nmr_rabi, t_pi)
        halfpi_final = Pulse("NMR", line, nmr_rabi, t_pi / 2, phase=final_phase)
    elements += [
        halfpi,
        FreeEvolution(tau, charge_config),
        refocus,
        FreeEvolution(tau, charge_config),
        halfpi_final,
        MeasureNuclear(),
    ]
    return PulseSequence(
        elements=tuple(elements),
        f_e_ref=f["f_e0"],
        f_n_ref=f_n_ref,
        initial_config="unloaded",
    )


def shuttle_ramsey_sequence(
    params: SpinSystemParams,
    t_load: float,
    tau_0: float,
    p_err: float = 0.0,
    final_phase: float = 0.0,
) -> PulseSequence:
    """Nuclear Ramsey with the electron moved onto the nucleus's dot for
    t_load out of a fixed total precession time tau_0.

    The electron starts spin-down on the neighbouring dot; while it sits on
    QD1 the nuclear precession picks up the electron-state-dependent
    hyperfine detuning (|A|/2 for spin-down). p_err is the dephasing
    probability per load/unload cycle, applied on the cycle-completing event.
    """
    if not 0 <= t_load <= tau_0:
        raise ValueError("t_load must satisfy 0 <= t_load <= tau_0")
    f = transition_frequencies(params)
    t_side = (tau_0 - t_load) / 2
    elements = [
        Rotation("NMR", 90.0),
        FreeEvolution(t_side, "qd2"),
        ChargeEvent(kind="shuttle_2_to_1"),
        FreeEvolution(t_load, "qd1"),
        ChargeEvent(kind="shuttle_1_to_2", dephase_prob=p_err),
        FreeEvolution(t_side, "qd2"),
        Rotation("NMR", 90.0, phase=final_phase),
        MeasureNuclear(),
    ]
    return PulseSequence(
        elements=tuple(elements),
        f_e_ref=f["f_e0"],
        f_n_ref=f["f_n0"],
        initial_config="qd2",
    )


def repeated_load_sequence(
    params: SpinSystemParams,
    k_cycles: int,
    tau_0: float,
    p_err: float = 0.0,
    final_phase: float = 0.0,
) -> PulseSequence:
    """Nuclear Ramsey with k load/unload cycles during a fixed precession
    time tau_0. The per-cycle dephasing probability p_err is applied once
    per completed cycle (on the unloading shuttle)."""
    if k_cycles < 0:
        raise ValueError("k_cycles must be >= 0")
    f = transition_frequencies(params)
    elements = [Rotation("NMR", 90.0)]
    if k_cycles == 0:
        elements.append(FreeEvolution(tau_0, "qd2"))
    else:
        dwell = tau_0 / (2 * k_cycles)
        for _ in range(k_cycles):
            elements += [
                ChargeEvent(kind="shuttle_2_to_1"),
                FreeEvolution(dwell, "qd1"),
                ChargeEvent(kind="shuttle_1_to_2", dephase_prob=p_err),
                FreeEvolution(dwell, "qd2"),
            ]
    elements += [Rotation("NMR", 90.0, phase=final_phase), MeasureNuclear()]
    return PulseSequence(
        elements=tuple(elements),
        f_e_ref=f["f_e0"],
        f_n_ref=f["f_n0"],
        initial_config="qd2",
    )


def electron_shuttle_ramsey(
    params: SpinSystemParams,
    final_phase: float = 0.0,
    t_ramp: float = 1.0,
    p_transfer: float = 0.0,
    qd2_frequency_offset: float = 2.0,
    esr_rabi: float = DEFAULT_ESR_RABI,
    ideal_pulses: bool = True,
) -> PulseSequence:
    """Electron Ramsey across a shuttle: first pi/2 with the electron on QD1,
    second pi/2 at the (g-factor shifted) QD2 frequency after the transfer.

    p_transfer is the electron dephasing probability of the shuttle, the
    knob that sets the fringe visibility.
    """
    f = transition_frequencies(params)
    if ideal_pulses:
        first = Rotation("ESR", 90.0)
        second = Rotation("ESR", 90.0, phase=final_phase)
    else:
        t_half = pi_duration(esr_rabi) / 2
        first = Pulse("ESR", f["f_e_nuc_down"], esr_rabi, t_half)
        second = Pulse(
            "ESR", f["f_e0"] + qd2_frequency_offset, esr_rabi, t_half, phase=final_phase
        )
    elements = [
        first,
        ChargeEvent(
            kind="shuttle_1_to_2",
            ramp_time=t_ramp,
            dephase_prob=p_transfer,
            dephase_target="electron",
        ),
        second,
        MeasureElectron(),
    ]
    return PulseSequence(
        elements=tuple(elements),
        f_e_ref=f["f_e_nuc_down"],
        f_n_ref=f["f_n0"],
        initial_config="qd1",
        qd2_frequency_offset=qd2_frequency_offset,
    )
