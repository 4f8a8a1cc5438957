"""Timeline construction, validation and serialization."""

import numpy as np
import pytest

from dotspin.core import SpinSystemParams, transition_frequencies
from dotspin.sequences import (
    ChargeEvent,
    FreeEvolution,
    MeasureNuclear,
    Pulse,
    PulseSequence,
    Rotation,
    adiabatic_inversion,
    bell_circuit,
    electron_shuttle_ramsey,
    hahn_sequence,
    pi_duration,
    ramsey_sequence,
    repeated_load_sequence,
    shuttle_ramsey_sequence,
    synchronized_esr_rabi,
)

PARAMS = SpinSystemParams()


class TestElements:
    def test_pulse_validation(self):
        with pytest.raises(ValueError):
            Pulse("XYZ", 12.0, 2.0, 100.0)
        with pytest.raises(ValueError):
            Pulse("NMR", 12.0, 2.0, -1.0)
        with pytest.raises(ValueError):
            Pulse("NMR", 12.0, -2.0, 1.0)

    def test_charge_event_validation(self):
        with pytest.raises(ValueError):
            ChargeEvent(kind="teleport")
        with pytest.raises(ValueError):
            ChargeEvent(kind="unload", dephase_prob=2.0)

    def test_measure_shots(self):
        with pytest.raises(ValueError):
            MeasureNuclear(shots=0)


class TestValidation:
    def test_esr_requires_loaded_electron(self):
        f = transition_frequencies(PARAMS)
        with pytest.raises(ValueError, match="no electron"):
            PulseSequence(
                elements=(Pulse("ESR", f["f_e0"], 100.0, 5.0),),
                f_e_ref=f["f_e0"],
                f_n_ref=f["f_n0"],
                initial_config="unloaded",
            )

    def test_double_load_rejected(self):
        f = transition_frequencies(PARAMS)
        with pytest.raises(ValueError, match="invalid from"):
            PulseSequence(
                elements=(ChargeEvent(kind="load_down"),
                          ChargeEvent(kind="load_down")),
                f_e_ref=f["f_e0"],
                f_n_ref=f["f_n0"],
                initial_config="unloaded",
            )

    def test_free_evolution_config_must_match(self):
        f = transition_frequencies(PARAMS)
        with pytest.raises(ValueError, match="free evolution"):
            PulseSequence(
                elements=(FreeEvolution(10.0, "qd1"),),
                f_e_ref=f["f_e0"],
                f_n_ref=f["f_n0"],
                initial_config="unloaded",
            )


class TestBuilders:
    def test_pi_duration(self):
        assert pi_duration(2.0) == pytest.approx(250.0)

    def test_synchronized_rabi(self):
        # off-resonant manifold completes k generalised-Rabi cycles per pi
        for k in (1, 2, 3):
            omega = synchronized_esr_rabi(PARAMS, k)
            t_pi = pi_duration(omega)
            omega_gen = np.hypot(omega, 448.5)  # kHz
            cycles = omega_gen * 1e-3 * t_pi
            assert cycles == pytest.approx(k, rel=1e-12)
        with pytest.raises(ValueError):
            synchronized_esr_rabi(PARAMS, 0)

    def test_adiabatic_inversion_spans(self):
        f = transition_frequencies(PARAMS)
        up = adiabatic_inversion(PARAMS, "f_e_nuc_up")
        assert up.chirp == pytest.approx(
            (f["f_e_nuc_up"] - 0.300, f["f_e_nuc_up"] + 0.050)
        )
        assert up.duration == 650.0 and up.rabi == 100.0
        broad = adiabatic_inversion(PARAMS, "broadband")
        assert broad.chirp[1] - broad.chirp[0] == pytest.approx(2.8)
        with pytest.raises(ValueError):
            adiabatic_inversion(PARAMS, "f_x")

    def test_bell_circuit_structure(self):
        seq = bell_circuit(PARAMS)
        kinds = [type(el).__name__ for el in seq.elements]
        assert kinds[0] == "ChargeEvent"
        pulses = [el for el in seq.elements if isinstance(el, Pulse)]
        assert [p.channel for p in pulses] == ["NMR", "ESR"]
        f = transition_frequencies(PARAMS)
        assert pulses[0].frequency == pytest.approx(f["f_n_elec_down"])
        assert pulses[1].frequency == pytest.approx(f["f_e_nuc_up"])
        # the conditional ESR pi is a full pi, the NMR a half pi
        assert pulses[1].duration == pytest.approx(
            pi_duration(synchronized_esr_rabi(PARAMS))
        )

    def test_bell_circuit_projection_adds_four_pulses(self):
        plain = bell_circuit(PARAMS)
        proj = bell_circuit(PARAMS, projection=((0.0, 0.0), (0.0, 0.0)))
        n_plain = sum(isinstance(el, Pulse) for el in plain.elements)
        n_proj = sum(isinstance(el, Pulse) for el in proj.elements)
        assert n_proj == n_plain + 4
        # electron projection pulses come before the nuclear ones
        channels = [el.channel for el in proj.elements if isinstance(el, Pulse)]
        assert channels == ["NMR", "ESR", "ESR", "ESR", "NMR", "NMR"]

    def test_bell_duration_scale(self):
        base = bell_circuit(PARAMS)
        scaled = bell_circuit(PARAMS, duration_scale=1.05)
        assert scaled.total_duration > base.total_duration

    def test_ramsey_frame_detuning(self):
        seq = ramsey_sequence(PARAMS, tau=100.0, detuning_khz=2.0)
        f = transition_frequencies(PARAMS)
        assert seq.f_n_ref == pytest.approx(f["f_n0"] - 0.002)

    def test_hahn_total_free_time(self):
        seq = hahn_sequence(PARAMS, tau=500.0)
        free = sum(el.duration for el in seq.elements
                   if isinstance(el, FreeEvolution))
        assert free == pytest.approx(1000.0)

    def test_shuttle_ramsey_time_budget(self):
        seq = shuttle_ramsey_sequence(PARAMS, t_load=120.0, tau_0=500.0)
        assert seq.total_duration == pytest.approx(500.0)
        configs = [el.charge_config for el in seq.elements
                   if isinstance(el, FreeEvolution)]
        assert configs == ["qd2", "qd1", "qd2"]
        with pytest.raises(ValueError):
            shuttle_ramsey_sequence(PARAMS, t_load=600.0, tau_0=500.0)

    def test_repeated_load_cycles(self):
        seq = repeated_load_sequence(PARAMS, k_cycles=5, tau_0=500.0, p_err=0.1)
        events = [el for el in seq.elements if isinstance(el, ChargeEvent)]
        assert len(events) == 10
        unloads = [e for e in events if e.kind == "shuttle_1_to_2"]
        assert all(e.dephase_prob == 0.1 for e in unloads)
        assert seq.total_duration == pytest.approx(500.0)

    def test_electron_shuttle_targets_electron(self):
        seq = electron_shuttle_ramsey(PARAMS, p_transfer=0.3)
        event = next(el for el in seq.elements if isinstance(el, ChargeEvent))
        assert event.dephase_target == "electron"
        assert event.dephase_prob == 0.3


class TestSerialization:
    @pytest.mark.parametrize("build", [
        lambda: bell_circuit(PARAMS, projection=((10.0, 20.0), (30.0, 40.0))),
        lambda: ramsey_sequence(PARAMS, 100.0, 2.0, charge_config="qd1"),
        lambda: hahn_sequence(PARAMS, 500.0, ideal_pulses=False),
        lambda: shuttle_ramsey_sequence(PARAMS, 50.0, 500.0, p_err=0.01),
        lambda: electron_shuttle_ramsey(PARAMS, 45.0, p_transfer=0.2),
    ])
    def test_json_round_trip_lossless(self, build):
        seq = build()
        restored = PulseSequence.from_json(seq.to_json())
        assert restored == seq
