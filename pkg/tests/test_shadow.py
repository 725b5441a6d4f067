"""Tests for the shadow-lattice repair function and presets."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anyonsim.shadow import (
    RepairSpec,
    ShadowGroup,
    edge_primary_set,
    group_transfer_rate,
    lowest_secondary_energy,
    parse_spec_file,
    peak_rate,
    repair_rate,
    scale_primary,
    table_one_preset,
    with_edge_group,
    write_spec_file,
)


def single_qubit_spec(omega, coupling, gamma_s):
    return RepairSpec(groups=(ShadowGroup(gamma_s, ((omega, coupling),)),), label="1q")


class TestRepairRate:
    def test_single_qubit_resonance_closed_form(self):
        # at dE = -omega: Gamma_R = 4 O^2 G / (4 O^2 + G^2); O = G = x gives 0.8x
        for x in (0.05, 0.33, 1.7):
            spec = single_qubit_spec(omega=4.0, coupling=x, gamma_s=x)
            assert repair_rate(spec, -4.0) == pytest.approx(0.8 * x, rel=1e-12)

    def test_resonance_general_closed_form(self):
        omega, o, g = 7.3, 0.21, 0.045
        spec = single_qubit_spec(omega, o, g)
        assert repair_rate(spec, -omega) == pytest.approx(
            4 * o * o * g / (4 * o * o + g * g), rel=1e-12
        )

    def test_zero_coupling(self):
        spec = single_qubit_spec(4.0, 0.0, 0.1)
        de = np.linspace(-80, 80, 101)
        assert np.all(repair_rate(spec, de) == 0)

    def test_group5_resonance_contribution(self):
        # Table I mu/J=-0.1 at dE=-0.1: the q5 term alone gives
        # (4*0.005^2/0.0045) * 0.0045 / ((4*0.005^2/0.0045) + 0.0045) ~ 3.74e-3,
        # and the full preset exceeds it through neighboring tails.
        gps5 = 4 * 0.005**2 / 0.0045
        lone = gps5 * 0.0045 / (gps5 + 0.0045)
        assert lone == pytest.approx(3.742e-3, rel=1e-3)
        spec = table_one_preset(-0.1)
        assert repair_rate(spec, -0.1) > lone

    def test_bounded_by_total_gamma_s(self):
        spec = table_one_preset(-0.2)
        cap = sum(g.gamma_s for g in spec.groups)
        de = np.linspace(-70, 70, 20011)
        rates = repair_rate(spec, de)
        assert np.all(rates >= 0)
        assert np.all(rates < cap)

    def test_lorentzian_symmetry(self):
        grp = ShadowGroup(0.08, ((5.0, 0.3),))
        for x in (0.001, 0.3, 2.0, 40.0):
            assert group_transfer_rate(grp, -5.0 + x) == group_transfer_rate(grp, -5.0 - x)

    def test_shadow_induced_error_suppression(self):
        # Gamma_PS(+w)/Gamma_PS(-w) = (G^2/4) / ((2w)^2 + G^2/4)
        omega, g = 12.0, 0.33
        grp = ShadowGroup(g, ((omega, 0.25),))
        ratio = group_transfer_rate(grp, omega) / group_transfer_rate(grp, -omega)
        assert ratio == pytest.approx((g * g / 4) / ((2 * omega) ** 2 + g * g / 4), rel=1e-12)

    def test_peak_locations_on_grid(self):
        # Local maxima of the preset curves sit within one 1e-3 step of the
        # -omega_mn resonances for the isolated (secondary) qubits; the two
        # primary qubits pull on each other through their wide Lorentzian
        # tails, so their maxima are only pinned to a small fraction of the
        # linewidth.
        for mu in (-0.1, -0.2, -0.4):
            spec = table_one_preset(mu)
            de = np.arange(-60.0, 0.5, 1e-3)
            rates = repair_rate(spec, de)
            interior = (rates[1:-1] > rates[:-2]) & (rates[1:-1] >= rates[2:])
            maxima = de[1:-1][interior]
            for g in spec.groups:
                for w, _ in g.qubits:
                    offset = np.min(np.abs(maxima + w))
                    if g.role == "secondary":
                        assert offset <= 1e-3 + 1e-9
                    else:
                        assert offset <= 0.3 * g.gamma_s
                        # the rate at the design resonance stays near-peak
                        local = np.arange(-w - 0.3, -w + 0.3, 1e-4)
                        assert repair_rate(spec, -w) >= 0.95 * repair_rate(spec, local).max()

    def test_monotone_saturation_single_group(self):
        # Gamma_R = G_PS*G_S/(G_PS+G_S) increases with G_PS at fixed G_S
        gs = 0.02
        gps = np.linspace(0, 5, 200)
        gr = gps * gs / (gps + gs)
        assert np.all(np.diff(gr) > 0)

    @given(
        st.floats(min_value=0.01, max_value=5.0),
        st.floats(min_value=1e-3, max_value=1.0),
        st.floats(min_value=0.0, max_value=2.0),
        st.floats(min_value=-100.0, max_value=100.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_single_group_bound_property(self, omega, gamma_s, coupling, de):
        spec = RepairSpec(groups=(ShadowGroup(gamma_s, ((omega, coupling),)),))
        r = repair_rate(spec, de)
        assert 0 <= r < gamma_s or (coupling == 0 and r == 0)


class TestPresets:
    def test_group_structure(self):
        spec = table_one_preset(-0.1)
        sizes = [len(g.qubits) for g in spec.groups]
        gammas = [g.gamma_s for g in spec.groups]
        assert sizes == [1, 1, 2, 5]
        assert gammas == [0.33, 0.2, 0.02, 0.0045]
        assert [g.role for g in spec.groups] == ["primary", "primary", "secondary", "secondary"]

    def test_tabulated_values(self):
        spec = table_one_preset(-0.1)
        assert spec.groups[0].qubits[0] == (59.33, 0.33)
        q4 = table_one_preset(-0.4).groups[2].qubits[1]
        assert q4 == (0.13, 0.0085)
        q9 = table_one_preset(-0.2).groups[3].qubits[4]
        assert q9 == (0.04, 0.004)

    def test_rejects_unknown_ratio(self):
        with pytest.raises(ValueError):
            table_one_preset(-0.3)

    def test_no_overlap_warning_for_presets(self, recwarn):
        for mu in (-0.1, -0.2, -0.4):
            table_one_preset(mu)
        assert not [w for w in recwarn if "shadow groups" in str(w.message)]

    def test_overlapping_groups_warn(self):
        with pytest.warns(UserWarning, match="shadow groups"):
            RepairSpec(
                groups=(
                    ShadowGroup(0.2, ((1.0, 0.1),)),
                    ShadowGroup(0.2, ((1.05, 0.1),)),
                )
            )

    def test_lowest_secondary_energy(self):
        assert lowest_secondary_energy(table_one_preset(-0.1)) == 0.04


class TestScalePrimary:
    def test_identity(self):
        spec = table_one_preset(-0.1)
        assert scale_primary(spec, 1.0).groups == spec.groups

    def test_fifty_percent_increase(self):
        spec = scale_primary(table_one_preset(-0.1), 1.5)
        assert spec.groups[0].qubits[0] == (59.33, pytest.approx(0.495))
        assert spec.groups[0].gamma_s == pytest.approx(0.495)

    def test_hundred_percent_increase(self):
        spec = scale_primary(table_one_preset(-0.1), 2.0)
        assert spec.groups[1].gamma_s == pytest.approx(0.4)

    def test_secondaries_untouched(self):
        base = table_one_preset(-0.2)
        spec = scale_primary(base, 2.5)
        assert spec.groups[2:] == base.groups[2:]


class TestEdgePrimarySet:
    def test_paper_parameters(self):
        g = edge_primary_set(10, 0.04)
        assert g.qubits[0] == (pytest.approx(29.8), 0.25)
        assert g.gamma_s == 0.3
        assert g.role == "edge"

    def test_l16(self):
        assert edge_primary_set(16, 0.04).qubits[0][0] == pytest.approx(29.68)

    def test_zero_omega9(self):
        for L in (2, 10, 50):
            assert edge_primary_set(L, 0.0).qubits[0][0] == pytest.approx(30.0)


class TestSpecFile:
    def test_round_trip(self, tmp_path):
        spec = with_edge_group(table_one_preset(-0.4), edge_primary_set(8, 0.04))
        path = tmp_path / "spec.txt"
        write_spec_file(spec, path)
        back = parse_spec_file(path)
        assert back.groups == spec.groups
        assert back.label == spec.label

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("[primary]\nnot a key value\n")
        with pytest.raises(ValueError):
            parse_spec_file(path)

    def test_rejects_empty(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("# nothing\n")
        with pytest.raises(ValueError):
            parse_spec_file(path)


def test_peak_rate_magnitude():
    # dominated by the q1 resonance: 4 O^2 G/(4 O^2 + G^2) = 0.264 for O=G=0.33
    p = peak_rate(table_one_preset(-0.1))
    assert p == pytest.approx(0.264, rel=0.05)
    assert p < 0.33 + 0.2 + 0.02 + 0.0045
