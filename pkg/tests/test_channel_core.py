"""
Tests for the channel tensor model, normalization, subset selection and
combined gain.
"""

import numpy as np
import pytest

from mimo.hardening.computation import combined_gain, normalize, select_subset, subset_tensors
from mimo.hardening.core import (
    ArrayKind,
    ChannelTensor,
    Polarization,
    SubsetMode,
    SubsetPolicy,
    co_located_layout,
    distributed_layout,
)
from mimo.hardening.validation import (
    ConfigError,
    DataError,
    EmptySubsetError,
    SubsetMismatchError,
    SubsetTooLargeError,
    ZeroPowerError,
)


def _tensor(data):
    return ChannelTensor.from_array(np.asarray(data))


class TestChannelTensor:
    """Construction invariants."""

    def test_data_is_read_only_complex128(self, rng):
        t = _tensor(rng.standard_normal((4, 3, 2)))
        assert t.data.dtype == np.complex128
        with pytest.raises(ValueError):
            t.data[0, 0, 0] = 1.0

    def test_dimensions(self, rng):
        t = _tensor(rng.standard_normal((5, 3, 2)))
        assert (t.n_time, t.n_freq, t.n_ant) == (5, 3, 2)
        assert t.antenna_ids == (0, 1)

    def test_rejects_non_finite(self):
        data = np.ones((2, 2, 2), dtype=complex)
        data[1, 1, 1] = np.nan
        with pytest.raises(ConfigError):
            _tensor(data)

    def test_rejects_wrong_rank(self):
        with pytest.raises(ConfigError):
            ChannelTensor(data=np.ones((3, 3)), layout=co_located_layout(rows=1, columns=3))

    def test_rejects_layout_size_mismatch(self):
        with pytest.raises(ConfigError):
            ChannelTensor(data=np.ones((2, 2, 3)), layout=co_located_layout(rows=1, columns=4))

    def test_rejects_bad_lost_mask_length(self):
        with pytest.raises(ConfigError):
            _tensor(np.ones((4, 1, 1))).replace(lost_mask=np.zeros(3, dtype=bool))

    def test_rejects_non_positive_frequency(self):
        with pytest.raises(ConfigError):
            ChannelTensor.from_array(np.ones((2, 2, 2)), rep_rate_hz=0.0)


class TestArrayLayout:
    """Default panels and their polarization labels."""

    def test_default_panel_has_100_antennas_half_each_polarization(self):
        layout = co_located_layout()
        assert layout.n_ant == 100
        assert layout.kind == ArrayKind.CO_LOCATED
        assert len(layout.indices_with_polarization(Polarization.V)) == 50
        assert len(layout.indices_with_polarization(Polarization.H)) == 50

    def test_polarization_alternates_between_neighbours(self):
        layout = co_located_layout()
        assert layout.antennas[0].polarization != layout.antennas[1].polarization

    def test_half_wavelength_spacing(self):
        layout = co_located_layout(carrier_freq_hz=3.7e9)
        spacing = layout.antennas[1].position[1] - layout.antennas[0].position[1]
        assert spacing == pytest.approx(299_792_458.0 / 3.7e9 / 2)

    def test_distributed_layout_is_reproducible(self):
        a = distributed_layout(12, seed=3)
        b = distributed_layout(12, seed=3)
        assert a == b
        assert a.kind == ArrayKind.DISTRIBUTED
        for antenna in a.antennas:
            assert np.linalg.norm(antenna.orientation) == pytest.approx(1.0)

    def test_restrict_reindexes(self):
        sub = co_located_layout().restrict([5, 7, 9])
        assert [a.index for a in sub.antennas] == [0, 1, 2]
        assert sub.n_ant == 3


class TestNormalize:
    """Unit mean gain over the selected subset."""

    def test_constant_tensor_becomes_one(self):
        t = normalize(_tensor(np.full((3, 4, 5), 2 + 0j)))
        assert np.allclose(t.data, 1 + 0j, rtol=0, atol=1e-15)

    def test_mean_gain_is_one(self, iid_tensor):
        t = normalize(iid_tensor)
        assert np.mean(t.power()) == pytest.approx(1.0, rel=1e-12)
        assert t.normalized

    def test_scale_invariance(self, iid_tensor):
        scaled = iid_tensor.replace(data=iid_tensor.data * 37.5)
        assert np.allclose(normalize(scaled).data, normalize(iid_tensor).data, rtol=1e-12, atol=0)

    def test_idempotent(self, iid_tensor):
        once = normalize(iid_tensor)
        twice = normalize(once)
        assert np.allclose(twice.data, once.data, rtol=1e-12, atol=1e-15)

    def test_subset_restricts_and_sorts(self, iid_tensor):
        t = normalize(iid_tensor, [9, 2, 5])
        assert t.antenna_ids == (2, 5, 9)
        assert t.n_ant == 3
        assert np.mean(t.power()) == pytest.approx(1.0, rel=1e-12)

    def test_subset_order_does_not_matter(self, iid_tensor):
        a = normalize(iid_tensor, [9, 2, 5])
        b = normalize(iid_tensor, [2, 5, 9])
        assert np.array_equal(a.data, b.data)

    def test_empty_subset(self, iid_tensor):
        with pytest.raises(EmptySubsetError):
            normalize(iid_tensor, [])

    def test_unknown_antenna(self, iid_tensor):
        with pytest.raises(ConfigError):
            normalize(iid_tensor, [100])

    def test_zero_tensor(self):
        with pytest.raises(ZeroPowerError):
            normalize(_tensor(np.zeros((2, 2, 2))))

    def test_flagged_losses_must_be_handled_first(self):
        mask = np.array([False, True, False])
        t = _tensor(np.ones((3, 2, 2))).replace(lost_mask=mask)
        with pytest.raises(DataError):
            normalize(t)


class TestCombinedGain:
    """MRC power sum divided by the subset size."""

    def test_single_antenna_constant(self):
        g = combined_gain(normalize(_tensor(np.full((4, 3, 1), 1j))))
        assert np.allclose(g, 1.0)

    def test_two_antennas_zero_and_two(self):
        data = np.zeros((3, 2, 2), dtype=complex)
        data[..., 1] = np.sqrt(2.0)
        g = combined_gain(normalize(_tensor(data)))
        assert np.allclose(g, 1.0)

    def test_mean_is_one(self, iid_tensor):
        assert np.mean(combined_gain(normalize(iid_tensor))) == pytest.approx(1.0, rel=1e-12)

    def test_variance_matches_gamma_reference(self, iid_tensor):
        g = combined_gain(normalize(iid_tensor))
        assert np.var(g) == pytest.approx(1.0 / 100, rel=0.05)

    def test_permutation_invariant_subset(self, iid_tensor):
        t = normalize(iid_tensor, [1, 4, 7])
        assert np.array_equal(combined_gain(t, [7, 1, 4]), combined_gain(t, [1, 4, 7]))

    def test_requires_normalized_tensor(self, iid_tensor):
        with pytest.raises(SubsetMismatchError):
            combined_gain(iid_tensor)

    def test_subset_mismatch(self, iid_tensor):
        t = normalize(iid_tensor, [1, 4, 7])
        with pytest.raises(SubsetMismatchError):
            combined_gain(t, [1, 4, 8])


class TestSubsetSelection:
    """Subset policies."""

    def test_first_k(self):
        assert select_subset(co_located_layout(), SubsetPolicy(), 4) == [0, 1, 2, 3]

    def test_polarization_only_v(self):
        policy = SubsetPolicy(mode=SubsetMode.POLARIZATION_ONLY, polarization=Polarization.V,
                              sizes=(1, 50))
        layout = co_located_layout()
        picked = select_subset(layout, policy, 50)
        assert picked == layout.indices_with_polarization(Polarization.V)
        assert all(layout.antennas[i].polarization == Polarization.V for i in picked)

    def test_polarization_only_too_large(self):
        policy = SubsetPolicy(mode=SubsetMode.POLARIZATION_ONLY, polarization=Polarization.H,
                              sizes=(1, 51))
        with pytest.raises(SubsetTooLargeError):
            select_subset(co_located_layout(), policy, 51)

    def test_random_k_is_deterministic(self):
        policy = SubsetPolicy(mode=SubsetMode.RANDOM_K, seed=7)
        layout = co_located_layout()
        assert select_subset(layout, policy, 10) == select_subset(layout, policy, 10)

    def test_random_k_subsets_are_nested(self):
        policy = SubsetPolicy(mode=SubsetMode.RANDOM_K, seed=7)
        layout = co_located_layout()
        small = set(select_subset(layout, policy, 8))
        large = set(select_subset(layout, policy, 16))
        assert small <= large

    def test_too_large(self):
        with pytest.raises(SubsetTooLargeError):
            select_subset(co_located_layout(rows=1, columns=8), SubsetPolicy(), 9)

    def test_policy_validation(self):
        with pytest.raises(ConfigError):
            SubsetPolicy(sizes=(1, 4, 2))
        with pytest.raises(ConfigError):
            SubsetPolicy(mode=SubsetMode.RANDOM_K)
        with pytest.raises(ConfigError):
            SubsetPolicy(mode=SubsetMode.POLARIZATION_ONLY)

    def test_subset_tensors_yields_each_size(self, iid_tensor):
        sizes = [k for k, _ in subset_tensors(iid_tensor, SubsetPolicy(sizes=(1, 10, 100)))]
        assert sizes == [1, 10, 100]
