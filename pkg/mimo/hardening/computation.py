"""
Channel computation functions: normalization, subset selection and
MRC-combined gain.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np

from mimo.hardening.core import ArrayLayout, ChannelTensor, SubsetMode, SubsetPolicy
from mimo.hardening.validation import (
    ConfigError,
    DataError,
    SubsetMismatchError,
    SubsetTooLargeError,
    ZeroPowerError,
    validate_subset,
)

logger = logging.getLogger(__name__)


def normalize(tensor: ChannelTensor, subset: Optional[Sequence[int]] = None) -> ChannelTensor:
    """
    Restrict a tensor to an antenna subset and scale it to unit mean gain.

        h_bar(n, f, m) = h(n, f, m) / sqrt(mean over (n, f, m in subset) of |h|^2)

    The mean is taken over the *selected* antennas only, so every subset
    size of a hardening sweep has unit mean gain.

    Args:
        tensor: Tensor with lost samples already interpolated or dropped
        subset: Antenna ids to keep (None keeps all). Order is irrelevant;
            columns come back sorted by antenna id.

    Returns:
        A normalized tensor holding only the subset

    Raises:
        EmptySubsetError: If subset is empty
        ZeroPowerError: If the selected coefficients are all zero
        DataError: If the tensor still carries flagged lost samples
    """
    if tensor.has_unhandled_losses:
        raise DataError("tensor has flagged lost samples; interpolate or drop them first")

    ids = validate_subset(
        tensor.antenna_ids if subset is None else subset,
        tensor.antenna_ids,
    )
    column = {aid: pos for pos, aid in enumerate(tensor.antenna_ids)}
    cols = [column[i] for i in ids]

    selected = tensor.data[:, :, cols]
    mean_gain = float(np.mean(selected.real ** 2 + selected.imag ** 2))
    if mean_gain == 0.0 or not np.isfinite(mean_gain):
        raise ZeroPowerError("selected coefficients have zero power; cannot normalize")

    return tensor.replace(
        data=selected / np.sqrt(mean_gain),
        layout=tensor.layout.restrict(cols),
        antenna_ids=tuple(ids),
        normalized=True,
    )


def combined_gain(tensor: ChannelTensor, subset: Optional[Sequence[int]] = None) -> np.ndarray:
    """
    MRC-combined channel gain, summed over antennas and divided by their count.

        G(n, f) = (1/|subset|) * sum over m in subset of |h_bar(n, f, m)|^2

    Args:
        tensor: Output of normalize()
        subset: Antenna ids the tensor was normalized over (None = as stored)

    Returns:
        Array of shape (N, F), linear scale, mean 1

    Raises:
        SubsetMismatchError: If the tensor is not normalized or was
            normalized over a different subset
    """
    if not tensor.normalized:
        raise SubsetMismatchError("combined gain needs a tensor normalized over the same subset")
    if subset is not None:
        requested = [int(i) for i in subset]
        if len(set(requested)) != len(requested) or set(requested) != set(tensor.antenna_ids):
            raise SubsetMismatchError(
                f"subset {sorted(requested)[:8]}... differs from the normalization subset"
            )
    return np.mean(tensor.power(), axis=2)


def select_subset(layout: ArrayLayout, policy: SubsetPolicy, k: int) -> List[int]:
    """
    Pick k antenna indices from a layout under a subset policy.

    Deterministic: RANDOM_K draws one seeded permutation, so subsets of
    increasing size are nested.

    Raises:
        ConfigError: If k < 1
        SubsetTooLargeError: If k exceeds the antennas the policy can offer
    """
    if k < 1:
        raise ConfigError(f"subset size must be >= 1, got {k}")

    if policy.mode == SubsetMode.POLARIZATION_ONLY:
        available = layout.indices_with_polarization(policy.polarization)
    else:
        available = list(range(layout.n_ant))

    if k > len(available):
        raise SubsetTooLargeError(
            f"{policy.mode.value} offers {len(available)} antennas, {k} requested"
        )

    if policy.mode == SubsetMode.RANDOM_K:
        rng = np.random.default_rng(policy.seed)
        order = rng.permutation(len(available))
        return sorted(int(available[i]) for i in order[:k])
    return [int(i) for i in available[:k]]


def check_policy(layout: ArrayLayout, policy: SubsetPolicy) -> None:
    """
    Check every size of a policy is feasible for a layout.

    Raises:
        SubsetTooLargeError: If the largest size cannot be served
    """
    select_subset(layout, policy, policy.sizes[-1])


def subset_tensors(tensor: ChannelTensor, policy: SubsetPolicy):
    """
    Yield (size, normalized tensor) for each subset size of a policy.

    Subset indices are roster positions of `tensor.layout`, mapped to the
    tensor's antenna ids.
    """
    check_policy(tensor.layout, policy)
    for k in policy.sizes:
        positions = select_subset(tensor.layout, policy, k)
        ids = [tensor.antenna_ids[p] for p in positions]
        logger.debug("subset size %d: antennas %s", k, ids[:8])
        yield k, normalize(tensor, ids)
