"""Operations on predicted outcome distributions."""
from __future__ import annotations

import numpy as np

from ..errors import ContractError

MASS_FLOOR = 1e-12


def truncate_renormalize(dist, available) -> np.ndarray:
    """Restrict ``dist`` to the ``available`` class indices and rescale.

    If the surviving mass is below 1e-12 the result is uniform over the
    available classes.
    """
    p = np.asarray(dist, dtype=np.float64)
    k = p.shape[-1]
    avail = sorted(set(int(a) for a in available))
    if not avail:
        raise ContractError("available set is empty")
    if avail[0] < 0 or avail[-1] >= k:
        raise ContractError(f"available classes {avail} out of range for k={k}")
    mask = np.zeros(k, dtype=bool)
    mask[avail] = True
    out = np.where(mask, p, 0.0)
    mass = out.sum()
    if mass < MASS_FLOOR:
        out = mask / mask.sum()
    else:
        out = out / mass
    return out
