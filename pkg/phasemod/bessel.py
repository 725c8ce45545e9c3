"""Integer-order Bessel functions of the first kind by downward recurrence.

Miller's algorithm: start far above the wanted order with an arbitrary seed, recur
J_{k-1} = (2k/z)·J_k − J_{k+1} down to J_0, then normalise with
J_0 + 2·Σ J_{2k} = 1.
"""

import math

import numpy as np

from phasemod.errors import DomainError

MAX_ORDER = 64
MAX_ARGUMENT = 50.0
_RESCALE_AT = 1e250


def _start_index(n: int, z: float) -> int:
    top = max(n, int(z))
    start = top + 20 + int(math.sqrt(40.0 * max(n, z, 1.0)))
    return 2 * (start // 2)


def _recur_down(n_max: int, z: float) -> np.ndarray:
    """J_0..J_{n_max}(z) for 0 < z, normalised."""
    m = max(_start_index(n_max, z), n_max + 2)
    values = np.zeros(n_max + 1)
    j_next, j_curr = 0.0, 1e-300
    even_sum = 0.0
    for k in range(m, 0, -1):
        j_prev = (2.0 * k / z) * j_curr - j_next
        j_next, j_curr = j_curr, j_prev
        if abs(j_curr) > _RESCALE_AT:
            j_curr *= 1.0 / _RESCALE_AT
            j_next *= 1.0 / _RESCALE_AT
            values *= 1.0 / _RESCALE_AT
            even_sum *= 1.0 / _RESCALE_AT
        index = k - 1
        if index <= n_max:
            values[index] = j_curr
        if index > 0 and index % 2 == 0:
            even_sum += j_curr
    norm = j_curr + 2.0 * even_sum
    return values / norm


def _check(n_max: int, z: float) -> None:
    if n_max > MAX_ORDER:
        raise DomainError(f"Bessel order {n_max} exceeds {MAX_ORDER}")
    if abs(z) > MAX_ARGUMENT:
        raise DomainError(f"Bessel argument {z:.6g} exceeds {MAX_ARGUMENT}")


def bessel_table(n_max: int, z: float) -> np.ndarray:
    """J_0(z)..J_{n_max}(z) from a single recurrence sweep."""
    if n_max < 0:
        raise DomainError("n_max must be non-negative")
    _check(n_max, z)
    if z == 0.0:
        table = np.zeros(n_max + 1)
        table[0] = 1.0
        return table
    table = _recur_down(n_max, abs(z))
    if z < 0:
        table[1::2] *= -1.0
    return table


def bessel_jn(n: int, z: float) -> float:
    """J_n(z) for integer n (negative orders by reflection)."""
    order = abs(int(n))
    value = float(bessel_table(order, float(z))[order])
    if n < 0 and order % 2:
        value = -value
    return value
