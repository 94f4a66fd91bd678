"""Physical constants and unit conversions."""

import numpy as np
from scipy import constants

H = constants.h
HBAR = constants.hbar
K_B = constants.k
E_CHARGE = constants.e
PHI0 = constants.h / (2 * constants.e)  # superconducting flux quantum, Wb

TWO_PI = 2 * np.pi


def db_to_linear(value_db):
    """Power ratio from dB."""
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    """dB from a power ratio."""
    return 10.0 * np.log10(value)


def dbm_to_watts(value_dbm):
    return 1e-3 * db_to_linear(value_dbm)


def watts_to_dbm(value_w):
    return linear_to_db(np.asarray(value_w, dtype=float) / 1e-3)


def angular(rate_hz):
    """Angular rate (s^-1) from an ordinary frequency in Hz."""
    return TWO_PI * rate_hz


def ordinary(rate_angular):
    """Ordinary frequency in Hz from an angular rate."""
    return rate_angular / TWO_PI


def psd_to_kelvin(psd_w_per_hz):
    return psd_w_per_hz / K_B


def kelvin_to_psd(temperature_k):
    return temperature_k * K_B
