"""CODATA-2018 constants and unit conversions.

Everything inside the package works in SI per-molecule units (J, kg, m, s).
Conversions to and from kJ/mol, amu, cm^-1 and Angstrom happen only at I/O.
"""

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Constants:
    k_B: float = 1.380649e-23  # J/K, exact
    h: float = 6.62607015e-34  # J s, exact
    hbar: float = 6.62607015e-34 / (2.0 * math.pi)
    R: float = 8.314462618  # J/(mol K)
    N_A: float = 6.02214076e23  # 1/mol, exact
    c: float = 299792458.0  # m/s, exact
    amu: float = 1.66053906660e-27  # kg
    cm1_to_radps: float = 2.0 * math.pi * 299792458.0 * 100.0
    kJmol_to_J: float = 1.0e3 / 6.02214076e23
    angstrom: float = 1.0e-10


CONST = Constants()

LN10 = math.log(10.0)

# isotope masses in amu
MASS_H_AMU = 1.00782503207
MASS_D_AMU = 2.01410177812


def kjmol_to_joule(value):
    return value * CONST.kJmol_to_J


def joule_to_kjmol(value):
    return value / CONST.kJmol_to_J


def cm1_to_radps(value):
    return value * CONST.cm1_to_radps


def radps_to_cm1(value):
    return value / CONST.cm1_to_radps


def amu_to_kg(value):
    return value * CONST.amu


def kg_to_amu(value):
    return value / CONST.amu


def angstrom_to_m(value):
    return value * CONST.angstrom


def m_to_angstrom(value):
    return value / CONST.angstrom
