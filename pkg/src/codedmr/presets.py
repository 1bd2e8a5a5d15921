"""Named benchmark profiles used by the table and sweep commands."""

from __future__ import annotations

from fractions import Fraction

from .model import ComputationProfile, validate_profile

# 12-node mixed profiles: six light nodes at 1/6 plus six heavier nodes.
K12_M1 = [Fraction(1, 6)] * 6 + [Fraction(1, 3)] * 6
K12_M2 = [Fraction(1, 6)] * 6 + [Fraction(1, 2)] * 6

# 3-node heterogeneous profile.
K3_HETERO = [Fraction(3, 5), Fraction(2, 3), Fraction(11, 15)]

# Coefficient vectors for the load-versus-mean sweeps; the grid variable
# scales the whole vector.
SWEEP_COEFFS = {
    "fig2-k3": [Fraction(9, 10), Fraction(1), Fraction(11, 10)],
    "fig2-k12": [Fraction(7, 10), Fraction(4, 5), Fraction(9, 10),
                 Fraction(9, 10), Fraction(9, 10), Fraction(1), Fraction(1),
                 Fraction(21, 20), Fraction(11, 10), Fraction(11, 10),
                 Fraction(23, 20), Fraction(23, 20)],
}


def profile_k12_m1() -> ComputationProfile:
    return validate_profile(K12_M1)


def profile_k12_m2() -> ComputationProfile:
    return validate_profile(K12_M2)


def profile_k3_hetero() -> ComputationProfile:
    return validate_profile(K3_HETERO)
