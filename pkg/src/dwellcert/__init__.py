"""Dwell-time stability certificates for linear impulsive systems.

Exponential-based conditions (``dwell.lemma_*``) and exponential-free
looped-functional conditions compiled to SDPs through matrix sums of squares
(``dwell.thm_*``), with a small interior-point SDP solver, simulation tools
and a command-line front end.
"""
__version__ = "0.1.0"

from .dwell import (DwellCertificate, DwellSpec, ImpulsiveSystem, bisect_dwell,  # noqa: E402
                    lemma_max_dwell_check, lemma_min_dwell_check, lemma_ranged_check,
                    periodic_scan, thm_max_dwell_check, thm_min_dwell_check,
                    thm_ranged_check, thm_robust_check)

__all__ = [
    "DwellCertificate", "DwellSpec", "ImpulsiveSystem", "bisect_dwell",
    "lemma_max_dwell_check", "lemma_min_dwell_check", "lemma_ranged_check",
    "periodic_scan", "thm_max_dwell_check", "thm_min_dwell_check",
    "thm_ranged_check", "thm_robust_check",
]
