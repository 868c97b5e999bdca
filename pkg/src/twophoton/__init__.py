"""Simulation and analysis toolkit for two-photon dissipative oscillators.

Modules: qcore (Fock-space linear algebra), liouville (Lindblad generators
and solvers), models (physical model builders), meanfield (semi-classical
analysis), hetero (heterodyne record synthesis), jumps (dwell statistics),
calib (calibration pipelines), ats (flux-biased circuit analysis), cli
(command-line front end).
"""

__version__ = "0.1.0"
