"""Desk-scale co-simulation of feedback-stabilized microring photon-pair sources.

Subsystems
----------
cmt        resonator coupled-mode model: decay rates, spectra, pair generation
overlap    third-order nonlinear overlap integrals and effective mode volume
dac        cycle-accurate pulse-density heater DAC with switching output stage
plant      thermo-optic ring dynamics: self-heating, bistability, crosstalk
afe        photocurrent sensing chain: TIA, offset IDACs, SAR ADC, averaging
control    three-stage lock state machine (calibrate / re-init / PI regulate)
photons    photon-pair Monte Carlo, start-stop histograms, CAR / g2 analysis
scenarios  configuration-driven experiment runner behind the ``ringlock`` CLI
"""

from ringlock.cmt import (
    ResonanceParams,
    ResonatorTriplet,
    decay_rates,
    linewidth_from_q,
    q_from_linewidth,
    fsr_mismatch_from_wavelengths,
    pair_generation_rate,
    optimal_extrinsic_rate,
    stimulated_efficiency,
    through_transmission,
)
from ringlock.overlap import Chi3Params, ModeFieldGrid, beta_and_veff
from ringlock.plant import ThermalRing, CrosstalkMatrix, Plant
from ringlock.afe import AfeConfig
from ringlock.control import LockConfig, LockState, Stage
from ringlock.photons import PhotonChannelModel, CoincidenceHistogram, PeakFit

__version__ = "0.1.0"
