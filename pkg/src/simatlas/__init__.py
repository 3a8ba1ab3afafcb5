"""Desk-scale cellular measurement testbed.

SIM cards (simulated or trace-replayed) are tunneled over TCP to remote
probe agents hosting simulated modems, orchestrated by a management
broker, with experiment harnesses for traffic metering, zero-rating,
IP configuration, APDU analytics, and ringback-tone fingerprinting.
"""

__version__ = "0.1.0"
