"""Iterative detection and decoding for AWGN channels with Wiener phase noise.

Library + CLI implementing Tikhonov-parametric phase detectors (transparent
propagation, expectation propagation and its damped/modified variants), a
discretized-phase forward-backward benchmark, LDPC coding, and a Monte Carlo
BER harness.
"""

__version__ = "0.1.0"
