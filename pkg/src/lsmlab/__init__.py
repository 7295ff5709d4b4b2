"""Spiking-reservoir robustness laboratory.

Builds LIF reservoirs on small-world or random topologies, sweeps the mean
synaptic weight, scores readout classifiers, and compares the resulting
robustness intervals against mean-field criticality predictions.
"""

__version__ = "0.1.0"
