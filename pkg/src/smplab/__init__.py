"""Simulation laboratory for simultaneous message passing protocols with an
untrusted prover: code-grid protocols for equality problems, quantum
fingerprints, untrusted quantum state transfer and its compositions, and the
finite-field disjointness protocol, plus a seeded experiment harness."""

__version__ = "0.1.0"
