"""Inter-core qubit traffic characterization for modular quantum architectures."""

__version__ = "0.1.0"
