"""Design and simulation of a dual-periodically poled lithium niobate
waveguide that emits electro-optically switchable polarization-entangled
photon pairs."""

__version__ = "0.1.0"
