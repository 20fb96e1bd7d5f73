"""Digital image transmission with distribution-matched constellations."""
__version__ = "0.1.0"
