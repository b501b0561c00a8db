"""Speech-driven antenatal EMR toolkit."""

__version__ = "0.1.0"
