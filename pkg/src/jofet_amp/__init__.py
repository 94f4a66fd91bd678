"""Gate-tunable Josephson parametric amplifier modeling and calibration toolkit."""

__version__ = "0.1.0"
