"""Domain models, errors, configuration and the calibration pipeline."""
