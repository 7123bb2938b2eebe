"""Post-training quantization study for single-trial ERP detection."""

__version__ = "0.1.0"
