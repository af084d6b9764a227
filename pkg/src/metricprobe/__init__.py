"""metricprobe: adversarial robustness probing for MT evaluation metrics."""

__version__ = "0.1.0"
