"""Twin-experiment toolkit: sparse-sensor full-state reconstruction with a
recurrent encoder / shallow decoder, sensor-driven model adaptation, and
latent-space sparse regression for missing-physics recovery."""

__version__ = "0.1.0"
