"""Sample-translate-recombine data augmentation for speech translation corpora."""

__version__ = "0.1.0"
