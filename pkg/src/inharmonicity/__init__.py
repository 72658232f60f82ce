"""Inharmonicity and noisiness features for audio corpora."""

__version__ = "0.1.0"
