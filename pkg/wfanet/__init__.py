"""Wavelet-domain pansharpening: Haar transforms, frequency attention fusion,
training on synthetic Wald-protocol data and the standard quality metrics."""

__version__ = "0.1.0"
