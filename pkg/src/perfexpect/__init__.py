"""Predict expressive tempo and dynamics of piano performances from
expectancy (IC/entropy) features and score descriptors."""

__version__ = "0.1.0"
