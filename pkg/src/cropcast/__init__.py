"""Crop advisory engine.

Classifies agronomically suitable crops from soil and weather features,
forecasts market prices at each crop's harvest horizon, and recommends
the candidate with the highest forecast price. Exposed as a library, a
CLI (``cropcast``), and an HTTP/JSON service.
"""

__version__ = "0.1.0"
