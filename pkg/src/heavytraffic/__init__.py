"""Heavy-traffic limits for random-walk maxima with stable-domain jumps."""

__version__ = "0.1.0"
