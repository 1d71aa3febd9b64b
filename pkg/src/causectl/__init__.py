"""Mine controllable causes of unwanted events and synthesize controllers that avoid them."""

__version__ = "0.1.0"
