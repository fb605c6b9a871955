"""History trees and universal algorithms for anonymous dynamic networks."""

__version__ = "0.1.0"
