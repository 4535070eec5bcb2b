"""stillpos: a self-hosted Bitcoin point-of-sale for small in-person businesses.

One fresh address per sale, locked fiat pricing, multi-source exchange
rates, 0-confirmation acceptance with double-spend detection, and a
built-in simulated chain so the whole flow is testable offline.
"""

__version__ = "0.1.0"
