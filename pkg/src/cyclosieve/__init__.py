"""Trace functions over finite fields, their reductions modulo cyclotomic primes, and large-sieve density reports."""

__version__ = "0.1.0"
