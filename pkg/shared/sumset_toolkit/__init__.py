"""
Sumset toolkit - additive-combinatorics algorithms for 3SUM+ and friends
"""

__version__ = "0.1.0"
