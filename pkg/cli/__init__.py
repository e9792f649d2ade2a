# =============================================================================
# WEDGETRACE COMMAND-LINE FRONT END
# =============================================================================
"""
Command-line front end: configuration, orchestration and output files.
"""

__version__ = "0.1.0"
