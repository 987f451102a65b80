"""Mixed causal-noncausal autoregressions with Student-t errors.

Simulation, approximate maximum likelihood estimation, predictive densities
for future paths and credibility indices built from them.
"""

__version__ = "0.1.0"
