"""Risk-based active learning for decision-supporting structural health
monitoring: a conjugate Bayesian Gaussian mixture classifier whose label
queries are scheduled by the expected value of perfect information of a
maintenance decision process."""

__version__ = "0.1.0"
