"""Weak-form market efficiency lab.

Tools for asking one question three ways: are daily equity prices
predictable?  The package pairs classical econometrics (augmented
Dickey-Fuller unit-root tests, Lo-MacKinlay variance-ratio tests) with
machine-learning classifiers run under a strict daily walk-forward
protocol, and closes the loop with a rule-based trading simulator that
prices the predictions against buy-and-hold.

Modules
-------
data         price series loading, validation, and synthetic generation
indicators   technical indicators and feature table construction
econometrics ADF and variance-ratio tests
classifiers  five from-scratch model families behind one interface
walkforward  the daily expanding-window evaluation protocol
trading      long-only simulator and benchmark strategies
metrics      confusion-matrix ratios and portfolio statistics
harness      experiment orchestration (config in, artifacts out)
cli          command-line entry point
"""

__version__ = "0.1.0"
