"""Pattern Sturmian sequences and spectral diagnostics for 1-d discrete
Schrodinger operators: sequence generators, complexity estimators,
transfer-matrix traces, spectrum approximants, and repetition-based
eigenvalue-exclusion certificates."""

__version__ = "0.1.0"
