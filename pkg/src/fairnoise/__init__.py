"""fairnoise: how stable are fairness interventions when the data get noisy?

The package trains binary classifiers with four bias-handling strategies
(none, correlation removal, exponentiated-gradient reduction, per-group
threshold randomisation), injects seeded noise of growing strength into the
evaluation data, and tracks group-fairness metrics alongside a robustness
ratio that compares fairness under noise against fairness on clean data.
Closed-form results about the limiting behaviour (Bhattacharyya contraction,
bias bounds under attribute flips, worst-case demographic parity) live in
:mod:`fairnoise.theory` together with numeric validators.
"""

__version__ = "0.1.0"
