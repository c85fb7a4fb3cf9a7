"""Bootstrap evaluation harness for file-level defect prediction features.

Consumes the feature matrices exported by the mining toolkit (CSV with
``path,label,<features>`` columns), runs out-of-sample bootstrap
evaluation with minority oversampling and kernel-based feature
screening, and compares feature sets with rank statistics.
"""

__version__ = "0.1.0"
