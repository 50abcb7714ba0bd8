""" Skewrec Module

This module contains the main logic to train and evaluate pairwise ranking
models with the skewness ranking optimization criterion, along with the
skew normal analysis tools used to study the learned score distributions.

"""

# This variable is only used to check for ImportErrors induced by users running as script rather than as module or package
import_error_test_var = None

__shortname__   = "Skewrec"
__longname__    = "Skewrec: Skewness Ranking Optimization for Implicit Feedback"
__version__     = "0.4.0"
