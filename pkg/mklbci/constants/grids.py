import numpy as np

DEFAULT_BAND = (8.0, 30.0)
DEFAULT_FILTER_ORDER = 5
DEFAULT_EPOCH_WINDOW_MS = (750.0, 3500.0)
DEFAULT_FOLDS = 5

C_GRID = [float(10 ** i) for i in np.arange(-2, 2.25, 0.5)]
P_GRID = [1.0, 1.125, 1.333, 2.0, float('inf')]
LAMBDA_GRID = [0.0, 1e-5, 1e-4, 1e-3, 1e-2, *[round(0.1 * i, 1) for i in range(1, 11)]]

DEFAULT_LDA_GAMMA = 0.05

METHODS = ('csp-lda', 'csp-svm', 'ccsp-lda', 'ccsp-svm', 'mkl')
BASELINE_METHODS = ('csp-lda', 'csp-svm', 'ccsp-lda', 'ccsp-svm')
