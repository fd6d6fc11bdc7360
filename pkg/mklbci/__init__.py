'''multi-subject EEG decoding with CSP, composite CSP and lp-norm multiple kernel learning'''

__version__ = '0.3.0'
