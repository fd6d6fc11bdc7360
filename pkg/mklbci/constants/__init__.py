# flake8: noqa
from mklbci.constants.colors import *
from mklbci.constants.grids import *
from mklbci.constants.labels import *

KL_FLOOR = 1e-12
VARIANCE_FLOOR = 1e-300
