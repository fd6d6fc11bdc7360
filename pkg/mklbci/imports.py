'''
使用 ``from mklbci.imports import *`` 即可导入 ``mklbci`` 主要的功能
'''

# flake8: noqa
from mklbci.classifiers.kernels import *
from mklbci.classifiers.lda import *
from mklbci.classifiers.metrics import *
from mklbci.classifiers.mkl import *
from mklbci.classifiers.svm import *
from mklbci.constants import *
from mklbci.exception import *
from mklbci.linalg.covariance import *
from mklbci.linalg.eigen import *
from mklbci.linalg.gaussian import *
from mklbci.pipeline.benchmark import *
from mklbci.pipeline.folds import *
from mklbci.pipeline.methods import *
from mklbci.pipeline.report import *
from mklbci.pipeline.session import *
from mklbci.signal.filter import *
from mklbci.signal.recording import *
from mklbci.spatial.composite import *
from mklbci.spatial.csp import *
from mklbci.spatial.features import *
from mklbci.synth.cohort import *
from mklbci.utils.config import *
