from typing import Literal

import numpy as np
import numpy.typing as npt

type Matrix = npt.NDArray[np.float64]
type Vector = npt.NDArray[np.float64]
type MatrixLike = npt.ArrayLike

type Label = Literal[1, -1]
type SubjectId = str
type Method = Literal['csp-lda', 'csp-svm', 'ccsp-lda', 'ccsp-svm', 'mkl']
