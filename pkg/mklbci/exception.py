import sys
from dataclasses import dataclass


_sys_excepthook = sys.excepthook


def custom_excepthook(exc_type, exc_value, exc_traceback):
    if issubclass(exc_type, ExitException):
        sys.exit(exc_value.exit_code)
    _sys_excepthook(exc_type, exc_value, exc_traceback)


sys.excepthook = custom_excepthook


EXITCODE_USAGE = 1
'''命令行参数或配置文件有误时的退出码'''
EXITCODE_DATA = 2
'''数据或文件格式有误时的退出码'''
EXITCODE_NUMERICAL = 3
'''数值计算失败（例如矩阵非正定）时的退出码'''


class MklBciException(Exception): ...


@dataclass
class ExitException(MklBciException):
    '''
    当 :class:`ExitException` 未被捕获时，
    会直接以 ``exit_code`` 退出，不输出 ``traceback`` 信息
    '''
    exit_code: int


class ParameterError(MklBciException, ValueError): ...
class ConfigError(MklBciException): ...


class DataError(MklBciException): ...
class DegenerateInputError(DataError): ...
class ShapeMismatchError(DataError): ...
class ChannelSelectionError(DataError): ...
class EpochError(DataError): ...
class SessionValidationError(DataError): ...
class FoldError(DataError): ...
class OutputError(DataError): ...

class SessionFormatError(DataError):
    '''
    会话文件格式错误，``offset`` 为出错位置在数据文件中的字节偏移
    '''
    def __init__(self, msg: str, offset: int | None = None):
        super().__init__(msg if offset is None else f'{msg} (at byte offset {offset})')
        self.offset = offset


class NumericalError(MklBciException): ...
class DegenerateKernelError(NumericalError): ...


class DefinitenessError(NumericalError):
    '''
    矩阵不是（严格）正定的，``pivot`` 为 Cholesky 分解失败处的主元序号（从 1 开始）
    '''
    def __init__(self, msg: str, pivot: int | None = None):
        super().__init__(msg)
        self.pivot = pivot


def exit_code_of(exc: MklBciException) -> int:
    '''
    得到异常所对应的命令行退出码
    '''
    if isinstance(exc, NumericalError):
        return EXITCODE_NUMERICAL
    if isinstance(exc, DataError):
        return EXITCODE_DATA
    return EXITCODE_USAGE
