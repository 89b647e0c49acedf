"""Exception hierarchy. The CLI maps these onto exit codes."""


class PndError(Exception):
    exit_code = 1


class InputError(PndError, ValueError):
    exit_code = 2


class ConfigError(PndError, ValueError):
    exit_code = 2


class LoadError(InputError):
    def __init__(self, path, message, line=None):
        self.path = str(path)
        self.line = line
        where = self.path if line is None else f"{self.path}:{line}"
        super().__init__(f"{where}: {message}")


class SplitError(InputError):
    pass


class ConstructionError(InputError):
    pass


class UndefinedMetricError(InputError):
    pass


class NumericError(PndError, ArithmeticError):
    exit_code = 1
