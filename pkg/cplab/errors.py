"""Exceptions raised across the laboratory."""


class CplabError(Exception):
    """Base class of every error raised by cplab."""

    exit_code = 1

    def summary(self):
        """Machine-readable description used by the command line."""
        return {'error': type(self).__name__, 'message': str(self)}


class ConfigError(CplabError):
    exit_code = 2


class InvalidSpecError(ConfigError, ValueError):
    """A scenario or config violates one of its invariants."""

    def __init__(self, field_path, message):
        super().__init__('{}: {}'.format(field_path, message))
        self.field_path = field_path

    def summary(self):
        d = super().summary()
        d['path'] = self.field_path
        return d


class MissingArtifactError(ConfigError, FileNotFoundError):

    def __init__(self, path, message='missing file'):
        super().__init__('{}: {}'.format(path, message))
        self.path = path

    def summary(self):
        d = super().summary()
        d['path'] = str(self.path)
        return d


class TracingDisabledError(ConfigError):
    pass


class StrategyParseError(ConfigError, ValueError):
    """Strategy text could not be turned into a Strategy."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__('; '.join(str(d) for d in self.diagnostics))

    def summary(self):
        d = super().summary()
        d['diagnostics'] = [diag.to_dict() for diag in self.diagnostics]
        return d


class DomainMismatchError(ConfigError, ValueError):
    pass


class PreconditionError(CplabError, ValueError):
    pass


class MissingDecisionError(CplabError, KeyError):

    def __str__(self):
        return str(self.args[0]) if self.args else ''


class OverrideOutOfRangeError(CplabError, ValueError):
    pass


class WindowTooShortError(CplabError, ValueError):
    pass


class MetricDomainError(CplabError, ValueError):
    pass


class EmptyLogError(CplabError, ValueError):
    pass


class MisalignedSeriesError(CplabError, ValueError):
    pass


class UnsupportedPopulationError(CplabError, ValueError):
    """The oracle is only defined for ALOHA / TDMA / agent populations."""

    exit_code = 4

    def __init__(self, message, segment=None):
        super().__init__(message)
        self.segment = segment

    def summary(self):
        d = super().summary()
        if self.segment is not None:
            d['segment'] = self.segment
        return d


class BackendError(CplabError, RuntimeError):
    exit_code = 3


class BackendUnavailableError(BackendError):

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status

    def summary(self):
        d = super().summary()
        d['status'] = self.status
        return d


class MalformedResponseError(BackendError):
    pass


class UnrecognizedTemplateError(BackendError, ValueError):
    pass


class JudgeIndecisionError(BackendError):
    """Neither ranker candidate materializes into a strategy."""

    def __init__(self, message, candidates=(), diagnostics=()):
        super().__init__(message)
        self.candidates = tuple(candidates)
        self.diagnostics = list(diagnostics)


class MaterializationExhaustedError(BackendError):
    """Every attempt at turning a response into a strategy failed."""

    def __init__(self, bundles):
        self.bundles = [list(b) for b in bundles]
        super().__init__('no valid strategy after {} attempt(s)'.format(
            len(self.bundles)))

    def summary(self):
        d = super().summary()
        d['diagnostics'] = [[diag.to_dict() for diag in b]
                            for b in self.bundles]
        return d
