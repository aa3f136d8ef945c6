"""Exception hierarchy shared by all delexi modules."""


class DelexiError(Exception):
    """Base class for every error raised by the toolkit."""


class AnnotationError(DelexiError):
    """Malformed token annotation (bad BIO chain, bad category, length mismatch)."""

    def __init__(self, message, sentence=None, token_index=None):
        self.sentence = sentence
        self.token_index = token_index
        where = []
        if sentence is not None:
            where.append(f"sentence {sentence!r}")
        if token_index is not None:
            where.append(f"token {token_index}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class FormatError(DelexiError):
    """Unparseable input line or row."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        prefix = ""
        if source is not None:
            prefix += f"{source}:"
        if line is not None:
            prefix += f"line {line}: "
        elif prefix:
            prefix += " "
        super().__init__(prefix + message)


class LabelError(DelexiError):
    """Unknown label string or label-space mismatch."""


class MissingBodyError(DelexiError):
    """FNC stance rows reference article bodies that do not exist."""

    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"stances reference missing Body IDs: {', '.join(map(str, self.missing))}")


class ConfigError(DelexiError):
    """Invalid configuration value."""


class MissingRootError(DelexiError):
    """Tag root words absent from the base embedding table."""

    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"root words missing from base embeddings: {', '.join(self.missing)}")
