"""Exception hierarchy shared by all treecommentary modules."""


class TreeCommentaryError(Exception):
    """Base class for every error raised by this package."""


# scene data

class InvalidObservation(TreeCommentaryError, ValueError):
    pass


class UnknownPair(TreeCommentaryError, KeyError):
    """A (class, action) pair is missing from the codebook."""

    def __init__(self, pair, line=None):
        self.pair = pair
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"pair {pair[0]}:{pair[1]} not in codebook{where}")

    def __str__(self):
        return self.args[0]


class ParseError(TreeCommentaryError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class InvalidFraction(TreeCommentaryError, ValueError):
    pass


class InvalidConfig(TreeCommentaryError, ValueError):
    pass


# models

class EmptyDataset(TreeCommentaryError, ValueError):
    pass


class NotRegression(TreeCommentaryError, TypeError):
    pass


class FormatError(TreeCommentaryError, ValueError):
    """A model, codebook or phrasebook file could not be decoded."""


class EmptyBackground(TreeCommentaryError, ValueError):
    pass


# explanations

class ContradictoryPath(TreeCommentaryError, ValueError):
    pass


class NoCounterfactual(TreeCommentaryError):
    """No admissible leaf exists under the given constraints."""


class DesiredEqualsFactual(TreeCommentaryError, ValueError):
    pass


class UncoveredInterval(TreeCommentaryError, KeyError):
    def __init__(self, feature, lower, upper):
        self.feature = feature
        self.lower = lower
        self.upper = upper
        super().__init__(f"no phrase covers {feature} in ({lower}, {upper}]")

    def __str__(self):
        return self.args[0]


# metrics

class EmptyCandidate(TreeCommentaryError, ValueError):
    pass


class EmptyInput(TreeCommentaryError, ValueError):
    pass
