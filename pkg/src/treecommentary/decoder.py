"""Phrasebook-driven rendering of causes and conditions as commentary text.

A phrasebook file has a ``version`` line followed by sections:

* ``[templates]``: ``factual``, ``counterfactual`` and the two ``*_empty``
  fallbacks, with ``{clauses}`` and ``{action}`` placeholders.
* ``[actions.factual]`` / ``[actions.counterfactual]``: verb phrase per action
  token; ``token@Feature`` overrides it when the first clause is on that feature.
* ``[labels]``: noun phrases used by ``{agents}``, keyed ``lane|code``,
  ``TL|code``, ``EgoPlan|code`` and ``group|ClassName``.
* ``[clauses.factual]`` / ``[clauses.counterfactual]``: rules
  ``Feature|low..high -> clause``.

A cause ``lower < x <= upper`` admits the domain codes inside it. The first
rule (file order) whose ``low..high`` range contains all admitted codes
supplies the clause.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Optional, Sequence

from .errors import FormatError, UncoveredInterval
from .scene import FEATURE_NAMES, LANE_FEATURES, AgentClass, Codebook, EgoAction, default_codebook

MODES = ("factual", "counterfactual")
TEMPLATE_KEYS = ("factual", "counterfactual", "factual_empty", "counterfactual_empty")
PHRASEBOOK_ENV = "TREECOMMENTARY_PHRASEBOOK"

_RULE = re.compile(r"^(\w+)\|(-?\d+)\.\.(-?\d+)\s*->\s*(.+)$")


@dataclass(frozen=True)
class ClauseRule:
    feature: str
    low: int
    high: int
    text: str

    def covers(self, codes) -> bool:
        return all(self.low <= c <= self.high for c in codes)


@dataclass(frozen=True)
class Phrasebook:
    version: str
    templates: MappingProxyType
    actions: MappingProxyType          # mode -> {key: phrase}
    labels: MappingProxyType
    clauses: MappingProxyType          # mode -> tuple[ClauseRule]

    # -- loading --------------------------------------------------------
    @classmethod
    def from_text(cls, text: str) -> "Phrasebook":
        version, section = None, None
        sections: dict[str, list] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                sections.setdefault(section, [])
                continue
            if section is None:
                key, sep, value = line.partition("=")
                if not sep or key.strip() != "version":
                    raise FormatError(f"phrasebook line {lineno}: expected 'version = ...'")
                version = value.strip()
                continue
            sections[section].append((lineno, line))
        if not version:
            raise FormatError("phrasebook has no version line")

        def pairs(name):
            out = {}
            for lineno, line in sections.get(name, []):
                key, sep, value = line.partition("=")
                if not sep:
                    raise FormatError(f"phrasebook line {lineno}: expected 'key = value'")
                out[key.strip()] = value.strip()
            return out

        templates = pairs("templates")
        missing = [k for k in TEMPLATE_KEYS if k not in templates]
        if missing:
            raise FormatError(f"phrasebook lacks templates: {', '.join(missing)}")
        actions, clauses = {}, {}
        for mode in MODES:
            actions[mode] = MappingProxyType(pairs(f"actions.{mode}"))
            for a in EgoAction:
                if a.token not in actions[mode]:
                    raise FormatError(f"phrasebook lacks {mode} action phrase for {a.token!r}")
            rules = []
            for lineno, line in sections.get(f"clauses.{mode}", []):
                m = _RULE.match(line)
                if not m:
                    raise FormatError(f"phrasebook line {lineno}: expected 'Feature|low..high -> clause'")
                feat, low, high, body = m.group(1), int(m.group(2)), int(m.group(3)), m.group(4).strip()
                if feat not in FEATURE_NAMES:
                    raise FormatError(f"phrasebook line {lineno}: unknown feature {feat!r}")
                if low > high:
                    raise FormatError(f"phrasebook line {lineno}: empty range {low}..{high}")
                rules.append(ClauseRule(feat, low, high, body))
            clauses[mode] = tuple(rules)
        return cls(version, MappingProxyType(templates), MappingProxyType(actions),
                   MappingProxyType(pairs("labels")), MappingProxyType(clauses))

    @classmethod
    def load(cls, path) -> "Phrasebook":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise FormatError(f"cannot read phrasebook {path}: {exc}") from exc
        return cls.from_text(text)

    # -- lookup ---------------------------------------------------------
    def action_phrase(self, action: EgoAction, mode: str, lead_feature: Optional[int] = None) -> str:
        table = self.actions[mode]
        token = EgoAction(action).token
        if lead_feature is not None:
            override = table.get(f"{token}@{FEATURE_NAMES[lead_feature]}")
            if override is not None:
                return override
        return table[token]

    def clause(self, cause, mode: str, codebook: Optional[Codebook] = None) -> str:
        codebook = codebook or default_codebook()
        f = cause.feature_index
        name = FEATURE_NAMES[f]
        codes = admitted_codes(cause, codebook)
        if codes:
            for rule in self.clauses[mode]:
                if rule.feature == name and rule.covers(codes):
                    return rule.text.replace("{agents}", self._agents(f, codes, codebook))
        raise UncoveredInterval(name, cause.lower_bound, cause.upper_bound)

    def _label(self, f: int, code: int) -> str:
        key = f"lane|{code}" if f in LANE_FEATURES else f"{FEATURE_NAMES[f]}|{code}"
        return self.labels.get(key, str(code))

    def _items(self, f: int, codes, codebook: Codebook) -> list:
        if FEATURE_NAMES[f] == "EgoPlan":
            return [self._label(f, c) for c in codes]
        domain = codebook.feature_domains()[f]
        items, done = [], set()
        for c in codes:
            if c in done:
                continue
            cls = codebook.pair(c)[0]
            family = [d for d in domain if codebook.pair(d)[0] is cls]
            group = self.labels.get(f"group|{cls.value}")
            if cls is not AgentClass.NONE and group and len(family) > 1 and set(family) <= set(codes):
                items.append(group)
                done.update(family)
            else:
                items.append(self._label(f, c))
                done.add(c)
        return items

    def _agents(self, f: int, codes: list, codebook: Codebook) -> str:
        items = self._items(f, codes, codebook)
        if FEATURE_NAMES[f] != "EgoPlan" and len(items) > 3:
            # long lists read better as exceptions
            rest = [c for c in codebook.feature_domains()[f] if c not in codes]
            others = self._items(f, [c for c in rest if c != 0], codebook)
            if len(others) < len(items):
                some = self.labels.get("any|agent", "an agent")
                if others:
                    some = f"{some} other than {_join(others)}"
                if 0 in codes:
                    return f"{self._label(f, 0)} or {some}"
                return some
        return _join(items)

    def check_coverage(self, codebook: Optional[Codebook] = None) -> None:
        """Raise UncoveredInterval unless every domain code has a rule in both modes."""
        codebook = codebook or default_codebook()
        for mode in MODES:
            for f, domain in enumerate(codebook.feature_domains()):
                for c in domain:
                    if not any(r.feature == FEATURE_NAMES[f] and r.covers([c])
                               for r in self.clauses[mode]):
                        raise UncoveredInterval(FEATURE_NAMES[f], c - 0.5, c + 0.5)


def admitted_codes(cause, codebook: Codebook) -> list:
    """Domain codes of the cause's feature lying in ``lower < code <= upper``."""
    domain = codebook.feature_domains()[cause.feature_index]
    return [c for c in domain if cause.lower_bound < c <= cause.upper_bound]


def default_phrasebook_path() -> Path:
    return Path(str(resources.files("treecommentary") / "data" / "phrasebook.txt"))


_DEFAULT = None


def default_phrasebook() -> Phrasebook:
    """The phrasebook shipped with the package (loaded once)."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = Phrasebook.load(default_phrasebook_path())
    return _DEFAULT


def resolve_phrasebook(path=None) -> Phrasebook:
    """Explicit path, else ``$TREECOMMENTARY_PHRASEBOOK``, else the shipped default."""
    path = path or os.environ.get(PHRASEBOOK_ENV)
    return Phrasebook.load(path) if path else default_phrasebook()


def _join(items) -> str:
    return items[0] if len(items) == 1 else ", ".join(items[:-1]) + " or " + items[-1]


def _sentence(text: str) -> str:
    return text[:1].upper() + text[1:]


def _decode(mode, action, causes, phrasebook, codebook):
    phrasebook = phrasebook or default_phrasebook()
    causes = list(causes)
    if not causes:
        phrase = phrasebook.action_phrase(action, mode)
        return _sentence(phrasebook.templates[f"{mode}_empty"].format(action=phrase))
    clauses = "; ".join(phrasebook.clause(c, mode, codebook) for c in causes)
    phrase = phrasebook.action_phrase(action, mode, causes[0].feature_index)
    return _sentence(phrasebook.templates[mode].format(clauses=clauses, action=phrase))


def decode_factual(action: EgoAction, causes: Sequence, phrasebook: Optional[Phrasebook] = None,
                   codebook: Optional[Codebook] = None) -> str:
    """Factual sentence: clauses in cause order, then the action clause."""
    return _decode("factual", action, causes, phrasebook, codebook)


def decode_counterfactual(action: EgoAction, conditions: Sequence,
                          phrasebook: Optional[Phrasebook] = None,
                          codebook: Optional[Codebook] = None) -> str:
    """Counterfactual sentence naming the target action and required conditions."""
    return _decode("counterfactual", action, conditions, phrasebook, codebook)


def code_interval(code: int) -> tuple[float, float]:
    """The unit interval ``(code - 0.5, code + 0.5]`` admitting only ``code``."""
    return code - 0.5, code + 0.5


__all__ = [
    "ClauseRule", "Phrasebook", "admitted_codes", "decode_factual", "decode_counterfactual",
    "default_phrasebook", "default_phrasebook_path", "resolve_phrasebook", "code_interval",
    "PHRASEBOOK_ENV",
]
