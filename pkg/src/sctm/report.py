from dataclasses import dataclass, field
from typing import Any

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Issue:
    severity: str
    code: str
    message: str
    witness: Any = None


@dataclass
class ValidationReport:
    """Collects every violated invariant instead of failing on the first."""

    issues: list = field(default_factory=list)
    forced_seeds: frozenset = frozenset()
    width: int | None = None

    def error(self, code, message, witness=None):
        self.issues.append(Issue(ERROR, code, message, witness))

    def warn(self, code, message, witness=None):
        self.issues.append(Issue(WARNING, code, message, witness))

    @property
    def errors(self):
        return [i for i in self.issues if i.severity == ERROR]

    @property
    def warnings(self):
        return [i for i in self.issues if i.severity == WARNING]

    @property
    def ok(self):
        return not self.errors

    @property
    def codes(self):
        return {i.code for i in self.issues}

    def __str__(self):
        if not self.issues:
            return "valid"
        return "\n".join(f"[{i.severity}] {i.code}: {i.message}" for i in self.issues)
