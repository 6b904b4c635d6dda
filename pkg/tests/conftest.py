from __future__ import annotations

from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
STUBS = Path(__file__).parent / "stubs"

ACCEPTANCE_DESCRIPTIONS = {
    "criterion_1": "rule semantics property suite (1000 cascade outputs, <10s)",
    "criterion_2": "fusion vs brute-force oracle, 216/216 count vectors",
    "criterion_3": "metric harness vs naive oracle + report rendering targets",
    "criterion_4": "logreg gradient check, loss descent, separable fit (<5s)",
    "criterion_5": "gbdt loss descent, XOR fit vs logreg, deterministic bytes",
    "criterion_6": "end-to-end golden run + noise degradation ordering (<30s)",
    "criterion_7": "hybrid degenerate gates equal meta-only / rule-only",
    "criterion_8": "external backend: exchange, protocol violation, timeout",
}


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def stub(request):
    def path(name: str) -> str:
        return str(STUBS / f"{name}.py")

    return path


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid or getattr(report, "when", "call") != "call":
                continue
            for key, description in ACCEPTANCE_DESCRIPTIONS.items():
                if key in nodeid:
                    outcome = "PASS" if status == "passed" else "FAIL"
                    lines.append(f"ACCEPTANCE {key}: {outcome}  [{description}]")
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
