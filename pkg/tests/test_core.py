"""
Tests for settings, logging and the exit-code contract
"""

import pytest
from pydantic import ValidationError

from app.core.config import Settings
from app.core.exceptions import (
    BudgetExceeded,
    LimitExceeded,
    MalformedLine,
    RuleMismatch,
    SchemaVersionMismatch,
    UnsupportedRule,
    format_path,
)
from app.core.logger import PipelineAuditLogger
from app.main import exit_code_for


class TestSettings:
    """Test environment-driven settings"""

    def test_defaults(self):
        """Test the engine and generation defaults"""
        s = Settings()
        assert s.MAX_FACTS == 100000
        assert s.MAX_ROUNDS == 1000
        assert s.DEFAULT_SEED == 42

    def test_color_mode_normalized(self, monkeypatch):
        """Test colour modes are case-insensitive"""
        monkeypatch.setenv("OBS_COLOR", " Always ")
        assert Settings().OBS_COLOR == "always"

    def test_color_mode_rejected(self, monkeypatch):
        """Test an unknown colour mode"""
        monkeypatch.setenv("OBS_COLOR", "sometimes")
        with pytest.raises(ValidationError):
            Settings()


class TestAuditLogger:
    """Test the generation audit trail"""

    def test_entries(self):
        """Test start, skip and completion events are kept in order"""
        audit = PipelineAuditLogger()
        audit.log_generation_start("toy", 7, 10)
        audit.log_record_skipped("toy", "E(a, b)", "EqRefl")
        audit.log_generation_complete("toy", emitted=3, skipped=1, samples=4)
        assert [e["event"] for e in audit.entries] == [
            "generation_started",
            "record_skipped",
            "generation_completed",
        ]
        assert audit.entries[-1]["skipped"] == 1


class TestExitCodes:
    """Test exception families map onto exit codes"""

    @pytest.mark.parametrize(
        "exc,code",
        [
            (RuleMismatch((0, 1), "bad"), 1),
            (MalformedLine(3, "bad"), 1),
            (SchemaVersionMismatch("obsdual 2", "obsdual 1"), 2),
            (FileNotFoundError(2, "missing"), 3),
            (LimitExceeded("facts", 10), 4),
            (BudgetExceeded(100, 10), 4),
            (UnsupportedRule("EqRefl"), 5),
        ],
    )
    def test_mapping(self, exc, code):
        """Test one exception per family"""
        assert exit_code_for(exc) == code

    def test_path_rendering(self):
        """Test proof paths in messages"""
        assert format_path(()) == "root"
        assert str(RuleMismatch((0, 1), "bad")) == "bad at root/0/1"
