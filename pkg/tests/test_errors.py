import pytest
from valuecast.errors import (
    BalancingInfeasible,
    CapacityAuditFailed,
    DataError,
    NodeBudgetExceeded,
    ParseError,
    SchemaMismatch,
)


@pytest.mark.parametrize(
    "error, attributes",
    [
        (
            BalancingInfeasible("short", deficit=4.0, day=2, hour=7),
            dict(deficit=4.0, day=2, hour=7),
        ),
        (ParseError("bad", line=5, column="wind_kw"), dict(line=5, column="wind_kw")),
        (NodeBudgetExceeded("nodes", solution="best"), dict(solution="best")),
        (CapacityAuditFailed("audit", report={"ok": False}), dict(report={"ok": False})),
    ],
)
def test_suggest_keeps_attributes(error, attributes):
    suggested = error.suggest("more context")
    assert type(suggested) is type(error)
    assert suggested.args == error.args + ("more context",)
    for name, value in attributes.items():
        assert getattr(suggested, name) == value


def test_suggest_keeps_assigned_attributes():
    error = SchemaMismatch("header")
    error.path = "records.csv"
    suggested = error.suggest("check the export")
    assert suggested.path == "records.csv"
    assert isinstance(suggested, DataError)
    assert "check the export" in str(suggested)
