import sys
from pathlib import Path

import pytest

from foodnet.graph import SupplyNetwork

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture()
def k4() -> SupplyNetwork:
    """Complete digraph on four nodes, unit weights."""
    names = ["A", "B", "C", "D"]
    edges = {(a, b): 1.0 for a in names for b in names if a != b}
    return SupplyNetwork(year=2020, edges=edges)


@pytest.fixture()
def star5() -> SupplyNetwork:
    """HUB exports to four spokes."""
    edges = {("HUB", s): float(i + 1) for i, s in enumerate(["P1", "P2", "P3", "P4"])}
    return SupplyNetwork(year=2020, edges=edges)


def run_cli(argv, capsys=None):
    """Invoke the CLI entry point in-process; returns (exit_code, stdout)."""
    from foodnet.cli import main

    try:
        code = main([str(a) for a in argv])
    except SystemExit as exc:  # argparse usage errors exit before main's handler
        code = exc.code if isinstance(exc.code, int) else 2
    if capsys is None:
        return code, ""
    out = capsys.readouterr().out
    return code, out


# make `import oracles` / `import synth` work no matter the rootdir
sys.path.insert(0, str(Path(__file__).parent))
