"""Basic tests for tbs-noma package."""

import subprocess
import sys

from tbs_noma import __version__


def test_version():
    """Test that version is properly set."""
    assert __version__ == "1.1.0"


def test_imports():
    """Test that the public API can be imported from the package root."""
    from tbs_noma import (  # noqa: F401
        Config,
        ExperimentSpec,
        NetworkConfig,
        RelayPolicy,
        abep_e2e,
        main,
        optimum_threshold,
        run_campaign,
        table1_coeffs,
    )


def test_module_entry_point():
    """python -m tbs_noma runs the CLI."""
    result = subprocess.run([sys.executable, "-m", "tbs_noma", "table", "--mode", "1"],
                            capture_output=True, text=True)
    assert result.returncode == 0
    assert "BPSK" in result.stdout
