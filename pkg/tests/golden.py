"""Golden values: written on the first run, compared on every later run."""

import json
from pathlib import Path

import numpy as np

GOLDEN_DIR = Path(__file__).parent / "golden"


def check_golden(name: str, values: dict, atol: float) -> None:
    path = GOLDEN_DIR / f"{name}.json"
    if not path.exists():
        GOLDEN_DIR.mkdir(exist_ok=True)
        path.write_text(json.dumps(values, indent=2, sort_keys=True) + "\n")
        return
    stored = json.loads(path.read_text())
    assert set(stored) == set(values), f"{name}: keys changed"
    for key, want in stored.items():
        np.testing.assert_allclose(values[key], want, atol=atol, err_msg=f"{name}[{key}]")
