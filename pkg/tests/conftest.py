import json
from pathlib import Path

import numpy as np
import pytest

from ghtorus.model import load_system, validate_system

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def config(name):
    return load_system(CONFIGS / f"{name}.json")


def raw_config(name):
    return json.loads((CONFIGS / f"{name}.json").read_text())


def system(coeffs, symbols, N=1, **extra):
    """Build a validated system from compact coefficient/symbol dicts."""
    raw = {"n": len(coeffs), "N": N, "coeffs": coeffs, "symbols": symbols}
    raw.update(extra)
    return validate_system(raw)


def poly(*terms):
    """Polynomial symbol from ``(power, re, im)`` triples."""
    return {"form": "polynomial", "coeffs": [{"power": p, "re": re, "im": im} for p, re, im in terms]}


def random_trig(rng, max_k=2, mean=1.0, scale=0.3, imag_scale=0.0):
    """Random trigonometric coefficient with average ``mean``."""
    terms = [{"k": 0, "re": mean}]
    for k in range(1, max_k + 1):
        for kk in (k, -k):
            terms.append({"k": kk, "re": float(scale * rng.normal()), "im": float(imag_scale * rng.normal())})
    return {"trig": terms}


def hermitian_trig(rng, max_k=2, mean=1.0, scale=0.2, imag_scale=0.0):
    """Random trigonometric coefficient ``a + i b`` with real ``a`` (average ``mean``) and real ``b`` of size ``imag_scale``."""
    terms = [{"k": 0, "re": mean}]
    for k in range(1, max_k + 1):
        a = scale * complex(rng.normal(), rng.normal())
        b = imag_scale * complex(rng.normal(), rng.normal())
        for kk, c in ((k, a + 1j * b), (-k, a.conjugate() + 1j * b.conjugate())):
            terms.append({"k": kk, "re": float(c.real), "im": float(c.imag)})
    return {"trig": terms}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
