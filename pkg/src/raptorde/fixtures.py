"""Bundled degree distributions used by the validation suite and the CLI.

Each fixture is a JSON file shipped with the package.  ``code`` fixtures hold
an output degree distribution plus a regular precode and the design point it
was published for; ``ensemble`` fixtures hold a complete three-edge-type
ensemble; ``precode`` fixtures hold just a precode profile.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .ensemble import LtDistribution, MetEnsemble, PrecodeDistribution, from_json_dict


@dataclass(frozen=True)
class CodeFixture:
    name: str
    omega: LtDistribution
    precode: PrecodeDistribution
    design_snr_db: float
    mu0: float
    eta: float | None
    beta: float


@dataclass(frozen=True)
class EnsembleFixture:
    name: str
    ensemble: MetEnsemble
    design_snr_db: float
    eta: float
    r_ldpc: float


@dataclass(frozen=True)
class PrecodeFixture:
    name: str
    precode: PrecodeDistribution


def _fixture_dir():
    return resources.files("raptorde") / "fixtures"


def list_fixtures() -> list[str]:
    return sorted(p.name[: -len(".json")] for p in _fixture_dir().iterdir() if p.name.endswith(".json"))


def fixture_text(name: str) -> str:
    path = _fixture_dir() / f"{name}.json"
    try:
        return path.read_text()
    except FileNotFoundError:
        raise KeyError(f"no fixture named {name!r}; available: {', '.join(list_fixtures())}") from None


def _parse_precode(d: dict) -> PrecodeDistribution:
    return PrecodeDistribution(
        lam={int(k): float(v) for k, v in d["lambda"].items()},
        rho={int(k): float(v) for k, v in d["rho"].items()},
        rate=float(d["rate"]),
    )


def load_fixture(name: str) -> CodeFixture | EnsembleFixture | PrecodeFixture:
    d = json.loads(fixture_text(name))
    kind = d["kind"]
    if kind == "code":
        omega_raw = {int(k): float(v) for k, v in d["omega"].items()}
        total = sum(omega_raw.values())
        return CodeFixture(
            name=d["name"],
            omega=LtDistribution({k: v / total for k, v in omega_raw.items()}),
            precode=_parse_precode(d["precode"]),
            design_snr_db=float(d["design_snr_db"]),
            mu0=float(d["mu0"]),
            eta=None if d.get("eta") is None else float(d["eta"]),
            beta=float(d["beta"]),
        )
    if kind == "ensemble":
        return EnsembleFixture(
            name=d["name"],
            ensemble=from_json_dict(d["ensemble"]),
            design_snr_db=float(d["design_snr_db"]),
            eta=float(d["eta"]),
            r_ldpc=float(d["r_ldpc"]),
        )
    if kind == "precode":
        return PrecodeFixture(name=d["name"], precode=_parse_precode(d))
    raise ValueError(f"unknown fixture kind {kind!r} in {name}")


def export_fixture(name: str, dest: str | Path) -> Path:
    """Copy a fixture file to ``dest`` (a file path or directory)."""
    dest = Path(dest)
    if dest.is_dir():
        dest = dest / f"{name}.json"
    dest.write_text(fixture_text(name))
    return dest
