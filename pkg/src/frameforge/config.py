"""Flat ``key = value`` run configuration with typed validation."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

REGIMES = ("strict", "desk")


def _floats(s) -> tuple:
    if isinstance(s, (list, tuple)):
        return tuple(float(x) for x in s)
    s = str(s).strip()
    if not s:
        return ()
    return tuple(float(x) if x.strip().lower() not in ("inf", "infinity") else math.inf
                 for x in s.split(","))


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of a run.  Defaults follow the strict construction.

    ``regime = desk`` replaces the parameter rules that cannot be met at desk
    scale by the explicit ``desk_*`` values; every replacement is recorded in
    the result and the checks that depend on it are reported as waived.
    """

    T: float = 32.0
    N_grid: int = 65536
    K: int = 2
    eta: tuple = ()  # explicit eta_1..eta_K; empty means the geometric rule
    eta0: float = 0.2
    eta_ratio: float = 0.5
    N_cap: int = 256
    deg_cap: int = 2048
    eps_safety: float = 0.5
    q_list: tuple = (4.0,)
    seed: int = 0
    w0: str = "one"
    freq_offset: int = 16
    ls_start: int = 8
    regime: str = "strict"
    desk_eps: float = 0.75
    desk_eps_ratio: float = 0.93
    n_test_functions: int = 20
    bessel_samples: int = 64
    decomposition_samples: int = 25
    x_step: float = 0.5  # x-lattice spacing, capped below the band-limited sampling spacing
    x_window: float = 200.0  # innermost x-window margin around Lambda
    out: str = "results"
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if self.N_grid < 2:
            raise ConfigError("N_grid must be at least 2")
        if self.K < 1:
            raise ConfigError("K must be at least 1")
        for name in ("N_cap", "deg_cap", "n_test_functions", "bessel_samples",
                     "decomposition_samples", "ls_start"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.eta and len(self.eta) < self.K:
            raise ConfigError("eta lists fewer values than K")
        if any(not e > 0 for e in self.eta):
            raise ConfigError("eta entries must be positive")
        if not 0 < self.eta0 or not 0 < self.eta_ratio < 1:
            raise ConfigError("eta0 must be positive and eta_ratio in (0, 1)")
        if not 0 < self.eps_safety < 1:
            raise ConfigError("eps_safety must lie in (0, 1)")
        if any(not q > 2 for q in self.q_list):
            raise ConfigError("q_list entries must exceed 2")
        if self.regime not in REGIMES:
            raise ConfigError(f"regime must be one of {REGIMES}")
        if not 0 < self.desk_eps or not 0 < self.desk_eps_ratio < 1:
            raise ConfigError("desk_eps must be positive and desk_eps_ratio in (0, 1)")
        if self.freq_offset < 10:
            raise ConfigError("freq_offset must be at least 10")
        if not self.x_step > 0 or not self.x_window > 0:
            raise ConfigError("x_step and x_window must be positive")

    # io
    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        kw = {}
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        for key, raw in data.items():
            key = key.strip()
            if key not in types or key == "extra":
                raise ConfigError(f"unknown key '{key}'")
            default = getattr(cls, key, None)
            try:
                if key in ("eta", "q_list"):
                    kw[key] = _floats(raw)
                elif isinstance(default, bool):
                    kw[key] = str(raw).lower() in ("1", "true", "yes")
                elif isinstance(default, int):
                    v = float(raw)
                    if v != int(v):
                        raise ValueError("not an integer")
                    kw[key] = int(v)
                elif isinstance(default, float):
                    kw[key] = float(raw)
                else:
                    kw[key] = str(raw).strip()
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for '{key}': {raw!r} ({exc})") from None
        return cls(**kw)

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        data = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            k, v = line.split("=", 1)
            k = k.strip()
            if not k:
                raise ConfigError(f"line {lineno}: empty key")
            if k in data:
                raise ConfigError(f"line {lineno}: duplicate key '{k}'")
            data[k] = v.strip()
        return cls.from_mapping(data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        p = Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.parse(text)

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    def to_json(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            if f.name == "extra":
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ["inf" if math.isinf(x) else x for x in v]
            out[f.name] = v
        return out

    def dumps(self) -> str:
        lines = []
        for k, v in self.to_json().items():
            if isinstance(v, list):
                v = ",".join(str(x) for x in v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"

    @property
    def etas(self) -> tuple:
        from .induction import choose_eta

        if self.eta:
            return tuple(self.eta[: self.K])
        return tuple(choose_eta(self.K, self.eta0, self.eta_ratio))
