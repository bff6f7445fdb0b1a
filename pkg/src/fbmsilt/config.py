"""Experiment configuration: human-readable files, stable fingerprints."""

from __future__ import annotations

import configparser
import io
import os
from dataclasses import asdict, dataclass, field, fields

from .params import HurstParams, MollifierConfig, ValidationError, fingerprint

OUTPUT_ROOT_ENV = "FBMSILT_OUTPUT_ROOT"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; serializable to an INI file with one
    section per concern, fingerprint independent of field order."""

    H: float = 0.5
    d: int = 2
    T: float = 1.0
    n_steps: int = 512
    m_nodes: int = 128
    epsilon: float = 0.05
    n_levels: int = 11
    ratio: float = 0.5
    n_paths: int = 1000
    seed: int = 0
    n_max: int = 3
    n_samples: int = 200_000
    n_list: tuple[int, ...] = (512, 1024, 2048)
    output_dir: str = ""

    _SECTIONS = {
        "model": ("H", "d", "T"),
        "grid": ("n_steps", "m_nodes", "n_list"),
        "mollifier": ("epsilon", "n_levels", "ratio"),
        "ensemble": ("n_paths", "seed"),
        "moments": ("n_max", "n_samples"),
        "output": ("output_dir",),
    }

    def __post_init__(self):
        self.model  # validate eagerly
        if self.n_steps < 1 or self.m_nodes < 1:
            raise ValidationError("n_steps and m_nodes must be positive")
        if self.n_paths < 1:
            raise ValidationError("n_paths must be positive")
        object.__setattr__(self, "n_list",
                           tuple(int(n) for n in self.n_list))

    @property
    def model(self) -> HurstParams:
        return HurstParams(H=self.H, d=self.d, T=self.T)

    @property
    def mollifier(self) -> MollifierConfig:
        if self.n_levels <= 1:
            return MollifierConfig(epsilon=self.epsilon)
        return MollifierConfig.geometric(self.model, self.n_levels,
                                         self.ratio)

    @property
    def fingerprint(self) -> str:
        payload = asdict(self)
        payload.pop("output_dir")
        payload["n_list"] = list(self.n_list)
        return fingerprint(payload)

    def resolved_output_dir(self) -> str:
        if self.output_dir:
            return self.output_dir
        return os.environ.get(OUTPUT_ROOT_ENV, os.path.join(".", "runs"))

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        for section, names in self._SECTIONS.items():
            cp[section] = {}
            for name in names:
                value = getattr(self, name)
                if name == "n_list":
                    value = ",".join(str(v) for v in value)
                cp[section][name] = str(value)
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_ini())

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp.read_string(text)
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for section in cp.sections():
            if section not in cls._SECTIONS:
                raise ValidationError(f"unknown config section [{section}]")
            for name, raw in cp[section].items():
                if name not in cls._SECTIONS[section]:
                    raise ValidationError(
                        f"unknown option {name!r} in section [{section}]")
                if name == "n_list":
                    kwargs[name] = tuple(
                        int(v) for v in raw.split(",") if v.strip())
                elif types[name] == "int":
                    kwargs[name] = int(raw)
                elif types[name] == "float":
                    kwargs[name] = float(raw)
                else:
                    kwargs[name] = raw
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_ini(fh.read())
