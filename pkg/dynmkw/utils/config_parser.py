from os import environ
from typing import Dict, List, Optional

from dotenv import dotenv_values

from dynmkw.exceptions import ConfigError

_KEYS = {
    "SIM_N": int,
    "SIM_L": int,
    "SIM_BOUNDARIES": "ints",
    "SIM_SNR_GRID": "floats",
    "SIM_OUTLIER_RATE": float,
    "SIM_OUTLIER_EXCESS_DB": float,
    "SIM_CORRELATION": float,
    "SIM_REPLICATIONS": int,
    "SIM_SEED": int,
    "SIM_SNR_CONVENTION": str,
}


def _split(raw: str) -> List[str]:
    return [part for part in raw.replace(",", " ").split() if part]


class ScenarioParser:
    """Reads `SIM_*` scenario keys from a dotenv-style file or the environment."""

    def __init__(self, config_file: Optional[str] = None):
        self.config_file = config_file
        self.values: Dict[str, object] = {}

    def parse_from_env(self) -> Dict[str, object]:
        return self._parse(dict(filter(lambda kv: kv[0].startswith("SIM_"), environ.items())))

    def parse_from_file(self) -> Dict[str, object]:
        if not self.config_file:
            raise ConfigError("no scenario file given")
        try:
            with open(self.config_file, encoding="utf-8") as stream:
                raw = dotenv_values(stream=stream)
        except OSError as err:
            raise ConfigError(f"cannot read scenario file {self.config_file}: {err}")
        return self._parse(raw)

    def _parse(self, raw: Dict[str, Optional[str]]) -> Dict[str, object]:
        values: Dict[str, object] = {}
        for key, text in sorted(raw.items()):
            if key not in _KEYS:
                raise ConfigError(f"unknown scenario key {key}")
            if text is None or not text.strip():
                raise ConfigError(f"scenario key {key} has no value")
            kind = _KEYS[key]
            try:
                if kind == "ints":
                    values[key] = tuple(int(part) for part in _split(text))
                elif kind == "floats":
                    values[key] = tuple(float(part) for part in _split(text))
                else:
                    values[key] = kind(text.strip())
            except ValueError:
                raise ConfigError(f"scenario key {key} has a malformed value {text!r}")
        self.values = values
        return values
