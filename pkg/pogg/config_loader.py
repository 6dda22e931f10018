from pathlib import Path
from typing import Dict, Any

from . import errors
from . import models

KNOWN_KEYS = ("b", "n", "sizes", "m", "r")


class GameConfigFile:
    def __init__(self, config_path: str) -> None:
        """
        Loader for flat game configuration files.

        :param config_path: Path to a file of `key = value` lines. GameConfigFile("/path/to/game.cfg")\n
                            Keys are b, n, sizes, m and r; sizes is a comma separated list.
                            Blank lines and lines starting with # are ignored.
        """
        self.path = Path(config_path)
        self.values: Dict[str, Any] = {}

    def load(self) -> models.GameConfig:
        """
        Parse the file and validate it into a GameConfig.
        Raises PoggConfigError naming the path or key at fault.
        """
        self.values = self._parse(self._read_lines())
        try:
            return models.build_model(model=models.GameConfig, data=self.values)
        except errors.PoggBuildModelError as e:
            raise errors.PoggConfigError(err=e, message=f"Invalid game configuration in {self.path}")

    def _read_lines(self):
        try:
            with open(self.path, "r") as file:
                return file.readlines()
        except FileNotFoundError as e:
            raise errors.PoggConfigError(err=e, message=f"File not found: {self.path}")
        except OSError as e:
            raise errors.PoggConfigError(err=e, message=f"Unable to read {self.path}")

    def _parse(self, lines) -> Dict[str, Any]:
        values: Dict[str, Any] = {}
        for number, line in enumerate(lines, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise errors.PoggConfigError(
                    err=None, message=f"{self.path}:{number}: expected `key = value`, got '{line}'"
                )

            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in KNOWN_KEYS:
                raise errors.PoggConfigError(err=None, message=f"Unknown key '{key}' in {self.path}")
            if key in values:
                raise errors.PoggConfigError(err=None, message=f"Duplicate key '{key}' in {self.path}")
            values[key] = self._convert(key, raw)
        return values

    def _convert(self, key: str, raw: str):
        try:
            if key == "sizes":
                return tuple(int(part) for part in raw.split(",") if part.strip())
            if key == "r":
                return float(raw)
            return int(raw)
        except ValueError as e:
            raise errors.PoggConfigError(err=e, message=f"Invalid value for key '{key}' in {self.path}: '{raw}'")
