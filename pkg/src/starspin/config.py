"""Molecule and sample definition files plus the shipped presets.

Both formats are line-oriented key/value text: ``#`` comments, ``key = value``
assignments, and ``[section]`` headers for the molecule's spin and coupling
tables.  Errors carry the file name and line number.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .core import Spin, SpinSystem
from .noise import SampleSpec

SAMPLE_PRESETS = ("sample1", "sample2", "sample3", "sample4")


class ConfigError(ValueError):
    def __init__(self, filename: str, line: int, message: str):
        super().__init__(f"{filename}:{line}: {message}")
        self.filename = filename
        self.line = line


def _data_path(name: str) -> Path:
    return Path(str(resources.files("starspin").joinpath("data", name)))


def default_molecule_path() -> Path:
    return _data_path("propan2ol.cfg")


def sample_preset_path(name: str) -> Path:
    if name not in SAMPLE_PRESETS:
        raise ValueError(f"unknown sample preset {name!r}; presets are {SAMPLE_PRESETS}")
    return _data_path(f"{name}.cfg")


def sequence_path(name: str) -> Path:
    return _data_path(f"sequences/{name}.dsl")


def _parse_lines(text: str, filename: str):
    """Yield (lineno, section, tokens-or-assignment) triples."""
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if not section:
                raise ConfigError(filename, lineno, "empty section name")
            continue
        yield lineno, section, line


def _parse_float(value: str, filename: str, lineno: int, what: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(filename, lineno, f"malformed number {value!r} for {what}") from None


def load_molecule(path: str | Path) -> SpinSystem:
    """Read a molecule definition file.

    Top-level keys: ``reference_frequency_hz`` (required) and
    ``coupling_unit`` (``rad/s``, the default, or ``hz``).  Sections:
    ``[spins]`` with ``name species shift_ppm`` rows and ``[couplings]``
    with ``name name J`` rows in the declared unit.
    """
    path = Path(path)
    filename = str(path)
    text = path.read_text(encoding="utf-8")
    reference_hz: float | None = None
    coupling_scale = 1.0
    spins: list[Spin] = []
    couplings: dict[tuple[str, str], float] = {}
    import math

    for lineno, section, line in _parse_lines(text, filename):
        if section is None:
            if "=" not in line:
                raise ConfigError(filename, lineno, f"expected 'key = value', got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "reference_frequency_hz":
                reference_hz = _parse_float(value, filename, lineno, key)
            elif key == "coupling_unit":
                unit = value.lower()
                if unit == "hz":
                    coupling_scale = 2.0 * math.pi
                elif unit == "rad/s":
                    coupling_scale = 1.0
                else:
                    raise ConfigError(filename, lineno, f"coupling_unit must be 'rad/s' or 'hz', got {value!r}")
            else:
                raise ConfigError(filename, lineno, f"unknown key {key!r}")
        elif section == "spins":
            parts = line.split()
            if len(parts) != 3:
                raise ConfigError(filename, lineno, f"spin row needs 'name species shift_ppm', got {line!r}")
            spins.append(Spin(parts[0], parts[1], _parse_float(parts[2], filename, lineno, "shift_ppm")))
        elif section == "couplings":
            parts = line.split()
            if len(parts) != 3:
                raise ConfigError(filename, lineno, f"coupling row needs 'a b J', got {line!r}")
            j = _parse_float(parts[2], filename, lineno, "J")
            couplings[(parts[0], parts[1])] = j
        else:
            raise ConfigError(filename, lineno, f"unknown section [{section}]")
    couplings = {k: coupling_scale * j for k, j in couplings.items()}

    if reference_hz is None:
        raise ConfigError(filename, 1, "missing required key 'reference_frequency_hz'")
    if not spins:
        raise ConfigError(filename, 1, "molecule defines no spins")
    try:
        return SpinSystem(tuple(spins), couplings, reference_hz)
    except (ValueError, KeyError) as exc:
        raise ConfigError(filename, 1, str(exc)) from exc


def load_sample(name_or_path: str | Path) -> SampleSpec:
    """Read a sample file, or one of the shipped presets by name."""
    if isinstance(name_or_path, str) and name_or_path in SAMPLE_PRESETS:
        path = sample_preset_path(name_or_path)
    else:
        path = Path(name_or_path)
    filename = str(path)
    text = path.read_text(encoding="utf-8")
    values: dict[str, float] = {}
    name = path.stem
    for lineno, section, line in _parse_lines(text, filename):
        if section is not None:
            raise ConfigError(filename, lineno, "sample files have no sections")
        if "=" not in line:
            raise ConfigError(filename, lineno, f"expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "name":
            name = value
            continue
        values[key] = _parse_float(value, filename, lineno, key)
    required = ("concentration_mM", "t1_cc_s", "t2_full_s", "t2_selective_s", "t1_hss_s")
    missing = [k for k in required if k not in values]
    if missing:
        raise ConfigError(filename, 1, f"missing required keys {missing}")
    extra = [k for k in values if k not in required]
    if extra:
        raise ConfigError(filename, 1, f"unknown keys {extra}")
    try:
        return SampleSpec(name=name, **values)
    except ValueError as exc:
        raise ConfigError(filename, 1, str(exc)) from exc


def default_molecule() -> SpinSystem:
    return load_molecule(default_molecule_path())
