"""Plain-text model and schedule descriptors (INI sections, inline CSV tables).

A descriptor either names a zoo entry::

    [model]
    zoo = constant_plus

or supplies explicit sections [source], [grid], [gen1], [gen2], [out1],
[out2]. Tables are inline CSV blocks (indented continuation lines) or file
references resolved relative to the descriptor. An optional [transform]
section lists operations (op.1, op.2, ...) that are re-applied on load, so a
transformed model round-trips through its descriptor alone.
"""
from __future__ import annotations

import configparser
import io
import shlex
from pathlib import Path
from typing import Hashable

from .errors import DescriptorError, UnknownZooEntryError
from .model import (
    InstrumentParamGen,
    LocalModel,
    OutcomeFn,
    SourceSpace,
    Station,
    TimeGrid,
)
from .stations import DEFAULT_PAIRS, Schedule
from .symmetry import (
    condition_sign_on_source,
    decode_sign,
    layer_double,
    make_sign_function,
    target_marginal,
    time_symmetrize,
)
from .zoo import ZOO, zoo_model

MODEL_SECTIONS = ("source", "grid", "gen1", "gen2", "out1", "out2")

_ANGLE_KEY_DIGITS = 9


def _parse_scalar(text: str) -> Hashable:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _parse_list(text: str) -> list:
    return [_parse_scalar(tok) for tok in text.split(",") if tok.strip()]


def _angle_key(angle: float) -> float:
    return round(angle % (2 * 3.141592653589793), _ANGLE_KEY_DIGITS)


def _new_parser() -> configparser.ConfigParser:
    return configparser.ConfigParser(interpolation=None)


def _read_table(section: configparser.SectionProxy, base_dir: Path | None) -> list[list]:
    """Rows from an inline ``table`` block or a referenced ``file``."""
    if "table" in section:
        text = section["table"]
    elif "file" in section:
        ref = Path(section["file"])
        if base_dir is not None and not ref.is_absolute():
            ref = base_dir / ref
        if not ref.exists():
            raise DescriptorError(f"table file not found: {ref}")
        text = ref.read_text(encoding="utf-8")
    else:
        raise DescriptorError(f"section [{section.name}] needs an inline table or a file reference")
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([_parse_scalar(tok) for tok in line.split(",")])
    if not rows:
        raise DescriptorError(f"section [{section.name}]: table is empty")
    return rows


def _build_source(section) -> SourceSpace:
    if "states" not in section or "prior" not in section:
        raise DescriptorError("[source] needs 'states' and 'prior'")
    states = [str(s) for s in _parse_list(section["states"])]
    prior = [float(p) for p in _parse_list(section["prior"])]
    return SourceSpace(tuple(states), tuple(prior))


def _build_grid(section) -> TimeGrid:
    if "slots" not in section:
        raise DescriptorError("[grid] needs 'slots'")
    slots = int(section["slots"])
    weights = None
    if "weights" in section:
        weights = tuple(float(w) for w in _parse_list(section["weights"]))
    return TimeGrid(slots, weights)


def _build_gen(section, station: Station, base_dir: Path | None) -> InstrumentParamGen:
    kind = section.get("kind", "constant").strip()
    seed = int(section.get("seed", "0"))
    if kind == "constant":
        value = _parse_scalar(section.get("value", "0"))
        return InstrumentParamGen(station, (value,), lambda s, m, sd, v=value: v, seed)
    if kind == "cycle":
        values = tuple(_parse_list(section.get("values", "")))
        if not values:
            raise DescriptorError(f"[{section.name}] kind=cycle needs 'values'")
        stride = int(section.get("stride", "1"))
        modulus = int(section.get("modulus", str(len(values))))
        rule = lambda s, m, sd, v=values, st=stride, md=modulus: v[(((m - 1) // st) % md) % len(v)]
        return InstrumentParamGen(station, values, rule, seed)
    if kind == "table":
        rows = _read_table(section, base_dir)
        arity = len(rows[0])
        if any(len(r) != arity for r in rows):
            raise DescriptorError(f"[{section.name}]: ragged table rows")
        if arity == 2:
            mapping = {int(r[0]): r[1] for r in rows}
            rule = lambda s, m, sd, t=mapping: t[m]
        elif arity == 3:
            mapping = {(_angle_key(float(r[0])), int(r[1])): r[2] for r in rows}

            def rule(s, m, sd, t=mapping):
                key = (_angle_key(s.angle), m)
                if key not in t:
                    raise DescriptorError(f"generator table misses angle/slot {key!r}")
                return t[key]

        else:
            raise DescriptorError(f"[{section.name}]: generator tables have 2 or 3 columns")
        values = section.get("values")
        space = tuple(_parse_list(values)) if values else tuple(sorted(set(mapping.values()), key=str))
        return InstrumentParamGen(station, space, rule, seed)
    raise DescriptorError(f"[{section.name}]: unknown generator kind {kind!r}")


def _build_out(section, station: Station, base_dir: Path | None) -> OutcomeFn:
    kind = section.get("kind", "constant").strip()
    if kind == "constant":
        value = int(section.get("value", "1"))
        return OutcomeFn(station, lambda s, lam, v, m, o=value: o)
    if kind == "lambda_table":
        rows = _read_table(section, base_dir)
        mapping = {str(r[0]): int(r[1]) for r in rows}
        return OutcomeFn(station, lambda s, lam, v, m, t=mapping: t[str(lam)])
    if kind == "cosine":
        rows = _read_table(section, base_dir)
        offsets = {str(r[0]): float(r[1]) for r in rows}
        flip = -1 if section.getboolean("negate", fallback=False) else 1

        def rule(s, lam, v, m, t=offsets, f=flip):
            import math

            return f * (1 if math.cos(s.angle - t[str(lam)]) >= 0.0 else -1)

        return OutcomeFn(station, rule)
    if kind == "table":
        rows = _read_table(section, base_dir)
        arity = len(rows[0])
        if arity == 4:
            mapping = {(str(r[0]), r[1], int(r[2])): int(r[3]) for r in rows}
            rule = lambda s, lam, v, m, t=mapping: t[(str(lam), v, m)]
        elif arity == 5:
            mapping = {(_angle_key(float(r[0])), str(r[1]), r[2], int(r[3])): int(r[4]) for r in rows}

            def rule(s, lam, v, m, t=mapping):
                key = (_angle_key(s.angle), str(lam), v, m)
                if key not in t:
                    raise DescriptorError(f"outcome table misses key {key!r}")
                return t[key]

        else:
            raise DescriptorError(f"[{section.name}]: outcome tables have 4 or 5 columns")
        return OutcomeFn(station, rule)
    raise DescriptorError(f"[{section.name}]: unknown outcome kind {kind!r}")


def _op_params(tokens: list[str]) -> dict[str, str]:
    params = {}
    for tok in tokens:
        if "=" not in tok:
            raise DescriptorError(f"transform parameter {tok!r} is not key=value")
        k, v = tok.split("=", 1)
        params[k] = v
    return params


def _station_from(text: str) -> Station | None:
    text = text.lower()
    if text == "both":
        return None
    if text == "s1":
        return Station.S1
    if text == "s2":
        return Station.S2
    raise DescriptorError(f"unknown station {text!r} (use s1, s2 or both)")


def apply_transform_op(model: LocalModel, op: str) -> LocalModel:
    """Apply one textual transform op; vocabulary shared with the CLI."""
    tokens = shlex.split(op)
    if not tokens:
        raise DescriptorError("empty transform op")
    name, params = tokens[0], _op_params(tokens[1:])
    if name == "rademacher":
        if "mean" not in params:
            raise DescriptorError("rademacher op needs mean=<float>")
        sign = make_sign_function(model.grid, float(params["mean"]), int(params.get("seed", "0")))
        return time_symmetrize(model, sign, _station_from(params.get("station", "both")))
    if name == "sign":
        if "values" not in params:
            raise DescriptorError("sign op needs values=<+-...>")
        sign = decode_sign(params["values"], model.grid)
        return time_symmetrize(model, sign, _station_from(params.get("station", "both")))
    if name in ("double", "layer_double"):
        return layer_double(model)
    if name in ("lambda-sign", "lambda_sign"):
        return condition_sign_on_source(model, int(params.get("seed", "0")))
    if name == "target":
        if "alpha" not in params or "station" not in params:
            raise DescriptorError("target op needs alpha=<float> station=<s1|s2>")
        station = _station_from(params["station"])
        if station is None:
            raise DescriptorError("target op needs a single station")
        transformed, _ = target_marginal(
            model,
            station,
            float(params["alpha"]),
            int(params.get("seed", "0")),
            setting_angle=float(params.get("angle", "0")),
            round_to_representable=params.get("round", "false").lower() == "true",
        )
        return transformed
    raise DescriptorError(f"unknown transform op {name!r}")


def _transform_ops(parser: configparser.ConfigParser) -> list[str]:
    if "transform" not in parser:
        return []
    section = parser["transform"]
    keys = sorted(
        (k for k in section if k.startswith("op")),
        key=lambda k: (len(k), k),
    )
    return [section[k] for k in keys]


def model_from_config(parser: configparser.ConfigParser, base_dir: Path | None = None) -> LocalModel:
    if "model" in parser and parser["model"].get("zoo"):
        base = zoo_model(parser["model"]["zoo"].strip())
        if parser["model"].get("name"):
            from dataclasses import replace

            base = replace(base, name=parser["model"]["name"].strip())
    else:
        missing = [s for s in MODEL_SECTIONS if s not in parser]
        if missing:
            raise DescriptorError(f"descriptor misses sections: {missing}")
        name = parser["model"].get("name", "custom") if "model" in parser else "custom"
        base = LocalModel(
            name=name,
            source=_build_source(parser["source"]),
            grid=_build_grid(parser["grid"]),
            gen1=_build_gen(parser["gen1"], Station.S1, base_dir),
            gen2=_build_gen(parser["gen2"], Station.S2, base_dir),
            out1=_build_out(parser["out1"], Station.S1, base_dir),
            out2=_build_out(parser["out2"], Station.S2, base_dir),
        )
    for op in _transform_ops(parser):
        base = apply_transform_op(base, op)
    return base


def load_model(path: str | Path) -> LocalModel:
    path = Path(path)
    if not path.exists():
        raise UnknownZooEntryError(f"model descriptor not found: {path}")
    parser = _new_parser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise DescriptorError(f"cannot parse descriptor {path}: {exc}") from exc
    return model_from_config(parser, base_dir=path.parent)


def make_model(spec: str | Path | configparser.ConfigParser) -> LocalModel:
    """Build a validated model from a zoo name, a descriptor path, or a parser."""
    if isinstance(spec, configparser.ConfigParser):
        return model_from_config(spec)
    if isinstance(spec, Path):
        return load_model(spec)
    name = str(spec)
    if name in ZOO:
        return zoo_model(name)
    if Path(name).exists():
        return load_model(name)
    raise UnknownZooEntryError(f"unknown zoo entry or model file: {name!r}")


def descriptor_text(
    base: str | Path,
    ops: list[str],
    notes: list[str] | None = None,
) -> str:
    """Descriptor for a transformed model: the base reference plus a [transform]
    section carrying the ops verbatim, so loading re-applies them.

    If the base descriptor already carries transforms, the new ops are appended
    after them with continued numbering.
    """
    base_str = str(base)
    if base_str in ZOO:
        parser = _new_parser()
        parser.add_section("model")
        parser.set("model", "zoo", base_str)
    else:
        path = Path(base_str)
        if not path.exists():
            raise UnknownZooEntryError(f"unknown zoo entry or model file: {base_str!r}")
        parser = _new_parser()
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise DescriptorError(f"cannot parse descriptor {path}: {exc}") from exc
    existing = _transform_ops(parser)
    if "transform" in parser:
        parser.remove_section("transform")
    parser.add_section("transform")
    for i, op in enumerate(existing + list(ops), start=1):
        parser.set("transform", f"op.{i}", op)
    buf = io.StringIO()
    for note in notes or []:
        buf.write(f"; {note}\n")
    parser.write(buf)
    return buf.getvalue()


def load_schedule(path: str | Path) -> Schedule:
    path = Path(path)
    if not path.exists():
        raise UnknownZooEntryError(f"schedule descriptor not found: {path}")
    parser = _new_parser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise DescriptorError(f"cannot parse schedule {path}: {exc}") from exc
    if "schedule" not in parser:
        raise DescriptorError(f"{path}: missing [schedule] section")
    return schedule_from_section(parser["schedule"])


def schedule_from_section(section) -> Schedule:
    if "trials" not in section:
        raise DescriptorError("[schedule] needs 'trials'")
    policy = section.get("policy", "cycle").strip()
    pairs: tuple = DEFAULT_PAIRS
    if "pairs" in section:
        parsed = []
        for chunk in section["pairs"].split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            if ":" not in chunk:
                raise DescriptorError(f"pair {chunk!r} must be a:b")
            a, b = chunk.split(":", 1)
            parsed.append((float(a), float(b)))
        pairs = tuple(parsed)
    elif "a" in section and "b" in section:
        pairs = ((float(section["a"]), float(section["b"])),)
    seed_s1 = section.get("seed_s1")
    seed_s2 = section.get("seed_s2")
    return Schedule(
        trials=int(section["trials"]),
        policy=policy,
        pairs=pairs,
        seed_source=int(section.get("seed_source", "0")),
        seed_settings=int(section.get("seed_settings", "0")),
        seed_s1=int(seed_s1) if seed_s1 is not None else None,
        seed_s2=int(seed_s2) if seed_s2 is not None else None,
    )
