"""Run configuration files, text checkpoints, and CSV emission.

Config grammar: flat ``section.key = value`` lines, ``#`` comments, blank
lines ignored.  Sections are env/train/opt/morph/aug/output; unknown keys
are rejected with the offending line number.  Parsing resolves the
morphology table against the environment immediately, and serialization is
canonical (every field materialized, fixed order), so a config's digest
pins the full semantics of a run.

Checkpoints are versioned human-diffable text with all floats printed at
17 significant digits, which round-trips IEEE doubles exactly.  The
canonical config text is embedded, so a checkpoint alone is enough to
rebuild the environment for evaluation.
"""

from __future__ import annotations

import hashlib
import os
import typing
from dataclasses import dataclass, fields, replace as dataclasses_replace
from pathlib import Path

import numpy as np

from .env_core import AugmentationSpec, MorphologySpec, ParamPartition
from .es_optimizer import OptimizerConfig, SearchDistribution
from .envs import env_class, make_env
from .trainer import HistoryRow, TrainConfig, TrainState

CHECKPOINT_MAGIC = "morphopt-checkpoint"
CHECKPOINT_VERSION = 1
HISTORY_HEADER = "generation,mean_fitness,best_fitness,sigma_mean,best_avg_score"
SUMMARY_HEADER = "run,final_score"


class ConfigError(Exception):
    """Bad run configuration; carries a line/field diagnostic."""


class DigestMismatchError(Exception):
    """Checkpoint was produced under a different configuration."""


class CheckpointError(Exception):
    """Unreadable or structurally invalid checkpoint."""


class CsvFormatError(Exception):
    """Malformed history/summary CSV; names the offending line."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return _fmt(value)
    if isinstance(value, tuple):
        return ",".join(_fmt_value(v) for v in value)
    return str(value)


def _parse_typed(text: str, typ, where: str):
    origin = typing.get_origin(typ)
    if origin is tuple:
        args = typing.get_args(typ)
        elem = args[0]
        items = [t for t in (s.strip() for s in text.split(",")) if t]
        if len(args) == 2 and args[1] is not Ellipsis and len(items) != 2:
            raise ConfigError(f"{where}: expected two comma-separated values")
        return tuple(_parse_typed(item, elem, where) for item in items)
    if typ is bool:
        if text == "true":
            return True
        if text == "false":
            return False
        raise ConfigError(f"{where}: expected true or false, got {text!r}")
    if typ is int:
        try:
            return int(text)
        except ValueError as exc:
            raise ConfigError(f"{where}: expected an integer, got {text!r}") from exc
    if typ is float:
        try:
            return float(text)
        except ValueError as exc:
            raise ConfigError(f"{where}: expected a number, got {text!r}") from exc
    if typ is str:
        return text
    raise ConfigError(f"{where}: unsupported field type {typ!r}")


@dataclass(frozen=True)
class RunConfig:
    """Everything that defines a run; canonical text form is the identity."""

    env_id: str
    env_overrides: tuple[tuple[str, object], ...]
    train: TrainConfig
    opt: OptimizerConfig
    morph_enabled: bool
    scale_limit: float
    morph_table: tuple[tuple[str, float], ...]   # resolved name -> original
    aug_enabled: bool
    out_dir: str

    def make_env(self):
        return make_env(self.env_id, **dict(self.env_overrides))

    def morph_spec(self) -> MorphologySpec | None:
        if not self.morph_enabled:
            return None
        return MorphologySpec(
            names=tuple(n for n, _ in self.morph_table),
            original=np.array([v for _, v in self.morph_table]),
            scale_limit=self.scale_limit,
        )

    def partition(self, env) -> ParamPartition:
        morph_len = len(self.morph_table) if self.morph_enabled else 0
        return ParamPartition(policy_len=env.policy_param_count(), morph_len=morph_len)

    def augmentation(self, env) -> AugmentationSpec | None:
        if not self.aug_enabled:
            return None
        spec = self.morph_spec()
        if spec is None:
            raise ConfigError("aug.enabled requires morph.enabled")
        return AugmentationSpec.for_env(env, spec, enabled=True)


def _env_field_types(env_id: str) -> dict[str, type]:
    cls = env_class(env_id)
    hints = typing.get_type_hints(cls)
    skip = {"kind"}  # implied by the env id
    return {f.name: hints[f.name] for f in fields(cls) if f.name not in skip}


def _section_types(cls) -> dict[str, type]:
    hints = typing.get_type_hints(cls)
    return {f.name: hints[f.name] for f in fields(cls)}


def parse_config(text: str) -> RunConfig:
    """Parse config text; raises ConfigError with line diagnostics."""
    raw: dict[str, tuple[int, str]] = {}
    morph_params: list[tuple[str, str, int]] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected 'section.key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key.startswith("morph.param."):
            morph_params.append((key[len("morph.param."):], value, line_no))
            continue
        if key in raw:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        raw[key] = (line_no, value)

    def take(key: str) -> str | None:
        entry = raw.pop(key, None)
        return entry[1] if entry is not None else None

    env_id = take("env.id")
    if env_id is None:
        raise ConfigError("missing required field env.id")
    try:
        env_types = _env_field_types(env_id)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    env_overrides: list[tuple[str, object]] = []
    for key in sorted(k for k in raw if k.startswith("env.")):
        line_no, value = raw.pop(key)
        name = key[len("env."):]
        if name not in env_types:
            raise ConfigError(f"line {line_no}: unknown field {key!r} for env {env_id!r}")
        env_overrides.append((name, _parse_typed(value, env_types[name], key)))

    def build_section(prefix: str, cls, required: tuple[str, ...] = ()):
        kwargs = {}
        types = _section_types(cls)
        for key in sorted(k for k in raw if k.startswith(prefix + ".")):
            line_no, value = raw.pop(key)
            name = key[len(prefix) + 1:]
            if name not in types:
                raise ConfigError(f"line {line_no}: unknown field {key!r}")
            kwargs[name] = _parse_typed(value, types[name], key)
        for name in required:
            if name not in kwargs:
                raise ConfigError(f"missing required field {prefix}.{name}")
        try:
            return cls(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"section {prefix}: {exc}") from exc

    opt_pop_explicit = "opt.population_size" in raw
    train_cfg = build_section("train", TrainConfig, required=("generations",))
    opt_cfg = build_section("opt", OptimizerConfig)
    # population_size appears in both sections; train owns it, opt follows
    if opt_pop_explicit and opt_cfg.population_size != train_cfg.population_size:
        raise ConfigError(
            f"opt.population_size = {opt_cfg.population_size} disagrees with "
            f"train.population_size = {train_cfg.population_size}"
        )
    try:
        opt_cfg = dataclasses_replace(opt_cfg, population_size=train_cfg.population_size)
    except ValueError as exc:
        raise ConfigError(f"section opt: {exc}") from exc

    morph_enabled_text = take("morph.enabled")
    morph_enabled = (
        _parse_typed(morph_enabled_text, bool, "morph.enabled")
        if morph_enabled_text is not None else False
    )
    scale_text = take("morph.scale_limit")
    scale_limit = (
        _parse_typed(scale_text, float, "morph.scale_limit")
        if scale_text is not None else 0.75
    )
    aug_text = take("aug.enabled")
    aug_enabled = _parse_typed(aug_text, bool, "aug.enabled") if aug_text is not None else False
    out_dir = take("output.dir") or "runs"

    if raw:
        key = min(raw, key=lambda k: raw[k][0])
        raise ConfigError(f"line {raw[key][0]}: unknown key {key!r}")

    env = make_env(env_id, **dict(env_overrides))
    table: tuple[tuple[str, float], ...]
    if morph_params:
        if not morph_enabled:
            line_no = morph_params[0][2]
            raise ConfigError(f"line {line_no}: morph.param.* given but morph.enabled is false")
        table = tuple(
            (name, _parse_typed(value, float, f"morph.param.{name}"))
            for name, value, _ in morph_params
        )
    elif morph_enabled:
        default = env.default_morph_spec()
        table = tuple(zip(default.names, (float(v) for v in default.original)))
    else:
        table = ()

    cfg = RunConfig(
        env_id=env_id,
        env_overrides=tuple(env_overrides),
        train=train_cfg,
        opt=opt_cfg,
        morph_enabled=morph_enabled,
        scale_limit=scale_limit,
        morph_table=table,
        aug_enabled=aug_enabled,
        out_dir=out_dir,
    )
    _validate_config(cfg, env)
    return cfg


def _validate_config(cfg: RunConfig, env) -> None:
    if cfg.morph_enabled:
        if len(cfg.morph_table) != env.morph_dim():
            raise ConfigError(
                f"morph table has {len(cfg.morph_table)} entries but env "
                f"{cfg.env_id!r} expects {env.morph_dim()}"
            )
        spec = cfg.morph_spec()  # validates positivity and scale_limit
        assert spec is not None
    if cfg.aug_enabled and not cfg.morph_enabled:
        raise ConfigError("aug.enabled requires morph.enabled")


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form: every field materialized, fixed order."""
    lines = [f"env.id = {cfg.env_id}"]
    for name, value in cfg.env_overrides:
        lines.append(f"env.{name} = {_fmt_value(value)}")
    for section, obj in (("train", cfg.train), ("opt", cfg.opt)):
        for f in fields(obj):
            lines.append(f"{section}.{f.name} = {_fmt_value(getattr(obj, f.name))}")
    lines.append(f"morph.enabled = {_fmt_value(cfg.morph_enabled)}")
    lines.append(f"morph.scale_limit = {_fmt_value(cfg.scale_limit)}")
    for name, value in cfg.morph_table:
        lines.append(f"morph.param.{name} = {_fmt_value(value)}")
    lines.append(f"aug.enabled = {_fmt_value(cfg.aug_enabled)}")
    lines.append(f"output.dir = {cfg.out_dir}")
    return "\n".join(lines) + "\n"


def config_digest(cfg: RunConfig) -> str:
    """Digest of the run semantics; output.dir is a destination, not identity."""
    lines = [
        line for line in serialize_config(cfg).splitlines()
        if not line.startswith("output.dir")
    ]
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


# -- checkpoints ------------------------------------------------------------


def _vector_line(name: str, values) -> str:
    vals = " ".join(_fmt(v) for v in values)
    return f"{name} {len(values)}{' ' if len(values) else ''}{vals}"


def save_checkpoint(path: str | Path, cfg: RunConfig, state: TrainState) -> None:
    """Write the checkpoint atomically (tmp file + rename)."""
    config_text = serialize_config(cfg)
    lines = [
        f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}",
        f"digest {config_digest(cfg)}",
        f"generation {state.generation}",
        f"best_avg_score {_fmt(state.best_avg_score)}",
    ]
    if state.best_params is None:
        lines.append("best_params none")
    else:
        lines.append(_vector_line("best_params", state.best_params))
    lines.append(_vector_line("mu", state.dist.mu))
    lines.append(_vector_line("sigma", state.dist.sigma))
    lines.append(f"history {len(state.history)}")
    for row in state.history:
        lines.append(
            f"{row.generation} {_fmt(row.mean_fitness)} {_fmt(row.best_fitness)} "
            f"{_fmt(row.sigma_mean)} {_fmt(row.best_avg_score)}"
        )
    config_lines = config_text.splitlines()
    lines.append(f"config {len(config_lines)}")
    lines.extend(config_lines)
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)


def _parse_vector(line: str, name: str) -> np.ndarray | None:
    parts = line.split()
    if not parts or parts[0] != name:
        raise CheckpointError(f"expected {name!r} line, got {line!r}")
    if len(parts) == 2 and parts[1] == "none":
        return None
    n = int(parts[1])
    values = parts[2:]
    if len(values) != n:
        raise CheckpointError(f"{name}: declared {n} values, found {len(values)}")
    return np.array([float(v) for v in values], dtype=np.float64)


def load_checkpoint(path: str | Path) -> tuple[RunConfig, TrainState, str]:
    """Read a checkpoint; returns (config, state, digest)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    lines = text.splitlines()
    try:
        magic = lines[0].split()
        if magic[0] != CHECKPOINT_MAGIC:
            raise CheckpointError(f"not a morphopt checkpoint: {lines[0]!r}")
        if int(magic[1]) != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {magic[1]}")
        if not lines[1].startswith("digest "):
            raise CheckpointError("missing digest line")
        digest = lines[1].split()[1]
        generation = int(lines[2].split()[1])
        best_avg = float(lines[3].split()[1])
        best_params = _parse_vector(lines[4], "best_params")
        mu = _parse_vector(lines[5], "mu")
        sigma = _parse_vector(lines[6], "sigma")
        n_rows = int(lines[7].split()[1])
        history = []
        for i in range(n_rows):
            g, mean_f, best_f, sig_m, best_a = lines[8 + i].split()
            history.append(
                HistoryRow(int(g), float(mean_f), float(best_f), float(sig_m), float(best_a))
            )
        cfg_header = lines[8 + n_rows].split()
        if cfg_header[0] != "config":
            raise CheckpointError("missing embedded config")
        n_cfg = int(cfg_header[1])
        config_text = "\n".join(lines[9 + n_rows : 9 + n_rows + n_cfg]) + "\n"
    except (IndexError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint {path}: {exc}") from exc
    try:
        cfg = parse_config(config_text)
    except ConfigError as exc:
        raise CheckpointError(f"embedded config invalid: {exc}") from exc
    state = TrainState(
        generation=generation,
        dist=SearchDistribution(mu=mu, sigma=sigma),
        best_params=best_params,
        best_avg_score=best_avg,
        history=history,
    )
    return cfg, state, digest


# -- CSV ---------------------------------------------------------------------


def history_csv_row(row: HistoryRow) -> str:
    return (
        f"{row.generation},{_fmt(row.mean_fitness)},{_fmt(row.best_fitness)},"
        f"{_fmt(row.sigma_mean)},{_fmt(row.best_avg_score)}"
    )


def read_history_csv(path: str | Path) -> list[HistoryRow]:
    """Strict reader for history.csv; raises CsvFormatError naming the line."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise CsvFormatError(f"{path}: cannot read: {exc}") from exc
    if not lines or lines[0] != HISTORY_HEADER:
        raise CsvFormatError(f"{path}:1: expected header {HISTORY_HEADER!r}")
    if len(lines) == 1:
        raise CsvFormatError(f"{path}: no data rows")
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 5:
            raise CsvFormatError(f"{path}:{i}: expected 5 comma-separated fields")
        try:
            rows.append(
                HistoryRow(int(parts[0]), float(parts[1]), float(parts[2]),
                           float(parts[3]), float(parts[4]))
            )
        except ValueError as exc:
            raise CsvFormatError(f"{path}:{i}: {exc}") from exc
    return rows
