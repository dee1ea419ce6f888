"""
Input utilities: CSV decision tables and run configuration files

Flow (same shape as a fetch -> validate -> transform pipeline):
    read_table_csv      -> RawTable
    load_run_config     -> raw mapping
    parse_run_config    -> RunConfigFile (all problems collected, raised once)
    feature_specs       -> FeatureSpec per data column
    build_sim_config    -> SimConfig with CLI overrides applied
"""

import csv
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd
import yaml

from evoweights.core.engine import GeneEffectScale, SimConfig
from evoweights.core.model import Cell, FeatureSpec, FitnessKind, RawTable
from evoweights.core.strategies import MixMode, SelfishScale, StrategyMix
from evoweights.exceptions import ErrorDetail, ValidationError

logger = logging.getLogger(__name__)

# Plain decimal or scientific notation; anything else is a label list
NUMBER_PATTERN = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
LABEL_SEPARATOR = ";"

DEFAULT_GENE_ORDER = ("dominant", "altruistic")
DEFAULT_ORGANISM_ORDER = ("balanced", "selfish")

KNOWN_KEYS = {
    "data", "row_name_column", "columns", "strategy", "initial_gamma", "epsilon",
    "max_iterations", "clamp", "gene_effect_scale", "selfish_scale", "workers", "outputs",
}


# ============================================================================
# CSV TABLE
# ============================================================================

def parse_cell(text: Optional[str]) -> Cell:
    """
    Parse one CSV field into a structured cell

    Args:
        text: Raw field text

    Returns:
        None for an empty field, float for a number, tuple of labels otherwise

    Notes:
        - '300' -> 300.0, '-5' -> -5.0 (rejected later with coordinates)
        - 'wifi;meal' -> ('wifi', 'meal')
    """
    if text is None:
        return None
    text = str(text).strip()
    if text == "":
        return None
    if NUMBER_PATTERN.match(text):
        return float(text)
    return tuple(label.strip() for label in text.split(LABEL_SEPARATOR) if label.strip())


def _record_widths(path: Path) -> List[int]:
    """Field count of every non-blank CSV record, header first"""
    with open(path, "r", encoding="utf-8", newline="") as f:
        return [len(record) for record in csv.reader(f)
                if record and not (len(record) == 1 and record[0].strip() == "")]


def read_table_csv(
path: Union[str, Path], row_name_column: Optional[str] = None) -> RawTable:
    """
    Read a decision table from a UTF-8 CSV file with a header row

    Args:
        path: CSV file
        row_name_column: Optional column holding organism names; it is
            excluded from the genes

    Returns:
        Validated RawTable

    Raises:
        ValidationError: Missing or empty file, malformed CSV, short rows,
            negative numbers (1-based data row coordinates)
    """
    path = Path(path)
    logger.info("🔍 Reading table from %s", path)

    try:
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False,
                            encoding="utf-8", skip_blank_lines=True)
    except FileNotFoundError:
        raise ValidationError.single(f"data file not found: {path}")
    except IsADirectoryError:
        raise ValidationError.single(f"data path is a directory: {path}")
    except pd.errors.EmptyDataError:
        raise ValidationError.single(f"data file is empty: {path}")
    except pd.errors.ParserError as e:
        raise ValidationError.single(f"malformed CSV: {str(e).strip()}")
    except UnicodeDecodeError:
        raise ValidationError.single(f"data file is not valid UTF-8: {path}")

    header = [str(name).strip() for name in frame.iloc[0].tolist()]
    body = frame.iloc[1:]
    errors: List[ErrorDetail] = []

    seen = set()
    for name in header:
        if name == "":
            errors.append(ErrorDetail("header contains an empty column name"))
        elif name in seen:
            errors.append(ErrorDetail("duplicate column name", column=name))
        seen.add(name)

    name_index = None
    if row_name_column is not None:
        if row_name_column not in header:
            errors.append(ErrorDetail("row name column not found in header", column=row_name_column))
        else:
            name_index = header.index(row_name_column)

    # pandas pads short rows with "" when NA filling is off; count raw fields instead
    for i, width in enumerate(_record_widths(path)[1:], start=1):
        if width < len(header):
            errors.append(ErrorDetail(f"row has fewer cells than the {len(header)} header columns", row=i))

    if errors:
        raise ValidationError(errors)

    gene_columns = [j for j in range(len(header)) if j != name_index]
    rows = [tuple(parse_cell(record[j]) for j in gene_columns) for record in body.itertuples(index=False)]
    row_names: Tuple[str, ...] = ()
    if name_index is not None:
        row_names = tuple(
            str(record[name_index]).strip() or f"row-{i + 1}"
            for i, record in enumerate(body.itertuples(index=False))
        )

    table = RawTable(tuple(header[j] for j in gene_columns), tuple(rows), row_names)
    logger.info("✅ Read %d rows x %d columns", table.n, table.m)
    return table


# ============================================================================
# RUN CONFIGURATION
# ============================================================================

@dataclass(frozen=True)
class ColumnConfig:
    name: str
    fitness: FitnessKind
    labels: Tuple[str, ...] = ()


@dataclass(frozen=True)
class OutputsConfig:
    trace: Optional[str] = None
    summary: Optional[str] = None


@dataclass(frozen=True)
class RunConfigFile:
    """
    Parsed run configuration

    Optional numeric settings stay None when the file omits them, so the
    SimConfig defaults apply.
    """

    columns: Tuple[ColumnConfig, ...]
    data: Optional[str] = None
    row_name_column: Optional[str] = None
    strategy: StrategyMix = field(default_factory=StrategyMix)
    initial_gamma: Optional[Union[Tuple[float, ...], Dict[str, float]]] = None
    epsilon: Optional[float] = None
    max_iterations: Optional[int] = None
    clamp: Optional[bool] = None
    gene_effect_scale: Optional[GeneEffectScale] = None
    selfish_scale: Optional[SelfishScale] = None
    workers: Optional[int] = None
    outputs: OutputsConfig = field(default_factory=OutputsConfig)


def load_run_config(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Load a YAML or JSON run configuration

    Raises:
        ValidationError: Missing file, unparsable content or a non-mapping root
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except FileNotFoundError:
        raise ValidationError.single(f"config file not found: {path}")
    except IsADirectoryError:
        raise ValidationError.single(f"config path is a directory: {path}")
    except yaml.YAMLError as e:
        raise ValidationError.single(f"config file is not valid YAML/JSON: {e}")

    if not isinstance(raw, dict):
        raise ValidationError.single("config root must be a mapping")
    logger.info("✅ Loaded config from %s", path)
    return raw


def _coerce(value: Any, convert, key: str, errors: List[ErrorDetail]):
    """float()/int() coercion that records a problem instead of raising"""
    if value is None:
        return None
    if isinstance(value, bool):
        errors.append(ErrorDetail(f"{key} must be a number, got {value!r}"))
        return None
    try:
        converted = float(value)
    except (TypeError, ValueError):
        errors.append(ErrorDetail(f"{key} must be a number, got {value!r}"))
        return None
    if convert is int:
        if not converted.is_integer():
            errors.append(ErrorDetail(f"{key} must be an integer, got {value!r}"))
            return None
        return int(converted)
    return converted


def _coerce_bool(value: Any, key: str, errors: List[ErrorDetail]) -> Optional[bool]:
    if value is None or isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "yes", "on", "1"):
        return True
    if text in ("false", "no", "off", "0"):
        return False
    errors.append(ErrorDetail(f"{key} must be a boolean, got {value!r}"))
    return None


def _parse_columns(raw: Any, errors: List[ErrorDetail]) -> Tuple[ColumnConfig, ...]:
    if not isinstance(raw, list) or not raw:
        errors.append(ErrorDetail("columns must be a non-empty list of {name, fitness, labels}"))
        return ()

    columns = []
    for position, entry in enumerate(raw, start=1):
        if not isinstance(entry, dict) or "name" not in entry or "fitness" not in entry:
            errors.append(ErrorDetail(f"columns entry {position} needs 'name' and 'fitness'"))
            continue
        name = str(entry["name"])
        try:
            kind = FitnessKind.parse(entry["fitness"])
        except ValueError:
            errors.append(ErrorDetail(f"unknown fitness function {entry['fitness']!r}", column=name))
            continue

        labels = entry.get("labels") or ()
        if isinstance(labels, str):
            labels = [label for label in labels.split(LABEL_SEPARATOR)]
        labels = tuple(str(label).strip() for label in labels if str(label).strip())
        if kind is FitnessKind.OVERLAP and not labels:
            errors.append(ErrorDetail("overlap fitness requires a non-empty list of labels", column=name))
            continue
        columns.append(ColumnConfig(name, kind, labels))
    return tuple(columns)


def _parse_alphas(raw: Any, order: Sequence[str], label: str,
                  errors: List[ErrorDetail]) -> Optional[Dict[str, float]]:
    """Alphas as a map name -> weight or as a list in the default strategy order"""
    if raw is None:
        return None
    if isinstance(raw, (list, tuple)):
        if len(raw) != len(order):
            errors.append(ErrorDetail(f"{label} alphas list needs {len(order)} entries ({', '.join(order)})"))
            return None
        raw = dict(zip(order, raw))
    if not isinstance(raw, dict):
        errors.append(ErrorDetail(f"{label} alphas must be a list or a mapping"))
        return None

    weights = {}
    for name, value in raw.items():
        weight = _coerce(value, float, f"{label} alpha '{name}'", errors)
        if weight is None:
            return None
        weights[str(name)] = weight
    return weights


def _parse_strategy(raw: Any, errors: List[ErrorDetail]) -> Optional[StrategyMix]:
    """
    Strategy block

    Notes:
        - a bare string is a preset name: dombal | altsel | self_consistent
        - mode self_consistent without alphas starts every strategy at 0.5
        - explicit alphas override the preset of their group
    """
    if raw is None:
        return StrategyMix()
    if isinstance(raw, str):
        raw = {"preset": raw}
    if not isinstance(raw, dict):
        errors.append(ErrorDetail("strategy must be a preset name or a mapping"))
        return None

    try:
        mode = MixMode(str(raw.get("mode", "fixed")).strip().lower())
    except ValueError:
        errors.append(ErrorDetail(f"unknown strategy mode {raw.get('mode')!r}"))
        return None

    try:
        if "preset" in raw:
            base = StrategyMix.preset(str(raw["preset"]))
        elif mode is MixMode.SELF_CONSISTENT:
            base = StrategyMix.preset("self_consistent")
        else:
            base = StrategyMix()
    except ValidationError as e:
        errors.extend(e.errors)
        return None
    if "mode" in raw:
        base_mode = mode
    else:
        base_mode = base.mode

    gene = _parse_alphas(raw.get("gene_alphas"), DEFAULT_GENE_ORDER, "gene", errors)
    organism = _parse_alphas(raw.get("organism_alphas"), DEFAULT_ORGANISM_ORDER, "organism", errors)
    try:
        return StrategyMix(gene if gene is not None else base.gene_weights,
                           organism if organism is not None else base.organism_weights,
                           base_mode)
    except ValidationError as e:
        errors.extend(e.errors)
        return None


def _parse_initial_gamma(raw: Any, errors: List[ErrorDetail]):
    if raw is None:
        return None
    if isinstance(raw, dict):
        values = {str(k): _coerce(v, float, f"initial_gamma '{k}'", errors) for k, v in raw.items()}
        return None if None in values.values() else values
    if isinstance(raw, (list, tuple)):
        values = [_coerce(v, float, "initial_gamma entry", errors) for v in raw]
        return None if None in values else tuple(values)
    errors.append(ErrorDetail("initial_gamma must be a list or a mapping of column name to value"))
    return None


def _parse_enum(enum_cls, value: Any, key: str, errors: List[ErrorDetail]):
    if value is None:
        return None
    try:
        return enum_cls(str(value).strip().lower())
    except ValueError:
        choices = " | ".join(member.value for member in enum_cls)
        errors.append(ErrorDetail(f"{key} must be one of {choices}, got {value!r}"))
        return None


def parse_run_config(raw: Mapping[str, Any], base_dir: Optional[Union[str, Path]] = None) -> RunConfigFile:
    """
    Validate a raw config mapping and turn it into a RunConfigFile

    Args:
        raw: Mapping from load_run_config
        base_dir: Directory relative data/output paths are resolved against

    Returns:
        RunConfigFile

    Raises:
        ValidationError: Every problem found in the file
    """
    errors: List[ErrorDetail] = []
    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        logger.warning("⚠️ Ignoring unknown config keys: %s", ", ".join(map(str, unknown)))

    columns = _parse_columns(raw.get("columns"), errors)
    strategy = _parse_strategy(raw.get("strategy"), errors)
    initial_gamma = _parse_initial_gamma(raw.get("initial_gamma"), errors)
    epsilon = _coerce(raw.get("epsilon"), float, "epsilon", errors)
    max_iterations = _coerce(raw.get("max_iterations"), int, "max_iterations", errors)
    workers = _coerce(raw.get("workers"), int, "workers", errors)
    clamp = _coerce_bool(raw.get("clamp"), "clamp", errors)
    gene_effect_scale = _parse_enum(GeneEffectScale, raw.get("gene_effect_scale"), "gene_effect_scale", errors)
    selfish_scale = _parse_enum(SelfishScale, raw.get("selfish_scale"), "selfish_scale", errors)

    def resolve(value: Any) -> Optional[str]:
        if value is None:
            return None
        path = Path(str(value))
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return str(path)

    outputs_raw = raw.get("outputs") or {}
    if not isinstance(outputs_raw, dict):
        errors.append(ErrorDetail("outputs must be a mapping with optional 'trace' and 'summary'"))
        outputs_raw = {}
    outputs = OutputsConfig(resolve(outputs_raw.get("trace")), resolve(outputs_raw.get("summary")))

    row_name_column = raw.get("row_name_column")
    if row_name_column is not None:
        row_name_column = str(row_name_column)
        if any(column.name == row_name_column for column in columns):
            errors.append(ErrorDetail("row name column cannot also be a gene", column=row_name_column))

    if errors:
        raise ValidationError(errors)

    return RunConfigFile(
        columns=columns,
        data=resolve(raw.get("data")),
        row_name_column=row_name_column,
        strategy=strategy,
        initial_gamma=initial_gamma,
        epsilon=epsilon,
        max_iterations=max_iterations,
        clamp=clamp,
        gene_effect_scale=gene_effect_scale,
        selfish_scale=selfish_scale,
        workers=workers,
        outputs=outputs,
    )


def read_run_config(path: Union[str, Path]) -> RunConfigFile:
    """Load and parse a config file; relative paths resolve against its directory"""
    path = Path(path)
    return parse_run_config(load_run_config(path), base_dir=path.parent)


# ============================================================================
# CONFIG x TABLE
# ============================================================================

def feature_specs(config: RunConfigFile, table: RawTable) -> List[FeatureSpec]:
    """
    Match config columns to table columns by name

    Raises:
        ValidationError: Config columns missing from the data, duplicated
            entries, or data columns without a fitness entry
    """
    errors: List[ErrorDetail] = []
    index = {name: j for j, name in enumerate(table.column_names)}
    specs: Dict[int, FeatureSpec] = {}

    for column in config.columns:
        if column.name not in index:
            errors.append(ErrorDetail("config column not found in data", column=column.name))
            continue
        j = index[column.name]
        if j in specs:
            errors.append(ErrorDetail("more than one fitness entry in config", column=column.name))
            continue
        specs[j] = FeatureSpec(j, column.fitness, column.labels)

    for j, name in enumerate(table.column_names):
        if j not in specs:
            errors.append(ErrorDetail("data column has no fitness entry in config", column=name))

    if errors:
        raise ValidationError(errors)
    return [specs[j] for j in range(table.m)]


def build_sim_config(
        config: RunConfigFile,
        gene_names: Sequence[str],
        iterations: Optional[int] = None,
        strategy: Optional[str] = None,
        workers: Optional[int] = None
) -> SimConfig:
    """
    Build the SimConfig for a run

    Args:
        config: Parsed config file
        gene_names: Column names in table order (resolves named initial_gamma)
        iterations: --iterations override of max_iterations
        strategy: --strategy preset override
        workers: --workers override

    Notes:
        - precedence: CLI flag > config file > SimConfig default
    """
    errors: List[ErrorDetail] = []

    initial_gamma = config.initial_gamma
    if isinstance(initial_gamma, dict):
        missing = [name for name in gene_names if name not in initial_gamma]
        extra = [name for name in initial_gamma if name not in gene_names]
        errors += [ErrorDetail("initial_gamma has no entry for column", column=name) for name in missing]
        errors += [ErrorDetail("initial_gamma names an unknown column", column=name) for name in extra]
        initial_gamma = None if errors else tuple(initial_gamma[name] for name in gene_names)
    elif initial_gamma is not None and len(initial_gamma) != len(gene_names):
        errors.append(ErrorDetail(f"initial_gamma has {len(initial_gamma)} entries, expected {len(gene_names)}"))

    mix = config.strategy
    if strategy is not None:
        try:
            mix = StrategyMix.preset(strategy)
        except ValidationError as e:
            errors.extend(e.errors)

    if errors:
        raise ValidationError(errors)

    settings: Dict[str, Any] = {
        "initial_gamma": initial_gamma,
        "mix": mix,
        "epsilon": config.epsilon,
        "max_iterations": iterations if iterations is not None else config.max_iterations,
        "clamp": config.clamp,
        "gene_effect_scale": config.gene_effect_scale,
        "selfish_scale": config.selfish_scale,
        "workers": workers if workers is not None else config.workers,
    }
    return SimConfig(**{key: value for key, value in settings.items() if value is not None})


def config_echo(sim_config: SimConfig, config: RunConfigFile, data_path: Optional[str]) -> Dict[str, Any]:
    """Effective settings of a run, embedded in the summary for provenance"""
    return {
        "data": data_path,
        "row_name_column": config.row_name_column,
        "columns": [
            {"name": c.name, "fitness": c.fitness.value, "labels": list(c.labels)} for c in config.columns
        ],
        "strategy": {
            "mode": sim_config.mix.mode.value,
            "gene_alphas": dict(sim_config.mix.gene_weights),
            "organism_alphas": dict(sim_config.mix.organism_weights),
        },
        "initial_gamma": list(sim_config.initial_gamma) if sim_config.initial_gamma is not None else None,
        "epsilon": sim_config.epsilon,
        "max_iterations": int(sim_config.max_iterations),
        "clamp": sim_config.clamp,
        "gene_effect_scale": sim_config.gene_effect_scale.value,
        "selfish_scale": sim_config.selfish_scale.value,
        "workers": int(sim_config.workers),
    }
