"""
Experiment configuration files.

An experiment file is YAML with the sections `experiment`, `model`,
`proposal`, `run`, `output` and, for some experiments, `constants` and
`planner`. Errors point at the 1-based line of the offending node.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import yaml

from ..config.settings import DEFAULT_OUTPUT_DIR, REPORT_FORMATS

EXPERIMENTS = ("sample", "couple", "scaling", "bounds", "plan", "exit", "tps-demo")
MODEL_KINDS = ("quadratic", "zero", "tps")
NEEDS_MODEL = {"sample", "couple", "scaling", "bounds", "exit"}
NEEDS_STEP = {"sample", "couple", "bounds", "exit"}
NEEDS_GRID = {"scaling"}
OPTIONAL_GRID = {"tps-demo"}


class ConfigValidationError(ValueError):
    """Invalid experiment file; carries the 1-based line of the problem."""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[Path] = None):
        self.message = message
        self.line = line
        self.path = path
        where = f"{path}:" if path else ""
        where += f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


@dataclass
class ExperimentConfig:
    experiment: str
    model: Dict[str, Any]
    proposal: Dict[str, Any]
    run: Dict[str, Any]
    output: Dict[str, Any]
    constants: Dict[str, Any] = field(default_factory=dict)
    planner: Dict[str, Any] = field(default_factory=dict)
    source: Optional[Path] = None

    @property
    def seed(self) -> int:
        return int(self.run["seed"])

    @property
    def output_dir(self) -> Path:
        return Path(self.output.get("directory", DEFAULT_OUTPUT_DIR))

    @property
    def formats(self) -> List[str]:
        return list(self.output.get("formats", REPORT_FORMATS))

    def resolved(self) -> Dict[str, Any]:
        """Everything the run depends on, for the report sidecar."""
        return {
            "experiment": self.experiment,
            "model": self.model,
            "proposal": self.proposal,
            "run": self.run,
            "output": {"directory": str(self.output_dir), "formats": self.formats},
            "constants": self.constants,
            "planner": self.planner,
        }


class _LineIndex:
    """Maps key paths to the line of their YAML node."""

    def __init__(self, root: Optional[yaml.Node]):
        self.root = root

    def node(self, keys: Sequence[str]) -> Optional[yaml.Node]:
        node = self.root
        for key in keys:
            if not isinstance(node, yaml.MappingNode):
                return node
            match = None
            for key_node, value_node in node.value:
                if key_node.value == key:
                    match = value_node
                    break
            if match is None:
                return node
            node = match
        return node

    def line(self, *keys: str) -> Optional[int]:
        node = self.node(keys)
        return node.start_mark.line + 1 if node is not None else None


def _parse(text: str, path: Optional[Path]):
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigValidationError(f"YAML syntax error: {getattr(e, 'problem', e)}", line, path) from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigValidationError("Top level must be a mapping", 1, path)
    return data, _LineIndex(root)


def _section(data: Dict[str, Any], name: str, lines: _LineIndex, path, required: bool) -> Dict[str, Any]:
    value = data.get(name)
    if value is None:
        if required:
            raise ConfigValidationError(f"Missing required section '{name}'", lines.line(name), path)
        return {}
    if not isinstance(value, dict):
        raise ConfigValidationError(f"Section '{name}' must be a mapping", lines.line(name), path)
    return value


def _require(section: Dict[str, Any], section_name: str, key: str, lines: _LineIndex, path) -> Any:
    if key not in section or section[key] is None:
        raise ConfigValidationError(f"Missing required key '{section_name}.{key}'", lines.line(section_name), path)
    return section[key]


def _validate_model(model: Dict[str, Any], lines: _LineIndex, path) -> None:
    kind = _require(model, "model", "kind", lines, path)
    if kind not in MODEL_KINDS:
        raise ConfigValidationError(f"Unknown model kind '{kind}' (choose from {', '.join(MODEL_KINDS)})",
                                    lines.line("model", "kind"), path)
    if kind in ("quadratic", "zero"):
        _require(model, "model", "d", lines, path)
    if kind == "quadratic":
        _require(model, "model", "b", lines, path)
    if kind == "tps":
        _require(model, "model", "m", lines, path)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _validate_grid(proposal: Dict[str, Any], lines: _LineIndex, path) -> None:
    grid = proposal["h_grid"]
    where = lines.line("proposal", "h_grid")
    if not isinstance(grid, list) or len(grid) < 4:
        raise ConfigValidationError("proposal.h_grid needs at least 4 step sizes", where, path)
    bad = [h for h in grid if not _is_number(h)]
    if bad:
        raise ConfigValidationError(f"proposal.h_grid entries must be numbers, got {bad[0]!r}", where, path)
    if any(not (0 < h < 2) for h in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigValidationError("proposal.h_grid must be strictly increasing inside (0, 2)", where, path)


def _validate_proposal(experiment: str, proposal: Dict[str, Any], lines: _LineIndex, path) -> None:
    kind = _require(proposal, "proposal", "kind", lines, path)
    if str(kind).lower().replace("-", "_") not in ("ou", "semi_implicit", "explicit_euler", "semiimplicit",
                                                    "expliciteuler", "mala", "euler"):
        raise ConfigValidationError(f"Unknown proposal kind '{kind}'", lines.line("proposal", "kind"), path)
    if experiment in NEEDS_GRID:
        _require(proposal, "proposal", "h_grid", lines, path)
        _validate_grid(proposal, lines, path)
    elif experiment in OPTIONAL_GRID:
        if "h_grid" in proposal:
            _validate_grid(proposal, lines, path)
    elif experiment in NEEDS_STEP:
        if "h" not in proposal and "h_grid" not in proposal:
            raise ConfigValidationError("Missing required key 'proposal.h'", lines.line("proposal"), path)
        key = "h_grid" if "h_grid" in proposal else "h"
        steps = proposal[key] if key == "h_grid" else [proposal["h"]]
        if not isinstance(steps, list) or not steps or not all(_is_number(h) for h in steps):
            raise ConfigValidationError(f"proposal.{key} must be a number or a list of numbers",
                                        lines.line("proposal", key), path)
        if any(not (0 < h < 2) for h in steps):
            raise ConfigValidationError("Step sizes must lie in (0, 2)", lines.line("proposal", key), path)


def parse_experiment_config(text: str, path: Optional[Path] = None, experiment: Optional[str] = None,
                            seed_override: Optional[int] = None,
                            out_override: Optional[str] = None) -> ExperimentConfig:
    """
    Parse and validate an experiment file.

    Args:
        text: YAML source
        path: File the text came from, for messages
        experiment: Subcommand name; must agree with the file's `experiment` key if both are given
        seed_override: Replaces run.seed
        out_override: Replaces output.directory

    Returns:
        Validated ExperimentConfig
    """
    data, lines = _parse(text, path)
    name = data.get("experiment", experiment)
    if name is None:
        raise ConfigValidationError("Missing required key 'experiment'", 1, path)
    if experiment is not None and name != experiment:
        raise ConfigValidationError(f"File describes experiment '{name}', not '{experiment}'",
                                    lines.line("experiment"), path)
    if name not in EXPERIMENTS:
        raise ConfigValidationError(f"Unknown experiment '{name}' (choose from {', '.join(EXPERIMENTS)})",
                                    lines.line("experiment"), path)

    model = _section(data, "model", lines, path, required=name in NEEDS_MODEL)
    if "model" in data or name in NEEDS_MODEL:
        _validate_model(model, lines, path)
    proposal = _section(data, "proposal", lines, path, required=name in NEEDS_STEP | NEEDS_GRID)
    if proposal:
        _validate_proposal(name, proposal, lines, path)

    run = dict(_section(data, "run", lines, path, required=seed_override is None))
    if seed_override is not None:
        run["seed"] = seed_override
    seed = _require(run, "run", "seed", lines, path)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigValidationError("run.seed must be a nonnegative integer", lines.line("run", "seed"), path)

    output = dict(_section(data, "output", lines, path, required=False))
    if out_override is not None:
        output["directory"] = str(out_override)
    for fmt in output.get("formats", REPORT_FORMATS):
        if fmt not in ("csv", "json"):
            raise ConfigValidationError(f"Unsupported report format '{fmt}'", lines.line("output", "formats"), path)

    planner = _section(data, "planner", lines, path, required=name == "plan")
    if name == "plan":
        for key in ("epsilon", "K"):
            _require(planner, "planner", key, lines, path)

    constants = dict(_section(data, "constants", lines, path, required=False))
    if "grad_u_sup" in constants:
        sup = constants["grad_u_sup"]
        if not _is_number(sup) or sup < 0:
            raise ConfigValidationError("constants.grad_u_sup must be a nonnegative number",
                                        lines.line("constants", "grad_u_sup"), path)

    return ExperimentConfig(
        experiment=name, model=dict(model), proposal=dict(proposal), run=run, output=output,
        constants=constants,
        planner=dict(planner), source=path,
    )


def load_experiment_config(path, experiment: Optional[str] = None, seed_override: Optional[int] = None,
                           out_override: Optional[str] = None) -> ExperimentConfig:
    """Read and validate an experiment file from disk."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigValidationError(f"Cannot read config: {e}", None, path) from e
    return parse_experiment_config(text, path, experiment, seed_override, out_override)
