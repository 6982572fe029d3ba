"""
Command-line entry point.

    ionlink herald --ideal
    ionlink rate --preset paper-3mm
    ionlink timing --preset paper-10km --out results/

Every subcommand produces one primary output (JSON for single-run reports,
CSV for sweeps). Without ``--out`` it goes to stdout; with ``--out DIR`` it is
written to DIR together with ``manifest.json``. Settings resolve as
flag > ``--config`` file section > ``--preset`` > dataclass default.
"""

from typing import Any, Callable, Sequence
from dataclasses import dataclass, field, replace
from math import sqrt
from pathlib import Path
import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__, config
from .bell_test import (
    CHSHConfig,
    InvalidSettingError,
    MeasurementSetting,
    ReadoutModel,
    SETTING_PAIRS,
    chsh_value,
    correlator,
    depolarize,
    monte_carlo_chsh,
    readout_counts,
)
from .cavity_model import (
    CavityGeometry,
    FinesseConvention,
    InvalidCavityError,
    IonConstants,
    analyze_cavity,
)
from .entanglement_protocol import (
    ChannelModel,
    EmissionModel,
    herald_probability,
    pair_overlap,
    phase_grid,
    phase_insensitivity_report,
    run_attempt,
)
from .fock_core import BellState, DensityMatrix, Site, ion_bell_state
from .optics_circuit import (
    Detector,
    HeraldClass,
    InvalidCircuitError,
    OpticalCircuit,
    analyzer_detectors,
    hom_dip,
)
from .presets import PRESETS, Preset, get_preset
from .rate_budget import BudgetConfig, rate_report, rate_vs_cavity_length, time_to_pairs
from .reports import (
    ColDef,
    CsvStyle,
    ExperimentManifest,
    MarkdownStyle,
    ScreenStyle,
    dumps,
    export_table,
    from_dataclasses,
    from_pairs,
    get_table,
)
from .spacetime_scheduler import (
    Scenario,
    build_schedule,
    max_detection_window,
    min_choice_delay,
    timing_sweep,
    validate,
)

logger = logging.getLogger(__name__)


class InvalidConfigError(ValueError): ...


SUBCOMMANDS = ("herald", "chsh", "cavity-scan", "rate", "timing", "hom", "phase-sweep")
CONFIG_SECTIONS = (
    "budget",
    "scenario",
    "emission",
    "channel_a",
    "channel_b",
    "detectors",
    "chsh",
    "readout",
    "ion",
)
FORMAT_EXTENSIONS = {"json": "json", "csv": "csv", "table": "txt", "markdown": "md"}
DEFAULT_CAVITY_LENGTHS = tuple(float(x) for x in np.geomspace(1e-4, 1e-2, 21))


###############################################################################
# Command results
###############################################################################


@dataclass
class CommandOutput:
    """
    What a subcommand produced, before it is rendered.

    `document` is the JSON form; `rows`/`headers` the tabular form used for
    CSV and text tables.
    """

    name: str
    document: dict[str, Any]
    rows: list[list[Any]]
    headers: list[str]
    default_format: str = "json"
    col_defs: list[str | ColDef] | None = None
    config: dict[str, Any] = field(default_factory=dict)
    rng_seed: int | None = None
    schema: str = "table"


def _sweep_output(name: str, rows, headers, cfg: dict[str, Any], col_defs=None) -> CommandOutput:
    return CommandOutput(
        name=name,
        document={"columns": headers, "rows": rows},
        rows=rows,
        headers=headers,
        default_format="csv",
        col_defs=col_defs,
        config=cfg,
    )


def render(output: CommandOutput, fmt: str) -> str:
    if fmt == "json":
        return dumps(output.document)
    if fmt == "csv":
        return str(export_table(output.rows, output.headers, style=CsvStyle()))
    style = MarkdownStyle() if fmt == "markdown" else ScreenStyle()
    return get_table(output.rows, output.headers, style=style, col_defs=output.col_defs) + "\n"


def write_output(
    output: CommandOutput, fmt: str, directory: str | Path, subcommand: str
) -> ExperimentManifest:
    """Write the primary output and its manifest into `directory`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{output.name}.{FORMAT_EXTENSIONS[fmt]}"
    if fmt == "csv":
        export_table(output.rows, output.headers, style=CsvStyle(), file=path)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(render(output, fmt))

    manifest = ExperimentManifest(
        subcommand=subcommand,
        config=output.config,
        version=__version__,
        rng_seed=output.rng_seed,
    )
    manifest.add_output(path)
    manifest.write(directory)
    logger.info("wrote %s and manifest to %s", path.name, directory)
    return manifest


###############################################################################
# Settings resolution
###############################################################################


@dataclass
class Settings:
    """Preset plus `--config` sections, before per-subcommand flags apply."""

    preset: Preset | None = None
    sections: dict[str, dict[str, Any]] = field(default_factory=dict)

    def section(self, name: str) -> dict[str, Any]:
        return self.sections.get(name, {})


def load_settings(args: argparse.Namespace) -> Settings:
    preset = get_preset(args.preset) if args.preset else None
    sections: dict[str, dict[str, Any]] = {}
    if args.config:
        data = config.load_json(args.config, InvalidConfigError)
        unknown = sorted(set(data) - set(CONFIG_SECTIONS))
        if unknown:
            raise InvalidConfigError(f"Unknown config sections: {', '.join(unknown)}")
        for name, section in data.items():
            if not isinstance(section, dict):
                raise InvalidConfigError(f"Config section {name!r} must be a JSON object")
            sections[name] = section
    return Settings(preset, sections)


def _resolve(base: Any, section: dict[str, Any], error: type[ValueError], **flags) -> Any:
    """`base` overlaid by a config section, then by every flag that was given."""
    cls = type(base)
    data = {**config.to_dict(base), **section}
    loader: Callable[[dict[str, Any]], Any] | None = getattr(cls, "from_dict", None)
    resolved = loader(data) if loader else config.from_dict(cls, data, error)
    given = {k: v for k, v in flags.items() if v is not None}
    return replace(resolved, **given) if given else resolved


def _budget(args, settings: Settings) -> BudgetConfig:
    base = settings.preset.budget if settings.preset else BudgetConfig()
    return _resolve(
        base,
        settings.section("budget"),
        ValueError,
        p_cav=getattr(args, "p_cav", None),
        distance_km=getattr(args, "distance_km", None),
        detector_eta=getattr(args, "eta", None),
        repetition_rate=getattr(args, "repetition_rate", None),
        fiber_coupling=getattr(args, "coupling", None),
    )


def _ion(settings: Settings) -> IonConstants:
    return _resolve(IonConstants(), settings.section("ion"), InvalidCavityError)


###############################################################################
# herald
###############################################################################


IDEAL_CONFLICTS = ("distance_km", "eta", "dark_count", "overlap", "offset", "asymmetry")


@dataclass(frozen=True)
class AttemptInputs:
    emission: EmissionModel
    arm_a: ChannelModel
    arm_b: ChannelModel
    detector: Detector
    circuit: OpticalCircuit | None

    def run(self):
        detectors = analyzer_detectors(
            self.detector.efficiency, self.detector.dark_count_prob, self.detector.number_resolving
        )
        return run_attempt(self.emission, self.arm_a, self.arm_b, detectors, self.circuit)

    def to_dict(self) -> dict[str, Any]:
        return {
            "emission": self.emission.to_dict(),
            "channel_a": self.arm_a.to_dict(),
            "channel_b": self.arm_b.to_dict(),
            "detectors": {
                "efficiency": self.detector.efficiency,
                "dark_count_prob": self.detector.dark_count_prob,
                "number_resolving": self.detector.number_resolving,
            },
            "circuit": self.circuit.to_dict() if self.circuit else None,
        }


def _attempt_inputs(args, settings: Settings) -> AttemptInputs:
    """Emission, arms, detectors and circuit from preset, config and herald flags."""
    ideal = getattr(args, "ideal", False)
    flag = {name: getattr(args, name, None) for name in IDEAL_CONFLICTS}
    if ideal:
        if settings.preset:
            logger.warning("--ideal ignores preset %s", settings.preset.name)
        given = sorted(name for name, value in flag.items() if value is not None)
        if given:
            options = ", ".join("--" + name.replace("_", "-") for name in given)
            raise InvalidConfigError(f"--ideal cannot be combined with {options}")

    arm_a = arm_b = ChannelModel()
    eta = 1.0
    emission = EmissionModel()
    if settings.preset and not ideal:
        arm_a, arm_b = settings.preset.channels()
        eta = settings.preset.budget.detector_eta

    if not ideal:
        half = None if flag["distance_km"] is None else flag["distance_km"] / 2
        arm_a = _resolve(arm_a, settings.section("channel_a"), ValueError, length_km=half)
        arm_b = _resolve(
            arm_b,
            settings.section("channel_b"),
            ValueError,
            length_km=half,
            overlap=flag["overlap"],
            temporal_offset=flag["offset"],
        )
        emission = _resolve(
            emission,
            settings.section("emission"),
            ValueError,
            amplitude_asymmetry=flag["asymmetry"],
        )

    detector = _resolve(
        Detector(Site.D1, efficiency=eta),
        {} if ideal else settings.section("detectors"),
        InvalidCircuitError,
        efficiency=flag["eta"],
        dark_count_prob=flag["dark_count"],
        number_resolving=True if getattr(args, "number_resolving", False) else None,
    )

    circuit = None
    if getattr(args, "circuit", None):
        with open(args.circuit, encoding="utf-8") as f:
            circuit = OpticalCircuit.from_json(f.read())

    return AttemptInputs(emission, arm_a, arm_b, detector, circuit)


def cmd_herald(args, settings: Settings) -> CommandOutput:
    inputs = _attempt_inputs(args, settings)
    results = inputs.run()
    document = {
        "results": [r.to_dict() for r in results],
        "herald_probability": herald_probability(results),
        "pair_overlap": pair_overlap(inputs.arm_a, inputs.arm_b),
    }
    rows = [[r.herald_class.value, r.success_probability, r.fidelity_to_target] for r in results]
    return CommandOutput(
        name="herald",
        schema="herald",
        document=document,
        rows=rows,
        headers=["herald_class", "probability", "fidelity"],
        col_defs=["<", ">.6g", ">.6g"],
        config=inputs.to_dict(),
    )


###############################################################################
# chsh
###############################################################################


def _matrix_from_json(data: Any, source: str) -> DensityMatrix:
    """Two-qubit density matrix from {"real": [[...]], "imag": [[...]]}."""
    try:
        real = np.array(data["real"], dtype=float)
        matrix = real + 1j * np.array(data.get("imag", 0.0), dtype=float)
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise InvalidSettingError(f"{source} needs a 4x4 'real' matrix and optional 'imag'") from e
    if matrix.shape != (4, 4):
        raise InvalidSettingError(f"{source} holds a {matrix.shape} matrix, expected (4, 4)")
    rho = DensityMatrix.from_qubit_matrix(matrix)
    if not rho.is_valid(tolerance=1e-9):
        raise InvalidSettingError(f"{source} is not a normalized density matrix")
    return rho


def _load_state(path: str, herald_class: str) -> DensityMatrix:
    """
    Ion state from a JSON file.

    The file holds either a bare density matrix or a herald report, in which
    case the conditional state of `herald_class` is used.
    """
    data = config.load_json(path, InvalidSettingError)
    if "results" not in data:
        return _matrix_from_json(data, path)
    for result in data["results"]:
        if isinstance(result, dict) and result.get("herald_class") == herald_class:
            if result.get("ion_state") is None:
                raise InvalidSettingError(f"{herald_class} never occurs in {path}; no ion state")
            return _matrix_from_json(result["ion_state"], f"{path} ({herald_class})")
    raise InvalidSettingError(f"{path} has no {herald_class} result")


def _chsh_state(args, settings: Settings) -> tuple[DensityMatrix, dict[str, Any]]:
    """The ion state to test and a description of where it came from."""
    source: dict[str, Any] = {"state": args.state}
    if args.state == "ideal":
        return DensityMatrix.from_qubit_vector(ion_bell_state(BellState.PSI_MINUS)), source

    source["herald_class"] = args.herald_class
    if args.state == "herald":
        inputs = _attempt_inputs(args, settings)
        cls = HeraldClass(args.herald_class)
        result = next(r for r in inputs.run() if r.herald_class is cls)
        if result.ion_state is None:
            raise InvalidSettingError(f"{cls.value} never occurs with these settings; no ion state")
        source["attempt"] = inputs.to_dict()
        return result.ion_state, source
    return _load_state(args.state, args.herald_class), source


def cmd_chsh(args, settings: Settings) -> CommandOutput:
    rho, source = _chsh_state(args, settings)
    matrix = depolarize(rho, args.depolarize) if args.depolarize else rho

    angles = {}
    if args.settings:
        names = ("a", "a_prime", "b", "b_prime")
        angles = {n: MeasurementSetting.equatorial(deg) for n, deg in zip(names, args.settings)}
    cfg = _resolve(
        CHSHConfig(),
        settings.section("chsh"),
        InvalidSettingError,
        trials=args.trials,
        rng_seed=args.seed,
        **angles,
    )
    readout = _resolve(ReadoutModel(), settings.section("readout"), InvalidSettingError)

    analytic = chsh_value(matrix, cfg)
    exact = [correlator(matrix, x, y) for x, y in cfg.setting_pairs]
    estimate = monte_carlo_chsh(matrix, cfg, threads=args.threads)
    counts = readout_counts(readout)
    echo = {
        **source,
        "depolarize": args.depolarize,
        "chsh": cfg.to_dict(),
        "readout": readout.to_dict(),
        "rng_seed": cfg.rng_seed,
    }

    document = {
        "analytic": {"s": analytic, "correlators": dict(zip(SETTING_PAIRS, exact))},
        "monte_carlo": {
            "s": estimate.s,
            "standard_error": estimate.standard_error,
            "correlators": dict(zip(SETTING_PAIRS, estimate.correlators)),
            "counts": estimate.counts,
            "trials": estimate.trials,
            "rng_seed": estimate.rng_seed,
        },
        "classical_bound": 2.0,
        "tsirelson_bound": 2 * sqrt(2),
        "readout": {
            "expected_counts": counts.expected_counts,
            "dark_counts": counts.dark_counts,
            "discrimination_error": counts.discrimination_error,
        },
        "config": echo,
    }
    rows = [
        [pair, e, m, sum(estimate.counts[pair].values())]
        for pair, e, m in zip(SETTING_PAIRS, exact, estimate.correlators)
    ]
    rows.append(["S", analytic, estimate.s, estimate.trials])
    return CommandOutput(
        name="chsh",
        schema="chsh",
        document=document,
        rows=rows,
        headers=["pair", "exact", "monte_carlo", "trials"],
        col_defs=["<", ">.6f", ">.6f", ">"],
        config=echo,
        rng_seed=cfg.rng_seed,
    )


###############################################################################
# cavity-scan
###############################################################################


def cmd_cavity_scan(args, settings: Settings) -> CommandOutput:
    ion = _ion(settings)
    lengths = args.lengths or DEFAULT_CAVITY_LENGTHS
    convention = FinesseConvention(args.convention)
    reports = [
        analyze_cavity(CavityGeometry(float(length), finesse=args.finesse), ion, convention)
        for length in lengths
    ]
    rows, headers = from_dataclasses(reports)
    return _sweep_output(
        "cavity_scan",
        rows,
        headers,
        {
            "lengths": [float(x) for x in lengths],
            "finesse": args.finesse,
            "convention": convention.value,
            "ion": config.to_dict(ion),
        },
        col_defs=[">.4g"] * len(headers),
    )


###############################################################################
# rate
###############################################################################


def cmd_rate(args, settings: Settings) -> CommandOutput:
    budget = _budget(args, settings)

    if args.sweep is not None:
        lengths = args.sweep or DEFAULT_CAVITY_LENGTHS
        ion = _ion(settings)
        rows, headers = from_dataclasses(rate_vs_cavity_length(budget, lengths, ion))
        return _sweep_output(
            "rate_sweep",
            rows,
            headers,
            {"budget": budget.to_dict(), "lengths": [float(x) for x in lengths], "ion": config.to_dict(ion)},
            col_defs=[">.4g"] * len(headers),
        )

    report = rate_report(budget)
    needed = time_to_pairs(budget, args.pairs)
    document = {
        "factors": dict(report.factors()),
        "pairs_per_attempt": report.pairs_per_attempt,
        "pairs_per_second": report.pairs_per_second,
        "pairs_per_minute": report.pairs_per_minute,
        "time_to_pairs": {
            "n_pairs": needed.n_pairs,
            "seconds": needed.seconds,
            "hours": needed.hours,
            "feasible": needed.feasible,
        },
    }
    rows, headers = from_pairs(
        report.factors()
        + [
            ("pairs_per_attempt", report.pairs_per_attempt),
            ("pairs_per_second", report.pairs_per_second),
            ("pairs_per_minute", report.pairs_per_minute),
            (f"hours_for_{needed.n_pairs}_pairs", needed.hours),
        ]
    )
    return CommandOutput(
        name="rate",
        schema="rate",
        document=document,
        rows=rows,
        headers=headers,
        col_defs=["<", ">.6g"],
        config={"budget": budget.to_dict(), "pairs": args.pairs},
    )


###############################################################################
# timing
###############################################################################


def _scenario(args, settings: Settings) -> Scenario:
    base = settings.preset.scenario if settings.preset else Scenario()
    if args.distance_m is not None:
        base = Scenario.symmetric(
            args.distance_m,
            base.fiber_speed,
            base.choice_delay,
            base.rotation_duration,
            base.readout_duration,
            base.emission_delay,
        )
    return _resolve(
        base,
        settings.section("scenario"),
        ValueError,
        fiber_speed=args.fiber_speed,
        choice_delay=args.choice_delay,
        rotation_duration=args.rotation,
        readout_duration=args.readout,
        emission_delay=args.emission_delay,
    )


def cmd_timing(args, settings: Settings) -> CommandOutput:
    scenario = _scenario(args, settings)

    if args.sweep:
        if not args.values:
            raise InvalidConfigError("--sweep needs --values")
        rows, headers = from_dataclasses(timing_sweep(scenario, args.sweep, args.values))
        return _sweep_output(
            "timing_sweep",
            rows,
            headers,
            {"scenario": scenario.to_dict(), "parameter": args.sweep, "values": list(args.values)},
        )

    schedule = build_schedule(scenario)
    report = validate(schedule)
    document = {
        "events": [{"label": e.label.value, "x": e.x, "t": e.t} for e in schedule],
        "checks": [
            {"name": c.name, "description": c.description, "margin": c.margin, "passed": c.passed}
            for c in report.checks
        ],
        "passed": report.passed,
        "min_choice_delay": min_choice_delay(scenario),
        "max_detection_window": max_detection_window(scenario),
    }
    rows = [[c.name, c.description, c.margin * 1e6, c.passed] for c in report.checks]
    return CommandOutput(
        name="timing",
        schema="timing",
        document=document,
        rows=rows,
        headers=["constraint", "description", "margin_us", "passed"],
        col_defs=["^", "<", ">.3f", "^"],
        config={"scenario": scenario.to_dict()},
    )


###############################################################################
# hom
###############################################################################


def cmd_hom(args, settings: Settings) -> CommandOutput:
    overlaps = args.overlaps or [float(x) for x in np.linspace(0.0, 1.0, args.points)]
    rows, headers = from_dataclasses(hom_dip(overlaps))
    return _sweep_output("hom", rows, headers, {"overlaps": list(overlaps)}, col_defs=[">.4f", ">.6g"])


###############################################################################
# phase-sweep
###############################################################################


def cmd_phase_sweep(args, settings: Settings) -> CommandOutput:
    grid = [float(x) for x in phase_grid(args.points)]
    rows_data = phase_insensitivity_report(grid, grid, threads=args.threads)
    rows, headers = from_dataclasses(rows_data)
    return _sweep_output(
        "phase_sweep",
        rows,
        headers,
        {"points": args.points},
        col_defs=[">.4f", ">.4f", "<", ">.6g", ">.12f", ">.6f"],
    )


###############################################################################
# Parser
###############################################################################


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with configuration sections.")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="Named parameter set.")
    parser.add_argument("--out", help="Directory for the output file and manifest.json.")
    parser.add_argument(
        "--format",
        choices=sorted(FORMAT_EXTENSIONS),
        help="Output format (default: json for reports, csv for sweeps).",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=os.getenv("IONLINK_THREADS", "1"),
        help="Worker threads for sweeps and Monte Carlo (env IONLINK_THREADS).",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging.")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only.")


def _floats(values: str) -> list[float]:
    try:
        return [float(v) for v in values.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {values!r}") from e


def _count(value: str) -> int:
    try:
        count = int(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected an integer, got {value!r}") from e
    if count < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {count}")
    return count


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ionlink",
        description="Heralded ion-ion entanglement: analyzer, rates, timing and CHSH.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("herald", help="Herald statistics of one attempt.")
    _common(p)
    p.add_argument("--ideal", action="store_true", help="Lossless arms and perfect detectors.")
    p.add_argument("--circuit", help="JSON circuit replacing the standard analyzer.")
    p.add_argument("--distance-km", type=float, help="Ion-to-ion fiber distance.")
    p.add_argument("--eta", type=float, help="Detector efficiency.")
    p.add_argument("--dark-count", type=float, help="Dark-count probability per window.")
    p.add_argument("--number-resolving", action="store_true", help="Photon-number-resolving detectors.")
    p.add_argument("--overlap", type=float, help="Wavepacket overlap of photon B.")
    p.add_argument("--offset", type=int, help="Temporal-bin offset of photon B.")
    p.add_argument("--asymmetry", type=float, help="Branch amplitude ratio of the emission.")
    p.set_defaults(handler=cmd_herald)

    p = sub.add_parser("chsh", help="CHSH value, exact and Monte Carlo.")
    _common(p)
    p.add_argument(
        "--state",
        default="ideal",
        help="'ideal', 'herald' (one attempt under the preset and config),"
        " a herald report file or a density matrix file.",
    )
    p.add_argument(
        "--herald-class",
        choices=[HeraldClass.PSI_MINUS.value, HeraldClass.PSI_PLUS.value],
        default=HeraldClass.PSI_MINUS.value,
        help="Which heralded state to test when --state comes from an attempt.",
    )
    p.add_argument("--depolarize", type=float, default=0.0, help="Local depolarizing strength.")
    p.add_argument(
        "--settings",
        type=float,
        nargs=4,
        metavar=("A", "A_PRIME", "B", "B_PRIME"),
        help="Equatorial setting azimuths in degrees.",
    )
    p.add_argument("--trials", type=int, help="Monte Carlo trials.")
    p.add_argument("--seed", type=int, help="Monte Carlo seed.")
    p.set_defaults(handler=cmd_chsh)

    p = sub.add_parser("cavity-scan", help="Cavity coupling and p_cav vs length.")
    _common(p)
    p.add_argument("--lengths", type=_floats, help="Comma-separated cavity lengths in m.")
    p.add_argument("--finesse", type=float, help="Fixed finesse instead of the optimum.")
    p.add_argument("--convention", choices=[c.value for c in FinesseConvention], default="pi")
    p.set_defaults(handler=cmd_cavity_scan)

    p = sub.add_parser("rate", help="Entangled-pair rate budget.")
    _common(p)
    p.add_argument("--p-cav", type=float, help="Cavity emission probability per ion.")
    p.add_argument("--distance-km", type=float, help="Ion-to-ion fiber distance.")
    p.add_argument("--eta", type=float, help="Detector efficiency.")
    p.add_argument("--coupling", type=float, help="Cavity-to-fiber coupling.")
    p.add_argument("--repetition-rate", type=float, help="Attempts per second.")
    p.add_argument("--pairs", type=int, default=1000, help="Pairs for the time estimate.")
    p.add_argument(
        "--sweep",
        type=_floats,
        nargs="?",
        const=(),
        metavar="LENGTHS",
        help="Sweep comma-separated cavity lengths in m (default: 1e-4 to 1e-2).",
    )
    p.set_defaults(handler=cmd_rate)

    p = sub.add_parser("timing", help="Lightcone constraints of one run.")
    _common(p)
    p.add_argument("--distance-m", type=float, help="Symmetric ion-to-ion distance.")
    p.add_argument("--fiber-speed", type=float, help="Photon speed in fiber, m/s.")
    p.add_argument("--choice-delay", type=float, help="Excitation to basis choice, s.")
    p.add_argument("--rotation", type=float, help="Basis rotation duration, s.")
    p.add_argument("--readout", type=float, help="Readout duration, s.")
    p.add_argument("--emission-delay", type=float, help="Excitation to emission, s.")
    p.add_argument("--sweep", metavar="PARAM", help="Scenario field to sweep.")
    p.add_argument("--values", type=_floats, help="Comma-separated values for --sweep.")
    p.set_defaults(handler=cmd_timing)

    p = sub.add_parser("hom", help="Hong-Ou-Mandel dip vs wavepacket overlap.")
    _common(p)
    p.add_argument("--overlaps", type=_floats, help="Comma-separated overlaps in [0, 1].")
    p.add_argument("--points", type=_count, default=11, help="Evenly spaced overlaps from 0 to 1.")
    p.set_defaults(handler=cmd_hom)

    p = sub.add_parser("phase-sweep", help="Heralded fidelity over a grid of arm phases.")
    _common(p)
    p.add_argument("--points", type=_count, default=11, help="Phases per arm over [0, 2pi).")
    p.set_defaults(handler=cmd_phase_sweep)

    return parser


###############################################################################
# run / main
###############################################################################


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def _report_error(error: Exception) -> None:
    sys.stderr.write(json.dumps({"error": type(error).__name__, "message": str(error)}) + "\n")


def run(argv: Sequence[str] | None = None) -> int:
    """
    Run one subcommand.

    Returns:
        0 on success, 1 on a validation error (error JSON on stderr), 2 on a
        usage error.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    _configure_logging(args)
    if args.threads < 1:
        _report_error(InvalidConfigError(f"--threads must be at least 1, got {args.threads}"))
        return 1

    try:
        settings = load_settings(args)
        output = args.handler(args, settings)
        fmt = args.format or output.default_format
        if args.out:
            write_output(output, fmt, args.out, args.command)
        else:
            sys.stdout.write(render(output, fmt))
    except (ValueError, OSError) as e:
        logger.debug("%s failed", args.command, exc_info=True)
        _report_error(e)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
