"""Command-line batch processing: enhance, compare, sweep, export-features.

Tables go to stdout as TSV, diagnostics to stderr. Exit status is 0 on
success, 1 if any file failed, 2 on a configuration error (nothing is read
or written in that case).

Settings are resolved as command-line flag, then ``--config`` file
(``key = value`` lines, ``#`` comments), then built-in default.
"""
from __future__ import annotations

import argparse
import glob
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .audio_io import ENCODINGS, AudioBuffer, read_wav, write_wav
from .baselines import WienerConfig, spectral_subtraction, wiener_enhance
from .errors import InvalidConfig, InvalidRange, LengthMismatch, MissingReference, PairMismatch, PcsError
from .metrics import EnhancementReport, evaluate
from .pcs import (
    DEFAULT_BIF_TABLE,
    GammaSchedule,
    build_schedule,
    export_training_targets,
    fixed_gamma_grid,
    pp_pcs,
    rescale_bif,
)
from .stft import WINDOWS, StftConfig

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2
BASELINES = ("none", "wiener", "specsub")
SCHEDULES = ("pcs", "fixed")

DEFAULTS = {
    "fft": 512,
    "hop": 256,
    "window": "hann",
    "schedule": "pcs",
    "gamma": 1.4,
    "gamma_max": 1.4,
    "baseline": "none",
    "out": None,
    "ref": None,
    "clean": None,
    "noisy": None,
    "sweep_lo": 0.5,
    "sweep_hi": 2.0,
    "sweep_step": 0.1,
    "jobs": 1,
    "encoding": "float32",
}
_CASTS = {"fft": int, "hop": int, "jobs": int, "gamma": float, "gamma_max": float,
          "sweep_lo": float, "sweep_hi": float, "sweep_step": float}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: list[str] = field(default_factory=list)
    out: Path | None = None
    ref: Path | None = None
    clean: Path | None = None
    noisy: Path | None = None
    stft: StftConfig = field(default_factory=StftConfig)
    schedule: str = "pcs"
    gamma: float = 1.4
    gamma_max: float = 1.4
    baseline: str = "none"
    sweep: tuple[float, float, float] = (0.5, 2.0, 0.1)
    jobs: int = 1
    encoding: str = "float32"

    def schedule_for(self, sample_rate: int, gamma: float | None = None) -> GammaSchedule:
        if gamma is not None or self.schedule == "fixed":
            return GammaSchedule.fixed(self.gamma if gamma is None else gamma, self.stft, sample_rate)
        return build_schedule(DEFAULT_BIF_TABLE, self.stft, sample_rate, self.gamma_max)


def read_config_file(path: str | Path) -> dict:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def resolve(args: argparse.Namespace) -> RunConfig:
    """Merge flags, config file and defaults, then validate everything."""
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(read_config_file(args.config))
    for key in DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    try:
        for key, cast in _CASTS.items():
            merged[key] = cast(merged[key])
    except ValueError as exc:
        raise ConfigError(f"bad numeric setting: {exc}") from exc
    for key, choices in (("window", WINDOWS), ("schedule", SCHEDULES),
                         ("baseline", BASELINES), ("encoding", ENCODINGS)):
        if merged[key] not in choices:
            raise ConfigError(f"{key} must be one of {', '.join(choices)}, got {merged[key]!r}")

    try:
        stft_cfg = StftConfig(merged["fft"], merged["hop"], merged["window"], True)
        cfg = RunConfig(
            command=args.command,
            inputs=list(getattr(args, "inputs", []) or []),
            out=Path(merged["out"]) if merged["out"] else None,
            ref=Path(merged["ref"]) if merged["ref"] else None,
            clean=Path(merged["clean"]) if merged["clean"] else None,
            noisy=Path(merged["noisy"]) if merged["noisy"] else None,
            stft=stft_cfg,
            schedule=merged["schedule"],
            gamma=merged["gamma"],
            gamma_max=merged["gamma_max"],
            baseline=merged["baseline"],
            sweep=(merged["sweep_lo"], merged["sweep_hi"], merged["sweep_step"]),
            jobs=max(1, merged["jobs"]),
            encoding=merged["encoding"],
        )
        # Dry-run the schedule so bad gamma settings fail before any file I/O.
        if cfg.schedule == "pcs":
            rescale_bif(DEFAULT_BIF_TABLE, cfg.gamma_max)
        else:
            GammaSchedule.fixed(cfg.gamma, stft_cfg, 16000)
        if cfg.command == "sweep":
            fixed_gamma_grid(*cfg.sweep)
    except (InvalidConfig, InvalidRange) as exc:
        raise ConfigError(str(exc)) from exc

    need = {"enhance": ("out",), "compare": ("ref",), "sweep": ("ref",),
            "export-features": ("clean", "noisy", "out")}[cfg.command]
    for key in need:
        if getattr(cfg, key) is None:
            raise ConfigError(f"{cfg.command} requires --{key}")
    return cfg


def expand_inputs(patterns: Iterable[str]) -> list[Path]:
    """Directories contribute their ``*.wav`` files; globs are expanded; plain paths kept."""
    found: list[Path] = []
    for pat in patterns:
        p = Path(pat)
        if p.is_dir():
            found.extend(sorted(p.glob("*.wav")))
        elif glob.has_magic(pat):
            found.extend(Path(m) for m in sorted(glob.glob(pat)))
        else:
            found.append(p)
    seen = set()
    return [p for p in found if not (p in seen or seen.add(p))]


def apply_baseline(buf: AudioBuffer, cfg: RunConfig) -> AudioBuffer:
    if cfg.baseline == "wiener":
        return wiener_enhance(buf, cfg.stft, WienerConfig())
    if cfg.baseline == "specsub":
        return spectral_subtraction(buf, cfg.stft)
    return buf


def _run_each(items: Sequence, fn: Callable, jobs: int) -> list[tuple[object, object, Exception | None]]:
    """Run ``fn`` per item, isolating failures; results keep input order."""
    def guarded(item):
        try:
            return item, fn(item), None
        except (PcsError, OSError, ValueError) as exc:
            return item, None, exc

    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(guarded, items))
    return [guarded(item) for item in items]


def _report_failures(results, label=lambda item: str(item)) -> int:
    failed = 0
    for item, _, exc in results:
        if exc is not None:
            failed += 1
            print(f"error: {label(item)}: {exc}", file=sys.stderr)
    return failed


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def cmd_enhance(cfg: RunConfig) -> int:
    inputs = expand_inputs(cfg.inputs)
    if not inputs:
        print("error: no inputs", file=sys.stderr)
        return EXIT_CONFIG
    cfg.out.mkdir(parents=True, exist_ok=True)

    def one(path: Path) -> Path:
        buf = read_wav(path)
        enhanced = pp_pcs(apply_baseline(buf, cfg), cfg.stft, cfg.schedule_for(buf.sample_rate))
        dest = cfg.out / (path.stem + ".pcs.wav")
        write_wav(dest, enhanced, cfg.encoding)
        return dest

    results = _run_each(inputs, one, cfg.jobs)
    failed = _report_failures(results)
    return EXIT_PARTIAL if failed else EXIT_OK


def find_reference(test_path: Path, ref_dir: Path) -> Path:
    candidate = ref_dir / test_path.name
    if candidate.is_file():
        return candidate
    if test_path.name.endswith(".pcs.wav"):
        candidate = ref_dir / (test_path.name[: -len(".pcs.wav")] + ".wav")
        if candidate.is_file():
            return candidate
    raise MissingReference(f"no reference named {test_path.name} in {ref_dir}")


def _load_pair(path: Path, ref_dir: Path) -> tuple[AudioBuffer, AudioBuffer]:
    return read_wav(find_reference(path, ref_dir)), read_wav(path)


def _print_table(header: Sequence[str], rows: Iterable[Sequence[str]], out=None) -> None:
    out = out or sys.stdout
    print("\t".join(header), file=out)
    for row in rows:
        print("\t".join(row), file=out)


def cmd_compare(cfg: RunConfig) -> int:
    inputs = expand_inputs(cfg.inputs)
    if not inputs:
        print("error: no inputs", file=sys.stderr)
        return EXIT_CONFIG

    def one(path: Path) -> EnhancementReport:
        ref, test = _load_pair(path, cfg.ref)
        return evaluate(ref, test, cfg.stft, file_id=path.name)

    results = _run_each(inputs, one, cfg.jobs)
    failed = _report_failures(results)
    reports = sorted((r for _, r, e in results if e is None), key=lambda r: r.file_id)
    rows = [(r.file_id, _fmt(r.seg_snr_db), _fmt(r.lsd_db)) for r in reports]
    if reports:
        rows.append(("MEAN", _fmt(np.mean([r.seg_snr_db for r in reports])),
                     _fmt(np.mean([r.lsd_db for r in reports]))))
    _print_table(("file", "segsnr_db", "lsd_db"), rows)
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    """One row per fixed gamma on the sweep grid, then one row for the PCS schedule."""
    inputs = expand_inputs(cfg.inputs)
    if not inputs:
        print("error: no inputs", file=sys.stderr)
        return EXIT_CONFIG

    loaded = _run_each(inputs, lambda p: _load_pair(p, cfg.ref), cfg.jobs)
    failed = _report_failures(loaded)
    pairs = sorted(((p.name, pair) for p, pair, e in loaded if e is None), key=lambda x: x[0])
    if not pairs:
        _print_table(("gamma", "segsnr_db", "lsd_db"), [])
        return EXIT_PARTIAL
    # The baseline does not depend on gamma, so run it once per file.
    staged = [(name, ref, apply_baseline(test, cfg)) for name, (ref, test) in pairs]

    def score(gamma: float | None) -> tuple[float, float]:
        def one(item):
            name, ref, test = item
            sched = cfg.schedule_for(test.sample_rate, gamma) if gamma is not None else \
                build_schedule(DEFAULT_BIF_TABLE, cfg.stft, test.sample_rate, cfg.gamma_max)
            return evaluate(ref, pp_pcs(test, cfg.stft, sched), cfg.stft, file_id=name)

        reports = [r for _, r, _ in _run_each(staged, one, cfg.jobs)]
        return (float(np.mean([r.seg_snr_db for r in reports])),
                float(np.mean([r.lsd_db for r in reports])))

    rows = []
    for gamma in fixed_gamma_grid(*cfg.sweep):
        seg, lsd = score(gamma)
        rows.append((f"{gamma:.2f}", _fmt(seg), _fmt(lsd)))
    seg, lsd = score(None)
    rows.append(("pcs", _fmt(seg), _fmt(lsd)))
    _print_table(("gamma", "segsnr_db", "lsd_db"), rows)
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_export_features(cfg: RunConfig) -> int:
    clean = {p.name: p for p in sorted(cfg.clean.glob("*.wav"))}
    noisy = {p.name: p for p in sorted(cfg.noisy.glob("*.wav"))}
    names = sorted(set(clean) | set(noisy))
    if not names:
        print("error: no inputs", file=sys.stderr)
        return EXIT_CONFIG
    cfg.out.mkdir(parents=True, exist_ok=True)

    def one(name: str):
        if name not in clean or name not in noisy:
            side = "clean" if name not in clean else "noisy"
            raise PairMismatch(f"{name} has no {side} counterpart")
        c, n = read_wav(clean[name]), read_wav(noisy[name])
        try:
            return export_training_targets(c, n, cfg.stft, cfg.schedule_for(c.sample_rate),
                                           cfg.out, stem=Path(name).stem)
        except LengthMismatch as exc:
            raise PairMismatch(f"{name}: {exc}") from exc

    results = _run_each(names, one, cfg.jobs)
    failed = _report_failures(results)
    return EXIT_PARTIAL if failed else EXIT_OK


COMMANDS = {
    "enhance": cmd_enhance,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "export-features": cmd_export_features,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value settings file (flags take precedence)")
    common.add_argument("--fft", type=int, help="FFT size in samples (default 512)")
    common.add_argument("--hop", type=int, help="hop size in samples (default 256)")
    common.add_argument("--window", choices=WINDOWS)
    common.add_argument("--schedule", choices=SCHEDULES, help="band-wise PCS or one fixed gamma")
    common.add_argument("--gamma", type=float, help="exponent for --schedule fixed (default 1.4)")
    common.add_argument("--gamma-max", dest="gamma_max", type=float,
                        help="exponent of the most important band for --schedule pcs (default 1.4)")
    common.add_argument("--baseline", choices=BASELINES, help="enhancer run before PCS")
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, help="files processed in parallel")
    common.add_argument("--encoding", choices=ENCODINGS, help="WAV encoding of written files")

    parser = argparse.ArgumentParser(prog="pcs-speech", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", parents=[common], help="run [baseline ->] PCS post-processing")
    p.add_argument("inputs", nargs="*", help="WAV files, globs or directories")

    p = sub.add_parser("compare", parents=[common], help="segSNR / LSD against references")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--ref", help="directory of same-named reference WAVs")

    p = sub.add_parser("sweep", parents=[common], help="score a grid of fixed gammas plus PCS")
    p.add_argument("inputs", nargs="*", help="noisy WAVs")
    p.add_argument("--ref", help="directory of same-named clean WAVs")
    p.add_argument("--sweep-lo", dest="sweep_lo", type=float)
    p.add_argument("--sweep-hi", dest="sweep_hi", type=float)
    p.add_argument("--sweep-step", dest="sweep_step", type=float)

    p = sub.add_parser("export-features", parents=[common],
                       help="write log1p input / contrast-stretched target feature pairs")
    p.add_argument("--clean", help="directory of clean WAVs")
    p.add_argument("--noisy", help="directory of noisy WAVs paired by file name")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return COMMANDS[cfg.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
