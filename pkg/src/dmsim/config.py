"""INI configuration for simulation runs.

Sections and keys (numeric values accept 0x/0b prefixes):

[sim]      cores, mode (NoP|WP|DM), phys_pages, page_size, cleanup_latency,
           sample_interval, measured_core, loop_corunners, audit
[cache]    size, assoc, line_size, hit_latency, part_mask (space-separated
           ``core:hexmask`` tokens; omitted in NoP mode, where every core
           gets the full mask)
[l1]       size, assoc, hit_latency (section present = L1 enabled)
[dram]     banks, rows_per_bank, t_row_hit, t_row_miss, t_bus, dm_cap,
           queue_capacity
[banks]    private (space-separated ``core:b0,b1`` tokens), shared
           (comma-separated bank list)
[traces]   core<N> = path to a trace file
[regions]  core<N> = path to a DM region file

Relative trace/region paths resolve against the config file's directory.
"""

from __future__ import annotations

import configparser
import os

from .addrspace import BankPolicy, DmRegionSet
from .cache import CacheConfig
from .dram import DramConfig
from .engine import MODES, L1Config, SimConfig, read_trace
from .errors import ValidationError
from .geometry import Geometry


def _num(section: str, key: str, raw: str) -> int:
    try:
        return int(raw, 0)
    except ValueError as exc:
        raise ValidationError(f"[{section}] {key}: expected an integer, got {raw!r}") from exc


def _get(parser: configparser.ConfigParser, section: str, key: str, default=None):
    if parser.has_option(section, key):
        return parser.get(section, key)
    if default is None:
        raise ValidationError(f"missing required key [{section}] {key}")
    return default


def _parse_core_tokens(section: str, key: str, raw: str) -> dict[int, str]:
    """Split ``core:value`` tokens into a dict keyed by core index."""
    out: dict[int, str] = {}
    for token in raw.split():
        if ":" not in token:
            raise ValidationError(f"[{section}] {key}: token {token!r} is not core:value")
        left, right = token.split(":", 1)
        core = _num(section, key, left)
        if core in out:
            raise ValidationError(f"[{section}] {key}: core {core} listed twice")
        out[core] = right
    return out


def load_config(path: str) -> SimConfig:
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise ValidationError(f"cannot read config file {path}")
    base_dir = os.path.dirname(os.path.abspath(path))

    for section in ("sim", "cache", "dram", "banks", "traces"):
        if not parser.has_section(section):
            raise ValidationError(f"missing required section [{section}]")

    cores = _num("sim", "cores", _get(parser, "sim", "cores"))
    mode = _get(parser, "sim", "mode")
    if mode not in MODES:
        raise ValidationError(f"[sim] mode must be one of {MODES}, got {mode!r}")
    phys_pages = _num("sim", "phys_pages", _get(parser, "sim", "phys_pages", "8192"))
    page_size = _num("sim", "page_size", _get(parser, "sim", "page_size", "4096"))
    cleanup_latency = _num(
        "sim", "cleanup_latency", _get(parser, "sim", "cleanup_latency", "2000")
    )
    sample_interval = _num(
        "sim", "sample_interval", _get(parser, "sim", "sample_interval", "4096")
    )
    measured_raw = _get(parser, "sim", "measured_core", "")
    measured_core = _num("sim", "measured_core", measured_raw) if measured_raw else None
    loop_corunners = parser.getboolean("sim", "loop_corunners", fallback=False)
    audit = parser.getboolean("sim", "audit", fallback=False)

    size = _num("cache", "size", _get(parser, "cache", "size"))
    assoc = _num("cache", "assoc", _get(parser, "cache", "assoc"))
    line_size = _num("cache", "line_size", _get(parser, "cache", "line_size"))
    hit_latency = _num("cache", "hit_latency", _get(parser, "cache", "hit_latency", "12"))
    full_mask = (1 << assoc) - 1
    if mode == "NoP":
        if parser.has_option("cache", "part_mask"):
            raise ValidationError("[cache] part_mask is not allowed in NoP mode")
        part_masks = {c: full_mask for c in range(cores)}
        allow_overlap = True
    else:
        raw_masks = _parse_core_tokens(
            "cache", "part_mask", _get(parser, "cache", "part_mask")
        )
        part_masks = {}
        for core, text in raw_masks.items():
            try:
                part_masks[core] = int(text, 16)
            except ValueError as exc:
                raise ValidationError(
                    f"[cache] part_mask: core {core}: bad hex mask {text!r}"
                ) from exc
        missing = [c for c in range(cores) if c not in part_masks]
        if missing:
            raise ValidationError(f"[cache] part_mask: no mask for cores {missing}")
        allow_overlap = False
    cache_cfg = CacheConfig(
        size=size,
        assoc=assoc,
        line_size=line_size,
        hit_latency=hit_latency,
        part_masks=part_masks,
        allow_overlap=allow_overlap,
    )

    l1 = None
    if parser.has_section("l1"):
        l1 = L1Config(
            size=_num("l1", "size", _get(parser, "l1", "size")),
            assoc=_num("l1", "assoc", _get(parser, "l1", "assoc")),
            hit_latency=_num("l1", "hit_latency", _get(parser, "l1", "hit_latency", "2")),
        )

    dram_cfg = DramConfig(
        num_banks=_num("dram", "banks", _get(parser, "dram", "banks")),
        rows_per_bank=_num("dram", "rows_per_bank", _get(parser, "dram", "rows_per_bank")),
        t_row_hit=_num("dram", "t_row_hit", _get(parser, "dram", "t_row_hit")),
        t_row_miss=_num("dram", "t_row_miss", _get(parser, "dram", "t_row_miss")),
        t_bus=_num("dram", "t_bus", _get(parser, "dram", "t_bus")),
        dm_cap=_num("dram", "dm_cap", _get(parser, "dram", "dm_cap", "30")),
        queue_capacity=_num(
            "dram", "queue_capacity", _get(parser, "dram", "queue_capacity", "64")
        ),
    )

    private: dict[int, frozenset] = {}
    if parser.has_option("banks", "private"):
        for core, text in _parse_core_tokens(
            "banks", "private", parser.get("banks", "private")
        ).items():
            banks = frozenset(_num("banks", "private", b) for b in text.split(",") if b)
            if not banks:
                raise ValidationError(f"[banks] private: core {core} lists no banks")
            private[core] = banks
    shared_raw = _get(parser, "banks", "shared")
    shared = frozenset(_num("banks", "shared", b) for b in shared_raw.split(",") if b)
    banks = BankPolicy(private=private, shared=shared)

    geom = Geometry(
        line_size=line_size,
        num_sets=cache_cfg.num_sets,
        page_size=page_size,
        num_banks=dram_cfg.num_banks,
    )

    traces: dict[int, list] = {}
    for key, value in parser.items("traces"):
        if not key.startswith("core"):
            raise ValidationError(f"[traces] keys look like core<N>, got {key!r}")
        core = _num("traces", key, key[4:])
        traces[core] = read_trace(os.path.join(base_dir, value))

    regions: dict[int, DmRegionSet] = {}
    if parser.has_section("regions"):
        if mode == "NoP":
            raise ValidationError("[regions] is not allowed in NoP mode")
        for key, value in parser.items("regions"):
            if not key.startswith("core"):
                raise ValidationError(f"[regions] keys look like core<N>, got {key!r}")
            core = _num("regions", key, key[4:])
            regions[core] = DmRegionSet.from_file(os.path.join(base_dir, value))

    return SimConfig(
        num_cores=cores,
        mode=mode,
        geom=geom,
        cache=cache_cfg,
        dram=dram_cfg,
        banks=banks,
        traces=traces,
        regions=regions,
        l1=l1,
        phys_pages=phys_pages,
        cleanup_latency=cleanup_latency,
        sample_interval=sample_interval,
        measured_core=measured_core,
        loop_corunners=loop_corunners,
        audit=audit,
    )
