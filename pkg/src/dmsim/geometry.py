"""Physical address geometry shared by the cache and DRAM models.

Every structural parameter (line size, set count, page size, bank count) is
a power of two, so address decomposition is pure bit slicing.  The bank of a
physical address defaults to ``page_number % num_banks`` (page interleaving)
and can be overridden with an explicit page-to-bank map.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class GeometryError(ValueError):
    """Raised for inconsistent or non-power-of-two geometry parameters."""


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _log2(n: int) -> int:
    return n.bit_length() - 1


@dataclass(frozen=True)
class MemoryRequest:
    """One memory access flowing through the hierarchy.

    ``dm`` marks the request as deterministic-memory class; it is derived
    from the page table (or forced by the simulation mode) and never guessed
    downstream.  ``write`` covers both demand stores and write-backs.
    """

    core: int
    write: bool
    paddr: int
    dm: bool
    issue_time: int = 0


@dataclass(frozen=True)
class AddressParts:
    tag: int
    set_index: int
    line_offset: int
    page_number: int
    bank_index: int


@dataclass(frozen=True)
class Geometry:
    line_size: int
    num_sets: int
    page_size: int
    num_banks: int
    bank_map: dict[int, int] | None = None
    line_bits: int = field(init=False)
    set_bits: int = field(init=False)
    page_bits: int = field(init=False)

    def __post_init__(self) -> None:
        for name in ("line_size", "num_sets", "page_size", "num_banks"):
            value = getattr(self, name)
            if not _is_pow2(value):
                raise GeometryError(f"{name} must be a power of two, got {value}")
        if self.page_size < self.line_size:
            raise GeometryError(
                f"page_size {self.page_size} smaller than line_size {self.line_size}"
            )
        object.__setattr__(self, "line_bits", _log2(self.line_size))
        object.__setattr__(self, "set_bits", _log2(self.num_sets))
        object.__setattr__(self, "page_bits", _log2(self.page_size))
        if self.bank_map is not None:
            for page, bank in self.bank_map.items():
                if not 0 <= bank < self.num_banks:
                    raise GeometryError(
                        f"bank_map sends page {page} to nonexistent bank {bank}"
                    )

    def bank_of_page(self, page_number: int) -> int:
        if self.bank_map is not None and page_number in self.bank_map:
            return self.bank_map[page_number]
        return page_number % self.num_banks

    def decompose(self, paddr: int) -> AddressParts:
        """Slice a physical address into cache and DRAM coordinates."""
        if paddr < 0:
            raise GeometryError(f"negative address {paddr:#x}")
        line = paddr >> self.line_bits
        page = paddr >> self.page_bits
        return AddressParts(
            tag=line >> self.set_bits,
            set_index=line & (self.num_sets - 1),
            line_offset=paddr & (self.line_size - 1),
            page_number=page,
            bank_index=self.bank_of_page(page),
        )

    def recompose(self, tag: int, set_index: int, line_offset: int = 0) -> int:
        """Inverse of :meth:`decompose` for the cache coordinates."""
        if not 0 <= set_index < self.num_sets:
            raise GeometryError(f"set_index {set_index} out of range")
        if not 0 <= line_offset < self.line_size:
            raise GeometryError(f"line_offset {line_offset} out of range")
        return ((tag << self.set_bits) | set_index) << self.line_bits | line_offset
