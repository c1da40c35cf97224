"""Exception hierarchy shared by every pipeline stage.

The CLI maps these onto exit codes: input errors to 2, degenerate workloads
to 3 and platform alignment failures to 4.
"""


class BarrierPointError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 2


class InputError(BarrierPointError):
    """Malformed or inconsistent input data."""


class TraceSyntaxError(InputError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class ThreadIdOutOfRange(InputError):
    def __init__(self, thread_id: int, thread_count: int, line_no: int | None = None):
        self.thread_id = thread_id
        self.thread_count = thread_count
        where = f"line {line_no}: " if line_no is not None else ""
        super().__init__(f"{where}thread id {thread_id} >= thread count {thread_count}")


class MissingRoiEnd(InputError):
    pass


class EmptyTrace(BarrierPointError):
    exit_code = 3


class DimensionMismatch(BarrierPointError, ValueError):
    pass


class KTooLarge(BarrierPointError, ValueError):
    def __init__(self, k: int, distinct: int):
        self.k = k
        self.distinct = distinct
        super().__init__(f"k={k} exceeds the number of distinct points ({distinct})")


class AllFiltered(BarrierPointError):
    pass


class CounterSyntaxError(InputError):
    pass


class InconsistentRunCount(InputError):
    pass


class NegativeValue(InputError):
    pass


class MissingRoi(InputError):
    pass


class MissingRegionMeasurement(InputError):
    def __init__(self, region_index: int, n_regions: int):
        self.region_index = region_index
        self.n_regions = n_regions
        super().__init__(
            f"region {region_index} has no measurement (table covers {n_regions} regions)"
        )


class RegionCountMismatch(BarrierPointError):
    exit_code = 4

    def __init__(self, expected: int, found: int):
        self.expected = expected
        self.found = found
        super().__init__(
            f"region count mismatch: barrier point set derived from {expected} regions, "
            f"target measurements have {found}"
        )


class EmptySelection(BarrierPointError):
    pass


class SpecError(InputError):
    pass
