from .base import (
    MAX_AGGREGATED_CCS,
    AllocationRecord,
    EventSink,
    Grant,
    RunContext,
    Scheduler,
    SchedulerKind,
)
from .jus import JointUserScheduler, jus_schedule
from .qscs import Admission, QscsScheduler, qscs_admit, qscs_reoptimize
from .separated import (
    SeparatedBurstLevelScheduler,
    SeparatedRandomUserScheduler,
    percc_fifo_schedule,
    sbls_dispatch,
    srus_assign_user,
)


def make_scheduler(kind: SchedulerKind | str, ctx: RunContext, rng) -> Scheduler:
    kind = SchedulerKind.parse(kind) if isinstance(kind, str) else kind
    if kind is SchedulerKind.JUS:
        return JointUserScheduler(ctx, rng)
    if kind is SchedulerKind.SRUS:
        return SeparatedRandomUserScheduler(ctx, rng)
    if kind is SchedulerKind.SBLS_CD:
        return SeparatedBurstLevelScheduler(ctx, rng, "CD")
    if kind is SchedulerKind.SBLS_LL:
        return SeparatedBurstLevelScheduler(ctx, rng, "LL")
    return QscsScheduler(ctx, rng)


__all__ = [
    "MAX_AGGREGATED_CCS",
    "Admission",
    "AllocationRecord",
    "EventSink",
    "Grant",
    "JointUserScheduler",
    "QscsScheduler",
    "RunContext",
    "Scheduler",
    "SchedulerKind",
    "SeparatedBurstLevelScheduler",
    "SeparatedRandomUserScheduler",
    "jus_schedule",
    "make_scheduler",
    "percc_fifo_schedule",
    "qscs_admit",
    "qscs_reoptimize",
    "sbls_dispatch",
    "srus_assign_user",
]
