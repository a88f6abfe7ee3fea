from parkopt.log import logger


class SchedulerListener:
    """
    Listener class used to monitor a scheduler.  Override the hooks you
    need; every hook receives the scheduler first.
    """

    def slot_started(self, scheduler, slot) -> None:
        pass

    def mini_slot(self, scheduler, n: int, tau, gradient) -> None:
        pass

    def slot_closed(self, scheduler, result) -> None:
        pass

    def bound_violation(self, scheduler, description: str) -> None:
        pass


class LoggingListener(SchedulerListener):
    """
    Logs one line per closed slot and every bound violation.
    """

    def slot_closed(self, scheduler, result) -> None:
        logger.info(
            f"[PARKOPT] slot {result.t}: cost {result.cost:.2f} after "
            f"{result.iterations} mini-slots"
            + ("" if result.converged else " (not converged)")
        )

    def bound_violation(self, scheduler, description: str) -> None:
        logger.warning(f"[PARKOPT] {description}")
