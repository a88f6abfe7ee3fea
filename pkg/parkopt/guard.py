import threading
from typing import List

import wrapt

from parkopt.conf import settings
from parkopt.errors import InvariantBroken
from parkopt.log import error_logger
from parkopt.scheduler.duals import multiplier_interval
from parkopt.scheduler.subproblems import StorageCaps


def patch() -> None:
    """
    This patches :code:`DualScheduler.close_slot` and
    :code:`HubAgent.respond`.

    After every closed slot the storage multipliers are checked against
    the intervals they are guaranteed to stay in, and every hub
    response is checked for running its storage at the caps of the slot
    past the multiplier thresholds.
    """
    from parkopt.scheduler import DualScheduler
    from parkopt.scheduler.subproblems import HubAgent

    if not hasattr(DualScheduler.close_slot, "__wrapped__"):
        wrapt.wrap_function_wrapper(
            "parkopt.scheduler", "DualScheduler.close_slot", bound_guard.checked_close
        )

    if not hasattr(HubAgent.respond, "__wrapped__"):
        wrapt.wrap_function_wrapper(
            "parkopt.scheduler.subproblems",
            "HubAgent.respond",
            bound_guard.checked_response,
        )


class BoundGuard:
    def __init__(self):
        self._lock = threading.Lock()
        self.reset()

    def reset(self):
        """
        Forgets all recorded violations.
        """
        with self._lock:
            self.violations: List[str] = []

    def _report(self, description: str, scheduler=None) -> None:
        error_logger.critical(description)
        with self._lock:
            self.violations.append(description)
        if scheduler is not None:
            for listener in scheduler.listeners:
                listener.bound_violation(scheduler, description)
        if settings.PARKOPT_GUARD_STRICT:
            raise InvariantBroken(description)

    def checked_close(self, wrapped, instance, args, kwargs):
        """
        The wrapper method for :code:`DualScheduler.close_slot`.

        :param wrapped: The wrapped function which in turns needs to be called by your wrapper function.
        :param instance:  The object to which the wrapped function was bound when it was called.
        :param args: The list of positional arguments supplied when the decorated function was called.
        :param kwargs:  The dictionary of keyword arguments supplied when the decorated function was called.
        """
        state = wrapped(*args, **kwargs)
        tolerance = settings.PARKOPT_BOUND_TOLERANCE

        for k, params in enumerate(instance.cfg.hubs):
            battery, tank = multiplier_interval(state.rho, params, state.p_e_max)
            for name, value, (low, high) in (
                ("lambda_e", state.lambda_e[k], battery),
                ("lambda_h", state.lambda_h[k], tank),
            ):
                if value < low - tolerance or value > high + tolerance:
                    self._report(
                        f"[PARKOPT] [hub {k}] {name}={value:.6g} left "
                        f"[{low:.6g}, {high:.6g}] after slot {state.t - 1}",
                        scheduler=instance,
                    )
        return state

    def checked_response(self, wrapped, instance, args, kwargs):
        """
        The wrapper method for :code:`HubAgent.respond`.
        """
        response = wrapped(*args, **kwargs)
        caps = response.caps or StorageCaps.of(instance.params)

        tau, lambda_e, lambda_h, slot = args[:4]
        g_load = args[5] if len(args) > 5 else kwargs.get("g_load", 0.0)
        params, shares = instance.params, instance.shares
        tolerance = settings.PARKOPT_BOUND_TOLERANCE
        tau_h = float(tau[1])

        export_free = response.e_o < shares.e_o_max - tolerance
        import_free = response.e < shares.e_max - tolerance
        boiler_free = (
            params.eta_bg * response.g_b < params.h_b_max - tolerance
            and response.g_chp + response.g_b + g_load < shares.g_max - tolerance
        )
        checks = (
            (lambda_e > -slot.p_o and export_free, "D_e", response.d_e, caps.d_e),
            (lambda_e < -slot.p_e and import_free, "C_e", response.c_e, caps.c_e),
            (lambda_h > 0, "D_h", response.d_h, caps.d_h),
            (
                lambda_h < -max(slot.p_g / params.eta_bg, tau_h) and boiler_free,
                "C_h",
                response.c_h,
                caps.c_h,
            ),
        )
        for applies, name, value, cap in checks:
            if applies and abs(value - cap) > tolerance:
                self._report(
                    f"[PARKOPT] [hub {instance.index}] {name}={value:.6g} "
                    f"should be at its cap {cap:.6g} in slot {slot.t}"
                )
        return response


bound_guard = BoundGuard()
