import numpy as np

from parkopt.scheduler.duals import momentum_combine, theta_update


class IterationMode:
    """
    Decides the price the hubs and users are sent in a mini-slot.
    :code:`proximal` modes keep the hub deliveries near the previous
    mini-slot and step the prices on extrapolated deliveries.
    """

    name: str = None
    proximal: bool = False

    def next_theta(self, theta: float) -> float:
        return theta_update(theta)

    def combine(
        self, tau: np.ndarray, tau_prev: np.ndarray, theta: float, theta_prev: float
    ) -> np.ndarray:
        """
        Override this method to return the broadcast price from the
        current and previous fast multipliers.
        """
        raise NotImplementedError


class FastMode(IterationMode):
    """
    Extrapolates along the last step with a momentum weight that grows
    every mini-slot and restarts when the step turns back.  Hubs answer
    with proximal responses.
    """

    name = "fast"
    proximal = True

    def combine(self, tau, tau_prev, theta, theta_prev):
        return momentum_combine(tau, tau_prev, theta, theta_prev)


class PlainMode(IterationMode):
    """
    Broadcasts the current multipliers unchanged and steps them on the
    plain imbalance of exact hub responses.
    """

    name = "plain"

    def next_theta(self, theta: float) -> float:
        return theta

    def combine(self, tau, tau_prev, theta, theta_prev):
        return np.array(tau, dtype=float, copy=True)


mode_map = {FastMode.name: FastMode, PlainMode.name: PlainMode}


def create_mode(name: str) -> IterationMode:
    """
    Return mode object from mode string, i.e.,
    'fast' -> <FastMode>
    """
    try:
        return mode_map[name]()
    except KeyError:
        msg = "Unknown mode {!r}, valid modes: {}"
        raise ValueError(msg.format(name, ", ".join(mode_map)))
