"""Exception types shared by the analytic, simulation and harness layers.

Each error carries a short ``token`` that the experiment harness writes into
the ``status`` column of result tables.
"""


class AoIError(Exception):
    token = "error"


class StabilityError(AoIError, ValueError):
    """Utilization rho = lambda * E[S] is not strictly below one."""

    token = "unstable"


class AllPreemptedError(AoIError, ValueError):
    """P(S <= X) = 0: every LCFS packet is preempted before it completes."""

    token = "all_preempted"


class ConvergenceError(AoIError, RuntimeError):
    token = "no_convergence"

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NoDeliveriesError(AoIError, RuntimeError):
    """No useful (age-reducing) delivery happened in the measured window."""

    token = "no_deliveries"


class ConfigError(AoIError, ValueError):
    token = "config_error"

    def __init__(self, message, line=None, field=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field:
            loc.append(field)
        prefix = ": ".join([", ".join(loc)]) + ": " if loc else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field
