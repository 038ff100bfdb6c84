"""
Window controllers.

Each controller is a small state machine that turns transport events
(acknowledged packets, timeouts, choke packets) into changes of a real-valued
window.  The sender only ever uses ``floor(window)``.

Schemes:

``none``
    No window at all (open-loop or purely rate-limited sources).
``static``
    Fixed window; ignores every signal.
``cute``
    Window drops to one on a timeout and grows by one after a full window of
    acknowledgments, giving a parabolic window-versus-acks curve.
``linear``
    Grows by one every ``every`` acknowledged packets; same timeout rule as
    ``cute``.
``slow-start``
    Remembers half the window at a timeout as a threshold, grows by one per
    ack below it and by one per window of acks above it.
``binary-feedback``
    Counts the echoed congestion bits over a window's worth of acks and either
    shrinks multiplicatively or grows additively.
``delay-based``
    Same shape as ``binary-feedback`` but driven by the ratio of smoothed RTT
    to minimum RTT (experimental).

All scheme parameters are counts or ratios; none carries a time unit.
"""

import math

SCHEMES = ("none", "static", "cute", "linear", "slow-start", "binary-feedback", "delay-based")


class Controller:
    """Shared bookkeeping; subclasses override :meth:`_acked` and :meth:`_timeout`."""

    scheme = "static"
    # parameter name -> unit; every unit must be dimensionless
    PARAMS = {"window": "packets", "max_window": "packets", "choke_factor": "ratio"}

    def __init__(self, window=1.0, max_window=64.0, choke_factor=0.5):
        if window < 1:
            raise ValueError("initial window must be >= 1")
        if max_window < window:
            raise ValueError("max_window must be >= initial window")
        self.window = float(window)
        self.max_window = float(max_window)
        self.choke_factor = choke_factor
        self.ack_counter = 0
        self.adjustments = 0
        self.timeouts = 0
        self.chokes_applied = 0
        self.chokes_ignored = 0
        self.acked_total = 0
        self.min_window = self.window
        self._acks_since_choke = None
        self._choke_span = 0

    @property
    def limit(self):
        """Maximum number of packets the sender may have outstanding."""
        return math.floor(self.window)

    def _set(self, w):
        w = min(self.max_window, max(1.0, w))
        if w != self.window:
            self.adjustments += 1
            self.window = w
            if w < self.min_window:
                self.min_window = w

    def on_ack(self, acked, echoed_bit=False, srtt=None, rtt_min=None):
        """``acked`` packets were newly acknowledged by one cumulative ack."""
        if acked <= 0:
            return
        self.acked_total += acked
        if self._acks_since_choke is not None:
            self._acks_since_choke += acked
        self._acked(acked, echoed_bit, srtt, rtt_min)

    def on_timeout(self):
        self.timeouts += 1
        self._timeout()

    def on_choke(self):
        """Halve the window, at most once per window of acks."""
        if self._acks_since_choke is not None and self._acks_since_choke < self._choke_span:
            self.chokes_ignored += 1
            return False
        self.chokes_applied += 1
        self._acks_since_choke = 0
        self._set(self.window * self.choke_factor)
        # the next choke counts only after a window's worth of acks at the reduced size
        self._choke_span = self.limit
        return True

    def _acked(self, acked, echoed_bit, srtt, rtt_min):
        pass

    def _timeout(self):
        pass

    def _parabolic(self, acked):
        # +1 per floor(window) acks, excess acks carried into the next cycle
        self.ack_counter += acked
        while self.ack_counter >= self.limit and self.window < self.max_window:
            self.ack_counter -= self.limit
            self._set(self.window + 1)
        if self.window >= self.max_window:
            self.ack_counter = 0

    def __repr__(self):
        return f"{type(self).__name__}(window={self.window:g})"


class NoWindow(Controller):
    scheme = "none"

    def __init__(self, window=1.0, max_window=64.0, choke_factor=0.5):
        super().__init__(1.0, max(max_window, 1.0), choke_factor)

    @property
    def limit(self):
        return math.inf

    def on_choke(self):
        self.chokes_ignored += 1
        return False


class StaticWindow(Controller):
    scheme = "static"

    def __init__(self, window=8.0, max_window=None, choke_factor=0.5):
        super().__init__(window, window if max_window is None else max(max_window, window), choke_factor)


class Cute(Controller):
    scheme = "cute"

    def _acked(self, acked, echoed_bit, srtt, rtt_min):
        self._parabolic(acked)

    def _timeout(self):
        self.ack_counter = 0
        self._set(1.0)


class LinearIncrease(Cute):
    scheme = "linear"
    PARAMS = dict(Controller.PARAMS, every="packets")

    def __init__(self, window=1.0, max_window=64.0, choke_factor=0.5, every=8):
        super().__init__(window, max_window, choke_factor)
        if every < 1:
            raise ValueError("every must be >= 1")
        self.every = int(every)

    def _acked(self, acked, echoed_bit, srtt, rtt_min):
        self.ack_counter += acked
        while self.ack_counter >= self.every and self.window < self.max_window:
            self.ack_counter -= self.every
            self._set(self.window + 1)


class SlowStart(Controller):
    scheme = "slow-start"
    PARAMS = dict(Controller.PARAMS, ssthresh="packets")

    def __init__(self, window=1.0, max_window=64.0, choke_factor=0.5, ssthresh=None):
        super().__init__(window, max_window, choke_factor)
        self.ssthresh = float(max_window if ssthresh is None else ssthresh)

    def _acked(self, acked, echoed_bit, srtt, rtt_min):
        while acked and self.window < self.ssthresh and self.window < self.max_window:
            self._set(min(self.window + 1, self.ssthresh))
            acked -= 1
        if acked:
            self._parabolic(acked)

    def _timeout(self):
        self.ssthresh = max(2.0, self.window / 2)
        self.ack_counter = 0
        self._set(1.0)


class BinaryFeedback(Controller):
    scheme = "binary-feedback"
    PARAMS = dict(Controller.PARAMS, threshold="ratio", decrease="ratio", increase="packets")

    def __init__(self, window=1.0, max_window=64.0, choke_factor=0.5,
                 threshold=0.5, decrease=0.875, increase=1.0):
        super().__init__(window, max_window, choke_factor)
        self.threshold = threshold
        self.decrease = decrease
        self.increase = increase
        self.bits_seen = 0
        self.bits_set = 0

    def feedback(self, acked, echoed_bit):
        """Account ``acked`` echoed bits; decide once a window's worth is in."""
        self.bits_seen += acked
        if echoed_bit:
            self.bits_set += acked
        if self.bits_seen >= self.limit:
            if self.bits_set / self.bits_seen >= self.threshold:
                self._set(self.window * self.decrease)
            else:
                self._set(self.window + self.increase)
            self.bits_seen = 0
            self.bits_set = 0

    def _acked(self, acked, echoed_bit, srtt, rtt_min):
        self.feedback(acked, echoed_bit)

    def _timeout(self):
        self.bits_seen = self.bits_set = 0
        self._set(1.0)


class DelayBased(Controller):
    """Experimental: reacts to queueing delay inferred from RTT samples."""

    scheme = "delay-based"
    PARAMS = dict(Controller.PARAMS, gamma="ratio", decrease="ratio", increase="packets")

    def __init__(self, window=1.0, max_window=64.0, choke_factor=0.5,
                 gamma=1.5, decrease=0.875, increase=1.0):
        super().__init__(window, max_window, choke_factor)
        self.gamma = gamma
        self.decrease = decrease
        self.increase = increase

    def update(self, srtt, rtt_min):
        if rtt_min is None or srtt is None or rtt_min <= 0:
            return
        if srtt / rtt_min > self.gamma:
            self._set(self.window * self.decrease)
        else:
            self._set(self.window + self.increase)

    def _acked(self, acked, echoed_bit, srtt, rtt_min):
        self.ack_counter += acked
        if self.ack_counter >= self.limit:
            self.ack_counter = 0
            self.update(srtt, rtt_min)

    def _timeout(self):
        self.ack_counter = 0
        self._set(1.0)


_REGISTRY = {
    "none": NoWindow,
    "static": StaticWindow,
    "cute": Cute,
    "linear": LinearIncrease,
    "slow-start": SlowStart,
    "binary-feedback": BinaryFeedback,
    "delay-based": DelayBased,
}


def controller_class(scheme):
    try:
        return _REGISTRY[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {', '.join(SCHEMES)}") from None


def make_controller(scheme, **params):
    """Build a controller, passing only the parameters its scheme declares."""
    cls = controller_class(scheme)
    unknown = set(params) - set(cls.PARAMS)
    if unknown:
        raise ValueError(f"scheme {scheme!r} takes no parameter(s) {', '.join(sorted(unknown))}")
    return cls(**params)
