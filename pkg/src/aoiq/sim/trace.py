"""Per-slot and per-packet simulation records, with CSV export."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._pykernels import (
    EV_ARRIVAL,
    EV_FRESH,
    EV_PREEMPT,
    EV_STALE,
    EV_START,
    EV_VACATION,
    OUT_FRESH,
    OUT_IN_FLIGHT,
    OUT_PREEMPTED,
    OUT_STALE,
)

EVENT_NAMES = (
    (EV_ARRIVAL, "arrival"),
    (EV_VACATION, "vacation"),
    (EV_PREEMPT, "preempt"),
    (EV_START, "start"),
    (EV_FRESH, "deliver_fresh"),
    (EV_STALE, "deliver_stale"),
)
OUTCOME_NAMES = {
    OUT_IN_FLIGHT: "in_flight_at_end",
    OUT_FRESH: "delivered_fresh",
    OUT_STALE: "delivered_stale",
    OUT_PREEMPTED: "preempted",
}

SLOT_COLUMNS = ("slot", "age", "delivery_flag", "packet_id", "event")
PACKET_COLUMNS = ("packet_id", "generated_slot", "start_slot", "end_slot", "outcome", "arrival_slot", "service_slots")


@dataclass(eq=False)
class SimTrace:
    """Everything one run produced.

    ``ages`` has ``total_slots + 1`` entries (A(0)..A(T)).  Packet arrays are
    indexed by packet id; ``generated`` is the generation stamp Y_i used in
    the age recursion, which precedes ``arrival`` by ``generation_lag``.
    ``start``/``end`` are -1 where the event never happened.
    """

    discipline: str
    generation_lag: int
    ages: np.ndarray
    slot_packet: np.ndarray
    slot_flags: np.ndarray
    arrival: np.ndarray
    generated: np.ndarray
    service: np.ndarray
    start: np.ndarray
    end: np.ndarray
    outcome: np.ndarray

    @property
    def total_slots(self) -> int:
        return self.slot_flags.size

    @property
    def delivered(self) -> np.ndarray:
        return (self.outcome == OUT_FRESH) | (self.outcome == OUT_STALE)

    def system_time(self) -> np.ndarray:
        """Slots from arrival to the end of service, inclusive; -1 if undelivered."""
        return np.where(self.delivered, self.end - self.arrival + 1, -1)

    def events(self, t: int) -> list[str]:
        f = int(self.slot_flags[t])
        return [name for bit, name in EVENT_NAMES if f & bit]

    def outcome_name(self, i: int) -> str:
        return OUTCOME_NAMES[int(self.outcome[i])]

    def write_slot_csv(self, path):
        """Columns: slot, age, delivery_flag, packet_id, event."""
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SLOT_COLUMNS)
            for t in range(self.total_slots):
                pkt = int(self.slot_packet[t])
                w.writerow((
                    t,
                    int(self.ages[t]),
                    1 if pkt >= 0 else 0,
                    pkt if pkt >= 0 else "",
                    "+".join(self.events(t)),
                ))

    def write_packet_csv(self, path):
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(PACKET_COLUMNS)
            for i in range(self.arrival.size):
                w.writerow((
                    i,
                    int(self.generated[i]),
                    _blank(self.start[i]),
                    _blank(self.end[i]),
                    self.outcome_name(i),
                    int(self.arrival[i]),
                    int(self.service[i]),
                ))


def _blank(x):
    x = int(x)
    return "" if x < 0 else x
