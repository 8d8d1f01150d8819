"""Simulated broadcast network: status packets, ranged lossy delivery,
dead-reckoned neighbor views.

Status messages use a fixed little-endian wire layout so an external
harness could interoperate; the in-process simulator round-trips every
packet through the same codec.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .model import Phase
from .plant import EnvParams

#: Wire layout, little endian, 52 bytes total:
#:   uint32  sender_id
#:   float64 timestamp [s]
#:   float32 x, y, z            position [m]
#:   float32 vx, vy, vz         velocity [m/s]
#:   float32 tx, ty, tz         current target [m]
#:   uint8   phase (Phase enum value)
#:   int8    layer index
#:   uint8   flags (bit 0: queueing)
#:   1 pad byte
WIRE_FORMAT = "<Id3f3f3fBbBx"
WIRE_SIZE = struct.calcsize(WIRE_FORMAT)
_FLAG_QUEUEING = 0x01


@dataclass
class StatusMessage:
    sender_id: int
    timestamp: float
    pos: np.ndarray     # (3,)
    vel: np.ndarray     # (3,)
    target: np.ndarray  # (3,)
    phase: Phase = Phase.CRUISE
    layer: int = 0
    queueing: bool = False

    def encode(self) -> bytes:
        flags = _FLAG_QUEUEING if self.queueing else 0
        return struct.pack(
            WIRE_FORMAT,
            self.sender_id,
            self.timestamp,
            *(float(v) for v in self.pos),
            *(float(v) for v in self.vel),
            *(float(v) for v in self.target),
            int(self.phase),
            int(self.layer),
            flags,
        )

    @classmethod
    def decode(cls, data: bytes) -> "StatusMessage":
        vals = struct.unpack(WIRE_FORMAT, data)
        return cls(
            sender_id=vals[0],
            timestamp=vals[1],
            pos=np.array(vals[2:5], dtype=float),
            vel=np.array(vals[5:8], dtype=float),
            target=np.array(vals[8:11], dtype=float),
            phase=Phase(vals[11]),
            layer=int(vals[12]),
            queueing=bool(vals[13] & _FLAG_QUEUEING),
        )


@dataclass
class NeighborView:
    """Latest decoded status of a neighbor plus dead-reckoning fields.

    `extrapolated_pos` is pos + vel * age; this view is the only neighbor
    information the decision layer may read.
    """

    sender_id: int
    timestamp: float
    pos: np.ndarray
    vel: np.ndarray
    target: np.ndarray
    phase: Phase
    layer: int
    queueing: bool
    extrapolated_pos: np.ndarray
    age: float


class NeighborArrays(NamedTuple):
    """Struct-of-arrays form of a list of NeighborView, positions already
    extrapolated; what the pairwise kernels consume."""

    ids: np.ndarray     # (M,) int
    pos: np.ndarray     # (M, 3) extrapolated
    vel: np.ndarray     # (M, 3)
    target: np.ndarray  # (M, 3)
    age: np.ndarray     # (M,)


_EMPTY = NeighborArrays(
    ids=np.zeros(0, dtype=int),
    pos=np.zeros((0, 3)),
    vel=np.zeros((0, 3)),
    target=np.zeros((0, 3)),
    age=np.zeros(0),
)


def as_neighbor_arrays(neighbors) -> NeighborArrays:
    """Accept a NeighborArrays or a sequence of NeighborView."""
    if isinstance(neighbors, NeighborArrays):
        return neighbors
    views: Sequence[NeighborView] = list(neighbors)
    if not views:
        return _EMPTY
    return NeighborArrays(
        ids=np.array([v.sender_id for v in views], dtype=int),
        pos=np.array([v.extrapolated_pos for v in views], dtype=float),
        vel=np.array([v.vel for v in views], dtype=float),
        target=np.array([v.target for v in views], dtype=float),
        age=np.array([v.age for v in views], dtype=float),
    )


def view_from_message(msg: StatusMessage, now: float) -> NeighborView:
    age = max(0.0, now - msg.timestamp)
    return NeighborView(
        sender_id=msg.sender_id,
        timestamp=msg.timestamp,
        pos=msg.pos,
        vel=msg.vel,
        target=msg.target,
        phase=msg.phase,
        layer=msg.layer,
        queueing=msg.queueing,
        extrapolated_pos=msg.pos + msg.vel * age,
        age=age,
    )


def neighbor_snapshot(inbox: dict[int, StatusMessage], now: float,
                      stale_timeout: float) -> list[NeighborView]:
    """Dead-reckoned views of every sender heard recently enough.

    `inbox` maps sender id to the latest message received from it; senders
    whose message is older than stale_timeout are dropped.
    """
    views = []
    for sender in sorted(inbox):
        msg = inbox[sender]
        age = now - msg.timestamp
        if age > stale_timeout:
            continue
        views.append(view_from_message(msg, now))
    return views


def in_range_pairs(positions: np.ndarray, comm_range: float,
                   pairs: tuple[np.ndarray, np.ndarray] | None = None):
    """Ordered (receiver, sender) pairs within reception range, in
    lexicographic order, with squared distances.

    `pairs` optionally restricts the search to candidate pairs from a
    spatial index; the output (and hence any randomness drawn per pair
    afterwards) is identical to the all-pairs path whenever the candidates
    cover every in-range pair.
    """
    n = positions.shape[0]
    range_sq = comm_range * comm_range
    if pairs is None:
        if n < 2:
            z = np.zeros(0, dtype=np.int64)
            return z, z, np.zeros(0)
        diff = positions[:, None, :] - positions[None, :, :]
        dist_sq = np.einsum("ijk,ijk->ij", diff, diff)
        in_range = dist_sq <= range_sq
        np.fill_diagonal(in_range, False)
        rcv, snd = np.nonzero(in_range)
        return rcv, snd, dist_sq[rcv, snd]
    rcv, snd = pairs
    diff = positions[rcv] - positions[snd]
    dist_sq = np.einsum("ij,ij->i", diff, diff)
    keep = (dist_sq <= range_sq) & (rcv != snd)
    rcv, snd, dist_sq = rcv[keep], snd[keep], dist_sq[keep]
    order = np.lexsort((snd, rcv))
    return rcv[order], snd[order], dist_sq[order]


def delivery_mask(positions: np.ndarray, env: EnvParams,
                  rng: np.random.Generator,
                  pairs: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """(N, N) boolean: entry [i, j] true when receiver i hears sender j in
    this broadcast round.

    Delivery is independent per ordered pair: within comm_range a packet is
    lost with probability packet_loss_base, beyond it reception is zero.
    Loss draws are consumed in (receiver, sender) lexicographic order over
    the in-range pairs only.
    """
    n = positions.shape[0]
    out = np.zeros((n, n), dtype=bool)
    rcv, snd, _ = in_range_pairs(positions, env.comm_range, pairs)
    if rcv.size == 0:
        return out
    if env.packet_loss_base > 0.0:
        u = rng.random(rcv.size)
        ok = u >= env.packet_loss_base
        rcv, snd = rcv[ok], snd[ok]
    out[rcv, snd] = True
    return out


def broadcast_tick(states: Sequence[StatusMessage], positions: np.ndarray,
                   env: EnvParams, rng: np.random.Generator) -> list[dict[int, StatusMessage]]:
    """One broadcast round: everybody transmits, delivery is ranged and
    lossy, packets round-trip through the wire codec.

    `positions` are ground-truth positions (radio propagation), `states`
    the messages as composed by each sender. Returns one inbox-update dict
    per receiver.
    """
    n = len(states)
    decoded = [StatusMessage.decode(msg.encode()) for msg in states]
    mask = delivery_mask(positions, env, rng)
    inboxes: list[dict[int, StatusMessage]] = [dict() for _ in range(n)]
    for i in range(n):
        for j in np.nonzero(mask[i])[0]:
            inboxes[i][int(j)] = decoded[j]
    return inboxes
