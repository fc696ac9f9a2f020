"""Stock-agent monitor over the market simulation.

Strictly read-only: the emitted trees contain outputs plus two plain
selections (history window, agent switch), so no response can reach the
agents' trading state. Money figures are integer cents; machine-readable
values ride in metadata so tests need not scrape labels.
"""

from __future__ import annotations

import itertools

from ..acts import ActKind, Alternative, InteractionAct, IslGroup, UpstreamResponse
from ..sim.market import Market
from .base import Service, ServiceUpdate

ACTIVITY_WINDOW_S = 3600

# half-open sim-time windows, newest edge at "now"
HISTORY_WINDOWS = {
    "day": 86_400,
    "week": 7 * 86_400,
    "month": 30 * 86_400,
    "complete": None,
}


class UnknownResponse(Exception):
    pass


def format_cents(cents: int) -> str:
    sign = "-" if cents < 0 else ""
    return f"{sign}{abs(cents) // 100}.{abs(cents) % 100:02d}"


class BrokerService(Service):
    name = "broker"

    def __init__(self, market: Market | None = None, detail: str = "full",
                 history: str = "day", agent: int = 0):
        if detail not in ("full", "compact"):
            raise ValueError("detail must be full or compact")
        if history not in HISTORY_WINDOWS:
            raise ValueError(f"history must be one of {sorted(HISTORY_WINDOWS)}")
        self.market = market if market is not None else Market()
        self.detail = detail
        self.history = history
        self.agent = agent
        self._seq = itertools.count(1)
        self._routes: dict[str, str] = {}
        self._roots: tuple[str, ...] = ()
        self._last_value: dict[int, int] = {}

    # -- service interface ---------------------------------------------------

    def configure(self, descriptor: dict[str, str]) -> None:
        detail = descriptor.get("detail")
        if detail in ("full", "compact"):
            self.detail = detail

    def attach(self) -> ServiceUpdate:
        return self._refresh()

    def handle(self, response: UpstreamResponse) -> ServiceUpdate:
        role = self._routes.get(response.act_id)
        if role is None:
            raise UnknownResponse(f"{response.act_id!r} is not a live component")
        if role == "history":
            if response.payload not in HISTORY_WINDOWS:
                raise UnknownResponse(f"no history window {response.payload!r}")
            self.history = response.payload
        else:
            try:
                chosen = int(response.payload)
            except (TypeError, ValueError):
                raise UnknownResponse(
                    f"bad agent choice {response.payload!r}") from None
            if not 0 <= chosen < self.market.n_agents:
                raise UnknownResponse(f"no agent {chosen}")
            self.agent = chosen
        return self._refresh()

    def advance(self, sim_seconds: int) -> ServiceUpdate:
        ticks = sim_seconds // self.market.config.tick_seconds
        if ticks <= 0:
            return ServiceUpdate()
        self.market.run(ticks)
        return self._refresh()

    # -- derived figures -----------------------------------------------------

    def activity(self, agent: int | None = None) -> int:
        """Fills younger than one sim-hour."""
        return len(self._window_fills(ACTIVITY_WINDOW_S, agent))

    def _window_fills(self, window_s: int | None, agent: int | None = None):
        who = self.agent if agent is None else agent
        tick_s = self.market.config.tick_seconds
        now_s = self.market.sim_time
        return [e for e in self.market.events
                if e.agent == who and e.kind == "filled"
                and (window_s is None or now_s - e.tick * tick_s < window_s)]

    def _window_orders(self, window_s: int | None):
        tick_s = self.market.config.tick_seconds
        now_s = self.market.sim_time
        return [e for e in self.market.events
                if e.agent == self.agent and e.kind != "filled"
                and (window_s is None or now_s - e.tick * tick_s < window_s)]

    def _trend(self, agent: int, value: int) -> str:
        previous = self._last_value.get(agent, value)
        self._last_value[agent] = value
        return "down" if value < previous else "up"

    # -- UI ----------------------------------------------------------------

    def ui(self) -> IslGroup:
        self._routes.clear()
        m, a = self.market, self.agent
        value = m.portfolio_value(a)
        trend = self._trend(a, value)
        status = "paused" if m.is_paused(a) else "running"
        busy = self.activity()

        rows: list = [
            InteractionAct(
                self._mint(), ActKind.OUTPUT,
                default_info=f"Portfolio value: {format_cents(value)}",
                metadata=(("value", str(value)), ("trend", trend))),
            InteractionAct(
                self._mint(), ActKind.OUTPUT, default_info=f"Status: {status}",
                metadata=(("status", status),)),
            InteractionAct(
                self._mint(), ActKind.OUTPUT,
                default_info=f"Activity: {busy} transactions in the last hour",
                metadata=(("activity", str(busy)),)),
        ]
        if self.detail == "compact":
            return IslGroup(self._mint(), default_info=f"Agent {a}",
                            children=tuple(rows))

        rows.insert(0, InteractionAct(
            self._mint(), ActKind.OUTPUT,
            default_info=f"Agent {a} ({m.agent_state(a).strategy})"))
        rows.append(InteractionAct(
            self._mint(), ActKind.OUTPUT,
            default_info=f"Cash: {format_cents(m.cash(a))}",
            metadata=(("cash", str(m.cash(a))),)))
        rows.append(self._holdings_group())
        rows.append(self._orders_group())
        rows.append(self._transactions_group())

        alts = tuple(
            Alternative(self._mint(), label.capitalize(), label)
            for label in HISTORY_WINDOWS)
        history = InteractionAct(
            self._mint(), ActKind.SELECTION, name="historySelect",
            group="broker", default_info="History", response_number=1,
            alternatives=alts)
        self._routes[history.id] = "history"
        rows.append(history)

        if m.n_agents > 1:
            switch = InteractionAct(
                self._mint(), ActKind.SELECTION, name="agentSelect",
                group="broker", default_info="Agents", response_number=1,
                alternatives=tuple(
                    Alternative(self._mint(), f"Agent {i}", str(i))
                    for i in range(m.n_agents)))
            self._routes[switch.id] = "agent"
            rows.append(switch)

        return IslGroup(self._mint(), default_info=f"Agent {a}",
                        children=tuple(rows))

    def _holdings_group(self) -> IslGroup:
        m, a = self.market, self.agent
        rows = [
            InteractionAct(
                self._mint(), ActKind.OUTPUT,
                default_info=(f"stock{s}: {shares} shares @ "
                              f"{format_cents(m.price(s))}"),
                metadata=(("stock", str(s)), ("shares", str(shares))))
            for s, shares in enumerate(m.holdings(a)) if shares
        ]
        if not rows:
            rows = [InteractionAct(self._mint(), ActKind.OUTPUT,
                                   default_info="no holdings")]
        return IslGroup(self._mint(), default_info="Holdings",
                        children=tuple(rows))

    def _orders_group(self) -> IslGroup:
        tick_s = self.market.config.tick_seconds
        rows: list = []
        open_order = self.market.open_order(self.agent)
        if open_order is not None:
            side, stock, qty, limit = open_order
            rows.append(InteractionAct(
                self._mint(), ActKind.OUTPUT,
                default_info=(f"open: {side} {qty} stock{stock} "
                              f"limit {format_cents(limit)}")))
        for e in self._window_orders(HISTORY_WINDOWS[self.history]):
            rows.append(InteractionAct(
                self._mint(), ActKind.OUTPUT,
                default_info=(f"t+{e.tick * tick_s}s {e.kind} {e.side} "
                              f"{e.qty} stock{e.stock} @ "
                              f"{format_cents(e.price)}"),
                metadata=(("tick", str(e.tick)), ("order", e.kind))))
        if not rows:
            rows.append(InteractionAct(self._mint(), ActKind.OUTPUT,
                                       default_info="no orders"))
        return IslGroup(self._mint(), default_info="Orders",
                        children=tuple(rows))

    def _transactions_group(self) -> IslGroup:
        tick_s = self.market.config.tick_seconds
        rows = [
            InteractionAct(
                self._mint(), ActKind.OUTPUT,
                default_info=(f"t+{e.tick * tick_s}s {e.side} {e.qty} "
                              f"stock{e.stock} @ {format_cents(e.price)}"),
                metadata=(("tick", str(e.tick)),))
            for e in self._window_fills(HISTORY_WINDOWS[self.history])
        ]
        if not rows:
            rows = [InteractionAct(self._mint(), ActKind.OUTPUT,
                                   default_info="no transactions")]
        return IslGroup(self._mint(),
                        default_info=f"Transactions ({self.history})",
                        children=tuple(rows))

    def _refresh(self) -> ServiceUpdate:
        old = self._roots
        tree = self.ui()
        self._roots = (tree.id,)
        return ServiceUpdate(remove=old, present=(tree,))

    def _mint(self) -> str:
        return f"b{next(self._seq)}"
