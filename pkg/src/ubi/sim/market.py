"""Market state, configuration, and the event log around the tick kernel.

Prices and cash are integer cents end to end; sim time is tick-based and
mapped to seconds via ``tick_seconds``, never to the wall clock.
"""

from __future__ import annotations

import pathlib
from array import array
from dataclasses import dataclass, field, fields

from . import _kernel_py

STRATEGY_IDS = {
    "buy-and-hold": _kernel_py.BUY_AND_HOLD,
    "buy-low-sell-high": _kernel_py.BUY_LOW_SELL_HIGH,
}
STRATEGY_NAMES = {v: k for k, v in STRATEGY_IDS.items()}

_CHUNK = 2048


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MarketConfig:
    """Tunable constants; defaults keep prices well inside 64-bit cents."""

    seed: int = 2003
    strategy: tuple[str, ...] = ("buy-and-hold", "buy-low-sell-high")
    initial_cash: int = 1_000_000
    stocks: int = 3
    start_price: int = 10_000
    drift_bp: int = 1
    vol_bp: int = 80
    window: int = 32
    delta: int = 150
    order_size: int = 10
    rest_offset: int = 3
    tick_seconds: int = 60

    def __post_init__(self) -> None:
        for name in self.strategy:
            if name not in STRATEGY_IDS:
                raise ConfigError(f"unknown strategy {name!r}")
        if not self.strategy:
            raise ConfigError("at least one agent strategy is required")
        for name in ("initial_cash", "stocks", "start_price", "vol_bp",
                     "window", "order_size", "tick_seconds"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("delta", "rest_offset"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must not be negative")


_INT_KEYS = {f.name for f in fields(MarketConfig)} - {"strategy"}


def parse_config(text: str) -> MarketConfig:
    """Parse key=value lines (# comments); strategy is a comma list."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        if key == "strategy":
            values[key] = tuple(s.strip() for s in value.split(",") if s.strip())
        elif key in _INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ConfigError(
                    f"line {lineno}: {key} needs an integer, got {value!r}"
                ) from None
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    return MarketConfig(**values)


def load_config(path: str | pathlib.Path) -> MarketConfig:
    return parse_config(pathlib.Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class Event:
    """One kernel event, decoded."""

    kind: str
    tick: int
    agent: int
    stock: int
    side: str
    qty: int
    price: int


_EVENT_KINDS = {0: "placed", 1: "filled", 2: "cancelled"}
_SIDES = {1: "buy", -1: "sell"}


@dataclass
class AgentState:
    """Python-side view of one agent, refreshed from the kernel arrays."""

    agent_id: int
    strategy: str
    cash: int
    holdings: tuple[int, ...]
    paused: bool
    open_order: tuple | None
    transactions: list = field(default_factory=list)
    orders: list = field(default_factory=list)


class Market:
    """Owns the kernel arrays and the decoded event history."""

    def __init__(self, config: MarketConfig = MarketConfig(), kernel=None):
        if kernel is None:
            from . import kernel as selected
            kernel = selected
        self.kernel = kernel
        self.config = config
        n_agents = len(config.strategy)
        n_stocks = config.stocks
        self._rng = array("Q", [config.seed & 0xFFFFFFFFFFFFFFFF])
        self._now = array("q", [0])
        self._prices = array("q", [config.start_price] * n_stocks)
        self._hist = array("q", [0] * (n_stocks * config.window))
        self._cash = array("q", [config.initial_cash] * n_agents)
        self._holdings = array("q", [0] * (n_agents * n_stocks))
        self._strategy = array("q", [STRATEGY_IDS[s] for s in config.strategy])
        self._status = array("q", [1] * n_agents)
        self._focus = array("q", [a % n_stocks for a in range(n_agents)])
        self._order_side = array("q", [0] * n_agents)
        self._order_sym = array("q", [0] * n_agents)
        self._order_qty = array("q", [0] * n_agents)
        self._order_price = array("q", [0] * n_agents)
        width = self.kernel.EVENT_WIDTH
        per_tick = self.kernel.MAX_EVENTS_PER_AGENT_TICK * n_agents
        self._buffer = array("q", [0] * (_CHUNK * per_tick * width))
        self.events: list[Event] = []

    # -- simulation --------------------------------------------------------

    @property
    def tick(self) -> int:
        return self._now[0]

    @property
    def sim_time(self) -> int:
        """Seconds of simulated time elapsed."""
        return self.tick * self.config.tick_seconds

    def run(self, n_ticks: int) -> list[Event]:
        """Advance the simulation; returns the new events, oldest first."""
        fresh: list[Event] = []
        remaining = n_ticks
        while remaining > 0:
            step = min(remaining, _CHUNK)
            count = self.kernel.run_ticks(
                step, self._rng, self._now, self._prices, self._hist,
                self._cash, self._holdings, self._strategy, self._status,
                self._focus, self._order_side, self._order_sym,
                self._order_qty, self._order_price, self._buffer,
                self.config.drift_bp, self.config.vol_bp, self.config.window,
                self.config.delta, self.config.order_size,
                self.config.rest_offset,
            )
            width = self.kernel.EVENT_WIDTH
            for n in range(count):
                base = n * width
                fresh.append(Event(
                    kind=_EVENT_KINDS[self._buffer[base]],
                    tick=self._buffer[base + 1],
                    agent=self._buffer[base + 2],
                    stock=self._buffer[base + 3],
                    side=_SIDES[self._buffer[base + 4]],
                    qty=self._buffer[base + 5],
                    price=self._buffer[base + 6],
                ))
            remaining -= step
        self.events.extend(fresh)
        return fresh

    # -- views -------------------------------------------------------------

    @property
    def n_agents(self) -> int:
        return len(self._cash)

    @property
    def n_stocks(self) -> int:
        return len(self._prices)

    def price(self, stock: int) -> int:
        return self._prices[stock]

    @property
    def prices(self) -> tuple[int, ...]:
        return tuple(self._prices)

    def holdings(self, agent: int) -> tuple[int, ...]:
        n = self.n_stocks
        return tuple(self._holdings[agent * n:(agent + 1) * n])

    def cash(self, agent: int) -> int:
        return self._cash[agent]

    def portfolio_value(self, agent: int) -> int:
        """cash + shares marked at current prices, in cents."""
        total = self._cash[agent]
        for stock, shares in enumerate(self.holdings(agent)):
            total += shares * self._prices[stock]
        return total

    def is_paused(self, agent: int) -> bool:
        return self._status[agent] == 0

    def pause(self, agent: int) -> None:
        self._status[agent] = 0

    def resume(self, agent: int) -> None:
        self._status[agent] = 1

    def open_order(self, agent: int) -> tuple | None:
        if self._order_side[agent] == 0:
            return None
        return (_SIDES[self._order_side[agent]], self._order_sym[agent],
                self._order_qty[agent], self._order_price[agent])

    def agent_state(self, agent: int) -> AgentState:
        own = [e for e in self.events if e.agent == agent]
        return AgentState(
            agent_id=agent,
            strategy=STRATEGY_NAMES[self._strategy[agent]],
            cash=self.cash(agent),
            holdings=self.holdings(agent),
            paused=self.is_paused(agent),
            open_order=self.open_order(agent),
            transactions=[e for e in own if e.kind == "filled"],
            orders=[e for e in own if e.kind != "filled"],
        )

    def snapshot(self, agent: int) -> tuple:
        """Every bit of one agent's kernel state, for identity checks."""
        return (
            self._cash[agent], self.holdings(agent), self._status[agent],
            self._strategy[agent], self._focus[agent],
            self._order_side[agent], self._order_sym[agent],
            self._order_qty[agent], self._order_price[agent],
        )
