"""Pure-Python market kernel; reference for the compiled twin.

Both kernels run the same deterministic loop over flat int64 arrays: advance
one synthetic price per stock, match resting orders, let strategies place or
cancel orders, then match again so marketable orders fill within their tick.
All arithmetic is integer cents; division truncates toward zero (C rules) so
both implementations produce bit-identical traces from equal seeds.

Strategies: 0 buys the focus stock with all cash once and never sells;
1 buys below the rolling mean minus delta and sells above it plus delta,
cancelling its resting order whenever the signal changes.

Event records are 7 ints: (code, tick, agent, stock, side, qty, price) with
code 0=placed 1=filled 2=cancelled and side 1=buy -1=sell.
"""

IMPL = "python"

_MASK = 0xFFFFFFFFFFFFFFFF

EVENT_WIDTH = 7
PLACED, FILLED, CANCELLED = 0, 1, 2
BUY_AND_HOLD, BUY_LOW_SELL_HIGH = 0, 1
MAX_EVENTS_PER_AGENT_TICK = 3


def _next_rand(rng) -> int:
    state = (rng[0] + 0x9E3779B97F4A7C15) & _MASK
    rng[0] = state
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def trunc_div(a: int, b: int) -> int:
    """Integer division truncating toward zero, as C does."""
    q = a // b
    if q < 0 and q * b != a:
        q += 1
    return q


def run_ticks(n_ticks, rng, now, prices, hist, cash, holdings, strategy,
              status, focus, order_side, order_sym, order_qty, order_price,
              events, drift_bp, vol_bp, window, delta, order_size,
              rest_offset):
    """Advance the market n_ticks steps; returns the event count written."""
    n_stocks = len(prices)
    n_agents = len(cash)
    capacity = len(events) // EVENT_WIDTH
    if n_ticks * MAX_EVENTS_PER_AGENT_TICK * n_agents > capacity:
        raise ValueError("event buffer too small for this many ticks")

    n_events = 0

    def emit(code, tick, agent, sym, side, qty, price):
        nonlocal n_events
        base = n_events * EVENT_WIDTH
        events[base] = code
        events[base + 1] = tick
        events[base + 2] = agent
        events[base + 3] = sym
        events[base + 4] = side
        events[base + 5] = qty
        events[base + 6] = price
        n_events += 1

    def try_match(a, t):
        side = order_side[a]
        if side == 0:
            return
        sym = order_sym[a]
        price = prices[sym]
        if side == 1 and price <= order_price[a]:
            # limit never exceeds reserved cash, and one order per agent
            # means cash cannot shrink while the order rests
            qty = order_qty[a]
            cash[a] -= qty * price
            holdings[a * n_stocks + sym] += qty
            order_side[a] = 0
            emit(FILLED, t, a, sym, 1, qty, price)
        elif side == -1 and price >= order_price[a]:
            qty = order_qty[a]
            holdings[a * n_stocks + sym] -= qty
            cash[a] += qty * price
            order_side[a] = 0
            emit(FILLED, t, a, sym, -1, qty, price)

    for _ in range(n_ticks):
        t = now[0]
        span = 2 * vol_bp + 1
        for s in range(n_stocks):
            move = drift_bp + (_next_rand(rng) % span) - vol_bp
            price = prices[s] + trunc_div(prices[s] * move, 10000)
            if price < 1:
                price = 1
            prices[s] = price
            hist[s * window + t % window] = price

        count = t + 1 if t + 1 < window else window

        for a in range(n_agents):
            if status[a]:
                try_match(a, t)

        for a in range(n_agents):
            if not status[a]:
                continue
            sym = focus[a]
            price = prices[sym]
            if strategy[a] == BUY_AND_HOLD:
                if (holdings[a * n_stocks + sym] == 0 and order_side[a] == 0
                        and cash[a] >= price):
                    qty = cash[a] // price
                    order_side[a] = 1
                    order_sym[a] = sym
                    order_qty[a] = qty
                    order_price[a] = price
                    emit(PLACED, t, a, sym, 1, qty, price)
                continue

            total = 0
            for i in range(count):
                total += hist[sym * window + i]
            mean = total // count
            want = 0
            if price < mean - delta:
                want = 1
            elif price > mean + delta:
                want = -1

            if order_side[a] != 0 and want != order_side[a]:
                emit(CANCELLED, t, a, order_sym[a], order_side[a],
                     order_qty[a], order_price[a])
                order_side[a] = 0
            if order_side[a] == 0 and want == 1:
                limit = price - rest_offset
                if limit < 1:
                    limit = 1
                qty = cash[a] // limit
                if qty > order_size:
                    qty = order_size
                if qty > 0:
                    order_side[a] = 1
                    order_sym[a] = sym
                    order_qty[a] = qty
                    order_price[a] = limit
                    emit(PLACED, t, a, sym, 1, qty, limit)
            elif order_side[a] == 0 and want == -1:
                shares = holdings[a * n_stocks + sym]
                qty = order_size if shares > order_size else shares
                if qty > 0:
                    limit = price + rest_offset
                    order_side[a] = -1
                    order_sym[a] = sym
                    order_qty[a] = qty
                    order_price[a] = limit
                    emit(PLACED, t, a, sym, -1, qty, limit)

        for a in range(n_agents):
            if status[a]:
                try_match(a, t)

        now[0] = t + 1

    return n_events
