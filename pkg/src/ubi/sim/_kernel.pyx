# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled market kernel; behavior-identical twin of the pure module.

See _kernel_py for the contract. cdivision matches the truncating division
used there; the RNG runs in native unsigned 64-bit arithmetic.
"""

IMPL = "c"

EVENT_WIDTH = 7
PLACED, FILLED, CANCELLED = 0, 1, 2
BUY_AND_HOLD, BUY_LOW_SELL_HIGH = 0, 1
MAX_EVENTS_PER_AGENT_TICK = 3


cdef inline unsigned long long _next_rand(unsigned long long[::1] rng) nogil:
    cdef unsigned long long z
    rng[0] = rng[0] + <unsigned long long>0x9E3779B97F4A7C15
    z = rng[0]
    z = (z ^ (z >> 30)) * <unsigned long long>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <unsigned long long>0x94D049BB133111EB
    return z ^ (z >> 31)


def trunc_div(a, b):
    """Integer division truncating toward zero, as C does."""
    q = a // b
    if q < 0 and q * b != a:
        q += 1
    return q


def run_ticks(long long n_ticks,
              unsigned long long[::1] rng,
              long long[::1] now,
              long long[::1] prices,
              long long[::1] hist,
              long long[::1] cash,
              long long[::1] holdings,
              long long[::1] strategy,
              long long[::1] status,
              long long[::1] focus,
              long long[::1] order_side,
              long long[::1] order_sym,
              long long[::1] order_qty,
              long long[::1] order_price,
              long long[::1] events,
              long long drift_bp, long long vol_bp, long long window,
              long long delta, long long order_size, long long rest_offset):
    """Advance the market n_ticks steps; returns the event count written."""
    cdef long long n_stocks = prices.shape[0]
    cdef long long n_agents = cash.shape[0]
    cdef long long capacity = events.shape[0] // EVENT_WIDTH
    if n_ticks * MAX_EVENTS_PER_AGENT_TICK * n_agents > capacity:
        raise ValueError("event buffer too small for this many ticks")

    cdef long long n_events = 0
    cdef long long t, s, a, i, span, move, price, count, total, mean
    cdef long long want, qty, limit, shares, sym, side, base, step
    cdef long long m

    for step in range(n_ticks):
        t = now[0]
        span = 2 * vol_bp + 1
        for s in range(n_stocks):
            m = <long long>(_next_rand(rng) % <unsigned long long>span)
            move = drift_bp + m - vol_bp
            price = prices[s] + (prices[s] * move) / 10000
            if price < 1:
                price = 1
            prices[s] = price
            hist[s * window + t % window] = price

        count = t + 1 if t + 1 < window else window

        for a in range(n_agents):
            if status[a] and order_side[a] != 0:
                side = order_side[a]
                sym = order_sym[a]
                price = prices[sym]
                if side == 1 and price <= order_price[a]:
                    qty = order_qty[a]
                    cash[a] -= qty * price
                    holdings[a * n_stocks + sym] += qty
                    order_side[a] = 0
                    base = n_events * EVENT_WIDTH
                    events[base] = FILLED; events[base + 1] = t
                    events[base + 2] = a; events[base + 3] = sym
                    events[base + 4] = 1; events[base + 5] = qty
                    events[base + 6] = price
                    n_events += 1
                elif side == -1 and price >= order_price[a]:
                    qty = order_qty[a]
                    holdings[a * n_stocks + sym] -= qty
                    cash[a] += qty * price
                    order_side[a] = 0
                    base = n_events * EVENT_WIDTH
                    events[base] = FILLED; events[base + 1] = t
                    events[base + 2] = a; events[base + 3] = sym
                    events[base + 4] = -1; events[base + 5] = qty
                    events[base + 6] = price
                    n_events += 1

        for a in range(n_agents):
            if not status[a]:
                continue
            sym = focus[a]
            price = prices[sym]
            if strategy[a] == BUY_AND_HOLD:
                if (holdings[a * n_stocks + sym] == 0 and order_side[a] == 0
                        and cash[a] >= price):
                    qty = cash[a] / price
                    order_side[a] = 1
                    order_sym[a] = sym
                    order_qty[a] = qty
                    order_price[a] = price
                    base = n_events * EVENT_WIDTH
                    events[base] = PLACED; events[base + 1] = t
                    events[base + 2] = a; events[base + 3] = sym
                    events[base + 4] = 1; events[base + 5] = qty
                    events[base + 6] = price
                    n_events += 1
                continue

            total = 0
            for i in range(count):
                total += hist[sym * window + i]
            mean = total / count
            want = 0
            if price < mean - delta:
                want = 1
            elif price > mean + delta:
                want = -1

            if order_side[a] != 0 and want != order_side[a]:
                base = n_events * EVENT_WIDTH
                events[base] = CANCELLED; events[base + 1] = t
                events[base + 2] = a; events[base + 3] = order_sym[a]
                events[base + 4] = order_side[a]; events[base + 5] = order_qty[a]
                events[base + 6] = order_price[a]
                n_events += 1
                order_side[a] = 0
            if order_side[a] == 0 and want == 1:
                limit = price - rest_offset
                if limit < 1:
                    limit = 1
                qty = cash[a] / limit
                if qty > order_size:
                    qty = order_size
                if qty > 0:
                    order_side[a] = 1
                    order_sym[a] = sym
                    order_qty[a] = qty
                    order_price[a] = limit
                    base = n_events * EVENT_WIDTH
                    events[base] = PLACED; events[base + 1] = t
                    events[base + 2] = a; events[base + 3] = sym
                    events[base + 4] = 1; events[base + 5] = qty
                    events[base + 6] = limit
                    n_events += 1
            elif order_side[a] == 0 and want == -1:
                shares = holdings[a * n_stocks + sym]
                qty = order_size if shares > order_size else shares
                if qty > 0:
                    limit = price + rest_offset
                    order_side[a] = -1
                    order_sym[a] = sym
                    order_qty[a] = qty
                    order_price[a] = limit
                    base = n_events * EVENT_WIDTH
                    events[base] = PLACED; events[base + 1] = t
                    events[base + 2] = a; events[base + 3] = sym
                    events[base + 4] = -1; events[base + 5] = qty
                    events[base + 6] = limit
                    n_events += 1

        for a in range(n_agents):
            if status[a] and order_side[a] != 0:
                side = order_side[a]
                sym = order_sym[a]
                price = prices[sym]
                if side == 1 and price <= order_price[a]:
                    qty = order_qty[a]
                    cash[a] -= qty * price
                    holdings[a * n_stocks + sym] += qty
                    order_side[a] = 0
                    base = n_events * EVENT_WIDTH
                    events[base] = FILLED; events[base + 1] = t
                    events[base + 2] = a; events[base + 3] = sym
                    events[base + 4] = 1; events[base + 5] = qty
                    events[base + 6] = price
                    n_events += 1
                elif side == -1 and price >= order_price[a]:
                    qty = order_qty[a]
                    holdings[a * n_stocks + sym] -= qty
                    cash[a] += qty * price
                    order_side[a] = 0
                    base = n_events * EVENT_WIDTH
                    events[base] = FILLED; events[base + 1] = t
                    events[base + 2] = a; events[base + 3] = sym
                    events[base + 4] = -1; events[base + 5] = qty
                    events[base + 6] = price
                    n_events += 1

        now[0] = t + 1

    return n_events
