"""Shared test utilities: deterministic random generators and oracles."""

from __future__ import annotations

import random
import string

from ubi.acts import (
    ActKind,
    Alternative,
    CONFIRMED,
    InteractionAct,
    IslGroup,
    PERSISTENT,
    UpstreamResponse,
    temporary,
)

TOKEN_ALPHABET = string.ascii_letters + string.digits + "-_.:"
TEXT_ALPHABET = (
    string.ascii_letters + string.digits + " \t\n'\"<>&;=åäöé€楽" + string.punctuation
)

RESPONSE_KIND_POOL = [k for k in ActKind if k is not ActKind.OUTPUT]
LEAF_KIND_POOL = [
    ActKind.INPUT,
    ActKind.OUTPUT,
    ActKind.SELECTION,
    ActKind.MODIFICATION,
    ActKind.CREATE,
    ActKind.DESTROY,
]


def rand_token(rng: random.Random, lo: int = 1, hi: int = 12) -> str:
    return "".join(rng.choice(TOKEN_ALPHABET) for _ in range(rng.randint(lo, hi)))


def rand_text(rng: random.Random, hi: int = 24) -> str:
    return "".join(rng.choice(TEXT_ALPHABET) for _ in range(rng.randint(0, hi)))


def rand_life(rng: random.Random):
    roll = rng.random()
    if roll < 0.6:
        return PERSISTENT
    if roll < 0.8:
        return CONFIRMED
    return temporary(round(rng.uniform(0.5, 30.0), 3))


def rand_metadata(rng: random.Random):
    return tuple(
        (rand_token(rng), rand_text(rng)) for _ in range(rng.randint(0, 2))
    )


class IdMinter:
    def __init__(self, prefix: str = "n"):
        self.prefix = prefix
        self.count = 0

    def __call__(self) -> str:
        self.count += 1
        return f"{self.prefix}{self.count}"


class FakeClock:
    def __init__(self, start: float = 1000.0):
        self.t = start

    def __call__(self) -> float:
        return self.t

    def advance(self, dt: float) -> float:
        self.t += dt
        return self.t


def random_act(rng: random.Random, mint: IdMinter, kinds=None) -> InteractionAct:
    kind = rng.choice(kinds or LEAF_KIND_POOL)
    response_number = None
    alternatives = ()
    if kind is ActKind.SELECTION:
        alternatives = tuple(
            Alternative(
                mint(),
                rand_text(rng, 10),
                rand_token(rng),
                rng.choice([None, None, None, ActKind.CREATE, ActKind.STOP]),
            )
            for _ in range(rng.randint(1, 4))
        )
        response_number = rng.randint(1, len(alternatives))
    return InteractionAct(
        id=mint(),
        kind=kind,
        life=rand_life(rng),
        modal=rng.random() < 0.1,
        default_info=rand_text(rng),
        name=rand_token(rng) if rng.random() < 0.3 else None,
        group=rand_token(rng) if rng.random() < 0.3 else None,
        metadata=rand_metadata(rng),
        response_number=response_number,
        alternatives=alternatives,
    )


def random_group(rng: random.Random, mint: IdMinter, depth: int, kinds=None) -> IslGroup:
    children = []
    for _ in range(rng.randint(0, 4)):
        if depth > 1 and rng.random() < 0.3:
            children.append(random_group(rng, mint, depth - 1, kinds))
        else:
            children.append(random_act(rng, mint, kinds))
    return IslGroup(
        id=mint(),
        life=rand_life(rng),
        modal=rng.random() < 0.05,
        default_info=rand_text(rng),
        name=rand_token(rng) if rng.random() < 0.3 else None,
        group=rand_token(rng) if rng.random() < 0.3 else None,
        metadata=rand_metadata(rng),
        children=tuple(children),
    )


def random_tree(rng: random.Random, max_depth: int = 5, kinds=None, mint=None):
    """A random valid act tree, nesting at most max_depth levels."""
    mint = mint or IdMinter()
    if rng.random() < 0.25:
        return random_act(rng, mint, kinds)
    return random_group(rng, mint, rng.randint(1, max_depth - 1), kinds)


def random_responses(rng: random.Random, hi: int = 5) -> list[UpstreamResponse]:
    out = []
    for _ in range(rng.randint(0, hi)):
        kind = rng.choice(RESPONSE_KIND_POOL)
        payload = rand_text(rng) if rng.random() < 0.6 else None
        out.append(UpstreamResponse(rand_token(rng), kind, payload))
    return out


def squash_ws(text: str) -> str:
    """Collapse formatting whitespace so documents compare modulo layout."""
    return "".join(line.strip() for line in text.splitlines())


def random_selector(rng: random.Random):
    from ubi.forms import FormSelector

    while True:
        has_group, has_kind, has_name = (rng.random() < 0.5 for _ in range(3))
        if has_group or has_kind or has_name:
            break
    return FormSelector(
        group=rand_token(rng, 1, 6) if has_group else None,
        kind=rng.choice(list(ActKind)) if has_kind else None,
        name=rand_token(rng, 1, 6) if has_name else None,
    )


class SessionTrace:
    """Drives one Session with random operations against a shadow model.

    The shadow re-derives every semantic rule from first principles (tree
    shape plus the documented contracts) and checks, after each operation:
    the live registry, the modal holder, the alternative index, and the full
    mutation stream replay. Raises AssertionError on the first divergence.
    """

    def __init__(self, rng: random.Random, trace_id: int):
        from ubi.engine import Session

        self.rng = rng
        self.clock = FakeClock()
        self.session = Session(f"trace{trace_id}", clock=self.clock)
        self.acts = {}
        self.parents = {}
        self.children = {}
        self.alt_of = {}
        self.live = set()
        self.order = {}
        self.added = 0
        self.root_order = []
        self.used = {}
        self.expiry = {}
        self.responded_confirmed = set()
        self.holder = None
        self.stream = []
        self.mint = IdMinter(f"t{trace_id}_")
        self.ended = False

    # -- shadow bookkeeping ------------------------------------------------

    def replay(self, mutations):
        from ubi.engine import AddComponent, LockOthers, RemoveComponent, Unlock

        self.stream.extend(mutations)
        for m in mutations:
            if isinstance(m, AddComponent):
                assert m.act.id not in self.live
                self.live.add(m.act.id)
                self.order[m.act.id] = self.added
                self.added += 1
            elif isinstance(m, RemoveComponent):
                assert m.act_id in self.live, "removed something not live"
                self.live.discard(m.act_id)
                self.used.pop(m.act_id, None)
                self.expiry.pop(m.act_id, None)
            elif isinstance(m, LockOthers):
                self.holder = m.except_id
            elif isinstance(m, Unlock):
                self.holder = None

    def check_state(self):
        assert set(self.session.live) == self.live
        assert self.session.modal_holder == self.holder
        if self.holder is not None:
            assert self.holder in self.live
            assert self.acts[self.holder].modal
        expected_alts = {
            alt.id: act_id
            for act_id in self.live
            for alt in getattr(self.acts[act_id], "alternatives", ())
        }
        assert self.session.alt_owner == expected_alts

    def ancestors_or_self(self, act_id):
        while act_id is not None:
            yield act_id
            act_id = self.parents[act_id]

    def expected_removals(self, wanted):
        out: list[str] = []
        gone: set[str] = set()

        def take(act_id):
            if act_id in gone or act_id not in self.live:
                return
            gone.add(act_id)
            out.append(act_id)
            for child in self.children.get(act_id, ()):
                take(child)

        for act_id in wanted:
            take(act_id)
        return out

    # -- operations --------------------------------------------------------

    def register_tree(self, tree):
        from ubi.acts import ActKind, InteractionAct, IslGroup, iter_nodes

        def record(node, parent):
            if isinstance(node, InteractionAct) and node.kind in (
                ActKind.START, ActKind.STOP,
            ):
                return
            self.acts[node.id] = node
            self.parents[node.id] = parent
            self.children[node.id] = []
            if parent is None:
                self.root_order.append(node.id)
            else:
                self.children[parent].append(node.id)
            if isinstance(node, InteractionAct):
                for alt in node.alternatives:
                    self.alt_of[alt.id] = node.id
                if node.kind is ActKind.SELECTION:
                    self.used[node.id] = 0
                if node.life.is_temporary:
                    self.expiry[node.id] = self.clock() + node.life.duration
            elif node.life.is_temporary:
                self.expiry[node.id] = self.clock() + node.life.duration
            if isinstance(node, IslGroup):
                for child in node.children:
                    record(child, node.id)

        record(tree, None)

    def op_apply(self):
        from ubi import engine
        from ubi.acts import ActKind, InteractionAct, IslGroup, iter_nodes

        roll = self.rng.random()
        if roll < 0.08 and self.live:
            dup = self.rng.choice(sorted(self.live))
            tree = IslGroup(self.mint(), children=(
                InteractionAct(dup, ActKind.OUTPUT),
            ))
            before_live, before_holder = set(self.live), self.holder
            try:
                self.session.apply_document(tree)
            except engine.DuplicateLiveId:
                assert set(self.session.live) == before_live
                assert self.session.modal_holder == before_holder
                return
            raise AssertionError("duplicate id was accepted")

        if roll < 0.12:
            tree = IslGroup(self.mint(), children=(
                InteractionAct(self.mint(), ActKind.OUTPUT),
                InteractionAct(self.mint(), ActKind.START),
            ))
        elif roll < 0.15 and self.added > 0:
            tree = InteractionAct(self.mint(), ActKind.STOP)
            expected = self.expected_removals(
                [r for r in self.root_order if r in self.live]
            )
            mutations = self.session.apply_document(tree)
            removed = [m.act_id for m in mutations
                       if isinstance(m, engine.RemoveComponent)]
            assert removed == expected
            assert all(m.reason == engine.SESSION_END for m in mutations
                       if isinstance(m, engine.RemoveComponent))
            self.replay(mutations)
            self.ended = True
            self.check_state()
            return
        else:
            tree = random_tree(self.rng, max_depth=3, mint=self.mint)

        self.register_tree(tree)
        mutations = self.session.apply_document(tree)
        adds = [m for m in mutations if isinstance(m, engine.AddComponent)]
        expected_adds = [
            n.id for n in iter_nodes(tree)
            if not (isinstance(n, InteractionAct)
                    and n.kind in (ActKind.START, ActKind.STOP))
        ]
        assert [m.act.id for m in adds] == expected_adds
        self.replay(mutations)
        self.check_state()

    def pick_target(self):
        pools = []
        live_acts = sorted(self.live)
        if live_acts:
            pools.append(self.rng.choice(live_acts))
        live_alts = sorted(a for a, s in self.alt_of.items() if s in self.live)
        if live_alts:
            pools.append(self.rng.choice(live_alts))
        dead = sorted(set(self.acts) - self.live)
        if dead:
            pools.append(self.rng.choice(dead))
        pools.append(f"ghost{self.rng.randint(0, 99)}")
        return self.rng.choice(pools)

    def predict_action_error(self, target, payload):
        from ubi import engine
        from ubi.acts import ActKind, IslGroup

        if target in self.alt_of and self.alt_of[target] in self.live:
            owner = self.alt_of[target]
        elif target in self.live:
            owner = target
        else:
            return engine.UnknownComponent
        act = self.acts[owner]
        if isinstance(act, IslGroup):
            return engine.NotActionable
        if act.kind is ActKind.OUTPUT:
            return engine.ActionOnOutput
        if self.holder is not None and self.holder not in set(
            self.ancestors_or_self(owner)
        ):
            return engine.BlockedByModal
        if act.kind is ActKind.SELECTION:
            if target == owner:
                if not any(a.return_value == payload for a in act.alternatives):
                    return engine.InvalidActionPayload
            if self.used[owner] >= act.response_number:
                return engine.ResponseCountExceeded
        return None

    def op_action(self):
        from ubi import engine
        from ubi.acts import ActKind, UpstreamResponse

        target = self.pick_target()
        payload = None
        act = None
        owner = self.alt_of.get(target, target)
        act = self.acts.get(owner)
        if act is not None and getattr(act, "kind", None) is ActKind.SELECTION \
                and target == owner:
            if act.alternatives and self.rng.random() < 0.7:
                payload = self.rng.choice(act.alternatives).return_value
            else:
                payload = "no-such-choice"
        elif self.rng.random() < 0.5:
            payload = rand_text(self.rng, 12)

        expected_error = self.predict_action_error(target, payload)
        if expected_error is not None:
            before = set(self.live)
            try:
                self.session.handle_action(target, payload)
            except expected_error:
                assert set(self.session.live) == before
                self.check_state()
                return
            raise AssertionError(
                f"expected {expected_error.__name__} for {target!r}"
            )

        responses, mutations = self.session.handle_action(target, payload)
        assert len(responses) == 1
        resp = responses[0]
        assert resp.kind is not ActKind.OUTPUT

        if act.kind is ActKind.SELECTION:
            if target == owner:
                alt = next(a for a in act.alternatives
                           if a.return_value == payload)
            else:
                alt = next(a for a in act.alternatives if a.id == target)
            self.used[owner] += 1
            if alt.returns is not None:
                carried = None if target == owner else payload
                assert resp == UpstreamResponse(alt.id, alt.returns, carried)
            else:
                assert resp == UpstreamResponse(owner, ActKind.SELECTION,
                                                alt.return_value)
        else:
            assert resp == UpstreamResponse(owner, act.kind, payload)

        if act.life.is_confirmed:
            assert owner not in self.responded_confirmed
            self.responded_confirmed.add(owner)
            expected = self.expected_removals([owner])
            removed = [m.act_id for m in mutations
                       if isinstance(m, engine.RemoveComponent)]
            assert removed == expected
        else:
            assert not any(isinstance(m, engine.RemoveComponent)
                           for m in mutations)
        self.replay(mutations)
        self.check_state()

    def op_tick(self):
        from ubi import engine

        pending = sorted(
            ((t, self.order[i], i) for i, t in self.expiry.items()),
            key=lambda e: e[:2],
        )
        if pending and self.rng.random() < 0.4:
            now = pending[self.rng.randrange(len(pending))][0]
            if now < self.clock():
                now = self.clock()
            self.clock.t = now
        else:
            self.clock.advance(round(self.rng.uniform(0, 8), 3))
        now = self.clock()
        expected = self.expected_removals(
            [i for _, _, i in pending if self.expiry.get(i, now + 1) <= now]
        )
        mutations = self.session.tick(now)
        removed = [m.act_id for m in mutations
                   if isinstance(m, engine.RemoveComponent)]
        assert removed == expected
        assert all(m.reason == engine.EXPIRED for m in mutations
                   if isinstance(m, engine.RemoveComponent))
        self.replay(mutations)
        self.check_state()

    def op_service_remove(self):
        from ubi import engine

        if self.rng.random() < 0.15 or not self.live:
            ghost = f"ghost{self.rng.randint(0, 99)}"
            before = set(self.live)
            try:
                self.session.service_remove([ghost])
            except engine.UnknownComponent:
                assert set(self.session.live) == before
                return
            raise AssertionError("removal of unknown id was accepted")
        count = min(len(self.live), self.rng.randint(1, 2))
        wanted = self.rng.sample(sorted(self.live), count)
        expected = self.expected_removals(wanted)
        mutations = self.session.service_remove(wanted)
        removed = [m.act_id for m in mutations
                   if isinstance(m, engine.RemoveComponent)]
        assert removed == expected
        self.replay(mutations)
        self.check_state()

    def op_end(self):
        from ubi import engine
        from ubi.acts import ActKind

        expected = self.expected_removals(
            [r for r in self.root_order if r in self.live]
        )
        response, mutations = self.session.end()
        assert response.kind is ActKind.STOP
        assert response.act_id == self.session.session_id
        removed = [m.act_id for m in mutations
                   if isinstance(m, engine.RemoveComponent)]
        assert removed == expected
        self.replay(mutations)
        self.ended = True
        self.check_state()

    def run(self, ops: int):
        from ubi import engine
        from ubi.engine import materialize

        for _ in range(ops):
            if self.ended:
                break
            roll = self.rng.random()
            if roll < 0.40:
                self.op_apply()
            elif roll < 0.75:
                self.op_action()
            elif roll < 0.90:
                self.op_tick()
            elif roll < 0.98:
                self.op_service_remove()
            else:
                self.op_end()

        view = materialize(self.stream)
        assert set(view) == set(self.session.live)
        for act_id, act in view.items():
            assert self.session.live[act_id].act is act
        if self.ended:
            try:
                self.session.handle_action("anything")
            except engine.SessionEnded:
                pass
            else:
                raise AssertionError("ended session still accepts actions")


def run_session_traces(seed: int, traces: int, ops: int = 25) -> int:
    """Run many independent random session traces; returns operations done."""
    rng = random.Random(seed)
    total = 0
    for trace_id in range(traces):
        trace = SessionTrace(random.Random(rng.getrandbits(64)), trace_id)
        trace.run(ops)
        total += len(trace.stream)
    return total


def random_form(rng: random.Random, form_id: str = "", parent: str | None = None):
    from ubi.forms import DIRECTIVE, RESOURCE, CustomizationForm, FormEntry

    entries = []
    seen = set()
    for _ in range(rng.randint(0, 6)):
        selector = random_selector(rng)
        kind = rng.choice([DIRECTIVE, DIRECTIVE, RESOURCE])
        if (selector, kind) in seen:
            continue
        seen.add((selector, kind))
        entries.append(FormEntry(selector, kind, rand_token(rng, 1, 16)))
    return CustomizationForm(form_id, parent, tuple(entries))
