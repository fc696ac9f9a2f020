import random

import pytest

from ubi import engine
from ubi.acts import (
    ActKind,
    Alternative,
    CONFIRMED,
    InteractionAct,
    IslGroup,
    UpstreamResponse,
    temporary,
)
from ubi.codec import parse_downstream
from ubi.engine import (
    AddComponent,
    LockOthers,
    RemoveComponent,
    Session,
    Unlock,
    materialize,
)
from ubi.forms import (
    DIRECTIVE,
    CustomizationForm,
    FormEntry,
    FormSelector,
)
from conftest import load_fixture
from helpers import FakeClock, run_session_traces


@pytest.fixture
def clock():
    return FakeClock()


@pytest.fixture
def session(clock):
    return Session("s1", clock=clock)


def navigation_selection():
    return parse_downstream(load_fixture("isl/navigation_selection.isl"))


def adds(mutations):
    return [m for m in mutations if isinstance(m, AddComponent)]


def removes(mutations):
    return [m for m in mutations if isinstance(m, RemoveComponent)]


class TestApplyDocument:
    def test_info_group_adds_in_document_order(self, session):
        tree = parse_downstream(load_fixture("isl/info_group.isl"))
        mutations = session.apply_document(tree)
        assert [m.act.id for m in adds(mutations)] == ["980796", "235690", "342564"]
        assert len(mutations) == 3
        assert set(session.live) == {"980796", "235690", "342564"}
        assert session.roots == ["980796"]
        assert session.get("235690").parent_id == "980796"

    def test_modal_act_locks_everything_else(self, session):
        act = InteractionAct("warn", ActKind.CREATE, life=CONFIRMED, modal=True)
        mutations = session.apply_document(act)
        assert mutations == [
            AddComponent(act, session.get("warn").presentation),
            LockOthers("warn"),
        ]
        assert session.modal_holder == "warn"

    def test_empty_group(self, session):
        mutations = session.apply_document(IslGroup("g1"))
        assert [type(m) for m in mutations] == [AddComponent]

    def test_duplicate_live_id_is_atomic(self, session):
        session.apply_document(InteractionAct("a1", ActKind.OUTPUT))
        tree = IslGroup("g1", children=(
            InteractionAct("b1", ActKind.OUTPUT),
            InteractionAct("a1", ActKind.INPUT),
        ))
        with pytest.raises(engine.DuplicateLiveId):
            session.apply_document(tree)
        assert set(session.live) == {"a1"}

    def test_alternative_ids_count_as_live(self, session):
        session.apply_document(navigation_selection())
        with pytest.raises(engine.DuplicateLiveId):
            session.apply_document(InteractionAct("98770", ActKind.OUTPUT))

    def test_presentation_resolved_through_the_form(self, clock):
        form = CustomizationForm("f", None, (
            FormEntry(FormSelector(kind=ActKind.OUTPUT), DIRECTIVE, "text.banner"),
        ))
        session = Session("s1", form=form, clock=clock)
        mutations = session.apply_document(InteractionAct("a1", ActKind.OUTPUT))
        assert mutations[0].presentation.directive == "text.banner"

    def test_start_acts_are_control_only(self, session):
        tree = IslGroup("g1", children=(
            InteractionAct("a1", ActKind.OUTPUT),
            InteractionAct("go", ActKind.START),
        ))
        mutations = session.apply_document(tree)
        assert [m.act.id for m in adds(mutations)] == ["g1", "a1"]
        assert "go" not in session.live

    def test_stop_act_ends_the_session(self, session):
        session.apply_document(parse_downstream(load_fixture("isl/info_group.isl")))
        mutations = session.apply_document(InteractionAct("halt", ActKind.STOP))
        assert [m.act_id for m in removes(mutations)] == [
            "980796", "235690", "342564",
        ]
        assert all(m.reason == engine.SESSION_END for m in removes(mutations))
        assert session.ended
        with pytest.raises(engine.SessionEnded):
            session.apply_document(IslGroup("g2"))


class TestHandleAction:
    def test_create_alternative_returns_a_create_act(self, session):
        tree = InteractionAct(
            "235690", ActKind.SELECTION, name="nextSelect", group="calendar",
            default_info="Navigation", response_number=1,
            alternatives=(
                Alternative("98770", "New", "new", returns=ActKind.CREATE),
                Alternative("66432", "Next", "next"),
            ),
        )
        session.apply_document(tree)
        responses, mutations = session.handle_action("98770")
        assert responses == [UpstreamResponse("98770", ActKind.CREATE, None)]
        assert mutations == []

    def test_marked_alternative_forwards_caller_data(self, session):
        tree = InteractionAct(
            "235690", ActKind.SELECTION, response_number=2,
            alternatives=(
                Alternative("98770", "New", "new", returns=ActKind.CREATE),
            ),
        )
        session.apply_document(tree)
        responses, _ = session.handle_action("98770", "standup@09:00")
        assert responses == [
            UpstreamResponse("98770", ActKind.CREATE, "standup@09:00")
        ]
        # the menu path spends the payload on matching instead
        responses, _ = session.handle_action("235690", "new")
        assert responses == [UpstreamResponse("98770", ActKind.CREATE, None)]

    def test_unmarked_alternative_is_a_plain_selection_response(self, session):
        session.apply_document(
            parse_downstream(load_fixture("isl/named_selection.isl"))
        )
        responses, _ = session.handle_action("98770")
        assert responses == [
            UpstreamResponse("235690", ActKind.SELECTION, "new")
        ]

    def test_plain_alternative_returns_the_selection_value(self, session):
        session.apply_document(navigation_selection())
        responses, _ = session.handle_action("66432")
        assert responses == [
            UpstreamResponse("235690", ActKind.SELECTION, "next")
        ]

    def test_selection_addressable_by_own_id_with_payload(self, session):
        session.apply_document(navigation_selection())
        responses, _ = session.handle_action("235690", "next")
        assert responses == [
            UpstreamResponse("235690", ActKind.SELECTION, "next")
        ]

    def test_bad_payload_on_selection(self, session):
        session.apply_document(navigation_selection())
        with pytest.raises(engine.InvalidActionPayload):
            session.handle_action("235690", "sideways")
        with pytest.raises(engine.InvalidActionPayload):
            session.handle_action("235690")

    def test_persistent_input_survives_repeated_actions(self, session):
        session.apply_document(InteractionAct("name", ActKind.INPUT))
        for i in range(100):
            responses, mutations = session.handle_action("name", f"v{i}")
            assert responses == [UpstreamResponse("name", ActKind.INPUT, f"v{i}")]
            assert mutations == []
        assert "name" in session.live

    def test_response_number_limits_activations(self, session):
        session.apply_document(navigation_selection())
        session.handle_action("66432")
        with pytest.raises(engine.ResponseCountExceeded):
            session.handle_action("66432")
        with pytest.raises(engine.ResponseCountExceeded):
            session.handle_action("98770")

    def test_multi_response_selection(self, session):
        act = InteractionAct(
            "pick", ActKind.SELECTION, response_number=2,
            alternatives=(Alternative("x", "X", "x"), Alternative("y", "Y", "y")),
        )
        session.apply_document(act)
        session.handle_action("x")
        session.handle_action("y")
        with pytest.raises(engine.ResponseCountExceeded):
            session.handle_action("x")

    def test_confirmed_act_responds_exactly_once(self, session):
        act = InteractionAct("ok", ActKind.CREATE, life=CONFIRMED)
        session.apply_document(act)
        responses, mutations = session.handle_action("ok")
        assert responses == [UpstreamResponse("ok", ActKind.CREATE, None)]
        assert [m.act_id for m in removes(mutations)] == ["ok"]
        assert removes(mutations)[0].reason == engine.CONFIRMED_DONE
        with pytest.raises(engine.UnknownComponent):
            session.handle_action("ok")

    def test_unknown_component(self, session):
        with pytest.raises(engine.UnknownComponent):
            session.handle_action("nobody")

    def test_groups_are_not_actionable(self, session):
        session.apply_document(IslGroup("g1"))
        with pytest.raises(engine.NotActionable):
            session.handle_action("g1")

    def test_output_is_not_actionable(self, session):
        session.apply_document(InteractionAct("o1", ActKind.OUTPUT))
        with pytest.raises(engine.ActionOnOutput):
            session.handle_action("o1")

    def test_payload_passes_through_for_simple_kinds(self, session):
        for kind in (ActKind.MODIFICATION, ActKind.CREATE, ActKind.DESTROY):
            act_id = f"a-{kind.value}"
            session.apply_document(InteractionAct(act_id, kind))
            responses, _ = session.handle_action(act_id, "data")
            assert responses == [UpstreamResponse(act_id, kind, "data")]


class TestModality:
    def test_modal_blocks_everything_outside_its_subtree(self, session):
        session.apply_document(InteractionAct("free", ActKind.INPUT))
        session.apply_document(
            InteractionAct("gate", ActKind.CREATE, life=CONFIRMED, modal=True)
        )
        with pytest.raises(engine.BlockedByModal):
            session.handle_action("free", "hi")
        responses, mutations = session.handle_action("gate")
        assert responses[0].kind is ActKind.CREATE
        assert mutations == [
            RemoveComponent("gate", engine.CONFIRMED_DONE), Unlock(),
        ]
        assert session.handle_action("free", "hi")[0][0].payload == "hi"

    def test_modal_group_keeps_its_subtree_actionable(self, session):
        tree = IslGroup("dialog", modal=True, children=(
            InteractionAct("answer", ActKind.INPUT),
        ))
        session.apply_document(InteractionAct("free", ActKind.INPUT))
        session.apply_document(tree)
        assert session.is_blocked("free")
        assert not session.is_blocked("answer")
        responses, _ = session.handle_action("answer", "42")
        assert responses[0].payload == "42"

    def test_modal_queue_is_fifo(self, session):
        first = InteractionAct("m1", ActKind.CREATE, life=CONFIRMED, modal=True)
        second = InteractionAct("m2", ActKind.CREATE, life=CONFIRMED, modal=True)
        m = session.apply_document(first)
        assert m[-1] == LockOthers("m1")
        m = session.apply_document(second)
        assert not any(isinstance(x, (LockOthers, Unlock)) for x in m)
        with pytest.raises(engine.BlockedByModal):
            session.handle_action("m2")
        _, mutations = session.handle_action("m1")
        assert mutations == [
            RemoveComponent("m1", engine.CONFIRMED_DONE),
            Unlock(),
            LockOthers("m2"),
        ]
        assert session.modal_holder == "m2"

    def test_removing_queued_modal_act_skips_it(self, session):
        session.apply_document(
            InteractionAct("m1", ActKind.CREATE, life=CONFIRMED, modal=True)
        )
        session.apply_document(
            InteractionAct("m2", ActKind.CREATE, life=CONFIRMED, modal=True)
        )
        session.service_remove(["m2"])
        _, mutations = session.handle_action("m1")
        assert mutations == [
            RemoveComponent("m1", engine.CONFIRMED_DONE), Unlock(),
        ]
        assert session.modal_holder is None


class TestTick:
    def test_expiry_is_inclusive(self, session, clock):
        session.apply_document(
            InteractionAct("note", ActKind.OUTPUT, life=temporary(5))
        )
        assert session.tick(clock.advance(4.9)) == []
        mutations = session.tick(clock.advance(0.1))
        assert mutations == [RemoveComponent("note", engine.EXPIRED)]

    def test_simultaneous_expiries_remove_in_insertion_order(self, session, clock):
        session.apply_document(IslGroup("g", children=(
            InteractionAct("n1", ActKind.OUTPUT, life=temporary(5)),
            InteractionAct("n2", ActKind.OUTPUT, life=temporary(5)),
        )))
        mutations = session.tick(clock.advance(5))
        assert [m.act_id for m in removes(mutations)] == ["n1", "n2"]

    def test_expiring_group_takes_its_subtree(self, session, clock):
        tree = IslGroup("g", life=temporary(3), children=(
            InteractionAct("a", ActKind.OUTPUT),
            IslGroup("h", children=(InteractionAct("b", ActKind.INPUT),)),
        ))
        session.apply_document(tree)
        mutations = session.tick(clock.advance(3))
        assert [m.act_id for m in removes(mutations)] == ["g", "a", "h", "b"]
        assert session.live == {}

    def test_time_must_not_go_backwards(self, session, clock):
        session.tick(clock.advance(10))
        with pytest.raises(ValueError):
            session.tick(5)

    def test_expired_modal_holder_unlocks(self, session, clock):
        session.apply_document(
            InteractionAct("gate", ActKind.CREATE, modal=True, life=temporary(1))
        )
        mutations = session.tick(clock.advance(1))
        assert mutations == [
            RemoveComponent("gate", engine.EXPIRED), Unlock(),
        ]

    def test_tick_after_end_is_a_quiet_noop(self, session):
        session.end()
        assert session.tick(10 ** 9) == []


class TestServiceRemove:
    def test_group_removal_cascades(self, session):
        session.apply_document(parse_downstream(load_fixture("isl/info_group.isl")))
        mutations = session.service_remove(["980796"])
        assert [m.act_id for m in removes(mutations)] == [
            "980796", "235690", "342564",
        ]
        assert all(m.reason == engine.SERVICE for m in removes(mutations))

    def test_leaf_removal(self, session):
        session.apply_document(InteractionAct("a", ActKind.OUTPUT))
        mutations = session.service_remove(["a"])
        assert mutations == [RemoveComponent("a", engine.SERVICE)]

    def test_removing_the_modal_holder_unlocks(self, session):
        session.apply_document(InteractionAct("gate", ActKind.CREATE, modal=True))
        mutations = session.service_remove(["gate"])
        assert mutations == [
            RemoveComponent("gate", engine.SERVICE), Unlock(),
        ]

    def test_unknown_id_rejected_before_any_removal(self, session):
        session.apply_document(InteractionAct("a", ActKind.OUTPUT))
        with pytest.raises(engine.UnknownComponent):
            session.service_remove(["a", "ghost"])
        assert "a" in session.live

    def test_alternative_ids_are_not_removable(self, session):
        session.apply_document(navigation_selection())
        with pytest.raises(engine.UnknownComponent):
            session.service_remove(["98770"])


class TestSessionLifetime:
    def test_start_response_names_the_session(self, session):
        assert session.start_response() == UpstreamResponse("s1", ActKind.START)

    def test_end_tears_down_and_reports_stop(self, session):
        session.apply_document(InteractionAct("a", ActKind.OUTPUT))
        response, mutations = session.end()
        assert response == UpstreamResponse("s1", ActKind.STOP)
        assert [m.act_id for m in removes(mutations)] == ["a"]
        assert removes(mutations)[0].reason == engine.SESSION_END
        with pytest.raises(engine.SessionEnded):
            session.end()


class TestMaterialize:
    def test_replay_reconstructs_live_set(self, session, clock):
        stream = []
        stream += session.apply_document(
            parse_downstream(load_fixture("isl/info_group.isl"))
        )
        stream += session.apply_document(
            InteractionAct("note", ActKind.OUTPUT, life=temporary(2))
        )
        stream += session.service_remove(["235690"])
        stream += session.tick(clock.advance(2))
        view = materialize(stream)
        assert set(view) == set(session.live) == {"980796", "342564"}


def test_random_traces_stay_safe():
    assert run_session_traces(seed=1215, traces=400, ops=25) > 0
