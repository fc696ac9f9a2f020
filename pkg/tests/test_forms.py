import itertools
import random

import pytest

from ubi import forms
from ubi.acts import ActKind, Alternative, InteractionAct, IslGroup
from ubi.codec import MalformedDocument
from ubi.forms import (
    DIRECTIVE,
    RESOURCE,
    CustomizationForm,
    FormEntry,
    FormSelector,
    flatten,
    parent_chain,
    parse_form,
    resolve,
    resolve_fields,
    serialize_form,
)
from conftest import load_fixture
from helpers import random_form, random_selector


class TestSelector:
    def test_requires_at_least_one_dimension(self):
        with pytest.raises(ValueError):
            FormSelector()

    def test_all_seven_shapes_have_distinct_ranks(self):
        shapes = [
            FormSelector(group="g", kind=ActKind.OUTPUT, name="n"),
            FormSelector(group="g", name="n"),
            FormSelector(group="g", kind=ActKind.OUTPUT),
            FormSelector(kind=ActKind.OUTPUT, name="n"),
            FormSelector(name="n"),
            FormSelector(kind=ActKind.OUTPUT),
            FormSelector(group="g"),
        ]
        ranks = [s.rank for s in shapes]
        assert ranks == sorted(ranks, reverse=True)
        assert len(set(ranks)) == 7

    def test_matching_requires_every_set_dimension(self):
        sel = FormSelector(group="cal", kind=ActKind.SELECTION, name="nav")
        assert sel.matches(ActKind.SELECTION, "nav", "cal")
        assert not sel.matches(ActKind.SELECTION, "nav", "other")
        assert not sel.matches(ActKind.INPUT, "nav", "cal")
        assert not sel.matches(ActKind.SELECTION, None, "cal")

    def test_unset_dimensions_are_wildcards(self):
        sel = FormSelector(kind=ActKind.OUTPUT)
        assert sel.matches(ActKind.OUTPUT, "anything", "anywhere")
        assert sel.matches(ActKind.OUTPUT, None, None)


class TestParseFixtures:
    def test_type_level_mapping(self):
        form = parse_form(load_fixture("forms/output_type_mapping.form"))
        assert form.id == ""
        assert form.entries == (
            FormEntry(FormSelector(kind=ActKind.OUTPUT), DIRECTIVE,
                      "se.sics.ubi.swing.OutputLabel"),
        )

    def test_name_level_mapping(self):
        form = parse_form(load_fixture("forms/name_mapping.form"))
        assert form.entries == (
            FormEntry(FormSelector(name="nextSelect"), DIRECTIVE,
                      "se.sics.ubi.swing.SelectButton"),
        )

    def test_pda_form(self):
        form = parse_form(load_fixture("forms/calendar_pda.form"))
        assert form.id == "calendar-pda"
        assert form.entries == (
            FormEntry(FormSelector(name="nextSelect"), DIRECTIVE,
                      "text.buttons exclude=month"),
        )


class TestParse:
    def test_empty_form(self):
        form = parse_form("<form id='f'/>")
        assert form == CustomizationForm("f", None, ())

    def test_parent_attribute(self):
        form = parse_form("<form id='child' parent='base'/>")
        assert form.parent == "base"

    def test_combined_levels_nest(self):
        form = parse_form(
            "<form id='f'><group name='cal'><element name='selection'>"
            "<id name='nav'><directive><data>text.menu</data></directive></id>"
            "</element></group></form>"
        )
        assert form.entries == (
            FormEntry(
                FormSelector(group="cal", kind=ActKind.SELECTION, name="nav"),
                DIRECTIVE, "text.menu",
            ),
        )

    def test_entries_attach_at_every_nesting_level(self):
        form = parse_form(
            "<form id='f'><group name='cal'>"
            "<directive><data>text.panel</data></directive>"
            "<id name='nav'><directive><data>text.menu</data></directive></id>"
            "</group></form>"
        )
        assert form.entries == (
            FormEntry(FormSelector(group="cal"), DIRECTIVE, "text.panel"),
            FormEntry(FormSelector(group="cal", name="nav"), DIRECTIVE,
                      "text.menu"),
        )

    def test_resource_entries(self):
        form = parse_form(
            "<element name='output'><resource><data>logo.png</data></resource>"
            "</element>"
        )
        assert form.entries[0].kind == RESOURCE

    def test_data_text_is_stripped(self):
        form = parse_form(
            "<id name='n'><directive><data>\n  text.label \n</data></directive></id>"
        )
        assert form.entries[0].data == "text.label"

    def test_directive_and_resource_may_share_a_selector(self):
        form = parse_form(
            "<id name='n'>"
            "<directive><data>text.label</data></directive>"
            "<resource><data>icon.png</data></resource>"
            "</id>"
        )
        assert len(form.entries) == 2

    @pytest.mark.parametrize("text, error", [
        ("no markup", MalformedDocument),
        ("<form id='f'>", MalformedDocument),
        ("<form id='f'>stray</form>", MalformedDocument),
        ("<group><directive><data>d</data></directive></group>", MalformedDocument),
        ("<form id='f'><group name='a'><group name='b'>"
         "<directive><data>d</data></directive></group></group></form>",
         MalformedDocument),
        ("<id name='n'><directive></directive></id>", MalformedDocument),
        ("<id name='n'><directive><data>a</data><data>b</data></directive></id>",
         MalformedDocument),
        ("<widget name='n'/>", forms.UnknownSelectorElement),
        ("<form id='f'><widget name='n'/></form>", forms.UnknownSelectorElement),
        ("<element name='spinner'><directive><data>d</data></directive></element>",
         forms.UnknownSelectorElement),
        ("<id name='n'><directive><font>big</font></directive></id>",
         forms.UnknownSelectorElement),
        ("<id name='n'><directive><data>a</data></directive>"
         "<directive><data>b</data></directive></id>", forms.DuplicateSelector),
        ("<form id='f'>"
         "<element name='output'><directive><data>a</data></directive></element>"
         "<element name='output'><directive><data>b</data></directive></element>"
         "</form>", forms.DuplicateSelector),
    ])
    def test_error_classification(self, text, error):
        with pytest.raises(error):
            parse_form(text)


class TestSerialize:
    def test_round_trip_random_forms(self):
        rng = random.Random(4262)
        for i in range(300):
            form = random_form(rng, form_id=f"f{i}",
                               parent="base" if rng.random() < 0.3 else None)
            assert parse_form(serialize_form(form)) == form

    def test_anonymous_form_round_trips(self):
        form = CustomizationForm(entries=(
            FormEntry(FormSelector(kind=ActKind.OUTPUT), DIRECTIVE, "text.label"),
        ))
        assert parse_form(serialize_form(form)) == form


class TestFlatten:
    def test_child_overrides_identical_selector_and_kind(self):
        sel = FormSelector(kind=ActKind.OUTPUT)
        parent = CustomizationForm("p", None, (FormEntry(sel, DIRECTIVE, "A"),))
        child = CustomizationForm("c", "p", (FormEntry(sel, DIRECTIVE, "B"),))
        flat = flatten([parent, child])
        assert flat.entries == (FormEntry(sel, DIRECTIVE, "B"),)
        assert flat.id == "c" and flat.parent is None

    def test_disjoint_selectors_union(self):
        parent = CustomizationForm("p", None, (
            FormEntry(FormSelector(kind=ActKind.OUTPUT), DIRECTIVE, "A"),
        ))
        child = CustomizationForm("c", "p", (
            FormEntry(FormSelector(name="n"), DIRECTIVE, "B"),
        ))
        assert set(flatten([parent, child]).entries) == (
            set(parent.entries) | set(child.entries)
        )

    def test_directive_does_not_shadow_resource(self):
        sel = FormSelector(name="n")
        parent = CustomizationForm("p", None, (FormEntry(sel, RESOURCE, "icon"),))
        child = CustomizationForm("c", "p", (FormEntry(sel, DIRECTIVE, "text.label"),))
        assert len(flatten([parent, child]).entries) == 2

    def test_repeated_form_raises(self):
        form = CustomizationForm("f")
        with pytest.raises(forms.CyclicHierarchy):
            flatten([form, form])

    def test_flatten_agrees_with_replay_oracle(self):
        rng = random.Random(515)
        for _ in range(200):
            chain = [random_form(rng, form_id=f"f{i}")
                     for i in range(rng.randint(1, 4))]
            flat = flatten(chain)
            oracle = {}
            for form in chain:
                for entry in form.entries:
                    oracle[(entry.selector, entry.kind)] = entry
            assert set(flat.entries) == set(oracle.values())
            assert {(e.selector, e.kind) for e in flat.entries} == set(oracle)


class TestParentChain:
    REGISTRY = {
        "base": CustomizationForm("base"),
        "mid": CustomizationForm("mid", "base"),
        "leaf": CustomizationForm("leaf", "mid"),
        "selfish": CustomizationForm("selfish", "selfish"),
        "ping": CustomizationForm("ping", "pong"),
        "pong": CustomizationForm("pong", "ping"),
    }

    def test_chain_is_root_first(self):
        chain = parent_chain(self.REGISTRY["leaf"], self.REGISTRY)
        assert [f.id for f in chain] == ["base", "mid", "leaf"]

    def test_cycles_detected(self):
        with pytest.raises(forms.CyclicHierarchy):
            parent_chain(self.REGISTRY["selfish"], self.REGISTRY)
        with pytest.raises(forms.CyclicHierarchy):
            parent_chain(self.REGISTRY["ping"], self.REGISTRY)

    def test_unknown_parent_raises_key_error(self):
        with pytest.raises(KeyError):
            parent_chain(CustomizationForm("x", "ghost"), self.REGISTRY)


def brute_force_resolution(form, kind, name, group):
    """Independent oracle: score every entry, take the max-rank directive."""
    matches = [e for e in form.entries if e.selector.matches(kind, name, group)]
    directives = sorted(
        (e for e in matches if e.kind == DIRECTIVE),
        key=lambda e: e.selector.rank,
    )
    winner = directives[-1] if directives else None
    resources = sorted(
        (e for e in matches if e.kind == RESOURCE),
        key=lambda e: -e.selector.rank,
    )
    return winner, tuple(e.data for e in resources)


class TestResolve:
    ACT = InteractionAct("a1", ActKind.SELECTION, name="nav", group="cal",
                         response_number=1,
                         alternatives=(Alternative("b1", "x", "x"),))

    def test_type_level_fixture_resolves_outputs(self):
        form = parse_form(load_fixture("forms/output_type_mapping.form"))
        hit = resolve(InteractionAct("a", ActKind.OUTPUT), form)
        assert hit.directive == "se.sics.ubi.swing.OutputLabel"
        assert not hit.is_default
        miss = resolve(InteractionAct("b", ActKind.INPUT), form)
        assert miss.is_default and miss.directive is None

    def test_name_entry_beats_type_entry(self):
        form = CustomizationForm("f", None, (
            FormEntry(FormSelector(kind=ActKind.SELECTION), DIRECTIVE, "by-kind"),
            FormEntry(FormSelector(name="nav"), DIRECTIVE, "by-name"),
        ))
        assert resolve(self.ACT, form).directive == "by-name"

    def test_empty_form_is_default(self):
        hit = resolve(InteractionAct("a", ActKind.INPUT), forms.EMPTY_FORM)
        assert hit is forms.DEFAULT_PRESENTATION

    def test_groups_resolve_without_a_kind(self):
        form = CustomizationForm("f", None, (
            FormEntry(FormSelector(kind=ActKind.OUTPUT), DIRECTIVE, "by-kind"),
            FormEntry(FormSelector(group="cal"), DIRECTIVE, "by-group"),
        ))
        node = IslGroup("g1", group="cal")
        assert resolve(node, form).directive == "by-group"

    def test_resources_collect_most_specific_first(self):
        form = CustomizationForm("f", None, (
            FormEntry(FormSelector(group="cal"), RESOURCE, "theme.css"),
            FormEntry(FormSelector(name="nav"), RESOURCE, "nav.png"),
        ))
        hit = resolve(self.ACT, form)
        assert hit.resources == ("nav.png", "theme.css")
        assert hit.directive is None and hit.source is None

    def test_exhaustive_shape_lattice_agrees_with_oracle(self):
        kind, name, group = ActKind.SELECTION, "nav", "cal"
        shapes = [
            FormSelector(
                group=group if has_g else None,
                kind=kind if has_k else None,
                name=name if has_n else None,
            )
            for has_g, has_k, has_n in itertools.product((True, False), repeat=3)
            if has_g or has_k or has_n
        ]
        for present in itertools.product((True, False), repeat=len(shapes)):
            entries = tuple(
                FormEntry(sel, DIRECTIVE, f"rank{sel.rank}")
                for sel, here in zip(shapes, present) if here
            )
            form = CustomizationForm("f", None, entries)
            hit = resolve_fields(form, kind=kind, name=name, group=group)
            winner, _ = brute_force_resolution(form, kind, name, group)
            if winner is None:
                assert hit.is_default
            else:
                assert hit.directive == winner.data
                assert hit.directive == f"rank{max(e.selector.rank for e in entries)}"

    def test_random_forms_agree_with_oracle(self):
        rng = random.Random(8181)
        for _ in range(500):
            form = random_form(rng)
            sel = random_selector(rng)
            coords = dict(kind=sel.kind, name=sel.name, group=sel.group)
            hit = resolve_fields(form, **coords)
            winner, resources = brute_force_resolution(form, **coords)
            assert hit.resources == resources
            if winner is None:
                assert hit.directive is None
            else:
                assert hit.directive == winner.data
                assert hit.source == winner

    def test_locality_of_non_matching_entries(self):
        rng = random.Random(2929)
        for _ in range(200):
            form = random_form(rng)
            sel = random_selector(rng)
            coords = dict(kind=sel.kind, name=sel.name, group=sel.group)
            before = resolve_fields(form, **coords)
            kept = tuple(
                e for e in form.entries
                if e.selector.matches(coords["kind"], coords["name"], coords["group"])
            )
            trimmed = CustomizationForm(form.id, None, kept)
            assert resolve_fields(trimmed, **coords) == before


class TestLoadForms:
    def test_loads_directory(self, fixtures_dir):
        registry = forms.load_forms(fixtures_dir / "forms")
        assert registry["calendar-pda"].entries
        assert registry["output_type_mapping"].id == ""
        assert registry["name_mapping"].entries[0].selector.name == "nextSelect"
