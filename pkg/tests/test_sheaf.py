"""Gluing, the two sheaf checkers, shifts, products, and the plus step."""

import pytest

from qsheaf.coverage import (
    CoverFamily,
    Coverage,
    canonical_quantale_coverage,
    product_coverage,
    trivial_coverage,
)
from qsheaf.errors import (
    NotCompatible,
    NotLocale,
    QsheafError,
    SectionOutOfSet,
    SiteMismatch,
)
from qsheaf.moncat import ThinCategory
from qsheaf.presheaf import (
    iso_presheaves,
    parse_presheaf,
    terminal_presheaf,
    yoneda,
)
from qsheaf.quantale import build_standard
from qsheaf.sheaf import (
    VERDICT_PRESHEAF,
    VERDICT_SEPARATED,
    VERDICT_SHEAF,
    check_separated,
    check_sheaf,
    check_sheaf_equalizer,
    check_sheaf_orthogonal,
    compatible_families,
    glue,
    is_compatible,
    plus_construction,
    plus_with_unit,
    product_sheaf,
    shift_presheaf,
)


def site_of(name, param):
    q = build_standard(name, param)
    site = ThinCategory.from_quantale(q)
    return q, site, canonical_quantale_coverage(q, site)


def family(site, doms, target):
    return CoverFamily(target, [site.arrow(d, target) for d in doms])


def luk3_sep(site):
    return parse_presheaf(site, {
        "at": {"1": [], "h": ["p", "q"], "0": ["s"]},
        "res": {"0<=h": {"p": "s", "q": "s"}, "0<=1": {}, "h<=1": {}},
    })


def luk3_doubled_bottom(site):
    return parse_presheaf(site, {
        "at": {"1": ["a"], "h": ["b"], "0": ["c", "d"]},
        "res": {"h<=1": {"a": "b"}, "0<=1": {"a": "c"}, "0<=h": {"b": "c"}},
    })


def luk3_two_over_middle(site):
    """A sheaf with two global sections agreeing strictly below the top."""
    return parse_presheaf(site, {
        "at": {"1": ["a", "b"], "h": ["m"], "0": ["z"]},
        "res": {
            "h<=1": {"a": "m", "b": "m"},
            "0<=1": {"a": "z", "b": "z"},
            "0<=h": {"m": "z"},
        },
    })


def powerset2_sep(site):
    """Separated but missing the mixed gluings over {x} + {y}."""
    return parse_presheaf(site, {
        "at": {
            "{xy}": ["p00", "p11"],
            "{x}": ["x0", "x1"],
            "{y}": ["y0", "y1"],
            "{}": ["s"],
        },
        "res": {
            "{x}<={xy}": {"p00": "x0", "p11": "x1"},
            "{y}<={xy}": {"p00": "y0", "p11": "y1"},
            "{}<={xy}": {"p00": "s", "p11": "s"},
            "{}<={x}": {"x0": "s", "x1": "s"},
            "{}<={y}": {"y0": "s", "y1": "s"},
        },
    })


def powerset2_constant_two(site):
    """The constant 2-element presheaf; the empty cover breaks separation."""
    objs = ["{}", "{x}", "{xy}", "{y}"]
    return parse_presheaf(site, {
        "at": {u: ["0", "1"] for u in objs},
        "res": {
            f"{v}<={u}": {"0": "0", "1": "1"}
            for u in objs
            for v in objs
            if v != u and set(v[1:-1]) <= set(u[1:-1])
        },
    })


class TestGluing:
    def test_compatibility_and_overlap(self):
        q, site, cov = site_of("lukasiewicz_chain", 3)
        sep = luk3_sep(site)
        # {h,h} overlaps at h*h = 0 where everything collapses to s
        assert is_compatible(sep, family(site, ["h", "h"], "h"), ("p", "q"))
        two = parse_presheaf(site, {
            "at": {"1": [], "h": ["a", "b"], "0": ["u", "v"]},
            "res": {"0<=h": {"a": "u", "b": "v"}, "0<=1": {}, "h<=1": {}},
        })
        assert not is_compatible(two, family(site, ["0", "h"], "h"), ("u", "b"))
        assert is_compatible(two, family(site, ["0", "h"], "h"), ("v", "b"))

    def test_sections_are_validated(self):
        q, site, cov = site_of("lukasiewicz_chain", 3)
        sep = luk3_sep(site)
        fam = family(site, ["h", "h"], "h")
        with pytest.raises(SectionOutOfSet):
            is_compatible(sep, fam, ("p",))
        with pytest.raises(SectionOutOfSet):
            is_compatible(sep, fam, ("p", "zz"))

    def test_glue_rejects_incompatible(self):
        q, site, cov = site_of("lukasiewicz_chain", 3)
        two = parse_presheaf(site, {
            "at": {"1": [], "h": ["a", "b"], "0": ["u", "v"]},
            "res": {"0<=h": {"a": "u", "b": "v"}, "0<=1": {}, "h<=1": {}},
        })
        with pytest.raises(NotCompatible):
            glue(two, family(site, ["0", "h"], "h"), ("u", "b"))

    def test_glue_counts(self):
        q, site, cov = site_of("lukasiewicz_chain", 3)
        sep = luk3_sep(site)
        assert glue(sep, family(site, ["h", "h"], "h"), ("p", "q")) == []
        assert glue(sep, family(site, ["h"], "h"), ("p",)) == ["p"]

    def test_glue_multiple_and_empty_cover(self):
        q, site, cov = site_of("powerset_locale", 2)
        doubled = parse_presheaf(site, {
            "at": {"{xy}": ["z1", "z2"], "{x}": ["a"], "{y}": ["b"], "{}": ["s"]},
            "res": {
                "{x}<={xy}": {"z1": "a", "z2": "a"},
                "{y}<={xy}": {"z1": "b", "z2": "b"},
                "{}<={xy}": {"z1": "s", "z2": "s"},
                "{}<={x}": {"a": "s"},
                "{}<={y}": {"b": "s"},
            },
        })
        fam = family(site, ["{x}", "{y}"], "{xy}")
        assert glue(doubled, fam, ("a", "b")) == ["z1", "z2"]
        empty = CoverFamily("{}", [])
        assert glue(doubled, empty, ()) == ["s"]
        assert compatible_families(doubled, empty) == [()]


class TestVerdicts:
    def test_terminal_is_a_sheaf_with_crosschecks(self):
        q, site, cov = site_of("lukasiewicz_chain", 3)
        report = check_sheaf_equalizer(terminal_presheaf(site), cov)
        assert report.verdict == VERDICT_SHEAF and report.ok
        assert report.cross_checked == 27

    def test_crosscheck_threshold_zero_disables(self):
        q, site, cov = site_of("lukasiewicz_chain", 3)
        report = check_sheaf_equalizer(
            terminal_presheaf(site), cov, crosscheck_threshold=0
        )
        assert report.ok and report.cross_checked == 0

    def test_separated_not_sheaf(self):
        q, site, cov = site_of("lukasiewicz_chain", 3)
        sep = luk3_sep(site)
        for method in ("equalizer", "orthogonal"):
            report = check_sheaf(sep, cov, method=method)
            assert report.verdict == VERDICT_SEPARATED, report.summary()
        assert check_separated(sep, cov)

    def test_not_separated(self):
        q, site, cov = site_of("lukasiewicz_chain", 3)
        bad = luk3_doubled_bottom(site)
        for method in ("equalizer", "orthogonal"):
            report = check_sheaf(bad, cov, method=method)
            assert report.verdict == VERDICT_PRESHEAF, report.summary()
        assert not check_separated(bad, cov)
        # the failure is the empty cover of the bottom
        report = check_sheaf_equalizer(bad, cov)
        assert "-> 0" in report.witness

    def test_two_over_middle_is_a_sheaf(self):
        q, site, cov = site_of("lukasiewicz_chain", 3)
        report = check_sheaf(luk3_two_over_middle(site), cov)
        assert report.ok

    def test_method_dispatch(self):
        q, site, cov = site_of("lukasiewicz_chain", 3)
        t = terminal_presheaf(site)
        assert check_sheaf(t, cov, "equalizer").method == "equalizer"
        assert check_sheaf(t, cov, "orthogonal").method == "orthogonal"
        assert check_sheaf(t, cov, "both").method == "equalizer"
        with pytest.raises(QsheafError):
            check_sheaf(t, cov, "banana")

    def test_site_mismatch(self):
        q, site, cov = site_of("lukasiewicz_chain", 3)
        _, other, _ = site_of("truncated_nat", 3)
        with pytest.raises(SiteMismatch):
            check_sheaf_equalizer(terminal_presheaf(other), cov)
        with pytest.raises(SiteMismatch):
            check_sheaf_orthogonal(terminal_presheaf(other), cov)

    def test_checkers_agree_across_the_corpus(self):
        q, site, cov = site_of("lukasiewicz_chain", 3)
        triv = trivial_coverage(site, q)
        examples = [
            terminal_presheaf(site),
            luk3_sep(site),
            luk3_doubled_bottom(site),
            luk3_two_over_middle(site),
            yoneda(site, "h"),
            yoneda(site, "0"),
        ]
        for f in examples:
            for coverage in (cov, triv):
                eq = check_sheaf_equalizer(f, coverage)
                orth = check_sheaf_orthogonal(f, coverage)
                assert eq.verdict == orth.verdict, (
                    f"{f!r}: {eq.summary()} / {orth.summary()}"
                )

    def test_everything_is_a_sheaf_for_the_trivial_coverage(self):
        q, site, cov = site_of("lukasiewicz_chain", 3)
        triv = trivial_coverage(site, q)
        for f in (luk3_sep(site), luk3_doubled_bottom(site)):
            assert check_sheaf(f, triv).ok


class TestShift:
    def test_shift_of_terminal_is_terminal(self):
        q, site, cov = site_of("lukasiewicz_chain", 3)
        t = terminal_presheaf(site)
        for u in q.elements:
            assert shift_presheaf(t, u) == t

    def test_shifts_of_sheaves_are_sheaves(self):
        q, site, cov = site_of("lukasiewicz_chain", 3)
        sheaves = [
            terminal_presheaf(site),
            yoneda(site, "h"),
            yoneda(site, "0"),
            luk3_two_over_middle(site),
        ]
        for f in sheaves:
            assert check_sheaf(f, cov).ok
            for u in q.elements:
                shifted = shift_presheaf(f, u)
                assert check_sheaf(shifted, cov).ok, (f, u)

    def test_shift_of_non_sheaf_can_stay_broken(self):
        # shifting by the unit is the identity, so verdicts carry over
        q, site, cov = site_of("lukasiewicz_chain", 3)
        sep = luk3_sep(site)
        assert shift_presheaf(sep, "1") == sep


class TestProductSheaf:
    def test_terminal_times_terminal(self):
        q1, s1, c1 = site_of("lukasiewicz_chain", 3)
        q2, s2, c2 = site_of("chain_locale", 2)
        prod_cov = product_coverage(c1, c2)
        t = product_sheaf(terminal_presheaf(s1), terminal_presheaf(s2))
        assert iso_presheaves(t, terminal_presheaf(prod_cov.site)) is not None
        assert check_sheaf(t, prod_cov).ok

    def test_sheaf_times_sheaf_is_a_sheaf(self):
        q1, s1, c1 = site_of("lukasiewicz_chain", 3)
        q2, s2, c2 = site_of("chain_locale", 2)
        prod_cov = product_coverage(c1, c2)
        f = product_sheaf(yoneda(s1, "h"), terminal_presheaf(s2))
        assert check_sheaf(f, prod_cov).ok

    def test_sheaf_times_non_sheaf_fails(self):
        q1, s1, c1 = site_of("lukasiewicz_chain", 3)
        q2, s2, c2 = site_of("chain_locale", 2)
        prod_cov = product_coverage(c1, c2)
        broken = parse_presheaf(s2, {
            "at": {"1": ["a"], "0": ["c", "d"]},
            "res": {"0<=1": {"a": "c"}},
        })
        f = product_sheaf(terminal_presheaf(s1), broken)
        report = check_sheaf(f, prod_cov)
        assert report.verdict == VERDICT_PRESHEAF


class TestPlusConstruction:
    def test_requires_a_canonical_locale_site(self):
        q, site, cov = site_of("lukasiewicz_chain", 3)
        with pytest.raises(NotLocale):
            plus_construction(luk3_sep(site), cov)
        q2, site2, cov2 = site_of("powerset_locale", 2)
        explicit = Coverage(
            site2, list(cov2.all_families()), quantale=q2, mult_cap=2
        )
        with pytest.raises(NotLocale):
            plus_construction(terminal_presheaf(site2), explicit)

    def test_plus_fixes_sheaves(self):
        q, site, cov = site_of("powerset_locale", 2)
        for f in (terminal_presheaf(site), yoneda(site, "{x}")):
            plus, unit = plus_with_unit(f, cov)
            assert unit.src == f and unit.dst == plus
            assert unit.is_natural() and unit.is_iso()

    def test_plus_of_separated_is_a_sheaf(self):
        q, site, cov = site_of("powerset_locale", 2)
        sep = powerset2_sep(site)
        assert check_sheaf(sep, cov).verdict == VERDICT_SEPARATED
        plus, unit = plus_with_unit(sep, cov)
        sizes = {u: len(plus.value(u)) for u in ("{}", "{x}", "{y}", "{xy}")}
        assert sizes == {"{}": 1, "{x}": 2, "{y}": 2, "{xy}": 4}
        assert check_sheaf(plus, cov).ok
        assert unit.is_natural() and unit.is_mono() and not unit.is_iso()

    def test_plus_squared_reaches_the_section_sheaf(self):
        q, site, cov = site_of("powerset_locale", 2)
        const = powerset2_constant_two(site)
        assert check_sheaf(const, cov).verdict == VERDICT_PRESHEAF
        once = plus_construction(const, cov)
        sizes1 = {u: len(once.value(u)) for u in ("{}", "{x}", "{y}", "{xy}")}
        assert sizes1 == {"{}": 1, "{x}": 2, "{y}": 2, "{xy}": 2}
        assert check_sheaf(once, cov).verdict == VERDICT_SEPARATED
        twice = plus_construction(once, cov)
        sizes2 = {u: len(twice.value(u)) for u in ("{}", "{x}", "{y}", "{xy}")}
        assert sizes2 == {"{}": 1, "{x}": 2, "{y}": 2, "{xy}": 4}
        assert check_sheaf(twice, cov).ok

    def test_empty_cover_merges_bottom_sections(self):
        q, site, cov = site_of("powerset_locale", 2)
        doubled = parse_presheaf(site, {
            "at": {"{xy}": ["t"], "{x}": ["a"], "{y}": ["b"], "{}": ["c", "d"]},
            "res": {
                "{x}<={xy}": {"t": "a"},
                "{y}<={xy}": {"t": "b"},
                "{}<={xy}": {"t": "c"},
                "{}<={x}": {"a": "c"},
                "{}<={y}": {"b": "c"},
            },
        })
        assert not check_separated(doubled, cov)
        plus, _ = plus_with_unit(doubled, cov)
        assert len(plus.value("{}")) == 1
