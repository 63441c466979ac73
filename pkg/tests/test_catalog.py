import pytest

from upcoding_rmtl.catalog import (
    CatalogError,
    HccCatalog,
    HccEntry,
    SeveritySet,
    dump_catalog,
    load_catalog,
    severity_set_of,
)


def test_bundled_catalog_size(catalog):
    assert len(catalog) == 115


def test_dementia_hierarchy(catalog):
    assert catalog.competing(125) == (126, 127)
    assert catalog.competing(126) == (127,)
    assert catalog.competing(127) == ()
    assert catalog.excluded_by(126) == {125, 127}


def test_heart_arrhythmia_is_hierarchy_free(catalog):
    assert catalog.competing(238) == ()
    assert 238 in catalog.hierarchy_free()
    assert severity_set_of(catalog, 238).members == (238,)


def test_severity_sets(catalog):
    dementia = severity_set_of(catalog, 126)
    assert dementia.members == (127, 126, 125)
    assert dementia.k == 3 and dementia.index(125) == 3
    assert severity_set_of(catalog, 35).members == (38, 37, 36, 35)
    with pytest.raises(KeyError):
        dementia.index(238)


def test_non_linear_hierarchy_has_no_severity_order(catalog):
    assert not catalog.is_chain(62)
    with pytest.raises(CatalogError, match="non-linear"):
        severity_set_of(catalog, 62)


def test_validate_set(catalog):
    catalog.validate_set([238, 127, 23])
    with pytest.raises(CatalogError):
        catalog.validate_set([125, 127])
    with pytest.raises(CatalogError):
        catalog.validate_set([9999])


def test_round_trip(tmp_path, catalog):
    path = tmp_path / "catalog.csv"
    text = dump_catalog(catalog, path)
    again = load_catalog(path)
    assert dump_catalog(again) == text
    assert again.exclusion_pairs() == catalog.exclusion_pairs()


def test_cycle_is_rejected():
    with pytest.raises(CatalogError, match="cyclic"):
        HccCatalog({1: HccEntry(1, "a", (2,)), 2: HccEntry(2, "b", (1,))})


def test_unknown_competing_event():
    with pytest.raises(CatalogError):
        HccCatalog({1: HccEntry(1, "a", (3,))})


@pytest.mark.parametrize(
    "body, message",
    [
        ("hcc,description\n1,a\n", "header"),
        ("hcc,description,competing\n1,a\n", ":2:"),
        ("hcc,description,competing\nx,a,\n", "non-integer"),
        ("hcc,description,competing\n1,a,\n1,b,\n", "duplicate"),
    ],
)
def test_parse_errors(tmp_path, body, message):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(CatalogError, match=message):
        load_catalog(path)


def test_severity_set_rejects_duplicates():
    with pytest.raises(CatalogError):
        SeveritySet((1, 1))
