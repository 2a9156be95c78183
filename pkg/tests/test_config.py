"""Config parsing: flat key=value files and the sectioned settings file."""

import json

import pytest

from foodnet.config import (
    DeterminantsSettings,
    PageRankSettings,
    Settings,
    ShockSettings,
    load_settings,
    parse_calorie_file,
    parse_column_file,
    read_kv_file,
)
from foodnet.errors import ParseError
from foodnet.ingest import DEFAULT_CALORIES, Crop


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# read_kv_file


def test_kv_file_skips_comments_and_blanks(tmp_path):
    path = _write(
        tmp_path,
        "plain.cfg",
        "# leading comment\n\n  KeyOne = first value  \nkey_two=2\n   \n# tail\n",
    )
    assert read_kv_file(path) == {"keyone": "first value", "key_two": "2"}


def test_kv_file_splits_on_first_equals_only(tmp_path):
    path = _write(tmp_path, "eq.cfg", "formula = a = b\n")
    assert read_kv_file(path) == {"formula": "a = b"}


def test_kv_file_rejects_line_without_equals(tmp_path):
    path = _write(tmp_path, "bad.cfg", "wheat 3340000\n")
    with pytest.raises(ParseError, match="expected 'key = value'"):
        read_kv_file(path)


def test_kv_file_rejects_duplicate_key(tmp_path):
    path = _write(tmp_path, "dup.cfg", "wheat = 1\nWHEAT = 2\n")
    with pytest.raises(ParseError, match="duplicate key 'wheat'"):
        read_kv_file(path)


# ---------------------------------------------------------------------------
# calorie files


def test_calorie_file_overrides_all_staples(data_dir):
    table = parse_calorie_file(data_dir / "calories.cfg")
    assert table.coefficients == {
        Crop.WHEAT: 1_000_000.0,
        Crop.RICE: 2_000_000.0,
        Crop.MAIZE: 3_000_000.0,
        Crop.SOYBEANS: 4_000_000.0,
    }
    assert table.kcal(Crop.RICE, 2.5) == 5_000_000.0


def test_calorie_file_rejects_unknown_crop(tmp_path):
    path = _write(tmp_path, "c.cfg", "wheat = 1\nrice = 1\nmaize = 1\nsoybeans = 1\nquinoa = 9\n")
    with pytest.raises(ParseError, match="unknown crop 'quinoa'"):
        parse_calorie_file(path)


def test_calorie_file_rejects_non_numeric_value(tmp_path):
    path = _write(tmp_path, "c.cfg", "wheat = lots\n")
    with pytest.raises(ParseError, match="not a number"):
        parse_calorie_file(path)


def test_calorie_file_requires_every_staple(tmp_path):
    path = _write(tmp_path, "c.cfg", "wheat = 3340000\nrice = 3600000\n")
    with pytest.raises(ParseError, match="missing crops"):
        parse_calorie_file(path)


def test_calorie_file_rejects_non_positive_coefficient(tmp_path):
    path = _write(tmp_path, "c.cfg", "wheat = 0\nrice = 1\nmaize = 1\nsoybeans = 1\n")
    with pytest.raises(ParseError, match="must be > 0"):
        parse_calorie_file(path)


# ---------------------------------------------------------------------------
# column-map files


def test_column_file_remaps_names_and_label_lists(data_dir):
    schema = parse_column_file(data_dir / "columns.cfg")
    assert schema.reporter == "Reporter Countries"
    assert schema.partner == "Partner Countries"
    assert schema.element == "Element"
    assert schema.units == ("tonnes", "t")
    assert schema.export_elements == ("Export Quantity",)
    # pipe-separated lists keep commas inside labels intact
    assert schema.item_labels[Crop.RICE] == ("Rice", "Rice, milled", "Rice, paddy")
    # crops without an override keep their defaults
    assert schema.item_labels[Crop.WHEAT] == ("Wheat",)


def test_column_file_rejects_unknown_key(tmp_path):
    path = _write(tmp_path, "cols.cfg", "reporter = From\nshipper = Who\n")
    with pytest.raises(ParseError, match="unknown column-map key 'shipper'"):
        parse_column_file(path)


def test_column_file_rejects_empty_list(tmp_path):
    path = _write(tmp_path, "cols.cfg", "units = |\n")
    with pytest.raises(ParseError, match="empty list"):
        parse_column_file(path)


# ---------------------------------------------------------------------------
# sectioned settings


def test_no_path_yields_defaults():
    settings = load_settings(None)
    assert settings == Settings()
    assert settings.pagerank == PageRankSettings(
        damping=0.85, tolerance=1e-10, max_iter=10000, weighted=True
    )
    assert settings.shock == ShockSettings(p_step=0.02, replications=100, q_steps=10)
    assert settings.determinants.p_enter == 0.05
    assert settings.determinants.p_remove == 0.10
    assert settings.calories.coefficients == DEFAULT_CALORIES


def test_settings_file_overrides_land_where_expected(data_dir):
    settings = load_settings(data_dir / "settings.cfg")
    assert settings.calories.coefficients[Crop.WHEAT] == 3_340_000.0
    # untouched crops keep the shipped coefficient
    assert settings.calories.coefficients[Crop.RICE] == DEFAULT_CALORIES[Crop.RICE]
    assert settings.pagerank.damping == 0.9
    assert settings.pagerank.max_iter == 500
    assert settings.pagerank.tolerance == 1e-10  # untouched field
    assert settings.community.max_sweeps == 50
    assert settings.shock == ShockSettings(p_step=0.25, replications=7, q_steps=4)
    assert settings.determinants.ridge_lambda == 0.5
    assert settings.determinants.trees == 50
    assert settings.determinants == DeterminantsSettings(ridge_lambda=0.5, trees=50)
    # sections absent from the file stay at defaults entirely
    assert settings.hits == Settings().hits


def test_settings_columns_section_matches_flat_parser(tmp_path):
    path = _write(
        tmp_path,
        "s.cfg",
        "[columns]\nreporter = From\nunits = t | tonnes\nmaize_labels = Maize | Corn\n",
    )
    schema = load_settings(path).columns
    assert schema.reporter == "From"
    assert schema.units == ("t", "tonnes")
    assert schema.item_labels[Crop.MAIZE] == ("Maize", "Corn")


def test_settings_rejects_unknown_section(tmp_path):
    path = _write(tmp_path, "s.cfg", "[networks]\np_step = 0.1\n")
    with pytest.raises(ParseError, match=r"unknown section \[networks\]"):
        load_settings(path)


def test_settings_rejects_unknown_key_in_section(tmp_path):
    path = _write(tmp_path, "s.cfg", "[shock]\nstride = 0.1\n")
    with pytest.raises(ParseError, match="unknown key 'stride'"):
        load_settings(path)


def test_settings_rejects_unknown_calorie_crop(tmp_path):
    path = _write(tmp_path, "s.cfg", "[calories]\nbarley = 100\n")
    with pytest.raises(ParseError, match="unknown crop 'barley'"):
        load_settings(path)


@pytest.mark.parametrize(
    "raw,expected",
    [("1", True), ("true", True), ("YES", True), ("on", True),
     ("0", False), ("False", False), ("no", False), ("OFF", False)],
)
def test_settings_boolean_spellings(tmp_path, raw, expected):
    path = _write(tmp_path, "s.cfg", f"[pagerank]\nweighted = {raw}\n")
    assert load_settings(path).pagerank.weighted is expected


def test_settings_rejects_unparseable_boolean(tmp_path):
    path = _write(tmp_path, "s.cfg", "[pagerank]\nweighted = maybe\n")
    with pytest.raises(ParseError, match="expected a boolean"):
        load_settings(path)


def test_settings_rejects_unparseable_number(tmp_path):
    path = _write(tmp_path, "s.cfg", "[shock]\nreplications = many\n")
    with pytest.raises(ParseError, match="expected int"):
        load_settings(path)


def test_settings_rejects_malformed_ini(tmp_path):
    path = _write(tmp_path, "s.cfg", "damping = 0.9\n")  # key before any section
    with pytest.raises(ParseError):
        load_settings(path)


def test_to_dict_is_json_ready(data_dir):
    snapshot = load_settings(data_dir / "settings.cfg").to_dict()
    text = json.dumps(snapshot, sort_keys=True)
    back = json.loads(text)
    assert back["calories"]["wheat"] == 3_340_000.0
    assert back["pagerank"]["damping"] == 0.9
    assert back["shock"] == {"p_step": 0.25, "replications": 7, "q_steps": 4}
    assert back["columns"]["item_labels"]["rice"] == ["Rice", "Rice, milled"]
