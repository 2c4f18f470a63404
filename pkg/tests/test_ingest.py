import numpy as np
import pytest

from morbidity_model.config import ModelConfig, RunConfig, toy_model_config
from morbidity_model.errors import (
    AsymmetricMatrix,
    ConfigError,
    DanglingAdjacency,
    IndexOutOfRange,
    MalformedRow,
    MissingValue,
    NonpositiveSpan,
    NonzeroDiagonal,
)
from morbidity_model.ingest import (
    LocationTable,
    build_design,
    load_data_dir,
    load_dataset,
    respondent_columns,
    standardize_age,
    write_dataset,
    write_locations,
)


def _write_respondents(path, rows, num_diseases=5):
    lines = [",".join(respondent_columns(num_diseases))]
    lines += [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _row(rid, location=0, cohort=0, ys=(0, 1, 0, 0, 1), sex=1, age=55):
    return [rid, location, cohort, *ys, sex, 0, 1, 0, age]


class TestDesign:
    @pytest.mark.parametrize("age, expected", [(51, 0.0), (62, 1.0), (56.5, 0.5)])
    def test_standardize_age(self, age, expected):
        assert standardize_age(age, 51, 11) == pytest.approx(expected)

    def test_nonpositive_span_is_rejected(self):
        with pytest.raises(NonpositiveSpan):
            standardize_age(55, 51, 0)

    def test_reference_profile_is_intercept_only(self):
        x = build_design({"sex": 0, "edu": 0, "eco": 0, "smoke": 0, "age": 51}, ModelConfig())
        np.testing.assert_array_equal(x, [1, 0, 0, 0, 0, 0, 0])

    def test_age_sex_interaction(self):
        config = ModelConfig()
        male = build_design({"sex": 1, "edu": 0, "eco": 0, "smoke": 0, "age": 62}, config)
        female = build_design({"sex": 0, "edu": 0, "eco": 0, "smoke": 0, "age": 62}, config)
        np.testing.assert_array_equal(male, [1, 1, 0, 0, 0, 1, 1])
        np.testing.assert_array_equal(female, [1, 0, 0, 0, 0, 1, 0])

    def test_roster_subset_keeps_canonical_order(self):
        config = toy_model_config()
        x = build_design({"sex": 1, "edu": 1, "eco": 1, "smoke": 1, "age": 56.5}, config)
        np.testing.assert_allclose(x, [1, 1, 1, 0.5, 0.5])

    def test_roster_out_of_order_is_a_config_error(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"model": {"covariates": ["intercept", "age", "sex"]}})


class TestLocationTable:
    def test_minimal_table(self, two_location_table):
        np.testing.assert_array_equal(two_location_table.degree, [1, 1])
        assert two_location_table.num_regions == 1
        assert two_location_table.edges() == [(0, 1)]

    def test_asymmetric_distance(self):
        with pytest.raises(AsymmetricMatrix):
            LocationTable(region_of=np.array([0, 0]), adjacency=((1,), (0,)),
                          distance_matrices=(np.array([[0.0, 1.0], [2.0, 0.0]]),))

    def test_nonzero_diagonal(self):
        with pytest.raises(NonzeroDiagonal):
            LocationTable(region_of=np.array([0, 0]), adjacency=((1,), (0,)),
                          distance_matrices=(np.array([[0.5, 1.0], [1.0, 0.0]]),))

    def test_one_sided_adjacency(self):
        with pytest.raises(DanglingAdjacency):
            LocationTable(region_of=np.array([0, 0]), adjacency=((1,), ()))


class TestLoader:
    def test_well_formed_file(self, tmp_path):
        path = tmp_path / "respondents.csv"
        _write_respondents(path, [_row("a"), _row("b", location=1), _row("c", cohort=2)])
        records = load_dataset(str(path), ModelConfig(), num_locations=2)
        assert [r.id for r in records] == ["a", "b", "c"]
        assert records[0].responses == [0, 1, 0, 0, 1]
        assert records[0].covariates[0] == 1.0

    def test_non_binary_response(self, tmp_path):
        path = tmp_path / "respondents.csv"
        _write_respondents(path, [_row("a", ys=(0, 2, 0, 0, 0))])
        with pytest.raises(MalformedRow) as info:
            load_dataset(str(path), ModelConfig())
        assert info.value.line == 2

    def test_location_out_of_range(self, tmp_path):
        path = tmp_path / "respondents.csv"
        _write_respondents(path, [_row("a", location=2)])
        with pytest.raises(IndexOutOfRange) as info:
            load_dataset(str(path), ModelConfig(), num_locations=2)
        assert info.value.field == "location"

    def test_missing_value_is_rejected(self, tmp_path):
        path = tmp_path / "respondents.csv"
        row = _row("a")
        row[-1] = "NA"
        _write_respondents(path, [row])
        with pytest.raises(MissingValue):
            load_dataset(str(path), ModelConfig())

    def test_age_outside_range(self, tmp_path):
        path = tmp_path / "respondents.csv"
        _write_respondents(path, [_row("a", age=70)])
        with pytest.raises(MalformedRow):
            load_dataset(str(path), ModelConfig())

    def test_bytes_that_are_not_utf8(self, tmp_path):
        path = tmp_path / "respondents.csv"
        _write_respondents(path, [_row("a")])
        path.write_bytes(path.read_bytes() + b"b\xff,0,0,0,1,0,0,1,1,0,1,0,55\n")
        with pytest.raises(MalformedRow) as info:
            load_dataset(str(path), ModelConfig())
        assert "respondents.csv" in info.value.reason

    def test_location_file_that_is_not_utf8(self, tmp_path, gradient_data, gradient_config):
        records, table = gradient_data
        write_dataset(records, str(tmp_path / "respondents.csv"), gradient_config)
        write_locations(table, str(tmp_path))
        (tmp_path / "locations.csv").write_bytes(b"location,region\n0,\xff\n")
        with pytest.raises(MalformedRow):
            load_data_dir(str(tmp_path), gradient_config)

    def test_data_dir_survives_a_write(self, tmp_path, gradient_data, gradient_config):
        records, table = gradient_data
        write_dataset(records, str(tmp_path / "respondents.csv"), gradient_config)
        write_locations(table, str(tmp_path))
        loaded, loaded_table = load_data_dir(str(tmp_path), gradient_config)
        assert [r.id for r in loaded] == [r.id for r in records]
        assert loaded_table.adjacency == table.adjacency
        np.testing.assert_allclose(loaded[5].covariates, records[5].covariates, atol=1e-12)
        np.testing.assert_allclose(loaded_table.distance_matrices[0], table.distance_matrices[0], atol=1e-12)

    def test_kernel_referencing_missing_matrix(self, tmp_path, gradient_data, gradient_config):
        records, table = gradient_data
        write_dataset(records, str(tmp_path / "respondents.csv"), gradient_config)
        write_locations(table, str(tmp_path))
        with pytest.raises(ConfigError):
            load_data_dir(str(tmp_path), ModelConfig(num_diseases=2, covariates=["intercept", "sex", "age"],
                                                     num_cohorts=2))
