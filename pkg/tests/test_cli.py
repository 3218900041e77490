import json
import tempfile
import unittest
from pathlib import Path

from click.testing import CliRunner

from categorytrees.cli import cli
from support import IRIS_CSV, IRIS_FEATURES, two_blobs, write_csv


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.runner = CliRunner()
        blobs = two_blobs()
        self.data = write_csv(
            self.tmp / "blobs.csv", ["c", "a", "b"], [[r.category, *r.features] for r in blobs.rows]
        )

    def tearDown(self):
        self._tmp.cleanup()

    def config(self, data=None, normalize=False, name="run.yaml", extra=""):
        path = self.tmp / name
        path.write_text(
            f"dataset:\n"
            f"  path: {data or self.data}\n"
            f"  category_columns: [c]\n"
            f"  feature_columns: [a, b]\n"
            f"  normalize: {'true' if normalize else 'false'}\n"
            f"output_dir: {self.tmp / 'out'}\n" + extra,
            encoding="utf-8",
        )
        return str(path)

    def invoke(self, *args):
        return self.runner.invoke(cli, list(args))


class TestTrain(CliTestCase):
    def test_summary_on_stdout(self):
        result = self.invoke("train", "--config", self.config())
        self.assertEqual(result.exit_code, 0, result.output)
        summary = json.loads(result.stdout)
        self.assertEqual(summary["rows"], 50)
        self.assertEqual(summary["category_count"], 2)
        self.assertEqual(summary["foreign_assignments"], 0)
        self.assertTrue((self.tmp / "out" / "forest.json").is_file())
        self.assertTrue((self.tmp / "out" / "summary.json").is_file())

    def test_forest_json_is_byte_identical_across_runs(self):
        first = self.invoke("train", "--config", self.config(), "--output-dir", str(self.tmp / "one"))
        second = self.invoke("train", "--config", self.config(), "--output-dir", str(self.tmp / "two"))
        self.assertEqual((first.exit_code, second.exit_code), (0, 0))
        self.assertEqual(
            (self.tmp / "one" / "forest.json").read_bytes(), (self.tmp / "two" / "forest.json").read_bytes()
        )

    def test_table_format(self):
        result = self.invoke("train", "--config", self.config(), "--format", "table")
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("rows: 50", result.stdout.splitlines())

    def test_verbose_logs_go_to_stderr(self):
        result = self.invoke("-v", "train", "--config", self.config())
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("loaded 50 rows", result.stderr)
        json.loads(result.stdout)

    def test_empty_dataset_fails(self):
        empty = write_csv(self.tmp / "empty.csv", ["c", "a", "b"], [])
        result = self.invoke("train", "--config", self.config(data=empty))
        self.assertNotEqual(result.exit_code, 0)
        self.assertIn("empty batch", result.stderr)
        self.assertEqual(result.stdout, "")

    def test_missing_data_file_fails(self):
        result = self.invoke("train", "--config", self.config(data=self.tmp / "absent.csv"))
        self.assertNotEqual(result.exit_code, 0)
        self.assertIn("io error", result.stderr)

    def test_invalid_target_flag(self):
        result = self.invoke("train", "--config", self.config(), "--target", "0")
        self.assertNotEqual(result.exit_code, 0)
        self.assertIn("invalid target", result.stderr)


class TestRecluster(CliTestCase):
    def test_json_output(self):
        result = self.invoke("recluster", "--config", self.config())
        self.assertEqual(result.exit_code, 0, result.output)
        data = json.loads(result.stdout)
        self.assertEqual(sorted(data["clusters"]["clusters"]), ["A", "B"])
        self.assertEqual([r["column_name"] for r in data["variance"]], ["a", "b"])
        self.assertEqual(data["orphaned_clusters"], [])
        for name in ("clusters.json", "clusters.txt", "variance.json", "variance.txt"):
            self.assertTrue((self.tmp / "out" / name).is_file(), name)

    def test_table_output_with_trained_forest(self):
        self.assertEqual(self.invoke("train", "--config", self.config()).exit_code, 0)
        result = self.invoke(
            "recluster", "--config", self.config(), "--forest", str(self.tmp / "out" / "forest.json"),
            "--format", "table", "--cluster-label", "Blob",
        )
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn("Rows clustered for Blob (A)", result.stdout)
        self.assertIn("Var Before", result.stdout)

    def test_columns_flag(self):
        result = self.invoke("recluster", "--config", self.config(), "--columns", "b")
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertEqual([r["column_name"] for r in json.loads(result.stdout)["variance"]], ["b"])

    def test_feedback_pass_keeps_a_partition(self):
        result = self.invoke("recluster", "--config", self.config(), "--feedback-passes", "1", "--max-iters", "3")
        self.assertEqual(result.exit_code, 0, result.output)
        data = json.loads((self.tmp / "out" / "clusters.json").read_text(encoding="utf-8"))
        self.assertEqual(len(data["feedback"]), 1)
        self.assertEqual(data["feedback"][0], data["final"])
        members = sorted(rid for ids in data["final"]["clusters"].values() for rid in ids)
        self.assertEqual(members, list(range(50)))

    def test_forest_from_other_rows_fails_cleanly(self):
        self.assertEqual(self.invoke("train", "--config", self.config()).exit_code, 0)
        blobs = two_blobs(n_per=5, seed=3)
        other = write_csv(self.tmp / "small.csv", ["c", "a", "b"], [[r.category, *r.features] for r in blobs.rows])
        result = self.invoke(
            "recluster", "--config", self.config(data=other), "--forest", str(self.tmp / "out" / "forest.json")
        )
        self.assertEqual(result.exit_code, 1)
        self.assertIn("schema error", result.stderr)
        self.assertNotIn("Traceback", result.output)

    def test_forest_with_other_features_fails_cleanly(self):
        self.assertEqual(self.invoke("train", "--config", self.config()).exit_code, 0)
        path = self.tmp / "swapped.yaml"
        path.write_text(
            f"dataset:\n  path: {self.data}\n  category_columns: [c]\n  feature_columns: [b, a]\n"
            f"  normalize: false\noutput_dir: {self.tmp / 'out'}\n",
            encoding="utf-8",
        )
        result = self.invoke("recluster", "--config", str(path), "--forest", str(self.tmp / "out" / "forest.json"))
        self.assertEqual(result.exit_code, 1)
        self.assertIn("dimension mismatch", result.stderr)


class TestClassify(CliTestCase):
    def setUp(self):
        super().setUp()
        self.assertEqual(self.invoke("train", "--config", self.config()).exit_code, 0)

    def test_one_category_per_row(self):
        inputs = write_csv(self.tmp / "new.csv", ["a", "b"], [[0.21, 0.19], [0.79, 0.81], [0.2, 0.2]])
        result = self.invoke("classify", "--config", self.config(), "--input", str(inputs), "--format", "table")
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertEqual(result.stdout.splitlines(), ["A", "B", "A"])

    def test_json_keeps_row_ids(self):
        inputs = write_csv(self.tmp / "new.csv", ["a", "b"], [[0.8, 0.8], ["", 0.2], [0.2, 0.2]])
        result = self.invoke("classify", "--config", self.config(), "--input", str(inputs))
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertEqual(
            json.loads(result.stdout),
            [{"row_id": 0, "category": "B"}, {"row_id": 1, "category": None}, {"row_id": 2, "category": "A"}],
        )

    def test_table_marks_rows_it_cannot_classify(self):
        inputs = write_csv(self.tmp / "new.csv", ["a", "b"], [[0.8, 0.8], ["NA", 0.2], [0.2, 0.2], [0.2, "x"]])
        result = self.invoke("classify", "--config", self.config(), "--input", str(inputs), "--format", "table")
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertEqual(result.stdout.splitlines(), ["B", "?", "A", "?"])
        self.assertIn("2 input row(s) with missing values were not classified", result.stderr)

    def test_empty_input(self):
        inputs = write_csv(self.tmp / "new.csv", ["a", "b"], [])
        result = self.invoke("classify", "--config", self.config(), "--input", str(inputs))
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertEqual(json.loads(result.stdout), [])

    def test_untrained_forest(self):
        bogus = self.tmp / "bogus.json"
        bogus.write_text("{not json", encoding="utf-8")
        inputs = write_csv(self.tmp / "new.csv", ["a", "b"], [[0.2, 0.2]])
        result = self.invoke("classify", "--config", self.config(), "--input", str(inputs), "--forest", str(bogus))
        self.assertNotEqual(result.exit_code, 0)
        self.assertIn("untrained model", result.stderr)


class TestBench(CliTestCase):
    def test_separable_blobs(self):
        result = self.invoke("bench", "--config", self.config())
        self.assertEqual(result.exit_code, 0, result.output)
        summary = json.loads(result.stdout)
        self.assertEqual(summary["train_accuracy"], 1.0)
        self.assertIsNone(summary["holdout_accuracy"])

    def test_seeded_holdout_is_repeatable(self):
        args = ("bench", "--config", self.config(), "--seed", "5", "--holdout", "0.2")
        first, second = self.invoke(*args), self.invoke(*args)
        self.assertEqual(first.exit_code, 0, first.output)
        self.assertEqual(first.stdout, second.stdout)
        summary = json.loads(first.stdout)
        self.assertEqual((summary["train_rows"], summary["holdout_rows"]), (40, 10))

    def test_scaling_is_fitted_on_training_rows(self):
        rows = [[r.category, *r.features] for r in two_blobs().rows]
        rows.append(["B", 40.0, 40.0])
        data = write_csv(self.tmp / "outlier.csv", ["c", "a", "b"], rows)
        result = self.invoke("bench", "--config", self.config(data=data, normalize=True), "--holdout", "0.02")
        self.assertEqual(result.exit_code, 0, result.output)
        summary = json.loads(result.stdout)
        self.assertEqual((summary["train_rows"], summary["holdout_rows"]), (50, 1))
        train_max = max(max(r[1], r[2]) for r in rows[:-1])
        self.assertLessEqual(max(summary["scaling"]["max"]), train_max)

    def test_iris(self):
        path = self.tmp / "iris.yaml"
        path.write_text(
            f"dataset:\n  path: {IRIS_CSV}\n  category_columns: [species]\n"
            f"  feature_columns: [{', '.join(IRIS_FEATURES)}]\n",
            encoding="utf-8",
        )
        result = self.invoke("bench", "--config", str(path), "--output-dir", str(self.tmp / "iris"))
        self.assertEqual(result.exit_code, 0, result.output)
        summary = json.loads(result.stdout)
        self.assertEqual(summary["rows"], 150)
        self.assertGreaterEqual(summary["train_accuracy"], 0.9)


if __name__ == "__main__":
    unittest.main()
