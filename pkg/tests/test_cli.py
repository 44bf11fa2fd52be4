"""Command-line behaviour: outputs, schemas, exit codes and determinism."""

import csv
import json

import numpy as np
import pytest

from wlia.cli import main
from wlia.images import GrayImage, save_image
from wlia.synthetic import speckle_array, step_edge_array, striped_array


def write_pgm(path, array, depth=8):
    image = GrayImage.from_array(np.asarray(array, dtype=float), source_depth=depth)
    save_image(image, path)
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def step_image(tmp_path):
    # step at column 4 so the leading 8x8 patches straddle it
    return write_pgm(tmp_path / "step.pgm", step_edge_array(16, 16, edge_col=4, low=20, high=200))


class TestWhogCommand:
    def test_outputs_and_row_count(self, step_image, tmp_path):
        out = tmp_path / "out"
        assert main(["whog", step_image, "--out", str(out)]) == 0
        rows = read_csv(out / "whog_patches.csv")
        assert len(rows) == 4
        assert list(rows[0]) == ["row", "col"] + [f"bin_{k}" for k in range(9)] + [
            "schema_version"
        ]
        pooled = json.loads((out / "whog_pooled.json").read_text())
        assert pooled["schema_version"] == 1
        assert pooled["patch_count"] == 4
        assert (out / "whog_rose.svg").read_text().startswith("<?xml")

    def test_step_edge_pooled_argmax(self, step_image, tmp_path):
        out = tmp_path / "out"
        main(["whog", step_image, "--out", str(out)])
        pooled = json.loads((out / "whog_pooled.json").read_text())
        bins = pooled["bins"]
        assert bins.index(max(bins)) == 4  # the bin containing pi/2

    def test_rose_grid_flag(self, step_image, tmp_path):
        out = tmp_path / "out"
        assert main(["whog", step_image, "--rose-grid", "--out", str(out)]) == 0
        text = (out / "whog_rose_grid.svg").read_text()
        assert text.startswith("<?xml")
        assert text.count("<circle") == 4  # one cell per patch

    def test_bad_sigmas_rejected(self, step_image, tmp_path):
        code = main(
            ["bench-noise", step_image, "--sigmas", "0.1,0.05", "--trials", "1",
             "--out", str(tmp_path)]
        )
        assert code == 2

    def test_constant_image_zero_bins(self, tmp_path):
        path = write_pgm(tmp_path / "flat.pgm", np.full((8, 8), 33.0))
        out = tmp_path / "out"
        main(["whog", path, "--out", str(out)])
        row = read_csv(out / "whog_patches.csv")[0]
        assert all(float(row[f"bin_{k}"]) == 0.0 for k in range(9))

    def test_missing_file_exit_code(self, tmp_path):
        assert main(["whog", str(tmp_path / "nope.pgm"), "--out", str(tmp_path)]) == 2

    def test_usage_error_exit_code(self):
        with pytest.raises(SystemExit) as err:
            main(["whog"])
        assert err.value.code == 1


class TestHogCommand:
    def test_row_count_matches_whog(self, step_image, tmp_path):
        out_w = tmp_path / "w"
        out_h = tmp_path / "h"
        main(["whog", step_image, "--out", str(out_w)])
        main(["hog", step_image, "--out", str(out_h)])
        assert len(read_csv(out_h / "hog_patches.csv")) == len(
            read_csv(out_w / "whog_patches.csv")
        )

    def test_block_csv_emitted(self, step_image, tmp_path):
        out = tmp_path / "out"
        main(["hog", step_image, "--out", str(out)])
        blocks = read_csv(out / "hog_blocks.csv")
        assert len(blocks) == 1  # 2x2 patch grid -> one block
        assert len(blocks[0]) == 2 + 4 * 9 + 1

    def test_horizontal_ramp_mass_in_bin_zero(self, tmp_path):
        ramp = np.tile(np.arange(8, dtype=float) * 10.0, (8, 1))
        path = write_pgm(tmp_path / "ramp.pgm", ramp)
        out = tmp_path / "out"
        main(["hog", path, "--out", str(out)])
        pooled = json.loads((out / "hog_pooled.json").read_text())
        assert pooled["bins"][0] == pooled["total_magnitude"] > 0


class TestBenchCommand:
    def test_report_shape_and_zero_sigma(self, tmp_path):
        out = tmp_path / "out"
        code = main(
            ["bench-noise", "--sigmas", "0,0.1", "--trials", "5", "--out", str(out)]
        )
        assert code == 0
        rows = read_csv(out / "bench_noise.csv")
        assert len(rows) == 4  # |sigmas| x 2 methods
        zero_rows = [r for r in rows if float(r["sigma"]) == 0.0]
        assert all(float(r["stability"]) == 1.0 for r in zero_rows)
        assert (out / "bench_noise.svg").exists()

    def test_explicit_input_image(self, step_image, tmp_path):
        out = tmp_path / "out"
        code = main(
            ["bench-noise", step_image, "--sigmas", "0", "--trials", "2", "--out", str(out)]
        )
        assert code == 0
        assert len(read_csv(out / "bench_noise.csv")) == 2


class TestSmoothAndEdges:
    def test_two_valued_image_smooths_to_itself(self, tmp_path):
        rng = np.random.default_rng(11)
        img = np.where(rng.random((9, 9)) > 0.5, 200.0, 40.0)
        path = write_pgm(tmp_path / "tv.pgm", img)
        out = tmp_path / "out"
        assert main(["smooth", path, "--patch", "3", "--stride", "3", "--out", str(out)]) == 0
        from wlia.images import load_image

        smoothed = load_image(out / "smoothed.pgm")
        assert np.array_equal(smoothed.as_2d(), img)

    def test_constant_image_zero_edges(self, tmp_path):
        path = write_pgm(tmp_path / "flat.pgm", np.full((9, 9), 120.0))
        out = tmp_path / "out"
        assert main(["edges", path, "--out", str(out)]) == 0
        from wlia.images import load_image

        edge = load_image(out / "edge_map.pgm")
        assert edge.source_depth == 16
        assert np.all(edge.pixels == 0.0)

    def test_threshold_flag_emits_binary(self, tmp_path):
        img = step_edge_array(9, 9, edge_col=4, low=10, high=240)
        path = write_pgm(tmp_path / "step.pgm", img)
        out = tmp_path / "out"
        assert main(["edges", path, "--threshold", "--out", str(out)]) == 0
        assert (out / "edge_binary.pgm").exists()
        meta = json.loads((out / "edge_threshold.json").read_text())
        assert meta["threshold"] > 0.0


class TestEntropyCommand:
    def make_cohort(self, tmp_path, n_textured=2, n_striped=2, with_survival=True):
        mask = np.full((24, 24), 255.0)
        mask_path = write_pgm(tmp_path / "mask.pgm", mask)
        rows = []
        survival = []
        idx = 0
        for _ in range(n_textured):
            img = speckle_array(24, 24, seed=idx, low=0, high=255)
            path = write_pgm(tmp_path / f"s{idx}.pgm", img)
            rows.append((f"s{idx}", path, mask_path))
            survival.append((f"s{idx}", 1.0 + idx, 1))
            idx += 1
        for _ in range(n_striped):
            img = striped_array(24, 24, period=2, low=60, high=200)
            path = write_pgm(tmp_path / f"s{idx}.pgm", img)
            rows.append((f"s{idx}", path, mask_path))
            survival.append((f"s{idx}", 5.0 + idx, 1))
            idx += 1
        manifest = tmp_path / "manifest.csv"
        with open(manifest, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample_id", "image", "mask"])
            writer.writerows(rows)
        surv_path = None
        if with_survival:
            surv_path = tmp_path / "survival.csv"
            with open(surv_path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["sample_id", "time", "event"])
                writer.writerows(survival)
        return manifest, surv_path

    def test_full_pipeline(self, tmp_path):
        manifest, surv = self.make_cohort(tmp_path)
        out = tmp_path / "out"
        code = main(
            [
                "entropy",
                str(manifest),
                "--survival",
                str(surv),
                "--count",
                "6",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        rows = read_csv(out / "entropy.csv")
        assert len(rows) == 4
        by_id = {r["sample_id"]: r for r in rows}
        # speckle entropy is high, stripes low; the median split sees that
        assert by_id["s0"]["group"] == "high"
        assert by_id["s3"]["group"] == "low"
        report = json.loads((out / "entropy_report.json").read_text())
        assert report["group_sizes"] == {"high": 2, "low": 2}
        assert 0.0 <= report["p_value"] <= 1.0

    def test_identical_samples_tie_to_low(self, tmp_path):
        mask_path = write_pgm(tmp_path / "mask.pgm", np.full((24, 24), 255.0))
        img_path = write_pgm(tmp_path / "img.pgm", speckle_array(24, 24, seed=3, low=0, high=255))
        manifest = tmp_path / "manifest.csv"
        with open(manifest, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample_id", "image", "mask"])
            writer.writerow(["twin_a", img_path, mask_path])
            writer.writerow(["twin_b", img_path, mask_path])
        surv = tmp_path / "survival.csv"
        with open(surv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample_id", "time", "event"])
            writer.writerow(["twin_a", 1.0, 1])
            writer.writerow(["twin_b", 2.0, 1])
        out = tmp_path / "out"
        code = main(["entropy", str(manifest), "--survival", str(surv), "--count", "5",
                     "--seed", "0", "--out", str(out)])
        rows = read_csv(out / "entropy.csv")
        assert rows[0]["entropy"] == rows[1]["entropy"]
        # the tie rule sends both to the low group, leaving the high group
        # empty, which the log-rank step reports as a row-level error
        assert all(r["group"] == "low" for r in rows)
        report = json.loads((out / "entropy_report.json").read_text())
        assert report["sample_count"] == 2
        assert any("log-rank" in err["error"] for err in report["errors"])
        assert code == 3

    def test_bad_row_partial_failure(self, tmp_path):
        manifest, surv = self.make_cohort(tmp_path)
        with open(manifest, "a", newline="") as fh:
            csv.writer(fh).writerow(["ghost", "missing.pgm", "missing.pgm"])
        out = tmp_path / "out"
        code = main(
            ["entropy", str(manifest), "--survival", str(surv), "--count", "4", "--out", str(out)]
        )
        assert code == 3
        report = json.loads((out / "entropy_report.json").read_text())
        assert len(report["errors"]) == 1
        assert report["errors"][0]["sample_id"] == "ghost"
        assert len(read_csv(out / "entropy.csv")) == 4

    def test_all_rows_failing(self, tmp_path):
        manifest = tmp_path / "manifest.csv"
        with open(manifest, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample_id", "image", "mask"])
            writer.writerow(["x", "gone.pgm", "gone.pgm"])
        assert main(["entropy", str(manifest), "--count", "4", "--out", str(tmp_path / "o")]) == 2

    def test_count_required(self, tmp_path):
        manifest, _ = self.make_cohort(tmp_path, with_survival=False)
        with pytest.raises(SystemExit) as err:
            main(["entropy", str(manifest), "--out", str(tmp_path / "o")])
        assert err.value.code == 1


class TestOutputSchemas:
    EXPECTED_CSV_COLUMNS = {
        "whog_patches.csv": ["row", "col"] + [f"bin_{k}" for k in range(9)],
        "hog_patches.csv": ["row", "col"] + [f"bin_{k}" for k in range(9)],
        "hog_blocks.csv": ["block_row", "block_col"] + [f"v_{k}" for k in range(36)],
        "bench_noise.csv": ["sigma", "method", "stability", "mean_entropy"],
        "entropy.csv": ["sample_id", "patch_count", "entropy", "group"],
    }

    def test_every_emitted_file_matches_its_schema(self, step_image, tmp_path):
        entropy_case = TestEntropyCommand()
        manifest, surv = entropy_case.make_cohort(tmp_path)
        out = tmp_path / "all"
        assert main(["whog", step_image, "--rose-grid", "--out", str(out)]) == 0
        assert main(["hog", step_image, "--out", str(out)]) == 0
        assert main(["bench-noise", "--sigmas", "0,0.1", "--trials", "2", "--out", str(out)]) == 0
        assert main(["edges", step_image, "--threshold", "--out", str(out)]) == 0
        assert (
            main(["entropy", str(manifest), "--survival", str(surv), "--count", "4",
                  "--out", str(out)])
            == 0
        )

        seen = {"csv": 0, "json": 0, "svg": 0}
        for path in sorted(out.iterdir()):
            if path.suffix == ".csv":
                with open(path, newline="") as fh:
                    reader = csv.reader(fh)
                    header = next(reader)
                    assert header[:-1] == self.EXPECTED_CSV_COLUMNS[path.name], path.name
                    assert header[-1] == "schema_version"
                    for row in reader:
                        assert row[-1] == "1"
                        assert len(row) == len(header)
                seen["csv"] += 1
            elif path.suffix == ".json":
                payload = json.loads(path.read_text())
                assert payload["schema_version"] == 1, path.name
                seen["json"] += 1
            elif path.suffix == ".svg":
                text = path.read_text()
                assert text.startswith("<?xml")
                assert "</svg>" in text
                seen["svg"] += 1
        assert seen == {"csv": 5, "json": 4, "svg": 4}


class TestDeterminism:
    def test_repeated_runs_byte_identical(self, step_image, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        for out in (out_a, out_b):
            main(["whog", step_image, "--out", str(out)])
            main(["bench-noise", "--sigmas", "0,0.05", "--trials", "3", "--seed", "1",
                  "--out", str(out)])
        for name in ("whog_patches.csv", "whog_pooled.json", "whog_rose.svg",
                     "bench_noise.csv", "bench_noise.svg"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
