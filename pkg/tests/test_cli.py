import numpy as np
import pytest

from wlsprecond import instances
from wlsprecond.cli import main
from wlsprecond.fourdvar import VARIANT_IDENTITY, VARIANT_ZERO, write_layout
from wlsprecond.linalg import write_matrix


def write_triple(tmp_path, a, atilde, w):
    paths = []
    for name, mat in (("a", a), ("atilde", atilde), ("w", w)):
        path = tmp_path / f"{name}.txt"
        write_matrix(path, mat)
        paths.append(str(path))
    return paths


def read_csv(path):
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
    return header, rows


class TestVerify:
    def test_exact_preconditioner_exits_clean(self, tmp_path, capsys):
        rng = np.random.default_rng(50)
        a = rng.standard_normal((3, 3))
        w = instances.random_spd(rng, 3).mat
        args = write_triple(tmp_path, a, a, w)
        assert main(["verify", *args]) == 0
        assert "containment" in capsys.readouterr().out

    def test_csv_report(self, tmp_path, capsys):
        alpha = 10.0
        a = np.array([[1.0, 0.0], [alpha, 1.0]])
        at = np.array([[1.0, 0.0], [alpha + 2.0, 1.0]])
        w = np.diag([alpha, 1.0])
        args = write_triple(tmp_path, a, at, w)
        out = tmp_path / "report.csv"
        assert main(["verify", *args, "--output", str(out),
                     "--kappa-w", str(alpha)]) == 0
        _, rows = read_csv(out)
        assert len(rows) == 1
        assert float(rows[0]["enorm"]) == pytest.approx(2.0)
        assert float(rows[0]["radius"]) == pytest.approx(2 + 6 * alpha)
        assert rows[0]["contained"] == "true"
        assert rows[0]["cond_bound_or_nan"] == "nan"

    def test_mismatched_dimensions(self, tmp_path, capsys):
        a = np.eye(3)
        at = np.eye(2)
        w = np.eye(3)
        args = write_triple(tmp_path, a, at, w)
        assert main(["verify", *args]) == 1
        assert "error" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        path = tmp_path / "a.txt"
        write_matrix(path, np.eye(2))
        assert main(["verify", str(path), str(path),
                     str(tmp_path / "nope.txt")]) == 1

    def test_indefinite_weight(self, tmp_path, capsys):
        a = np.eye(2)
        w = np.array([[1.0, 2.0], [2.0, 1.0]])
        args = write_triple(tmp_path, a, a, w)
        assert main(["verify", *args]) == 1

    def test_plot_file_created(self, tmp_path, capsys):
        rng = np.random.default_rng(51)
        a = rng.standard_normal((3, 3))
        w = instances.random_spd(rng, 3).mat
        args = write_triple(tmp_path, a, a, w)
        png = tmp_path / "verify.png"
        assert main(["verify", *args, "--plot", str(png)]) == 0
        assert png.stat().st_size > 0


class TestExampleSweep:
    def test_default_row_count(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["example-sweep", "--output", str(out)]) == 0
        header, rows = read_csv(out)
        assert header[0] == "alpha"
        assert len(rows) == 34
        assert {r["variant"] for r in rows} == {"plus2", "stable"}

    def test_closed_forms_match(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["example-sweep", "--points", "5", "--alpha-max", "1000",
                     "--output", str(out)]) == 0
        for row in read_csv(out)[1]:
            assert float(row["lambda_min"]) == pytest.approx(
                float(row["lambda_min_closed"]), rel=1e-9)
            assert float(row["lambda_max"]) == pytest.approx(
                float(row["lambda_max_closed"]), rel=1e-9)
            assert row["contained"] == "true"

    def test_single_variant(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["example-sweep", "--variant", "stable", "--points", "4",
                     "--output", str(out)]) == 0
        rows = read_csv(out)[1]
        assert len(rows) == 4
        assert all(r["variant"] == "stable" for r in rows)

    def test_bad_range(self, capsys):
        assert main(["example-sweep", "--alpha-min", "0.5"]) == 1
        assert "error" in capsys.readouterr().err

    def test_plot_file_created(self, tmp_path):
        out = tmp_path / "sweep.csv"
        png = tmp_path / "sweep.png"
        assert main(["example-sweep", "--points", "4", "--output", str(out),
                     "--plot", str(png)]) == 0
        assert png.stat().st_size > 0


class TestFigure1:
    def test_columns_and_monotonicity(self, tmp_path):
        out = tmp_path / "fig.csv"
        assert main(["figure1", "--points", "20", "--output", str(out)]) == 0
        header, rows = read_csv(out)
        assert header == ["kappa_w", "admissible_error", "g_M10", "g_M100"]
        adm = [float(r["admissible_error"]) for r in rows]
        assert all(b < a for a, b in zip(adm, adm[1:]))
        for row in rows:
            assert float(row["g_M10"]) < float(row["g_M100"])
            assert float(row["g_M100"]) < float(row["admissible_error"])
        # kappa = 1 endpoint of the threshold curve
        assert adm[0] == pytest.approx(np.sqrt(2) - 1, rel=1e-12)

    def test_custom_m_values(self, tmp_path):
        out = tmp_path / "fig.csv"
        assert main(["figure1", "--points", "5", "--m-values", "2,5",
                     "--output", str(out)]) == 0
        header, _ = read_csv(out)
        assert header == ["kappa_w", "admissible_error", "g_M2", "g_M5"]

    def test_invalid_m(self, capsys):
        assert main(["figure1", "--m-values", "1"]) == 1
        assert "error" in capsys.readouterr().err

    def test_plot_file_created(self, tmp_path):
        out = tmp_path / "fig.csv"
        png = tmp_path / "fig.png"
        assert main(["figure1", "--points", "5", "--output", str(out),
                     "--plot", str(png)]) == 0
        assert png.stat().st_size > 0


class TestFourDVarDemo:
    def layout_file(self, tmp_path, variant=VARIANT_ZERO):
        rng = np.random.default_rng(52)
        layout = instances.random_contractive_layout(rng, variant=variant,
                                                     sigma_max=0.4)
        path = tmp_path / "layout.txt"
        write_layout(path, layout)
        return path, layout

    def test_report_rows(self, tmp_path, capsys):
        path, _ = self.layout_file(tmp_path)
        out = tmp_path / "demo.csv"
        assert main(["fourdvar-demo", str(path), "--output", str(out)]) == 0
        _, rows = read_csv(out)
        assert [r["precond"] for r in rows] == ["none", "zero", "identity"]
        for row in rows[1:]:
            assert row["pcg_converged"] == "true"
            assert float(row["final_relative_residual"]) <= 1e-8
        assert "unpreconditioned PCG" in capsys.readouterr().out

    def test_variant_override(self, tmp_path, capsys):
        path, _ = self.layout_file(tmp_path, VARIANT_IDENTITY)
        assert main(["fourdvar-demo", str(path), "--variant", "zero"]) == 0

    def test_d_file_blocks(self, tmp_path, capsys):
        path, layout = self.layout_file(tmp_path)
        rng = np.random.default_rng(53)
        dfile = tmp_path / "d.txt"
        with open(dfile, "w") as fh:
            for _ in range(layout.n_sw + 1):
                block = instances.random_spd(rng, layout.n, cond=5.0).mat
                fh.write(f"{layout.n} {layout.n}\n")
                for row in block:
                    fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
        assert main(["fourdvar-demo", str(path), "--d-file", str(dfile)]) == 0

    def test_bad_layout(self, tmp_path, capsys):
        path = tmp_path / "bad.txt"
        path.write_text("1 2 zero\n1 1\n0.5\n")
        assert main(["fourdvar-demo", str(path)]) == 1
        assert "error" in capsys.readouterr().err

    def test_plot_file_created(self, tmp_path, capsys):
        path, _ = self.layout_file(tmp_path)
        png = tmp_path / "demo.png"
        assert main(["fourdvar-demo", str(path), "--plot", str(png)]) == 0
        assert png.stat().st_size > 0


class TestRandomSuite:
    def test_small_run_passes(self, tmp_path, capsys):
        out = tmp_path / "suite.csv"
        assert main(["random-suite", "--count", "40", "--output", str(out)]) == 0
        _, rows = read_csv(out)
        assert all(r["failed"] == "0" for r in rows)
        assert "worst containment slack" in capsys.readouterr().out

    def test_corrupted_radius_detected(self, capsys):
        # shrinking the predicted ball must trip the containment check
        assert main(["random-suite", "--count", "40",
                     "--radius-scale", "0.5"]) == 2
        assert "FAIL" in capsys.readouterr().out

    def test_bad_count(self, capsys):
        assert main(["random-suite", "--count", "0"]) == 1
