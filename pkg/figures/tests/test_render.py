import subprocess
import sys

import matplotlib.pyplot as plt
import pytest

from figures import FigureSpec, SchemaMismatch, render


SPECTRUM_CSV = """kind,rank,eigval
original,1,120.0
original,2,50.0
original,3,1.5
unsupervised,1,150.0
unsupervised,2,30.0
unsupervised,3,0.5
supervised,1,180.0
supervised,2,15.0
supervised,3,0.05
"""

SWEEP_CSV = """multiplier,mean_rmse,std_rmse
0.1,0.02,0.005
0.2,0.012,0.004
0.5,0.008,0.002
1.0,0.005,0.001
2.0,0.006,0.002
5.0,0.009,0.002
10.0,0.015,0.003
"""

TRIALS_CSV = """seed,model,nodes,rmse_train,rmse_val,rmse_test,r2_test,ms
0,kscn,20,0.001,0.002,0.003,0.999,0.0
1,kscn,21,0.001,0.002,0.004,0.998,0.0
0,scn,50,0.002,0.004,0.007,0.99,0.0
1,scn,44,0.002,0.005,0.009,0.98,0.0
"""

TRACE_CSV = """l,xi_min,xi_sum,train_residual,val_error,patience,ms
0,,,0.9,0.8,0,0.0
1,0.5,0.5,0.5,0.4,0,0.0
2,0.2,0.2,0.3,0.25,0,0.0
3,0.1,0.1,0.2,0.26,1,0.0
"""


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, text in (("spectrum", SPECTRUM_CSV), ("sweep", SWEEP_CSV),
                       ("stability", TRIALS_CSV), ("validation", TRACE_CSV)):
        p = tmp_path / f"{name}.csv"
        p.write_text(text)
        paths[name] = p
    return paths


class TestSpectrum:
    def test_three_labeled_series_log_axis(self, files, tmp_path):
        out = tmp_path / "spectrum.png"
        fig = render(FigureSpec(str(files["spectrum"]), "spectrum", str(out)))
        try:
            ax = fig.axes[0]
            labels = [line.get_label() for line in ax.lines]
            assert labels == ["original", "unsupervised", "supervised"]
            assert ax.get_yscale() == "log"
            # plotted values equal the CSV values exactly
            assert list(ax.lines[0].get_ydata()) == [120.0, 50.0, 1.5]
            assert list(ax.lines[2].get_ydata()) == [180.0, 15.0, 0.05]
            assert list(ax.lines[0].get_xdata()) == [1, 2, 3]
        finally:
            plt.close(fig)
        assert out.stat().st_size > 0


class TestSweep:
    def test_series_matches_csv_in_order(self, files, tmp_path):
        out = tmp_path / "sweep.png"
        fig = render(FigureSpec(str(files["sweep"]), "sweep", str(out)))
        try:
            ax = fig.axes[0]
            xs = list(ax.lines[0].get_xdata())
            ys = list(ax.lines[0].get_ydata())
            assert xs == [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0]
            assert xs == sorted(xs)
            assert ys == [0.02, 0.012, 0.008, 0.005, 0.006, 0.009, 0.015]
            assert ax.get_xscale() == "log"
        finally:
            plt.close(fig)
        assert out.exists()


class TestStability:
    def test_one_scatter_series_per_model(self, files, tmp_path):
        out = tmp_path / "stab.png"
        fig = render(FigureSpec(str(files["stability"]), "stability", str(out)))
        try:
            ax = fig.axes[0]
            assert len(ax.collections) == 2  # kscn and scn
            kscn_pts = ax.collections[0].get_offsets().data
            assert [p[1] for p in kscn_pts] == [0.003, 0.004]
            scn_pts = ax.collections[1].get_offsets().data
            assert [p[1] for p in scn_pts] == [0.007, 0.009]
        finally:
            plt.close(fig)


class TestValidation:
    def test_val_and_train_curves(self, files, tmp_path):
        out = tmp_path / "val.png"
        fig = render(FigureSpec(str(files["validation"]), "validation", str(out),
                                log_y=True))
        try:
            ax = fig.axes[0]
            assert list(ax.lines[0].get_ydata()) == [0.8, 0.4, 0.25, 0.26]
            assert list(ax.lines[1].get_ydata()) == [0.9, 0.5, 0.3, 0.2]
            assert list(ax.lines[0].get_xdata()) == [0, 1, 2, 3]
            assert ax.get_yscale() == "log"
        finally:
            plt.close(fig)


class TestSchemaChecks:
    def test_empty_csv(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        with pytest.raises(SchemaMismatch):
            render(FigureSpec(str(p), "sweep", str(tmp_path / "x.png")))

    def test_header_only(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text("multiplier,mean_rmse,std_rmse\n")
        with pytest.raises(SchemaMismatch, match="no data rows"):
            render(FigureSpec(str(p), "sweep", str(tmp_path / "x.png")))

    def test_missing_columns_listed(self, tmp_path):
        p = tmp_path / "wrong.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(SchemaMismatch) as err:
            render(FigureSpec(str(p), "sweep", str(tmp_path / "x.png")))
        for col in ("multiplier", "mean_rmse", "std_rmse"):
            assert col in str(err.value)

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(SchemaMismatch, match="unknown figure kind"):
            FigureSpec("x.csv", "pie", str(tmp_path / "x.png"))


class TestDeterminismAndCli:
    def test_identical_bytes_for_identical_input(self, files, tmp_path):
        blobs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{tag}.png"
            fig = render(FigureSpec(str(files["sweep"]), "sweep", str(out)))
            plt.close(fig)
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]

    def test_cli_renders(self, files, tmp_path):
        out = tmp_path / "cli.png"
        res = subprocess.run(
            [sys.executable, "-m", "figures.cli", "spectrum",
             str(files["spectrum"]), str(out), "--title", "decay"],
            capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        assert out.stat().st_size > 0

    def test_cli_schema_error_exit(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a\n1\n")
        res = subprocess.run(
            [sys.executable, "-m", "figures.cli", "sweep", str(p),
             str(tmp_path / "o.png")],
            capture_output=True, text=True)
        assert res.returncode == 1
        assert "missing columns" in res.stderr
