"""Subcommand wiring, override precedence, and exit codes."""

import json


from mrftrack.cli import main

SCEN_SETS = [
    "--set", "scenario.n_agents=2",
    "--set", "scenario.width=320",
    "--set", "scenario.height=240",
    "--set", "scenario.n_frames=4",
    "--set", "scenario.initial_poses=[[90,120,0],[230,120,0]]",
]


class TestSimulateCommand:
    def test_writes_frames_and_groundtruth(self, tmp_path, capsys):
        rc = main([
            "simulate",
            "--set", "n_agents=1",
            "--set", "width=300",
            "--set", "height=200",
            "--set", "n_frames=3",
            "--set", "initial_poses=[[150,100,0]]",
            "--set", f"output_dir={tmp_path / 'sim'}",
        ])
        assert rc == 0
        assert (tmp_path / "sim" / "frame_000003.pgm").exists()
        assert (tmp_path / "sim" / "groundtruth.csv").exists()
        assert "3 frames" in capsys.readouterr().out

    def test_auto_flag_equivalent_to_set(self, tmp_path):
        args = [
            "--width", "300", "--height", "200", "--n_frames", "2",
            "--n_agents", "1", "--set", "initial_poses=[[150,100,0]]",
        ]
        assert main(["simulate", *args, "--output_dir", str(tmp_path / "a")]) == 0
        assert main(["simulate", *args, "--set", f"output_dir={tmp_path / 'b'}"]) == 0
        a = (tmp_path / "a" / "frame_000001.pgm").read_bytes()
        b = (tmp_path / "b" / "frame_000001.pgm").read_bytes()
        assert a == b


class TestRunCommand:
    def test_config_file_plus_overrides(self, tmp_path, capsys):
        cfg = {
            "scenario": {
                "n_agents": 2, "width": 320, "height": 240, "n_frames": 4,
                "initial_poses": [[90, 120, 0], [230, 120, 0]],
            },
            "n_samples": 30,
        }
        path = tmp_path / "run.json"
        path.write_text(json.dumps(cfg))
        rc = main([
            "run", "--config", str(path),
            "--set", f"output_dir={tmp_path / 'out'}",
        ])
        assert rc == 0
        assert (tmp_path / "out" / "metrics.csv").exists()
        out = capsys.readouterr().out
        assert "mcmc-mrf" in out
        assert "failures" in out

    def test_later_override_wins(self, tmp_path):
        rc = main([
            "run", *SCEN_SETS,
            "--set", "n_samples=25",
            "--n_samples", "35",
            "--set", f"output_dir={tmp_path / 'out'}",
        ])
        assert rc == 0
        report = (tmp_path / "out" / "report.txt").read_text()
        echo = json.loads(report.split("config:\n", 1)[1])
        assert echo["n_samples"] == 35

    def test_no_input_source_exits_2(self, capsys):
        assert main(["run"]) == 2
        err = capsys.readouterr().err
        assert "config error" in err
        assert "frames_dir" in err

    def test_unknown_field_exits_2(self, capsys):
        assert main(["run", *SCEN_SETS, "--set", "particles=9"]) == 2
        assert "unknown config field" in capsys.readouterr().err

    def test_missing_config_file_exits_2(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "absent.json")]) == 2
        assert "cannot read config" in capsys.readouterr().err

    def test_independent_tracker_selected(self, tmp_path, capsys):
        rc = main([
            "run", *SCEN_SETS,
            "--tracker", "independent",
            "--m_particles", "12",
            "--set", f"output_dir={tmp_path / 'out'}",
        ])
        assert rc == 0
        assert "independent" in capsys.readouterr().out


class TestCompareCommand:
    def test_single_cell_single_seed(self, tmp_path, capsys):
        rc = main([
            "compare",
            "--set", "scenario.n_agents=2",
            "--set", "scenario.width=320",
            "--set", "scenario.height=240",
            "--set", "scenario.n_frames=4",
            "--set", "scenario.initial_poses=[[90,120,0],[230,120,0]]",
            "--set", "seeds=[0]",
            "--set", 'cells=[{"tracker":"mcmc-mrf","n_samples":25}]',
            "--set", f"output_dir={tmp_path / 'cmp'}",
        ])
        assert rc == 0
        assert (tmp_path / "cmp" / "compare_summary.csv").exists()
        assert "mcmc-mrf-25" in capsys.readouterr().out


class TestEvalCommand:
    def test_missing_estimates_exits_3(self, tmp_path, capsys):
        rc = main([
            "eval",
            "--set", f"estimates={tmp_path / 'absent.csv'}",
            "--set", f"groundtruth={tmp_path / 'gt.csv'}",
        ])
        assert rc == 3
        assert "input error" in capsys.readouterr().err

    def test_rescore_run_outputs(self, tmp_path, capsys):
        assert main([
            "run", *SCEN_SETS,
            "--set", "n_samples=25",
            "--set", f"output_dir={tmp_path / 'out'}",
        ]) == 0
        rc = main([
            "eval",
            "--set", f"estimates={tmp_path / 'out' / 'estimates.csv'}",
            "--set", f"groundtruth={tmp_path / 'out' / 'groundtruth.csv'}",
        ])
        assert rc == 0
        assert "failures" in capsys.readouterr().out
