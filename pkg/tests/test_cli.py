import json

import pytest

from autopeering.cli import main
from autopeering.graph import Graph


@pytest.fixture(autouse=True)
def _cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("AUTOPEERING_OUT", raising=False)


def test_gen_writes_edge_list_and_node_table(tmp_path, capsys):
    rc = main("gen --model autopeering --n 100 --s 1.0 --rho 4 --r 10 --k 4 --seed 42 --out g.txt".split())
    assert rc == 0
    g = Graph.from_edgelist((tmp_path / "g.txt").read_text())
    assert g.n == 100 and max(g.degrees().values()) <= 8
    table = (tmp_path / "g.txt.nodes.csv").read_text().splitlines()
    assert table[0] == "rank,mana" and table[1] == "1,10000000000.0" and len(table) == 101
    assert "components=1" in capsys.readouterr().out


def test_gen_ws_to_stdout(capsys):
    assert main("gen --model ws --n 100 --k 4 --rewire-p 1.0 --seed 7".split()) == 0
    assert capsys.readouterr().out.startswith("# n=100\n")


def test_gen_rejects_small_n(capsys):
    assert main("gen --n 5 --k 4".split()) == 2
    assert "usage" in capsys.readouterr().err


def test_unwritable_output_is_runtime_error():
    assert main("gen --out /nonexistent/dir/g.txt".split()) == 1


def test_bad_flag_exits_with_usage():
    with pytest.raises(SystemExit) as exc:
        main("attack --strategy random".split())
    assert exc.value.code == 2


def test_attack_on_stored_graph(tmp_path, capsys):
    main("gen --seed 42 --out g.txt".split())
    capsys.readouterr()
    assert main("attack --strategy greedy --in g.txt --s 1.0 --out o.json".split()) == 0
    rec = json.loads((tmp_path / "o.json").read_text())
    assert rec["strategy"] == "greedy" and isinstance(rec["target"], int)


def test_attack_blind(capsys):
    assert main("attack --strategy blind --target 12 --range-l 7 --seed 1".split()) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["cost"] == pytest.approx(0.2336006470981442)
    assert main("attack --strategy blind --seed 1".split()) == 2


def test_attack_betweenness_on_split_graph(tmp_path, capsys):
    (tmp_path / "two.txt").write_text("# n=4\n1 2\n3 4\n")
    assert main("attack --strategy betweenness --in two.txt".split()) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["success"] and rec["cut"] == [] and rec["cost"] == 0.0


def _data(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "manifest.json"}


def test_sweep_is_reproducible_and_replays_from_manifest(tmp_path):
    args = "sweep --s-grid 0.9,1.1 --runs 3 --baseline ws --master-seed 1".split()
    assert main(args + ["--out", "a"]) == 0
    assert main(args + ["--out", "b"]) == 0
    assert _data(tmp_path / "a") == _data(tmp_path / "b")
    assert main(["sweep", "--config", "a/manifest.json", "--out", "c"]) == 0
    assert _data(tmp_path / "c") == _data(tmp_path / "a")
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["config"]["s_grid"] == [0.9, 1.1] and "version" in man
    assert set(man["files"]) == {"runs", "aggregate", "points"}


def test_flags_override_config_file(tmp_path):
    (tmp_path / "cfg.yaml").write_text("runs: 2\nmaster_seed: 5\nstrategies: [greedy]\n")
    assert main("sweep --config cfg.yaml --runs 3 --out o".split()) == 0
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["config"]["runs"] == 3 and man["config"]["master_seed"] == 5
    assert len((tmp_path / "o" / "runs.csv").read_text().splitlines()) == 4


def test_config_errors_exit_2(tmp_path):
    (tmp_path / "bad.yaml").write_text("colour: red\n")
    assert main("sweep --config bad.yaml".split()) == 2
    assert main("sweep --config missing.yaml".split()) == 2
    assert main("sweep --runs 0".split()) == 2
    assert main("sweep --figure fig3".split()) == 2


def test_env_sets_default_output(tmp_path, monkeypatch):
    monkeypatch.setenv("AUTOPEERING_OUT", str(tmp_path / "envout"))
    assert main("sweep --runs 1 --strategies greedy".split()) == 0
    assert (tmp_path / "envout" / "aggregate.csv").exists()


def test_json_format(tmp_path):
    assert main("sweep --runs 2 --strategies greedy --format json --out j".split()) == 0
    rows = json.loads((tmp_path / "j" / "aggregate.json").read_text())
    assert rows[0]["strategy"] == "greedy" and rows[0]["runs"] == "2"


def test_blind_figure_preset(tmp_path):
    assert main("blind --figure fig3 --runs 2 --l-grid 6..8 --out b".split()) == 0
    agg = (tmp_path / "b" / "aggregate.csv").read_text()
    for label in ("bb", "bg", "lattice:12", "ws:12"):
        assert f",{label}," in agg


def test_freq_presets(tmp_path, capsys):
    assert main("freq --figure figA2 --runs 3 --out f".split()) == 0
    hist = (tmp_path / "f" / "freq_greedy.csv").read_text().splitlines()
    assert hist[0] == "rank,count" and len(hist) == 101
    assert main("freq --figure figA1 --runs 2 --out p".split()) == 0
    assert (tmp_path / "p" / "greedy_profile.csv").exists()


def test_minl_and_heatmap(tmp_path):
    assert main("minl --target 12 --runs 3 --out m".split()) == 0
    assert (tmp_path / "m" / "min_l.csv").read_text().startswith("n,r,s,rho,target,min_l\n")
    assert main("heatmap --s-grid 1.0 --rho-grid 2,4 --metrics efficiency,min_l --runs 2 --out h".split()) == 0
    lines = (tmp_path / "h" / "heatmap.csv").read_text().splitlines()
    assert lines[0] == "n,r,s,rho,metric,strategy,value"
    assert len(lines) == 1 + 2 * 2 * 2
    assert main("heatmap --metrics bogus --runs 1".split()) == 2
