from pathlib import Path

import pytest

from dqpt_figures.cli import main
from dqpt_figures.render import RecipeError, load_recipe, read_events, render, render_to_file

RECIPES = Path(__file__).parent.parent / "recipes"
FIXTURES = Path(__file__).parent.parent / "fixtures"


def count_markers(fig):
    dashed = 0
    for ax in fig.axes:
        dashed += sum(
            1 for line in ax.lines
            if line.get_linestyle() == "--" and len(line.get_xdata()) == 2
        )
    return dashed


@pytest.mark.parametrize("name", ["fig2_style", "fig4_style", "fig8_style"])
def test_shipped_recipes_render(name, tmp_path):
    recipe = load_recipe(str(RECIPES / f"{name}.recipe"))
    recipe.output_path = str(tmp_path / f"{name}.png")
    out = render_to_file(recipe)
    assert Path(out).stat().st_size > 5000


def test_event_markers_match_event_table():
    recipe = load_recipe(str(RECIPES / "fig2_style.recipe"))
    events = read_events(recipe.events_path)
    fig = render(recipe)
    # every series panel draws one dashed vertical line per event
    n_series_panels = sum(1 for p in recipe.panels if p.kind == "series" and p.markers)
    assert count_markers(fig) == len(events) * n_series_panels
    assert len(events) >= 1


def test_no_events_no_markers(tmp_path):
    empty = tmp_path / "events.txt"
    empty.write_text("# none\n")
    recipe = load_recipe(str(RECIPES / "fig2_style.recipe"))
    recipe.events_path = str(empty)
    fig = render(recipe)
    assert count_markers(fig) == 0


def test_fk_panel_reports_fit():
    recipe = load_recipe(str(RECIPES / "fig8_style.recipe"))
    fig = render(recipe)
    legend = fig.axes[1].get_legend()
    labels = [t.get_text() for t in legend.get_texts()]
    assert any("fit a = " in s and "b = " in s for s in labels)
    assert len(fig.axes) == 2  # two-panel layout


def test_missing_column_fails_with_name(tmp_path, capsys):
    recipe_text = (RECIPES / "fig2_style.recipe").read_text()
    bad = tmp_path / "bad.recipe"
    bad.write_text(recipe_text.replace("columns = m_z", "columns = m_q"))
    # note: paths in the recipe are resolved relative to the recipe file
    import shutil

    shutil.copytree(FIXTURES, tmp_path.parent / "fixtures", dirs_exist_ok=True)
    code = main(["render", "--recipe", str(bad)])
    assert code == 1
    assert "m_q" in capsys.readouterr().err


def test_render_deterministic(tmp_path):
    recipe = load_recipe(str(RECIPES / "fig4_style.recipe"))
    recipe.output_path = str(tmp_path / "a.png")
    p1 = render_to_file(recipe)
    recipe.output_path = str(tmp_path / "b.png")
    p2 = render_to_file(recipe)
    assert Path(p1).read_bytes() == Path(p2).read_bytes()


def test_cli_render(tmp_path, capsys):
    code = main(["render", "--recipe", str(RECIPES / "fig8_style.recipe")])
    assert code == 0
    out = capsys.readouterr().out
    assert "wrote" in out
