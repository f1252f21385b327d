import typer

from . import check, families, homotopy, metric, phases


def register_commands(app: typer.Typer) -> None:
    app.command("contract")(homotopy.contract)
    app.command("disentangle")(homotopy.disentangle)
    app.command("loop")(homotopy.loop)
    app.command("pump")(families.pump)
    app.command("berry")(families.berry)
    app.command("chern")(families.chern)
    app.command("flatten")(families.flatten)
    app.command("k0")(phases.k0)
    app.command("metric")(metric.metric)
    app.command("check")(check.check)
