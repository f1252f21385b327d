from statespace.main import run

run()
