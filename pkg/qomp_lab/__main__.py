from qomp_lab.main import run

run()
