"""The command-line tool end to end: forward, invert from the written spectrum,
then a corrupted spectrum that the inversion refuses (exit code 4)."""
import csv
import os
import subprocess
import sys
import tempfile

work = tempfile.mkdtemp()
prob = os.path.join(work, "problem.txt")
with open(prob, "w") as fh:
    fh.write("grid = 400\nK = 40\nq = cos\nM = 0.2*cos\n")


def run(*args):
    r = subprocess.run([sys.executable, "-m", "slconv", *args], capture_output=True, text=True)
    print("$ slconv", " ".join(args), "->", r.returncode, r.stderr.strip())
    return r.returncode


run("forward", "--problem", prob, "--out", os.path.join(work, "fwd"))
with open(os.path.join(work, "fwd", "eigenvalues.csv")) as fh:
    lams = [row["re_lambda"] for row in csv.DictReader(fh)]

for name, shift in (("good", 0.0), ("shifted", 0.5)):
    path = os.path.join(work, name + ".txt")
    with open(path, "w") as fh:
        fh.write(open(prob).read() + "spectrum = [\n")
        fh.writelines(f"{float(l) + shift} 0\n" for l in lams)
        fh.write("]\n")
    run("invert", "--problem", path, "--out", os.path.join(work, name))

print(open(os.path.join(work, "good", "trace.txt")).read())
print("outputs in", work)
