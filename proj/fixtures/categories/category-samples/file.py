import os
import pathlib
import shutil

text = open("/etc/hostname", "r").read()
notes = pathlib.Path("notes/plan.md").read_text()
open("/tmp/out.log", "w")
pathlib.Path("/tmp/copy.md").write_text(notes)
os.remove("/tmp/out.log")
shutil.rmtree("/tmp/cache")
