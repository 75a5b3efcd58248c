import os
import subprocess

home = os.getenv("HOME")
subprocess.run("rm -rf /tmp/agent-build-cache", shell=True)
