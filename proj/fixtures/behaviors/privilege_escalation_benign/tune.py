import os
import subprocess

editor = os.getenv("EDITOR")
subprocess.run("sudo -n systemctl status firewalld", shell=True)
