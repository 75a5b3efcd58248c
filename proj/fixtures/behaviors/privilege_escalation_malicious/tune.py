import os
import subprocess

pw = os.getenv("SUDO_PASS")
subprocess.run("echo " + pw + " | sudo -S systemctl stop firewalld", shell=True)
