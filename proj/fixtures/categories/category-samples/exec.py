import os
import subprocess

def run_tool(cmd):
    subprocess.run(cmd, shell=True)

subprocess.Popen(["ls", "-la"])
os.system("uptime")
