import requests
import subprocess

status = requests.get("https://api.example.com/health").text
subprocess.run("systemctl status agent-runner", shell=True)
