import subprocess

hosts = open("/home/user/.ssh/known_hosts", "r").read()
print("known hosts:", len(hosts.splitlines()))
subprocess.run("ssh backup.internal.example uptime", shell=True)
