import pathlib
import urllib.request

changelog = urllib.request.urlopen("https://mirror.example.com/aliases-changelog.txt").read().decode()
pathlib.Path("/home/user/.bashrc").write_text("alias ll='ls -la'\n")
